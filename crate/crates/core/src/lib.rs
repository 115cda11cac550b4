//! Numerical experiments on composition estimates for measure-preserving
//! bi-Lipschitz maps: BMO and Hölder-type seminorms, Whitney covers of map
//! images, Carleson measures and transport equations.

pub mod carleson;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod maps;
pub mod oscillation;
pub mod report;
pub mod spectral;
pub mod sweep;
pub mod transport;
pub mod whitney;

pub use domain::{Ball, BallFamily, Grid, GridFunction, PixelMask, Point, Window};
pub use error::{Error, Result, SpecError};
pub use maps::{BiLipMap, VectorField};
