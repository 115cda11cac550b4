//! Grids, balls, sampled functions, masks and distance transforms.

mod function;
mod grid;
pub mod io;
mod mask;

pub use function::{ball_average, ball_family, ball_oscillation, dyadic_radii, BallFamily, GridFunction};
pub(crate) use function::oscillation_of;
pub use grid::{norm, unit_ball_volume, Ball, Grid, Point, Window};
pub use mask::{distance_transform, DistanceField, PixelMask};
