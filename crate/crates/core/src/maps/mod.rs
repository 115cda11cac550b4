//! Measure-preserving bi-Lipschitz maps, flows of divergence-free fields and
//! numerical checks on them.

mod estimate;
mod flow;
mod linalg;
mod parse;
mod zoo;

use std::fmt;
use std::sync::Arc;

use crate::domain::Point;

pub use estimate::{
    check_lip_inverse_bound, check_measure_preserving, estimate_k, fd_step, jacobian,
    LipInverseReport, MeasureReport,
};
pub use flow::{integrate_flow, integrate_point, FlowMap, VectorField};
pub use linalg::{det, op_norm, Mat};
pub use parse::{parse_field, parse_map};
pub use zoo::{
    identity, linear_strain, quarter_turn, reflection, rotation, scaling_control, shear,
    translation, twist, Profile,
};

pub type PointFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A bi-Lipschitz map with its inverse and, when known, analytic Lipschitz
/// constants.
#[derive(Clone)]
pub struct BiLipMap {
    pub name: String,
    pub dim: usize,
    forward: PointFn,
    inverse: PointFn,
    pub lip_forward: Option<f64>,
    pub lip_inverse: Option<f64>,
    /// Center and half-width of the box that estimators sample from.
    pub sample_center: Point,
    pub sample_half: f64,
}

impl fmt::Debug for BiLipMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BiLipMap")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lip_forward", &self.lip_forward)
            .field("lip_inverse", &self.lip_inverse)
            .finish()
    }
}

impl BiLipMap {
    pub fn new<F, G>(name: impl Into<String>, dim: usize, forward: F, inverse: G) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
        G: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        BiLipMap {
            name: name.into(),
            dim,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            lip_forward: None,
            lip_inverse: None,
            sample_center: [0.0; 3],
            sample_half: 1.0,
        }
    }

    pub fn with_lip(mut self, forward: f64, inverse: f64) -> Self {
        self.lip_forward = Some(forward);
        self.lip_inverse = Some(inverse);
        self
    }

    pub fn with_sample_box(mut self, center: Point, half: f64) -> Self {
        self.sample_center = center;
        self.sample_half = half;
        self
    }

    pub fn forward(&self, p: &Point) -> Point {
        (self.forward)(p)
    }

    pub fn inverse(&self, p: &Point) -> Point {
        (self.inverse)(p)
    }

    /// `Lip(φ) + Lip(φ⁻¹)` when both constants are known.
    pub fn k_analytic(&self) -> Option<f64> {
        Some(self.lip_forward? + self.lip_inverse?)
    }

    pub fn inverted(&self) -> BiLipMap {
        BiLipMap {
            name: format!("inv({})", self.name),
            dim: self.dim,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            lip_forward: self.lip_inverse,
            lip_inverse: self.lip_forward,
            sample_center: self.sample_center,
            sample_half: self.sample_half,
        }
    }

    /// `self ∘ inner`; Lipschitz constants multiply.
    pub fn after(&self, inner: &BiLipMap) -> BiLipMap {
        let (f1, f2) = (self.forward.clone(), inner.forward.clone());
        let (g1, g2) = (self.inverse.clone(), inner.inverse.clone());
        let mul = |a: Option<f64>, b: Option<f64>| Some(a? * b?);
        BiLipMap {
            name: format!("{}*{}", self.name, inner.name),
            dim: self.dim,
            forward: Arc::new(move |p| f1(&f2(p))),
            inverse: Arc::new(move |p| g2(&g1(p))),
            lip_forward: mul(self.lip_forward, inner.lip_forward),
            lip_inverse: mul(self.lip_inverse, inner.lip_inverse),
            sample_center: inner.sample_center,
            sample_half: inner.sample_half,
        }
    }
}
