use std::f64::consts::PI;
use std::sync::Arc;

use super::BiLipMap;
use crate::domain::Point;

/// Scalar profile with a known Lipschitz constant.
#[derive(Clone)]
pub struct Profile {
    pub name: String,
    pub lip: f64,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Profile {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, lip: f64, g: F) -> Self {
        Profile {
            name: name.into(),
            lip,
            g: Arc::new(g),
        }
    }

    pub fn linear() -> Self {
        Profile::new("linear", 1.0, |y| y)
    }

    /// `sin(2πy)/(2π)`: 1-Lipschitz and 1-periodic.
    pub fn sine() -> Self {
        Profile::new("sin", 1.0, |y| (2.0 * PI * y).sin() / (2.0 * PI))
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.g)(y)
    }
}

/// Largest singular value of `[[1, c], [0, 1]]`.
pub fn unit_shear_norm(c: f64) -> f64 {
    let c = c.abs();
    (c + (c * c + 4.0).sqrt()) / 2.0
}

pub fn identity(dim: usize) -> BiLipMap {
    BiLipMap::new("identity", dim, |p| *p, |p| *p).with_lip(1.0, 1.0)
}

pub fn translation(v: Point) -> BiLipMap {
    BiLipMap::new(
        format!("translation:dx={},dy={}", v[0], v[1]),
        2,
        move |p| [p[0] + v[0], p[1] + v[1], p[2] + v[2]],
        move |p| [p[0] - v[0], p[1] - v[1], p[2] - v[2]],
    )
    .with_lip(1.0, 1.0)
}

/// `(x, y) -> (x + λ g(y), y)`.
pub fn shear(lambda: f64, profile: Profile) -> BiLipMap {
    let lip = unit_shear_norm(lambda * profile.lip);
    let (g1, g2) = (profile.clone(), profile.clone());
    BiLipMap::new(
        format!("shear:lambda={lambda},profile={}", profile.name),
        2,
        move |p| [p[0] + lambda * g1.eval(p[1]), p[1], p[2]],
        move |p| [p[0] - lambda * g2.eval(p[1]), p[1], p[2]],
    )
    .with_lip(lip, lip)
}

/// `diag(e^t, e^-t)`.
pub fn linear_strain(t: f64) -> BiLipMap {
    let (a, b) = (t.exp(), (-t).exp());
    let lip = t.abs().exp();
    BiLipMap::new(
        format!("strain:t={t}"),
        2,
        move |p| [a * p[0], b * p[1], p[2]],
        move |p| [b * p[0], a * p[1], p[2]],
    )
    .with_lip(lip, lip)
}

/// Rotation by `theta` about `center`.
pub fn rotation(theta: f64, center: Point) -> BiLipMap {
    let (s, c) = theta.sin_cos();
    let rot = move |p: &Point, s: f64| {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        [center[0] + c * x - s * y, center[1] + s * x + c * y, p[2]]
    };
    BiLipMap::new(
        format!("rotation:theta={theta}"),
        2,
        move |p| rot(p, s),
        move |p| rot(p, -s),
    )
    .with_lip(1.0, 1.0)
    .with_sample_box(center, 1.0)
}

/// Rotation by `k` quarter turns about `center`, computed without rounding.
pub fn quarter_turn(k: i32, center: Point) -> BiLipMap {
    fn turn(p: &Point, k: i32, center: Point) -> Point {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        let (u, v) = match k.rem_euclid(4) {
            0 => (x, y),
            1 => (-y, x),
            2 => (-x, -y),
            _ => (y, -x),
        };
        [center[0] + u, center[1] + v, p[2]]
    }
    BiLipMap::new(
        format!("quarter:k={k}"),
        2,
        move |p| turn(p, k, center),
        move |p| turn(p, -k, center),
    )
    .with_lip(1.0, 1.0)
    .with_sample_box(center, 1.0)
}

/// Mirror image across the hyperplane `x_axis = center[axis]`.
pub fn reflection(axis: usize, center: Point) -> BiLipMap {
    let flip = move |p: &Point| {
        let mut q = *p;
        q[axis] = 2.0 * center[axis] - p[axis];
        q
    };
    BiLipMap::new(format!("reflection:axis={axis}"), 2, flip, flip)
        .with_lip(1.0, 1.0)
        .with_sample_box(center, 1.0)
}

/// `(r, θ) -> (r, θ + α(1 - r/R)_+)` about `center`. The recorded constant
/// is the exact sup of the Jacobian norm, `σ_max([[1, 0], [α, 1]])`.
pub fn twist(alpha: f64, radius: f64, center: Point) -> BiLipMap {
    let omega = move |r: f64| alpha * (1.0 - r / radius).max(0.0);
    let spin = move |p: &Point, sign: f64| {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        let r = x.hypot(y);
        let (s, c) = (sign * omega(r)).sin_cos();
        [center[0] + c * x - s * y, center[1] + s * x + c * y, p[2]]
    };
    // r |ω'(r)| = α r / R peaks at the rim.
    let lip = unit_shear_norm(alpha);
    BiLipMap::new(
        format!("twist:alpha={alpha},radius={radius}"),
        2,
        move |p| spin(p, 1.0),
        move |p| spin(p, -1.0),
    )
    .with_lip(lip, lip)
    .with_sample_box(center, 1.2 * radius)
}

/// `(x, y) -> (s x, y)`: bi-Lipschitz but not measure preserving.
pub fn scaling_control(s: f64) -> BiLipMap {
    BiLipMap::new(
        format!("scaling:s={s}"),
        2,
        move |p| [s * p[0], p[1], p[2]],
        move |p| [p[0] / s, p[1], p[2]],
    )
    .with_lip(s.max(1.0), (1.0 / s).max(1.0))
}
