use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BiLipMap, PointFn};
use crate::domain::Point;
use crate::error::{Error, Result};

/// A velocity field with an analytic Lipschitz constant.
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    pub dim: usize,
    pub lip: f64,
    pub divergence_free: bool,
    /// Fields that are 1-periodic in every coordinate.
    pub periodic: bool,
    eval: PointFn,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("lip", &self.lip)
            .field("divergence_free", &self.divergence_free)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(name: impl Into<String>, dim: usize, lip: f64, divergence_free: bool, f: F) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        VectorField {
            name: name.into(),
            dim,
            lip,
            divergence_free,
            periodic: false,
            eval: Arc::new(f),
        }
    }

    pub fn eval(&self, p: &Point) -> Point {
        (self.eval)(p)
    }

    pub fn negated(&self) -> VectorField {
        let f = self.eval.clone();
        VectorField {
            name: format!("-{}", self.name),
            eval: Arc::new(move |p| {
                let v = f(p);
                [-v[0], -v[1], -v[2]]
            }),
            ..self.clone()
        }
    }

    pub fn constant(v: Point) -> Self {
        let mut f = VectorField::new(
            format!("constant:vx={},vy={}", v[0], v[1]),
            2,
            0.0,
            true,
            move |_| v,
        );
        f.periodic = true;
        f
    }

    /// `v(x, y) = (x, -y)`, the generator of the linear strain.
    pub fn strain() -> Self {
        VectorField::new("strain", 2, 1.0, true, |p| [p[0], -p[1], 0.0])
    }

    /// `A ∇⊥ψ` for `ψ = sin(2πx) sin(2πy) / (2π)`; Lipschitz constant `2πA`.
    pub fn cellular(amp: f64) -> Self {
        let mut f = VectorField::new(
            format!("cellular:amp={amp}"),
            2,
            2.0 * PI * amp.abs(),
            true,
            move |p| {
                let (sx, cx) = (2.0 * PI * p[0]).sin_cos();
                let (sy, cy) = (2.0 * PI * p[1]).sin_cos();
                [-amp * sx * cy, amp * cx * sy, 0.0]
            },
        );
        f.periodic = true;
        f
    }

    /// Cellular field scaled so that its Lipschitz constant is `lip`.
    pub fn cellular_with_lip(lip: f64) -> Self {
        VectorField::cellular(lip / (2.0 * PI))
    }

    /// Largest central-difference divergence over random points in
    /// `center ± half`.
    pub fn max_divergence(&self, samples: usize, seed: u64, center: Point, half: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = super::estimate::fd_step(half);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let mut p = center;
            for a in 0..self.dim {
                p[a] += rng.gen_range(-half..half);
            }
            let mut div = 0.0;
            for a in 0..self.dim {
                let (mut lo, mut hi) = (p, p);
                lo[a] -= h;
                hi[a] += h;
                div += (self.eval(&hi)[a] - self.eval(&lo)[a]) / (2.0 * h);
            }
            worst = worst.max(div.abs());
        }
        worst
    }
}

/// Classical RK4 from `p` over time `t` (negative times run backwards) with
/// `ceil(|t| / step)` equal steps.
pub fn integrate_point(v: &VectorField, p: &Point, t: f64, step: f64) -> Point {
    if t == 0.0 {
        return *p;
    }
    let m = (t.abs() / step).ceil().max(1.0) as usize;
    let dt = t / m as f64;
    let mut x = *p;
    let d = v.dim;
    for _ in 0..m {
        let k1 = v.eval(&x);
        let mut y = x;
        for a in 0..d {
            y[a] = x[a] + 0.5 * dt * k1[a];
        }
        let k2 = v.eval(&y);
        for a in 0..d {
            y[a] = x[a] + 0.5 * dt * k2[a];
        }
        let k3 = v.eval(&y);
        for a in 0..d {
            y[a] = x[a] + dt * k3[a];
        }
        let k4 = v.eval(&y);
        for a in 0..d {
            x[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
    }
    x
}

/// Time-`t` flow of a field, realized as a map whose inverse integrates the
/// negated field.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub field: VectorField,
    pub time: f64,
    pub step: f64,
    pub map: BiLipMap,
}

impl FlowMap {
    /// Gronwall bound `e^{L t}` on either Lipschitz constant.
    pub fn gronwall_lip(&self) -> f64 {
        (self.field.lip * self.time).exp()
    }
}

pub fn integrate_flow(v: &VectorField, t: f64, step: f64) -> Result<FlowMap> {
    let product = step * v.lip;
    if !(step > 0.0) || product > 0.5 {
        return Err(Error::StepTooLarge {
            step,
            lip: v.lip,
            product,
        });
    }
    let (fwd, bwd) = (v.clone(), v.clone());
    let map = BiLipMap::new(
        format!("flow:{},t={t},step={step}", v.name),
        v.dim,
        move |p| integrate_point(&fwd, p, t, step),
        move |p| integrate_point(&bwd, p, -t, step),
    );
    let map = if v.periodic {
        map.with_sample_box([0.5; 3], 0.5)
    } else {
        map
    };
    Ok(FlowMap {
        field: v.clone(),
        time: t,
        step,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::linear_strain;

    #[test]
    fn constant_field_translates() {
        let f = integrate_flow(&VectorField::constant([1.0, 0.0, 0.0]), 0.25, 0.01).unwrap();
        let q = f.map.forward(&[0.5, 0.5, 0.0]);
        assert!((q[0] - 0.75).abs() < 1e-14 && q[1] == 0.5);
    }

    #[test]
    fn strain_flow_matches_closed_form() {
        let f = integrate_flow(&VectorField::strain(), 1.0, 0.001).unwrap();
        let s = linear_strain(1.0);
        for p in [[0.3, -0.4, 0.0], [0.9, 0.9, 0.0]] {
            let (a, b) = (f.map.forward(&p), s.forward(&p));
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn step_guard() {
        let v = VectorField::cellular(1.0);
        assert!(matches!(
            integrate_flow(&v, 1.0, 0.1),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn cellular_is_divergence_free() {
        let v = VectorField::cellular(1.0 / PI);
        assert!(v.max_divergence(1000, 3, [0.5; 3], 0.5) < 1e-8);
    }
}
