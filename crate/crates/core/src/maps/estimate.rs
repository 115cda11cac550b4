use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linalg::{self, Mat};
use super::BiLipMap;
use crate::domain::{norm, Ball, Grid, Point};
use crate::error::{Error, Result};

/// Central-difference step `10 eps^{1/3} scale`, rounded to a power of two
/// so that dyadic sample points stay exact.
pub fn fd_step(scale: f64) -> f64 {
    let raw = 10.0 * f64::EPSILON.cbrt() * scale;
    2f64.powi(raw.log2().round() as i32)
}

/// Central differences at steps `h` and `h/2`, combined by one Richardson
/// step so the truncation error is fourth order.
pub fn jacobian<F: Fn(&Point) -> Point>(f: F, p: &Point, d: usize, h: f64) -> Mat {
    let central = |h: f64| {
        let mut m = [[0.0; 3]; 3];
        for j in 0..d {
            let (mut lo, mut hi) = (*p, *p);
            lo[j] -= h;
            hi[j] += h;
            let (a, b) = (f(&hi), f(&lo));
            for i in 0..d {
                m[i][j] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        m
    };
    let (coarse, fine) = (central(h), central(h / 2.0));
    let mut m = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            m[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    m
}

fn sample_points(map: &BiLipMap, samples: usize, rng: &mut ChaCha8Rng) -> Vec<(Point, Point)> {
    let d = map.dim;
    let half = map.sample_half;
    (0..samples)
        .map(|_| {
            let mut x = map.sample_center;
            for a in 0..d {
                x[a] += rng.gen_range(-half..half);
            }
            let mut u = [0.0; 3];
            loop {
                for a in 0..d {
                    u[a] = rng.gen_range(-1.0..1.0);
                }
                let r = norm(&u);
                if r > 1e-3 && r <= 1.0 {
                    for a in 0..d {
                        u[a] /= r;
                    }
                    break;
                }
            }
            let delta = half * 10f64.powf(-rng.gen_range(0.0..3.0));
            let mut y = x;
            for a in 0..d {
                y[a] += delta * u[a];
            }
            (x, y)
        })
        .collect()
}

fn lip_lower_bound<F>(f: F, pts: &[(Point, Point)], d: usize, h: f64) -> f64
where
    F: Fn(&Point) -> Point + Sync,
{
    pts.par_iter()
        .map(|(x, y)| {
            let (fx, fy) = (f(x), f(y));
            let mut num = [0.0; 3];
            let mut den = [0.0; 3];
            for a in 0..d {
                num[a] = fx[a] - fy[a];
                den[a] = x[a] - y[a];
            }
            let pair = norm(&num) / norm(&den);
            let jac = linalg::op_norm(&jacobian(&f, x, d, h), d);
            pair.max(jac)
        })
        .reduce(|| 0.0, f64::max)
}

/// Sampled lower bound of `Lip(φ) + Lip(φ⁻¹)` from point pairs and
/// finite-difference Jacobian norms; deterministic for a fixed seed.
pub fn estimate_k(map: &BiLipMap, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = fd_step(map.sample_half);
    let fwd_pts = sample_points(map, samples, &mut rng);
    let inv_pts = sample_points(map, samples, &mut rng);
    let d = map.dim;
    lip_lower_bound(|p| map.forward(p), &fwd_pts, d, h)
        + lip_lower_bound(|p| map.inverse(p), &inv_pts, d, h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport {
    pub max_det_deviation: f64,
    pub worst_point: Point,
    /// Relative difference between cell counts of `φ(B)` and `B` for the
    /// test ball.
    pub mass_error: f64,
    pub test_ball: Ball,
}

/// Finite-difference `det Dφ` at every cell center, plus a push-forward
/// cell count on a ball of a quarter of the window side centered in it.
pub fn check_measure_preserving(map: &BiLipMap, grid: &Grid) -> MeasureReport {
    let d = grid.dim();
    let h = fd_step(grid.window.side);
    let (dev, worst) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.center(i);
            let j = jacobian(|p| map.forward(p), &c, d, h);
            ((linalg::det(&j, d) - 1.0).abs(), i)
        })
        .reduce(
            || (0.0, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let worst_point = if worst == usize::MAX {
        grid.window.center()
    } else {
        grid.center(worst)
    };
    let test_ball = Ball::new(grid.window.center(), grid.window.side / 4.0);
    let r2 = test_ball.radius * test_ball.radius;
    let image_count = (0..grid.len())
        .into_par_iter()
        .filter(|&i| {
            let q = map.inverse(&grid.center(i));
            let off = grid.window.displacement(&test_ball.center, &q);
            off[0] * off[0] + off[1] * off[1] + off[2] * off[2] <= r2
        })
        .count();
    let base = grid.count_in_ball(&test_ball);
    MeasureReport {
        max_det_deviation: dev,
        worst_point,
        mass_error: (image_count as f64 - base as f64).abs() / base as f64,
        test_ball,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipInverseReport {
    /// Largest `‖Dφ⁻¹‖ / ‖Dφ‖^{d-1}` seen.
    pub max_ratio: f64,
    /// Largest relative gap between the two norms (meaningful in 2D).
    pub max_gap: f64,
    pub samples: usize,
}

/// Checks `‖Dφ(x)⁻¹‖ ≤ ‖Dφ(x)‖^{d-1}` pointwise, and equality in 2D.
pub fn check_lip_inverse_bound(map: &BiLipMap, samples: usize, seed: u64) -> Result<LipInverseReport> {
    let d = map.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = fd_step(map.sample_half);
    let pts: Vec<Point> = sample_points(map, samples, &mut rng)
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let mut report = LipInverseReport {
        max_ratio: 0.0,
        max_gap: 0.0,
        samples,
    };
    for x in &pts {
        let j = jacobian(|p| map.forward(p), x, d, h);
        let fwd = linalg::op_norm(&j, d);
        let inv = linalg::op_norm(&linalg::inverse(&j, d), d);
        let bound = fwd.powi(d as i32 - 1);
        let ratio = inv / bound;
        let gap = (inv - fwd).abs() / fwd;
        report.max_ratio = report.max_ratio.max(ratio);
        report.max_gap = report.max_gap.max(gap);
        if ratio > 1.0 + 1e-6 || (d == 2 && gap > 1e-8) {
            return Err(Error::ViolatedBound {
                witness: *x,
                detail: format!("|Dφ^-1| = {inv}, |Dφ| = {fwd}"),
            });
        }
    }
    Ok(report)
}
