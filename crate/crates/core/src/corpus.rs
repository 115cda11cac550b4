//! Test functions: unbounded BMO examples, Hölder and Lipschitz profiles,
//! smooth random trigonometric polynomials and bumps.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{norm, Grid, GridFunction, Point};
use crate::error::{Result, SpecError};

/// A function that can be evaluated anywhere, used where composing sampled
/// data would need values outside the sampled window.
pub trait ScalarField: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, p: &Point) -> Result<f64>;
}

impl ScalarField for GridFunction {
    fn name(&self) -> String {
        format!("grid{}", self.grid().n)
    }

    fn eval(&self, p: &Point) -> Result<f64> {
        self.interpolate(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `log max(|x - c|, floor)`.
    LogRadial { center: Point, floor: f64 },
    /// Log of the distance to the half-line `{s e_axis : s <= 0}`, floored.
    Slit { axis: usize, floor: f64 },
    /// `|x_axis|^a`.
    Holder { a: f64, axis: usize },
    /// 1-Lipschitz triangle wave in `x_0` with the given period.
    Sawtooth { period: f64 },
    /// Random trigonometric polynomial on the unit torus with frequencies
    /// up to `modes` per axis.
    Trig { seed: u64, modes: usize, coeffs: Vec<(i32, i32, f64, f64)> },
    /// Smoothed indicator of a ball.
    Bump { center: Point, radius: f64, width: f64 },
    /// `½ log(sin²πx + sin²πy)`, floored: a periodic log singularity.
    PeriodicLog { floor: f64 },
    /// `±1` on square blocks of side `block`; random signs when seeded.
    Checker { block: f64, seed: Option<u64> },
    Constant(f64),
}

impl Builtin {
    pub fn log_radial(floor: f64) -> Self {
        Builtin::LogRadial {
            center: [0.0; 3],
            floor,
        }
    }

    pub fn trig(seed: u64, modes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = modes as i32;
        let mut coeffs = Vec::new();
        for kx in -m..=m {
            for ky in 0..=m {
                if ky == 0 && kx <= 0 {
                    continue;
                }
                let damp = 1.0 / (1.0 + (kx * kx + ky * ky) as f64);
                let a = rng.gen_range(-1.0..1.0) * damp;
                let b = rng.gen_range(-1.0..1.0) * damp;
                coeffs.push((kx, ky, a, b));
            }
        }
        Builtin::Trig {
            seed,
            modes,
            coeffs,
        }
    }

    /// Whether the function is 1-periodic in each coordinate.
    pub fn is_periodic(&self) -> bool {
        match self {
            Builtin::Trig { .. } | Builtin::PeriodicLog { .. } | Builtin::Constant(_) => true,
            Builtin::Sawtooth { period } => (1.0 / period).fract() == 0.0,
            Builtin::Checker { block, seed } => seed.is_none() && (0.5 / block).fract() == 0.0,
            _ => false,
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        match self {
            Builtin::LogRadial { center, floor } => {
                let r = norm(&[p[0] - center[0], p[1] - center[1], p[2] - center[2]]);
                r.max(*floor).ln()
            }
            Builtin::Slit { axis, floor } => {
                let other = 1 - axis;
                let d = if p[*axis] <= 0.0 {
                    p[other].abs()
                } else {
                    p[0].hypot(p[1])
                };
                d.max(*floor).ln()
            }
            Builtin::Holder { a, axis } => p[*axis].abs().powf(*a),
            Builtin::Sawtooth { period } => {
                let s = p[0] / period;
                (s - s.round()).abs() * period
            }
            Builtin::Trig { coeffs, .. } => coeffs
                .iter()
                .map(|&(kx, ky, a, b)| {
                    let ph = 2.0 * PI * (kx as f64 * p[0] + ky as f64 * p[1]);
                    a * ph.cos() + b * ph.sin()
                })
                .sum(),
            Builtin::Bump {
                center,
                radius,
                width,
            } => {
                let r = (p[0] - center[0]).hypot(p[1] - center[1]);
                0.5 * (1.0 - ((r - radius) / width).tanh())
            }
            Builtin::PeriodicLog { floor } => {
                let s = (PI * p[0]).sin().powi(2) + (PI * p[1]).sin().powi(2);
                0.5 * s.max((PI * floor).powi(2)).ln()
            }
            Builtin::Checker { block, seed } => {
                let i = (p[0] / block).floor() as i64;
                let j = (p[1] / block).floor() as i64;
                match seed {
                    None => {
                        if (i + j).rem_euclid(2) == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Some(s) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(
                            s ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                                ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
                        );
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                }
            }
            Builtin::Constant(c) => *c,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| self.value(&grid.center(i)))
            .collect();
        GridFunction::new(*grid, values)
    }
}

impl ScalarField for Builtin {
    fn name(&self) -> String {
        match self {
            Builtin::LogRadial { .. } => "log".into(),
            Builtin::Slit { axis, .. } => format!("slit:axis={axis}"),
            Builtin::Holder { a, axis } => format!("holder:a={a},axis={axis}"),
            Builtin::Sawtooth { period } => format!("sawtooth:period={period}"),
            Builtin::Trig { seed, modes, .. } => format!("trig:seed={seed},modes={modes}"),
            Builtin::Bump { radius, width, .. } => format!("bump:r={radius},w={width}"),
            Builtin::PeriodicLog { .. } => "plog".into(),
            Builtin::Checker { block, seed } => match seed {
                Some(s) => format!("checker:block={block},seed={s}"),
                None => format!("checker:block={block}"),
            },
            Builtin::Constant(c) => format!("constant:c={c}"),
        }
    }

    fn eval(&self, p: &Point) -> Result<f64> {
        Ok(self.value(p))
    }
}

/// Parses `name[:key=value,...]`; log floors default to two cells of `grid`.
pub fn parse_builtin(spec: &str, grid: &Grid) -> Result<Builtin, SpecError> {
    let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for part in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| SpecError::new(part.trim(), "expected key=value"))?;
        kv.insert(k.trim(), v.trim());
    }
    let mut num = |key: &str, default: f64| -> Result<f64, SpecError> {
        match kv.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SpecError::new(key, format!("`{v}` is not a finite number"))),
        }
    };
    let floor = 2.0 * grid.h();
    let b = match name {
        "log" => Builtin::LogRadial {
            center: [num("cx", 0.0)?, num("cy", 0.0)?, 0.0],
            floor: num("floor", floor)?,
        },
        "slit" => {
            let axis = num("axis", 0.0)?;
            if axis != 0.0 && axis != 1.0 {
                return Err(SpecError::new("axis", "must be 0 or 1"));
            }
            Builtin::Slit {
                axis: axis as usize,
                floor: num("floor", floor)?,
            }
        }
        "holder" => {
            let a = num("a", 0.5)?;
            let axis = num("axis", 0.0)?;
            if axis != 0.0 && axis != 1.0 {
                return Err(SpecError::new("axis", "must be 0 or 1"));
            }
            Builtin::Holder { a, axis: axis as usize }
        }
        "sawtooth" => Builtin::Sawtooth {
            period: num("period", 0.25)?,
        },
        "trig" => {
            let seed = num("seed", 1.0)?;
            let modes = num("modes", 4.0)?;
            if seed < 0.0 || modes < 1.0 {
                return Err(SpecError::new("modes", "seed >= 0 and modes >= 1 required"));
            }
            Builtin::trig(seed as u64, modes as usize)
        }
        "bump" => Builtin::Bump {
            center: [num("cx", 0.0)?, num("cy", 0.0)?, 0.0],
            radius: num("r", 0.3)?,
            width: num("w", 0.05)?,
        },
        "plog" => Builtin::PeriodicLog {
            floor: num("floor", floor)?,
        },
        "checker" => {
            let block = num("block", grid.h())?;
            let seed = kv.remove("seed");
            let seed = match seed {
                None => None,
                Some(s) => Some(
                    s.parse::<u64>()
                        .map_err(|_| SpecError::new("seed", "not an integer"))?,
                ),
            };
            Builtin::Checker { block, seed }
        }
        "constant" => Builtin::Constant(num("c", 1.0)?),
        other => return Err(SpecError::new("f", format!("unknown builtin `{other}`"))),
    };
    if let Some(k) = kv.keys().next() {
        return Err(SpecError::new(*k, format!("unknown key for `{name}`")));
    }
    Ok(b)
}

/// The functions every isometry and average-shift experiment runs over.
pub fn standard_corpus(grid: &Grid) -> Vec<Builtin> {
    let floor = 2.0 * grid.h();
    let c = grid.window.center();
    let side = grid.window.side;
    let mut out = vec![
        Builtin::LogRadial { center: c, floor },
        Builtin::Sawtooth { period: side / 4.0 },
        Builtin::trig(7, 4),
        Builtin::Bump {
            center: c,
            radius: side * 0.15,
            width: side * 0.025,
        },
    ];
    if grid.window.periodic {
        out.push(Builtin::PeriodicLog { floor });
    } else {
        out.push(Builtin::Slit { axis: 0, floor });
        out.push(Builtin::Holder { a: 0.5, axis: 0 });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Window;

    #[test]
    fn slit_distance() {
        let s = Builtin::Slit {
            axis: 0,
            floor: 1e-3,
        };
        assert!((s.value(&[-5.0, 0.5, 0.0]) - 0.5f64.ln()).abs() < 1e-15);
        assert!((s.value(&[3.0, 4.0, 0.0]) - 5f64.ln()).abs() < 1e-15);
        assert_eq!(s.value(&[-1.0, 0.0, 0.0]), 1e-3f64.ln());
    }

    #[test]
    fn trig_is_periodic_and_deterministic() {
        let t = Builtin::trig(3, 3);
        let p = [0.123, 0.456, 0.0];
        assert!((t.value(&p) - t.value(&[1.123, -0.544, 0.0])).abs() < 1e-12);
        assert_eq!(Builtin::trig(3, 3), t);
    }

    #[test]
    fn parse_and_name() {
        let g = Grid::new(Window::centered(2, 2.0, false).unwrap(), 64).unwrap();
        let b = parse_builtin("holder:a=0.25", &g).unwrap();
        assert_eq!(b.name(), "holder:a=0.25,axis=0");
        assert_eq!(parse_builtin("log", &g).unwrap(), Builtin::log_radial(2.0 * g.h()));
        assert_eq!(parse_builtin("nope", &g).unwrap_err().field, "f");
        assert_eq!(parse_builtin("bump:q=1", &g).unwrap_err().field, "q");
    }

    #[test]
    fn checker_alternates() {
        let c = Builtin::Checker {
            block: 0.25,
            seed: None,
        };
        assert_eq!(c.value(&[0.1, 0.1, 0.0]), 1.0);
        assert_eq!(c.value(&[0.3, 0.1, 0.0]), -1.0);
        assert!(c.is_periodic());
    }
}
