//! Growth-law regression with a relative-error objective.
//!
//! Every model is fitted by minimizing the RMS of `(y - ŷ)/y`, and the
//! reported residual is that RMS. Competing models always see the same
//! points.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    /// `c0 + c1·log x`
    Log,
    /// `c0·x^ε`
    Power,
    /// `c0 + c1·x`
    Affine,
    /// `c0·e^{γx}`
    Exponential,
    /// `c·s(x)` for a fixed shape `s`.
    Scaled(String),
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Log => write!(f, "log"),
            Model::Power => write!(f, "power"),
            Model::Affine => write!(f, "affine"),
            Model::Exponential => write!(f, "exponential"),
            Model::Scaled(s) => write!(f, "scaled:{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub model: Model,
    /// `[c0, c1]`, `[c0, ε]`, `[c0, γ]` or `[c]`.
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        match self.model {
            Model::Log => c[0] + c[1] * x.ln(),
            Model::Power => c[0] * x.powf(c[1]),
            Model::Affine => c[0] + c[1] * x,
            Model::Exponential => c[0] * (c[1] * x).exp(),
            Model::Scaled(_) => f64::NAN,
        }
    }
}

fn weight(y: f64) -> f64 {
    1.0 / y.abs().max(1e-300)
}

/// RMS relative error of a prediction.
pub fn relative_rms(ys: &[f64], pred: &[f64]) -> f64 {
    let s: f64 = ys
        .iter()
        .zip(pred)
        .map(|(&y, &p)| ((y - p) * weight(y)).powi(2))
        .sum();
    (s / ys.len() as f64).sqrt()
}

/// Weighted least squares for `y ≈ c0 + c1·u` with weights `1/y²`.
fn linear(us: &[f64], ys: &[f64]) -> [f64; 2] {
    let (mut sw, mut su, mut sy, mut suu, mut suy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&u, &y) in us.iter().zip(ys) {
        let w = weight(y).powi(2);
        sw += w;
        su += w * u;
        sy += w * y;
        suu += w * u * u;
        suy += w * u * y;
    }
    let det = sw * suu - su * su;
    if det.abs() < 1e-300 {
        return [sy / sw, 0.0];
    }
    [(suu * sy - su * suy) / det, (sw * suy - su * sy) / det]
}

/// Best `c` for `y ≈ c·s` in relative error.
fn best_scale(shape: &[f64], ys: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&s, &y) in shape.iter().zip(ys) {
        let q = s * weight(y);
        num += q * y.signum();
        den += q * q;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Minimizes a one-parameter objective on `[lo, hi]`: coarse grid, then
/// golden-section refinement around the best grid point.
fn search<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    const COARSE: usize = 400;
    let step = (hi - lo) / COARSE as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=COARSE {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = (a + b) / 2.0;
    if f(x) <= best.0 {
        x
    } else {
        best.1
    }
}

fn check_points(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: xs.len().min(ys.len()),
        });
    }
    if let Some(i) = xs.iter().chain(ys).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("fit abscissae must be strictly increasing".into()));
    }
    Ok(())
}

pub fn fit_log(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_points(xs, ys)?;
    if xs.iter().any(|&x| x <= 0.0) {
        return Err(Error::DomainError(xs[0]));
    }
    let us: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let c = linear(&us, ys);
    let pred: Vec<f64> = us.iter().map(|u| c[0] + c[1] * u).collect();
    Ok(FitResult {
        model: Model::Log,
        coeffs: c.to_vec(),
        residual: relative_rms(ys, &pred),
        samples: xs.len(),
    })
}

pub fn fit_affine(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_points(xs, ys)?;
    let c = linear(xs, ys);
    let pred: Vec<f64> = xs.iter().map(|x| c[0] + c[1] * x).collect();
    Ok(FitResult {
        model: Model::Affine,
        coeffs: c.to_vec(),
        residual: relative_rms(ys, &pred),
        samples: xs.len(),
    })
}

/// `c0·x^ε` with `ε` searched on `[eps_lo, eps_hi]`.
pub fn fit_power(xs: &[f64], ys: &[f64], eps_lo: f64, eps_hi: f64) -> Result<FitResult> {
    check_points(xs, ys)?;
    if xs.iter().any(|&x| x <= 0.0) {
        return Err(Error::DomainError(xs[0]));
    }
    let eval = |e: f64| {
        let shape: Vec<f64> = xs.iter().map(|x| x.powf(e)).collect();
        let c = best_scale(&shape, ys);
        let pred: Vec<f64> = shape.iter().map(|s| c * s).collect();
        (c, relative_rms(ys, &pred))
    };
    let e = search(eps_lo, eps_hi, |e| eval(e).1);
    let (c, r) = eval(e);
    Ok(FitResult {
        model: Model::Power,
        coeffs: vec![c, e],
        residual: r,
        samples: xs.len(),
    })
}

/// `c0·e^{γx}` with `γ` searched so that `|γ|·span(x) ≤ 20`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_points(xs, ys)?;
    let span = (xs[xs.len() - 1] - xs[0]).max(1e-12);
    let g = 20.0 / span;
    let eval = |gamma: f64| {
        let shape: Vec<f64> = xs.iter().map(|x| (gamma * x).exp()).collect();
        let c = best_scale(&shape, ys);
        let pred: Vec<f64> = shape.iter().map(|s| c * s).collect();
        (c, relative_rms(ys, &pred))
    };
    let gamma = search(-g, g, |v| eval(v).1);
    let (c, r) = eval(gamma);
    Ok(FitResult {
        model: Model::Exponential,
        coeffs: vec![c, gamma],
        residual: r,
        samples: xs.len(),
    })
}

/// `y ≈ c·shape(x)` with a single fitted scale.
pub fn fit_scaled(name: &str, shape: &[f64], ys: &[f64]) -> Result<FitResult> {
    if shape.len() != ys.len() || ys.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: shape.len().min(ys.len()),
        });
    }
    let c = best_scale(shape, ys);
    let pred: Vec<f64> = shape.iter().map(|s| c * s).collect();
    Ok(FitResult {
        model: Model::Scaled(name.to_string()),
        coeffs: vec![c],
        residual: relative_rms(ys, &pred),
        samples: ys.len(),
    })
}

/// Log and power fits against `x = K`, affine and exponential against
/// `x = t`; `dim` bounds the power exponent.
pub fn fit_models(xs: &[f64], ys: &[f64], dim: usize) -> Result<Vec<FitResult>> {
    check_points(xs, ys)?;
    let mut out = Vec::with_capacity(4);
    if xs[0] > 0.0 {
        out.push(fit_log(xs, ys)?);
        out.push(fit_power(xs, ys, 0.01, dim as f64)?);
    }
    out.push(fit_affine(xs, ys)?);
    out.push(fit_exponential(xs, ys)?);
    Ok(out)
}

/// Smallest and largest of `y/g` over the points.
pub fn ratio_band(ys: &[f64], gs: &[f64]) -> (f64, f64) {
    ys.iter()
        .zip(gs)
        .map(|(y, g)| y / g)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// True when every ratio lies in `[c, width·c]` for `c` the smallest ratio,
/// which must be positive.
pub fn bounded_ratio(ys: &[f64], gs: &[f64], width: f64) -> bool {
    let (lo, hi) = ratio_band(ys, gs);
    lo > 0.0 && hi <= width * lo
}
