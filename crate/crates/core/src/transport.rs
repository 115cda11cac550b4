//! Transport by backward characteristics and the perturbed equation
//! `∂_t ω + (u·∇)ω = ∂₂₂Δ⁻¹ω` on a periodic box.

use rayon::prelude::*;

use crate::corpus::ScalarField;
use crate::domain::{BallFamily, Grid, GridFunction, Point};
use crate::error::{Error, Result, SpecError};
use crate::fit::{self, FitResult};
use crate::maps::{integrate_point, VectorField};
use crate::oscillation::{seminorm, OscillationParams};
use crate::spectral;

/// Largest `step·Lip(v)` accepted for characteristic integration.
pub const MAX_STEP_LIP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    /// Multilinear: monotone, so no new extrema.
    Linear,
    /// Four-point Lagrange: higher order, may overshoot.
    Cubic,
}

#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub field: VectorField,
    pub u0: GridFunction,
    pub horizon: f64,
    pub step: f64,
}

fn check_field(field: &VectorField, step: f64) -> Result<()> {
    if !field.divergence_free {
        return Err(SpecError::new("field", format!("`{}` is not divergence-free", field.name)).into());
    }
    let product = step * field.lip;
    if !(step > 0.0) || product > MAX_STEP_LIP {
        return Err(Error::StepTooLarge {
            step,
            lip: field.lip,
            product,
        });
    }
    Ok(())
}

impl TransportProblem {
    pub fn new(field: VectorField, u0: GridFunction, horizon: f64, step: f64) -> Result<Self> {
        check_field(&field, step)?;
        Ok(TransportProblem {
            field,
            u0,
            horizon,
            step,
        })
    }
}

/// Foot of the characteristic through every cell center after time `t`:
/// `φ_{-t}(c)`, wrapped on periodic windows.
pub fn feet(field: &VectorField, grid: &Grid, t: f64, step: f64) -> Vec<Point> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| grid.window.wrap(&integrate_point(field, &grid.center(i), -t, step)))
        .collect()
}

fn sample_at(u0: &GridFunction, feet: &[Point], interp: Interp) -> Result<GridFunction> {
    let values = feet
        .par_iter()
        .map(|p| match interp {
            Interp::Linear => u0.interpolate(p),
            Interp::Cubic => u0.interpolate_cubic(p),
        })
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(*u0.grid(), values)
}

/// `u(t) = u0 ∘ φ_{-t}` for every output time, each from one backward
/// integration of the characteristics.
pub fn solve_transport(prob: &TransportProblem, times: &[f64]) -> Result<Vec<GridFunction>> {
    solve_transport_with(prob, times, Interp::Linear)
}

pub fn solve_transport_with(prob: &TransportProblem, times: &[f64], interp: Interp) -> Result<Vec<GridFunction>> {
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(prob.u0.clone());
            }
            let f = feet(&prob.field, prob.u0.grid(), t, prob.step);
            sample_at(&prob.u0, &f, interp)
        })
        .collect()
}

/// As [`solve_transport`] with `u0` evaluated exactly at the feet, so
/// characteristics may leave the window.
pub fn solve_transport_field<S: ScalarField + ?Sized>(
    field: &VectorField,
    u0: &S,
    grid: &Grid,
    times: &[f64],
    step: f64,
) -> Result<Vec<GridFunction>> {
    check_field(field, step)?;
    times
        .iter()
        .map(|&t| {
            let values = feet(field, grid, t, step)
                .par_iter()
                .map(|p| u0.eval(p))
                .collect::<Result<Vec<f64>>>()?;
            GridFunction::new(*grid, values)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub t: f64,
    pub seminorm: f64,
    pub l2: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub label: String,
    pub params: OscillationParams,
    pub lip: f64,
    pub rows: Vec<GrowthRow>,
    /// Affine and exponential fits of the ratio against `t`.
    pub fits: Vec<FitResult>,
    /// Least-squares slope of `log ratio` against `t`.
    pub log_slope: f64,
    /// `max ratio / e^{aLt}`.
    pub envelope: f64,
}

impl GrowthReport {
    pub fn ratios(&self) -> Vec<f64> {
        let s0 = self.rows[0].seminorm;
        self.rows.iter().map(|r| r.seminorm / s0).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn fit(&self, model: &fit::Model) -> Option<&FitResult> {
        self.fits.iter().find(|f| &f.model == model)
    }

    /// `t,seminorm,l2,min,max`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,seminorm,l2,min,max\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.t, r.seminorm, r.l2, r.min, r.max));
        }
        s
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Seminorm ratios of a run over time, with affine and exponential fits.
/// The first snapshot must be `t = 0`.
pub fn growth_report(
    label: &str,
    times: &[f64],
    snapshots: &[GridFunction],
    params: &OscillationParams,
    family: &BallFamily,
    lip: f64,
) -> Result<GrowthReport> {
    if times.len() != snapshots.len() || times.is_empty() {
        return Err(Error::TooFewPoints {
            needed: 1,
            got: times.len().min(snapshots.len()),
        });
    }
    let rows = times
        .iter()
        .zip(snapshots)
        .map(|(&t, u)| {
            Ok(GrowthRow {
                t,
                seminorm: seminorm(u, params, family)?.value,
                l2: u.l2_norm(),
                min: u.min(),
                max: u.max(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows[0].seminorm == 0.0 {
        return Err(Error::ZeroSeminorm);
    }
    let mut rep = GrowthReport {
        label: label.to_string(),
        params: *params,
        lip,
        rows,
        fits: Vec::new(),
        log_slope: 0.0,
        envelope: 0.0,
    };
    let ratios = rep.ratios();
    if times.len() >= 4 {
        rep.fits = vec![fit::fit_affine(times, &ratios)?, fit::fit_exponential(times, &ratios)?];
    }
    let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    rep.log_slope = slope(times, &logs);
    rep.envelope = times
        .iter()
        .zip(&ratios)
        .map(|(t, r)| r / (params.a * lip * t).exp())
        .fold(0.0, f64::max);
    Ok(rep)
}

/// Solves the problem at `times` and reports seminorm growth.
pub fn check_theorem5(
    prob: &TransportProblem,
    params: &OscillationParams,
    times: &[f64],
    family: &BallFamily,
) -> Result<GrowthReport> {
    let snaps = solve_transport(prob, times)?;
    growth_report(&prob.field.name, times, &snaps, params, family, prob.field.lip)
}

/// The multiplier `ξ₂²/|ξ|²` with `m(0) = 0` on a periodic planar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RieszOperator {
    grid: Grid,
    symbol: Vec<f64>,
}

impl RieszOperator {
    pub fn new(grid: &Grid) -> Result<Self> {
        if !grid.window.periodic {
            return Err(Error::NonPeriodic);
        }
        if grid.dim() != 2 {
            return Err(Error::InvalidGrid("the Riesz term is planar".into()));
        }
        let symbol = spectral::symbol(grid, |xi| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            if r2 == 0.0 {
                0.0
            } else {
                xi[1] * xi[1] / r2
            }
        });
        Ok(RieszOperator {
            grid: *grid,
            symbol,
        })
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn check(&self, w: &GridFunction) -> Result<()> {
        if w.grid() != &self.grid {
            return Err(Error::InvalidGrid("operator built for another grid".into()));
        }
        Ok(())
    }

    pub fn apply(&self, w: &GridFunction) -> Result<GridFunction> {
        self.check(w)?;
        Ok(spectral::apply_symbol(w, &self.symbol)?.0)
    }

    /// `e^{τm}` applied spectrally.
    pub fn exp(&self, w: &GridFunction, tau: f64) -> Result<GridFunction> {
        self.check(w)?;
        let sym: Vec<f64> = self.symbol.iter().map(|m| (tau * m).exp()).collect();
        Ok(spectral::apply_symbol(w, &sym)?.0)
    }
}

pub fn apply_riesz(w: &GridFunction) -> Result<GridFunction> {
    RieszOperator::new(w.grid())?.apply(w)
}

#[derive(Clone, Debug)]
pub struct PerturbedProblem {
    pub field: VectorField,
    pub w0: GridFunction,
    /// Splitting step.
    pub dt: f64,
    /// Include the Riesz term; without it the scheme is plain transport.
    pub riesz: bool,
}

impl PerturbedProblem {
    pub fn new(field: VectorField, w0: GridFunction, dt: f64) -> Result<Self> {
        if !w0.grid().window.periodic {
            return Err(Error::NonPeriodic);
        }
        if !field.divergence_free {
            return Err(SpecError::new("field", format!("`{}` is not divergence-free", field.name)).into());
        }
        let product = dt * field.lip;
        if !(dt > 0.0) || product > 0.5 {
            return Err(Error::StepTooLarge {
                step: dt,
                lip: field.lip,
                product,
            });
        }
        Ok(PerturbedProblem {
            field,
            w0,
            dt,
            riesz: true,
        })
    }

    pub fn without_riesz(mut self) -> Self {
        self.riesz = false;
        self
    }
}

/// Strang splitting: half multiplier step, one semi-Lagrangian advection
/// over `dt` with cubic interpolation, half multiplier step. Output times
/// must be multiples of `dt`.
pub fn solve_perturbed(prob: &PerturbedProblem, times: &[f64]) -> Result<Vec<GridFunction>> {
    let grid = *prob.w0.grid();
    let dt = prob.dt;
    let mut counts = Vec::with_capacity(times.len());
    for &t in times {
        let k = (t / dt).round();
        if !(t >= 0.0) || (k * dt - t).abs() > 1e-9 * dt.max(t) {
            return Err(SpecError::new("times", format!("{t} is not a multiple of dt = {dt}")).into());
        }
        counts.push(k as usize);
    }
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpecError::new("times", "output times must be increasing").into());
    }
    let inner = (MAX_STEP_LIP / prob.field.lip.max(1e-300)).min(dt);
    let step_feet = feet(&prob.field, &grid, dt, inner);
    let still = prob.field.lip == 0.0 && prob.field.eval(&grid.window.center()) == [0.0; 3];
    let riesz = RieszOperator::new(&grid)?;
    let half: Vec<f64> = riesz.symbol.iter().map(|m| (0.5 * dt * m).exp()).collect();
    let mut w = prob.w0.clone();
    let mut done = 0usize;
    let mut out = Vec::with_capacity(times.len());
    for &k in &counts {
        while done < k {
            if prob.riesz {
                w = spectral::apply_symbol(&w, &half)?.0;
            }
            if !still {
                w = sample_at(&w, &step_feet, Interp::Cubic)?;
            }
            if prob.riesz {
                w = spectral::apply_symbol(&w, &half)?.0;
            }
            done += 1;
        }
        out.push(w.clone());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Run {
    pub field: String,
    pub lip: f64,
    pub report: GrowthReport,
    /// `c·(1 + Lt)e^{ĉt}`.
    pub predicted_fit: FitResult,
    /// `c·e^{Lt}e^{ĉt}`.
    pub rough_fit: FitResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Report {
    /// Growth rate of the `u = 0` run.
    pub c_hat: f64,
    pub baseline: GrowthReport,
    pub runs: Vec<Prop1Run>,
}

/// Runs the perturbed equation for `u = 0` and each field, fits `ĉ` on the
/// `u = 0` run, then compares the `(1 + Lt)` and `e^{Lt}` envelopes.
pub fn check_prop1(
    w0: &GridFunction,
    fields: &[VectorField],
    dt: f64,
    times: &[f64],
    params: &OscillationParams,
    family: &BallFamily,
) -> Result<Prop1Report> {
    let still = VectorField::constant([0.0; 3]);
    let base_snaps = solve_perturbed(&PerturbedProblem::new(still, w0.clone(), dt)?, times)?;
    let baseline = growth_report("zero", times, &base_snaps, params, family, 0.0)?;
    let c_hat = fit::fit_exponential(times, &baseline.ratios())?.coeffs[1];
    let runs = fields
        .iter()
        .map(|u| {
            let snaps = solve_perturbed(&PerturbedProblem::new(u.clone(), w0.clone(), dt)?, times)?;
            let report = growth_report(&u.name, times, &snaps, params, family, u.lip)?;
            let ys = report.ratios();
            let predicted: Vec<f64> = times.iter().map(|t| (1.0 + u.lip * t) * (c_hat * t).exp()).collect();
            let rough: Vec<f64> = times.iter().map(|t| ((u.lip + c_hat) * t).exp()).collect();
            Ok(Prop1Run {
                field: u.name.clone(),
                lip: u.lip,
                predicted_fit: fit::fit_scaled("(1+Lt)exp(ct)", &predicted, &ys)?,
                rough_fit: fit::fit_scaled("exp(Lt)exp(ct)", &rough, &ys)?,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prop1Report { c_hat, baseline, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Builtin;
    use crate::domain::{ball_family, dyadic_radii, Window};
    use crate::maps::{integrate_flow, translation};
    use crate::oscillation::{compose, compose_field};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus(n: usize) -> Grid {
        Grid::new(Window::unit(2, true).unwrap(), n).unwrap()
    }

    fn smooth(g: Grid) -> GridFunction {
        Builtin::trig(3, 3).sample(&g).unwrap()
    }

    #[test]
    fn constant_field_shifts_exactly() {
        let g = torus(64);
        let u0 = smooth(g);
        let prob = TransportProblem::new(VectorField::constant([1.0, 0.0, 0.0]), u0.clone(), 1.0, 0.05).unwrap();
        let out = solve_transport(&prob, &[0.0, 0.5]).unwrap();
        assert_eq!(out[0], u0);
        let want = compose(&u0, &translation([-0.5, 0.0, 0.0])).unwrap();
        for (a, b) in out[1].values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cellular_transport_conserves_l2_and_bounds() {
        let g = torus(128);
        let u0 = smooth(g);
        let prob = TransportProblem::new(VectorField::cellular(1.0 / PI), u0.clone(), 1.0, 0.02).unwrap();
        let u1 = &solve_transport(&prob, &[1.0]).unwrap()[0];
        assert!((u1.l2_norm() / u0.l2_norm() - 1.0).abs() < 0.01);
        assert!(u1.max() <= u0.max() + 1e-12 && u1.min() >= u0.min() - 1e-12);
        let cubic = &solve_transport_with(&prob, &[1.0], Interp::Cubic).unwrap()[0];
        let span = u0.max() - u0.min();
        assert!(cubic.max() <= u0.max() + 0.02 * span);
    }

    #[test]
    fn matches_composition_with_backward_flow() {
        let g = torus(64);
        let u0 = smooth(g);
        let v = VectorField::cellular(0.3);
        let prob = TransportProblem::new(v.clone(), u0.clone(), 1.0, 0.02).unwrap();
        let u = &solve_transport(&prob, &[0.7]).unwrap()[0];
        let back = integrate_flow(&v.negated(), 0.7, 0.02).unwrap().map;
        let c = compose(&u0, &back).unwrap();
        for (a, b) in u.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_large_steps_and_exits() {
        let g = torus(16);
        let u0 = GridFunction::constant(g, 1.0).unwrap();
        assert!(matches!(
            TransportProblem::new(VectorField::strain(), u0.clone(), 1.0, 0.2),
            Err(Error::StepTooLarge { .. })
        ));
        let open = Grid::new(Window::centered(2, 2.0, false).unwrap(), 16).unwrap();
        let f = GridFunction::constant(open, 1.0).unwrap();
        let prob = TransportProblem::new(VectorField::strain(), f, 1.0, 0.05).unwrap();
        assert!(matches!(solve_transport(&prob, &[1.0]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn strain_holder_ratio_is_exponential() {
        let g = Grid::new(Window::centered(2, 2.0, false).unwrap(), 128).unwrap();
        let f = Builtin::Holder { a: 0.5, axis: 1 };
        let times = [0.0, 0.5, 1.0, 1.5, 2.0];
        let snaps = solve_transport_field(&VectorField::strain(), &f, &g, &times, 0.05).unwrap();
        let fam = ball_family(&g, 8, &dyadic_radii(&g)).unwrap();
        let params = OscillationParams::new(1.0, 0.5, 2).unwrap();
        let rep = growth_report("strain", &times, &snaps, &params, &fam, 1.0).unwrap();
        assert!((rep.log_slope - 0.5).abs() < 1e-3, "{}", rep.log_slope);
    }

    #[test]
    fn riesz_symbol_examples() {
        let g = torus(32);
        let s2 = GridFunction::from_fn(g, |p| (2.0 * PI * p[1]).sin()).unwrap();
        let s1 = GridFunction::from_fn(g, |p| (2.0 * PI * p[0]).sin()).unwrap();
        let r2 = apply_riesz(&s2).unwrap();
        let r1 = apply_riesz(&s1).unwrap();
        for i in 0..g.len() {
            assert!((r2.values()[i] - s2.values()[i]).abs() < 1e-12);
            assert!(r1.values()[i].abs() < 1e-12);
        }
        let open = Grid::new(Window::unit(2, false).unwrap(), 16).unwrap();
        assert!(matches!(
            apply_riesz(&GridFunction::constant(open, 1.0).unwrap()),
            Err(Error::NonPeriodic)
        ));
    }

    #[test]
    fn riesz_is_self_adjoint_contraction_with_zero_mean() {
        let g = torus(64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = GridFunction::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let h = GridFunction::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0) + 0.3).collect()).unwrap();
        let r = RieszOperator::new(&g).unwrap();
        let (rf, rh) = (r.apply(&f).unwrap(), r.apply(&h).unwrap());
        let dot = |a: &GridFunction, b: &GridFunction| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&rf, &h) - dot(&f, &rh)).abs() < 1e-10);
        assert!(rf.l2_norm() <= f.l2_norm());
        assert!(rh.mean().abs() < 1e-12);
        assert!(r.symbol().iter().all(|m| (0.0..=1.0).contains(m)));
        let (_, imag) = spectral::apply_symbol(&f, r.symbol()).unwrap();
        assert!(imag < 1e-12);
    }

    #[test]
    fn zero_field_is_pure_multiplier() {
        let g = torus(64);
        let w0 = smooth(g);
        let prob = PerturbedProblem::new(VectorField::constant([0.0; 3]), w0.clone(), 0.05).unwrap();
        let out = solve_perturbed(&prob, &[1.0]).unwrap();
        let want = RieszOperator::new(&g).unwrap().exp(&w0, 1.0).unwrap();
        for (a, b) in out[0].values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn without_riesz_matches_transport() {
        let g = torus(128);
        let w0 = smooth(g);
        let v = VectorField::cellular(0.25);
        let prob = PerturbedProblem::new(v.clone(), w0.clone(), 0.05).unwrap().without_riesz();
        let a = &solve_perturbed(&prob, &[1.0]).unwrap()[0];
        let tp = TransportProblem::new(v, w0.clone(), 1.0, 0.05).unwrap();
        let b = &solve_transport_with(&tp, &[1.0], Interp::Cubic).unwrap()[0];
        let diff = GridFunction::new(g, a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect()).unwrap();
        assert!(diff.l2_norm() < 1e-3 * w0.l2_norm(), "{}", diff.l2_norm());
    }

    #[test]
    fn l2_growth_within_spectral_bound() {
        let g = torus(64);
        let w0 = smooth(g);
        let prob = PerturbedProblem::new(VectorField::cellular(1.0 / PI), w0.clone(), 0.05).unwrap();
        let times = [0.5, 1.0, 2.0];
        for (t, w) in times.iter().zip(solve_perturbed(&prob, &times).unwrap()) {
            assert!(w.l2_norm() <= w0.l2_norm() * (1.05 * t).exp());
        }
        assert!(solve_perturbed(&prob, &[0.33]).is_err());
    }

    #[test]
    fn analytic_and_grid_initial_data_agree_on_torus() {
        let g = torus(64);
        let f = Builtin::trig(5, 2);
        let v = VectorField::cellular(0.2);
        let a = &solve_transport_field(&v, &f, &g, &[0.5], 0.05).unwrap()[0];
        let want = compose_field(&f, &integrate_flow(&v.negated(), 0.5, 0.05).unwrap().map, &g).unwrap();
        assert_eq!(a, &want);
    }
}
