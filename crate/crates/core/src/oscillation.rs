//! Discretized BMO and Campanato-type seminorms and composition with maps.

use rayon::prelude::*;

use crate::corpus::ScalarField;
use crate::domain::{ball_average, oscillation_of, Ball, BallFamily, Grid, GridFunction};
use crate::error::{Error, Result};
use crate::maps::BiLipMap;

/// `r^a` for `a > 0`, `log r` for `a = 0`; only defined for `r >= 1`.
pub fn rho(a: f64, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::DomainError(r));
    }
    Ok(if a > 0.0 { r.powf(a) } else { r.ln() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillationParams {
    pub p: f64,
    pub a: f64,
    pub d: usize,
}

impl OscillationParams {
    pub fn new(p: f64, a: f64, d: usize) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) || !(0.0..=1.0).contains(&a) || !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!(
                "oscillation parameters p={p}, a={a}, d={d} out of range"
            )));
        }
        Ok(OscillationParams { p, a, d })
    }

    pub fn bmo(d: usize) -> Self {
        OscillationParams { p: 1.0, a: 0.0, d }
    }

    /// `|B|^{a/d}`.
    pub fn scale(&self, b: &Ball) -> f64 {
        if self.a == 0.0 {
            1.0
        } else {
            b.volume(self.d).powf(self.a / self.d as f64)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeminormEstimate {
    pub value: f64,
    pub params: OscillationParams,
    pub family: String,
    pub argmax_ball: Ball,
}

/// Normalized oscillation of every ball in the family, in family order.
pub fn per_ball(f: &GridFunction, params: &OscillationParams, family: &BallFamily) -> Result<Vec<f64>> {
    let grid = f.grid();
    family
        .balls
        .par_iter()
        .map(|b| {
            let cells = grid.cells_in_ball(b);
            if cells.is_empty() {
                return Err(Error::EmptyBall {
                    center: b.center,
                    radius: b.radius,
                });
            }
            Ok(oscillation_of(f.values(), &cells, params.p) / params.scale(b))
        })
        .collect()
}

/// Max over the family; ties resolve to the earliest ball, so the result
/// does not depend on the thread count.
pub fn seminorm(f: &GridFunction, params: &OscillationParams, family: &BallFamily) -> Result<SeminormEstimate> {
    if family.is_empty() {
        return Err(Error::InvalidGrid("empty ball family".into()));
    }
    let vals = per_ball(f, params, family)?;
    let (mut best, mut arg) = (vals[0], 0);
    for (i, &v) in vals.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            arg = i;
        }
    }
    Ok(SeminormEstimate {
        value: best,
        params: *params,
        family: family.describe(),
        argmax_ball: family.balls[arg],
    })
}

/// Samples `field ∘ φ` at the cell centers of `grid`.
pub fn compose_field<S: ScalarField + ?Sized>(field: &S, map: &BiLipMap, grid: &Grid) -> Result<GridFunction> {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| field.eval(&grid.window.wrap(&map.forward(&grid.center(i)))))
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(*grid, values)
}

/// `f ∘ φ` on the grid of `f`, by multilinear interpolation.
pub fn compose(f: &GridFunction, map: &BiLipMap) -> Result<GridFunction> {
    compose_field(f, map, f.grid())
}

/// `|av_B f - av_{λB} f| / (ρ_a(2λ) |B|^{a/d} ‖f‖)` for a known seminorm value.
pub fn average_shift_ratio(
    f: &GridFunction,
    ball: &Ball,
    lambda: f64,
    params: &OscillationParams,
    seminorm_value: f64,
) -> Result<f64> {
    let grid = f.grid();
    let big = ball.scaled(lambda);
    if !(lambda > 1.0) || !grid.window.contains_ball(&big) {
        return Err(Error::BadRadius {
            radius: big.radius,
            min: ball.radius,
            max: grid.window.side / 2.0,
        });
    }
    let shift = (ball_average(f, ball)? - ball_average(f, &big)?).abs();
    if shift == 0.0 {
        return Ok(0.0);
    }
    if seminorm_value == 0.0 {
        return Err(Error::ZeroSeminorm);
    }
    Ok(shift / (rho(params.a, 2.0 * lambda)? * params.scale(ball) * seminorm_value))
}

pub fn check_average_shift(
    f: &GridFunction,
    ball: &Ball,
    lambda: f64,
    params: &OscillationParams,
    family: &BallFamily,
) -> Result<f64> {
    let s = seminorm(f, params, family)?.value;
    average_shift_ratio(f, ball, lambda, params, s)
}

/// `‖f ∘ φ‖ / ‖f‖` with the same ball family on both sides.
pub fn composition_ratio(
    f: &GridFunction,
    map: &BiLipMap,
    params: &OscillationParams,
    family: &BallFamily,
) -> Result<f64> {
    let base = seminorm(f, params, family)?.value;
    if base == 0.0 {
        return Err(Error::ZeroSeminorm);
    }
    let g = compose(f, map)?;
    Ok(seminorm(&g, params, family)?.value / base)
}

/// As [`composition_ratio`], evaluating the function exactly at `φ(c)`.
pub fn composition_ratio_field<S: ScalarField + ?Sized>(
    field: &S,
    map: &BiLipMap,
    grid: &Grid,
    params: &OscillationParams,
    family: &BallFamily,
) -> Result<(f64, f64, f64)> {
    let f = compose_field(field, &crate::maps::identity(grid.dim()), grid)?;
    let base = seminorm(&f, params, family)?.value;
    if base == 0.0 {
        return Err(Error::ZeroSeminorm);
    }
    let g = compose_field(field, map, grid)?;
    let out = seminorm(&g, params, family)?.value;
    Ok((base, out, out / base))
}

/// `‖f‖_{2,0} / ‖f‖_{1,0}` over one family.
pub fn john_nirenberg_check(f: &GridFunction, family: &BallFamily) -> Result<f64> {
    let d = f.grid().dim();
    let s1 = seminorm(f, &OscillationParams::bmo(d), family)?.value;
    if s1 == 0.0 {
        return Err(Error::ZeroSeminorm);
    }
    let s2 = seminorm(f, &OscillationParams { p: 2.0, a: 0.0, d }, family)?.value;
    Ok(s2 / s1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Builtin;
    use crate::domain::{ball_family, dyadic_radii, Window};
    use crate::maps::{identity, linear_strain, quarter_turn, translation};

    #[test]
    fn rho_values() {
        assert_eq!(rho(0.0, 1.0).unwrap(), 0.0);
        assert!((rho(0.0, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rho(0.5, 4.0).unwrap(), 2.0);
        assert!(matches!(rho(0.0, 0.5), Err(Error::DomainError(_))));
    }

    fn centered(n: usize) -> Grid {
        Grid::new(Window::centered(2, 2.0, false).unwrap(), n).unwrap()
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let g = centered(32);
        let fam = ball_family(&g, 4, &dyadic_radii(&g)).unwrap();
        let f = GridFunction::constant(g, 3.0).unwrap();
        assert_eq!(seminorm(&f, &OscillationParams::bmo(2), &fam).unwrap().value, 0.0);
        assert!(matches!(
            composition_ratio(&f, &identity(2), &OscillationParams::bmo(2), &fam),
            Err(Error::ZeroSeminorm)
        ));
    }

    #[test]
    fn identity_and_quarter_turn_ratios() {
        let g = centered(64);
        let fam = ball_family(&g, 4, &dyadic_radii(&g)).unwrap();
        let f = Builtin::Slit { axis: 0, floor: 2.0 * g.h() }.sample(&g).unwrap();
        let p = OscillationParams::bmo(2);
        assert_eq!(composition_ratio(&f, &identity(2), &p, &fam).unwrap(), 1.0);
        let r = composition_ratio(&f, &quarter_turn(1, [0.0; 3]), &p, &fam).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_translation_is_a_cyclic_shift() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 32).unwrap();
        let f = Builtin::trig(2, 3).sample(&g).unwrap();
        let t = translation([g.h(), 0.0, 0.0]);
        let shifted = compose(&f, &t).unwrap();
        for idx in 0..g.len() {
            let [i, j, _] = g.coords(idx);
            let src = g.index([(i + 1) % 32, j, 0]);
            assert_eq!(shifted.values()[idx], f.values()[src]);
        }
    }

    #[test]
    fn strain_composition_matches_direct_evaluation() {
        // Source data on a window wide enough to hold the image.
        let g = centered(128);
        let wide = Grid::new(Window::centered(2, 4.0, false).unwrap(), 256).unwrap();
        let floor = 2.0 * g.h();
        let f = Builtin::log_radial(floor).sample(&wide).unwrap();
        let m = linear_strain(0.5);
        let composed = compose_field(&f, &m, &g).unwrap();
        for idx in (0..g.len()).step_by(37) {
            let q = m.forward(&g.center(idx));
            let r = q[0].hypot(q[1]);
            let want = r.max(floor).ln();
            let tol = 2.0 * g.h() / r.max(floor);
            assert!((composed.values()[idx] - want).abs() <= tol, "{q:?}");
        }
        let small = Builtin::log_radial(floor).sample(&g).unwrap();
        assert!(matches!(compose(&small, &m), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn john_nirenberg_on_cell_checkerboard() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 32).unwrap();
        let f = Builtin::Checker { block: g.h(), seed: None }.sample(&g).unwrap();
        let fam = ball_family(&g, 4, &dyadic_radii(&g)).unwrap();
        assert_eq!(john_nirenberg_check(&f, &fam).unwrap(), 1.0);
    }

    #[test]
    fn average_shift_requires_room() {
        let g = centered(64);
        let fam = ball_family(&g, 8, &dyadic_radii(&g)).unwrap();
        let f = Builtin::log_radial(2.0 * g.h()).sample(&g).unwrap();
        let p = OscillationParams::bmo(2);
        let b = Ball::new([0.3, 0.0, 0.0], 0.1);
        assert!(check_average_shift(&f, &b, 4.0, &p, &fam).unwrap().is_finite());
        assert!(check_average_shift(&f, &b, 9.0, &p, &fam).is_err());
    }
}
