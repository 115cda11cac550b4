//! Carleson measures `|β(t,x)|² dt dx / t` on dyadic height shells.
//!
//! Shell `j` stands for heights in `(t_j/2, t_j]` with `t_j = T·2^{-j}`,
//! and `β` is sampled at `t_j`. Integrating `dt/t` over a shell gives
//! exactly `log 2`, so a box of height `r` collects the shells with
//! `t_j <= r`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{Ball, BallFamily, Grid, GridFunction, Point};
use crate::error::{Error, Result, SpecError};
use crate::fit::{self, FitResult};
use crate::maps::BiLipMap;
use crate::oscillation::compose;
use crate::spectral;

/// Class-membership constant for `sup|β| <= C·‖μ‖_C`.
pub const C_SC: f64 = 10.0;

const HEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonDensity {
    t_max: f64,
    shells: Vec<GridFunction>,
    sup_norm: f64,
}

/// Number of halvings from `T` down to four cells.
pub fn default_depth(grid: &Grid, t_max: f64) -> usize {
    (t_max / (4.0 * grid.h())).log2().floor().max(0.0) as usize
}

impl CarlesonDensity {
    /// Shells `j = 0..=J`, all on one grid.
    pub fn new(t_max: f64, shells: Vec<GridFunction>) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("height {t_max} must be positive")));
        }
        let Some(first) = shells.first() else {
            return Err(Error::InvalidGrid("density needs at least one shell".into()));
        };
        if shells.iter().any(|s| s.grid() != first.grid()) {
            return Err(Error::InvalidGrid("shells on different grids".into()));
        }
        let sup_norm = shells
            .iter()
            .flat_map(|s| s.values().iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(CarlesonDensity {
            t_max,
            shells,
            sup_norm,
        })
    }

    pub fn from_fn<F>(grid: &Grid, t_max: f64, depth: usize, beta: F) -> Result<Self>
    where
        F: Fn(f64, &Point) -> f64 + Sync,
    {
        let shells = (0..=depth)
            .map(|j| {
                let t = t_max * 0.5f64.powi(j as i32);
                let values = (0..grid.len())
                    .into_par_iter()
                    .map(|i| beta(t, &grid.center(i)))
                    .collect();
                GridFunction::new(*grid, values)
            })
            .collect::<Result<Vec<_>>>()?;
        CarlesonDensity::new(t_max, shells)
    }

    pub fn zero(grid: &Grid, t_max: f64, depth: usize) -> Result<Self> {
        CarlesonDensity::from_fn(grid, t_max, depth, |_, _| 0.0)
    }

    pub fn grid(&self) -> &Grid {
        self.shells[0].grid()
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `J`, the index of the lowest shell.
    pub fn depth(&self) -> usize {
        self.shells.len() - 1
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t_max * 0.5f64.powi(j as i32)
    }

    pub fn shell(&self, j: usize) -> &GridFunction {
        &self.shells[j]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let shells = self
            .shells
            .iter()
            .map(|s| s.map(|v| c * v))
            .collect::<Result<Vec<_>>>()?;
        CarlesonDensity::new(self.t_max, shells)
    }

    /// `μ` of the whole slab over shell `j`.
    pub fn shell_mass(&self, j: usize) -> f64 {
        let g = self.grid();
        let dv = g.h().powi(g.dim() as i32);
        self.shells[j].values().iter().map(|v| v * v).sum::<f64>() * dv * std::f64::consts::LN_2
    }

    /// Shells whose height does not exceed `r`.
    fn shells_below(&self, r: f64) -> std::ops::Range<usize> {
        let first = (0..self.shells.len())
            .find(|&j| self.t(j) <= r * (1.0 + HEIGHT_TOL))
            .unwrap_or(self.shells.len());
        first..self.shells.len()
    }
}

/// `B × (0, r_B]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarlesonBox {
    pub ball: Ball,
}

impl CarlesonBox {
    pub fn new(ball: Ball) -> Self {
        CarlesonBox { ball }
    }

    pub fn height(&self) -> f64 {
        self.ball.radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonNorm {
    pub value: f64,
    pub family: String,
    pub argmax_ball: Ball,
}

/// Row prefix sums of `β²` per shell, so a box mass costs one subtraction
/// per row of the ball.
struct Prefix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Prefix {
    fn new(mu: &CarlesonDensity) -> Prefix {
        let n = mu.grid().n;
        let rows = mu
            .shells
            .par_iter()
            .map(|s| {
                let v = s.values();
                let nrows = v.len() / n;
                let mut out = vec![0.0; nrows * (n + 1)];
                for r in 0..nrows {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += v[r * n + i] * v[r * n + i];
                        out[r * (n + 1) + i + 1] = acc;
                    }
                }
                out
            })
            .collect();
        Prefix { n, rows }
    }

    fn mass(&self, mu: &CarlesonDensity, ball: &Ball) -> Result<f64> {
        if ball.radius > mu.t_max * (1.0 + HEIGHT_TOL) {
            return Err(Error::HeightExceeded {
                height: ball.radius,
                horizon: mu.t_max,
            });
        }
        let g = mu.grid();
        let shells = mu.shells_below(ball.radius);
        if shells.is_empty() {
            return Ok(0.0);
        }
        let mut sums = vec![0.0; shells.len()];
        let n1 = self.n + 1;
        g.for_each_run_in_ball(ball, |row, lo, hi| {
            for (s, j) in sums.iter_mut().zip(shells.clone()) {
                let p = &self.rows[j];
                *s += p[row * n1 + hi + 1] - p[row * n1 + lo];
            }
        });
        let dv = g.h().powi(g.dim() as i32);
        Ok(sums.iter().sum::<f64>() * dv * std::f64::consts::LN_2)
    }
}

/// `μ(T(B))`.
pub fn box_mass(mu: &CarlesonDensity, cbox: &CarlesonBox) -> Result<f64> {
    Prefix::new(mu).mass(mu, &cbox.ball)
}

/// Max of `μ(T(B))/|B|` over the family; ties go to the earliest ball.
pub fn carleson_norm(mu: &CarlesonDensity, family: &BallFamily) -> Result<CarlesonNorm> {
    if family.is_empty() {
        return Err(Error::InvalidGrid("empty ball family".into()));
    }
    let prefix = Prefix::new(mu);
    let d = mu.grid().dim();
    let vals = family
        .balls
        .par_iter()
        .map(|b| Ok(prefix.mass(mu, b)? / b.volume(d)))
        .collect::<Result<Vec<f64>>>()?;
    let (mut best, mut arg) = (vals[0], 0);
    for (i, &v) in vals.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            arg = i;
        }
    }
    Ok(CarlesonNorm {
        value: best,
        family: family.describe(),
        argmax_ball: family.balls[arg],
    })
}

/// `β^φ(t_j, c) = β(t_j, φ(c))`, interpolating each shell.
pub fn pullback(mu: &CarlesonDensity, map: &BiLipMap) -> Result<CarlesonDensity> {
    let shells = mu
        .shells
        .iter()
        .map(|s| compose(s, map))
        .collect::<Result<Vec<_>>>()?;
    CarlesonDensity::new(mu.t_max, shells)
}

/// Pull-back of an analytic density, evaluated exactly at `φ(c)`.
pub fn pullback_builtin(
    beta: &DensityBuiltin,
    map: &BiLipMap,
    grid: &Grid,
    t_max: f64,
    depth: usize,
) -> Result<CarlesonDensity> {
    CarlesonDensity::from_fn(grid, t_max, depth, |t, p| {
        beta.eval(t, &grid.window.wrap(&map.forward(p)))
    })
}

/// `sup|β| <= C_SC·‖μ‖_C`.
pub fn sc_class_check(mu: &CarlesonDensity, norm: &CarlesonNorm) -> bool {
    sc_class_check_with(mu, norm, C_SC)
}

pub fn sc_class_check_with(mu: &CarlesonDensity, norm: &CarlesonNorm, c: f64) -> bool {
    mu.sup_norm <= c * norm.value
}

/// `β(t, ·) = g⋆K_t − g⋆K_{2t}` with the Gaussian `K̂_t(ξ) = e^{-t²|ξ|²}`
/// (`ξ` in cycles per unit length). Needs a periodic grid; the mean of `g`
/// drops out.
pub fn bmo_to_carleson(g: &GridFunction, t_max: f64, depth: usize) -> Result<CarlesonDensity> {
    let grid = *g.grid();
    let hat = spectral::forward(g)?;
    let xi2 = spectral::symbol(&grid, |xi| xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    let shells = (0..=depth)
        .map(|j| {
            let t = t_max * 0.5f64.powi(j as i32);
            let data = hat
                .par_iter()
                .zip(xi2.par_iter())
                .map(|(v, &x)| v * ((-t * t * x).exp() - (-4.0 * t * t * x).exp()))
                .collect();
            Ok(spectral::inverse(&grid, data)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    CarlesonDensity::new(t_max, shells)
}

/// Analytic densities.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityBuiltin {
    /// `1` on the top shell `(T/2, T]`.
    Band { t_max: f64 },
    /// `min(1, t/|x_axis|)`, concentrated near the hyperplane `x_axis = 0`.
    Ridge { axis: usize },
    /// `1` at a single sample `(t, cell)`.
    Spike { t: f64, cell: Point, half: f64 },
    /// `1` for `x ∈ B₀`, `t <= r₀`.
    Localized { ball: Ball },
    /// `1` everywhere; not Carleson.
    Ones,
    Zero,
}

impl DensityBuiltin {
    pub fn name(&self) -> String {
        match self {
            DensityBuiltin::Band { .. } => "band".into(),
            DensityBuiltin::Ridge { axis } => format!("ridge:axis={axis}"),
            DensityBuiltin::Spike { .. } => "spike".into(),
            DensityBuiltin::Localized { ball } => format!("ball:r={}", ball.radius),
            DensityBuiltin::Ones => "ones".into(),
            DensityBuiltin::Zero => "zero".into(),
        }
    }

    pub fn eval(&self, t: f64, p: &Point) -> f64 {
        match self {
            DensityBuiltin::Band { t_max } => f64::from(t > t_max / 2.0),
            DensityBuiltin::Ridge { axis } => {
                let y = p[*axis].abs();
                if y <= t {
                    1.0
                } else {
                    t / y
                }
            }
            DensityBuiltin::Spike { t: ts, cell, half } => {
                let hit = (t - ts).abs() <= ts * HEIGHT_TOL
                    && (0..3).all(|a| (p[a] - cell[a]).abs() < *half);
                f64::from(hit)
            }
            DensityBuiltin::Localized { ball } => {
                let d2: f64 = (0..3).map(|a| (p[a] - ball.center[a]).powi(2)).sum();
                f64::from(d2 <= ball.radius * ball.radius && t <= ball.radius * (1.0 + HEIGHT_TOL))
            }
            DensityBuiltin::Ones => 1.0,
            DensityBuiltin::Zero => 0.0,
        }
    }

    pub fn sample(&self, grid: &Grid, t_max: f64, depth: usize) -> Result<CarlesonDensity> {
        CarlesonDensity::from_fn(grid, t_max, depth, |t, p| self.eval(t, p))
    }
}

/// `band`, `ridge[:axis=k]`, `spike`, `ball[:r=..]`, `ones`, `zero`. The
/// spike sits at the lowest shell in the cell nearest the window center;
/// the ball is centered there with radius `T/4` unless given.
pub fn parse_density(spec: &str, grid: &Grid, t_max: f64, depth: usize) -> Result<DensityBuiltin, SpecError> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut axis = 1usize;
    let mut radius = t_max / 4.0;
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| SpecError::new("density", format!("expected key=value, got `{kv}`")))?;
        match (name, k.trim()) {
            ("ridge", "axis") => {
                axis = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&a: &usize| a < grid.dim())
                    .ok_or_else(|| SpecError::new("axis", format!("bad axis `{v}`")))?;
            }
            ("ball", "r") => {
                radius = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&r: &f64| r > 0.0 && r <= t_max)
                    .ok_or_else(|| SpecError::new("r", format!("bad radius `{v}`")))?;
            }
            _ => return Err(SpecError::new(k.trim(), format!("unknown key for `{name}`"))),
        }
    }
    let h = grid.h();
    let mut center = grid.window.center();
    for c in center.iter_mut().take(grid.dim()) {
        *c += h / 2.0;
    }
    Ok(match name {
        "band" => DensityBuiltin::Band { t_max },
        "ridge" => DensityBuiltin::Ridge { axis },
        "spike" => DensityBuiltin::Spike {
            t: t_max * 0.5f64.powi(depth as i32),
            cell: center,
            half: h / 2.0,
        },
        "ball" => DensityBuiltin::Localized {
            ball: Ball::new(grid.window.center(), radius),
        },
        "ones" => DensityBuiltin::Ones,
        "zero" => DensityBuiltin::Zero,
        other => return Err(SpecError::new("density", format!("unknown builtin `{other}`"))),
    })
}

/// One map of a pull-back sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackRow {
    pub map: String,
    pub k: f64,
    pub base_norm: f64,
    pub pullback_norm: f64,
    /// `(‖μ^φ‖_C − ‖μ‖_C)/sup²`.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PullbackReport {
    pub density: String,
    pub sup_norm: f64,
    pub rows: Vec<PullbackRow>,
    /// `c0 + c1·log K` and `c0·K^ε`, when there are at least four rows.
    pub fits: Vec<FitResult>,
    /// `c·K^{1/2}`.
    pub sqrt_fit: Option<FitResult>,
    /// `‖μ^φ‖_C <= 1.1·K^d·‖μ‖_C` on every row.
    pub ceiling_ok: bool,
}

/// Pulls `density` back along every map and compares Carleson norms on one
/// family. Maps must carry analytic `K`.
pub fn check_theorem4(
    density: Arc<DensityBuiltin>,
    maps: &[BiLipMap],
    grid: &Grid,
    t_max: f64,
    depth: usize,
    family: &BallFamily,
) -> Result<PullbackReport> {
    let base = density.sample(grid, t_max, depth)?;
    let base_norm = carleson_norm(&base, family)?.value;
    let sup = base.sup_norm();
    let d = grid.dim() as i32;
    let mut rows = Vec::with_capacity(maps.len());
    for m in maps {
        let k = m
            .k_analytic()
            .ok_or_else(|| Error::InvalidGrid(format!("map {} has no analytic K", m.name)))?;
        let pulled = pullback_builtin(&density, m, grid, t_max, depth)?;
        let pn = carleson_norm(&pulled, family)?.value;
        let excess = if sup > 0.0 { (pn - base_norm) / (sup * sup) } else { 0.0 };
        rows.push(PullbackRow {
            map: m.name.clone(),
            k,
            base_norm,
            pullback_norm: pn,
            excess,
        });
    }
    let ceiling_ok = rows
        .iter()
        .all(|r| r.pullback_norm <= 1.1 * r.k.powi(d) * r.base_norm + 1e-12);
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.k.total_cmp(&b.k));
    let xs: Vec<f64> = sorted.iter().map(|r| r.k).collect();
    let ys: Vec<f64> = sorted.iter().map(|r| r.excess).collect();
    let (fits, sqrt_fit) = if xs.len() >= 4 && xs.windows(2).all(|w| w[1] > w[0]) {
        let sq: Vec<f64> = xs.iter().map(|k| k.sqrt()).collect();
        (
            vec![
                fit::fit_log(&xs, &ys)?,
                fit::fit_power(&xs, &ys, 0.01, grid.dim() as f64)?,
            ],
            Some(fit::fit_scaled("sqrtK", &sq, &ys)?),
        )
    } else {
        (Vec::new(), None)
    };
    Ok(PullbackReport {
        density: density.name(),
        sup_norm: sup,
        rows,
        fits,
        sqrt_fit,
        ceiling_ok,
    })
}

/// CSV: a header `T,J,n,d,side,periodic,lower...` then one line
/// `j,t_j,i[,j[,k]],beta` per sample.
pub fn write_density_csv<W: Write>(mu: &CarlesonDensity, mut w: W) -> Result<()> {
    let g = mu.grid();
    let d = g.dim();
    let mut header = format!(
        "{},{},{},{},{},{}",
        mu.t_max,
        mu.depth(),
        g.n,
        d,
        g.window.side,
        u8::from(g.window.periodic)
    );
    for a in 0..d {
        header.push_str(&format!(",{}", g.window.lower[a]));
    }
    writeln!(w, "{header}")?;
    for (j, s) in mu.shells.iter().enumerate() {
        let t = mu.t(j);
        for (idx, v) in s.values().iter().enumerate() {
            let c = g.coords(idx);
            let ijk: Vec<String> = c[..d].iter().map(|x| x.to_string()).collect();
            writeln!(w, "{j},{t},{},{v}", ijk.join(","))?;
        }
    }
    Ok(())
}

pub fn read_density_csv<R: BufRead>(r: R) -> Result<CarlesonDensity> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| SpecError::new("header", "empty file"))??;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    let num = |field: &str, s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| SpecError::new(field, format!("cannot parse `{s}`")).into())
    };
    if parts.len() < 6 {
        return Err(SpecError::new("header", "expected T,J,n,d,side,periodic").into());
    }
    let t_max = num("T", parts[0])?;
    let depth = num("J", parts[1])? as usize;
    let n = num("n", parts[2])? as usize;
    let d = num("d", parts[3])? as usize;
    let side = num("side", parts[4])?;
    let periodic = parts[5] == "1";
    let mut lower = [0.0; 3];
    for a in 0..d.min(3) {
        if let Some(s) = parts.get(6 + a) {
            lower[a] = num("lower", s)?;
        }
    }
    let grid = Grid::new(crate::domain::Window::new(d, lower, side, periodic)?, n)?;
    let mut values = vec![vec![f64::NAN; grid.len()]; depth + 1];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != d + 3 {
            return Err(SpecError::new("row", format!("expected {} columns", d + 3)).into());
        }
        let j = num("j", cols[0])? as usize;
        let mut ijk = [0usize; 3];
        for a in 0..d {
            ijk[a] = num("index", cols[2 + a])? as usize;
            if ijk[a] >= n {
                return Err(SpecError::new("index", "out of range").into());
            }
        }
        if j > depth {
            return Err(SpecError::new("j", format!("shell {j} beyond J = {depth}")).into());
        }
        values[j][grid.index(ijk)] = num("beta", cols[d + 2])?;
    }
    let shells = values
        .into_iter()
        .map(|v| {
            if v.iter().any(|x| x.is_nan()) {
                return Err(SpecError::new("values", "missing samples").into());
            }
            GridFunction::new(grid, v)
        })
        .collect::<Result<Vec<_>>>()?;
    CarlesonDensity::new(t_max, shells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Builtin;
    use crate::domain::{ball_family, dyadic_radii, Window};
    use crate::maps::{identity, linear_strain, shear, translation, Profile};
    use crate::oscillation::{seminorm, OscillationParams};
    use std::f64::consts::{LN_2, PI};

    fn grid(n: usize, periodic: bool) -> Grid {
        Grid::new(Window::centered(2, 2.0, periodic).unwrap(), n).unwrap()
    }

    fn radii_up_to(g: &Grid, t: f64) -> Vec<f64> {
        dyadic_radii(g).into_iter().filter(|&r| r <= t).collect()
    }

    #[test]
    fn box_mass_brute_force() {
        let g = grid(64, true);
        let mu = CarlesonDensity::from_fn(&g, 0.5, 3, |t, p| (p[0] * 3.0 + t).sin() + p[1]).unwrap();
        for (c, r) in [([0.1, -0.2, 0.0], 0.5), ([0.95, 0.9, 0.0], 0.3), ([0.0; 3], 0.07)] {
            let ball = Ball::new(c, r);
            let mut want = 0.0;
            for j in 0..=3 {
                if mu.t(j) <= r {
                    for i in g.cells_in_ball(&ball) {
                        want += mu.shell(j).values()[i].powi(2);
                    }
                }
            }
            want *= g.h() * g.h() * LN_2;
            let got = box_mass(&mu, &CarlesonBox::new(ball)).unwrap();
            assert!((got - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn band_mass_and_norm() {
        let g = grid(128, false);
        let t = 0.5;
        let mu = DensityBuiltin::Band { t_max: t }.sample(&g, t, 5).unwrap();
        let ball = Ball::new([0.1, 0.0, 0.0], t);
        let m = box_mass(&mu, &CarlesonBox::new(ball)).unwrap();
        let cells = g.count_in_ball(&ball) as f64;
        assert!((m - cells * g.h() * g.h() * LN_2).abs() < 1e-12);
        let fam = ball_family(&g, 8, &radii_up_to(&g, t)).unwrap();
        let norm = carleson_norm(&mu, &fam).unwrap();
        assert!((norm.value / LN_2 - 1.0).abs() < 0.05, "{}", norm.value);
        assert!(sc_class_check(&mu, &norm));
        assert!(matches!(
            box_mass(&mu, &CarlesonBox::new(Ball::new([0.0; 3], 0.6))),
            Err(Error::HeightExceeded { .. })
        ));
    }

    #[test]
    fn ones_diverges_with_depth() {
        let g = grid(128, true);
        let ball = Ball::new([0.0; 3], 0.5);
        let vol = g.count_in_ball(&ball) as f64 * g.h() * g.h();
        for depth in [2, 4, 6] {
            let mu = DensityBuiltin::Ones.sample(&g, 0.5, depth).unwrap();
            let m = box_mass(&mu, &CarlesonBox::new(ball)).unwrap();
            assert!((m - vol * (depth + 1) as f64 * LN_2).abs() < 1e-9);
        }
        let z = CarlesonDensity::zero(&g, 0.5, 3).unwrap();
        assert_eq!(box_mass(&z, &CarlesonBox::new(ball)).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity_and_zero_class() {
        let g = grid(64, true);
        let mu = DensityBuiltin::Ridge { axis: 1 }.sample(&g, 0.5, 3).unwrap();
        let fam = ball_family(&g, 4, &radii_up_to(&g, 0.5)).unwrap();
        let a = carleson_norm(&mu, &fam).unwrap().value;
        let b = carleson_norm(&mu.scaled(2.0).unwrap(), &fam).unwrap().value;
        assert!((b - 4.0 * a).abs() < 1e-12 * b);
        let z = CarlesonDensity::zero(&g, 0.5, 3).unwrap();
        assert!(sc_class_check(&z, &carleson_norm(&z, &fam).unwrap()));
    }

    #[test]
    fn localized_density_peaks_at_its_ball() {
        let g = grid(128, false);
        let t = 0.5;
        let depth = default_depth(&g, t);
        let b0 = Ball::new([0.0; 3], 0.125);
        let mu = DensityBuiltin::Localized { ball: b0 }.sample(&g, t, depth).unwrap();
        let fam = ball_family(&g, 4, &radii_up_to(&g, t)).unwrap();
        let norm = carleson_norm(&mu, &fam).unwrap();
        assert_eq!(norm.argmax_ball.radius, 0.125);
        assert!(norm.argmax_ball.center[0].abs() <= 4.0 * g.h());
        assert!(norm.argmax_ball.center[1].abs() <= 4.0 * g.h());
    }

    #[test]
    fn spike_is_out_of_class() {
        let g = grid(128, false);
        let t = 0.5;
        let depth = default_depth(&g, t);
        let spike = parse_density("spike", &g, t, depth).unwrap();
        let mu = spike.sample(&g, t, depth).unwrap();
        assert_eq!(mu.sup_norm(), 1.0);
        assert_eq!(mu.shell(depth).values().iter().filter(|&&v| v == 1.0).count(), 1);
        let fam = ball_family(&g, 4, &radii_up_to(&g, t)).unwrap();
        let norm = carleson_norm(&mu, &fam).unwrap();
        let rmin = fam.balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        let expect = g.h() * g.h() * LN_2 / (PI * rmin * rmin);
        assert!((norm.value - expect).abs() < 1e-12, "{} vs {expect}", norm.value);
        assert!(!sc_class_check(&mu, &norm));
    }

    #[test]
    fn identity_and_lattice_translation() {
        let g = grid(64, true);
        let mu = DensityBuiltin::Ridge { axis: 1 }.sample(&g, 0.5, 3).unwrap();
        assert_eq!(pullback(&mu, &identity(2)).unwrap(), mu);
        let fam = ball_family(&g, 4, &radii_up_to(&g, 0.5)).unwrap();
        let shift = translation([4.0 * g.h(), -8.0 * g.h(), 0.0]);
        let moved = pullback(&mu, &shift).unwrap();
        let a = carleson_norm(&mu, &fam).unwrap().value;
        let b = carleson_norm(&moved, &fam).unwrap().value;
        assert!((a - b).abs() < 1e-6 * a);
        for j in 0..=3 {
            assert!((mu.shell_mass(j) - moved.shell_mass(j)).abs() < 1e-9);
        }
    }

    #[test]
    fn pullback_preserves_shell_mass() {
        let g = grid(256, true);
        let mu = CarlesonDensity::from_fn(&g, 0.5, 3, |t, p| {
            (PI * p[0]).sin() * (PI * p[1]).cos() / (1.0 + t)
        })
        .unwrap();
        let m = crate::maps::integrate_flow(&crate::maps::VectorField::cellular(0.25), 0.5, 0.01)
            .unwrap()
            .map;
        let pulled = pullback(&mu, &m).unwrap();
        for j in 0..=3 {
            let (a, b) = (mu.shell_mass(j), pulled.shell_mass(j));
            assert!((a - b).abs() < 0.01 * a, "shell {j}: {a} vs {b}");
        }
    }

    /// The density form weighs `A` by `β` at `φ(A)`; the set form
    /// `μ(I × φ(A))` must agree for measure-preserving `φ`.
    #[test]
    fn density_form_matches_set_form_on_rectangles() {
        let g = grid(512, false);
        let beta = |_: f64, p: &Point| (2.0 * p[0]).cos() + p[1] * p[1];
        let mu = CarlesonDensity::from_fn(&g, 0.5, 0, beta).unwrap();
        let phi = shear(0.5, Profile::linear());
        let pulled = CarlesonDensity::from_fn(&g, 0.5, 0, |t, p| beta(t, &phi.forward(p))).unwrap();
        let in_rect = |p: &Point| p[0].abs() <= 0.3 && (p[1] - 0.1).abs() <= 0.2;
        let dv = g.h() * g.h();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for i in 0..g.len() {
            let c = g.center(i);
            if in_rect(&c) {
                lhs += pulled.shell(0).values()[i].powi(2) * dv;
            }
            if in_rect(&phi.inverse(&c)) {
                rhs += mu.shell(0).values()[i].powi(2) * dv;
            }
        }
        assert!((lhs - rhs).abs() < 0.01 * lhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn strain_pullback_of_ridge_grows_like_log_k() {
        let g = grid(512, false);
        let t = 0.25;
        let depth = default_depth(&g, t);
        let fam = ball_family(&g, 16, &radii_up_to(&g, t)).unwrap();
        let maps: Vec<BiLipMap> = [0.5, 1.0, 1.5, 2.0].iter().map(|&s| linear_strain(s)).collect();
        let rep = check_theorem4(Arc::new(DensityBuiltin::Ridge { axis: 1 }), &maps, &g, t, depth, &fam).unwrap();
        assert!(rep.ceiling_ok);
        assert!(rep.rows.windows(2).all(|w| w[1].excess > w[0].excess));
        let ys: Vec<f64> = rep.rows.iter().map(|r| r.excess).collect();
        let gs: Vec<f64> = rep.rows.iter().map(|r| r.k.ln()).collect();
        assert!(fit::bounded_ratio(&ys, &gs, 4.0), "{ys:?}");
        let id = check_theorem4(Arc::new(DensityBuiltin::Ridge { axis: 1 }), &[identity(2).with_lip(1.0, 1.0)], &g, t, depth, &fam).unwrap();
        assert!(id.rows[0].excess.abs() < 1e-12);
    }

    #[test]
    fn fourier_mode_peaks_near_its_wavelength() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 64).unwrap();
        let f = GridFunction::from_fn(g, |p| (2.0 * PI * p[0]).sin()).unwrap();
        let mu = bmo_to_carleson(&f, 2.0, 5).unwrap();
        let amp: Vec<f64> = (0..=5)
            .map(|j| mu.shell(j).values().iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let peak = (0..=5).max_by(|&a, &b| amp[a].total_cmp(&amp[b])).unwrap();
        assert!(peak > 0 && peak < 5, "{amp:?}");
        assert!((0.25..=2.0).contains(&mu.t(peak)));
        for j in 0..=5 {
            let t = mu.t(j);
            let u = t * t;
            let gain = (-u).exp() - (-4.0 * u).exp();
            for (b, v) in mu.shell(j).values().iter().zip(f.values()) {
                assert!((b - gain * v).abs() < 1e-12, "shell {j}");
            }
        }
        let z = bmo_to_carleson(&GridFunction::constant(g, 3.0).unwrap(), 1.0, 3).unwrap();
        assert!(z.sup_norm() < 1e-12);
        let np = Grid::new(Window::unit(2, false).unwrap(), 16).unwrap();
        assert!(matches!(
            bmo_to_carleson(&GridFunction::constant(np, 0.0).unwrap(), 1.0, 2),
            Err(Error::NonPeriodic)
        ));
    }

    /// Differences of two normalized scale-invariant kernels at the log
    /// singularity equal `log 2` in the continuum, whatever the kernel.
    #[test]
    fn log_function_density() {
        let g = Grid::new(Window::centered(2, 2.0, true).unwrap(), 256).unwrap();
        let f = Builtin::PeriodicLog { floor: 2.0 * g.h() }.sample(&g).unwrap();
        let t = 0.5;
        let mu = bmo_to_carleson(&f, t, default_depth(&g, t)).unwrap();
        assert!(mu.sup_norm() <= LN_2 && mu.sup_norm() > 0.9 * LN_2, "{}", mu.sup_norm());
        let fam = ball_family(&g, 8, &radii_up_to(&g, t)).unwrap();
        let norm = carleson_norm(&mu, &fam).unwrap();
        let s = seminorm(&f, &OscillationParams::bmo(2), &ball_family(&g, 8, &dyadic_radii(&g)).unwrap())
            .unwrap()
            .value;
        let q = norm.value / (s * s);
        assert!((0.1..=10.0).contains(&q), "norm {} seminorm {s}", norm.value);
        // sup/norm is about 16 here, so membership needs a constant above
        // the default 10; doubling g moves it in class.
        assert!(sc_class_check_with(&mu, &norm, 20.0));
        let doubled = mu.scaled(2.0).unwrap();
        let dn = carleson_norm(&doubled, &fam).unwrap();
        assert!(sc_class_check(&doubled, &dn));
    }

    #[test]
    fn csv_roundtrip() {
        let g = Grid::new(Window::centered(2, 2.0, false).unwrap(), 8).unwrap();
        let mu = CarlesonDensity::from_fn(&g, 0.5, 2, |t, p| t * p[0] - p[1] / 3.0).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&mu, &mut buf).unwrap();
        assert_eq!(read_density_csv(&buf[..]).unwrap(), mu);
        assert!(parse_density("ridge:axis=5", &g, 0.5, 2).is_err());
        assert!(parse_density("wave", &g, 0.5, 2).is_err());
    }
}
