use super::grid::{Ball, Grid, Point};
use crate::error::{Error, Result};

/// Real values sampled at the cell centers of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(&Point) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        GridFunction::new(grid, values)
    }

    pub fn try_from_fn<F: Fn(&Point) -> Result<f64>>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.center(i)))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        GridFunction::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete `L^p` norm with cell volume weights.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let dv = self.grid.h().powi(self.grid.dim() as i32);
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let dv = self.grid.h().powi(self.grid.dim() as i32);
        (self.values.iter().map(|v| v * v).sum::<f64>() * dv).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fractional cell coordinate of `p` along `axis` (cell centers sit at
    /// integers).
    fn frac(&self, axis: usize, p: &Point) -> f64 {
        (p[axis] - self.grid.window.lower[axis]) / self.grid.h() - 0.5
    }

    fn check_inside(&self, p: &Point) -> Result<()> {
        let w = &self.grid.window;
        if !w.periodic {
            let tol = 1e-9 * w.side;
            for a in 0..w.dim {
                if p[a] < w.lower[a] - tol || p[a] > w.lower[a] + w.side + tol {
                    return Err(Error::OutOfDomain(*p));
                }
            }
        }
        Ok(())
    }

    fn fetch(&self, idx: [i64; 3]) -> f64 {
        let n = self.grid.n as i64;
        let d = self.grid.dim();
        let mut ijk = [0usize; 3];
        for a in 0..d {
            ijk[a] = if self.grid.window.periodic {
                idx[a].rem_euclid(n) as usize
            } else {
                idx[a].clamp(0, n - 1) as usize
            };
        }
        self.values[self.grid.index(ijk)]
    }

    /// Multilinear interpolation at `p`. Exact at cell centers. Within the
    /// outer half-cell of a non-periodic window the nearest value is held.
    pub fn interpolate(&self, p: &Point) -> Result<f64> {
        self.check_inside(p)?;
        let d = self.grid.dim();
        let mut base = [0i64; 3];
        let mut w = [0.0; 3];
        for a in 0..d {
            let u = self.frac(a, p);
            let f = u.floor();
            base[a] = f as i64;
            w[a] = u - f;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut idx = base;
            for a in 0..d {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    weight *= w[a];
                } else {
                    weight *= 1.0 - w[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.fetch(idx);
            }
        }
        Ok(acc)
    }

    /// Tensor-product four-point Lagrange interpolation; exact for cubic
    /// polynomials away from non-periodic edges.
    pub fn interpolate_cubic(&self, p: &Point) -> Result<f64> {
        self.check_inside(p)?;
        let d = self.grid.dim();
        let mut base = [0i64; 3];
        let mut wts = [[0.0; 4]; 3];
        for a in 0..d {
            let u = self.frac(a, p);
            let f = u.floor();
            base[a] = f as i64 - 1;
            wts[a] = lagrange4(u - f);
        }
        let mut acc = 0.0;
        let reps = 4usize.pow(d as u32);
        for corner in 0..reps {
            let mut weight = 1.0;
            let mut idx = base;
            let mut c = corner;
            for a in 0..d {
                let o = c % 4;
                c /= 4;
                idx[a] += o as i64;
                weight *= wts[a][o];
            }
            acc += weight * self.fetch(idx);
        }
        Ok(acc)
    }
}

/// Lagrange weights for nodes -1, 0, 1, 2 evaluated at `s` in [0, 1).
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Mean of `f` over the cell centers inside `b`.
pub fn ball_average(f: &GridFunction, b: &Ball) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    f.grid.for_each_cell_in_ball(b, |i| {
        sum += f.values[i];
        count += 1;
    });
    if count == 0 {
        return Err(Error::EmptyBall {
            center: b.center,
            radius: b.radius,
        });
    }
    Ok(sum / count as f64)
}

/// `L^p` mean deviation from the ball average.
pub fn ball_oscillation(f: &GridFunction, b: &Ball, p: f64) -> Result<f64> {
    let cells = f.grid.cells_in_ball(b);
    if cells.is_empty() {
        return Err(Error::EmptyBall {
            center: b.center,
            radius: b.radius,
        });
    }
    Ok(oscillation_of(&f.values, &cells, p))
}

pub(crate) fn oscillation_of(values: &[f64], cells: &[usize], p: f64) -> f64 {
    let k = cells.len() as f64;
    let avg = cells.iter().map(|&i| values[i]).sum::<f64>() / k;
    let s = if p == 1.0 {
        cells.iter().map(|&i| (values[i] - avg).abs()).sum::<f64>() / k
    } else if p == 2.0 {
        let m = cells.iter().map(|&i| (values[i] - avg).powi(2)).sum::<f64>() / k;
        return m.sqrt();
    } else {
        let m = cells
            .iter()
            .map(|&i| (values[i] - avg).abs().powf(p))
            .sum::<f64>()
            / k;
        return m.powf(1.0 / p);
    };
    s
}

/// Finite set of balls standing in for "all balls" in a supremum.
///
/// Centers sit at `window center + k * stride * h`, so halving the stride
/// only adds balls and the family is symmetric under the window's
/// isometries. On a non-periodic window only balls fully inside are kept,
/// which makes every sup over the family a lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    pub stride: usize,
    pub radii: Vec<f64>,
    pub balls: Vec<Ball>,
}

impl BallFamily {
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn describe(&self) -> String {
        let radii: Vec<String> = self.radii.iter().map(|r| format!("{r}")).collect();
        format!(
            "stride={} radii={} balls={}",
            self.stride,
            radii.join(";"),
            self.balls.len()
        )
    }

    /// Keeps the balls satisfying `keep`.
    pub fn filter<F: Fn(&Ball) -> bool>(&self, keep: F) -> BallFamily {
        BallFamily {
            stride: self.stride,
            radii: self.radii.clone(),
            balls: self.balls.iter().copied().filter(|b| keep(b)).collect(),
        }
    }
}

pub fn ball_family(grid: &Grid, stride: usize, radii: &[f64]) -> Result<BallFamily> {
    let h = grid.h();
    let w = &grid.window;
    let (min, max) = (4.0 * h, w.side / 2.0);
    if stride == 0 || stride > grid.n {
        return Err(Error::InvalidGrid(format!(
            "stride {stride} not in 1..={}",
            grid.n
        )));
    }
    for &r in radii {
        if !(r >= min * (1.0 - 1e-12) && r <= max * (1.0 + 1e-12)) {
            return Err(Error::BadRadius {
                radius: r,
                min,
                max,
            });
        }
    }
    let m = (grid.n / stride) as i64;
    let k0 = -(m / 2);
    let d = grid.dim();
    let center = w.center();
    let step = stride as f64 * h;
    let mut offsets = vec![[0i64; 3]];
    for a in 0..d {
        let mut next = Vec::with_capacity(offsets.len() * m as usize);
        for k in k0..k0 + m {
            for o in &offsets {
                let mut q = *o;
                q[a] = k;
                next.push(q);
            }
        }
        offsets = next;
    }
    let mut balls = Vec::new();
    for &r in radii {
        for o in &offsets {
            let mut c = [0.0; 3];
            for a in 0..d {
                c[a] = center[a] + o[a] as f64 * step;
            }
            let b = Ball::new(c, r);
            if w.contains_ball(&b) {
                balls.push(b);
            }
        }
    }
    Ok(BallFamily {
        stride,
        radii: radii.to_vec(),
        balls,
    })
}

/// Radii `4h * 2^k` up to half the window side.
pub fn dyadic_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.h();
    let mut out = Vec::new();
    let mut r = 4.0 * h;
    while r <= grid.window.side / 2.0 * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::grid::Window;
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new(Window::unit(2, false).unwrap(), n).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let g = unit(8);
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(GridFunction::new(g, v), Err(Error::NonFinite(5))));
    }

    #[test]
    fn average_of_constant_and_linear() {
        let g = unit(64);
        let f = GridFunction::constant(g, 5.0).unwrap();
        let b = Ball::new([0.3, 0.6, 0.0], 0.1);
        assert_eq!(ball_average(&f, &b).unwrap(), 5.0);
        let x = GridFunction::from_fn(g, |p| p[0]).unwrap();
        let b = Ball::new([0.5, 0.5, 0.0], 0.5);
        assert!((ball_average(&x, &b).unwrap() - 0.5).abs() <= g.h());
    }

    #[test]
    fn empty_ball_is_an_error() {
        let g = unit(8);
        let f = GridFunction::constant(g, 1.0).unwrap();
        let b = Ball::new([0.5, 0.5, 0.0], 0.01);
        assert!(matches!(ball_average(&f, &b), Err(Error::EmptyBall { .. })));
        assert!(matches!(
            ball_oscillation(&f, &b, 1.0),
            Err(Error::EmptyBall { .. })
        ));
    }

    #[test]
    fn half_space_indicator_oscillation() {
        let g = unit(256);
        let f = GridFunction::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let b = Ball::new([0.5, 0.5, 0.0], 0.25);
        let o = ball_oscillation(&f, &b, 1.0).unwrap();
        assert!((o - 0.5).abs() <= 2.0 * g.h() / b.radius);
        assert!(ball_oscillation(&f, &b, 2.0).unwrap() >= o);
    }

    #[test]
    fn family_counts() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 64).unwrap();
        let fam = ball_family(&g, 8, &[1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0]).unwrap();
        assert_eq!(fam.len(), 192);
        let one = ball_family(&g, 64, &[0.25]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.balls[0].center, [0.5, 0.5, 0.0]);
    }

    #[test]
    fn family_rejects_small_radius() {
        let g = unit(64);
        assert!(matches!(
            ball_family(&g, 4, &[2.0 / 64.0]),
            Err(Error::BadRadius { .. })
        ));
    }

    #[test]
    fn refining_stride_only_adds_balls() {
        let g = unit(64);
        let radii = [1.0 / 16.0, 1.0 / 8.0];
        let coarse = ball_family(&g, 16, &radii).unwrap();
        let fine = ball_family(&g, 8, &radii).unwrap();
        assert!(coarse.len() < fine.len());
        for b in &coarse.balls {
            assert!(fine.balls.contains(b));
        }
    }

    #[test]
    fn interpolation_exact_at_nodes_and_linear() {
        let g = Grid::new(Window::centered(2, 2.0, false).unwrap(), 16).unwrap();
        let f = GridFunction::from_fn(g, |p| 3.0 * p[0] - 2.0 * p[1] + 0.5).unwrap();
        for idx in [0, 17, 100, 255] {
            let c = g.center(idx);
            assert_eq!(f.interpolate(&c).unwrap(), f.values()[idx]);
            assert_eq!(f.interpolate_cubic(&c).unwrap(), f.values()[idx]);
        }
        let p = [0.123, -0.456, 0.0];
        let want = 3.0 * p[0] - 2.0 * p[1] + 0.5;
        assert!((f.interpolate(&p).unwrap() - want).abs() < 1e-12);
        assert!((f.interpolate_cubic(&p).unwrap() - want).abs() < 1e-12);
        assert!(matches!(
            f.interpolate(&[1.5, 0.0, 0.0]),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn cubic_reproduces_cubics_on_torus() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 32).unwrap();
        let f = GridFunction::from_fn(g, |p| (2.0 * std::f64::consts::PI * p[0]).sin()).unwrap();
        let p = [0.3141, 0.2718, 0.0];
        let want = (2.0 * std::f64::consts::PI * p[0]).sin();
        let lin = (f.interpolate(&p).unwrap() - want).abs();
        let cub = (f.interpolate_cubic(&p).unwrap() - want).abs();
        assert!(cub < lin / 10.0);
        assert!(f.interpolate(&[1.3141, -0.7282, 0.0]).is_ok());
    }
}
