use crate::error::{Error, Result};

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

/// Computational window: an axis-aligned cube `lower + [0, side)^d`,
/// optionally a torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub dim: usize,
    pub lower: Point,
    pub side: f64,
    pub periodic: bool,
}

impl Window {
    pub fn new(dim: usize, lower: Point, side: f64, periodic: bool) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidGrid(format!("side {side} must be positive")));
        }
        let mut lo = [0.0; 3];
        lo[..dim].copy_from_slice(&lower[..dim]);
        Ok(Window {
            dim,
            lower: lo,
            side,
            periodic,
        })
    }

    /// `[-side/2, side/2)^d`.
    pub fn centered(dim: usize, side: f64, periodic: bool) -> Result<Self> {
        Window::new(dim, [-side / 2.0; 3], side, periodic)
    }

    /// `[0, 1)^d`.
    pub fn unit(dim: usize, periodic: bool) -> Result<Self> {
        Window::new(dim, [0.0; 3], 1.0, periodic)
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for a in 0..self.dim {
            c[a] = self.lower[a] + self.side / 2.0;
        }
        c
    }

    pub fn diam(&self) -> f64 {
        self.side * (self.dim as f64).sqrt()
    }

    /// Displacement `b - a`, using the minimal image on a torus.
    pub fn displacement(&self, a: &Point, b: &Point) -> Point {
        let mut d = [0.0; 3];
        for k in 0..self.dim {
            let mut x = b[k] - a[k];
            if self.periodic {
                x -= self.side * (x / self.side).round();
            }
            d[k] = x;
        }
        d
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        norm(&self.displacement(a, b))
    }

    /// Wraps a point into the fundamental domain (identity when not periodic).
    pub fn wrap(&self, p: &Point) -> Point {
        let mut q = *p;
        if self.periodic {
            for k in 0..self.dim {
                let u = (p[k] - self.lower[k]).rem_euclid(self.side);
                q[k] = self.lower[k] + u;
            }
        }
        q
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.periodic
            || (0..self.dim).all(|k| p[k] >= self.lower[k] && p[k] <= self.lower[k] + self.side)
    }

    /// True when the closed ball lies inside the (non-periodic) window.
    pub fn contains_ball(&self, b: &Ball) -> bool {
        self.periodic
            || (0..self.dim).all(|k| {
                b.center[k] - b.radius >= self.lower[k]
                    && b.center[k] + b.radius <= self.lower[k] + self.side
            })
    }
}

pub fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {d}"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn volume(&self, dim: usize) -> f64 {
        unit_ball_volume(dim) * self.radius.powi(dim as i32)
    }

    pub fn scaled(&self, lambda: f64) -> Ball {
        Ball::new(self.center, self.radius * lambda)
    }
}

/// Uniform cell-centered grid with `n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub window: Window,
    pub n: usize,
}

impl Grid {
    pub fn new(window: Window, n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= 8"
            )));
        }
        Ok(Grid { window, n })
    }

    pub fn dim(&self) -> usize {
        self.window.dim
    }

    pub fn h(&self) -> f64 {
        self.window.side / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis extents, padded with 1 above the grid dimension.
    pub fn shape(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for a in 0..self.dim() {
            s[a] = self.n;
        }
        s
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n * (ijk[1] + self.n * ijk[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        let mut c = [idx % n, (idx / n) % n, idx / (n * n)];
        for a in self.dim()..3 {
            c[a] = 0;
        }
        c
    }

    /// Coordinate of the cell center along one axis; `i` may lie outside
    /// `0..n` for unwrapped periodic images.
    pub fn node(&self, axis: usize, i: i64) -> f64 {
        self.window.lower[axis] + (i as f64 + 0.5) * self.h()
    }

    pub fn center(&self, idx: usize) -> Point {
        self.center_of(self.coords(idx))
    }

    pub fn center_of(&self, ijk: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = self.node(a, ijk[a] as i64);
        }
        p
    }

    /// Calls `f(index)` for every cell whose center lies in the closed ball.
    /// On a torus each cell is visited at most once, at its nearest image.
    pub fn for_each_cell_in_ball<F: FnMut(usize)>(&self, ball: &Ball, mut f: F) {
        let d = self.dim();
        let h = self.h();
        let n = self.n as i64;
        let r2 = ball.radius * ball.radius;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..d {
            let c = (ball.center[a] - self.window.lower[a]) / h - 0.5;
            let rr = ball.radius / h;
            let mut l = (c - rr).ceil() as i64;
            let mut u = (c + rr).floor() as i64;
            if self.window.periodic {
                if u - l + 1 > n {
                    l = (c - n as f64 / 2.0).ceil() as i64;
                    u = l + n - 1;
                }
            } else {
                l = l.max(0);
                u = u.min(n - 1);
            }
            lo[a] = l;
            hi[a] = u;
        }
        let wrap = |i: i64| i.rem_euclid(n) as usize;
        for k in lo[2]..=hi[2] {
            let dz = if d > 2 {
                self.node(2, k) - ball.center[2]
            } else {
                0.0
            };
            for j in lo[1]..=hi[1] {
                let dy = if d > 1 {
                    self.node(1, j) - ball.center[1]
                } else {
                    0.0
                };
                let base2 = dz * dz + dy * dy;
                if base2 > r2 {
                    continue;
                }
                for i in lo[0]..=hi[0] {
                    let dx = self.node(0, i) - ball.center[0];
                    if dx * dx + base2 <= r2 {
                        let idx = wrap(i) + self.n * (wrap(j) + self.n * wrap(k));
                        f(idx);
                    }
                }
            }
        }
    }

    /// The cells of [`Grid::for_each_cell_in_ball`] grouped into runs along
    /// the first axis: `f(row, lo, hi)` covers the cells `lo..=hi` (already
    /// wrapped, `lo <= hi`) of the row `j + n·k`.
    pub fn for_each_run_in_ball<F: FnMut(usize, usize, usize)>(&self, ball: &Ball, mut f: F) {
        let d = self.dim();
        let h = self.h();
        let n = self.n as i64;
        let r2 = ball.radius * ball.radius;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..d {
            let c = (ball.center[a] - self.window.lower[a]) / h - 0.5;
            let rr = ball.radius / h;
            let mut l = (c - rr).ceil() as i64;
            let mut u = (c + rr).floor() as i64;
            if self.window.periodic {
                if u - l + 1 > n {
                    l = (c - n as f64 / 2.0).ceil() as i64;
                    u = l + n - 1;
                }
            } else {
                l = l.max(0);
                u = u.min(n - 1);
            }
            lo[a] = l;
            hi[a] = u;
        }
        let wrap = |i: i64| i.rem_euclid(n) as usize;
        let cx = (ball.center[0] - self.window.lower[0]) / h - 0.5;
        for k in lo[2]..=hi[2] {
            let dz = if d > 2 {
                self.node(2, k) - ball.center[2]
            } else {
                0.0
            };
            for j in lo[1]..=hi[1] {
                let dy = if d > 1 {
                    self.node(1, j) - ball.center[1]
                } else {
                    0.0
                };
                let base2 = dz * dz + dy * dy;
                if base2 > r2 {
                    continue;
                }
                let inside = |i: i64| {
                    let dx = self.node(0, i) - ball.center[0];
                    dx * dx + base2 <= r2
                };
                let w = (r2 - base2).sqrt() / h;
                let mut l = ((cx - w).ceil() as i64).max(lo[0]);
                let mut u = ((cx + w).floor() as i64).min(hi[0]);
                while l <= u && !inside(l) {
                    l += 1;
                }
                while l > lo[0] && inside(l - 1) {
                    l -= 1;
                }
                while u >= l && !inside(u) {
                    u -= 1;
                }
                while u < hi[0] && inside(u + 1) {
                    u += 1;
                }
                if l > u {
                    continue;
                }
                let row = wrap(j) + self.n * wrap(k);
                let (a, b) = (wrap(l), wrap(u));
                if a <= b && u - l < n {
                    f(row, a, b);
                } else {
                    f(row, a, self.n - 1);
                    f(row, 0, b);
                }
            }
        }
    }

    pub fn cells_in_ball(&self, ball: &Ball) -> Vec<usize> {
        let mut v = Vec::new();
        self.for_each_cell_in_ball(ball, |i| v.push(i));
        v
    }

    pub fn count_in_ball(&self, ball: &Ball) -> usize {
        let mut c = 0;
        self.for_each_cell_in_ball(ball, |_| c += 1);
        c
    }

    /// Same window at a different resolution.
    pub fn with_n(&self, n: usize) -> Result<Grid> {
        Grid::new(self.window, n)
    }
}
