//! Whitney covers of map images `φ(B)` and the covering sums built on them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domain::{distance_transform, DistanceField, Grid, PixelMask, Point, Ball};
use crate::error::{Error, Result};
use crate::maps::BiLipMap;
use crate::oscillation::rho;

/// Lower and upper bounds on `r_O / dist(O, Ω^c)` that a cover is checked
/// against.
pub const RATIO_MIN: f64 = 1.0 / 8.0;
pub const RATIO_MAX: f64 = 4.0;

/// Points on the sphere `∂B` used to bound the image of a ball.
fn boundary_samples(b: &Ball, d: usize) -> Vec<Point> {
    let c = b.center;
    let r = b.radius;
    match d {
        1 => vec![[c[0] - r, 0.0, 0.0], [c[0] + r, 0.0, 0.0]],
        2 => (0..8192)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 8192.0;
                [c[0] + r * th.cos(), c[1] + r * th.sin(), 0.0]
            })
            .collect(),
        _ => {
            let m = 256;
            let mut v = Vec::with_capacity(m * m);
            for i in 0..=m {
                let th = PI * i as f64 / m as f64;
                for j in 0..m {
                    let ph = 2.0 * PI * j as f64 / m as f64;
                    v.push([
                        c[0] + r * th.sin() * ph.cos(),
                        c[1] + r * th.sin() * ph.sin(),
                        c[2] + r * th.cos(),
                    ]);
                }
            }
            v
        }
    }
}

/// Cells `c` with `φ⁻¹(c) ∈ B`. Only a block around the sampled image of
/// `∂B` is evaluated on non-periodic grids.
pub fn image_mask(map: &BiLipMap, ball: &Ball, grid: &Grid) -> Result<PixelMask> {
    let d = grid.dim();
    let w = grid.window;
    let r2 = ball.radius * ball.radius;
    let inside = move |p: &Point| {
        let q = map.inverse(p);
        let off = w.displacement(&ball.center, &q);
        off[0] * off[0] + off[1] * off[1] + off[2] * off[2] <= r2
    };
    if w.periodic {
        return PixelMask::from_fn(*grid, inside);
    }
    let samples = boundary_samples(ball, d);
    let images: Vec<Point> = samples.par_iter().map(|p| map.forward(p)).collect();
    let h = grid.h();
    let mut lo = [0usize; 3];
    let mut shape = [1usize; 3];
    for a in 0..d {
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in &images {
            mn = mn.min(q[a]);
            mx = mx.max(q[a]);
        }
        if mn < w.lower[a] || mx > w.lower[a] + w.side {
            let mut witness = map.forward(&ball.center);
            witness[a] = if mn < w.lower[a] { mn } else { mx };
            return Err(Error::OutOfDomain(witness));
        }
        // Gaps between boundary samples, plus a few cells of slack.
        let i0 = ((mn - w.lower[a]) / h).floor() as i64 - 3;
        let i1 = ((mx - w.lower[a]) / h).ceil() as i64 + 3;
        let i0 = i0.max(0) as usize;
        let i1 = (i1.max(0) as usize).min(grid.n);
        lo[a] = i0;
        shape[a] = (i1 - i0).max(1);
    }
    PixelMask::from_fn_in(*grid, lo, shape, inside)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyCover {
    /// Inscribed balls of the accepted cubes, sorted by center.
    pub balls: Vec<Ball>,
    /// Conservative distance of each accepted cube to the complement.
    pub dists: Vec<f64>,
    /// `r_O / dist(O, Ω^c)` per ball.
    pub whitney_ratios: Vec<f64>,
    pub source_ball: Ball,
    pub map_name: String,
    pub dim: usize,
    /// Fraction of mask cells inside some accepted cube.
    pub cube_cover_fraction: f64,
    pub mask_cells: usize,
}

struct Accepted {
    corner: [usize; 3],
    side: usize,
    dist: f64,
}

struct Ctx<'a> {
    mask: &'a PixelMask,
    dt: &'a DistanceField,
    d: usize,
    h: f64,
    sqrt_d: f64,
}

impl Ctx<'_> {
    fn visit(&self, corner: [usize; 3], s: usize) -> Vec<Accepted> {
        let (o, sh) = (self.mask.origin(), self.mask.shape());
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        let mut whole = true;
        for a in 0..self.d {
            lo[a] = corner[a].max(o[a]);
            hi[a] = (corner[a] + s).min(o[a] + sh[a]);
            if lo[a] >= hi[a] {
                return Vec::new();
            }
            whole &= lo[a] == corner[a] && hi[a] == corner[a] + s;
        }
        let (mut any, mut all) = (false, whole);
        let mut min_dt = f64::INFINITY;
        'scan: for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    if self.mask.get([i, j, k]) {
                        any = true;
                        if all {
                            min_dt = min_dt.min(self.dt.get([i, j, k]));
                        }
                    } else {
                        all = false;
                    }
                    if any && !all {
                        break 'scan;
                    }
                }
            }
        }
        if !any {
            return Vec::new();
        }
        if all {
            let dist = min_dt - self.h * self.sqrt_d;
            if s as f64 * self.h * self.sqrt_d <= dist {
                return vec![Accepted { corner, side: s, dist }];
            }
        }
        if s == 1 {
            return Vec::new();
        }
        let half = s / 2;
        let children: Vec<[usize; 3]> = (0..1usize << self.d)
            .map(|c| {
                let mut q = corner;
                for a in 0..self.d {
                    if c >> a & 1 == 1 {
                        q[a] += half;
                    }
                }
                q
            })
            .collect();
        children
            .par_iter()
            .flat_map_iter(|q| self.visit(*q, half))
            .collect()
    }
}

/// Top-down dyadic stopping time: a cube is accepted when it lies in the
/// mask and its diameter is at most its conservative distance to the
/// complement (`min dist over its cells - h√d`). Accepted cubes also satisfy
/// `dist < 4 diam`, since their parent was rejected.
pub fn whitney_decompose(mask: &PixelMask) -> Result<WhitneyCover> {
    let grid = *mask.grid();
    let dt = distance_transform(mask)?;
    let d = grid.dim();
    let ctx = Ctx {
        mask,
        dt: &dt,
        d,
        h: grid.h(),
        sqrt_d: (d as f64).sqrt(),
    };
    let mut acc = ctx.visit([0; 3], grid.n);
    let h = grid.h();
    let center_of = |a: &Accepted| {
        let mut c = [0.0; 3];
        for k in 0..d {
            c[k] = grid.window.lower[k] + (a.corner[k] as f64 + a.side as f64 / 2.0) * h;
        }
        c
    };
    acc.sort_by(|x, y| {
        let (cx, cy) = (center_of(x), center_of(y));
        cx.partial_cmp(&cy).unwrap().then(x.side.cmp(&y.side))
    });
    let mask_cells = mask.count();
    let covered: usize = acc.iter().map(|a| a.side.pow(d as u32)).sum();
    let balls: Vec<Ball> = acc
        .iter()
        .map(|a| Ball::new(center_of(a), a.side as f64 * h / 2.0))
        .collect();
    let dists: Vec<f64> = acc.iter().map(|a| a.dist).collect();
    let whitney_ratios = balls.iter().zip(&dists).map(|(b, &dd)| b.radius / dd).collect();
    let vol = mask.area();
    let mut centroid = [0.0; 3];
    let cells = mask.set_cells();
    for c in &cells {
        let p = grid.center_of(*c);
        for k in 0..d {
            centroid[k] += p[k] / cells.len() as f64;
        }
    }
    let equal_volume = (vol / crate::domain::unit_ball_volume(d)).powf(1.0 / d as f64);
    Ok(WhitneyCover {
        balls,
        dists,
        whitney_ratios,
        source_ball: Ball::new(centroid, equal_volume),
        map_name: "mask".into(),
        dim: d,
        cube_cover_fraction: covered as f64 / mask_cells as f64,
        mask_cells,
    })
}

/// Whitney cover of `φ(B)` on `grid`.
pub fn image_cover(map: &BiLipMap, ball: &Ball, grid: &Grid) -> Result<(PixelMask, WhitneyCover)> {
    let mask = image_mask(map, ball, grid)?;
    let mut cover = whitney_decompose(&mask)?;
    cover.source_ball = *ball;
    cover.map_name = map.name.clone();
    Ok((mask, cover))
}

/// `(|B|⁻¹ Σ_k |O_k| ρ_a(r_B / r_k)^p)^{1/p}`.
pub fn covering_statistic(cover: &WhitneyCover, a: f64, p: f64) -> Result<f64> {
    let rb = cover.source_ball.radius;
    let vb = cover.source_ball.volume(cover.dim);
    let mut sum = 0.0;
    for b in &cover.balls {
        if b.radius > rb {
            return Err(Error::RadiusViolation {
                radius: b.radius,
                source_radius: rb,
            });
        }
        sum += b.volume(cover.dim) * rho(a, rb / b.radius)?.powf(p);
    }
    Ok((sum / vb).powf(1.0 / p))
}

/// Shell index `l` with `2^{-l} r_B <= r < 2^{-l+1} r_B`.
pub fn shell_index(r: f64, rb: f64) -> i64 {
    let mut l = (rb / r).log2().ceil() as i64;
    while r < rb * 2f64.powi(-l as i32) {
        l += 1;
    }
    while r >= rb * 2f64.powi(-(l as i32) + 1) {
        l -= 1;
    }
    l
}

/// `u_l`: total volume of the cover balls in radius shell `l`, ascending.
pub fn shell_histogram(cover: &WhitneyCover) -> Vec<(i64, f64)> {
    let rb = cover.source_ball.radius;
    let mut map = std::collections::BTreeMap::new();
    for b in &cover.balls {
        *map.entry(shell_index(b.radius, rb)).or_insert(0.0) += b.volume(cover.dim);
    }
    map.into_iter().collect()
}

/// `max_l u_l 2^l / (K |B|)`, the constant in the shell-mass bound.
pub fn shell_constant(cover: &WhitneyCover, k: f64) -> f64 {
    let vb = cover.source_ball.volume(cover.dim);
    shell_histogram(cover)
        .iter()
        .map(|&(l, u)| u * 2f64.powi(l as i32) / (k * vb))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    pub balls: usize,
    /// Smallest `|c_j - c_k| - r_j - r_k`; tangent balls give zero.
    pub min_gap: f64,
    pub disjoint: bool,
    /// Mask cells whose center lies in some doubled ball.
    pub double_cover_fraction: f64,
    pub cube_cover_fraction: f64,
    pub contained: bool,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratios_ok: bool,
    pub max_radius: f64,
    pub source_radius: f64,
    /// `Σ |O_k| / |B|`.
    pub mass_fraction: f64,
}

impl CoverReport {
    pub fn all_ok(&self, min_double_cover: f64) -> bool {
        self.disjoint
            && self.contained
            && self.ratios_ok
            && self.max_radius <= self.source_radius
            && self.double_cover_fraction >= min_double_cover
    }
}

/// Checks disjointness, double cover, containment and ratio bounds.
/// Balls are open, so tangent balls count as disjoint.
pub fn validate_cover(cover: &WhitneyCover, mask: &PixelMask) -> CoverReport {
    let grid = mask.grid();
    let h = grid.h();
    let d = cover.dim;
    let n = cover.balls.len();
    let mut order: Vec<usize> = (0..n).collect();
    let left = |b: &Ball| b.center[0] - b.radius;
    order.sort_by(|&i, &j| left(&cover.balls[i]).partial_cmp(&left(&cover.balls[j])).unwrap());
    let gaps: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|oi| {
            let bi = &cover.balls[order[oi]];
            let right = bi.center[0] + bi.radius;
            let mut gap = f64::INFINITY;
            for &j in &order[oi + 1..] {
                let bj = &cover.balls[j];
                if left(bj) > right {
                    break;
                }
                let off = grid.window.displacement(&bi.center, &bj.center);
                let dist = (off[0] * off[0] + off[1] * off[1] + off[2] * off[2]).sqrt();
                gap = gap.min(dist - bi.radius - bj.radius);
            }
            gap
        })
        .collect();
    let min_gap = gaps.into_iter().fold(f64::INFINITY, f64::min);
    let disjoint = min_gap >= -1e-12 * h;

    let (o, sh) = (mask.origin(), mask.shape());
    let idx = |c: [usize; 3]| (c[0] - o[0]) + sh[0] * ((c[1] - o[1]) + sh[1] * (c[2] - o[2]));
    let mut covered = vec![false; sh[0] * sh[1] * sh[2]];
    for b in &cover.balls {
        grid.for_each_cell_in_ball(&b.scaled(2.0), |g| {
            let c = grid.coords(g);
            if (0..3).all(|a| c[a] >= o[a] && c[a] < o[a] + sh[a]) {
                covered[idx(c)] = true;
            }
        });
    }
    let cells = mask.set_cells();
    let hit = cells.iter().filter(|&&c| covered[idx(c)]).count();
    let contained = cover
        .balls
        .iter()
        .zip(&cover.dists)
        .all(|(b, &dd)| b.radius < dd);
    let ratio_min = cover.whitney_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = cover.whitney_ratios.iter().copied().fold(0.0, f64::max);
    let max_radius = cover.balls.iter().map(|b| b.radius).fold(0.0, f64::max);
    let vb = cover.source_ball.volume(d);
    let mass: f64 = cover.balls.iter().map(|b| b.volume(d)).sum();
    CoverReport {
        balls: n,
        min_gap,
        disjoint,
        double_cover_fraction: hit as f64 / cells.len().max(1) as f64,
        cube_cover_fraction: cover.cube_cover_fraction,
        contained,
        ratio_min,
        ratio_max,
        ratios_ok: n > 0 && ratio_min >= RATIO_MIN && ratio_max <= RATIO_MAX,
        max_radius,
        source_radius: cover.source_ball.radius,
        mass_fraction: mass / vb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Window;
    use crate::maps::{identity, linear_strain, shear, Profile};

    fn unit(n: usize) -> Grid {
        Grid::new(Window::centered(2, 2.0, false).unwrap(), n).unwrap()
    }

    #[test]
    fn shell_indices() {
        assert_eq!(shell_index(1.0, 1.0), 0);
        assert_eq!(shell_index(0.5, 1.0), 1);
        assert_eq!(shell_index(0.6, 1.0), 1);
        assert_eq!(shell_index(0.49, 1.0), 2);
    }

    #[test]
    fn disk_cover() {
        let g = unit(512);
        let b = Ball::new([0.0; 3], 0.5);
        let (mask, cover) = image_cover(&identity(2), &b, &g).unwrap();
        let rep = validate_cover(&cover, &mask);
        assert!(rep.disjoint && rep.contained);
        assert!(rep.max_radius >= b.radius / 8.0);
        assert!(rep.double_cover_fraction >= 0.98, "{rep:?}");
        assert!(rep.ratio_max <= RATIO_MAX);
        let hist = shell_histogram(&cover);
        let total: f64 = hist.iter().map(|x| x.1).sum();
        let direct: f64 = cover.balls.iter().map(|x| x.volume(2)).sum();
        assert!((total - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn thin_rectangle_radii() {
        let g = unit(1024);
        let mask = PixelMask::from_fn(g, |p| p[0].abs() < 0.5 && p[1].abs() < 1.0 / 64.0).unwrap();
        let cover = whitney_decompose(&mask).unwrap();
        assert!(!cover.balls.is_empty());
        assert!(cover.balls.iter().all(|b| b.radius <= 1.0 / 64.0));
    }

    #[test]
    fn shear_mask_preserves_cell_count() {
        let g = unit(512);
        let b = Ball::new([0.0; 3], 0.15);
        let m0 = image_mask(&identity(2), &b, &g).unwrap().count() as f64;
        let m4 = image_mask(&shear(4.0, Profile::linear()), &b, &g).unwrap().count() as f64;
        assert!((m4 - m0).abs() / m0 < 0.01);
    }

    #[test]
    fn image_outside_window_is_rejected() {
        let g = unit(64);
        let b = Ball::new([0.0; 3], 0.5);
        assert!(matches!(
            image_mask(&linear_strain(2.0), &b, &g),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn statistic_rejects_oversized_balls() {
        let g = unit(256);
        let b = Ball::new([0.0; 3], 0.5);
        let (_, mut cover) = image_cover(&identity(2), &b, &g).unwrap();
        cover.source_ball.radius = 0.01;
        assert!(matches!(
            covering_statistic(&cover, 0.0, 1.0),
            Err(Error::RadiusViolation { .. })
        ));
    }
}
