use rayon::prelude::*;

use super::grid::{Grid, Point};
use crate::error::{Error, Result};

/// Boolean cell mask over a rectangular block of a grid. Cells outside the
/// block are unset, so a thin set on a very fine grid stays cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMask {
    grid: Grid,
    origin: [usize; 3],
    shape: [usize; 3],
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn from_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(&Point) -> bool + Sync,
    {
        PixelMask::from_fn_in(grid, [0; 3], grid.shape(), f)
    }

    /// Evaluates `f` only on the block `origin .. origin + shape`.
    pub fn from_fn_in<F>(grid: Grid, origin: [usize; 3], shape: [usize; 3], f: F) -> Result<Self>
    where
        F: Fn(&Point) -> bool + Sync,
    {
        let full = grid.shape();
        for a in 0..3 {
            if shape[a] == 0 || origin[a] + shape[a] > full[a] {
                return Err(Error::InvalidGrid(format!(
                    "mask block {origin:?}+{shape:?} exceeds grid {full:?}"
                )));
            }
        }
        if grid.window.periodic && shape != full {
            return Err(Error::InvalidGrid(
                "masks on a periodic grid must cover the whole grid".into(),
            ));
        }
        let len = shape[0] * shape[1] * shape[2];
        let bits = (0..len)
            .into_par_iter()
            .map(|l| {
                let ijk = [
                    origin[0] + l % shape[0],
                    origin[1] + (l / shape[0]) % shape[1],
                    origin[2] + l / (shape[0] * shape[1]),
                ];
                f(&grid.center_of(ijk))
            })
            .collect();
        Ok(PixelMask {
            grid,
            origin,
            shape,
            bits,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn origin(&self) -> [usize; 3] {
        self.origin
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    fn local(&self, ijk: [usize; 3]) -> Option<usize> {
        let mut l = [0usize; 3];
        for a in 0..3 {
            if ijk[a] < self.origin[a] || ijk[a] >= self.origin[a] + self.shape[a] {
                return None;
            }
            l[a] = ijk[a] - self.origin[a];
        }
        Some(l[0] + self.shape[0] * (l[1] + self.shape[1] * l[2]))
    }

    pub fn get(&self, ijk: [usize; 3]) -> bool {
        self.local(ijk).is_some_and(|l| self.bits[l])
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.h().powi(self.grid.dim() as i32)
    }

    /// Global coordinates of every set cell, in storage order.
    pub fn set_cells(&self) -> Vec<[usize; 3]> {
        let s = self.shape;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(l, _)| {
                [
                    self.origin[0] + l % s[0],
                    self.origin[1] + (l / s[0]) % s[1],
                    self.origin[2] + l / (s[0] * s[1]),
                ]
            })
            .collect()
    }

    /// Smallest block containing every set cell, if any.
    pub fn bounding_block(&self) -> Option<([usize; 3], [usize; 3])> {
        let cells = self.set_cells();
        if cells.is_empty() {
            return None;
        }
        let mut lo = [usize::MAX; 3];
        let mut hi = [0; 3];
        for c in &cells {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        Some((lo, [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1]))
    }
}

/// Euclidean distance from each cell center in a mask block to the nearest
/// unset cell center. On a non-periodic grid the cells just beyond the
/// window count as unset.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    grid: Grid,
    origin: [usize; 3],
    shape: [usize; 3],
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn origin(&self) -> [usize; 3] {
        self.origin
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    /// Distance at a global cell; zero outside the stored block.
    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        let mut l = [0usize; 3];
        for a in 0..3 {
            if ijk[a] < self.origin[a] || ijk[a] >= self.origin[a] + self.shape[a] {
                return 0.0;
            }
            l[a] = ijk[a] - self.origin[a];
        }
        self.dist[l[0] + self.shape[0] * (l[1] + self.shape[1] * l[2])]
    }

    pub fn max(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }
}

pub fn distance_transform(mask: &PixelMask) -> Result<DistanceField> {
    let count = mask.count();
    if count == 0 {
        return Err(Error::DegenerateMask("mask is empty"));
    }
    if count == mask.grid.len() {
        return Err(Error::DegenerateMask("mask is full"));
    }
    let shape = mask.shape;
    let periodic = mask.grid.window.periodic;
    let mut sq: Vec<f64> = mask
        .bits
        .iter()
        .map(|&b| if b { f64::INFINITY } else { 0.0 })
        .collect();
    for axis in 0..mask.grid.dim() {
        sq = transform_axis(&sq, shape, axis, periodic);
    }
    let h = mask.grid.h();
    let dist = sq.into_iter().map(|s| s.sqrt() * h).collect();
    Ok(DistanceField {
        grid: mask.grid,
        origin: mask.origin,
        shape,
        dist,
    })
}

fn transform_axis(src: &[f64], shape: [usize; 3], axis: usize, periodic: bool) -> Vec<f64> {
    let stride = match axis {
        0 => 1,
        1 => shape[0],
        _ => shape[0] * shape[1],
    };
    let len = shape[axis];
    let starts: Vec<usize> = (0..src.len())
        .filter(|&l| (l / stride) % len == 0)
        .collect();
    let lines: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let line: Vec<f64> = (0..len).map(|k| src[s + k * stride]).collect();
            envelope_1d(&line, periodic)
        })
        .collect();
    let mut out = vec![0.0; src.len()];
    for (s, line) in starts.iter().zip(lines) {
        for (k, v) in line.into_iter().enumerate() {
            out[s + k * stride] = v;
        }
    }
    out
}

/// One-dimensional squared distance transform by the lower envelope of
/// parabolas. Non-periodic lines are padded with zero samples at both ends;
/// periodic lines see their neighbouring images.
fn envelope_1d(f: &[f64], periodic: bool) -> Vec<f64> {
    let len = f.len() as i64;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(f.len() + 2);
    if periodic {
        for shift in [-len, 0, len] {
            for (i, &v) in f.iter().enumerate() {
                if v.is_finite() {
                    samples.push(((i as i64 + shift) as f64, v));
                }
            }
        }
    } else {
        samples.push((-1.0, 0.0));
        for (i, &v) in f.iter().enumerate() {
            if v.is_finite() {
                samples.push((i as f64, v));
            }
        }
        samples.push((len as f64, 0.0));
    }
    if samples.is_empty() {
        return vec![f64::INFINITY; f.len()];
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    let mut starts: Vec<f64> = Vec::with_capacity(samples.len());
    for &(p, v) in &samples {
        loop {
            match hull.last() {
                None => {
                    hull.push((p, v));
                    starts.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&(q, w)) => {
                    let s = ((v + p * p) - (w + q * q)) / (2.0 * (p - q));
                    if s <= *starts.last().unwrap() {
                        hull.pop();
                        starts.pop();
                    } else {
                        hull.push((p, v));
                        starts.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(f.len());
    let mut k = 0;
    for i in 0..f.len() {
        let x = i as f64;
        while k + 1 < hull.len() && starts[k + 1] <= x {
            k += 1;
        }
        let (p, v) = hull[k];
        out.push((x - p) * (x - p) + v);
    }
    out
}
