//! Fourier multipliers on periodic grids.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::domain::{Grid, GridFunction};
use crate::error::{Error, Result};

/// Frequency (cycles per unit length) of FFT bin `k` on `n` points over
/// length `side`.
pub fn frequency(k: usize, n: usize, side: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k / side
}

fn transform(data: &mut [Complex64], grid: &Grid, inverse: bool) {
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for axis in 0..grid.dim() {
        if axis == 0 {
            data.par_chunks_mut(n).for_each(|row| fft.process(row));
            continue;
        }
        let stride = n.pow(axis as u32);
        let starts: Vec<usize> = (0..data.len()).filter(|&l| (l / stride) % n == 0).collect();
        let lines: Vec<Vec<Complex64>> = starts
            .par_iter()
            .map(|&s| {
                let mut line: Vec<Complex64> = (0..n).map(|k| data[s + k * stride]).collect();
                fft.process(&mut line);
                line
            })
            .collect();
        for (s, line) in starts.iter().zip(lines) {
            for (k, v) in line.into_iter().enumerate() {
                data[s + k * stride] = v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

/// Forward transform of the samples of `f`.
pub fn forward(f: &GridFunction) -> Result<Vec<Complex64>> {
    if !f.grid().window.periodic {
        return Err(Error::NonPeriodic);
    }
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut data, f.grid(), false);
    Ok(data)
}

/// Inverse transform; returns the real part and the largest imaginary part.
pub fn inverse(grid: &Grid, mut data: Vec<Complex64>) -> Result<(GridFunction, f64)> {
    transform(&mut data, grid, true);
    let imag = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let f = GridFunction::new(*grid, data.into_iter().map(|c| c.re).collect())?;
    Ok((f, imag))
}

/// Symbol values `m(ξ)` on the FFT lattice, in storage order.
pub fn symbol<M: Fn(&[f64; 3]) -> f64 + Sync>(grid: &Grid, m: M) -> Vec<f64> {
    let side = grid.window.side;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let c = grid.coords(idx);
            let mut xi = [0.0; 3];
            for a in 0..grid.dim() {
                xi[a] = frequency(c[a], grid.n, side);
            }
            m(&xi)
        })
        .collect()
}

/// Applies a real, even multiplier given by its values on the lattice.
pub fn apply_symbol(f: &GridFunction, sym: &[f64]) -> Result<(GridFunction, f64)> {
    let mut data = forward(f)?;
    data.par_iter_mut().zip(sym.par_iter()).for_each(|(v, &m)| *v *= m);
    inverse(f.grid(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Window;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_and_shift() {
        let g = Grid::new(Window::unit(2, true).unwrap(), 16).unwrap();
        let f = GridFunction::from_fn(g, |p| (2.0 * PI * (p[0] + 2.0 * p[1])).cos() + p[0]).unwrap();
        let (back, imag) = inverse(&g, forward(&f).unwrap()).unwrap();
        assert!(imag < 1e-12);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(frequency(9, 16, 2.0), -3.5);
    }

    #[test]
    fn non_periodic_rejected() {
        let g = Grid::new(Window::unit(2, false).unwrap(), 16).unwrap();
        let f = GridFunction::constant(g, 1.0).unwrap();
        assert!(matches!(forward(&f), Err(Error::NonPeriodic)));
    }
}
