//! Fixtures shared by the benchmarks.

use oscillab::corpus::Builtin;
use oscillab::domain::{ball_family, dyadic_radii, BallFamily, Grid, GridFunction, PixelMask, Window};

pub fn square(n: usize, periodic: bool) -> Grid {
    Grid::new(Window::centered(2, 2.0, periodic).expect("valid window"), n).expect("valid grid")
}

pub fn log_field(g: &Grid) -> GridFunction {
    Builtin::log_radial(2.0 * g.h()).sample(g).expect("sampled")
}

pub fn family(g: &Grid, stride: usize) -> BallFamily {
    ball_family(g, stride, &dyadic_radii(g)).expect("family")
}

/// Disk of radius 0.6 with a slit cut out along the positive x axis.
pub fn slit_disk(g: &Grid) -> PixelMask {
    PixelMask::from_fn(*g, |p| p[0].hypot(p[1]) < 0.6 && !(p[0] > 0.0 && p[1].abs() < 0.02)).expect("mask")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let g = square(32, false);
        assert_eq!(log_field(&g).values().len(), 32 * 32);
        assert!(!family(&g, 4).is_empty());
        assert!(slit_disk(&g).count() > 0);
    }
}
