use proptest::prelude::*;

use oscillab::carleson::{box_mass, CarlesonBox, CarlesonDensity};
use oscillab::domain::{
    ball_average, ball_family, distance_transform, dyadic_radii, Ball, Grid, GridFunction, PixelMask, Window,
};
use oscillab::fit::{fit_affine, fit_exponential, fit_log, fit_power};
use oscillab::maps::translation;
use oscillab::oscillation::{composition_ratio, seminorm, OscillationParams};
use oscillab::sweep::SweepSpec;
use oscillab::whitney::{validate_cover, whitney_decompose};

fn grid(n: usize, periodic: bool) -> Grid {
    Grid::new(Window::centered(2, 2.0, periodic).unwrap(), n).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seminorm_ignores_constants_and_scales(v in values(32 * 32), c in -50.0..50.0f64, alpha in -4.0..4.0f64, a in 0.0..1.0f64) {
        let g = grid(32, false);
        let fam = ball_family(&g, 4, &dyadic_radii(&g)).unwrap();
        let params = OscillationParams::new(1.5, a, 2).unwrap();
        let f = GridFunction::new(g, v).unwrap();
        let s = seminorm(&f, &params, &fam).unwrap().value;
        let shifted = seminorm(&f.map(|x| x + c).unwrap(), &params, &fam).unwrap().value;
        let scaled = seminorm(&f.map(|x| alpha * x).unwrap(), &params, &fam).unwrap().value;
        prop_assert!(close(s, shifted, 1e-9));
        prop_assert!(close(alpha.abs() * s, scaled, 1e-9));
    }

    #[test]
    fn ball_average_is_linear(u in values(32 * 32), w in values(32 * 32), a in -3.0..3.0f64, b in -3.0..3.0f64,
                              cx in -0.5..0.5f64, cy in -0.5..0.5f64, r in 0.3..0.5f64) {
        let g = grid(32, false);
        let (f1, f2) = (GridFunction::new(g, u.clone()).unwrap(), GridFunction::new(g, w.clone()).unwrap());
        let comb = GridFunction::new(g, u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let ball = Ball::new([cx, cy, 0.0], r);
        let lhs = ball_average(&comb, &ball).unwrap();
        let rhs = a * ball_average(&f1, &ball).unwrap() + b * ball_average(&f2, &ball).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn lattice_translation_is_exact_on_torus(v in values(32 * 32), i in -8i32..8, j in -8i32..8) {
        let g = grid(32, true);
        let fam = ball_family(&g, 4, &dyadic_radii(&g)).unwrap();
        let f = GridFunction::new(g, v).unwrap();
        let m = translation([i as f64 * 4.0 * g.h(), j as f64 * 4.0 * g.h(), 0.0]);
        let r = composition_ratio(&f, &m, &OscillationParams::bmo(2), &fam).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_transform_matches_brute_force(bits in prop::collection::vec(prop::bool::weighted(0.8), 16 * 16), periodic in any::<bool>()) {
        prop_assume!(bits.iter().any(|&b| b) && bits.iter().any(|&b| !b));
        let g = grid(16, periodic);
        let mask = PixelMask::from_fn(g, |p| {
            let i = ((p[0] + 1.0) / g.h()) as usize;
            let j = ((p[1] + 1.0) / g.h()) as usize;
            bits[i + 16 * j]
        }).unwrap();
        let dt = distance_transform(&mask).unwrap();
        let zeros: Vec<[usize; 3]> = (0..16).flat_map(|j| (0..16).map(move |i| [i, j, 0])).filter(|c| !bits[c[0] + 16 * c[1]]).collect();
        for c in mask.set_cells() {
            let p = g.center_of(c);
            let mut best = f64::INFINITY;
            for z in &zeros {
                best = best.min(g.window.distance(&p, &g.center_of(*z)));
            }
            if !periodic {
                // Cells just past the window edge are complement.
                let edge = (c[0] + 1).min(16 - c[0]).min(c[1] + 1).min(16 - c[1]) as f64 * g.h();
                best = best.min(edge);
            }
            prop_assert!((dt.get(c) - best).abs() < 1e-12, "cell {:?}: {} vs {}", c, dt.get(c), best);
        }
    }

    #[test]
    fn whitney_cover_of_rectangles_is_valid(x0 in 0usize..20, y0 in 0usize..20, w in 4usize..40, h in 4usize..40) {
        let g = grid(64, false);
        let (x1, y1) = ((x0 + w).min(63), (y0 + h).min(63));
        let mask = PixelMask::from_fn(g, |p| {
            let i = ((p[0] + 1.0) / g.h()) as usize;
            let j = ((p[1] + 1.0) / g.h()) as usize;
            (x0..x1).contains(&i) && (y0..y1).contains(&j)
        }).unwrap();
        let cover = whitney_decompose(&mask).unwrap();
        let rep = validate_cover(&cover, &mask);
        prop_assert!(rep.disjoint);
        prop_assert!(rep.contained);
        prop_assert!(rep.ratio_max <= 0.5);
        for (b, d) in cover.balls.iter().zip(&cover.dists) {
            prop_assert!(b.radius <= *d);
        }
    }

    #[test]
    fn log_and_power_fits_recover_exact_data(c0 in 0.5..5.0f64, c1 in 0.1..3.0f64, eps in 0.05..1.9f64) {
        let xs: Vec<f64> = (0..8).map(|i| 1.5f64.powi(i) * 1.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c0 + c1 * x.ln()).collect();
        let f = fit_log(&xs, &ys).unwrap();
        prop_assert!((f.coeffs[0] - c0).abs() < 1e-8 && (f.coeffs[1] - c1).abs() < 1e-8);
        let ys: Vec<f64> = xs.iter().map(|x| c0 * x.powf(eps)).collect();
        let f = fit_power(&xs, &ys, 0.01, 2.0).unwrap();
        prop_assert!((f.coeffs[1] - eps).abs() < 1e-5, "{:?}", f.coeffs);
        prop_assert!(f.residual < 1e-5);
    }

    #[test]
    fn affine_and_exponential_fits_recover_exact_data(c0 in 0.5..5.0f64, c1 in 0.1..3.0f64, gamma in -1.5..1.5f64) {
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c0 + c1 * x).collect();
        let f = fit_affine(&xs, &ys).unwrap();
        prop_assert!((f.coeffs[0] - c0).abs() < 1e-8 && (f.coeffs[1] - c1).abs() < 1e-8);
        let ys: Vec<f64> = xs.iter().map(|x| c0 * (gamma * x).exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        prop_assert!((f.coeffs[1] - gamma).abs() < 1e-5, "{:?}", f.coeffs);
    }

    #[test]
    fn box_mass_adds_over_disjoint_shells(v in values(32 * 32), w in values(32 * 32), split in 1usize..4,
                                          cx in -0.4..0.4f64, cy in -0.4..0.4f64, r in 0.1..0.5f64) {
        let g = grid(32, false);
        let depth = 4;
        let f = GridFunction::new(g, v).unwrap();
        let k = GridFunction::new(g, w).unwrap();
        let zero = GridFunction::constant(g, 0.0).unwrap();
        let shell = |j: usize, low: bool| if (j < split) == low { (if j % 2 == 0 { &f } else { &k }).clone() } else { zero.clone() };
        let whole = CarlesonDensity::new(0.5, (0..=depth).map(|j| (if j % 2 == 0 { &f } else { &k }).clone()).collect()).unwrap();
        let top = CarlesonDensity::new(0.5, (0..=depth).map(|j| shell(j, true)).collect()).unwrap();
        let bottom = CarlesonDensity::new(0.5, (0..=depth).map(|j| shell(j, false)).collect()).unwrap();
        let b = CarlesonBox::new(Ball::new([cx, cy, 0.0], r));
        let total = box_mass(&whole, &b).unwrap();
        let parts = box_mass(&top, &b).unwrap() + box_mass(&bottom, &b).unwrap();
        prop_assert!((total - parts).abs() <= 1e-9 * total.max(1.0));
        let doubled = box_mass(&whole.scaled(2.0).unwrap(), &b).unwrap();
        prop_assert!((doubled - 4.0 * total).abs() <= 1e-9 * doubled.max(1.0));
    }

    #[test]
    fn sweep_spec_text_roundtrips(ts in prop::collection::vec(0.1..3.0f64, 0..5), n in 3u32..9, stride in 1usize..8, a in 0.0..1.0f64, seed in any::<u64>()) {
        let mut s = SweepSpec::default();
        s.swept.insert("t".into(), ts.iter().map(|t| t.to_string()).collect());
        s.n = 1 << n;
        s.stride = stride;
        s.a = a;
        s.seed = seed;
        prop_assert_eq!(SweepSpec::parse(&s.to_text()).unwrap(), s);
    }
}
