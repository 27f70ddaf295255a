use infspec::hyperbolic::*;
use proptest::prelude::*;

fn mat(a: f64, b: f64, c: f64) -> ScaledIsometry {
    // unit determinant from three free entries
    ScaledIsometry::new(a, b, c, (1.0 + b * c) / a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn collar_is_an_involution(x in 1e-4f64..20.0) {
        let r = collar_width(collar_width(x).unwrap()).unwrap();
        prop_assert!((r - x).abs() <= 1e-12 * x.max(1.0), "{x} -> {r}");
    }

    #[test]
    fn collar_identity(l in 1e-3f64..40.0) {
        let w = collar_width(0.5 * l).unwrap();
        let lhs = w.cosh();
        let rhs = 1.0 / (0.5 * l).tanh();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn pythagorean_hypotenuse(h in 1e-3f64..10.0, x in 1e-3f64..10.0) {
        // right angle between the collar perpendicular and the core
        let a = 2.0 * ((0.5 * h).cosh() * (0.5 * x).cosh()).acosh();
        let via_log = 2.0 * acosh_from_ln(ln_cosh(0.5 * h) + ln_cosh(0.5 * x));
        prop_assert!((a - via_log).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(((0.5 * a).cosh() - (0.5 * h).cosh() * (0.5 * x).cosh()).abs() <= 1e-12 * (0.5 * a).cosh());
    }

    #[test]
    fn winding_sandwich(m in 1u64..=100, x in 0.01f64..=2.0) {
        let f = winding_length(m, x).unwrap();
        let base = 2.0 * collar_width(0.5 * x).unwrap() + x * m as f64;
        let band = 4.0 * 2f64.ln();
        prop_assert!(base - band <= f && f <= base + band, "m={m} x={x}: {f} vs {base}");
    }

    #[test]
    fn scaled_product_matches_naive(a in 0.5f64..2.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
                                    d in 0.5f64..2.0, e in -1.0f64..1.0, f in -1.0f64..1.0) {
        let (x, y) = (mat(a, b, c), mat(d, e, f));
        let p = compose(&x, &y).unwrap().to_unscaled().unwrap();
        let (u, v) = (x.entries, y.entries);
        let naive = [u[0] * v[0] + u[1] * v[2], u[0] * v[1] + u[1] * v[3], u[2] * v[0] + u[3] * v[2], u[2] * v[1] + u[3] * v[3]];
        let scale = naive.iter().fold(0.0f64, |s, t| s.max(t.abs()));
        for k in 0..4 {
            prop_assert!((p[k] - naive[k]).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn sandwich_on_the_full_grid() {
    let band = 4.0 * 2f64.ln();
    for i in 1..=200 {
        let x = 0.01 * i as f64;
        let r = 2.0 * collar_width(0.5 * x).unwrap();
        for m in 1..=100u64 {
            let f = winding_length(m, x).unwrap();
            let base = r + x * m as f64;
            assert!(base - band <= f && f <= base + band, "m={m} x={x}");
        }
    }
}

#[test]
fn determinant_stays_one_along_long_products() {
    let x = mat(1.3, 0.7, -0.4);
    let y = mat(0.8, -0.2, 0.9);
    let mut p = x;
    let mut unscaled = 0;
    for i in 0..10_000 {
        p = compose(&p, if i % 3 == 0 { &y } else { &x }).unwrap();
        // the determinant of large entries is all cancellation, and once
        // rescaled only the projective class is kept
        if p.log_scale == 0.0 && p.max_abs_entry() < 1e4 {
            unscaled += 1;
            assert!((p.entries_det() - 1.0).abs() <= 1e-9, "step {i}: {}", p.entries_det());
        }
    }
    assert!(unscaled >= 3 && p.is_finite() && p.log_scale > 0.0);
}
