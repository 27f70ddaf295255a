use infspec::geometry_probe::*;
use infspec::hyperbolic::{collar_width, winding_length};
use infspec::representation::{build_representation, cuff_index, cuff_layout, cuff_word, geodesic_length, Cuff, FNCoords};
use infspec::surface_group::{normalize, CurveWord, Letter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn same_cyclic(a: &CurveWord, b: &CurveWord) -> bool {
    let (a, b) = (normalize(a).unwrap(), normalize(b).unwrap());
    let n = a.len();
    let bi = b.inverse();
    n == b.len()
        && [&b, &bi]
            .iter()
            .any(|c| (0..n).any(|s| (0..n).all(|i| a.letters[(s + i) % n] == c.letters[i])))
}

#[test]
fn short_cuff_is_the_systole() {
    for g in [2u32, 3] {
        let cuff = Cuff::Meridian(g);
        let mut c = FNCoords::uniform(g, 1.5).unwrap();
        c.lengths[cuff_index(g, cuff).unwrap()] = 0.05;
        let rep = build_representation(&c).unwrap();
        let s = systole(&rep, 8).unwrap();
        assert!((s.value - 0.05).abs() < 1e-9, "{}", s.value);
        assert!(same_cyclic(&s.witness, &cuff_word(g, cuff)), "{}", s.witness);
        assert!(s.certified);
    }
}

#[test]
fn systole_respects_topological_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let c = FNCoords::random(2, 0.1, 6.0, &mut rng);
        let rep = build_representation(&c).unwrap();
        let s = systole(&rep, 8).unwrap();
        assert!(s.value <= closed_systole_bound(2), "{} at {c}", s.value);
        let w = geodesic_length(&rep, &s.witness).unwrap();
        assert!((w - s.value).abs() < 1e-9);
    }
}

#[test]
fn depth_eight_matches_depth_twelve_on_thick_structures() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..4 {
        let c = FNCoords::random(2, 1.0, 3.0, &mut rng);
        let rep = build_representation(&c).unwrap();
        let s8 = systole(&rep, 8).unwrap();
        let s12 = systole(&rep, 12).unwrap();
        assert!((s8.value - s12.value).abs() < 1e-9, "{} vs {}", s8.value, s12.value);
        // enlarging the depth never increases the value
        assert!(s12.value <= s8.value + 1e-12);
        let s10 = systole(&rep, 10).unwrap();
        assert!(s12.value <= s10.value + 1e-12 && s10.value <= s8.value + 1e-12);
    }
}

#[test]
fn side_searches_stay_on_their_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let c = FNCoords::random(2, 0.2, 4.0, &mut rng);
        let rep = build_representation(&c).unwrap();
        let full = systole(&rep, 8).unwrap();
        let s1 = subsurface_systole(&rep, Side::One, 8).unwrap();
        let s2 = subsurface_systole(&rep, Side::Two, 8).unwrap();
        assert!(s1.witness.letters.iter().all(|l| l.handle() == 1));
        assert!(s2.witness.letters.iter().all(|l| l.handle() == 2));
        assert!(s1.value >= full.value - 1e-12 && s2.value >= full.value - 1e-12);
        assert!(s1.value <= bordered_systole_bound(1));
    }
}

#[test]
fn side_one_matches_full_systole_when_witness_is_there() {
    let mut c = FNCoords::uniform(2, 2.0).unwrap();
    c.lengths[cuff_index(2, Cuff::Meridian(1)).unwrap()] = 0.3;
    let rep = build_representation(&c).unwrap();
    let full = systole(&rep, 10).unwrap();
    let s1 = subsurface_systole(&rep, Side::One, 10).unwrap();
    assert!((full.value - s1.value).abs() < 1e-12);
    assert!((s1.value - 0.3).abs() < 1e-9);
}

#[test]
fn depth_below_four_is_rejected() {
    let rep = build_representation(&FNCoords::uniform(2, 2.0).unwrap()).unwrap();
    assert!(systole(&rep, 3).is_err());
    assert!(subsurface_systole(&rep, Side::Two, 2).is_err());
    assert!(Side::from_index(3).is_err());
}

#[test]
fn thick_set_membership() {
    let mut c = FNCoords::uniform(2, 2.0).unwrap();
    c.lengths[0] = 1.5;
    let rep = build_representation(&c).unwrap();
    assert!(!in_t_epsilon(&rep, 1e-3, 8).unwrap());

    c.lengths[0] = 0.5;
    let rep = build_representation(&c).unwrap();
    let s1 = subsurface_systole(&rep, Side::One, 8).unwrap().value;
    let s2 = subsurface_systole(&rep, Side::Two, 8).unwrap().value;
    assert!(s1 >= 0.8 && s2 >= 0.8, "{s1} {s2}");
    assert!(in_t_epsilon(&rep, 0.5, 8).unwrap());
    assert!(!in_t_epsilon(&rep, closed_systole_bound(2) + 0.1, 8).unwrap());
    assert!(in_t_epsilon(&rep, 0.0, 8).is_err());
}

#[test]
fn family_bound_shape() {
    assert!(family_lower_bound(1, 1, 1.0, 1.0, 0.5).is_err());
    // m = 2 uses f_0 = 2 r(l/2)
    let (s1, s2, e) = (0.7, 1.1, 0.3);
    let r = |x: f64| collar_width(0.5 * x).unwrap();
    let b = family_lower_bound(2, 1, s1, s2, e).unwrap();
    assert!((b - (2.0 * (r(s1) + r(s2)) + 2.0 * r(e) + 2.0 * r(e))).abs() < 1e-12);
    assert!((winding_length(0, e).unwrap() - 2.0 * r(e)).abs() < 1e-12);
    // shrinking eta raises the bound
    let mut last = 0.0;
    for e in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let v = family_lower_bound(3, 2, s1, s2, e).unwrap();
        assert!(v > last);
        last = v;
    }
}

#[test]
fn family_bound_holds_on_a_few_structures() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..3 {
        let c = FNCoords::random(2, 0.1, 6.0, &mut rng);
        let rep = build_representation(&c).unwrap();
        for (m, n) in [(2, 1), (3, 2)] {
            let lb = prop41_lower_bound(2, m, n, &rep, 8).unwrap();
            let len = geodesic_length(&rep, &infspec::surface_group::family_word(2, m, n).unwrap()).unwrap();
            assert!(lb <= len, "({m},{n}) bound {lb} > length {len} at {c}");
        }
    }
}

#[test]
fn disjoint_cuffs_have_disjoint_collars() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for g in [2u32, 3] {
        for _ in 0..20 {
            let c = FNCoords::random(g, 0.1, 6.0, &mut rng);
            let rep = build_representation(&c).unwrap();
            let cuffs = cuff_layout(g);
            for i in 0..cuffs.len() {
                for j in i + 1..cuffs.len() {
                    let x = rep.word_matrix(&cuff_word(g, cuffs[i]).letters).unwrap();
                    let y = rep.word_matrix(&cuff_word(g, cuffs[j]).letters).unwrap();
                    let d = axis_distance(&x, &y).unwrap().expect("disjoint cuffs have disjoint axes");
                    let need = collar_width(0.5 * c.lengths[i]).unwrap() + collar_width(0.5 * c.lengths[j]).unwrap();
                    assert!(d > need - 1e-9, "cuffs {i},{j}: distance {d} < {need}");
                }
            }
        }
    }
}

#[test]
fn crossing_axes_have_no_distance() {
    let rep = build_representation(&FNCoords::uniform(2, 2.0).unwrap()).unwrap();
    let a = rep.word_matrix(&[Letter::a(1)]).unwrap();
    let b = rep.word_matrix(&[Letter::b(1)]).unwrap();
    assert_eq!(axis_distance(&a, &b).unwrap(), None);
}

/// Hyperbolic distance in the upper half plane.
fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    let d2 = (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
    (1.0 + d2 / (2.0 * p.1 * q.1)).acosh()
}

#[test]
fn collar_arcs_are_sandwiched() {
    // core on the imaginary axis; an arc from one collar boundary to the other
    // whose endpoints project (m + t) core lengths apart winds m times
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..2000 {
        let l: f64 = rng.gen_range(0.01..3.0);
        let m: u64 = rng.gen_range(0..12);
        let t: f64 = rng.gen_range(0.0..1.0);
        let w = collar_width(0.5 * l).unwrap();
        let at = |u: f64, h: f64| (h * u.tanh(), h / u.cosh());
        let p = at(w, 1.0);
        let q = at(-w, ((m as f64 + t) * l).exp());
        let a = dist(p, q);
        let lo = winding_length(m, l).unwrap();
        let hi = winding_length(m + 1, l).unwrap();
        assert!(lo <= a * (1.0 + 1e-12) && a <= hi * (1.0 + 1e-12), "l={l} m={m} t={t}: {lo} {a} {hi}");
    }
}
