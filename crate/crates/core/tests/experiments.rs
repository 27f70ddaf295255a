use infspec::error::Error;
use infspec::experiments::*;
use infspec::optimizer::OptOptions;
use infspec::surface_group::{family_word, self_intersection_oracle, CurveWord};

fn quick() -> OptOptions {
    OptOptions { starts: 2, systole_depth: 6, ..OptOptions::default() }
}

#[test]
fn pair_index_set_head() {
    let ks: Vec<u64> = (1..=5).map(|n| k_of_n(2, n)).collect();
    assert_eq!(ks, [4, 15, 32, 55, 84]);
    assert_eq!(k_of_n(2, 6), 119);
}

#[test]
fn growth_fit_on_synthetic_rows() {
    let rows: Vec<(u64, f64, f64)> =
        (1..=6).map(|n| k_of_n(2, n)).map(|k| (k, 6.0 * (k as f64).ln(), (k as f64).sqrt())).collect();
    let fit = growth_fit(&rows).unwrap();
    assert!((fit.ratio_alpha_max - 6.0).abs() < 1e-12);
    assert!((fit.ratio_beta_min - 1.0).abs() < 1e-12);
    assert_eq!(fit.alpha_ratios.len(), 5);
    assert!(matches!(growth_fit(&rows[..4]), Err(Error::Domain(_))));
}

#[test]
fn ranges_and_formatting() {
    assert_eq!("1..20".parse::<IntRange>().unwrap(), IntRange { lo: 1, hi: 20 });
    assert_eq!("3".parse::<IntRange>().unwrap().values(), [3]);
    assert!("5..2".parse::<IntRange>().is_err());
    assert!("a..b".parse::<IntRange>().is_err());
    assert_eq!(sig12(9.977315346351727), "9.97731534635");
    assert_eq!(sig12(0.0692439464944123), "0.0692439464944");
    assert_eq!(sig12(103.06009014324), "103.060090143");
    assert_eq!(sig12(2.0), "2");
    assert_eq!(sig12(0.0), "0");
}

#[test]
fn config_round_trip_and_calibration() {
    let text = r#"
        genus = 2
        seed = 7
        [optimizer]
        starts = 4
        [scan]
        m = "2..4"
        n = 1
    "#;
    let c = RunConfig::from_toml(text).unwrap();
    assert_eq!(c.scan.m, IntRange { lo: 2, hi: 4 });
    assert_eq!(c.scan.n.values(), [1]);
    assert_eq!(c.opt_options().seed, 7);
    assert_eq!(c.optimizer.starts, 4);
    assert_eq!(c.optimizer.max_evals, 20_000);
    let back = RunConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    assert!(RunConfig::from_toml("gneus = 2").is_err());

    let cal = Calibration::frozen().unwrap();
    assert_eq!(cal.genus, 2);
    assert!(cal.eta_floor > 0.0 && cal.beta_ratio_min > 0.0 && cal.alpha_ratio_max.is_finite());
}

#[test]
fn scan_rows_are_deterministic() {
    let a = family_scan(2, &[1, 2], &[1], 3, &quick()).unwrap();
    let b = family_scan(2, &[2, 1], &[1], 3, &quick()).unwrap();
    let (ca, cb) = (scan_csv(&a), scan_csv(&b));
    assert_eq!(ca, cb);
    assert!(ca.starts_with("m,n,i_formula,i_oracle,m_gamma,eta_at_opt,sys1,sys2,converged\n"));
    assert_eq!((a[0].m, a[0].n, a[0].i_formula), (1, 1, 4));
    assert_eq!(a[0].i_oracle, Some(4));
    assert!(a.iter().all(|r| r.measured.converged));
    assert!(a[1].measured.eta_at_opt < a[0].measured.eta_at_opt);
    assert!(family_scan(2, &[], &[1], 3, &quick()).is_err());
}

#[test]
fn degenerate_first_pair() {
    let rows = pair_table(2, 1, &quick()).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((r.k, r.n_of_k, r.m_of_k, r.i_alpha, r.i_beta), (4, 1, 1, 4, 4));
    assert_eq!(r.m_alpha(), r.m_beta());
    assert!(pairs_csv(&rows).lines().count() == 2);
    assert!(pair_table(2, 0, &quick()).is_err());
}

#[test]
fn census_of_small_family() {
    let empty = spectrum_census(&[], None, &quick()).unwrap();
    assert_eq!(empty.count, 0);

    let words = census_words(2, 3).unwrap();
    assert_eq!(words.len(), 9);
    let all = spectrum_census(&words, None, &quick()).unwrap();
    assert_eq!(all.count, 9);
    assert!(all.entries.windows(2).all(|w| w[0].m_gamma <= w[1].m_gamma));
    for e in &all.entries {
        let i = self_intersection_oracle(&words[e.index]).unwrap() as f64;
        assert!(e.m_gamma >= 0.5 * (i / 2.0).ln());
    }
    let mut prev = 0;
    for cut in [10.0, 20.0, 30.0, 40.0, 1e9] {
        let c = all.entries.iter().filter(|e| e.m_gamma <= cut).count();
        assert!(c >= prev);
        prev = c;
    }
    let cut = spectrum_census(&words[..3], Some(20.0), &quick()).unwrap();
    assert!(cut.entries.iter().all(|e| e.m_gamma <= 20.0));

    let dup = vec![words[0].clone(), words[0].clone()];
    assert_eq!(spectrum_census(&dup, None, &quick()).unwrap().count, 1);

    let bad = vec![family_word(2, 1, 1).unwrap(), CurveWord::parse("a1", Some(2)).unwrap()];
    match spectrum_census(&bad, None, &quick()) {
        Err(Error::NotFilling(msg)) => assert!(msg.contains("entry 1")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn checks_on_synthetic_scan() {
    let cal = Calibration::frozen().unwrap();
    let row = |m: u64, n: u64, eta: f64| FamilyScanRow {
        m,
        n,
        i_formula: 0,
        i_oracle: None,
        measured: Measured { m_gamma: Some(1.0), eta_at_opt: Some(eta), sys1: Some(1.0), sys2: Some(1.0), converged: true, error: None },
    };
    let mut rows: Vec<FamilyScanRow> = (1..=10).map(|j| row(2 * j, 1, 0.5 / j as f64)).collect();
    let checks = scan_checks(&rows, &cal);
    let get = |cs: &[Check], name: &str| cs.iter().find(|c| c.name == name).map(|c| c.passed);
    assert_eq!(get(&checks, "eta_pinches"), Some(true));
    assert_eq!(get(&checks, "eta_trend"), Some(true));
    assert_eq!(get(&checks, "eta_floor"), None);
    rows[5].measured.eta_at_opt = Some(0.3);
    assert_eq!(get(&scan_checks(&rows, &cal), "eta_trend"), Some(false));
}
