//! Pilot run behind `data/calibration.toml`: genus-2 scan and pair table with
//! default optimizer options, seed 0. Prints the measured quantities.

use std::time::Instant;

use infspec::experiments::*;
use infspec::optimizer::OptOptions;

fn main() {
    let genus = 2;
    let opts = OptOptions::default();
    let t = Instant::now();
    let mut ms: Vec<u64> = (1..=10).map(|j| 2 * j).collect();
    ms.push(1);
    let mut rows = family_scan(genus, &ms, &[1], 0, &opts).unwrap();
    rows.extend(family_scan(genus, &[1], &(2..=10).collect::<Vec<_>>(), 0, &opts).unwrap());
    print!("{}", scan_csv(&rows));
    eprintln!("scan done in {:.1?}", t.elapsed());
    let pairs = pair_table(genus, 6, &opts).unwrap();
    print!("{}", pairs_csv(&pairs));
    eprintln!("pairs done in {:.1?}", t.elapsed());
    let fit = growth_fit(&fit_input(&pairs)).unwrap();
    println!("{fit:?}");
    let eta_floor = rows.iter().filter(|r| r.m == 1).filter_map(|r| r.measured.eta_at_opt).fold(f64::INFINITY, f64::min);
    let beta_thick = pairs.iter().filter_map(|r| Some(r.beta.sys1?.min(r.beta.sys2?).min(r.beta.eta_at_opt?))).fold(f64::INFINITY, f64::min);
    let alpha_comp = pairs.iter().filter(|r| r.k >= 15).filter_map(|r| Some(r.alpha.sys1?.min(r.alpha.sys2?))).fold(f64::INFINITY, f64::min);
    println!("eta_floor {eta_floor} alpha_ratio_max {} beta_ratio_min {} beta_thick {beta_thick} alpha_comp {alpha_comp}", fit.ratio_alpha_max, fit.ratio_beta_min);
}
