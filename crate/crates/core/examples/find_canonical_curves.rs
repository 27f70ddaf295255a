//! Searches for the canonical minimal filling curve `gamma0` and a based
//! conjugate of `eta = [a1, b1]` for the requested genera, printing TOML.
//!
//! Usage: find_canonical_curves [max_len] [genus[=gamma0 word]...]
//!
//! A genus given as `3="a1 b1 ..."` skips the search and only picks the based
//! conjugate of `eta` for the supplied curve.

use std::time::Instant;

use infspec::surface_group::oracle::{axes_crossing_point, pair_count, self_report};
use infspec::surface_group::{commutator_eta, family_from, normalize, self_intersection_formula, CurveWord, Letter};

fn reduced_words(gens: &[Letter], len: usize) -> Vec<Vec<Letter>> {
    let mut alphabet = Vec::new();
    for &g in gens {
        alphabet.push(g);
        alphabet.push(g.inv());
    }
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &alphabet {
                if w.last() != Some(&l.inv()) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    frontier
}

fn find_gamma0(genus: u32, max_len: usize) -> Option<CurveWord> {
    let side1 = [Letter::a(1), Letter::b(1)];
    let side2: Vec<Letter> = (2..=genus).flat_map(|k| [Letter::a(k), Letter::b(k)]).collect();
    let eta = commutator_eta(genus);
    let mut tried = 0usize;
    let t0 = Instant::now();
    for total in 2..=max_len {
        for lu in 1..total {
            let lv = total - lu;
            let us = reduced_words(&side1, lu);
            let vs = reduced_words(&side2, lv);
            for u in &us {
                // u and v are arcs on either side of eta closed along eta, so
                // neither needs to be cyclically reduced
                for v in &vs {
                    let mut letters = u.clone();
                    letters.extend_from_slice(v);
                    let w = CurveWord { genus, letters };
                    tried += 1;
                    let Ok(r) = self_report(&w) else { continue };
                    if r.self_count == 2 * genus as u64 - 1 && r.is_filling && pair_count(&w, &eta).ok() == Some(2) {
                        eprintln!("genus {genus}: found {w} after {tried} words in {:.1?}", t0.elapsed());
                        return Some(w);
                    }
                }
            }
        }
        eprintln!("genus {genus}: length {total} exhausted ({tried} words, {:.1?})", t0.elapsed());
    }
    None
}

fn based_candidates(gamma0: &CurveWord) -> Vec<(CurveWord, (f64, f64))> {
    let genus = gamma0.genus;
    let eta = commutator_eta(genus);
    let gens: Vec<Letter> = (1..=genus).flat_map(|k| [Letter::a(k), Letter::b(k)]).collect();
    let mut points: Vec<(CurveWord, (f64, f64))> = Vec::new();
    for len in 0..=3 {
        for y in reduced_words(&gens, len) {
            let yw = CurveWord { genus, letters: y };
            for e in [eta.clone(), eta.inverse()] {
                let based = e.conjugate_by(&yw);
                let Ok(Some(p)) = axes_crossing_point(gamma0, &based) else { continue };
                let dup = points.iter().any(|(b, q)| (q.0 - p.0).abs() + (q.1 - p.1).abs() < 1e-8 && same_cyclic_word(b, &based));
                if !dup {
                    points.push((based, p));
                }
            }
        }
    }
    points
}

fn same_cyclic_word(a: &CurveWord, b: &CurveWord) -> bool {
    let ea = normalize(a).unwrap();
    let eb = normalize(b).unwrap();
    let n = ea.letters.len();
    n == eb.letters.len() && (0..n).any(|s| (0..n).all(|i| ea.letters[(s + i) % n] == eb.letters[i]))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let max_len: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(8);
    let genera: Vec<String> = if args.len() > 1 { args[1..].to_vec() } else { vec!["2".into(), "3".into()] };
    println!("curves = [");
    for spec in genera {
        let (genus, given) = match spec.split_once('=') {
            Some((g, w)) => (g.parse::<u32>().unwrap(), Some(w.to_string())),
            None => (spec.parse::<u32>().unwrap(), None),
        };
        let found = match given {
            Some(w) => Some(normalize(&CurveWord::parse(&w, Some(genus)).unwrap()).unwrap()),
            None => find_gamma0(genus, max_len),
        };
        let Some(g0) = found else {
            eprintln!("genus {genus}: no candidate up to length {max_len}");
            continue;
        };
        let cands = based_candidates(&g0);
        let mut best: Option<(usize, CurveWord)> = None;
        for (based, p) in &cands {
            let mut agree = 0;
            let mut row = String::new();
            for m in 0..=3u64 {
                for n in 1..=3u64 {
                    let w = family_from(based, &g0, m, n).unwrap();
                    let i = self_report(&w).map(|r| r.self_count).unwrap_or(u64::MAX);
                    let f = self_intersection_formula(genus, m, n).unwrap();
                    agree += (i == f) as usize;
                    row.push_str(&format!(" ({m},{n}):{i}/{f}"));
                }
            }
            eprintln!("  eta_based {based} at ({:.5},{:.5}): {agree}/12 agree;{row}", p.0, p.1);
            if best.as_ref().is_none_or(|(a, b)| agree > *a || (agree == *a && based.len() < b.len())) {
                best = Some((agree, based.clone()));
            }
        }
        let (_, based) = best.expect("axes of gamma0 and eta cross");
        println!("  {{ genus = {genus}, gamma0 = \"{g0}\", eta = \"{}\", eta_based = \"{based}\" }},", commutator_eta(genus));
    }
    println!("]");
}
