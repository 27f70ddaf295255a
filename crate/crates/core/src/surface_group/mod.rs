//! Words in the closed surface group, the canonical curves `gamma_0` and
//! `eta`, the family `eta^m * gamma_0^n`, and intersection data.

pub mod fuchsian;
pub mod oracle;
pub mod word;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use word::{concat_power, normalize, CurveWord, Letter};

/// Intersection data of a single curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub self_count: u64,
    pub formula_count: Option<u64>,
    pub is_filling: bool,
    /// Only defined for simple curves.
    pub is_separating: Option<bool>,
}

/// Canonical curves of one genus as stored in the data file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalCurves {
    pub genus: u32,
    /// Minimal filling curve meeting `eta` twice.
    pub gamma0: String,
    /// Separating curve `[a_1, b_1]`.
    pub eta: String,
    /// Conjugate of `eta` whose axis crosses the axis of `gamma0`, so that
    /// `eta_based^m gamma0^n` is the based product at a common point.
    pub eta_based: String,
}

#[derive(Deserialize)]
struct CanonicalFile {
    curves: Vec<CanonicalCurves>,
}

const CANONICAL_TOML: &str = include_str!("../../data/canonical_curves.toml");

fn canonical_table() -> &'static BTreeMap<u32, CanonicalCurves> {
    static T: OnceLock<BTreeMap<u32, CanonicalCurves>> = OnceLock::new();
    T.get_or_init(|| {
        let f: CanonicalFile = toml::from_str(CANONICAL_TOML).expect("canonical curve data is valid TOML");
        f.curves.into_iter().map(|c| (c.genus, c)).collect()
    })
}

/// Genera for which canonical curves are available.
pub fn canonical_genera() -> Vec<u32> {
    canonical_table().keys().copied().collect()
}

pub fn canonical(genus: u32) -> Result<&'static CanonicalCurves> {
    canonical_table()
        .get(&genus)
        .ok_or_else(|| Error::Domain(format!("no canonical curves stored for genus {genus}")))
}

pub fn gamma0(genus: u32) -> Result<CurveWord> {
    CurveWord::parse(&canonical(genus)?.gamma0, Some(genus))
}

pub fn eta(genus: u32) -> Result<CurveWord> {
    CurveWord::parse(&canonical(genus)?.eta, Some(genus))
}

fn eta_based(genus: u32) -> Result<CurveWord> {
    CurveWord::parse(&canonical(genus)?.eta_based, Some(genus))
}

/// The separating commutator `[a_1, b_1]`, independent of the data file.
pub fn commutator_eta(genus: u32) -> CurveWord {
    CurveWord { genus, letters: vec![Letter::a(1), Letter::b(1), Letter::a(1).inv(), Letter::b(1).inv()] }
}

/// Normalized word of `eta^m * gamma_0^n` built from explicit based words.
pub fn family_from(eta_based: &CurveWord, gamma0: &CurveWord, m: u64, n: u64) -> Result<CurveWord> {
    if m == 0 && n == 0 {
        return Err(Error::Domain("family word needs m + n >= 1".into()));
    }
    let mut letters = Vec::with_capacity(eta_based.len() * m as usize + gamma0.len() * n as usize);
    for _ in 0..m {
        letters.extend_from_slice(&eta_based.letters);
    }
    for _ in 0..n {
        letters.extend_from_slice(&gamma0.letters);
    }
    normalize(&CurveWord { genus: gamma0.genus, letters })
}

/// The family curve `gamma_{m,n} = eta^m * gamma_0^n` of the given genus.
pub fn family_word(genus: u32, m: u64, n: u64) -> Result<CurveWord> {
    family_from(&eta_based(genus)?, &gamma0(genus)?, m, n)
}

/// `n^2 (2g - 1) + 2mn - m`.
pub fn self_intersection_formula(genus: u32, m: u64, n: u64) -> Result<u64> {
    if genus < 2 {
        return Err(Error::Domain(format!("genus must be at least 2, got {genus}")));
    }
    let g = genus as i64;
    let (m, n) = (m as i64, n as i64);
    let v = n * n * (2 * g - 1) + 2 * m * n - m;
    u64::try_from(v).map_err(|_| Error::Domain(format!("formula is negative for m={m}, n={n}")))
}

/// Geometric self-intersection number of the free homotopy class.
pub fn self_intersection_oracle(w: &CurveWord) -> Result<u64> {
    Ok(oracle::self_report(w)?.self_count)
}

/// Geometric intersection number of two classes.
pub fn pair_intersection_oracle(w1: &CurveWord, w2: &CurveWord) -> Result<u64> {
    oracle::pair_count(w1, w2)
}

/// Whether the complement of the geodesic representative is a union of discs.
pub fn is_filling(w: &CurveWord) -> Result<bool> {
    match oracle::self_report(w) {
        Ok(r) => Ok(r.is_filling),
        Err(Error::Domain(_)) if normalize(w)?.is_empty() => Ok(false),
        Err(e) => Err(e),
    }
}

/// Whether a simple closed curve separates the surface (is null-homologous).
pub fn is_separating(w: &CurveWord) -> Result<bool> {
    let n = normalize(w)?;
    if n.is_empty() {
        return Err(Error::Domain("the identity word is not a curve".into()));
    }
    let r = oracle::self_report(&n)?;
    if r.self_count != 0 {
        return Err(Error::Domain(format!("curve is not simple (i = {})", r.self_count)));
    }
    Ok(n.exponent_sums().iter().all(|&s| s == 0))
}

pub fn intersection_report(w: &CurveWord, formula: Option<u64>) -> Result<IntersectionReport> {
    let r = oracle::self_report(w)?;
    let is_separating = (r.self_count == 0).then(|| normalize(w).map(|n| n.exponent_sums().iter().all(|&s| s == 0))).transpose()?;
    Ok(IntersectionReport { self_count: r.self_count, formula_count: formula, is_filling: r.is_filling, is_separating })
}

/// Number of mapping-class orbits of separating simple closed curves on a
/// genus-`g` surface with `n` punctures (closed-form count).
pub fn separating_orbit_count(g: u32, n: u32) -> Result<u64> {
    if 2 - 2 * g as i64 - n as i64 >= 0 {
        return Err(Error::Domain(format!("surface with g={g}, n={n} is not hyperbolic")));
    }
    let (g, n) = (g as u64, n as u64);
    Ok(if n == 0 {
        g / 2
    } else if g == 0 {
        n / 2 - 1
    } else {
        (n - 1) + (g / 2) * (n + 1)
    })
}

/// Curves along which Dehn twists are implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwistAxis {
    A(u32),
    B(u32),
    /// `[a_1, b_1] ... [a_k, b_k]`, separating; `k = 1` is `eta`.
    Chain(u32),
    /// `[a_k, b_k]`, separating off handle `k`.
    Handle(u32),
}

impl TwistAxis {
    pub fn word(&self, genus: u32) -> CurveWord {
        let comm = |k: u32| [Letter::a(k), Letter::b(k), Letter::a(k).inv(), Letter::b(k).inv()];
        let letters = match *self {
            TwistAxis::A(k) => vec![Letter::a(k)],
            TwistAxis::B(k) => vec![Letter::b(k)],
            TwistAxis::Chain(k) => (1..=k).flat_map(comm).collect(),
            TwistAxis::Handle(k) => comm(k).to_vec(),
        };
        CurveWord { genus, letters }
    }

    pub fn all(genus: u32) -> Vec<TwistAxis> {
        let mut out = Vec::new();
        for k in 1..=genus {
            out.push(TwistAxis::A(k));
            out.push(TwistAxis::B(k));
            out.push(TwistAxis::Handle(k));
        }
        for k in 2..genus {
            out.push(TwistAxis::Chain(k));
        }
        out
    }

    fn is_valid(&self, genus: u32) -> bool {
        match *self {
            TwistAxis::A(k) | TwistAxis::B(k) | TwistAxis::Handle(k) => (1..=genus).contains(&k),
            TwistAxis::Chain(k) => (1..genus).contains(&k),
        }
    }
}

fn is_cyclic_rotation(a: &[Letter], b: &[Letter]) -> bool {
    a.len() == b.len() && (a.is_empty() || (0..a.len()).any(|s| (0..a.len()).all(|i| a[(s + i) % a.len()] == b[i])))
}

/// Identifies a simple curve word with one of the supported twist axes.
pub fn twist_axis_of(along: &CurveWord) -> Result<TwistAxis> {
    let n = normalize(along)?;
    let inv = n.inverse();
    let g = along.genus;
    for ax in TwistAxis::all(g).into_iter().chain(std::iter::once(TwistAxis::Chain(1))) {
        let w = normalize(&ax.word(g))?;
        if is_cyclic_rotation(&w.letters, &n.letters) || is_cyclic_rotation(&w.letters, &inv.letters) {
            return Ok(ax);
        }
    }
    if !n.is_empty() && oracle::self_report(&n).map(|r| r.self_count != 0).unwrap_or(true) {
        return Err(Error::Domain(format!("twist axis {along} is not a simple curve")));
    }
    Err(Error::Domain(format!("Dehn twists along {along} are not supported; use a_k, b_k, [a_k,b_k] or a chain commutator")))
}

fn twist_image(ax: TwistAxis, genus: u32, l: Letter, forward: bool) -> Vec<Letter> {
    let gen = Letter(l.0.abs());
    let k = gen.handle();
    // image of the positive generator under the twist (or its inverse)
    let img: Vec<Letter> = match ax {
        TwistAxis::A(j) if j == k && !gen.is_a() => {
            vec![gen, if forward { Letter::a(k) } else { Letter::a(k).inv() }]
        }
        TwistAxis::B(j) if j == k && gen.is_a() => {
            vec![gen, if forward { Letter::b(k) } else { Letter::b(k).inv() }]
        }
        TwistAxis::Chain(j) | TwistAxis::Handle(j) if (matches!(ax, TwistAxis::Chain(_)) && k <= j) || (matches!(ax, TwistAxis::Handle(_)) && k == j) => {
            let c = ax.word(genus).letters;
            let c = if forward { c } else { c.iter().rev().map(|x| x.inv()).collect() };
            let ci: Vec<Letter> = c.iter().rev().map(|x| x.inv()).collect();
            let mut v = c;
            v.push(gen);
            v.extend(ci);
            v
        }
        _ => vec![gen],
    };
    if l.is_inverse() {
        img.iter().rev().map(|x| x.inv()).collect()
    } else {
        img
    }
}

/// Image of `w` under the `power`-th Dehn twist along `along`.
pub fn apply_dehn_twist(w: &CurveWord, along: &CurveWord, power: i64) -> Result<CurveWord> {
    if power == 0 {
        return normalize(w);
    }
    let ax = twist_axis_of(along)?;
    apply_twist_axis(w, ax, power)
}

pub fn apply_twist_axis(w: &CurveWord, ax: TwistAxis, power: i64) -> Result<CurveWord> {
    if !ax.is_valid(w.genus) {
        return Err(Error::Domain(format!("twist axis {ax:?} does not exist in genus {}", w.genus)));
    }
    let mut cur = normalize(w)?;
    for _ in 0..power.unsigned_abs() {
        let letters: Vec<Letter> = cur.letters.iter().flat_map(|&l| twist_image(ax, w.genus, l, power > 0)).collect();
        cur = normalize(&CurveWord { genus: w.genus, letters })?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> CurveWord {
        CurveWord::parse(s, Some(2)).unwrap()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(self_intersection_formula(2, 0, 1).unwrap(), 3);
        assert_eq!(self_intersection_formula(2, 1, 1).unwrap(), 4);
        for k in [4u64, 15, 32] {
            assert_eq!(self_intersection_formula(2, k - 3, 1).unwrap(), k);
        }
    }

    #[test]
    fn orbit_count_examples() {
        assert_eq!(separating_orbit_count(2, 0).unwrap(), 1);
        assert_eq!(separating_orbit_count(0, 4).unwrap(), 1);
        assert_eq!(separating_orbit_count(3, 2).unwrap(), 4);
        assert!(separating_orbit_count(1, 0).is_err());
        assert!(separating_orbit_count(0, 2).is_err());
    }

    #[test]
    fn twists_preserve_the_relator() {
        for g in 2..=3 {
            let r = CurveWord { genus: g, letters: CurveWord::relator(g) };
            for ax in TwistAxis::all(g) {
                for p in [-1, 1, 2] {
                    let img = apply_twist_axis(&r, ax, p).unwrap();
                    assert!(img.is_empty(), "{ax:?} {p}: {img}");
                }
            }
        }
    }

    #[test]
    fn twist_examples() {
        assert_eq!(apply_dehn_twist(&w("a1"), &w("a1"), 3).unwrap(), w("a1"));
        assert_eq!(apply_dehn_twist(&w("b1"), &w("a1"), 1).unwrap(), w("b1 a1"));
        assert_eq!(apply_dehn_twist(&w("b1 a2"), &w("a1"), 0).unwrap(), w("b1 a2"));
        let t = apply_dehn_twist(&w("b1"), &w("a1"), 2).unwrap();
        assert_eq!(apply_dehn_twist(&t, &w("A1"), -2).unwrap(), w("b1"));
        assert!(apply_dehn_twist(&w("b1"), &w("a1 a1 b1 b1"), 1).is_err());
    }

    #[test]
    fn separating_tests() {
        assert!(is_separating(&w("a1 b1 A1 B1")).unwrap());
        assert!(!is_separating(&w("a1")).unwrap());
        assert!(matches!(is_separating(&w("a1 b1 A1 B1 a2 b2 A2 B2")), Err(Error::Domain(_))));
        assert!(matches!(is_separating(&w("a1 a1 b1 b1")), Err(Error::Domain(_))));
    }
}
