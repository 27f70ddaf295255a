use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator of the surface group or its inverse.
///
/// Generator `a_k` has code `2k - 1`, `b_k` has code `2k`; inverses are negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub i16);

impl Letter {
    pub fn a(k: u32) -> Self {
        Letter(2 * k as i16 - 1)
    }

    pub fn b(k: u32) -> Self {
        Letter(2 * k as i16)
    }

    pub fn inv(self) -> Self {
        Letter(-self.0)
    }

    /// 1-based handle index.
    pub fn handle(self) -> u32 {
        (self.0.unsigned_abs() as u32).div_ceil(2)
    }

    pub fn is_a(self) -> bool {
        self.0.unsigned_abs() % 2 == 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    /// Index `0..2g` of the underlying generator.
    pub fn generator_index(self) -> usize {
        self.0.unsigned_abs() as usize - 1
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match (self.is_a(), self.is_inverse()) {
            (true, false) => 'a',
            (true, true) => 'A',
            (false, false) => 'b',
            (false, true) => 'B',
        };
        write!(f, "{c}{}", self.handle())
    }
}

fn parse_letter(tok: &str, pos: usize) -> Result<Letter> {
    let bad = || Error::Parse { pos, token: tok.to_string() };
    let mut chars = tok.chars();
    let head = chars.next().ok_or_else(bad)?;
    let idx: u32 = chars.as_str().parse().map_err(|_| bad())?;
    if idx == 0 || idx > 1000 {
        return Err(bad());
    }
    Ok(match head {
        'a' => Letter::a(idx),
        'b' => Letter::b(idx),
        'A' => Letter::a(idx).inv(),
        'B' => Letter::b(idx).inv(),
        _ => return Err(bad()),
    })
}

/// Parses whitespace-separated letters such as `a1 b1 A1 B1`.
///
/// Returns the letters together with the largest handle index seen.
pub fn parse_letters(text: &str) -> Result<(Vec<Letter>, u32)> {
    let mut out = Vec::new();
    let mut max_handle = 0;
    let mut pos = 0;
    for tok in text.split(|c: char| c.is_whitespace() || c == ',' || c == '*') {
        if !tok.is_empty() {
            let l = parse_letter(tok, pos)?;
            max_handle = max_handle.max(l.handle());
            out.push(l);
        }
        pos += tok.len() + 1;
    }
    Ok((out, max_handle))
}

/// A word in the standard generators of the genus-`g` surface group
/// `<a_1, b_1, ..., a_g, b_g | [a_1, b_1] ... [a_g, b_g]>`.
///
/// Most operations treat the word cyclically, as a free homotopy class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurveWord {
    pub genus: u32,
    pub letters: Vec<Letter>,
}

impl CurveWord {
    pub fn new(genus: u32, letters: Vec<Letter>) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Domain(format!("genus must be at least 2, got {genus}")));
        }
        for (pos, l) in letters.iter().enumerate() {
            if l.0 == 0 || l.handle() > genus {
                return Err(Error::Parse { pos, token: l.to_string() });
            }
        }
        Ok(Self { genus, letters })
    }

    /// Parses a word; the genus is the largest handle index (at least 2)
    /// unless `genus` is given.
    pub fn parse(text: &str, genus: Option<u32>) -> Result<Self> {
        let (letters, max_handle) = parse_letters(text)?;
        let genus = genus.unwrap_or(max_handle.max(2));
        Self::new(genus, letters)
    }

    pub fn identity(genus: u32) -> Self {
        Self { genus, letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { genus: self.genus, letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }

    /// Free product of two words (no reduction).
    pub fn concat(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self { genus: self.genus.max(other.genus), letters }
    }

    /// `x w x^{-1}` as a linear word.
    pub fn conjugate_by(&self, x: &Self) -> Self {
        x.concat(self).concat(&x.inverse())
    }

    /// Exponent sum of each of the `2g` generators.
    pub fn exponent_sums(&self) -> Vec<i64> {
        let mut sums = vec![0i64; 2 * self.genus as usize];
        for l in &self.letters {
            sums[l.generator_index()] += if l.is_inverse() { -1 } else { 1 };
        }
        sums
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        let w = &self.letters;
        w.windows(2).all(|p| p[0] != p[1].inv())
            && (w.len() < 2 || w[0] != w[w.len() - 1].inv())
    }

    pub(crate) fn relator(genus: u32) -> Vec<Letter> {
        (1..=genus)
            .flat_map(|k| [Letter::a(k), Letter::b(k), Letter::a(k).inv(), Letter::b(k).inv()])
            .collect()
    }
}

impl fmt::Display for CurveWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for CurveWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

/// Free reduction of a linear word.
pub fn free_reduce(letters: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&l.inv()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Free and cyclic reduction.
pub fn cyclic_reduce(letters: &[Letter]) -> Vec<Letter> {
    let w = free_reduce(letters);
    let mut lo = 0;
    let mut hi = w.len();
    while hi - lo >= 2 && w[lo] == w[hi - 1].inv() {
        lo += 1;
        hi -= 1;
    }
    w[lo..hi].to_vec()
}

/// All cyclic rotations of the relator and its inverse.
fn relator_rotations(genus: u32) -> Vec<Vec<Letter>> {
    let r = CurveWord::relator(genus);
    let ri: Vec<Letter> = r.iter().rev().map(|l| l.inv()).collect();
    let n = r.len();
    let mut out = Vec::with_capacity(2 * n);
    for base in [&r, &ri] {
        for s in 0..n {
            out.push((0..n).map(|i| base[(s + i) % n]).collect());
        }
    }
    out
}

/// Finds a cyclic subword longer than half the relator that is also a
/// subword of a relator rotation. Returns (start, matched length, rotation).
fn find_dehn_move(w: &[Letter], rots: &[Vec<Letter>], half: usize) -> Option<(usize, usize, usize)> {
    let n = w.len();
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 0..n {
        for (ri, r) in rots.iter().enumerate() {
            if r[0] != w[i] {
                continue;
            }
            let mut len = 1;
            while len < r.len() && len < n && w[(i + len) % n] == r[len] {
                len += 1;
            }
            if len > half && best.is_none_or(|b| len > b.1) {
                best = Some((i, len, ri));
            }
        }
    }
    best
}

/// Cyclic reduction followed by Dehn's algorithm on the cyclic word.
///
/// For genus at least 2 the relator satisfies small cancellation C'(1/6), so
/// a word represents the identity exactly when this returns an empty word.
pub fn dehn_reduce_cyclic(genus: u32, letters: &[Letter]) -> Vec<Letter> {
    let rots = relator_rotations(genus);
    let half = 2 * genus as usize;
    let mut w = cyclic_reduce(letters);
    while let Some((i, len, ri)) = find_dehn_move(&w, &rots, half) {
        let n = w.len();
        let r = &rots[ri];
        // rotate so the match sits at the front, then swap it for the
        // inverse of the relator's remainder
        let mut next: Vec<Letter> = r[len..].iter().rev().map(|l| l.inv()).collect();
        next.extend((len..n).map(|k| w[(i + k) % n]));
        w = cyclic_reduce(&next);
    }
    w
}

/// Linear-word Dehn reduction; empty exactly for the identity element.
pub fn dehn_reduce_linear(genus: u32, letters: &[Letter]) -> Vec<Letter> {
    let rots = relator_rotations(genus);
    let half = 2 * genus as usize;
    let mut w = free_reduce(letters);
    'outer: loop {
        for i in 0..w.len() {
            for r in &rots {
                let mut len = 0;
                while len < r.len() && i + len < w.len() && w[i + len] == r[len] {
                    len += 1;
                }
                if len > half {
                    let mut next = w[..i].to_vec();
                    next.extend(r[len..].iter().rev().map(|l| l.inv()));
                    next.extend_from_slice(&w[i + len..]);
                    w = free_reduce(&next);
                    continue 'outer;
                }
            }
        }
        return w;
    }
}

/// Cyclically reduced representative of the free homotopy class.
pub fn normalize(w: &CurveWord) -> Result<CurveWord> {
    let checked = CurveWord::new(w.genus, w.letters.clone())?;
    Ok(CurveWord { genus: checked.genus, letters: dehn_reduce_cyclic(w.genus, &checked.letters) })
}

/// `exponent` copies of `base`, normalized.
pub fn concat_power(base: &CurveWord, exponent: i64) -> Result<CurveWord> {
    if exponent < 1 {
        return Err(Error::Domain(format!("exponent must be at least 1, got {exponent}")));
    }
    if base.is_empty() {
        return Err(Error::Domain("cannot take powers of the empty word".into()));
    }
    let mut letters = Vec::with_capacity(base.len() * exponent as usize);
    for _ in 0..exponent {
        letters.extend_from_slice(&base.letters);
    }
    normalize(&CurveWord { genus: base.genus, letters })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> CurveWord {
        CurveWord::parse(s, Some(2)).unwrap()
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let x = w("a1 b1 A1 B1 a2");
        assert_eq!(x.to_string(), "a1 b1 A1 B1 a2");
        assert_eq!(CurveWord::parse("a1 b3", None).unwrap().genus, 3);
        assert_eq!(CurveWord::parse("a1", None).unwrap().genus, 2);
    }

    #[test]
    fn parse_reports_position() {
        match CurveWord::parse("a1 b1 c1", None) {
            Err(Error::Parse { pos, token }) => {
                assert_eq!(pos, 6);
                assert_eq!(token, "c1");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(CurveWord::parse("a3", Some(2)), Err(Error::Parse { .. })));
        assert!(CurveWord::parse("a0", None).is_err());
    }

    #[test]
    fn normalize_cancels_and_wraps() {
        assert_eq!(normalize(&w("a1 A1 b2")).unwrap(), w("b2"));
        assert_eq!(normalize(&w("b1 a1 a2 B1")).unwrap(), w("a1 a2"));
        assert!(normalize(&w("a1 A1")).unwrap().is_empty());
    }

    #[test]
    fn relator_and_its_conjugates_reduce_to_identity() {
        for g in 2..=4 {
            let r = CurveWord::relator(g);
            assert!(dehn_reduce_cyclic(g, &r).is_empty());
            assert!(dehn_reduce_linear(g, &r).is_empty());
            let mut c = vec![Letter::b(2)];
            c.extend_from_slice(&r);
            c.push(Letter::b(2).inv());
            assert!(dehn_reduce_linear(g, &c).is_empty());
        }
        let x = w("b1 A1 B1 a2 b2 A2 B2 a1");
        assert!(normalize(&x).unwrap().is_empty());
        // half of the relator equals the inverse of the other half
        let y = w("a1 b1 A1 B1 a2 b2 A2 B2 B1");
        assert_eq!(normalize(&y).unwrap(), w("B1"));
    }

    #[test]
    fn dehn_step_shortens_long_relator_pieces() {
        // five letters of the relator equal the inverse of the other three
        let x = w("a1 b1 A1 B1 a2 a1");
        let n = normalize(&x).unwrap();
        assert!(n.len() < x.len());
    }

    #[test]
    fn concat_power_examples() {
        assert_eq!(concat_power(&w("a1"), 3).unwrap(), w("a1 a1 a1"));
        assert_eq!(concat_power(&w("a1 b1"), 1).unwrap(), w("a1 b1"));
        assert!(matches!(concat_power(&w("a1"), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn exponent_sums_of_commutator_vanish() {
        assert!(w("a1 b1 A1 B1").exponent_sums().iter().all(|&s| s == 0));
        assert_eq!(w("a1 a1 B2").exponent_sums(), vec![2, 0, 0, -1]);
    }
}
