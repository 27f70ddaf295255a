//! Diagnostics on a fixed structure: systoles, the thick-part test and the
//! length bounds for the curve family.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hyperbolic::{collar_width, winding_length, ScaledIsometry};
use crate::representation::{cuff_layout, cuff_word, geodesic_length, Cuff, SurfaceRep};
use crate::surface_group::{commutator_eta, family_word, CurveWord, Letter};

/// Default combinatorial search depth.
pub const DEFAULT_DEPTH: usize = 12;

/// Node budget of one systole search; hitting it clears `certified`.
pub const NODE_BUDGET: usize = 4_000_000;

/// Shortest non-simple closed geodesic on any hyperbolic surface has length
/// at least `4 ln(1 + sqrt 2)`.
const NON_SIMPLE_FLOOR: f64 = 3.525_494_348_078_172;

#[derive(Debug, Clone, Serialize)]
pub struct SystoleReport {
    pub value: f64,
    #[serde(serialize_with = "word_as_string")]
    pub witness: CurveWord,
    pub search_depth: usize,
    pub certified: bool,
    /// Lower bound on every length not covered by the search.
    pub lower_bound: f64,
    pub nodes: usize,
}

pub(crate) fn word_as_string<S: Serializer>(w: &CurveWord, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

/// Side of `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The one-holed torus on `a1, b1`.
    One,
    /// The genus `g - 1` piece on `a2, ..., bg`.
    Two,
}

impl Side {
    pub fn from_index(i: u32) -> Result<Self> {
        match i {
            1 => Ok(Side::One),
            2 => Ok(Side::Two),
            _ => Err(Error::Domain(format!("side must be 1 or 2, got {i}"))),
        }
    }

    fn generators(self, genus: u32) -> Vec<Letter> {
        let handles: Vec<u32> = match self {
            Side::One => vec![1],
            Side::Two => (2..=genus).collect(),
        };
        handles.into_iter().flat_map(|k| [Letter::a(k), Letter::b(k)]).collect()
    }

    /// Genus of the side.
    pub fn genus(self, genus: u32) -> u32 {
        match self {
            Side::One => 1,
            Side::Two => genus - 1,
        }
    }

    fn contains(self, cuff: Cuff) -> bool {
        match (self, cuff) {
            (_, Cuff::Chain(1)) => false,
            (Side::One, Cuff::Meridian(1)) => true,
            (Side::One, _) => false,
            (Side::Two, Cuff::Meridian(1)) => false,
            (Side::Two, _) => true,
        }
    }
}

/// Systole bound for a closed genus-`g` surface from the embedded disc of
/// radius `sys/2`: `2 arccosh(2g - 1)`.
pub fn closed_systole_bound(genus: u32) -> f64 {
    2.0 * (2.0 * genus as f64 - 1.0).acosh()
}

/// The same bound for a genus-`h` surface with one geodesic boundary,
/// through its double: `2 arccosh(4h - 1)`.
pub fn bordered_systole_bound(side_genus: u32) -> f64 {
    2.0 * (4.0 * side_genus as f64 - 1.0).acosh()
}

struct Search<'a> {
    rep: &'a SurfaceRep,
    genus: u32,
    alphabet: Vec<Letter>,
    mats: Vec<ScaledIsometry>,
    depth: usize,
    radius: f64,
    peripheral: Option<Vec<Letter>>,
}

#[derive(Clone)]
struct Best {
    value: f64,
    word: Vec<Letter>,
    nodes: usize,
}

fn displacement(m: &ScaledIsometry) -> f64 {
    // ||m||_F^2 = 2 cosh d(o, m o)
    let s: f64 = m.entries.iter().map(|v| v * v).sum();
    let ln_half = s.ln() + 2.0 * m.log_scale - std::f64::consts::LN_2;
    crate::hyperbolic::acosh_from_ln(ln_half.max(0.0))
}

fn is_rotation_of_power(w: &[Letter], base: &[Letter]) -> bool {
    let (n, b) = (w.len(), base.len());
    if b == 0 || n % b != 0 {
        return false;
    }
    let inv: Vec<Letter> = base.iter().rev().map(|l| l.inv()).collect();
    [base, &inv[..]].iter().any(|p| (0..b).any(|s| (0..n).all(|i| w[(s + i) % n] == p[i % b])))
}

impl Search<'_> {
    fn run_from(&self, first: usize, start: &Best) -> Best {
        let mut best = start.clone();
        let mut word = vec![first];
        let acc = self.mats[first];
        self.visit(&mut word, acc, &mut best);
        best
    }

    fn visit(&self, word: &mut Vec<usize>, acc: ScaledIsometry, best: &mut Best) {
        best.nodes += 1;
        if best.nodes > NODE_BUDGET {
            return;
        }
        let first = word[0];
        let last = *word.last().expect("nonempty");
        if self.alphabet[first] != self.alphabet[last].inv() {
            self.consider(word, &acc, best);
        }
        if word.len() == self.depth {
            return;
        }
        for next in first..self.alphabet.len() {
            if self.alphabet[next] == self.alphabet[last].inv() {
                continue;
            }
            let m = acc.mul_raw(&self.mats[next]);
            if displacement(&m) > self.radius {
                continue;
            }
            word.push(next);
            self.visit(word, m, best);
            word.pop();
        }
    }

    fn consider(&self, word: &[usize], acc: &ScaledIsometry, best: &mut Best) {
        let (t, s) = acc.trace_abs_scaled();
        let half_tr = 0.5 * t * s.exp();
        if half_tr <= 1.0 + 1e-9 {
            return;
        }
        let len = 2.0 * crate::hyperbolic::acosh_from_ln(half_tr.ln());
        // ties (up to the accuracy of a trace near 2) keep the earlier, shorter word
        if len >= best.value * (1.0 - 1e-7) {
            return;
        }
        let letters: Vec<Letter> = word.iter().map(|&i| self.alphabet[i]).collect();
        if let Some(p) = &self.peripheral {
            if is_rotation_of_power(&letters, p) {
                return;
            }
        }
        // long conjugates of a short curve lose relative accuracy in the plain
        // product; redo the comparison with the conditioned length
        let cw = CurveWord { genus: self.genus, letters };
        let Ok(len) = geodesic_length(self.rep, &cw) else { return };
        if len >= best.value * (1.0 - 1e-7) {
            return;
        }
        let letters = cw.letters;
        best.value = len;
        best.word = letters;
    }
}

fn search(
    rep: &SurfaceRep,
    alphabet_gens: Vec<Letter>,
    depth: usize,
    closed_bound: f64,
    peripheral: Option<Vec<Letter>>,
    floor: f64,
    seeds: Vec<CurveWord>,
) -> Result<SystoleReport> {
    let mut alphabet = Vec::new();
    for &g in &alphabet_gens {
        alphabet.push(g);
        alphabet.push(g.inv());
    }
    let mats: Vec<ScaledIsometry> = alphabet.iter().map(|&l| *rep.letter(l)).collect();
    let max_step = mats.iter().map(displacement).fold(0.0, f64::max);
    let s = Search { rep, genus: rep.genus, alphabet, mats, depth, radius: closed_bound + 2.0 * max_step, peripheral };

    let mut start = Best { value: f64::INFINITY, word: Vec::new(), nodes: 0 };
    for w in seeds {
        let l = geodesic_length(rep, &w)?;
        if l < start.value {
            start.value = l;
            start.word = w.letters;
        }
    }
    let parts: Vec<Best> = (0..s.alphabet.len()).into_par_iter().map(|f| s.run_from(f, &start)).collect();
    let nodes: usize = parts.iter().map(|b| b.nodes).sum();
    let truncated = parts.iter().any(|b| b.nodes > NODE_BUDGET);
    let best = parts.into_iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("nonempty alphabet");
    if best.word.is_empty() {
        return Err(Error::Numeric("systole search found no hyperbolic word".into()));
    }
    let witness = CurveWord { genus: rep.genus, letters: best.word };
    let value = geodesic_length(rep, &witness)?;

    // per-letter translation length over words of length <= 2
    let mut mu = f64::INFINITY;
    for (i, &x) in s.alphabet.iter().enumerate() {
        if let Ok(l) = s.mats[i].translation_length() {
            mu = mu.min(l);
        }
        for &y in &s.alphabet {
            if y == x.inv() {
                continue;
            }
            let w = CurveWord { genus: rep.genus, letters: vec![x, y] };
            if let Ok(l) = geodesic_length(rep, &w) {
                mu = mu.min(0.5 * l);
            }
        }
    }
    let depth_bound = (depth as f64 + 1.0) * mu;
    let lower_bound = floor.max(if truncated { 0.0 } else { depth_bound });
    let certified = value <= floor * (1.0 + 1e-12) || (!truncated && depth_bound > value);
    Ok(SystoleReport { value, witness, search_depth: depth, certified, lower_bound, nodes })
}

/// Lower bound on closed geodesics that avoid the searched words: cuffs, curves
/// crossing a cuff collar, or non-simple curves inside one pair of pants.
fn collar_floor(rep: &SurfaceRep, side: Option<Side>) -> Result<f64> {
    let mut floor = NON_SIMPLE_FLOOR;
    for (i, cuff) in cuff_layout(rep.genus).into_iter().enumerate() {
        if side.is_some_and(|s| !s.contains(cuff)) {
            continue;
        }
        let l = rep.coords.lengths[i];
        floor = floor.min(l).min(2.0 * collar_width(0.5 * l)?);
    }
    Ok(floor)
}

/// Shortest closed geodesic among all words up to `depth`.
pub fn systole(rep: &SurfaceRep, depth: usize) -> Result<SystoleReport> {
    if depth < 4 {
        return Err(Error::Domain(format!("systole depth must be at least 4, got {depth}")));
    }
    let g = rep.genus;
    let gens = (1..=g).flat_map(|k| [Letter::a(k), Letter::b(k)]).collect();
    let seeds = cuff_layout(g).into_iter().map(|c| cuff_word(g, c)).collect();
    search(rep, gens, depth, closed_systole_bound(g), None, collar_floor(rep, None)?, seeds)
}

/// Shortest non-peripheral closed geodesic supported on one side of `eta`.
pub fn subsurface_systole(rep: &SurfaceRep, side: Side, depth: usize) -> Result<SystoleReport> {
    if depth < 4 {
        return Err(Error::Domain(format!("systole depth must be at least 4, got {depth}")));
    }
    let g = rep.genus;
    let gens = side.generators(g);
    let boundary = match side {
        Side::One => commutator_eta(g).letters,
        Side::Two => (2..=g).flat_map(|k| [Letter::a(k), Letter::b(k), Letter::a(k).inv(), Letter::b(k).inv()]).collect(),
    };
    let seeds = cuff_layout(g).into_iter().filter(|&c| side.contains(c)).map(|c| cuff_word(g, c)).collect();
    let floor = collar_floor(rep, Some(side))?;
    search(rep, gens, depth, bordered_systole_bound(side.genus(g)), Some(boundary), floor, seeds)
}

/// Whether both sides of `eta` have systole at least `epsilon` and
/// `eta` has length at most 1.
pub fn in_t_epsilon(rep: &SurfaceRep, epsilon: f64, depth: usize) -> Result<bool> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if rep.coords.eta_length() > 1.0 {
        return Ok(false);
    }
    for side in [Side::One, Side::Two] {
        if subsurface_systole(rep, side, depth)?.value < epsilon {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lower bound on the length of `eta^m gamma0^n` in terms of the side
/// systoles and the length of `eta`.
pub fn family_lower_bound(m: u64, n: u64, sys1: f64, sys2: f64, eta_len: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("the bound needs m >= 2, got {m}")));
    }
    let r = |x: f64| collar_width(0.5 * x);
    let n = n as f64;
    Ok(2.0 * n * (r(sys1)? + r(sys2)?) + (4.0 * n - 2.0) * r(eta_len)? + winding_length(m - 2, eta_len)?)
}

/// [`family_lower_bound`] evaluated on `rep`.
pub fn prop41_lower_bound(genus: u32, m: u64, n: u64, rep: &SurfaceRep, depth: usize) -> Result<f64> {
    if genus != rep.genus {
        return Err(Error::Domain(format!("genus {genus} does not match the structure (genus {})", rep.genus)));
    }
    if m < 2 {
        return Err(Error::Domain(format!("the bound needs m >= 2, got {m}")));
    }
    let s1 = subsurface_systole(rep, Side::One, depth)?.value;
    let s2 = subsurface_systole(rep, Side::Two, depth)?.value;
    family_lower_bound(m, n, s1, s2, rep.coords.eta_length())
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineFit {
    /// Slope in `n`.
    pub a: f64,
    pub b: f64,
    /// Largest `R(m, n) - (a n + b)` over the validation points.
    pub max_violation: f64,
    /// Largest per-step change of `R(m, n)` in `m` at fixed `n` over the
    /// upper half of the `m` range.
    pub max_m_slope: f64,
    /// `(m, n, R(m, n))` for every grid point.
    pub residuals: Vec<(u64, u64, f64)>,
}

/// Fits `R(m, n) = len(eta^m gamma0^n) - f_{m+1}(len eta) <= a n + b` on the
/// points with `m, n <= fit_max` and checks it on the rest of the grid.
pub fn affine_growth_residual(
    genus: u32,
    rep: &SurfaceRep,
    epsilon: f64,
    grid_max: u64,
    fit_max: u64,
    depth: usize,
) -> Result<AffineFit> {
    if !in_t_epsilon(rep, epsilon, depth)? {
        return Err(Error::Domain(format!("structure is not in the thick set for epsilon = {epsilon}")));
    }
    if fit_max == 0 || fit_max >= grid_max {
        return Err(Error::Domain("need 1 <= fit_max < grid_max".into()));
    }
    let eta = rep.coords.eta_length();
    let mut residuals = Vec::new();
    for n in 1..=grid_max {
        for m in 1..=grid_max {
            let w = family_word(genus, m, n)?;
            let r = geodesic_length(rep, &w)? - winding_length(m + 1, eta)?;
            residuals.push((m, n, r));
        }
    }
    // per-n envelope on the fit block, then a least-squares line through it
    let env: Vec<(f64, f64)> = (1..=fit_max)
        .map(|n| {
            let top = residuals
                .iter()
                .filter(|&&(m, k, _)| k == n && m <= fit_max)
                .map(|t| t.2)
                .fold(f64::NEG_INFINITY, f64::max);
            (n as f64, top)
        })
        .collect();
    let k = env.len() as f64;
    let (sx, sy) = env.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = env.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = env.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = env.iter().map(|&(x, y)| y - a * x).fold(f64::NEG_INFINITY, f64::max);
    let max_violation = residuals
        .iter()
        .filter(|&&(m, n, _)| m > fit_max || n > fit_max)
        .map(|&(_, n, r)| r - (a * n as f64 + b))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut max_m_slope: f64 = 0.0;
    for n in 1..=grid_max {
        let row: Vec<f64> = residuals.iter().filter(|t| t.1 == n).map(|t| t.2).collect();
        for w in row[row.len() / 2..].windows(2) {
            max_m_slope = max_m_slope.max((w[1] - w[0]).abs());
        }
    }
    Ok(AffineFit { a, b, max_violation, max_m_slope, residuals })
}

/// Distance between the axes of two hyperbolic elements; `None` when the
/// axes cross or share an endpoint.
pub fn axis_distance(x: &ScaledIsometry, y: &ScaledIsometry) -> Result<Option<f64>> {
    // normalised traceless parts are unit spacelike vectors for the Killing
    // form; their pairing is cosh of the distance between disjoint axes
    let unit = |m: &ScaledIsometry| -> Result<[f64; 4]> {
        let e = m.to_unscaled().ok_or_else(|| Error::Numeric("isometry too large to unscale".into()))?;
        let h = 0.5 * (e[0] + e[3]);
        let k = (h * h - 1.0).sqrt();
        if !(k > 0.0) {
            return Err(Error::NotHyperbolic { trace: 2.0 * h });
        }
        Ok([(e[0] - h) / k, e[1] / k, e[2] / k, (e[3] - h) / k])
    };
    let (u, v) = (unit(x)?, unit(y)?);
    let pairing = 0.5 * (u[0] * v[0] + u[1] * v[2] + u[2] * v[1] + u[3] * v[3]);
    let c = pairing.abs();
    Ok(if c > 1.0 { Some(c.acosh()) } else { None })
}
