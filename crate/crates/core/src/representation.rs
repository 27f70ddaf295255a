//! Fenchel-Nielsen coordinates and the holonomy representation they define.
//!
//! The pants decomposition is fixed per genus. Cuff index layout:
//! `[c_1, ..., c_{g-1}, a_1, ..., a_g, e_2, ..., e_{g-1}]` where
//! `c_k = [a_1,b_1]...[a_k,b_k]` and `e_k = [a_k,b_k]`. `c_1` is `eta`.
//!
//! The surface is assembled from one-holed tori around each handle, joined
//! through the pants bounded by `c_{k-1}`, `e_k` and `c_k`.

use std::fmt;

use std::sync::Arc;

use rand::Rng;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{compose, trace_to_length, ScaledIsometry};
use crate::simplex::{self, SimplexOptions};
use crate::surface_group::{CurveWord, Letter, TwistAxis};

/// Upper cap on cuff lengths.
pub const MAX_CUFF_LENGTH: f64 = 50.0;

/// A point of Teichmueller space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FNCoords {
    pub genus: u32,
    pub lengths: Vec<f64>,
    pub twists: Vec<f64>,
}

/// What a cuff index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cuff {
    /// `c_k`, separating handles `1..=k` from the rest.
    Chain(u32),
    /// `a_k`.
    Meridian(u32),
    /// `e_k = [a_k, b_k]` for `2 <= k <= g-1`.
    Handle(u32),
}

pub fn cuff_count(genus: u32) -> usize {
    3 * genus as usize - 3
}

pub fn cuff_layout(genus: u32) -> Vec<Cuff> {
    let mut out: Vec<Cuff> = (1..genus).map(Cuff::Chain).collect();
    out.extend((1..=genus).map(Cuff::Meridian));
    out.extend((2..genus).map(Cuff::Handle));
    out
}

pub fn cuff_index(genus: u32, cuff: Cuff) -> Option<usize> {
    cuff_layout(genus).iter().position(|&c| c == cuff)
}

/// Word of a pants curve.
pub fn cuff_word(genus: u32, cuff: Cuff) -> CurveWord {
    let comm = |k: u32| [Letter::a(k), Letter::b(k), Letter::a(k).inv(), Letter::b(k).inv()];
    let letters = match cuff {
        Cuff::Chain(k) => (1..=k).flat_map(comm).collect(),
        Cuff::Meridian(k) => vec![Letter::a(k)],
        Cuff::Handle(k) => comm(k).to_vec(),
    };
    CurveWord { genus, letters }
}

/// Mapping class realised by adding one full twist to a cuff: with
/// `twists[i] += lengths[i]` the length of `w` becomes the old length of
/// `apply_twist_axis(w, axis, power)`.
pub fn full_twist_action(genus: u32, cuff: Cuff) -> (TwistAxis, i64) {
    match cuff {
        Cuff::Meridian(k) => (TwistAxis::A(k), -1),
        Cuff::Chain(k) if k + 1 == genus => (TwistAxis::Chain(k), 1),
        Cuff::Chain(k) => (TwistAxis::Chain(k), -1),
        Cuff::Handle(k) => (TwistAxis::Handle(k), 1),
    }
}

impl FNCoords {
    pub fn new(genus: u32, lengths: Vec<f64>, twists: Vec<f64>) -> Result<Self> {
        let c = Self { genus, lengths, twists };
        c.validate()?;
        Ok(c)
    }

    /// All cuffs of length `length`, twists zero.
    pub fn uniform(genus: u32, length: f64) -> Result<Self> {
        Self::new(genus, vec![length; cuff_count(genus)], vec![0.0; cuff_count(genus)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            return Err(Error::Domain(format!("genus must be at least 2, got {}", self.genus)));
        }
        let n = cuff_count(self.genus);
        if self.lengths.len() != n || self.twists.len() != n {
            return Err(Error::Domain(format!("genus {} needs {n} lengths and twists", self.genus)));
        }
        for (i, &l) in self.lengths.iter().enumerate() {
            if !(l > 0.0 && l <= MAX_CUFF_LENGTH) {
                return Err(Error::Domain(format!("cuff {i} length {l} outside (0, {MAX_CUFF_LENGTH}]")));
            }
        }
        if self.twists.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("twists must be finite".into()));
        }
        Ok(())
    }

    /// Length of `eta`, the cuff at index 0.
    pub fn eta_length(&self) -> f64 {
        self.lengths[0]
    }

    /// Random structure with log-uniform lengths in `[lo, hi]` and twists
    /// uniform in `[0, length)`.
    pub fn random<R: Rng + ?Sized>(genus: u32, lo: f64, hi: f64, rng: &mut R) -> Self {
        let n = cuff_count(genus);
        let lengths: Vec<f64> = (0..n).map(|_| (rng.gen_range(lo.ln()..=hi.ln())).exp()).collect();
        let twists = lengths.iter().map(|&l| rng.gen_range(0.0..l)).collect();
        Self { genus, lengths, twists }
    }

    /// Twists reduced into `[0, length)`.
    pub fn normalized_twists(&self) -> Vec<f64> {
        self.twists.iter().zip(&self.lengths).map(|(&t, &l)| t.rem_euclid(l)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coordinates serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for FNCoords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "genus {}:", self.genus)?;
        for (c, (l, t)) in cuff_layout(self.genus).iter().zip(self.lengths.iter().zip(&self.twists)) {
            let name = match c {
                Cuff::Chain(k) => format!("c{k}"),
                Cuff::Meridian(k) => format!("a{k}"),
                Cuff::Handle(k) => format!("e{k}"),
            };
            write!(f, " {name}=({l:.12}, {t:.12})")?;
        }
        Ok(())
    }
}

// --- SL(2,R) assembly in extended precision -----------------------------

/// Working precision, in bits, for assembling the generators.
pub const ASSEMBLY_PRECISION: u32 = 160;

type M2 = [Float; 4];

#[derive(Clone, Copy)]
struct Ctx {
    prec: u32,
}

impl Ctx {
    fn num(&self, x: f64) -> Float {
        Float::with_val(self.prec, x)
    }

    fn mul(&self, a: &M2, b: &M2) -> M2 {
        let p = self.prec;
        let e = |i: usize, j: usize, k: usize, l: usize| Float::with_val(p, &a[i] * &b[j]) + &a[k] * &b[l];
        [e(0, 0, 1, 2), e(0, 1, 1, 3), e(2, 0, 3, 2), e(2, 1, 3, 3)]
    }

    fn inv(&self, a: &M2) -> M2 {
        [a[3].clone(), -a[1].clone(), -a[2].clone(), a[0].clone()]
    }

    fn neg(&self, a: &M2) -> M2 {
        [-a[0].clone(), -a[1].clone(), -a[2].clone(), -a[3].clone()]
    }

    fn conj(&self, n: &M2, x: &M2) -> M2 {
        self.mul(&self.mul(n, x), &self.inv(n))
    }

    fn diag_f(&self, t: &Float) -> M2 {
        let half = Float::with_val(self.prec, t / 2u32);
        let e = half.exp();
        let ei = Float::with_val(self.prec, e.recip_ref());
        [e, self.num(0.0), self.num(0.0), ei]
    }

    fn diag(&self, t: f64) -> M2 {
        self.diag_f(&self.num(t))
    }

    /// Translation by `s` along the geodesic from -1 to 1.
    fn perp_translation(&self, s: &Float) -> M2 {
        let half = Float::with_val(self.prec, s / 2u32);
        let (sh, ch) = half.sinh_cosh(Float::new(self.prec));
        [ch.clone(), sh.clone(), sh, ch]
    }

    fn trace(&self, m: &M2) -> Float {
        Float::with_val(self.prec, &m[0] + &m[3])
    }

    /// Repelling and attracting fixed points as projective vectors.
    fn fixed_vectors(&self, m: &M2) -> Result<([Float; 2], [Float; 2])> {
        let p = self.prec;
        let t = self.trace(m);
        let disc = Float::with_val(p, t.square_ref()) - 4u32;
        if disc <= 0 {
            return Err(Error::NotHyperbolic { trace: t.to_f64() });
        }
        let root = disc.sqrt();
        let big = if t > 0 { Float::with_val(p, &t + &root) / 2u32 } else { Float::with_val(p, &t - &root) / 2u32 };
        let small = Float::with_val(p, big.recip_ref());
        let eig = |lam: &Float| {
            let v1 = [m[1].clone(), Float::with_val(p, lam - &m[0])];
            let v2 = [Float::with_val(p, lam - &m[3]), m[2].clone()];
            let n1 = Float::with_val(p, v1[0].hypot_ref(&v1[1]));
            let n2 = Float::with_val(p, v2[0].hypot_ref(&v2[1]));
            if n1 >= n2 {
                v1
            } else {
                v2
            }
        };
        Ok((eig(&small), eig(&big)))
    }

    fn apply_vec(&self, m: &M2, v: &[Float; 2]) -> [Float; 2] {
        let p = self.prec;
        [
            Float::with_val(p, &m[0] * &v[0]) + &m[1] * &v[1],
            Float::with_val(p, &m[2] * &v[0]) + &m[3] * &v[1],
        ]
    }

    /// Frame for the oriented axis of `m`: sends `0`, `inf` to the repelling
    /// and attracting fixed points and `i` to the foot of the perpendicular
    /// dropped from the axis of `reference`.
    fn axis_frame(&self, m: &M2, reference: &M2) -> Result<M2> {
        let p = self.prec;
        let (mut r, s) = self.fixed_vectors(m)?;
        let mut det = Float::with_val(p, &s[0] * &r[1]) - Float::with_val(p, &r[0] * &s[1]);
        if det < 0 {
            r = [-r[0].clone(), -r[1].clone()];
            det = -det;
        }
        if det <= 0 {
            return Err(Error::Numeric("degenerate axis frame".into()));
        }
        let k = det.sqrt().recip();
        let base = [
            Float::with_val(p, &s[0] * &k),
            Float::with_val(p, &r[0] * &k),
            Float::with_val(p, &s[1] * &k),
            Float::with_val(p, &r[1] * &k),
        ];
        let bi = self.inv(&base);
        let (rr, ss) = self.fixed_vectors(reference)?;
        let u = self.apply_vec(&bi, &rr);
        let v = self.apply_vec(&bi, &ss);
        let uv = Float::with_val(p, &u[0] / &u[1]) * Float::with_val(p, &v[0] / &v[1]);
        if !(uv > 0 && uv.is_finite()) {
            return Err(Error::Numeric("axes are not ultraparallel".into()));
        }
        let half_log = uv.ln() / 2u32;
        Ok(self.mul(&base, &self.diag_f(&half_log)))
    }

    /// Orientation-preserving isometry taking the oriented axis of `from` to
    /// the oriented axis of `to`, moving the reference foot by `twist`.
    fn gluing_map(&self, to: &M2, to_ref: &M2, from: &M2, from_ref: &M2, twist: f64) -> Result<M2> {
        let ft = self.axis_frame(to, to_ref)?;
        let ff = self.axis_frame(from, from_ref)?;
        Ok(self.mul(&self.mul(&ft, &self.diag(twist)), &self.inv(&ff)))
    }

    /// Pants generators `(X, Y)` with translation lengths `l1`, `l2` and
    /// `tr(XY) = -2 cosh(l3/2)`; the pants lies to the right of both axes.
    fn pants(&self, l1: f64, l2: f64, l3: f64) -> (M2, M2) {
        let p = self.prec;
        let h = |l: f64| Float::with_val(p, l) / 2u32;
        let (h1, h2, h3) = (h(l1), h(l2), h(l3));
        let (s1, c1) = h1.sinh_cosh(Float::new(p));
        let (s2, c2) = h2.sinh_cosh(Float::new(p));
        let cosh_d = (h3.cosh() + Float::with_val(p, &c1 * &c2)) / (s1 * s2);
        let d = cosh_d.acosh();
        let x = self.diag(l1);
        let hm = self.perp_translation(&d);
        let y = self.conj(&hm, &self.diag(-l2));
        (x, y)
    }

    /// One-holed torus generators `(A, B)` and `K = [A, B]` with
    /// `tr K = -2 cosh(boundary/2)`.
    fn one_holed_torus(&self, meridian: f64, twist: f64, boundary: f64) -> Result<(M2, M2, M2)> {
        let (x, y) = self.pants(meridian, meridian, boundary);
        let z = self.inv(&self.mul(&x, &y));
        let b = self.gluing_map(&y, &z, &self.inv(&x), &z, twist)?;
        let k = self.mul(&self.mul(&x, &b), &self.mul(&self.inv(&x), &self.inv(&b)));
        Ok((x, b, k))
    }

    fn normalize_det(&self, a: &M2) -> M2 {
        let p = self.prec;
        let d = Float::with_val(p, &a[0] * &a[3]) - Float::with_val(p, &a[1] * &a[2]);
        let s = d.abs().sqrt().recip();
        [
            Float::with_val(p, &a[0] * &s),
            Float::with_val(p, &a[1] * &s),
            Float::with_val(p, &a[2] * &s),
            Float::with_val(p, &a[3] * &s),
        ]
    }
}

/// Conjugates the generators so the basepoint sits where their total
/// Frobenius norm is smallest; keeps double-precision products well
/// conditioned.
fn balance(cx: &Ctx, gens: Vec<M2>) -> Vec<M2> {
    let approx: Vec<[f64; 4]> = gens.iter().map(|m| [m[0].to_f64(), m[1].to_f64(), m[2].to_f64(), m[3].to_f64()]).collect();
    // T = [[e, x/e], [0, 1/e]] moves i to x + e^2 i
    let cost = |p: &[f64]| {
        let (x, e2) = (p[0], p[1].exp());
        approx
            .iter()
            .map(|&[a, b, c, d]| {
                let n = [a - x * c, (a * x + b - x * (c * x + d)) / e2, c * e2, c * x + d];
                n.iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
    };
    let opts = SimplexOptions { max_evals: 400, f_tol: 1e-10, x_tol: 1e-6 };
    let best = simplex::minimize(cost, &[0.0, 0.0], &[0.5, 0.5], opts);
    if !(best.value < cost(&[0.0, 0.0])) {
        return gens;
    }
    let p = cx.prec;
    let x = cx.num(best.x[0]);
    let e = Float::with_val(p, best.x[1] / 2.0).exp();
    let ei = Float::with_val(p, e.recip_ref());
    let t = [e.clone(), Float::with_val(p, &x * &ei), cx.num(0.0), ei.clone()];
    let t_inv = cx.inv(&t);
    gens.iter().map(|m| cx.mul(&cx.mul(&t_inv, m), &t)).collect()
}

/// Generator matrices `rho(a_1), rho(b_1), ...` at `prec` bits.
fn assemble(fnc: &FNCoords, prec: u32) -> Result<Vec<M2>> {
    fnc.validate()?;
    let cx = Ctx { prec };
    let g = fnc.genus;
    let idx = |c: Cuff| cuff_index(g, c).expect("cuff in layout");
    let len = |c: Cuff| fnc.lengths[idx(c)];
    let tw = |c: Cuff| fnc.twists[idx(c)];

    let mut gens: Vec<M2> = Vec::with_capacity(2 * g as usize);
    // first handle, bounded by c_1
    let (a1, b1, k1) = cx.one_holed_torus(len(Cuff::Meridian(1)), tw(Cuff::Meridian(1)), len(Cuff::Chain(1)))?;
    gens.push(a1);
    gens.push(b1);
    let mut chain = k1;
    // another cuff of the piece on the built side of `chain`
    let mut chain_ref = gens[0].clone();
    for k in 2..g {
        // pants (c_{k-1}, e_k, c_k) glued along c_{k-1}
        let (x, y) = cx.pants(len(Cuff::Chain(k - 1)), len(Cuff::Handle(k)), len(Cuff::Chain(k)));
        let n = cx.gluing_map(&chain, &chain_ref, &x, &y, tw(Cuff::Chain(k - 1)))?;
        let e_k = cx.neg(&cx.conj(&n, &y));
        let x_img = cx.conj(&n, &x);
        // handle k glued along e_k
        let (a, b, kk) = cx.one_holed_torus(len(Cuff::Meridian(k)), tw(Cuff::Meridian(k)), len(Cuff::Handle(k)))?;
        let m = cx.gluing_map(&e_k, &x_img, &kk, &a, tw(Cuff::Handle(k)))?;
        gens.push(cx.conj(&m, &a));
        gens.push(cx.conj(&m, &b));
        chain = cx.mul(&chain, &e_k);
        chain_ref = e_k;
    }
    // last handle closes the surface: [A_g, B_g] = c_{g-1}^{-1}
    let (a, b, kk) = cx.one_holed_torus(len(Cuff::Meridian(g)), tw(Cuff::Meridian(g)), len(Cuff::Chain(g - 1)))?;
    let target = cx.inv(&chain);
    let m = cx.gluing_map(&target, &chain_ref, &kk, &a, tw(Cuff::Chain(g - 1)))?;
    gens.push(cx.conj(&m, &a));
    gens.push(cx.conj(&m, &b));
    let gens: Vec<M2> = gens.iter().map(|m| cx.normalize_det(m)).collect();
    let gens = balance(&cx, gens);
    if gens.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("representation overflowed".into()));
    }
    Ok(gens)
}

/// Generator matrices of the holonomy representation.
#[derive(Debug, Clone)]
pub struct SurfaceRep {
    pub genus: u32,
    pub coords: FNCoords,
    /// `generators[2k]` is rho(a_{k+1}), `generators[2k+1]` is rho(b_{k+1}).
    pub generators: Vec<ScaledIsometry>,
    inverses: Vec<ScaledIsometry>,
    precise: Arc<PreciseRep>,
}

pub fn build_representation(fnc: &FNCoords) -> Result<SurfaceRep> {
    let precise = PreciseRep::new(fnc, ASSEMBLY_PRECISION)?;
    let generators: Vec<ScaledIsometry> = precise
        .generators
        .iter()
        .map(|m| ScaledIsometry { entries: [m[0].to_f64(), m[1].to_f64(), m[2].to_f64(), m[3].to_f64()], log_scale: 0.0 })
        .collect();
    if generators.iter().any(|s| !s.is_finite() || s.max_abs_entry() > 1e150) {
        return Err(Error::Numeric("representation overflowed".into()));
    }
    let inverses = generators.iter().map(ScaledIsometry::inverse).collect();
    Ok(SurfaceRep { genus: fnc.genus, coords: fnc.clone(), generators, inverses, precise: Arc::new(precise) })
}

/// The same representation kept at `prec` bits, used as a reference for the
/// double-precision length engine.
#[derive(Debug, Clone)]
pub struct PreciseRep {
    pub genus: u32,
    prec: u32,
    generators: Vec<M2>,
}

impl PreciseRep {
    pub fn new(fnc: &FNCoords, prec: u32) -> Result<Self> {
        Ok(Self { genus: fnc.genus, prec, generators: assemble(fnc, prec)? })
    }

    fn product(&self, letters: &[Letter]) -> M2 {
        let cx = Ctx { prec: self.prec };
        let mut acc = [cx.num(1.0), cx.num(0.0), cx.num(0.0), cx.num(1.0)];
        for &l in letters {
            let m = &self.generators[l.generator_index()];
            let m = if l.is_inverse() { cx.inv(m) } else { m.clone() };
            acc = cx.mul(&acc, &m);
        }
        acc
    }

    pub fn relator_defect(&self) -> f64 {
        let r = self.product(&CurveWord::relator(self.genus));
        let e: Vec<f64> = r.iter().map(Float::to_f64).collect();
        let dist = |s: f64| (e[0] - s).abs().max(e[1].abs()).max(e[2].abs()).max((e[3] - s).abs());
        dist(1.0).min(dist(-1.0))
    }

    pub fn geodesic_length(&self, w: &CurveWord) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::Domain("the identity word has no geodesic".into()));
        }
        let cx = Ctx { prec: self.prec };
        let acc = self.product(&w.letters);
        let t = cx.trace(&acc).abs();
        if t <= 2 {
            return Err(Error::NotHyperbolic { trace: t.to_f64() });
        }
        Ok((t / 2u32).acosh().to_f64() * 2.0)
    }
}

impl SurfaceRep {
    pub fn letter(&self, l: Letter) -> &ScaledIsometry {
        if l.is_inverse() {
            &self.inverses[l.generator_index()]
        } else {
            &self.generators[l.generator_index()]
        }
    }

    pub fn word_matrix(&self, letters: &[Letter]) -> Result<ScaledIsometry> {
        let mut acc = ScaledIsometry::IDENTITY;
        for &l in letters {
            acc = acc.mul_raw(self.letter(l));
        }
        if !acc.is_finite() {
            return Err(Error::Numeric("word product overflowed".into()));
        }
        Ok(compose(&acc, &ScaledIsometry::IDENTITY)?)
    }

    /// Entrywise distance of the relator image from `+-I`, evaluated at the
    /// assembly precision.
    pub fn relator_defect(&self) -> f64 {
        self.precise.relator_defect()
    }

    pub fn precise(&self) -> &PreciseRep {
        &self.precise
    }
}

/// Translation length of `rho(w)`.
///
/// The double-precision product carries a first-order rounding estimate
/// `eps * sum |prefix| |suffix|`; when that estimate is too coarse for the
/// resulting length the word is re-evaluated in multiprecision.
pub fn geodesic_length(rep: &SurfaceRep, w: &CurveWord) -> Result<f64> {
    if w.genus != rep.genus {
        return Err(Error::Domain(format!("word of genus {} on a genus-{} surface", w.genus, rep.genus)));
    }
    if w.is_empty() {
        return Err(Error::Domain("the identity word has no geodesic".into()));
    }
    let letters = &w.letters;
    let ln_norm = |m: &ScaledIsometry| m.max_abs_entry().ln() + m.log_scale;
    let mut acc = ScaledIsometry::IDENTITY;
    let mut prefix = Vec::with_capacity(letters.len() + 1);
    prefix.push(0.0);
    for &l in letters {
        acc = acc.mul_raw(rep.letter(l));
        prefix.push(ln_norm(&acc));
    }
    if !acc.is_finite() {
        return Err(Error::Numeric("word product overflowed".into()));
    }
    let mut suffix = vec![0.0; letters.len() + 1];
    let mut back = ScaledIsometry::IDENTITY;
    for (i, &l) in letters.iter().enumerate().rev() {
        back = rep.letter(l).mul_raw(&back);
        suffix[i] = ln_norm(&back);
    }
    let terms: Vec<f64> = prefix.iter().zip(&suffix).map(|(p, q)| p + q).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_err = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln() + (4.0 * f64::EPSILON).ln();

    let (tr, scale) = acc.trace_abs_scaled();
    let fast = trace_to_length(tr, scale);
    // d(length) = d|tr| / sinh(length / 2)
    let ln_len_err = |len: f64| ln_err - ln_sinh_half(len);
    match fast {
        Ok(len) if ln_len_err(len) < (1e-11 * len.max(1.0)).ln() => Ok(len),
        _ => {
            let plain = 128.0 + (ln_err - f64::EPSILON.ln()) / std::f64::consts::LN_2;
            let bits = ((plain / 64.0).ceil() as u32 * 64).max(ASSEMBLY_PRECISION);
            if bits <= ASSEMBLY_PRECISION {
                rep.precise.geodesic_length(w)
            } else {
                PreciseRep::new(&rep.coords, bits)?.geodesic_length(w)
            }
        }
    }
}

fn ln_sinh_half(len: f64) -> f64 {
    let h = 0.5 * len;
    if h > 20.0 {
        h - std::f64::consts::LN_2
    } else {
        h.sinh().ln()
    }
}

pub fn eta_length(fnc: &FNCoords) -> f64 {
    fnc.eta_length()
}
