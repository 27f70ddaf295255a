//! Geometric intersection oracle.
//!
//! A closed geodesic is traced through the Dirichlet domain of the concrete
//! Fuchsian group in the Klein model, where geodesics are straight chords.
//! Self-intersections of a primitive class are transverse crossings between
//! its chords; the ribbon structure at the crossings gives the number of
//! complementary boundary cycles and hence the filling test.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::Float;

use super::fuchsian::{DomainShape, Face, FuchsianGroup, Mat3};
use super::word::{dehn_reduce_cyclic, CurveWord, Letter};
use crate::error::{Error, Result};

const CENTERS: [(f64, f64); 6] = [
    (0.0123, 0.0311),
    (-0.0217, 0.0093),
    (0.0371, -0.0189),
    (-0.0054, -0.0402),
    (0.0291, 0.0447),
    (-0.0388, -0.0151),
];

/// Maximum number of chords traced before giving up.
const MAX_CHORDS: usize = 400_000;

#[derive(Debug)]
struct Degenerate;

/// One chord of a traced geodesic in Klein coordinates.
#[derive(Clone, Debug)]
pub struct Chord {
    pub start: (f64, f64),
    pub end: (f64, f64),
    start_hp: [Float; 2],
    end_hp: [Float; 2],
}

/// The primitive closed geodesic underlying a word and its multiplicity.
#[derive(Clone, Debug)]
pub struct TracedCurve {
    pub chords: Vec<Chord>,
    /// `w = delta^multiplicity` with `delta` primitive.
    pub multiplicity: u64,
    pub length: f64,
    pub primitive_length: f64,
}

struct Surface {
    shape: DomainShape,
    by_prec: Mutex<HashMap<u32, Arc<(FuchsianGroup, Vec<Face>)>>>,
}

impl Surface {
    fn at_prec(&self, prec: u32) -> Result<Arc<(FuchsianGroup, Vec<Face>)>> {
        let mut map = self.by_prec.lock().unwrap();
        if let Some(s) = map.get(&prec) {
            return Ok(s.clone());
        }
        let grp = FuchsianGroup::new(self.shape.genus, prec)?;
        let faces = self.shape.faces(&grp);
        let entry = Arc::new((grp, faces));
        map.insert(prec, entry.clone());
        Ok(entry)
    }
}

type SurfaceKey = (u32, usize);

fn surfaces() -> &'static Mutex<HashMap<SurfaceKey, Arc<Surface>>> {
    static S: OnceLock<Mutex<HashMap<SurfaceKey, Arc<Surface>>>> = OnceLock::new();
    S.get_or_init(|| Mutex::new(HashMap::new()))
}

fn surface(genus: u32, center_idx: usize) -> Result<Arc<Surface>> {
    let key = (genus, center_idx);
    if let Some(s) = surfaces().lock().unwrap().get(&key) {
        return Ok(s.clone());
    }
    let grp = FuchsianGroup::new(genus, 128)?;
    let mut last_err = None;
    let mut shape = None;
    for radius in [6.0, 8.0, 10.0, 12.0, 14.0] {
        match DomainShape::compute(&grp, CENTERS[center_idx], radius) {
            Ok(s) => {
                shape = Some(s);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let shape = shape.ok_or_else(|| last_err.unwrap())?;
    let s = Arc::new(Surface { shape, by_prec: Mutex::new(HashMap::new()) });
    surfaces().lock().unwrap().insert(key, s.clone());
    Ok(s)
}

fn prec_for_length(bound: f64) -> u32 {
    let bits = 128.0 + 3.0 * bound / std::f64::consts::LN_2;
    (bits / 128.0).ceil() as u32 * 128
}

fn face_value(f: &Face, x: &[Float; 2]) -> Float {
    let p = x[0].prec();
    let mut v = Float::with_val(p, &f.coeffs[1] * &x[0]);
    v += Float::with_val(p, &f.coeffs[2] * &x[1]);
    v += &f.coeffs[0];
    v
}

fn apply_klein(m: &Mat3, x: &[Float; 2]) -> [Float; 2] {
    let p = x[0].prec();
    let v = m.apply(&[Float::with_val(p, 1), x[0].clone(), x[1].clone()]);
    [Float::with_val(p, &v[1] / &v[0]), Float::with_val(p, &v[2] / &v[0])]
}

fn lerp(a: &[Float; 2], b: &[Float; 2], t: &Float) -> [Float; 2] {
    let p = a[0].prec();
    std::array::from_fn(|i| {
        let d = Float::with_val(p, &b[i] - &a[i]);
        Float::with_val(p, &a[i] + d * t)
    })
}

fn dist2(a: &[Float; 2], b: &[Float; 2]) -> Float {
    let p = a[0].prec();
    let dx = Float::with_val(p, &a[0] - &b[0]);
    let dy = Float::with_val(p, &a[1] - &b[1]);
    dx.square() + dy.square()
}

/// Entry/exit parameters of the chord `a + t (b - a)` through the domain.
fn clip_chord(faces: &[Face], a: &[Float; 2], b: &[Float; 2], tie: &Float) -> std::result::Result<(Float, usize, Float, usize), Degenerate> {
    let p = a[0].prec();
    let d = [Float::with_val(p, &b[0] - &a[0]), Float::with_val(p, &b[1] - &a[1])];
    let mut t_in = Float::with_val(p, f64::NEG_INFINITY);
    let mut t_out = Float::with_val(p, f64::INFINITY);
    let mut in_face = usize::MAX;
    let mut out_face = usize::MAX;
    let mut second_in = Float::with_val(p, f64::NEG_INFINITY);
    let mut second_out = Float::with_val(p, f64::INFINITY);
    for (k, f) in faces.iter().enumerate() {
        let fa = face_value(f, a);
        let mut cd = Float::with_val(p, &f.coeffs[1] * &d[0]);
        cd += Float::with_val(p, &f.coeffs[2] * &d[1]);
        if cd.is_zero() {
            continue;
        }
        let t = -(fa / &cd);
        if cd.is_sign_positive() {
            if t < t_out {
                second_out = std::mem::replace(&mut t_out, t);
                out_face = k;
            } else if t < second_out {
                second_out = t;
            }
        } else if t > t_in {
            second_in = std::mem::replace(&mut t_in, t);
            in_face = k;
        } else if t > second_in {
            second_in = t;
        }
    }
    if in_face == usize::MAX || out_face == usize::MAX || t_in >= t_out {
        return Err(Degenerate);
    }
    // passing through a vertex of the domain
    if Float::with_val(p, &second_out - &t_out) < *tie || Float::with_val(p, &t_in - &second_in) < *tie {
        return Err(Degenerate);
    }
    Ok((t_in, in_face, t_out, out_face))
}

fn hyperbolic_segment_length(a: (f64, f64), b: (f64, f64)) -> f64 {
    let na = 1.0 - a.0 * a.0 - a.1 * a.1;
    let nb = 1.0 - b.0 * b.0 - b.1 * b.1;
    let dot = 1.0 - a.0 * b.0 - a.1 * b.1;
    (dot / (na * nb).sqrt()).max(1.0).acosh()
}

fn trace_on(surf: &Surface, word: &[Letter], length_bound: f64) -> std::result::Result<Result<TracedCurve>, Degenerate> {
    let prec = prec_for_length(length_bound);
    let entry = match surf.at_prec(prec) {
        Ok(e) => e,
        Err(e) => return Ok(Err(e)),
    };
    let (grp, faces) = (&entry.0, &entry.1);
    let w = grp.word_matrix(word);
    let length = w.translation_length().to_f64();
    if length == 0.0 {
        return Ok(Err(Error::Domain("word is not a hyperbolic element".into())));
    }
    if length > length_bound + 1e-9 {
        return Ok(trace_on(surf, word, length * 1.05)?);
    }
    let (fwd, bwd) = match w.fixed_points() {
        Ok(x) => x,
        Err(e) => return Ok(Err(e)),
    };
    let tie = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
    let p = prec;

    // reduce a point of the axis into the domain, moving the axis with it
    let (mut a, mut b) = (bwd, fwd);
    let d = [Float::with_val(p, &b[0] - &a[0]), Float::with_val(p, &b[1] - &a[1])];
    let dd = Float::with_val(p, d[0].clone().square() + d[1].clone().square());
    let mut ad = Float::with_val(p, &a[0] * &d[0]);
    ad += Float::with_val(p, &a[1] * &d[1]);
    let t0 = -(ad / dd);
    let mut x = lerp(&a, &b, &t0);
    let mut steps = 0;
    loop {
        let mut worst: Option<(usize, Float)> = None;
        for (k, f) in faces.iter().enumerate() {
            let v = face_value(f, &x);
            if v.is_sign_positive() && !v.is_zero() && worst.as_ref().is_none_or(|(_, wv)| v > *wv) {
                worst = Some((k, v));
            }
        }
        let Some((k, _)) = worst else { break };
        let m = &faces[k].mat_inv;
        x = apply_klein(m, &x);
        a = apply_klein(m, &a);
        b = apply_klein(m, &b);
        steps += 1;
        if steps > 100_000 {
            return Ok(Err(Error::Numeric("point reduction into the domain did not terminate".into())));
        }
    }

    let mut chords: Vec<Chord> = Vec::new();
    let (a0, b0) = (a.clone(), b.clone());
    let close = Float::with_val(p, Float::i_exp(1, -(prec as i32) / 2));
    let mut traced = 0.0;
    loop {
        let (t_in, _fin, t_out, fout) = clip_chord(faces, &a, &b, &tie)?;
        let s_hp = lerp(&a, &b, &t_in);
        let e_hp = lerp(&a, &b, &t_out);
        let start = (s_hp[0].to_f64(), s_hp[1].to_f64());
        let end = (e_hp[0].to_f64(), e_hp[1].to_f64());
        traced += hyperbolic_segment_length(start, end);
        chords.push(Chord { start, end, start_hp: s_hp, end_hp: e_hp });
        let m = &faces[fout].mat_inv;
        a = apply_klein(m, &a);
        b = apply_klein(m, &b);
        let back = Float::with_val(p, dist2(&a, &a0) + dist2(&b, &b0));
        if back < close {
            break;
        }
        if chords.len() > MAX_CHORDS || traced > length * 1.5 + 10.0 {
            return Ok(Err(Error::Numeric("geodesic tracing did not close up".into())));
        }
    }
    let mult = (length / traced).round().max(1.0);
    if ((length / traced) - mult).abs() > 1e-6 {
        return Ok(Err(Error::Numeric(format!("traced length {traced} does not divide {length}"))));
    }
    Ok(Ok(TracedCurve { chords, multiplicity: mult as u64, length, primitive_length: traced }))
}

/// Displacement bound used to pick the working precision before the real
/// translation length is known.
fn length_bound(genus: u32, word: &[Letter]) -> Result<f64> {
    let grp = FuchsianGroup::new(genus, 128)?;
    let mut worst: f64 = 0.0;
    let o = [Float::with_val(128, 1), Float::with_val(128, 0), Float::with_val(128, 0)];
    for g in &grp.gens {
        let q = g.apply(&o);
        worst = worst.max(q[0].to_f64().acosh());
    }
    Ok(worst * word.len() as f64 + 1.0)
}

/// Runs `f` on the first Dirichlet domain for which everything is generic.
fn with_generic_domain<T>(genus: u32, mut f: impl FnMut(&Surface) -> std::result::Result<Result<T>, Degenerate>) -> Result<T> {
    for idx in 0..CENTERS.len() {
        let s = surface(genus, idx)?;
        match f(&s) {
            Ok(r) => return r,
            Err(Degenerate) => continue,
        }
    }
    Err(Error::Numeric("no generic Dirichlet domain found".into()))
}

fn prepared(w: &CurveWord) -> Result<Vec<Letter>> {
    let r = dehn_reduce_cyclic(w.genus, &w.letters);
    if r.is_empty() {
        return Err(Error::Domain("the identity word has no geodesic representative".into()));
    }
    Ok(r)
}

/// Traces the closed geodesic of a word through a generic domain.
pub fn trace(w: &CurveWord) -> Result<TracedCurve> {
    let letters = prepared(w)?;
    let bound = length_bound(w.genus, &letters)?;
    with_generic_domain(w.genus, |s| trace_on(s, &letters, bound))
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn orient_hp(a: &[Float; 2], b: &[Float; 2], c: &[Float; 2]) -> Float {
    let p = a[0].prec();
    let l = Float::with_val(p, &b[0] - &a[0]) * Float::with_val(p, &c[1] - &a[1]);
    let r = Float::with_val(p, &b[1] - &a[1]) * Float::with_val(p, &c[0] - &a[0]);
    l - r
}

const F64_SAFE: f64 = 1e-9;

/// Sign of an orientation predicate, falling back to MPFR near zero.
fn orient_sign(a: (&(f64, f64), &[Float; 2]), b: (&(f64, f64), &[Float; 2]), c: (&(f64, f64), &[Float; 2]), tie: &Float) -> std::result::Result<i8, Degenerate> {
    let o = orient(*a.0, *b.0, *c.0);
    if o.abs() > F64_SAFE {
        return Ok(if o > 0.0 { 1 } else { -1 });
    }
    let o = orient_hp(a.1, b.1, c.1);
    if Float::with_val(o.prec(), o.abs_ref()) < *tie {
        return Err(Degenerate);
    }
    Ok(if o.is_sign_positive() { 1 } else { -1 })
}

/// Whether two chords cross in their interiors. Touching counts as degenerate.
fn chords_cross(c: &Chord, d: &Chord, tie: &Float) -> std::result::Result<bool, Degenerate> {
    // cheap bounding-box rejection
    let (minx1, maxx1) = (c.start.0.min(c.end.0), c.start.0.max(c.end.0));
    let (minx2, maxx2) = (d.start.0.min(d.end.0), d.start.0.max(d.end.0));
    let (miny1, maxy1) = (c.start.1.min(c.end.1), c.start.1.max(c.end.1));
    let (miny2, maxy2) = (d.start.1.min(d.end.1), d.start.1.max(d.end.1));
    if maxx1 + F64_SAFE < minx2 || maxx2 + F64_SAFE < minx1 || maxy1 + F64_SAFE < miny2 || maxy2 + F64_SAFE < miny1 {
        return Ok(false);
    }
    let cs = (&c.start, &c.start_hp);
    let ce = (&c.end, &c.end_hp);
    let ds = (&d.start, &d.start_hp);
    let de = (&d.end, &d.end_hp);
    let o1 = orient_sign(cs, ce, ds, tie)?;
    let o2 = orient_sign(cs, ce, de, tie)?;
    if o1 == o2 {
        return Ok(false);
    }
    let o3 = orient_sign(ds, de, cs, tie)?;
    let o4 = orient_sign(ds, de, ce, tie)?;
    Ok(o3 != o4)
}

/// Crossing with its position along each chord.
struct Crossing {
    i: usize,
    j: usize,
    ti: f64,
    tj: f64,
    /// Sign of `cross(dir_i, dir_j)`.
    positive: bool,
}

fn crossing_params(c: &Chord, d: &Chord) -> (f64, f64, f64) {
    let r = (c.end.0 - c.start.0, c.end.1 - c.start.1);
    let s = (d.end.0 - d.start.0, d.end.1 - d.start.1);
    let den = r.0 * s.1 - r.1 * s.0;
    let q = (d.start.0 - c.start.0, d.start.1 - c.start.1);
    let t = (q.0 * s.1 - q.1 * s.0) / den;
    let u = (q.0 * r.1 - q.1 * r.0) / den;
    (t, u, den)
}

fn tie_for(chords: &[Chord]) -> Float {
    let p = chords[0].start_hp[0].prec();
    Float::with_val(p, Float::i_exp(1, -(p as i32) / 2))
}

fn self_crossings(curve: &TracedCurve) -> std::result::Result<Vec<Crossing>, Degenerate> {
    let ch = &curve.chords;
    let tie = tie_for(ch);
    let mut out = Vec::new();
    for i in 0..ch.len() {
        for j in i + 1..ch.len() {
            if chords_cross(&ch[i], &ch[j], &tie)? {
                let (ti, tj, den) = crossing_params(&ch[i], &ch[j]);
                out.push(Crossing { i, j, ti, tj, positive: den > 0.0 });
            }
        }
    }
    Ok(out)
}

fn same_geodesic(c: &TracedCurve, d: &TracedCurve) -> bool {
    let first = &c.chords[0];
    let p = first.start_hp[0].prec();
    let close = Float::with_val(p, Float::i_exp(1, -(p as i32) / 3));
    d.chords.iter().any(|e| {
        let fwd = Float::with_val(p, dist2(&first.start_hp, &e.start_hp) + dist2(&first.end_hp, &e.end_hp));
        let rev = Float::with_val(p, dist2(&first.start_hp, &e.end_hp) + dist2(&first.end_hp, &e.start_hp));
        fwd < close || rev < close
    })
}

/// Number of boundary cycles of the ribbon graph formed by the curve.
fn boundary_cycles(n_chords: usize, crossings: &[Crossing]) -> usize {
    let v = crossings.len();
    // passages along the curve, sorted by (chord, parameter)
    let mut passages: Vec<(usize, f64, usize, bool)> = Vec::with_capacity(2 * v);
    for (c, x) in crossings.iter().enumerate() {
        passages.push((x.i, x.ti, c, true));
        passages.push((x.j, x.tj, c, false));
    }
    passages.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let _ = n_chords;
    let np = passages.len();
    // half-edge 2q = outgoing at passage q, 2q+1 = incoming at passage q
    let mut alpha = vec![0usize; 2 * np];
    for q in 0..np {
        let next = (q + 1) % np;
        alpha[2 * q] = 2 * next + 1;
        alpha[2 * next + 1] = 2 * q;
    }
    let mut pos_of: Vec<[usize; 2]> = vec![[0, 0]; v];
    for (q, &(_, _, c, first)) in passages.iter().enumerate() {
        pos_of[c][if first { 0 } else { 1 }] = q;
    }
    let mut sigma = vec![0usize; 2 * np];
    for (c, x) in crossings.iter().enumerate() {
        let [q1, q2] = pos_of[c];
        let (o1, i1, o2, i2) = (2 * q1, 2 * q1 + 1, 2 * q2, 2 * q2 + 1);
        let cyc = if x.positive { [o1, o2, i1, i2] } else { [o1, i2, i1, o2] };
        for k in 0..4 {
            sigma[cyc[k]] = cyc[(k + 1) % 4];
        }
    }
    let mut seen = vec![false; 2 * np];
    let mut cycles = 0;
    for h in 0..2 * np {
        if seen[h] {
            continue;
        }
        cycles += 1;
        let mut x = h;
        while !seen[x] {
            seen[x] = true;
            x = sigma[alpha[x]];
        }
    }
    cycles
}

/// Self-intersection count, filling flag and multiplicity computed on one
/// generic domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfReport {
    pub self_count: u64,
    pub primitive_self_count: u64,
    pub multiplicity: u64,
    pub is_filling: bool,
}

pub fn self_report(w: &CurveWord) -> Result<SelfReport> {
    let letters = prepared(w)?;
    let bound = length_bound(w.genus, &letters)?;
    let genus = w.genus as i64;
    with_generic_domain(w.genus, |s| {
        let curve = match trace_on(s, &letters, bound)? {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        let crossings = self_crossings(&curve)?;
        let k = crossings.len() as u64;
        let n = curve.multiplicity;
        let filling = if k == 0 {
            false
        } else {
            let b = boundary_cycles(curve.chords.len(), &crossings) as i64;
            b == 2 - 2 * genus + k as i64
        };
        Ok(Ok(SelfReport { self_count: n * n * k + n - 1, primitive_self_count: k, multiplicity: n, is_filling: filling }))
    })
}

/// Geometric intersection number of a pair of classes.
///
/// Two powers of the same primitive class `d` meet in `2 n1 n2 i(d, d)` points
/// after perturbing one copy, so distinct parallel simple curves give 0.
pub fn pair_count(w1: &CurveWord, w2: &CurveWord) -> Result<u64> {
    if w1.genus != w2.genus {
        return Err(Error::Domain("words belong to different genera".into()));
    }
    let l1 = prepared(w1)?;
    let l2 = prepared(w2)?;
    let bound = length_bound(w1.genus, &l1)?.max(length_bound(w1.genus, &l2)?);
    with_generic_domain(w1.genus, |s| {
        let c1 = match trace_on(s, &l1, bound)? {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        let c2 = match trace_on(s, &l2, bound)? {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        let n = c1.multiplicity * c2.multiplicity;
        if same_geodesic(&c1, &c2) {
            let k = self_crossings(&c1)?.len() as u64;
            return Ok(Ok(2 * n * k));
        }
        let tie = tie_for(&c1.chords);
        let mut count = 0u64;
        for a in &c1.chords {
            for b in &c2.chords {
                if chords_cross(a, b, &tie)? {
                    count += 1;
                }
            }
        }
        Ok(Ok(n * count))
    })
}

/// Whether the axes of two hyperbolic words cross in the plane (as lifts,
/// not as closed curves), with the crossing point reduced into the domain.
pub fn axes_crossing_point(w1: &CurveWord, w2: &CurveWord) -> Result<Option<(f64, f64)>> {
    let l1 = super::word::free_reduce(&w1.letters);
    let l2 = super::word::free_reduce(&w2.letters);
    let bound = length_bound(w1.genus, &l1)?.max(length_bound(w1.genus, &l2)?);
    let prec = prec_for_length(bound);
    let s = surface(w1.genus, 0)?;
    let entry = s.at_prec(prec)?;
    let (grp, faces) = (&entry.0, &entry.1);
    let (f1, b1) = grp.word_matrix(&l1).fixed_points()?;
    let (f2, b2) = grp.word_matrix(&l2).fixed_points()?;
    let o1 = orient_hp(&b1, &f1, &b2);
    let o2 = orient_hp(&b1, &f1, &f2);
    if o1.is_sign_positive() == o2.is_sign_positive() {
        return Ok(None);
    }
    // intersection of the two chords
    let pr = prec;
    let r = [Float::with_val(pr, &f1[0] - &b1[0]), Float::with_val(pr, &f1[1] - &b1[1])];
    let sv = [Float::with_val(pr, &f2[0] - &b2[0]), Float::with_val(pr, &f2[1] - &b2[1])];
    let q = [Float::with_val(pr, &b2[0] - &b1[0]), Float::with_val(pr, &b2[1] - &b1[1])];
    let den = Float::with_val(pr, &r[0] * &sv[1]) - Float::with_val(pr, &r[1] * &sv[0]);
    let num = Float::with_val(pr, &q[0] * &sv[1]) - Float::with_val(pr, &q[1] * &sv[0]);
    let t = num / den;
    let mut x = lerp(&b1, &f1, &t);
    for _ in 0..100_000 {
        let mut worst: Option<(usize, Float)> = None;
        for (k, f) in faces.iter().enumerate() {
            let v = face_value(f, &x);
            if v.is_sign_positive() && !v.is_zero() && worst.as_ref().is_none_or(|(_, wv)| v > *wv) {
                worst = Some((k, v));
            }
        }
        let Some((k, _)) = worst else {
            return Ok(Some((x[0].to_f64(), x[1].to_f64())));
        };
        x = apply_klein(&faces[k].mat_inv, &x);
    }
    Err(Error::Numeric("crossing point reduction did not terminate".into()))
}
