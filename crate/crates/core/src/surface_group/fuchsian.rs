//! A concrete Fuchsian realisation of the genus-`g` surface group in
//! SO(2,1), and a Dirichlet fundamental domain for it.
//!
//! The group is the side-pairing group of the regular `4g`-gon with all
//! angles `2 pi / 4g`, deformed by a few fixed twists so that no accidental
//! symmetry produces triple points.

use rug::float::Constant;
use rug::Float;

use super::word::Letter;
use crate::error::{Error, Result};

/// 3x3 matrix over MPFR floats acting on Minkowski space `-x0^2 + x1^2 + x2^2`.
#[derive(Clone, Debug)]
pub struct Mat3 {
    pub m: [Float; 9],
}

impl Mat3 {
    pub fn identity(prec: u32) -> Self {
        let z = || Float::with_val(prec, 0);
        let o = || Float::with_val(prec, 1);
        Mat3 { m: [o(), z(), z(), z(), o(), z(), z(), z(), o()] }
    }

    pub fn prec(&self) -> u32 {
        self.m[0].prec()
    }

    pub fn from_f64(prec: u32, v: [f64; 9]) -> Self {
        Mat3 { m: v.map(|x| Float::with_val(prec, x)) }
    }

    pub fn to_f64(&self) -> [f64; 9] {
        std::array::from_fn(|i| self.m[i].to_f64())
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let p = self.prec().max(o.prec());
        let m = std::array::from_fn(|k| {
            let (i, j) = (k / 3, k % 3);
            let mut acc = Float::with_val(p, &self.m[3 * i] * &o.m[j]);
            acc += Float::with_val(p, &self.m[3 * i + 1] * &o.m[3 + j]);
            acc += Float::with_val(p, &self.m[3 * i + 2] * &o.m[6 + j]);
            acc
        });
        Mat3 { m }
    }

    pub fn apply(&self, v: &[Float; 3]) -> [Float; 3] {
        let p = self.prec();
        std::array::from_fn(|i| {
            let mut acc = Float::with_val(p, &self.m[3 * i] * &v[0]);
            acc += Float::with_val(p, &self.m[3 * i + 1] * &v[1]);
            acc += Float::with_val(p, &self.m[3 * i + 2] * &v[2]);
            acc
        })
    }

    /// Inverse in O(2,1): `J M^T J`.
    pub fn inverse(&self) -> Mat3 {
        let m = &self.m;
        let s = |i: usize, j: usize| {
            let v = m[3 * j + i].clone();
            if (i == 0) != (j == 0) {
                -v
            } else {
                v
            }
        };
        Mat3 { m: std::array::from_fn(|k| s(k / 3, k % 3)) }
    }

    pub fn trace(&self) -> Float {
        Float::with_val(self.prec(), &self.m[0] + &self.m[4]) + &self.m[8]
    }

    fn sub_scalar(&self, s: &Float) -> Mat3 {
        let mut out = self.clone();
        for i in [0, 4, 8] {
            out.m[i] -= s;
        }
        out
    }

    fn scale(&self, s: &Float) -> Mat3 {
        Mat3 { m: std::array::from_fn(|i| Float::with_val(self.prec(), &self.m[i] * s)) }
    }

    fn add(&self, o: &Mat3) -> Mat3 {
        Mat3 { m: std::array::from_fn(|i| Float::with_val(self.prec(), &self.m[i] + &o.m[i])) }
    }

    pub fn rotation(prec: u32, theta: &Float) -> Mat3 {
        let (s, c) = theta.clone().sin_cos(Float::new(prec));
        let z = || Float::with_val(prec, 0);
        Mat3 { m: [Float::with_val(prec, 1), z(), z(), z(), c.clone(), -s.clone(), z(), s, c] }
    }

    pub fn boost_x(prec: u32, d: &Float) -> Mat3 {
        let (sh, ch) = d.clone().sinh_cosh(Float::new(prec));
        let z = || Float::with_val(prec, 0);
        Mat3 { m: [ch.clone(), sh.clone(), z(), sh, ch, z(), z(), z(), Float::with_val(prec, 1)] }
    }

    /// Translation length of a hyperbolic element: `tr = 1 + 2 cosh l`.
    pub fn translation_length(&self) -> Float {
        let t = (self.trace() - 1u32) / 2u32;
        if t <= 1 {
            Float::with_val(self.prec(), 0)
        } else {
            t.acosh()
        }
    }

    /// Translation by `t` along the axis of the hyperbolic element `self`,
    /// in the same direction.
    pub fn axis_translation(&self, t: &Float) -> Result<Mat3> {
        let p = self.prec();
        let l = self.translation_length();
        if l == 0 {
            return Err(Error::Numeric("axis translation of a non-hyperbolic element".into()));
        }
        let s = Float::with_val(p, t / &l);
        let lam = [l.clone().exp(), Float::with_val(p, 1), (-l.clone()).exp()];
        let mut out: Option<Mat3> = None;
        for i in 0..3 {
            let mut term = Mat3::identity(p);
            let mut denom = Float::with_val(p, 1);
            for j in 0..3 {
                if j != i {
                    term = term.mul(&self.sub_scalar(&lam[j]));
                    denom *= Float::with_val(p, &lam[i] - &lam[j]);
                }
            }
            let coeff = Float::with_val(p, lam[i].clone().ln() * &s).exp() / denom;
            let term = term.scale(&coeff);
            out = Some(match out {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(out.unwrap())
    }

    /// Attracting and repelling fixed points as Klein-model boundary points.
    pub fn fixed_points(&self) -> Result<([Float; 2], [Float; 2])> {
        let p = self.prec();
        let l = self.translation_length();
        if l == 0 {
            return Err(Error::NotHyperbolic { trace: self.trace().to_f64() });
        }
        let up = l.clone().exp();
        let down = (-l).exp();
        let one = Float::with_val(p, 1);
        let proj_plus = self.sub_scalar(&one).mul(&self.sub_scalar(&down));
        let proj_minus = self.sub_scalar(&one).mul(&self.sub_scalar(&up));
        Ok((null_column(&proj_plus)?, null_column(&proj_minus)?))
    }
}

/// Largest column of a rank-one projector, normalised to Klein coordinates.
fn null_column(m: &Mat3) -> Result<[Float; 2]> {
    let mut best = 0;
    let mut best_abs = Float::with_val(m.prec(), 0);
    for j in 0..3 {
        let a = m.m[j].clone().abs();
        if a > best_abs {
            best_abs = a;
            best = j;
        }
    }
    if best_abs == 0 {
        return Err(Error::Numeric("degenerate eigenprojector".into()));
    }
    let x0 = &m.m[best];
    Ok([Float::with_val(m.prec(), &m.m[3 + best] / x0), Float::with_val(m.prec(), &m.m[6 + best] / x0)])
}

/// Side pairings of the regular polygon assigned to the standard generators.
#[derive(Clone, Debug)]
pub struct FuchsianGroup {
    pub genus: u32,
    /// `gens[2k]` is `a_{k+1}`, `gens[2k+1]` is `b_{k+1}`.
    pub gens: Vec<Mat3>,
    pub gens_inv: Vec<Mat3>,
}

/// Twist amounts applied to the regular group.
const TWIST_ALONG_A: [f64; 6] = [0.3137, 0.5419, 0.2273, 0.4451, 0.1789, 0.3963];
const TWIST_ALONG_C1: f64 = 0.2718;

fn side_pairing(prec: u32, n: usize, i: usize, h: &Float) -> Mat3 {
    let pi = Float::with_val(prec, Constant::Pi);
    let theta = |k: usize| Float::with_val(prec, &pi * (2 * k) as u32) / n as u32;
    let to_back = Float::with_val(prec, &pi - theta(i));
    Mat3::rotation(prec, &theta((i + 2) % n))
        .mul(&Mat3::boost_x(prec, &Float::with_val(prec, h * 2u32)))
        .mul(&Mat3::rotation(prec, &to_back))
}

fn word_matrix(gens: &[Mat3], gens_inv: &[Mat3], word: &[Letter], prec: u32) -> Mat3 {
    let mut acc = Mat3::identity(prec);
    for &l in word {
        let g = if l.is_inverse() { &gens_inv[l.generator_index()] } else { &gens[l.generator_index()] };
        acc = acc.mul(g);
    }
    acc
}

fn relator_defect(gens: &[Mat3], genus: u32) -> f64 {
    let inv: Vec<Mat3> = gens.iter().map(Mat3::inverse).collect();
    let r = super::word::CurveWord::relator(genus);
    let m = word_matrix(gens, &inv, &r, gens[0].prec()).to_f64();
    let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    m.iter().zip(id).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

impl FuchsianGroup {
    pub fn new(genus: u32, prec: u32) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Domain(format!("genus must be at least 2, got {genus}")));
        }
        let n = 4 * genus as usize;
        let pi = Float::with_val(prec, Constant::Pi);
        let cot = Float::with_val(prec, &pi / n as u32).tan().recip();
        let h = cot.acosh();
        let pairs: Vec<Mat3> = (0..n).map(|i| side_pairing(prec, n, i, &h)).collect();

        // find the assignment of side pairings to generators satisfying the
        // relator exactly
        let mut chosen = None;
        'search: for swap in [false, true] {
            for reverse in [false, true] {
                for signs in 0..4u32 {
                    let mut gens = Vec::with_capacity(2 * genus as usize);
                    for k in 0..genus as usize {
                        let blk = if reverse { genus as usize - 1 - k } else { k };
                        let (pa, pb) = if swap { (4 * blk + 1, 4 * blk) } else { (4 * blk, 4 * blk + 1) };
                        let a = if signs & 1 == 1 { pairs[pa].inverse() } else { pairs[pa].clone() };
                        let b = if signs & 2 == 2 { pairs[pb].inverse() } else { pairs[pb].clone() };
                        gens.push(a);
                        gens.push(b);
                    }
                    if relator_defect(&gens, genus) < 1e-20 {
                        chosen = Some(gens);
                        break 'search;
                    }
                }
            }
        }
        let mut gens = chosen.ok_or_else(|| Error::Numeric("no side-pairing convention satisfies the relator".into()))?;

        // generic deformation: twist b_k along a_k, then conjugate the first
        // handle by a translation along the axis of [a_1, b_1]
        for k in 0..genus as usize {
            let t = Float::with_val(prec, TWIST_ALONG_A[k % TWIST_ALONG_A.len()] * (1.0 + 0.01 * k as f64));
            let s = gens[2 * k].axis_translation(&t)?;
            gens[2 * k + 1] = gens[2 * k + 1].mul(&s);
        }
        let inv: Vec<Mat3> = gens.iter().map(Mat3::inverse).collect();
        let c1 = word_matrix(&gens, &inv, &[Letter::a(1), Letter::b(1), Letter::a(1).inv(), Letter::b(1).inv()], prec);
        let s = c1.axis_translation(&Float::with_val(prec, TWIST_ALONG_C1))?;
        let s_inv = s.inverse();
        for k in 0..2 {
            gens[k] = s.mul(&gens[k]).mul(&s_inv);
        }
        let defect = relator_defect(&gens, genus);
        let limit = if prec >= 128 { 1e-25 } else { 1e-10 };
        if defect > limit {
            return Err(Error::Numeric(format!("deformed group violates the relator by {defect}")));
        }
        let gens_inv = gens.iter().map(Mat3::inverse).collect();
        Ok(Self { genus, gens, gens_inv })
    }

    pub fn prec(&self) -> u32 {
        self.gens[0].prec()
    }

    pub fn word_matrix(&self, word: &[Letter]) -> Mat3 {
        word_matrix(&self.gens, &self.gens_inv, word, self.prec())
    }
}

/// Point of the hyperboloid for Klein coordinates `(x, y)`.
pub fn klein_to_hyperboloid(prec: u32, x: f64, y: f64) -> [Float; 3] {
    let s = Float::with_val(prec, 1.0 - x * x - y * y).sqrt().recip();
    [s.clone(), Float::with_val(prec, &s * x), Float::with_val(prec, &s * y)]
}

/// A face of the Dirichlet domain: the bisector between the centre `p` and
/// `g p`. Points `(x, y)` of the domain satisfy `c0 + c1 x + c2 y <= 0`.
#[derive(Clone, Debug)]
pub struct Face {
    pub word: Vec<Letter>,
    /// Index of the face belonging to the inverse element.
    pub partner: usize,
    pub coeffs: [Float; 3],
    pub coeffs_f64: [f64; 3],
    pub mat: Mat3,
    pub mat_inv: Mat3,
}

/// The combinatorial description of a Dirichlet domain, independent of
/// arithmetic precision.
#[derive(Clone, Debug)]
pub struct DomainShape {
    pub genus: u32,
    pub center: (f64, f64),
    pub face_words: Vec<Vec<Letter>>,
    pub partners: Vec<usize>,
    /// Polygon vertices in Klein coordinates, counter-clockwise.
    pub vertices: Vec<(f64, f64)>,
    pub area: f64,
}

fn mink(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec_f64(m: &[f64; 9], v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[3 * i] * v[0] + m[3 * i + 1] * v[1] + m[3 * i + 2] * v[2])
}

fn mat_mul_f64(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    std::array::from_fn(|k| {
        let (i, j) = (k / 3, k % 3);
        a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j]
    })
}

/// Clips a convex polygon by `c0 + c1 x + c2 y <= 0`, tracking which
/// constraint produced each edge (edge `k` runs from vertex `k` to `k + 1`).
fn clip(poly: &[(f64, f64)], labels: &[usize], c: [f64; 3], label: usize) -> (Vec<(f64, f64)>, Vec<usize>) {
    let f = |p: (f64, f64)| c[0] + c[1] * p.0 + c[2] * p.1;
    let n = poly.len();
    let mut out = Vec::new();
    let mut out_labels = Vec::new();
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let (fp, fq) = (f(p), f(q));
        if fp <= 0.0 {
            out.push(p);
            out_labels.push(labels[k]);
            if fq > 0.0 {
                let t = fp / (fp - fq);
                out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
                out_labels.push(label);
            }
        } else if fq <= 0.0 {
            let t = fp / (fp - fq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            out_labels.push(labels[k]);
        }
    }
    (out, out_labels)
}

/// Group elements whose orbit point `g p` lies within `radius` of `p`,
/// found by breadth-first search through elements that stay within the radius.
fn orbit_ball(gens: &[[f64; 9]], gens_inv: &[[f64; 9]], genus: u32, p: &[f64; 3], radius: f64) -> Vec<(Vec<Letter>, [f64; 3])> {
    let mut letters = Vec::new();
    for k in 1..=genus {
        for l in [Letter::a(k), Letter::b(k)] {
            letters.push(l);
            letters.push(l.inv());
        }
    }
    let key = |q: &[f64; 3]| ((q[0] * 1e6).round() as i64, (q[1] * 1e6).round() as i64, (q[2] * 1e6).round() as i64);
    let cosh_r = radius.cosh();
    let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let mut seen = std::collections::HashSet::new();
    seen.insert(key(p));
    let mut out = Vec::new();
    let mut frontier: Vec<(Vec<Letter>, [f64; 9])> = vec![(Vec::new(), id)];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (w, m) in &frontier {
            for &l in &letters {
                if w.last() == Some(&l.inv()) {
                    continue;
                }
                let g = if l.is_inverse() { &gens_inv[l.generator_index()] } else { &gens[l.generator_index()] };
                let m2 = mat_mul_f64(m, g);
                let q = mat_vec_f64(&m2, p);
                if -mink(&q, p) > cosh_r || !seen.insert(key(&q)) {
                    continue;
                }
                let mut w2 = w.clone();
                w2.push(l);
                out.push((w2.clone(), q));
                next.push((w2, m2));
            }
        }
        frontier = next;
    }
    out
}

impl DomainShape {
    /// Dirichlet domain centred at the Klein point `center`, found among
    /// elements moving the centre by at most `radius`.
    pub fn compute(group: &FuchsianGroup, center: (f64, f64), radius: f64) -> Result<Self> {
        let genus = group.genus;
        let gens: Vec<[f64; 9]> = group.gens.iter().map(Mat3::to_f64).collect();
        let gens_inv: Vec<[f64; 9]> = group.gens_inv.iter().map(Mat3::to_f64).collect();
        let s = 1.0 / (1.0 - center.0 * center.0 - center.1 * center.1).sqrt();
        let p = [s, s * center.0, s * center.1];

        let mut cands = orbit_ball(&gens, &gens_inv, genus, &p, radius);
        // cheaper bisectors first: closer images cut more
        cands.sort_by(|a, b| a.1[0].partial_cmp(&b.1[0]).unwrap());

        let mut poly = vec![(-2.0, -2.0), (2.0, -2.0), (2.0, 2.0), (-2.0, 2.0)];
        let mut labels = vec![usize::MAX; 4];
        for (ci, (_, q)) in cands.iter().enumerate() {
            let c = [-(q[0] - p[0]), q[1] - p[1], q[2] - p[2]];
            let nrm = (c[1] * c[1] + c[2] * c[2]).sqrt();
            let c = [c[0] / nrm, c[1] / nrm, c[2] / nrm];
            let (np, nl) = clip(&poly, &labels, c, ci);
            poly = np;
            labels = nl;
        }
        if poly.iter().any(|&(x, y)| x * x + y * y >= 1.0) || labels.contains(&usize::MAX) {
            return Err(Error::Numeric("Dirichlet domain not compact with the candidate set".into()));
        }
        // merge consecutive edges with the same label (clipping artefacts)
        let mut verts = Vec::new();
        let mut face_ids = Vec::new();
        let n = poly.len();
        for k in 0..n {
            let prev = labels[(k + n - 1) % n];
            if labels[k] != prev {
                verts.push(poly[k]);
                face_ids.push(labels[k]);
            }
        }
        let face_words: Vec<Vec<Letter>> = face_ids.iter().map(|&i| cands[i].0.clone()).collect();
        let images: Vec<[f64; 3]> = face_ids.iter().map(|&i| cands[i].1).collect();

        // partner face: bisector of the inverse element, g^{-1} p
        let mut partners = Vec::with_capacity(face_words.len());
        for w in &face_words {
            let mut m = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
            for l in w.iter().rev() {
                let g = if l.is_inverse() { &gens[l.generator_index()] } else { &gens_inv[l.generator_index()] };
                m = mat_mul_f64(&m, g);
            }
            let q = mat_vec_f64(&m, &p);
            let j = images
                .iter()
                .position(|q2| (q2[0] - q[0]).abs() + (q2[1] - q[1]).abs() + (q2[2] - q[2]).abs() < 1e-7 * q[0])
                .ok_or_else(|| Error::Numeric(format!("Dirichlet face {w:?} without a partner among {} faces", images.len())))?;
            partners.push(j);
        }

        // area from interior angles between consecutive face normals
        let nf = face_words.len();
        let mut angle_sum = 0.0;
        for k in 0..nf {
            let a = &images[(k + nf - 1) % nf];
            let b = &images[k];
            let na = [a[0] - p[0], a[1] - p[1], a[2] - p[2]];
            let nb = [b[0] - p[0], b[1] - p[1], b[2] - p[2]];
            let cos = -mink(&na, &nb) / (mink(&na, &na) * mink(&nb, &nb)).sqrt();
            angle_sum += cos.clamp(-1.0, 1.0).acos();
        }
        let area = (nf as f64 - 2.0) * std::f64::consts::PI - angle_sum;
        let want = 4.0 * std::f64::consts::PI * (genus as f64 - 1.0);
        if (area - want).abs() > 1e-6 {
            return Err(Error::Numeric(format!("Dirichlet domain area {area}, expected {want}")));
        }
        Ok(Self { genus, center, face_words, partners, vertices: verts, area })
    }

    /// Face data at the working precision of `group`.
    pub fn faces(&self, group: &FuchsianGroup) -> Vec<Face> {
        let prec = group.prec();
        let p = klein_to_hyperboloid(prec, self.center.0, self.center.1);
        self.face_words
            .iter()
            .zip(&self.partners)
            .map(|(w, &partner)| {
                let mat = group.word_matrix(w);
                let q = mat.apply(&p);
                let c0 = -Float::with_val(prec, &q[0] - &p[0]);
                let c1 = Float::with_val(prec, &q[1] - &p[1]);
                let c2 = Float::with_val(prec, &q[2] - &p[2]);
                let nrm = Float::with_val(prec, c1.clone().square() + c2.clone().square()).sqrt();
                let coeffs = [c0 / &nrm, c1 / &nrm, c2 / &nrm];
                let coeffs_f64 = [coeffs[0].to_f64(), coeffs[1].to_f64(), coeffs[2].to_f64()];
                let mat_inv = mat.inverse();
                Face { word: w.clone(), partner, coeffs, coeffs_f64, mat, mat_inv }
            })
            .collect()
    }
}
