//! Minimisation of geodesic length over Teichmueller space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry_probe::{subsurface_systole, Side, SystoleReport};
use crate::representation::{build_representation, cuff_count, geodesic_length, FNCoords, MAX_CUFF_LENGTH};
use crate::simplex::{self, SimplexOptions};
use crate::surface_group::{is_filling, normalize, CurveWord};

/// Systole search depth used for the side systoles attached to results.
pub const OPT_SYSTOLE_DEPTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptOptions {
    pub starts: usize,
    /// Agreement required between starts, and the per-start stopping scale.
    pub value_tol: f64,
    /// Objective evaluations per start.
    pub max_evals: usize,
    pub escape_threshold: f64,
    /// Per-iteration decrease that still counts as "descending".
    pub decrease_threshold: f64,
    pub seed: u64,
    /// Depth of the side-systole searches attached to the result.
    pub systole_depth: usize,
    /// Range of the log-uniform random starts.
    pub start_lo: f64,
    pub start_hi: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            value_tol: 1e-4,
            max_evals: 20_000,
            escape_threshold: 1e-3,
            decrease_threshold: 1e-6,
            seed: 0,
            systole_depth: OPT_SYSTOLE_DEPTH,
            start_lo: 0.1,
            start_hi: 6.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartRecord {
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptResult {
    #[serde(serialize_with = "crate::geometry_probe::word_as_string")]
    pub word: CurveWord,
    pub m_gamma: f64,
    /// Coordinates of the best start, as found; `m_gamma` is the length of
    /// `word` at exactly this point.
    pub x_gamma: FNCoords,
    /// `x_gamma.twists` reduced modulo full twists. A full twist is a change
    /// of marking, so the word's length at the reduced point differs.
    pub normalized_twists: Vec<f64>,
    pub eta_at_opt: f64,
    pub sys_side1: SystoleReport,
    pub sys_side2: SystoleReport,
    pub starts: usize,
    pub converged: bool,
    pub spread: f64,
    pub per_start: Vec<StartRecord>,
}

fn coords_from(genus: u32, x: &[f64]) -> Option<FNCoords> {
    let n = cuff_count(genus);
    let lengths: Vec<f64> = x[..n].iter().map(|v| v.exp()).collect();
    if lengths.iter().any(|&l| !(l > 0.0 && l <= MAX_CUFF_LENGTH)) {
        return None;
    }
    Some(FNCoords { genus, lengths, twists: x[n..].to_vec() })
}

fn objective(word: &CurveWord, x: &[f64]) -> f64 {
    let Some(c) = coords_from(word.genus, x) else { return f64::INFINITY };
    build_representation(&c).and_then(|rep| geodesic_length(&rep, word)).unwrap_or(f64::INFINITY)
}

fn to_search(c: &FNCoords) -> Vec<f64> {
    c.lengths.iter().map(|l| l.ln()).chain(c.twists.iter().copied()).collect()
}

/// Starting points: the symmetric thick point, then seeded random ones.
pub fn start_points(genus: u32, opts: &OptOptions) -> Result<Vec<FNCoords>> {
    if opts.starts == 0 {
        return Err(Error::Domain("need at least one start".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![FNCoords::uniform(genus, 2.0)?];
    while out.len() < opts.starts {
        out.push(FNCoords::random(genus, opts.start_lo, opts.start_hi, &mut rng));
    }
    Ok(out)
}

struct StartOutcome {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

const CHUNK: usize = 200;
/// Evaluations spent on the derivative-free phase before switching to
/// quasi-Newton steps.
const SIMPLEX_SHARE: f64 = 0.15;
/// Gradient norm (search coordinates) at which a start counts as converged.
const GRAD_STOP: f64 = 1e-5;

fn escape_error(word: &CurveWord, min_len: f64, rate: f64, opts: &OptOptions) -> Error {
    Error::BoundaryEscape(format!(
        "cuff length {min_len:.3e} below {} with the length of {word} still falling ({rate:.3e} per iteration)",
        opts.escape_threshold
    ))
}

fn min_cuff(x: &[f64], n: usize) -> f64 {
    x[..n].iter().cloned().fold(f64::INFINITY, f64::min).exp()
}

fn run_start(word: &CurveWord, x0: Vec<f64>, opts: &OptOptions) -> Result<StartOutcome> {
    let n = cuff_count(word.genus);
    let f = |x: &[f64]| objective(word, x);
    let mut x = x0;
    let mut value = f(&x);
    let mut evals = 1usize;
    let mut step = 0.3;
    let simplex_budget = ((opts.max_evals as f64 * SIMPLEX_SHARE) as usize).max(CHUNK);
    while evals < simplex_budget.min(opts.max_evals) {
        let budget = CHUNK.min(opts.max_evals - evals);
        let sopts = SimplexOptions { max_evals: budget, f_tol: 1e-10, x_tol: 1e-6 };
        let r = simplex::minimize(f, &x, &vec![step; 2 * n], sopts);
        evals += r.evals;
        let gained = value - r.value;
        if r.value < value {
            x = r.x;
            value = r.value;
        }
        let rate = gained / r.history.len().max(1) as f64;
        if min_cuff(&x, n) < opts.escape_threshold && rate > opts.decrease_threshold {
            return Err(escape_error(word, min_cuff(&x, n), rate, opts));
        }
        if r.converged || gained <= 1e-7 * (1.0 + value.abs()) {
            break;
        }
        // restart with a fresh simplex around the best point
        step = 0.2;
    }
    let q = quasi_newton(&f, x, value, opts.max_evals.saturating_sub(evals), |x, rate| {
        if min_cuff(x, n) < opts.escape_threshold && rate > opts.decrease_threshold {
            Err(escape_error(word, min_cuff(x, n), rate, opts))
        } else {
            Ok(())
        }
    })?;
    Ok(StartOutcome { x: q.x, value: q.value, evals: evals + q.evals, converged: q.grad_norm <= GRAD_STOP })
}

struct QnOutcome {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    grad_norm: f64,
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            xp[i] += h;
            let mut xm = x.to_vec();
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with central-difference gradients and backtracking line search.
fn quasi_newton<F, C>(f: &F, mut x: Vec<f64>, mut value: f64, budget: usize, mut check: C) -> Result<QnOutcome>
where
    F: Fn(&[f64]) -> f64,
    C: FnMut(&[f64], f64) -> Result<()>,
{
    let d = x.len();
    let h = CERT_STEP;
    let mut evals = 0usize;
    let mut g = fd_gradient(f, &x, h);
    evals += 2 * d;
    let mut hinv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut stalls = 0;
    while evals + 2 * d + 10 <= budget {
        let gn = dot(&g, &g).sqrt();
        if gn <= GRAD_STOP * 0.01 {
            break;
        }
        let mut p: Vec<f64> = (0..d).map(|i| -dot(&hinv[i], &g)).collect();
        let mut slope = dot(&p, &g);
        if !(slope < 0.0) {
            // lost positive definiteness, fall back to steepest descent
            hinv = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            p = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let pn = dot(&p, &p).sqrt();
        if pn > 1.0 {
            p.iter_mut().for_each(|v| *v /= pn);
            slope /= pn;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let ft = f(&xt);
            evals += 1;
            if ft <= value + 1e-4 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
            hinv = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            continue;
        };
        stalls = 0;
        let gnew = fd_gradient(f, &xn, h);
        evals += 2 * d;
        check(&xn, value - fnew)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let hy: Vec<f64> = (0..d).map(|i| dot(&hinv[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    hinv[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        x = xn;
        value = fnew;
        g = gnew;
    }
    let grad_norm = dot(&g, &g).sqrt();
    Ok(QnOutcome { x, value, evals, grad_norm })
}

/// Multi-start minimisation of the length of `word`. Returns the result even
/// when the starts disagree (`converged = false`); see [`minimize_length`].
pub fn minimize_length_report(word: &CurveWord, opts: &OptOptions) -> Result<OptResult> {
    let word = normalize(word)?;
    if word.is_empty() {
        return Err(Error::Domain("cannot minimise the length of the identity".into()));
    }
    let starts = start_points(word.genus, opts)?;
    let outcomes: Vec<Result<StartOutcome>> =
        starts.par_iter().map(|c| run_start(&word, to_search(c), opts)).collect();
    let outcomes: Vec<StartOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let best = outcomes
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::Numeric(format!("no start produced a finite length for {word}")));
    }
    let lo = outcomes.iter().map(|o| o.value).fold(f64::INFINITY, f64::min);
    let hi = outcomes.iter().map(|o| o.value).fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let converged = outcomes.iter().all(|o| o.converged) && spread <= opts.value_tol;

    let x_gamma = coords_from(word.genus, &best.x).expect("finite objective has valid coordinates");
    let rep = build_representation(&x_gamma)?;
    let m_gamma = geodesic_length(&rep, &word)?;
    let sys_side1 = subsurface_systole(&rep, Side::One, opts.systole_depth)?;
    let sys_side2 = subsurface_systole(&rep, Side::Two, opts.systole_depth)?;
    Ok(OptResult {
        word,
        m_gamma,
        normalized_twists: x_gamma.normalized_twists(),
        eta_at_opt: x_gamma.eta_length(),
        x_gamma,
        sys_side1,
        sys_side2,
        starts: opts.starts,
        converged,
        spread,
        per_start: outcomes.iter().map(|o| StartRecord { value: o.value, evals: o.evals, converged: o.converged }).collect(),
    })
}

/// Multi-start minimisation; non-agreement of the starts is an error.
pub fn minimize_length(word: &CurveWord, opts: &OptOptions) -> Result<OptResult> {
    let r = minimize_length_report(word, opts)?;
    if !r.converged {
        return Err(Error::NonConvergence(format!(
            "{}: spread {:.3e} across starts (tolerance {:.1e}), best {:.12}",
            r.word, r.spread, opts.value_tol, r.m_gamma
        )));
    }
    Ok(r)
}

/// Estimate of the infimum of the length of a filling curve.
pub fn inf_invariant(word: &CurveWord) -> Result<f64> {
    inf_invariant_with(word, &OptOptions::default())
}

pub fn inf_invariant_with(word: &CurveWord, opts: &OptOptions) -> Result<f64> {
    if !is_filling(word)? {
        return Err(Error::NotFilling(word.to_string()));
    }
    Ok(minimize_length(word, opts)?.m_gamma)
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Central differences in the search coordinates (log lengths, twists).
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub hessian_diagonal: Vec<f64>,
    pub grad_tolerance: f64,
    pub passed: bool,
}

pub const CERT_STEP: f64 = 1e-5;
pub const CERT_GRAD_TOL: f64 = 1e-4;

/// Finite-difference stationarity check at an arbitrary point.
pub fn stationarity(word: &CurveWord, at: &FNCoords) -> Result<Certificate> {
    at.validate()?;
    let x = to_search(at);
    let f0 = objective(word, &x);
    if !f0.is_finite() {
        return Err(Error::Numeric(format!("length of {word} is not finite at the point")));
    }
    let h = CERT_STEP;
    let mut gradient = Vec::with_capacity(x.len());
    let mut hessian_diagonal = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        let (fp, fm) = (objective(word, &xp), objective(word, &xm));
        gradient.push((fp - fm) / (2.0 * h));
        hessian_diagonal.push((fp - 2.0 * f0 + fm) / (h * h));
    }
    let gradient_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    // the diagonal second difference carries rounding of order eps * f / h^2
    let slack = 1e3 * f64::EPSILON * f0.abs() / (h * h);
    let passed = gradient_norm <= CERT_GRAD_TOL && hessian_diagonal.iter().all(|&d| d >= -slack);
    Ok(Certificate { gradient, gradient_norm, hessian_diagonal, grad_tolerance: CERT_GRAD_TOL, passed })
}

pub fn optimality_certificate(result: &OptResult) -> Result<Certificate> {
    if !result.converged {
        return Err(Error::Domain("certificate requested for an unconverged result".into()));
    }
    stationarity(&result.word, &result.x_gamma)
}
