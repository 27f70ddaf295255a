//! Special functions of hyperbolic collars and overflow-safe 2x2 isometry
//! arithmetic.
//!
//! Everything here is pure. Lengths are in hyperbolic length units and all
//! logarithms are natural.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entry magnitude above which a [`ScaledIsometry`] is rescaled.
pub const RESCALE_THRESHOLD: f64 = 1e100;

/// Above this argument `arccosh` is evaluated from the logarithm.
const ACOSH_LOG_BRANCH: f64 = 1e8;

static DEFAULT_TOL_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Absolute tolerance used where no operation-specific tolerance applies.
pub fn default_tolerance() -> f64 {
    f64::from_bits(DEFAULT_TOL_BITS.load(Ordering::Relaxed))
}

/// Replaces the process-wide default tolerance.
pub fn set_default_tolerance(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    DEFAULT_TOL_BITS.store(tol.to_bits(), Ordering::Relaxed);
    Ok(())
}

fn require_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Half-width of the standard collar: `r(x) = arcsinh(1 / sinh x)`.
///
/// `r` is a decreasing involution of `(0, inf)` with fixed point `ln(1 + sqrt 2)`.
pub fn collar_width(x: f64) -> Result<f64> {
    require_positive("collar_width argument", x)?;
    Ok(collar_width_unchecked(x))
}

pub(crate) fn collar_width_unchecked(x: f64) -> f64 {
    if x > 700.0 {
        // sinh overflows; 1/sinh x = 2e^{-x} to full precision here
        return (2.0 * (-x).exp()).asinh();
    }
    (1.0 / x.sinh()).asinh()
}

/// `arccosh(y)` given `ln y`, for `y >= 1`.
///
/// Uses `arccosh y = ln y + ln(1 + sqrt(1 - y^-2))`, which stays accurate when
/// `y` itself would overflow.
pub fn acosh_from_ln(ln_y: f64) -> f64 {
    if ln_y < ACOSH_LOG_BRANCH.ln() {
        return ln_y.exp().acosh();
    }
    let inv_sq = (-2.0 * ln_y).exp();
    ln_y + (1.0 - inv_sq).sqrt().ln_1p()
}

/// `ln cosh t` without overflow.
pub fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    if a < 20.0 {
        a.cosh().ln()
    } else {
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// Length of a geodesic arc crossing a collar of core length `x` while
/// winding `m` times: `f_m(x) = 2 arccosh(coth(x/2) cosh(m x / 2))`.
pub fn winding_length(m: u64, x: f64) -> Result<f64> {
    require_positive("winding_length argument", x)?;
    Ok(winding_length_unchecked(m, x))
}

pub(crate) fn winding_length_unchecked(m: u64, x: f64) -> f64 {
    let half = 0.5 * x;
    let ln_coth = if half < 20.0 {
        (1.0 / half.tanh()).ln()
    } else {
        (2.0 * (-2.0 * half).exp() / (1.0 - (-2.0 * half).exp())).ln_1p()
    };
    let ln_y = ln_coth + ln_cosh(m as f64 * half);
    2.0 * acosh_from_ln(ln_y)
}

/// Upper bound on `f_{m+s}(x) - f_m(x)` valid for all `m >= 0` and all
/// `0 < x <= x_max`: `2 ln 2 + 2 ln(cosh(s x/2) + sinh(s x/2))`.
///
/// The bound does not depend on `m`; the argument is kept so call sites read
/// like the quantity being bounded.
pub fn winding_difference_bound(_m: u64, s: u64, x_max: f64) -> Result<f64> {
    require_positive("x_max", x_max)?;
    let t = 0.5 * s as f64 * x_max;
    // cosh t + sinh t = e^t
    Ok(2.0 * std::f64::consts::LN_2 + 2.0 * t)
}

/// Minimiser of `x -> 2 r(x/2) + b x` over `x > 0`.
///
/// Returns `(x_star, f_star)` with `x_star = 2 arcsinh(1/b)` and
/// `f_star = 2 (arcsinh b + b arcsinh(1/b))`.
pub fn min_collar_plus_linear(b: f64) -> Result<(f64, f64)> {
    require_positive("slope b", b)?;
    let x_star = 2.0 * (1.0 / b).asinh();
    let f_star = 2.0 * (b.asinh() + b * (1.0 / b).asinh());
    Ok((x_star, f_star))
}

/// Standard collar about a simple closed geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarParams {
    pub core_length: f64,
    pub width: f64,
}

impl CollarParams {
    pub fn new(core_length: f64) -> Result<Self> {
        require_positive("core length", core_length)?;
        Ok(Self { core_length, width: collar_width_unchecked(0.5 * core_length) })
    }
}

/// Translation length of a hyperbolic element from `|tr| = e^{log_scale} tr_abs`.
pub fn trace_to_length(tr_abs: f64, log_scale: f64) -> Result<f64> {
    if !(tr_abs.is_finite() && log_scale.is_finite()) || tr_abs < 0.0 {
        return Err(Error::Numeric(format!("bad trace {tr_abs} (log scale {log_scale})")));
    }
    if tr_abs == 0.0 {
        return Err(Error::NotHyperbolic { trace: 0.0 });
    }
    let ln_half = log_scale + (0.5 * tr_abs).ln();
    if ln_half <= 0.0 {
        return Err(Error::NotHyperbolic { trace: tr_abs * log_scale.exp() });
    }
    Ok(2.0 * acosh_from_ln(ln_half))
}

/// An element of SL(2, R) stored as `e^{log_scale} * entries`.
///
/// `entries` is row-major `[a, b, c, d]`. While `log_scale == 0` the entries
/// themselves have unit determinant; once a product is rescaled the small
/// singular direction is below double precision and only the projective
/// class (and hence the trace) is meaningful.
#[derive(Clone, Copy, PartialEq)]
pub struct ScaledIsometry {
    pub entries: [f64; 4],
    pub log_scale: f64,
}

impl fmt::Debug for ScaledIsometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "e^{}*[[{a}, {b}], [{c}, {d}]]", self.log_scale)
    }
}

impl Default for ScaledIsometry {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl ScaledIsometry {
    pub const IDENTITY: Self = Self { entries: [1.0, 0.0, 0.0, 1.0], log_scale: 0.0 };

    /// Builds an isometry from SL(2, R) entries, projecting the determinant to 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::Numeric(format!("matrix determinant must be positive, got {det}")));
        }
        let s = det.sqrt().recip();
        Ok(Self { entries: [a * s, b * s, c * s, d * s], log_scale: 0.0 })
    }

    /// Hyperbolic translation by `length` along the geodesic `0 -> inf` of the
    /// upper half plane.
    pub fn diagonal_translation(length: f64) -> Self {
        let h = 0.5 * length;
        Self { entries: [h.exp(), 0.0, 0.0, (-h).exp()], log_scale: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.entries[0] + self.entries[3]
    }

    /// `|trace|` of the represented matrix as `(mantissa, log_scale)`.
    pub fn trace_abs_scaled(&self) -> (f64, f64) {
        (self.trace().abs(), self.log_scale)
    }

    /// Determinant of the stored entries (meaningful while unscaled).
    pub fn entries_det(&self) -> f64 {
        let [a, b, c, d] = self.entries;
        a * d - b * c
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Inverse. For `T = e^s E` with `det T = 1`, `T^{-1} = e^s adj(E)`.
    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.entries;
        Self { entries: [d, -b, -c, a], log_scale: self.log_scale }
    }

    /// Matrix entries of the represented element when they fit in `f64`.
    pub fn to_unscaled(&self) -> Option<[f64; 4]> {
        let k = self.log_scale.exp();
        let out = self.entries.map(|v| v * k);
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    pub fn translation_length(&self) -> Result<f64> {
        let (t, s) = self.trace_abs_scaled();
        trace_to_length(t, s)
    }

    fn renormalize(mut self) -> Self {
        let m = self.max_abs_entry();
        if m > RESCALE_THRESHOLD {
            for v in &mut self.entries {
                *v /= m;
            }
            self.log_scale += m.ln();
        } else if self.log_scale == 0.0 && m < 1e4 {
            // with larger entries the determinant is dominated by cancellation
            let det = self.entries_det();
            if (det - 1.0).abs() < 1e-6 {
                let s = det.sqrt().recip();
                for v in &mut self.entries {
                    *v *= s;
                }
            }
        }
        self
    }

    /// Unchecked product used on hot paths; callers check finiteness at the end.
    #[inline]
    pub(crate) fn mul_raw(&self, other: &Self) -> Self {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = other.entries;
        let out = Self {
            entries: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
            log_scale: self.log_scale + other.log_scale,
        };
        if out.max_abs_entry() > RESCALE_THRESHOLD {
            out.renormalize()
        } else {
            out
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite()) && self.log_scale.is_finite()
    }
}

/// Product `a * b` with rescaling and determinant re-projection.
pub fn compose(a: &ScaledIsometry, b: &ScaledIsometry) -> Result<ScaledIsometry> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric("non-finite isometry entries".into()));
    }
    let [p, q, r, s] = a.entries;
    let [e, f, g, h] = b.entries;
    let out = ScaledIsometry {
        entries: [p * e + q * g, p * f + q * h, r * e + s * g, r * f + s * h],
        log_scale: a.log_scale + b.log_scale,
    }
    .renormalize();
    if !out.is_finite() {
        return Err(Error::Numeric("isometry product overflowed".into()));
    }
    Ok(out)
}

impl std::ops::Mul for ScaledIsometry {
    type Output = ScaledIsometry;
    fn mul(self, rhs: Self) -> Self {
        self.mul_raw(&rhs)
    }
}

impl std::ops::Mul for &ScaledIsometry {
    type Output = ScaledIsometry;
    fn mul(self, rhs: Self) -> ScaledIsometry {
        self.mul_raw(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    const PREC: u32 = 256;

    fn hp(x: f64) -> Float {
        Float::with_val(PREC, x)
    }

    fn hp_collar(x: f64) -> f64 {
        let s = hp(x).sinh();
        Float::with_val(PREC, 1 / s).asinh().to_f64()
    }

    fn hp_winding(m: u64, x: f64) -> f64 {
        let half: Float = hp(x) / 2u32;
        let coth = Float::with_val(PREC, 1 / half.clone().tanh());
        let c = Float::with_val(PREC, half * m).cosh();
        let y: Float = coth * c;
        (y.acosh() * 2u32).to_f64()
    }

    #[test]
    fn collar_width_fixed_point_and_involution() {
        let fixed = (1.0 + 2f64.sqrt()).ln();
        assert!((collar_width(fixed).unwrap() - fixed).abs() < 1e-15);
        let rr = collar_width(collar_width(0.3).unwrap()).unwrap();
        assert!((rr - 0.3).abs() < 1e-12);
    }

    #[test]
    fn collar_width_golden_value() {
        // arcsinh(1/sinh 0.5) at 256 bits
        const GOLDEN: f64 = 1.4068291137472953;
        let golden = hp_collar(0.5);
        assert!((golden - GOLDEN).abs() < 1e-15);
        assert!((collar_width(0.5).unwrap() - golden).abs() < 1e-15);
    }

    #[test]
    fn collar_width_rejects_nonpositive() {
        assert!(matches!(collar_width(0.0), Err(Error::Domain(_))));
        assert!(matches!(collar_width(-1.0), Err(Error::Domain(_))));
        assert!(collar_width(f64::NAN).is_err());
    }

    #[test]
    fn winding_base_case_is_twice_collar() {
        for &x in &[1e-3, 0.1, 0.7, 2.0, 9.0] {
            let f0 = winding_length(0, x).unwrap();
            let r = 2.0 * collar_width(0.5 * x).unwrap();
            assert!((f0 - r).abs() < 1e-12 * r.max(1.0), "x={x}");
        }
    }

    #[test]
    fn winding_golden_f10_at_0_1() {
        // Frozen from a 256-bit evaluation of 2 arccosh(coth(0.05) cosh(0.5)).
        const GOLDEN: f64 = 7.618671470537339;
        let oracle = hp_winding(10, 0.1);
        assert!((oracle - GOLDEN).abs() < 1e-14);
        assert!((winding_length(10, 0.1).unwrap() - GOLDEN).abs() < 1e-12);
    }

    #[test]
    fn winding_matches_high_precision_across_regimes() {
        for &(m, x) in &[(0u64, 1e-4), (3, 0.02), (100, 0.5), (5000, 0.3), (40000, 0.05)] {
            let a = winding_length(m, x).unwrap();
            let b = hp_winding(m, x);
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "m={m} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn winding_is_nondecreasing_in_m() {
        for &x in &[0.01, 0.3, 1.7] {
            let mut prev = winding_length(0, x).unwrap();
            for m in 1..200 {
                let cur = winding_length(m, x).unwrap();
                assert!(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn difference_bound_holds_and_tightens() {
        assert!((winding_difference_bound(4, 0, 1.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        let c = winding_difference_bound(0, 3, 1.0).unwrap();
        for m in 0..60 {
            let mut prev_gap = f64::INFINITY;
            for i in 1..=100 {
                let x = i as f64 / 100.0;
                let d = winding_length(m + 3, x).unwrap() - winding_length(m, x).unwrap();
                assert!(d <= c, "m={m} x={x}: {d} > {c}");
                let gap = c - d;
                // the difference grows with x, so the gap to the bound shrinks
                assert!(gap <= prev_gap + 1e-12);
                prev_gap = gap;
            }
        }
    }

    #[test]
    fn calculus_minimiser_b_one() {
        let (x, f) = min_collar_plus_linear(1.0).unwrap();
        assert!((x - 2.0 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-14);
        assert!((f - 4.0 * 1f64.asinh()).abs() < 1e-14);
        let obj = |t: f64| 2.0 * collar_width(0.5 * t).unwrap() + t;
        assert!(obj(x + 0.1) > f && obj(x - 0.1) > f);
        assert!(min_collar_plus_linear(0.0).is_err());
    }

    #[test]
    fn trace_to_length_cases() {
        let l = trace_to_length(2.0 * 0.5f64.cosh(), 0.0).unwrap();
        assert!((l - 1.0).abs() < 1e-14);
        assert!(matches!(trace_to_length(2.0, 0.0), Err(Error::NotHyperbolic { .. })));
        assert!(matches!(trace_to_length(1.5, 0.0), Err(Error::NotHyperbolic { .. })));
        // e^200 * 1 / 2 = y; 2 arccosh y computed at 256 bits
        let y = Float::with_val(PREC, 200).exp() / 2u32;
        let want = (y.acosh() * 2u32).to_f64();
        let got = trace_to_length(1.0, 200.0).unwrap();
        assert!((got - want).abs() <= 1e-9 * want);
        assert!((got - 400.0).abs() < 1e-9);
    }

    #[test]
    fn acosh_from_ln_agrees_across_branch() {
        for &y in &[1.0000001_f64, 1.5, 10.0, 1e7, 1e9, 1e30] {
            let a = acosh_from_ln(y.ln());
            let b = hp(y).acosh().to_f64();
            assert!((a - b).abs() <= 1e-9 * b.max(1e-3), "y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn compose_identity_and_inverse() {
        let m = ScaledIsometry::new(2.0, 1.0, 3.0, 2.0).unwrap();
        let id = compose(&m, &ScaledIsometry::IDENTITY).unwrap();
        assert_eq!(id.entries, m.entries);
        let e = compose(&m, &m.inverse()).unwrap();
        for (got, want) in e.entries.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        let bad = ScaledIsometry { entries: [f64::NAN, 0.0, 0.0, 1.0], log_scale: 0.0 };
        assert!(matches!(compose(&bad, &m), Err(Error::Numeric(_))));
    }

    fn hp_word_trace(mats: &[[f64; 4]], word: &[usize]) -> Float {
        let mut acc = [hp(1.0), hp(0.0), hp(0.0), hp(1.0)];
        for &i in word {
            let [e, f, g, h] = mats[i].map(hp);
            let [a, b, c, d] = acc;
            acc = [
                Float::with_val(PREC, &a * &e) + Float::with_val(PREC, &b * &g),
                Float::with_val(PREC, &a * &f) + Float::with_val(PREC, &b * &h),
                Float::with_val(PREC, &c * &e) + Float::with_val(PREC, &d * &g),
                Float::with_val(PREC, &c * &f) + Float::with_val(PREC, &d * &h),
            ];
        }
        let [a, _, _, d] = acc;
        a + d
    }

    #[test]
    fn long_word_trace_matches_extended_precision() {
        // two hyperbolic generators with positive entries: no cancellation,
        // so the 256-bit product is an accurate reference
        let g0 = ScaledIsometry::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let g1 = ScaledIsometry::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let mats = [g0.entries, g1.entries];
        let word: Vec<usize> = (0..2000).map(|i| ((i * 7 + i / 3) % 5 == 0) as usize).collect();
        let mut acc = ScaledIsometry::IDENTITY;
        for &i in &word {
            acc = compose(&acc, if i == 0 { &g0 } else { &g1 }).unwrap();
        }
        assert!(acc.is_finite() && acc.log_scale > 0.0, "{acc:?}");
        let tr = hp_word_trace(&mats, &word);
        let ln_ref = tr.abs().ln().to_f64();
        let ln_got = acc.log_scale + acc.trace().abs().ln();
        // relative error of the trace from the difference of logs
        assert!((ln_got - ln_ref).abs() < 1e-6, "{ln_got} vs {ln_ref}");
    }
}
