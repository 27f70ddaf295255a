//! Family scans, the alpha/beta pair table, growth-rate fits and the census,
//! plus the checks evaluated on their outputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{minimize_length_report, OptOptions, OptResult};
use crate::surface_group::{family_word, is_filling, normalize, self_intersection_formula, self_intersection_oracle, CurveWord};

/// Inclusive integer range, written `lo..hi` or as a single integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "String")]
pub struct IntRange {
    pub lo: u64,
    pub hi: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    One(u64),
    Text(String),
}

impl TryFrom<RangeRepr> for IntRange {
    type Error = Error;
    fn try_from(r: RangeRepr) -> Result<Self> {
        match r {
            RangeRepr::One(k) => Ok(IntRange { lo: k, hi: k }),
            RangeRepr::Text(s) => s.parse(),
        }
    }
}

impl From<IntRange> for String {
    fn from(r: IntRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl FromStr for IntRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad range `{s}`, expected `lo..hi` or an integer"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => {
                let k = s.trim().parse().map_err(|_| bad())?;
                (k, k)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        Ok(IntRange { lo, hi })
    }
}

impl IntRange {
    pub fn values(&self) -> Vec<u64> {
        (self.lo..=self.hi).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub m: IntRange,
    pub n: IntRange,
    /// Oracle column is filled when both m and n are at most this.
    pub oracle_max: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { m: IntRange { lo: 1, hi: 20 }, n: IntRange { lo: 1, hi: 1 }, oracle_max: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    pub n_max: u64,
}

impl Default for PairsConfig {
    fn default() -> Self {
        Self { n_max: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusConfig {
    pub max_mn: u64,
    /// Length cut-off; absent means no cut-off.
    pub max_length: Option<f64>,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self { max_mn: 3, max_length: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genus: u32,
    pub seed: u64,
    /// Worker threads; absent means one per core.
    pub jobs: Option<usize>,
    pub optimizer: OptOptions,
    pub scan: ScanConfig,
    pub pairs: PairsConfig,
    pub census: CensusConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genus: 2,
            seed: 0,
            jobs: None,
            optimizer: OptOptions::default(),
            scan: ScanConfig::default(),
            pairs: PairsConfig::default(),
            census: CensusConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string())),
            _ => Self::from_toml(&text),
        }
    }

    /// Optimizer options with the run seed applied.
    pub fn opt_options(&self) -> OptOptions {
        OptOptions { seed: self.seed, ..self.optimizer.clone() }
    }
}

/// Thresholds measured once in a pilot run and frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub genus: u32,
    pub seed: u64,
    /// Floor for `eta_at_opt` over `(m = 1, n <= 10)`.
    pub eta_floor: f64,
    /// Upper bound for `m_alpha / ln k`.
    pub alpha_ratio_max: f64,
    /// Lower bound for `m_beta / sqrt k`.
    pub beta_ratio_min: f64,
    /// Lower bound for `min(sys1, sys2, eta)` over the beta rows.
    pub beta_thick_min: f64,
    /// Lower bound for `min(sys1, sys2)` over the alpha rows.
    pub alpha_complement_min: f64,
}

const CALIBRATION_TOML: &str = include_str!("../data/calibration.toml");

impl Calibration {
    pub fn frozen() -> Result<Self> {
        toml::from_str(CALIBRATION_TOML).map_err(|e| Error::Config(format!("calibration file: {e}")))
    }
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json_12<T: Serialize>(value: &T) -> Result<String> {
    fn round(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Number(n) if n.is_f64() => {
                let x = n.as_f64().expect("f64 number");
                if let Some(r) = sig12(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(round),
            serde_json::Value::Object(o) => o.values_mut().for_each(round),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    round(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))
}

fn opt_field(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

/// Optimisation outcome of one family member, reduced to scalar columns.
#[derive(Debug, Clone, Serialize)]
pub struct Measured {
    pub m_gamma: Option<f64>,
    pub eta_at_opt: Option<f64>,
    pub sys1: Option<f64>,
    pub sys2: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

impl Measured {
    fn from_result(r: &Result<OptResult>) -> Self {
        match r {
            Ok(o) => Measured {
                m_gamma: Some(o.m_gamma),
                eta_at_opt: Some(o.eta_at_opt),
                sys1: Some(o.sys_side1.value),
                sys2: Some(o.sys_side2.value),
                converged: o.converged,
                error: None,
            },
            Err(e) => Measured { m_gamma: None, eta_at_opt: None, sys1: None, sys2: None, converged: false, error: Some(e.to_string()) },
        }
    }
}

fn measure(genus: u32, m: u64, n: u64, opts: &OptOptions) -> Measured {
    let r = family_word(genus, m, n).and_then(|w| minimize_length_report(&w, opts));
    Measured::from_result(&r)
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyScanRow {
    pub m: u64,
    pub n: u64,
    pub i_formula: u64,
    pub i_oracle: Option<u64>,
    #[serde(flatten)]
    pub measured: Measured,
}

pub const SCAN_HEADER: &str = "m,n,i_formula,i_oracle,m_gamma,eta_at_opt,sys1,sys2,converged";

pub fn family_scan(genus: u32, ms: &[u64], ns: &[u64], oracle_max: u64, opts: &OptOptions) -> Result<Vec<FamilyScanRow>> {
    if ms.is_empty() || ns.is_empty() {
        return Err(Error::Domain("scan ranges must be nonempty".into()));
    }
    let mut grid: Vec<(u64, u64)> = ms.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect();
    grid.sort_unstable();
    grid.dedup();
    grid.par_iter()
        .map(|&(m, n)| {
            let i_formula = self_intersection_formula(genus, m, n)?;
            let i_oracle = if m <= oracle_max && n <= oracle_max {
                Some(self_intersection_oracle(&family_word(genus, m, n)?)?)
            } else {
                None
            };
            Ok(FamilyScanRow { m, n, i_formula, i_oracle, measured: measure(genus, m, n, opts) })
        })
        .collect()
}

pub fn scan_csv(rows: &[FamilyScanRow]) -> String {
    let mut out = String::from(SCAN_HEADER);
    out.push('\n');
    for r in rows {
        let d = &r.measured;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.i_formula,
            r.i_oracle.map(|i| i.to_string()).unwrap_or_default(),
            opt_field(d.m_gamma),
            opt_field(d.eta_at_opt),
            opt_field(d.sys1),
            opt_field(d.sys2),
            d.converged
        ));
    }
    out
}

/// Members of the self-intersection set generated by `n`.
pub fn k_of_n(genus: u32, n: u64) -> u64 {
    (2 * genus as u64 - 1) * n * n + 2 * n - 1
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub k: u64,
    pub n_of_k: u64,
    pub m_of_k: u64,
    /// From the self-intersection formula.
    pub i_alpha: u64,
    pub i_beta: u64,
    pub alpha: Measured,
    pub beta: Measured,
}

impl PairRow {
    pub fn m_alpha(&self) -> Option<f64> {
        self.alpha.m_gamma
    }
    pub fn m_beta(&self) -> Option<f64> {
        self.beta.m_gamma
    }
}

pub const PAIRS_HEADER: &str =
    "k,n_of_k,m_of_k,i_alpha,i_beta,m_alpha,m_beta,eta_alpha,eta_beta,sys1_alpha,sys2_alpha,sys1_beta,sys2_beta,converged_alpha,converged_beta";

pub fn pair_table(genus: u32, n_max: u64, opts: &OptOptions) -> Result<Vec<PairRow>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let g1 = 2 * genus as u64 - 1;
    // alpha_k = gamma_{k - 2g + 1, 1}, beta_k = gamma_{1, n}
    let mut jobs: Vec<(u64, u64)> = (1..=n_max).flat_map(|n| [(k_of_n(genus, n) - g1, 1), (1, n)]).collect();
    jobs.sort_unstable();
    jobs.dedup();
    let done: Vec<((u64, u64), Measured)> = jobs.par_iter().map(|&(m, n)| ((m, n), measure(genus, m, n, opts))).collect();
    let lookup = |m: u64, n: u64| done.iter().find(|(key, _)| *key == (m, n)).map(|(_, v)| v.clone()).expect("job ran");
    (1..=n_max)
        .map(|n| {
            let k = k_of_n(genus, n);
            let m = k - g1;
            Ok(PairRow {
                k,
                n_of_k: n,
                m_of_k: m,
                i_alpha: self_intersection_formula(genus, m, 1)?,
                i_beta: self_intersection_formula(genus, 1, n)?,
                alpha: lookup(m, 1),
                beta: lookup(1, n),
            })
        })
        .collect()
}

pub fn pairs_csv(rows: &[PairRow]) -> String {
    let mut out = String::from(PAIRS_HEADER);
    out.push('\n');
    for r in rows {
        let (a, b) = (&r.alpha, &r.beta);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.n_of_k,
            r.m_of_k,
            r.i_alpha,
            r.i_beta,
            opt_field(a.m_gamma),
            opt_field(b.m_gamma),
            opt_field(a.eta_at_opt),
            opt_field(b.eta_at_opt),
            opt_field(a.sys1),
            opt_field(a.sys2),
            opt_field(b.sys1),
            opt_field(b.sys2),
            a.converged,
            b.converged
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub ratio_alpha_max: f64,
    pub alpha_k: u64,
    pub ratio_beta_min: f64,
    pub beta_k: u64,
    /// `m_alpha / ln k` per row, in row order.
    pub alpha_ratios: Vec<(u64, f64)>,
    pub beta_ratios: Vec<(u64, f64)>,
}

/// Ratios over the rows with `k >= 15` (the first pair is degenerate).
pub fn growth_fit(rows: &[(u64, f64, f64)]) -> Result<GrowthFit> {
    let used: Vec<&(u64, f64, f64)> = rows.iter().filter(|r| r.0 >= 15).collect();
    if used.len() < 4 {
        return Err(Error::Domain(format!("growth fit needs 4 rows with k >= 15, got {}", used.len())));
    }
    let alpha_ratios: Vec<(u64, f64)> = used.iter().map(|&&(k, a, _)| (k, a / (k as f64).ln())).collect();
    let beta_ratios: Vec<(u64, f64)> = used.iter().map(|&&(k, _, b)| (k, b / (k as f64).sqrt())).collect();
    let amax = alpha_ratios.iter().copied().max_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
    let bmin = beta_ratios.iter().copied().min_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
    Ok(GrowthFit { ratio_alpha_max: amax.1, alpha_k: amax.0, ratio_beta_min: bmin.1, beta_k: bmin.0, alpha_ratios, beta_ratios })
}

/// `(k, m_alpha, m_beta)` for the rows where both optimisations succeeded.
pub fn fit_input(rows: &[PairRow]) -> Vec<(u64, f64, f64)> {
    rows.iter().filter_map(|r| Some((r.k, r.m_alpha()?, r.m_beta()?))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusEntry {
    /// Position in the input list.
    pub index: usize,
    pub word: String,
    pub m_gamma: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Census {
    /// Sorted by value; duplicates removed by exact (normalised) word only.
    pub entries: Vec<CensusEntry>,
    pub count: usize,
    pub max_length: Option<f64>,
    pub failures: Vec<(usize, String)>,
}

pub fn spectrum_census(words: &[CurveWord], max_length: Option<f64>, opts: &OptOptions) -> Result<Census> {
    let mut unique: Vec<(usize, CurveWord)> = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if !is_filling(w)? {
            return Err(Error::NotFilling(format!("census entry {i}: {w}")));
        }
        let nw = normalize(w)?;
        if !unique.iter().any(|(_, u)| *u == nw) {
            unique.push((i, nw));
        }
    }
    let results: Vec<(usize, CurveWord, Result<OptResult>)> =
        unique.into_par_iter().map(|(i, w)| {
            let r = minimize_length_report(&w, opts);
            (i, w, r)
        }).collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (index, w, r) in results {
        match r {
            Ok(o) if max_length.is_none_or(|l| o.m_gamma <= l) => {
                entries.push(CensusEntry { index, word: w.to_string(), m_gamma: o.m_gamma, converged: o.converged })
            }
            Ok(_) => {}
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    entries.sort_by(|a, b| a.m_gamma.total_cmp(&b.m_gamma).then(a.index.cmp(&b.index)));
    Ok(Census { count: entries.len(), entries, max_length, failures })
}

/// Family members with `1 <= m, n <= max_mn`, as census input.
pub fn census_words(genus: u32, max_mn: u64) -> Result<Vec<CurveWord>> {
    let mut out = Vec::new();
    for m in 1..=max_mn {
        for n in 1..=max_mn {
            out.push(family_word(genus, m, n)?);
        }
    }
    Ok(out)
}

pub fn census_csv(c: &Census) -> String {
    let mut out = String::from("index,m_gamma,converged,word\n");
    for e in &c.entries {
        out.push_str(&format!("{},{},{},{}\n", e.index, sig12(e.m_gamma), e.converged, e.word));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }
}

fn eta_at(rows: &[FamilyScanRow], m: u64, n: u64) -> Option<f64> {
    rows.iter().find(|r| r.m == m && r.n == n).and_then(|r| r.measured.eta_at_opt)
}

/// Checks on a family scan; a check whose rows are absent is not emitted.
pub fn scan_checks(rows: &[FamilyScanRow], cal: &Calibration) -> Vec<Check> {
    let mut out = Vec::new();
    if let (Some(e2), Some(e20)) = (eta_at(rows, 2, 1), eta_at(rows, 20, 1)) {
        out.push(Check::new(
            "eta_pinches",
            e20 < 0.5 * e2 && e20 < 0.1,
            format!("eta(20,1) = {} against eta(2,1) = {}; need < {} and < 0.1", sig12(e20), sig12(e2), sig12(0.5 * e2)),
        ));
    }
    let trend: Vec<Option<f64>> = (1..=10).map(|j| eta_at(rows, 2 * j, 1)).collect();
    if trend.iter().all(Option::is_some) {
        let t: Vec<f64> = trend.into_iter().flatten().collect();
        let worst = t.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        out.push(Check::new(
            "eta_trend",
            worst <= 1.05,
            format!("largest step ratio over m = 2, 4, .., 20 at n = 1 is {}", sig12(worst)),
        ));
    }
    let floor: Vec<Option<f64>> = (1..=10).map(|n| eta_at(rows, 1, n)).collect();
    if floor.iter().all(Option::is_some) {
        let lo = floor.into_iter().flatten().fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            "eta_floor",
            lo >= cal.eta_floor,
            format!("min eta over m = 1, n <= 10 is {}; frozen floor {}", sig12(lo), sig12(cal.eta_floor)),
        ));
    }
    let failed: Vec<String> = rows.iter().filter(|r| !r.measured.converged).map(|r| format!("({},{})", r.m, r.n)).collect();
    out.push(Check::new("scan_converged", failed.is_empty(), format!("unconverged rows: [{}]", failed.join(" "))));
    out
}

pub fn pair_checks(rows: &[PairRow], cal: &Calibration) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(r) = rows.iter().find(|r| r.k == 84) {
        if let (Some(a), Some(b)) = (r.m_alpha(), r.m_beta()) {
            out.push(Check::new("beta_beats_alpha_at_84", b > a, format!("m_alpha = {}, m_beta = {}", sig12(a), sig12(b))));
        }
    }
    if let Ok(fit) = growth_fit(&fit_input(rows)) {
        out.push(Check::new(
            "alpha_log_bounded",
            fit.ratio_alpha_max <= cal.alpha_ratio_max,
            format!("max m_alpha/ln k = {} at k = {}; frozen bound {}", sig12(fit.ratio_alpha_max), fit.alpha_k, sig12(cal.alpha_ratio_max)),
        ));
        out.push(Check::new(
            "beta_sqrt_bounded_below",
            fit.ratio_beta_min >= cal.beta_ratio_min && fit.ratio_beta_min > 0.0,
            format!("min m_beta/sqrt k = {} at k = {}; frozen floor {}", sig12(fit.ratio_beta_min), fit.beta_k, sig12(cal.beta_ratio_min)),
        ));
    }
    let beta_thick: Vec<f64> = rows
        .iter()
        .filter_map(|r| Some(r.beta.sys1?.min(r.beta.sys2?).min(r.beta.eta_at_opt?)))
        .collect();
    if !beta_thick.is_empty() {
        let lo = beta_thick.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            "beta_thick",
            lo >= cal.beta_thick_min,
            format!("min(sys1, sys2, eta) over beta rows = {}; frozen floor {}", sig12(lo), sig12(cal.beta_thick_min)),
        ));
    }
    let alpha: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k >= 15)
        .filter_map(|r| Some((r.alpha.eta_at_opt?, r.alpha.sys1?.min(r.alpha.sys2?))))
        .collect();
    if alpha.len() >= 2 {
        let worst = alpha.windows(2).map(|w| w[1].0 / w[0].0).fold(0.0, f64::max);
        let comp = alpha.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            "alpha_pinches_thick_complement",
            worst <= 1.05 && comp >= cal.alpha_complement_min,
            format!(
                "largest eta step ratio {}; min complement systole {}; frozen floor {}",
                sig12(worst),
                sig12(comp),
                sig12(cal.alpha_complement_min)
            ),
        ));
    }
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !(r.alpha.converged && r.beta.converged))
        .map(|r| r.k.to_string())
        .collect();
    out.push(Check::new("pairs_converged", failed.is_empty(), format!("unconverged k: [{}]", failed.join(" "))));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary<T: Serialize> {
    pub config: RunConfig,
    pub calibration: Calibration,
    pub results: T,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

impl<T: Serialize> Summary<T> {
    pub fn new(config: RunConfig, calibration: Calibration, results: T, checks: Vec<Check>) -> Self {
        let all_passed = checks.iter().all(|c| c.passed);
        Summary { config, calibration, results, checks, all_passed }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_12(self)
    }
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>_summary.json`.
pub fn write_outputs<T: Serialize>(dir: &Path, stem: &str, csv: &str, summary: &Summary<T>) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let c = dir.join(format!("{stem}.csv"));
    let j = dir.join(format!("{stem}_summary.json"));
    fs::write(&c, csv)?;
    fs::write(&j, summary.to_json()? + "\n")?;
    Ok((c, j))
}
