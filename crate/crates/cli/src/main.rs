use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infspec::error::Error;
use infspec::experiments::{
    census_csv, census_words, family_scan, fit_input, growth_fit, pair_checks, pair_table, pairs_csv, scan_checks,
    scan_csv, sig12, spectrum_census, to_json_12, write_outputs, Calibration, Check, IntRange, RunConfig, Summary,
};
use infspec::geometry_probe::{family_lower_bound, in_t_epsilon, subsurface_systole, systole, Side, DEFAULT_DEPTH};
use infspec::optimizer::{minimize_length, optimality_certificate, OptOptions};
use infspec::representation::{build_representation, geodesic_length, FNCoords};
use infspec::surface_group::{
    family_word, intersection_report, is_filling, pair_intersection_oracle, self_intersection_formula, CurveWord,
};

#[derive(Parser)]
#[command(name = "infspec", version, about = "Filling curves and the infimum of their length functions")]
struct Cli {
    /// TOML or JSON run configuration. Flags given explicitly win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Self and pair intersection numbers, filling and separating flags.
    Intersect {
        words: Vec<String>,
        #[command(flatten)]
        target: Target,
    },
    /// Geodesic length of a word at a structure.
    Length {
        word: Option<String>,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        structure: Structure,
    },
    /// Minimise the length of a word over Teichmueller space.
    Optimize {
        word: Option<String>,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        opt: OptFlags,
        /// Skip the filling check (non-filling words escape to the boundary).
        #[arg(long)]
        allow_nonfilling: bool,
        /// Also write the record to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Family scan over a grid of (m, n).
    Scan {
        #[arg(long)]
        m: Option<IntRange>,
        #[arg(long)]
        n: Option<IntRange>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Pairs of family members with equal self-intersection.
    Pairs {
        #[arg(long)]
        nmax: Option<u64>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Inf invariants of the family members with m, n <= max.
    Census {
        #[arg(long)]
        max_mn: Option<u64>,
        /// Length cut-off.
        #[arg(long)]
        max_length: Option<f64>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Side systoles and the family lower bound at a structure.
    Bounds {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        structure: Structure,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Thick-set parameter.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct Target {
    /// Family member eta^m * gamma0^n in genus g.
    #[arg(long, num_args = 3, value_names = ["G", "M", "N"])]
    family: Option<Vec<u64>>,
    #[arg(long)]
    genus: Option<u32>,
}

#[derive(Args)]
struct Structure {
    /// Cuff lengths, comma separated; default all 2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lengths: Option<Vec<f64>>,
    /// Twists, comma separated; default all 0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    twists: Option<Vec<f64>>,
    /// Coordinates as JSON.
    #[arg(long)]
    coords: Option<PathBuf>,
}

#[derive(Args, Default)]
struct OptFlags {
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    escape_threshold: Option<f64>,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    genus: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opt: OptFlags,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 2,
        Error::BoundaryEscape(_) => 3,
        Error::NonConvergence(_) => 4,
        _ => 1,
    }
}

struct Ctx {
    config: RunConfig,
}

impl Ctx {
    fn opts(&self, flags: &OptFlags) -> OptOptions {
        let mut o = self.config.opt_options();
        if let Some(v) = flags.starts {
            o.starts = v;
        }
        if let Some(v) = flags.tol {
            o.value_tol = v;
        }
        if let Some(v) = flags.max_evals {
            o.max_evals = v;
        }
        if let Some(v) = flags.escape_threshold {
            o.escape_threshold = v;
        }
        o
    }

    fn run_config(&mut self, run: &RunFlags) -> OptOptions {
        if let Some(g) = run.genus {
            self.config.genus = g;
        }
        if let Some(o) = &run.out {
            self.config.output_dir = o.clone();
        }
        let o = self.opts(&run.opt);
        self.config.optimizer = OptOptions { seed: self.config.optimizer.seed, ..o.clone() };
        o
    }
}

fn target_words(ctx: &Ctx, words: &[String], t: &Target) -> Result<Vec<CurveWord>, Error> {
    let mut out = Vec::new();
    if let Some(f) = &t.family {
        out.push(family_word(f[0] as u32, f[1], f[2])?);
    }
    let genus = t.genus.or(out.first().map(|w| w.genus)).or(Some(ctx.config.genus));
    for w in words {
        out.push(CurveWord::parse(w, genus)?);
    }
    if out.is_empty() {
        return Err(Error::Domain("give a word or --family G M N".into()));
    }
    Ok(out)
}

fn structure(genus: u32, s: &Structure) -> Result<FNCoords, Error> {
    if let Some(p) = &s.coords {
        return FNCoords::from_json(&std::fs::read_to_string(p)?);
    }
    let base = FNCoords::uniform(genus, 2.0)?;
    FNCoords::new(genus, s.lengths.clone().unwrap_or(base.lengths), s.twists.clone().unwrap_or(base.twists))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(j) = cli.jobs {
        config.jobs = Some(j);
    }
    if let Some(j) = config.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut ctx = Ctx { config };

    match cli.cmd {
        Cmd::Intersect { words, target } => {
            let ws = target_words(&ctx, &words, &target)?;
            for (i, w) in ws.iter().enumerate() {
                let formula = match (&target.family, i) {
                    (Some(f), 0) => Some(self_intersection_formula(f[0] as u32, f[1], f[2])?),
                    _ => None,
                };
                let r = intersection_report(w, formula)?;
                print!("{w}: self={} filling={}", r.self_count, r.is_filling);
                if let Some(s) = r.is_separating {
                    print!(" separating={s}");
                }
                if let Some(f) = r.formula_count {
                    print!(" formula={f} oracle={}", r.self_count);
                }
                println!();
            }
            for i in 0..ws.len() {
                for j in i + 1..ws.len() {
                    println!("pair({}, {})={}", i + 1, j + 1, pair_intersection_oracle(&ws[i], &ws[j])?);
                }
            }
            Ok(0)
        }
        Cmd::Length { word, target, structure: s } => {
            let ws = target_words(&ctx, word.as_slice(), &target)?;
            let w = &ws[0];
            let c = structure(w.genus, &s)?;
            let rep = build_representation(&c)?;
            println!("length={}", sig12(geodesic_length(&rep, w)?));
            Ok(0)
        }
        Cmd::Optimize { word, target, opt, allow_nonfilling, json } => {
            let ws = target_words(&ctx, word.as_slice(), &target)?;
            let w = &ws[0];
            if !allow_nonfilling && !is_filling(w)? {
                return Err(Error::NotFilling(format!("{w} (pass --allow-nonfilling to try anyway)")));
            }
            let opts = ctx.opts(&opt);
            let r = minimize_length(w, &opts)?;
            let cert = optimality_certificate(&r)?;
            println!("word: {}", r.word);
            println!("m_gamma: {}", sig12(r.m_gamma));
            println!("eta_at_opt: {}", sig12(r.eta_at_opt));
            println!("sys1: {} sys2: {}", sig12(r.sys_side1.value), sig12(r.sys_side2.value));
            println!("lengths: {}", r.x_gamma.lengths.iter().map(|&x| sig12(x)).collect::<Vec<_>>().join(","));
            println!("twists: {}", r.x_gamma.twists.iter().map(|&x| sig12(x)).collect::<Vec<_>>().join(","));
            println!("twists mod full twists: {}", r.normalized_twists.iter().map(|&x| sig12(x)).collect::<Vec<_>>().join(","));
            println!("starts: {} spread: {}", r.starts, sig12(r.spread));
            println!("certificate: {} (gradient norm {})", if cert.passed { "passed" } else { "failed" }, sig12(cert.gradient_norm));
            #[derive(serde::Serialize)]
            struct Record<'a> {
                config: &'a RunConfig,
                options: &'a OptOptions,
                result: &'a infspec::optimizer::OptResult,
                certificate: &'a infspec::optimizer::Certificate,
            }
            let rec = to_json_12(&Record { config: &ctx.config, options: &opts, result: &r, certificate: &cert })?;
            match json {
                Some(p) => std::fs::write(p, rec + "\n")?,
                None => println!("{rec}"),
            }
            Ok(if cert.passed { 0 } else { 4 })
        }
        Cmd::Scan { m, n, run } => {
            let opts = ctx.run_config(&run);
            if let Some(m) = m {
                ctx.config.scan.m = m;
            }
            if let Some(n) = n {
                ctx.config.scan.n = n;
            }
            let c = &ctx.config;
            let rows = family_scan(c.genus, &c.scan.m.values(), &c.scan.n.values(), c.scan.oracle_max, &opts)?;
            let cal = Calibration::frozen()?;
            let checks = scan_checks(&rows, &cal);
            let csv = scan_csv(&rows);
            print!("{csv}");
            print_checks(&checks);
            let summary = Summary::new(c.clone(), cal, &rows, checks);
            let (a, b) = write_outputs(&c.output_dir, "scan", &csv, &summary)?;
            println!("wrote {} and {}", a.display(), b.display());
            Ok(if summary.all_passed { 0 } else { 5 })
        }
        Cmd::Pairs { nmax, run } => {
            let opts = ctx.run_config(&run);
            if let Some(k) = nmax {
                ctx.config.pairs.n_max = k;
            }
            let c = &ctx.config;
            let rows = pair_table(c.genus, c.pairs.n_max, &opts)?;
            let cal = Calibration::frozen()?;
            let checks = pair_checks(&rows, &cal);
            let csv = pairs_csv(&rows);
            print!("{csv}");
            if let Ok(fit) = growth_fit(&fit_input(&rows)) {
                println!(
                    "ratio_alpha_max={} (k={}) ratio_beta_min={} (k={})",
                    sig12(fit.ratio_alpha_max),
                    fit.alpha_k,
                    sig12(fit.ratio_beta_min),
                    fit.beta_k
                );
            }
            print_checks(&checks);
            #[derive(serde::Serialize)]
            struct PairResults<'a> {
                rows: &'a [infspec::experiments::PairRow],
                fit: Option<infspec::experiments::GrowthFit>,
            }
            let res = PairResults { rows: &rows, fit: growth_fit(&fit_input(&rows)).ok() };
            let summary = Summary::new(c.clone(), cal, res, checks);
            let (a, b) = write_outputs(&c.output_dir, "pairs", &csv, &summary)?;
            println!("wrote {} and {}", a.display(), b.display());
            Ok(if summary.all_passed { 0 } else { 5 })
        }
        Cmd::Census { max_mn, max_length, run } => {
            let opts = ctx.run_config(&run);
            if let Some(k) = max_mn {
                ctx.config.census.max_mn = k;
            }
            if max_length.is_some() {
                ctx.config.census.max_length = max_length;
            }
            let c = &ctx.config;
            let words = census_words(c.genus, c.census.max_mn)?;
            let census = spectrum_census(&words, c.census.max_length, &opts)?;
            let csv = census_csv(&census);
            print!("{csv}");
            println!("count={} (deduplicated by exact word; mapping-class orbits are not identified)", census.count);
            let checks = vec![Check {
                name: "census_complete".into(),
                passed: census.failures.is_empty(),
                detail: format!("{} failed optimisations", census.failures.len()),
            }];
            print_checks(&checks);
            let summary = Summary::new(c.clone(), Calibration::frozen()?, &census, checks);
            let (a, b) = write_outputs(&c.output_dir, "census", &csv, &summary)?;
            println!("wrote {} and {}", a.display(), b.display());
            Ok(if summary.all_passed { 0 } else { 5 })
        }
        Cmd::Bounds { target, structure: s, depth, epsilon } => {
            let genus = target.family.as_ref().map(|f| f[0] as u32).or(target.genus).unwrap_or(ctx.config.genus);
            let c = structure(genus, &s)?;
            let rep = build_representation(&c)?;
            let sys = systole(&rep, depth)?;
            let s1 = subsurface_systole(&rep, Side::One, depth)?;
            let s2 = subsurface_systole(&rep, Side::Two, depth)?;
            println!("systole={} witness={} certified={}", sig12(sys.value), sys.witness, sys.certified);
            println!("sys1={} witness={} certified={}", sig12(s1.value), s1.witness, s1.certified);
            println!("sys2={} witness={} certified={}", sig12(s2.value), s2.witness, s2.certified);
            println!("eta={}", sig12(c.eta_length()));
            println!("in_t_epsilon({})={}", sig12(epsilon), in_t_epsilon(&rep, epsilon, depth)?);
            if let Some(f) = &target.family {
                let w = family_word(genus, f[1], f[2])?;
                let len = geodesic_length(&rep, &w)?;
                println!("length={}", sig12(len));
                if f[1] >= 2 {
                    let lb = family_lower_bound(f[1], f[2], s1.value, s2.value, c.eta_length())?;
                    println!("lower_bound={} holds={}", sig12(lb), lb <= len);
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
