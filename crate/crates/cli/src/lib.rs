//! Command implementations behind the `serrematch` binary.

pub mod cache;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use serrematch_core::counting::{
    calibrate_correction_with, count_projective, schoen_form, singular_points, trace_congruence_from_count,
    trace_exact_from_counts, CalibrationError, CorrectionModel, CountRecord, FrobeniusData,
};
use serrematch_core::ffarith::{primes_between, squarefree_part, Prime};
use serrematch_core::modsym::{dim_cusp_forms, dim_new_cusp_forms, rational_newforms, Newform};
use serrematch_core::serre::{match_forms_with, rigid_bounds, BadPrimeSet, CompatibleSystemData, MatchOptions, MatchResult};
use serrematch_core::twist::verify_twist_with;

use cache::{Cache, CacheKey};

/// Calibration primes for exact traces: two per residue class mod 5 where
/// available below 20, and at least one in every class.
pub const CALIBRATION_PRIMES: [u64; 5] = [7, 11, 13, 17, 19];

#[derive(Debug, Parser)]
#[command(name = "serrematch", version, about = "Point counts, rational newforms and trace matching for the Schoen quintic family")]
pub struct Cli {
    /// Cache directory (overrides SERREMATCH_CACHE)
    #[arg(long, global = true, value_name = "PATH")]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Suppress progress text on standard error
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Projective point counts of X_d over F_p
    Count {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long, conflicts_with_all = ["pmin", "pmax"])]
        p: Option<u64>,
        #[arg(long, requires = "pmax")]
        pmin: Option<u64>,
        #[arg(long, requires = "pmin")]
        pmax: Option<u64>,
    },
    /// Singular points of X_d over F_p
    Nodes {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long)]
        p: u64,
    },
    /// Rational newforms of level N and weight k
    Forms {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        weight: u32,
        #[arg(long, default_value_t = 20)]
        coeff_bound: u64,
    },
    /// Dimension of S_k(Gamma0(N)) and of its new part
    Dim {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        weight: u32,
    },
    /// Match the Frobenius data of X_d against newforms in the rigid search box
    Match {
        #[arg(long, value_delimiter = ',', required = true)]
        bad_primes: Vec<u64>,
        #[arg(long, default_value_t = 97)]
        pmax: u64,
        /// Compare exact traces (needs --calibrate)
        #[arg(long, requires = "calibrate")]
        exact: bool,
        /// Fit and validate the exact-trace correction model
        #[arg(long)]
        calibrate: bool,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        d: i64,
    },
    /// Check the quadratic twist of the matched form against counts on X_d
    TwistVerify {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long, default_value_t = 47)]
        pmax: u64,
    },
}

/// Bad flag values; the binary exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// A command's report and whether its verification passed.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub extra: Vec<(&'static str, Value)>,
    pub passed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, extra: vec![], passed: true }
    }
}

/// Flag, then `SERREMATCH_CACHE`, then the user cache directory.
pub fn resolve_cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os("SERREMATCH_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| {
            std::env::var_os("XDG_CACHE_HOME")
                .map(PathBuf::from)
                .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))
                .map(|base| base.join("serrematch"))
        })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NewformRecord {
    level: u64,
    weight: u32,
    coeff_bound: u64,
    new_dim: usize,
    non_rational_dims: Vec<usize>,
    forms: Vec<Newform>,
}

/// Cached access to the expensive computations.
pub struct Store {
    cache: Option<Cache>,
    progress: bool,
}

impl Store {
    pub fn new(cache: Option<Cache>, progress: bool) -> Self {
        Store { cache, progress }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.progress {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// `#X_d(F_p)` for squarefree `d`.
    pub fn count(&self, d: i64, p: Prime) -> serrematch_core::Result<u64> {
        let key = CacheKey::count(d, p.get());
        if let Some(rec) = self.cache.as_ref().and_then(|c| c.get::<CountRecord>(&key)) {
            if rec.d == d && rec.p == p.get() && rec.family == "schoen" {
                return Ok(rec.count);
            }
        }
        self.note(format!("counting X_{d} over F_{p}"));
        let count = count_projective(&schoen_form(d)?, p)?;
        if let Some(c) = &self.cache {
            if let Err(e) = c.put(&key, &CountRecord::schoen(d, p, count)) {
                eprintln!("warning: cache write failed: {e:#}");
            }
        }
        Ok(count)
    }

    pub fn newforms(&self, level: u64, weight: u32, bound: u64) -> serrematch_core::Result<(Vec<Newform>, Vec<usize>)> {
        let key = CacheKey::newforms(level, weight);
        if let Some(rec) = self.cache.as_ref().and_then(|c| c.get::<NewformRecord>(&key)) {
            if rec.level == level && rec.weight == weight && rec.coeff_bound >= bound {
                let forms = rec
                    .forms
                    .into_iter()
                    .map(|mut f| {
                        f.coeffs.retain(|&n, _| n <= bound);
                        f
                    })
                    .collect();
                return Ok((forms, rec.non_rational_dims));
            }
        }
        self.note(format!("computing newforms at level {level}, weight {weight}"));
        let dec = rational_newforms(level, weight, bound)?;
        if let Some(c) = &self.cache {
            let rec = NewformRecord {
                level,
                weight,
                coeff_bound: bound,
                new_dim: dec.new_dim,
                non_rational_dims: dec.non_rational_dims.clone(),
                forms: dec.forms.clone(),
            };
            if let Err(e) = c.put(&key, &rec) {
                eprintln!("warning: cache write failed: {e:#}");
            }
        }
        Ok((dec.forms, dec.non_rational_dims))
    }

    fn schoen_system(&self, d: i64, bad: BadPrimeSet) -> CompatibleSystemData<'_> {
        CompatibleSystemData {
            bad,
            trace_source: Box::new(move |p| {
                check_good(d, p)?;
                Ok(FrobeniusData::congruence(p, trace_congruence_from_count(p, self.count(d, p)?), 3))
            }),
            det_exponent: 3,
            min_prime: 7,
        }
    }

    fn run_match(&self, system: &CompatibleSystemData, pmax: u64) -> Result<MatchResult> {
        let bounds = rigid_bounds(&system.bad)?;
        let source = |n: u64, k: u32, b: u64| self.newforms(n, k, b).map(|r| r.0);
        let r = match_forms_with(system, bounds, pmax, MatchOptions::default(), &source)?;
        for s in &r.skipped {
            eprintln!("warning: skipped level {} weight {} (cusp space of dimension {})", s.level, s.weight, s.dim);
        }
        Ok(r)
    }
}

fn check_good(d: i64, p: Prime) -> serrematch_core::Result<()> {
    let q = p.get() as i64;
    if q == 2 || q == 5 || d % q == 0 {
        return Err(serrematch_core::Error::BadReduction { d, p: p.get() });
    }
    Ok(())
}

fn normalize_d(d: i64) -> Result<i64> {
    if d == 0 {
        return usage("--d must be nonzero");
    }
    Ok(squarefree_part(d)?)
}

fn prime_arg(p: u64) -> Result<Prime> {
    match Prime::new(p) {
        Ok(p) => Ok(p),
        Err(_) => usage(format!("{p} is not prime")),
    }
}

fn is_bad(d: i64, p: u64) -> bool {
    p == 2 || p == 5 || d % p as i64 == 0
}

pub fn dispatch(command: Command, store: &Store) -> Result<Outcome> {
    match command {
        Command::Count { d, p, pmin, pmax } => {
            let d = normalize_d(d)?;
            let primes = match (p, pmin, pmax) {
                (Some(p), None, None) => {
                    let p = prime_arg(p)?;
                    if is_bad(d, p.get()) {
                        return usage(format!("p = {p} is a bad prime for d = {d}"));
                    }
                    vec![p]
                }
                (None, Some(lo), Some(hi)) if lo <= hi => {
                    primes_between(lo, hi).into_iter().filter(|p| !is_bad(d, p.get())).collect()
                }
                (None, Some(_), Some(_)) => return usage("--pmin must not exceed --pmax"),
                _ => return usage("give either --p or both --pmin and --pmax"),
            };
            let records = primes
                .into_iter()
                .map(|p| Ok(CountRecord::schoen(d, p, store.count(d, p)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(serde_json::to_value(records)?))
        }
        Command::Nodes { d, p } => {
            let d = normalize_d(d)?;
            let p = prime_arg(p)?;
            let points = singular_points(&schoen_form(d)?, p)?;
            Ok(Outcome::ok(json!({ "d": d, "p": p.get(), "count": points.len(), "points": points })))
        }
        Command::Forms { level, weight, coeff_bound } => {
            if level == 0 || coeff_bound < 2 {
                return usage("--level must be positive and --coeff-bound at least 2");
            }
            if weight < 2 || weight % 2 == 1 {
                return usage("--weight must be even and at least 2");
            }
            let (forms, non_rational) = store.newforms(level, weight, coeff_bound)?;
            if !non_rational.is_empty() {
                store.note(format!("non-rational Hecke blocks of dimensions {non_rational:?} not split"));
            }
            Ok(Outcome::ok(serde_json::to_value(forms)?))
        }
        Command::Dim { level, weight } => {
            if level == 0 || weight < 2 || weight % 2 == 1 {
                return usage("--level must be positive and --weight even and at least 2");
            }
            Ok(Outcome::ok(json!({
                "level": level,
                "weight": weight,
                "dim_cusp": dim_cusp_forms(level, weight),
                "dim_new": dim_new_cusp_forms(level, weight),
            })))
        }
        Command::Match { bad_primes, pmax, exact, calibrate, d } => {
            let d = normalize_d(d)?;
            let bad = match BadPrimeSet::new(bad_primes) {
                Ok(b) => b,
                Err(e) => return usage(format!("--bad-primes: {e}")),
            };
            if pmax < 7 {
                return usage("--pmax must be at least 7");
            }
            let system = store.schoen_system(d, bad.clone());
            let congruence = store.run_match(&system, pmax)?;
            if !calibrate {
                let passed = congruence.unique;
                return Ok(Outcome { result: serde_json::to_value(&congruence)?, extra: vec![], passed });
            }
            let Some(oracle_form) = congruence.unique.then(|| congruence.forms[0].clone()) else {
                store.note("calibration needs a unique congruence match");
                return Ok(Outcome { result: serde_json::to_value(&congruence)?, extra: vec![], passed: false });
            };
            let model = match calibrate_model(store, d, &system, &oracle_form, pmax)? {
                Ok(m) => m,
                Err(report) => {
                    return Ok(Outcome {
                        result: serde_json::to_value(&congruence)?,
                        extra: vec![("calibration", report)],
                        passed: false,
                    })
                }
            };
            let calibration = serde_json::to_value(&model)?;
            if !exact {
                return Ok(Outcome {
                    result: serde_json::to_value(&congruence)?,
                    extra: vec![("calibration", calibration)],
                    passed: congruence.unique,
                });
            }
            let exact_system = CompatibleSystemData {
                bad,
                trace_source: Box::new(|p| {
                    let count = store.count(d, p)?;
                    let nodes = singular_points(&schoen_form(d)?, p)?.len() as u64;
                    trace_exact_from_counts(d, p, &model, count, nodes)
                }),
                det_exponent: 3,
                min_prime: 7,
            };
            let r = store.run_match(&exact_system, pmax)?;
            Ok(Outcome { result: serde_json::to_value(&r)?, extra: vec![("calibration", calibration)], passed: r.unique })
        }
        Command::TwistVerify { d, pmax } => {
            let d = normalize_d(d)?;
            if pmax < 7 {
                return usage("--pmax must be at least 7");
            }
            let base = store.schoen_system(1, BadPrimeSet::new([5])?);
            let m = store.run_match(&base, pmax)?;
            if !m.unique {
                bail!("base congruence match is not unique: {:?}", m.matches);
            }
            let f = &m.forms[0];
            store.note(format!("base form {}", f.label));
            let report = verify_twist_with(d, pmax, f, &|d, p| store.count(d, p))?;
            let passed = report.passed;
            Ok(Outcome { result: serde_json::to_value(report)?, extra: vec![], passed })
        }
    }
}

/// Fits the correction model on [`CALIBRATION_PRIMES`] and validates it on the
/// other good primes up to `pmax`. The inner `Err` is a JSON failure report.
fn calibrate_model(
    store: &Store,
    d: i64,
    system: &CompatibleSystemData,
    oracle_form: &Newform,
    pmax: u64,
) -> Result<std::result::Result<CorrectionModel, Value>> {
    let good: Vec<u64> = system.good_primes(pmax).into_iter().map(|p| p.get()).collect();
    let calib: Vec<u64> = CALIBRATION_PRIMES.iter().copied().filter(|p| good.contains(p)).collect();
    let valid: Vec<u64> = good.iter().copied().filter(|p| !calib.contains(p)).collect();
    let oracle: BTreeMap<u64, i64> = oracle_form.prime_coeffs().collect();
    let schoen = schoen_form(d)?;
    let outcome = calibrate_correction_with(d, &oracle, &calib, &valid, |p| {
        Ok((store.count(d, p)?, singular_points(&schoen, p)?.len() as u64))
    });
    Ok(match outcome {
        Ok(m) => Ok(m),
        Err(CalibrationError::NoConsistentModel { class, primes }) => {
            Err(json!({ "error": "NoConsistentModel", "class": class, "primes": primes }))
        }
        Err(CalibrationError::ValidationFailure { model, failures }) => Err(json!({
            "error": "ValidationFailure",
            "model": model,
            "failures": failures.iter().map(|(p, want, got)| json!({"p": p, "oracle": want, "predicted": got})).collect::<Vec<_>>(),
        })),
        Err(CalibrationError::Precondition(msg)) => Err(json!({ "error": "Precondition", "message": msg })),
        Err(CalibrationError::Core(e)) => return Err(e).context("calibration"),
    })
}

/// The JSON document written to standard output.
pub fn envelope(args: &[String], outcome: &Outcome) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), json!("serrematch"));
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(args));
    doc.insert("result".into(), outcome.result.clone());
    for (k, v) in &outcome.extra {
        doc.insert((*k).into(), v.clone());
    }
    doc.insert("passed".into(), json!(outcome.passed));
    Value::Object(doc)
}

