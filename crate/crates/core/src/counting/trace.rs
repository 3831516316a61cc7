//! Frobenius trace data extracted from point counts on `X_d`.
//!
//! For a smooth proper rigid Calabi-Yau threefold the Lefschetz trace formula
//! reads `#X(F_p) = 1 + tr(F | H^2) + tr(F | H^4) + p^3 - A_p`, and the H^2 and
//! H^4 traces are divisible by p, so `#X(F_p) = 1 - A_p (mod p)`. A small
//! resolution of a nodal model replaces each rational node by a fibre with
//! `1 (mod p)` points, so the singular model gives the same residue. No
//! resolution is ever built; the count on the singular quintic is used directly.
//!
//! Exact traces need the H^2 and H^4 terms. Those are absorbed into a
//! [`CorrectionModel`] fitted per residue class of `p mod 5`, which is treated
//! as a falsifiable hypothesis: a model is returned only if it reproduces the
//! oracle on held-out primes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{count_projective, schoen_form, singular_points};
use crate::error::{Error, Result};
use crate::ffarith::{squarefree_part, Prime, Residue};

pub const COUNT_FORMAT_VERSION: &str = "v1";

/// Bound on each correction constant (second Betti number of the resolution).
pub const MAX_CORRECTION: i64 = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub family: String,
    pub d: i64,
    pub p: u64,
    pub count: u64,
    pub version: String,
}

impl CountRecord {
    pub fn schoen(d: i64, p: Prime, count: u64) -> Self {
        CountRecord { family: "schoen".into(), d, p: p.get(), count, version: COUNT_FORMAT_VERSION.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    Exact,
    Congruence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceValue {
    Exact(i64),
    Congruence(Residue),
}

/// The pair `(A_p, D_p)` of the Frobenius polynomial `X^2 - A_p X + D_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrobeniusData {
    pub p: Prime,
    pub a_p: TraceValue,
    pub d_p: u128,
}

impl FrobeniusData {
    pub fn exact(p: Prime, a_p: i64, det_exponent: u32) -> Self {
        FrobeniusData { p, a_p: TraceValue::Exact(a_p), d_p: (p.get() as u128).pow(det_exponent) }
    }

    pub fn congruence(p: Prime, a_p: Residue, det_exponent: u32) -> Self {
        FrobeniusData { p, a_p: TraceValue::Congruence(a_p), d_p: (p.get() as u128).pow(det_exponent) }
    }

    pub fn mode(&self) -> TraceMode {
        match self.a_p {
            TraceValue::Exact(_) => TraceMode::Exact,
            TraceValue::Congruence(_) => TraceMode::Congruence,
        }
    }
}

fn check_good(d: i64, p: Prime) -> Result<()> {
    let q = p.get() as i64;
    if q == 2 || q == 5 || d % q == 0 {
        return Err(Error::BadReduction { d, p: p.get() });
    }
    Ok(())
}

/// `(1 - count) mod p`, congruent to the trace of Frobenius on H^3 of `X_d`.
pub fn trace_congruence(d: i64, p: Prime) -> Result<Residue> {
    let d = squarefree_part(d)?;
    check_good(d, p)?;
    let count = count_projective(&schoen_form(d)?, p)?;
    Ok(trace_congruence_from_count(p, count))
}

pub fn trace_congruence_from_count(p: Prime, count: u64) -> Residue {
    Residue::new(1 - count as i128, p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionModel {
    pub d: i64,
    /// `p mod 5 -> (c1, c2)`.
    pub constants: BTreeMap<u8, (i64, i64)>,
    pub calibration_primes: Vec<u64>,
    pub validation_primes: Vec<u64>,
}

impl CorrectionModel {
    /// `A_p = 1 + c1 p + c2 p^2 + p^3 - (count + p n_p)`.
    pub fn predict(&self, p: Prime, count: u64, nodes: u64) -> Option<i64> {
        let (c1, c2) = *self.constants.get(&((p.get() % 5) as u8))?;
        Some(model_trace(c1, c2, p, count, nodes))
    }
}

fn model_trace(c1: i64, c2: i64, p: Prime, count: u64, nodes: u64) -> i64 {
    let q = p.get() as i128;
    let v = 1 + c1 as i128 * q + c2 as i128 * q * q + q * q * q - (count as i128 + q * nodes as i128);
    v as i64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalibrationError {
    #[error("no integer correction pair fits residue class {class} mod 5 (primes {primes:?})")]
    NoConsistentModel { class: u8, primes: Vec<u64> },
    /// `(p, oracle, predicted)` for every held-out prime the model gets wrong.
    #[error("model fails on held-out primes: {failures:?}")]
    ValidationFailure { model: Box<CorrectionModel>, failures: Vec<(u64, i64, Option<i64>)> },
    #[error("calibration precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] Error),
}

/// Fits the correction constants using the toolkit's own counters.
pub fn calibrate_correction(
    d: i64,
    oracle: &BTreeMap<u64, i64>,
    calibration_primes: &[u64],
    validation_primes: &[u64],
) -> std::result::Result<CorrectionModel, CalibrationError> {
    let form = schoen_form(d)?;
    calibrate_correction_with(d, oracle, calibration_primes, validation_primes, |p| {
        let count = count_projective(&form, p)?;
        let nodes = singular_points(&form, p)?.len() as u64;
        Ok((count, nodes))
    })
}

/// As [`calibrate_correction`], with `counts(p) = (count, rational nodes)`
/// supplied by the caller (e.g. from a cache).
pub fn calibrate_correction_with<F>(
    d: i64,
    oracle: &BTreeMap<u64, i64>,
    calibration_primes: &[u64],
    validation_primes: &[u64],
    mut counts: F,
) -> std::result::Result<CorrectionModel, CalibrationError>
where
    F: FnMut(Prime) -> Result<(u64, u64)>,
{
    if validation_primes.is_empty() {
        return Err(CalibrationError::Precondition("empty validation set".into()));
    }
    if calibration_primes.is_empty() {
        return Err(CalibrationError::Precondition("empty calibration set".into()));
    }
    let class_of = |p: u64| (p % 5) as u8;
    for &p in calibration_primes.iter().chain(validation_primes) {
        let prime = Prime::new(p)?;
        check_good(d, prime)?;
        if !oracle.contains_key(&p) {
            return Err(CalibrationError::Precondition(format!("oracle has no value at p = {p}")));
        }
    }
    let mut by_class: BTreeMap<u8, Vec<(Prime, u64, u64)>> = BTreeMap::new();
    for &p in calibration_primes {
        let prime = Prime::new(p)?;
        let (count, nodes) = counts(prime)?;
        by_class.entry(class_of(p)).or_default().push((prime, count, nodes));
    }

    let mut constants = BTreeMap::new();
    for (&class, rows) in &by_class {
        let fits: Vec<(i64, i64)> = candidate_pairs()
            .filter(|&(c1, c2)| rows.iter().all(|&(p, count, nodes)| model_trace(c1, c2, p, count, nodes) == oracle[&p.get()]))
            .collect();
        let chosen = choose_pair(&fits).ok_or_else(|| CalibrationError::NoConsistentModel {
            class,
            primes: rows.iter().map(|r| r.0.get()).collect(),
        })?;
        constants.insert(class, chosen);
    }

    let model = CorrectionModel {
        d,
        constants,
        calibration_primes: calibration_primes.to_vec(),
        validation_primes: validation_primes.to_vec(),
    };
    let mut failures = Vec::new();
    for &p in validation_primes {
        let prime = Prime::new(p)?;
        let (count, nodes) = counts(prime)?;
        let predicted = model.predict(prime, count, nodes);
        if predicted != Some(oracle[&p]) {
            failures.push((p, oracle[&p], predicted));
        }
    }
    if failures.is_empty() {
        Ok(model)
    } else {
        Err(CalibrationError::ValidationFailure { model: Box::new(model), failures })
    }
}

fn candidate_pairs() -> impl Iterator<Item = (i64, i64)> {
    (-MAX_CORRECTION..=MAX_CORRECTION).flat_map(|c1| (-MAX_CORRECTION..=MAX_CORRECTION).map(move |c2| (c1, c2)))
}

/// With a single calibration prime in a class the pair is underdetermined;
/// prefer `c1 = c2` (the H^2 and H^4 traces agree up to the factor p under
/// Poincare duality), then the pair of least norm.
fn choose_pair(fits: &[(i64, i64)]) -> Option<(i64, i64)> {
    fits.iter()
        .copied()
        .min_by_key(|&(c1, c2)| (c1 != c2, c1.abs() + c2.abs(), c1, c2))
}

/// Exact trace via a validated model; checks the Weil bound and the congruence.
pub fn trace_exact(d: i64, p: Prime, model: &CorrectionModel) -> Result<FrobeniusData> {
    let d = squarefree_part(d)?;
    check_good(d, p)?;
    let form = schoen_form(d)?;
    let count = count_projective(&form, p)?;
    let nodes = singular_points(&form, p)?.len() as u64;
    trace_exact_from_counts(d, p, model, count, nodes)
}

pub fn trace_exact_from_counts(d: i64, p: Prime, model: &CorrectionModel, count: u64, nodes: u64) -> Result<FrobeniusData> {
    check_good(d, p)?;
    let a_p = model.predict(p, count, nodes).ok_or_else(|| {
        Error::InvalidArgument(format!("model has no constants for p = {p} (class {} mod 5)", p.get() % 5))
    })?;
    let q = p.get() as i128;
    if (a_p as i128).pow(2) > 4 * q * q * q {
        return Err(Error::WeilBoundViolation { p: p.get(), a_p });
    }
    let residue = trace_congruence_from_count(p, count);
    if !residue.matches(a_p as i128) {
        return Err(Error::CongruenceMismatch { p: p.get(), a_p, residue: residue.value() });
    }
    Ok(FrobeniusData::exact(p, a_p, 3))
}
