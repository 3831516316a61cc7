//! Quadratic twists of newforms, checked against point counts on `X_d`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{count_projective, schoen_form, trace_congruence_from_count, TraceValue};
use crate::error::{Error, Result};
use crate::ffarith::{gcd, is_squarefree, kronecker, primes_between, squarefree_part, Prime, Residue};
use crate::modsym::Newform;
use crate::serre::CompatibleSystemData;

pub const TWIST_FORMAT_VERSION: &str = "v1";

/// The quadratic character of `Q(sqrt d)`, with fundamental discriminant `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistCharacter {
    pub d: i64,
    pub discriminant: i64,
    pub conductor: u64,
}

impl TwistCharacter {
    pub fn new(d: i64) -> Result<Self> {
        if !is_squarefree(d) {
            return Err(Error::InvalidArgument(format!("{d} is not a squarefree nonzero integer")));
        }
        let discriminant = if d.rem_euclid(4) == 1 { d } else { 4 * d };
        Ok(TwistCharacter { d, discriminant, conductor: discriminant.unsigned_abs() })
    }

    /// `kronecker(D, n)`.
    pub fn eval(&self, n: u64) -> i32 {
        kronecker(self.discriminant, n).expect("discriminant and n are nonzero")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedForm {
    pub character: TwistCharacter,
    /// `p -> kronecker(D, p) a_p` for stored primes `p` coprime to `D N`.
    pub prime_coeffs: BTreeMap<u64, i64>,
    /// `N d^2`; the twisted level divides it.
    pub level_bound: u64,
}

pub fn twist_newform(f: &Newform, d: i64) -> Result<TwistedForm> {
    let chi = TwistCharacter::new(d)?;
    let bad = chi.conductor as i64 * f.level as i64;
    let prime_coeffs = f
        .prime_coeffs()
        .filter(|&(p, _)| gcd(p as i64, bad) == 1)
        .map(|(p, a)| (p, chi.eval(p) as i64 * a))
        .collect();
    let level_bound = (d.unsigned_abs())
        .checked_mul(d.unsigned_abs())
        .and_then(|dd| dd.checked_mul(f.level))
        .ok_or(Error::Overflow("twisted level bound"))?;
    Ok(TwistedForm { character: chi, prime_coeffs, level_bound })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwistFailure {
    pub p: u64,
    pub expected: u64,
    pub observed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistReport {
    pub d: i64,
    pub primes_checked: Vec<u64>,
    pub failures: Vec<TwistFailure>,
    pub passed: bool,
    pub version: String,
}

impl TwistReport {
    fn assemble(d: i64, mut rows: Vec<(u64, Option<TwistFailure>)>) -> Self {
        rows.sort();
        let primes_checked = rows.iter().map(|r| r.0).collect();
        let failures: Vec<TwistFailure> = rows.into_iter().filter_map(|r| r.1).collect();
        TwistReport { d, primes_checked, passed: failures.is_empty(), failures, version: TWIST_FORMAT_VERSION.into() }
    }
}

/// Primes `p <= bound` with `p` coprime to `10 d`.
pub fn twist_check_primes(d: i64, bound: u64) -> Vec<Prime> {
    primes_between(2, bound).into_iter().filter(|p| gcd(p.get() as i64, 10 * d) == 1).collect()
}

/// Checks `kronecker(D, p) a_p(f) = 1 - #X_d(F_p) (mod p)` using fresh counts.
pub fn verify_twist(d: i64, bound: u64, f: &Newform) -> Result<TwistReport> {
    verify_twist_with(d, bound, f, &|d, p| count_projective(&schoen_form(d)?, p))
}

/// As [`verify_twist`] with counts of `X_d` over `F_p` supplied by `count`.
/// `d` is first reduced to its squarefree part.
pub fn verify_twist_with(
    d: i64,
    bound: u64,
    f: &Newform,
    count: &(dyn Fn(i64, Prime) -> Result<u64> + Sync),
) -> Result<TwistReport> {
    if bound < 7 {
        return Err(Error::InvalidArgument("prime bound must be at least 7".into()));
    }
    let d = squarefree_part(d)?;
    let chi = TwistCharacter::new(d)?;
    let rows = twist_check_primes(d, bound)
        .into_par_iter()
        .map(|p| {
            let a = f.coeff(p.get()).ok_or_else(|| Error::InvalidArgument(format!("form {} lacks a_{p}", f.label)))?;
            let expected = Residue::new(chi.eval(p.get()) as i128 * a as i128, p);
            let observed = trace_congruence_from_count(p, count(d, p)?);
            let failure = (expected != observed).then_some(TwistFailure {
                p: p.get(),
                expected: expected.value(),
                observed: observed.value(),
            });
            Ok((p.get(), failure))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwistReport::assemble(d, rows))
}

/// Untwisted congruences `a_p(f) = 1 - #X_1(F_p) (mod p)` at the given primes,
/// read through the matcher's trace source.
pub fn base_congruence_report(f: &Newform, primes: &[u64]) -> Result<TwistReport> {
    let mut system = CompatibleSystemData::schoen_congruence(1)?;
    system.min_prime = 2;
    let mut rows = Vec::with_capacity(primes.len());
    for &p in primes {
        let p = Prime::new(p)?;
        let data = (system.trace_source)(p)?;
        let TraceValue::Congruence(observed) = data.a_p else {
            return Err(Error::InvalidArgument("expected congruence data".into()));
        };
        let a = f.coeff(p.get()).ok_or_else(|| Error::InvalidArgument(format!("form {} lacks a_{p}", f.label)))?;
        let expected = Residue::new(a as i128, p);
        let failure = (expected != observed).then_some(TwistFailure {
            p: p.get(),
            expected: expected.value(),
            observed: observed.value(),
        });
        rows.push((p.get(), failure));
    }
    Ok(TwistReport::assemble(1, rows))
}
