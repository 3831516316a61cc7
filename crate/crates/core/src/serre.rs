//! Finite matching of a compatible system of Frobenius data against rational
//! newforms in a level/weight box.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{trace_congruence, FrobeniusData, TraceMode, TraceValue};
use crate::error::{Error, Result};
use crate::ffarith::{divisors, is_prime, primes_between, Prime};
use crate::modsym::{dim_cusp_forms, rational_newforms, Newform};

pub const MATCH_FORMAT_VERSION: &str = "v1";

/// Divisor levels whose cusp space is larger than this are skipped.
pub const DEFAULT_DIM_CEILING: u64 = 200;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadPrimeSet(BTreeSet<u64>);

impl BadPrimeSet {
    pub fn new<I: IntoIterator<Item = u64>>(primes: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for p in primes {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            set.insert(p);
        }
        Ok(BadPrimeSet(set))
    }

    pub fn contains(&self, p: u64) -> bool {
        self.0.contains(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerreBounds {
    #[serde(rename = "N0")]
    pub n0: u64,
    #[serde(rename = "k0")]
    pub k0: u32,
}

fn level_exponent(p: u64) -> u32 {
    match p {
        2 => 8,
        3 => 5,
        _ => 2,
    }
}

/// `prod_{p in S} p^e(p)` with `e(2) = 8`, `e(3) = 5` and `e(p) = 2` otherwise.
pub fn level_bound(s: &BadPrimeSet) -> Result<u64> {
    s.iter().try_fold(1u64, |acc, p| {
        p.checked_pow(level_exponent(p)).and_then(|f| acc.checked_mul(f)).ok_or(Error::Overflow("level bound"))
    })
}

/// Search box for a rigid Calabi-Yau threefold: weight 4.
pub fn rigid_bounds(s: &BadPrimeSet) -> Result<SerreBounds> {
    Ok(SerreBounds { n0: level_bound(s)?, k0: 4 })
}

pub type TraceSource<'a> = Box<dyn Fn(Prime) -> Result<FrobeniusData> + Send + Sync + 'a>;

/// Frobenius data of a compatible system, unramified outside `bad`.
pub struct CompatibleSystemData<'a> {
    pub bad: BadPrimeSet,
    pub trace_source: TraceSource<'a>,
    /// `D_p = p^det_exponent`.
    pub det_exponent: u32,
    /// Smallest prime at which `trace_source` is defined.
    pub min_prime: u64,
}

impl<'a> CompatibleSystemData<'a> {
    /// Good primes in `[min_prime, bound]`.
    pub fn good_primes(&self, bound: u64) -> Vec<Prime> {
        primes_between(self.min_prime, bound).into_iter().filter(|p| !self.bad.contains(p.get())).collect()
    }

    /// Congruence data `1 - #X_d(F_p) mod p` of the twisted Schoen quintic.
    /// Trace data starts at 7, the first prime past the excluded 2 and 5.
    pub fn schoen_congruence(d: i64) -> Result<Self> {
        let bad = BadPrimeSet::new(crate::ffarith::prime_factors(d.unsigned_abs()).into_iter().map(|(p, _)| p).chain([5]))?;
        Ok(CompatibleSystemData {
            bad,
            trace_source: Box::new(move |p| Ok(FrobeniusData::congruence(p, trace_congruence(d, p)?, 3))),
            det_exponent: 3,
            min_prime: 7,
        })
    }

    /// Exact data read off a newform's own coefficients.
    pub fn from_newform(f: &'a Newform) -> Result<Self> {
        let bad = BadPrimeSet::new(crate::ffarith::prime_factors(f.level).into_iter().map(|(p, _)| p))?;
        let k = f.weight;
        Ok(CompatibleSystemData {
            bad,
            trace_source: Box::new(move |p| {
                let a = f.coeff(p.get()).ok_or_else(|| Error::InvalidArgument(format!("form {} has no a_{p}", f.label)))?;
                Ok(FrobeniusData::exact(p, a, k - 1))
            }),
            det_exponent: k - 1,
            min_prime: 2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchEntry {
    pub level: u64,
    pub weight: u32,
    pub label: String,
    pub mode: TraceMode,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedSpace {
    pub level: u64,
    pub weight: u32,
    pub dim: u64,
}

/// Survivors of the comparison. The absolute irreducibility of the residual
/// representations is a caller assertion and is not checked here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub search_box: SerreBounds,
    pub primes_checked: Vec<u64>,
    pub matches: Vec<MatchEntry>,
    pub unique: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedSpace>,
    pub version: String,
    /// The surviving forms, in the order of `matches`.
    #[serde(skip)]
    pub forms: Vec<Newform>,
    /// Number of rational newforms compared.
    #[serde(skip)]
    pub candidates: usize,
}

impl MatchResult {
    /// No candidate form existed anywhere in the box.
    pub fn empty_search_box(&self) -> bool {
        self.candidates == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatchOptions {
    pub dim_ceiling: u64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { dim_ceiling: DEFAULT_DIM_CEILING }
    }
}

/// Produces the rational newforms at `(N, k)` with coefficients up to the bound.
pub type NewformSource<'a> = dyn Fn(u64, u32, u64) -> Result<Vec<Newform>> + Sync + 'a;

fn compute_newforms(level: u64, weight: u32, bound: u64) -> Result<Vec<Newform>> {
    Ok(rational_newforms(level, weight, bound.max(2))?.forms)
}

pub fn match_forms(system: &CompatibleSystemData, bounds: SerreBounds, prime_bound: u64) -> Result<MatchResult> {
    match_forms_with(system, bounds, prime_bound, MatchOptions::default(), &compute_newforms)
}

pub fn match_forms_with(
    system: &CompatibleSystemData,
    bounds: SerreBounds,
    prime_bound: u64,
    opts: MatchOptions,
    newforms: &NewformSource,
) -> Result<MatchResult> {
    if prime_bound < 7 {
        return Err(Error::InvalidArgument("prime bound must be at least 7".into()));
    }
    let primes = system.good_primes(prime_bound);
    let data: Vec<FrobeniusData> = primes.iter().map(|&p| (system.trace_source)(p)).collect::<Result<_>>()?;
    for f in &data {
        if f.d_p != (f.p.get() as u128).pow(system.det_exponent) {
            return Err(Error::InvalidArgument(format!("D_{} is not p^{}", f.p, system.det_exponent)));
        }
    }

    let mut boxes = Vec::new();
    let mut skipped = Vec::new();
    for n in divisors(bounds.n0) {
        for k in (2..=bounds.k0).step_by(2) {
            // weight elimination: D_p must equal p^(k-1)
            if data.iter().any(|f| f.d_p != (f.p.get() as u128).pow(k - 1)) {
                continue;
            }
            let dim = dim_cusp_forms(n, k);
            if dim > opts.dim_ceiling {
                skipped.push(SkippedSpace { level: n, weight: k, dim });
            } else if dim > 0 {
                boxes.push((n, k));
            }
        }
    }
    let candidates: Vec<Vec<Newform>> = boxes.par_iter().map(|&(n, k)| newforms(n, k, prime_bound)).collect::<Result<_>>()?;

    let mut survivors: Vec<(MatchEntry, Newform)> = Vec::new();
    let candidate_count = candidates.iter().map(Vec::len).sum();
    for f in candidates.into_iter().flatten() {
        let mut mode = TraceMode::Exact;
        let mut ok = true;
        for fd in &data {
            let a = f
                .coeff(fd.p.get())
                .ok_or_else(|| Error::InvalidArgument(format!("form {} lacks a_{}", f.label, fd.p)))?;
            ok = match fd.a_p {
                TraceValue::Exact(x) => x == a,
                TraceValue::Congruence(r) => {
                    mode = TraceMode::Congruence;
                    r.matches(a as i128)
                }
            };
            if !ok {
                break;
            }
        }
        if ok {
            survivors.push((MatchEntry { level: f.level, weight: f.weight, label: f.label.clone(), mode }, f));
        }
    }
    survivors.sort_by(|a, b| (a.0.level, a.0.weight, &a.0.label).cmp(&(b.0.level, b.0.weight, &b.0.label)));
    let (matches, forms): (Vec<_>, Vec<_>) = survivors.into_iter().unzip();
    Ok(MatchResult {
        search_box: bounds,
        primes_checked: primes.iter().map(|p| p.get()).collect(),
        unique: matches.len() == 1,
        matches,
        skipped,
        version: MATCH_FORMAT_VERSION.into(),
        forms,
        candidates: candidate_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ps: &[u64]) -> BadPrimeSet {
        BadPrimeSet::new(ps.iter().copied()).unwrap()
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(level_bound(&set(&[])).unwrap(), 1);
        assert_eq!(level_bound(&set(&[5])).unwrap(), 25);
        assert_eq!(level_bound(&set(&[2, 3, 7])).unwrap(), 3048192);
        assert_eq!(rigid_bounds(&set(&[5])).unwrap(), SerreBounds { n0: 25, k0: 4 });
        assert_eq!(rigid_bounds(&set(&[])).unwrap(), SerreBounds { n0: 1, k0: 4 });
        assert_eq!(rigid_bounds(&set(&[2])).unwrap(), SerreBounds { n0: 256, k0: 4 });
        assert!(BadPrimeSet::new([4]).is_err());
    }

    proptest! {
        #[test]
        fn level_bound_is_multiplicative(mask in 0u32..(1 << 8)) {
            let ps = [2u64, 3, 5, 7, 11, 13, 17, 19];
            let (a, b): (Vec<_>, Vec<_>) = ps.iter().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
            let a: Vec<u64> = a.into_iter().map(|(_, &p)| p).collect();
            let b: Vec<u64> = b.into_iter().map(|(_, &p)| p).take(3).collect();
            let a: Vec<u64> = a.into_iter().take(3).collect();
            let all: Vec<u64> = a.iter().chain(&b).copied().collect();
            prop_assert_eq!(
                level_bound(&set(&all)).unwrap(),
                level_bound(&set(&a)).unwrap() * level_bound(&set(&b)).unwrap()
            );
        }
    }

    #[test]
    fn self_match_level_11() {
        let f = rational_newforms(11, 2, 60).unwrap().forms.remove(0);
        let sys = CompatibleSystemData::from_newform(&f).unwrap();
        let bounds = rigid_bounds(&sys.bad).unwrap();
        let r = match_forms(&sys, bounds, 60).unwrap();
        assert!(r.unique);
        assert_eq!(r.matches[0].label, f.label);
        assert_eq!(r.matches[0].mode, TraceMode::Exact);
        assert!(r.primes_checked.iter().all(|&p| p != 11 && p <= 60));
    }

    #[test]
    fn self_match_every_level_25_form() {
        let forms = rational_newforms(25, 4, 50).unwrap().forms;
        assert!(!forms.is_empty());
        for f in &forms {
            let sys = CompatibleSystemData::from_newform(f).unwrap();
            let r = match_forms(&sys, SerreBounds { n0: 25, k0: 4 }, 50).unwrap();
            assert!(r.unique, "{}", f.label);
            assert_eq!(r.forms[0], *f);
        }
    }

    #[test]
    fn perturbed_data_matches_nothing() {
        let forms = rational_newforms(25, 4, 30).unwrap().forms;
        let bad = forms.iter().map(|f| f.coeff(7).unwrap()).max().unwrap() + 1;
        let f = &forms[0];
        let sys = CompatibleSystemData {
            bad: set(&[5]),
            trace_source: Box::new(move |p| {
                let a = if p.get() == 7 { bad } else { f.coeff(p.get()).unwrap() };
                Ok(FrobeniusData::exact(p, a, 3))
            }),
            det_exponent: 3,
            min_prime: 2,
        };
        let r = match_forms(&sys, SerreBounds { n0: 25, k0: 4 }, 30).unwrap();
        assert!(r.matches.is_empty() && !r.unique);
    }

    #[test]
    fn survivors_shrink_with_prime_bound() {
        // congruence data mod p is weak at small p, so several forms can
        // survive early; larger bounds keep a subset
        let forms = rational_newforms(25, 4, 60).unwrap().forms;
        let f = forms[0].clone();
        let make = |f: Newform| CompatibleSystemData {
            bad: set(&[5]),
            trace_source: Box::new(move |p| {
                let r = crate::ffarith::Residue::new(f.coeff(p.get()).unwrap() as i128, p);
                Ok(FrobeniusData::congruence(p, r, 3))
            }),
            det_exponent: 3,
            min_prime: 2,
        };
        let mut prev: Option<Vec<MatchEntry>> = None;
        for b in [7u64, 11, 23, 60] {
            let r = match_forms(&make(f.clone()), SerreBounds { n0: 25, k0: 4 }, b).unwrap();
            if let Some(p) = &prev {
                assert!(r.matches.iter().all(|m| p.contains(m)), "B = {b}");
            }
            prev = Some(r.matches);
        }
    }

    #[test]
    fn weight_mismatch_eliminates_everything() {
        let forms = rational_newforms(11, 2, 30).unwrap().forms;
        let f = &forms[0];
        // weight-2 coefficients announced with a weight-4 determinant
        let sys = CompatibleSystemData {
            bad: set(&[11]),
            trace_source: Box::new(move |p| Ok(FrobeniusData::exact(p, f.coeff(p.get()).unwrap(), 3))),
            det_exponent: 3,
            min_prime: 2,
        };
        let r = match_forms(&sys, SerreBounds { n0: 121, k0: 2 }, 30).unwrap();
        assert!(r.matches.is_empty());
    }

    #[test]
    fn json_shape() {
        let r = MatchResult {
            search_box: SerreBounds { n0: 25, k0: 4 },
            primes_checked: vec![7, 11],
            matches: vec![MatchEntry { level: 25, weight: 4, label: "25-4-1".into(), mode: TraceMode::Congruence }],
            unique: true,
            skipped: vec![],
            version: "v1".into(),
            forms: vec![],
            candidates: 3,
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"search_box":{"N0":25,"k0":4},"primes_checked":[7,11],"matches":[{"level":25,"weight":4,"label":"25-4-1","mode":"congruence"}],"unique":true,"version":"v1"}"#
        );
    }
}
