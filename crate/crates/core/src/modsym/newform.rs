//! Rational newforms: splitting the new subspace into Hecke eigenlines.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::degeneracy::new_subspace;
use super::space::ModularSymbols;
use crate::error::{Error, Result};
use crate::ffarith::{is_prime, prime_factors};
use crate::linalg::{q, QMatrix, Subspace, Q};

pub const NEWFORM_FORMAT_VERSION: &str = "v1";

/// Primes `q` tried before a block that refuses to split is reported.
pub const MAX_SPLITTING_PRIMES: usize = 25;

/// Normalized eigenform with trivial character and rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Newform {
    pub level: u64,
    pub weight: u32,
    pub label: String,
    pub coeffs: BTreeMap<u64, i64>,
    pub version: String,
}

impl Newform {
    pub fn coeff(&self, n: u64) -> Option<i64> {
        self.coeffs.get(&n).copied()
    }

    pub fn coeff_bound(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    /// `a_p` for the stored primes, ascending.
    pub fn prime_coeffs(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.coeffs.iter().filter(|(n, _)| is_prime(**n)).map(|(&n, &a)| (n, a))
    }
}

/// `floor(2 p^((k-1)/2))`, the largest admissible `|a_p|`.
pub fn weil_bound(p: u64, weight: u32) -> i64 {
    // floor(sqrt(4 p^(k-1)))
    let v = 4u128 * (p as u128).pow(weight - 1);
    v.sqrt() as i64
}

/// Output of [`rational_newforms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewformDecomposition {
    pub level: u64,
    pub weight: u32,
    pub new_dim: usize,
    pub forms: Vec<Newform>,
    /// Dimensions of Hecke-stable pieces with no rational eigenvalue.
    pub non_rational_dims: Vec<usize>,
}

/// Fill in `a_n` for `n <= bound` from the prime coefficients.
pub fn extend_coefficients(level: u64, weight: u32, primes: &BTreeMap<u64, i64>, bound: u64) -> Result<BTreeMap<u64, i64>> {
    let mut out = BTreeMap::new();
    out.insert(1, 1);
    for n in 2..=bound {
        let mut a: i64 = 1;
        for (p, e) in prime_factors(n) {
            let ap = *primes.get(&p).ok_or_else(|| Error::InvalidArgument(format!("missing a_{p}")))?;
            let ape = if level % p == 0 || e == 1 {
                ap.checked_pow(e).ok_or(Error::Overflow("a_n"))?
            } else {
                let pk = (p as i64).checked_pow(weight - 1).ok_or(Error::Overflow("p^(k-1)"))?;
                let (mut prev, mut cur) = (1i64, ap);
                for _ in 1..e {
                    let next = ap
                        .checked_mul(cur)
                        .and_then(|x| pk.checked_mul(prev).and_then(|y| x.checked_sub(y)))
                        .ok_or(Error::Overflow("a_n"))?;
                    prev = cur;
                    cur = next;
                }
                cur
            };
            a = a.checked_mul(ape).ok_or(Error::Overflow("a_n"))?;
        }
        out.insert(n, a);
    }
    Ok(out)
}

/// Eigenvalue of `op` on the row vector `v`, if `v` is an eigenvector.
fn eigenvalue(v: &[Q], op: &QMatrix) -> Option<Q> {
    let img = op.apply_row(v);
    let j = v.iter().position(|x| !x.is_zero())?;
    let lambda = &img[j] / &v[j];
    img.iter().zip(v).all(|(a, b)| *a == &lambda * b).then_some(lambda)
}

fn to_i64(x: &Q) -> Result<i64> {
    if !x.is_integer() {
        return Err(Error::InvalidArgument(format!("non-integral eigenvalue {x}")));
    }
    x.to_integer().to_i64().ok_or(Error::Overflow("eigenvalue"))
}

/// Rational newforms in `S_k(Gamma0(N))^new` with `a_n` for `n <= coeff_bound`.
///
/// The new subspace is split by `T_q` for primes `q` not dividing `N`, in
/// increasing order. Forms are labelled `N-k-i` with `i` counting from 1 in
/// the order of their eigenvalue vectors at those splitting primes, so labels
/// do not depend on `coeff_bound`.
pub fn rational_newforms(level: u64, weight: u32, coeff_bound: u64) -> Result<NewformDecomposition> {
    if coeff_bound < 2 {
        return Err(Error::InvalidArgument("coefficient bound must be at least 2".into()));
    }
    let space = ModularSymbols::new(level, weight)?;
    let new = new_subspace(&space)?;
    let n = new.dim();
    let mut done: Vec<Vec<Q>> = Vec::new();
    let mut non_rational = Vec::new();
    // blocks in coordinates of `new`
    let mut pending = if n == 0 { vec![] } else { vec![Subspace::whole(n)] };
    let mut split_primes = Vec::new();
    let mut qp = 1u64;
    while !pending.is_empty() {
        pending.retain(|b| {
            if b.dim() == 1 {
                done.push(b.basis().row(0).to_vec());
                false
            } else {
                true
            }
        });
        if pending.is_empty() {
            break;
        }
        if split_primes.len() == MAX_SPLITTING_PRIMES {
            return Err(Error::Unsplit { dim: pending.iter().map(Subspace::dim).sum(), primes: split_primes.len() });
        }
        qp = (qp + 1..).find(|&x| is_prime(x) && level % x != 0).expect("primes are infinite");
        split_primes.push(qp);
        let tq = space.hecke(&new, qp)?.matrix;
        let bound = weil_bound(qp, weight);
        let mut next = Vec::new();
        for block in pending {
            let r = block.restrict(&tq).ok_or_else(|| Error::InvalidArgument(format!("block not stable under T_{qp}")))?;
            let roots = r.charpoly().integer_roots(bound);
            let mut rational_dim = 0;
            for (lambda, _) in roots {
                let shifted = &r - &QMatrix::identity(r.nrows()).scale(&q(lambda));
                let eig = Subspace::whole(r.nrows()).kernel_of(&shifted);
                rational_dim += eig.dim();
                next.push(block.lift(eig.basis()));
            }
            if rational_dim < block.dim() {
                non_rational.push(block.dim() - rational_dim);
            }
        }
        pending = next;
    }

    let top = coeff_bound.max(split_primes.last().copied().unwrap_or(0));
    let primes: Vec<u64> = (2..=top).filter(|&p| is_prime(p)).collect();
    let ops: Vec<QMatrix> = primes
        .par_iter()
        .map(|&p| space.hecke(&new, p).map(|op| op.matrix))
        .collect::<Result<_>>()?;
    let mut forms = Vec::with_capacity(done.len());
    for v in &done {
        let mut ap = BTreeMap::new();
        for (&p, op) in primes.iter().zip(&ops) {
            let lambda = eigenvalue(v, op).ok_or_else(|| Error::InvalidArgument(format!("T_{p} does not preserve an eigenline")))?;
            ap.insert(p, to_i64(&lambda)?);
        }
        // ordering key: eigenvalues at the splitting primes, which depend only on (N, k)
        let key: Vec<i64> = split_primes.iter().map(|q| ap[q]).collect();
        let prime_coeffs = ap.into_iter().filter(|&(p, _)| p <= coeff_bound).collect();
        forms.push((key, extend_coefficients(level, weight, &prime_coeffs, coeff_bound)?));
    }
    forms.sort();
    let forms = forms
        .into_iter()
        .enumerate()
        .map(|(i, (_, coeffs))| Newform {
            level,
            weight,
            label: format!("{level}-{weight}-{}", i + 1),
            coeffs,
            version: NEWFORM_FORMAT_VERSION.to_string(),
        })
        .collect();
    non_rational.sort_unstable();
    Ok(NewformDecomposition { level, weight, new_dim: n, forms, non_rational_dims: non_rational })
}
