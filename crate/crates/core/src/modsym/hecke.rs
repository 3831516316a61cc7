//! Hecke operators on Manin symbols.
//!
//! `T_n` is computed for prime `n` from Merel's set
//! `X_n = { [a, b; c, d] : ad - bc = n, a > b >= 0, d > c >= 0 }` via
//! `T_n x = sum_{h in X_n} x h`, and for composite `n` from the prime
//! operators by multiplicativity and `T_{p^r} = T_p T_{p^(r-1)} - p^(k-1) T_{p^(r-2)}`
//! (`T_{p^r} = T_p^r` when `p | N`).

use std::collections::HashMap;

use num_bigint::BigInt;

use super::space::{Mat2, ModularSymbols};
use crate::error::{Error, Result};
use crate::ffarith::{is_prime, prime_factors};
use crate::linalg::{QMatrix, Subspace, Q};

/// Merel's Heilbronn matrices of determinant `n`, ordered by `(a, d, c, b)`
/// ascending so operator matrices are reproducible.
pub fn heilbronn_merel(n: u64) -> Vec<Mat2> {
    let n = n as i64;
    let mut out = Vec::new();
    for a in 1..=n {
        for d in 1..=(n + 1 - a) {
            let bc = a * d - n;
            if bc < 0 {
                continue;
            }
            if bc == 0 {
                // b = 0 with any c in [0, d), or c = 0 with b in [1, a)
                for c in 0..d {
                    out.push([a, 0, c, d]);
                }
                for b in 1..a {
                    out.push([a, b, 0, d]);
                }
                continue;
            }
            for c in 1..d {
                if bc % c == 0 {
                    let b = bc / c;
                    if b < a {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out.sort_unstable_by_key(|m| (m[0], m[3], m[2], m[1]));
    out
}

/// Named operator matrix acting on row vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearOperator {
    pub label: String,
    pub matrix: QMatrix,
}

impl ModularSymbols {
    /// `sum_{h in hs} x h` for the basis symbols, as a matrix on the ambient space.
    pub fn heilbronn_matrix(&self, hs: &[Mat2]) -> Result<QMatrix> {
        let mut rows = Vec::with_capacity(self.dim());
        for b in 0..self.dim() {
            let sym = self.basis_symbol(b);
            let mut acc: HashMap<usize, i128> = HashMap::new();
            for &h in hs {
                for (y, c) in self.apply_raw(sym.i, sym.cd.0, sym.cd.1, h)? {
                    let slot = acc.entry(y).or_insert(0);
                    *slot = slot.checked_add(c).ok_or(Error::Overflow("Hecke accumulation"))?;
                }
            }
            rows.push(self.combination_to_basis(acc));
        }
        Ok(QMatrix::from_rows(self.dim(), rows))
    }

    /// `T_p` (or `U_p` for `p | N`) on the ambient space.
    pub fn hecke_prime(&self, p: u64) -> Result<QMatrix> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        self.heilbronn_matrix(&heilbronn_merel(p))
    }

    /// `T_n` on the ambient space, built from prime operators.
    pub fn hecke_matrix(&self, n: u64) -> Result<QMatrix> {
        if n == 0 {
            return Err(Error::InvalidArgument("T_0 is undefined".into()));
        }
        let mut acc = QMatrix::identity(self.dim());
        for (p, e) in prime_factors(n) {
            let tp = self.hecke_prime(p)?;
            let tpe = if self.level() % p == 0 {
                tp.pow(e)
            } else {
                let scale = Q::from_integer(BigInt::from(p).pow(self.weight() - 1));
                let mut prev = QMatrix::identity(self.dim());
                let mut cur = tp.clone();
                for _ in 1..e {
                    let next = &(&tp * &cur) - &prev.scale(&scale);
                    prev = cur;
                    cur = next;
                }
                cur
            };
            acc = &acc * &tpe;
        }
        Ok(acc)
    }

    /// `T_n` restricted to a Hecke-stable subspace, in the subspace's coordinates.
    pub fn hecke(&self, subspace: &Subspace, n: u64) -> Result<LinearOperator> {
        let full = self.hecke_matrix(n)?;
        let matrix = subspace
            .restrict(&full)
            .ok_or_else(|| Error::InvalidArgument(format!("subspace is not stable under T_{n}")))?;
        Ok(LinearOperator { label: format!("T_{n}"), matrix })
    }
}
