//! Degeneracy maps to lower levels and the new subspace.
//!
//! For `M | N` and `t | N/M`, the map `x -> delta_t x` with `delta_t = [t, 0; 0, 1]`
//! sends Gamma0(N) symbols to Gamma0(M) symbols. Images are general modular
//! symbols `R {alpha, beta}`, rewritten as Manin symbols through the
//! continued fraction convergents of the endpoints.

use super::boundary::{cuspidal_subspace, lift_to_sl2z};
use super::space::{apply_to_monomial, ModularSymbols};
use crate::error::{Error, Result};
use crate::ffarith::{divisors, prime_factors};
use crate::linalg::{QMatrix, Subspace, Q};

/// Homogeneous polynomial of degree `j`, coefficient of `X^m Y^(j-m)` at `m`.
pub type HomPoly = Vec<i128>;

/// `R(aX + bY, cX + dY)` for `R` of degree `j`.
fn substitute(poly: &[i128], m: [i64; 4]) -> Result<HomPoly> {
    let j = poly.len() as u32 - 1;
    let mut out = vec![0i128; poly.len()];
    for (deg, &c) in poly.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (o, t) in out.iter_mut().zip(apply_to_monomial(deg as u32, j, m)?) {
            *o = t
                .checked_mul(c)
                .and_then(|v| o.checked_add(v))
                .ok_or(Error::Overflow("polynomial substitution"))?;
        }
    }
    Ok(out)
}

/// SL2(Z) matrices `g_j` with `{0, u/v} = sum_j g_j {0, oo}` (one per convergent).
fn convergent_matrices(u: i64, v: i64) -> Vec<[i64; 4]> {
    // p_{-2}/q_{-2} = 0/1, p_{-1}/q_{-1} = 1/0
    let (mut p_prev, mut q_prev) = (0i64, 1i64);
    let (mut p_cur, mut q_cur) = (1i64, 0i64);
    // g_{-1} = identity
    let mut out = vec![[1, 0, 0, 1]];
    if v == 0 {
        return out;
    }
    let (mut num, mut den) = (u, v);
    let mut j: i64 = 0;
    loop {
        let a = num.div_euclid(den);
        let r = num.rem_euclid(den);
        let p_next = a * p_cur + p_prev;
        let q_next = a * q_cur + q_prev;
        (p_prev, q_prev, p_cur, q_cur) = (p_cur, q_cur, p_next, q_next);
        let sign = if (j - 1).rem_euclid(2) == 0 { 1 } else { -1 };
        out.push([sign * p_cur, p_prev, sign * q_cur, q_prev]);
        if r == 0 {
            break;
        }
        (num, den) = (den, r);
        j += 1;
    }
    out
}

impl ModularSymbols {
    /// Basis coordinates of `R {0, u/v}`.
    pub fn zero_to_cusp(&self, poly: &[i128], u: i64, v: i64) -> Result<Vec<Q>> {
        let mut terms = Vec::new();
        for g in convergent_matrices(u, v) {
            // [g^{-1} R, g] with g^{-1} R = R(aX + bY, cX + dY)
            let local = substitute(poly, g)?;
            let r = self.p1().len();
            let Some(pidx) = self.p1().index_of(g[2], g[3]) else {
                return Err(Error::InvalidArgument("convergent bottom row not in P^1".into()));
            };
            for (m, c) in local.into_iter().enumerate() {
                if c != 0 {
                    terms.push((m * r + pidx, c));
                }
            }
        }
        Ok(self.combination_to_basis(terms))
    }

    /// Basis coordinates of the modular symbol `R {alpha, beta}`.
    pub fn modular_symbol(&self, poly: &[i128], alpha: (i64, i64), beta: (i64, i64)) -> Result<Vec<Q>> {
        let b = self.zero_to_cusp(poly, beta.0, beta.1)?;
        let a = self.zero_to_cusp(poly, alpha.0, alpha.1)?;
        Ok(b.into_iter().zip(a).map(|(x, y)| x - y).collect())
    }

    /// Matrix of `x -> delta_t x` into `target` (level `M`, `t M | N`).
    pub fn degeneracy_matrix(&self, target: &ModularSymbols, t: u64) -> Result<QMatrix> {
        let (n, m) = (self.level(), target.level());
        if target.weight() != self.weight() || n % m != 0 || (n / m) % t != 0 {
            return Err(Error::InvalidArgument(format!("no degeneracy map from level {n} to {m} with t = {t}")));
        }
        let j = self.weight() - 2;
        let t = t as i64;
        let mut rows = Vec::with_capacity(self.dim());
        for b in 0..self.dim() {
            let sym = self.basis_symbol(b);
            let [a, bb, c, d] = lift_to_sl2z(sym.cd.0, sym.cd.1, n);
            // delta_t g = [t a, t b; c, d]; its action on P gives R(X, Y) = P(dX - t b Y, -cX + t a Y).
            let r = apply_to_monomial(sym.i, j, [d, -t * bb, -c, t * a])?;
            rows.push(target.modular_symbol(&r, (t * bb, d), (t * a, c))?);
        }
        Ok(QMatrix::from_rows(target.dim(), rows))
    }
}

/// Intersection of the kernels of all degeneracy maps to levels `N/p`,
/// `t in {1, p}`, inside the cuspidal subspace.
pub fn new_subspace(space: &ModularSymbols) -> Result<Subspace> {
    new_subspace_of(space, &cuspidal_subspace(space))
}

pub fn new_subspace_of(space: &ModularSymbols, cuspidal: &Subspace) -> Result<Subspace> {
    let n = space.level();
    let mut maps: Option<QMatrix> = None;
    for (p, _) in prime_factors(n) {
        let lower = ModularSymbols::new(n / p, space.weight())?;
        if lower.dim() == 0 {
            continue;
        }
        for t in [1, p] {
            let d = space.degeneracy_matrix(&lower, t)?;
            maps = Some(match maps {
                None => d,
                Some(acc) => acc.augment(&d),
            });
        }
    }
    Ok(match maps {
        None => cuspidal.clone(),
        Some(m) if m.is_zero() => cuspidal.clone(),
        Some(m) => cuspidal.kernel_of(&m),
    })
}

/// Divisors `t` of `N/M` usable for degeneracy maps.
pub fn degeneracy_parameters(n: u64, m: u64) -> Vec<u64> {
    divisors(n / m)
}
