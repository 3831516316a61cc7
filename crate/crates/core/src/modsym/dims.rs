//! Dimension formulas for `S_k(Gamma0(N))`, independent of modular symbols.

use crate::ffarith::{divisors, euler_phi, gcd, kronecker, prime_factors};

/// Index of Gamma0(N) in SL2(Z).
pub fn index(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, &(p, _)| acc / p * (p + 1))
}

/// Elliptic points of order 2.
pub fn nu2(n: u64) -> u64 {
    if n % 4 == 0 {
        return 0;
    }
    prime_factors(n)
        .iter()
        .map(|&(p, _)| if p == 2 { 1 } else { (1 + kronecker(-1, p).expect("nonzero")) as u64 })
        .product()
}

/// Elliptic points of order 3.
pub fn nu3(n: u64) -> u64 {
    if n % 9 == 0 {
        return 0;
    }
    prime_factors(n)
        .iter()
        .map(|&(p, _)| if p == 3 { 1 } else { (1 + kronecker(-3, p).expect("nonzero")) as u64 })
        .product()
}

pub fn num_cusps(n: u64) -> u64 {
    divisors(n).into_iter().map(|d| euler_phi(gcd(d as i64, (n / d) as i64) as u64)).sum()
}

/// Genus of X0(N).
pub fn genus(n: u64) -> u64 {
    // 12 g = 12 + mu - 3 nu2 - 4 nu3 - 6 nu_oo
    let twelve_g = 12 + index(n) as i64 - 3 * nu2(n) as i64 - 4 * nu3(n) as i64 - 6 * num_cusps(n) as i64;
    debug_assert!(twelve_g >= 0 && twelve_g % 12 == 0);
    (twelve_g / 12) as u64
}

/// `dim S_k(Gamma0(N))` for even `k >= 2`.
pub fn dim_cusp_forms(n: u64, k: u32) -> u64 {
    assert!(k >= 2 && k % 2 == 0, "weight must be even");
    let g = genus(n) as i64;
    if k == 2 {
        return g as u64;
    }
    let k = k as i64;
    let d = (k - 1) * (g - 1) + (k / 2 - 1) * num_cusps(n) as i64 + nu2(n) as i64 * (k / 4) + nu3(n) as i64 * (k / 3);
    d.max(0) as u64
}

/// Multiplicative weight with `beta(p) = -2`, `beta(p^2) = 1`, `beta(p^e) = 0` for `e > 2`.
fn beta(n: u64) -> i64 {
    prime_factors(n)
        .iter()
        .map(|&(_, e)| match e {
            1 => -2,
            2 => 1,
            _ => 0,
        })
        .product()
}

/// `dim S_k^new(Gamma0(N)) = sum_{M | N} beta(N / M) dim S_k(Gamma0(M))`.
pub fn dim_new_cusp_forms(n: u64, k: u32) -> u64 {
    let s: i64 = divisors(n).into_iter().map(|m| beta(n / m) * dim_cusp_forms(m, k) as i64).sum();
    s as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(dim_cusp_forms(1, 12), 1);
        assert_eq!(dim_cusp_forms(11, 2), 1);
        assert_eq!(dim_cusp_forms(1, 4), 0);
        assert_eq!(dim_cusp_forms(25, 4), 5);
        assert_eq!(dim_cusp_forms(5, 4), 1);
        assert_eq!(dim_new_cusp_forms(25, 4), 3);
        assert_eq!(dim_new_cusp_forms(11, 2), 1);
    }

    #[test]
    fn level_25_invariants() {
        assert_eq!((genus(25), nu2(25), nu3(25), num_cusps(25)), (0, 2, 0, 6));
    }

    #[test]
    fn known_genera() {
        // X0(N) of genus 0 for these levels, genus 1 for the next list.
        for n in [1u64, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 13, 16, 18, 25] {
            assert_eq!(genus(n), 0, "N = {n}");
        }
        for n in [11u64, 14, 15, 17, 19, 20, 21, 24, 27, 32, 36, 49] {
            assert_eq!(genus(n), 1, "N = {n}");
        }
    }

    #[test]
    fn level_one_dimensions() {
        // dim S_k(SL2(Z)) = floor(k/12) - 1 if k = 2 mod 12, else floor(k/12)
        for k in (2..=40u32).step_by(2) {
            let expected = if k % 12 == 2 { (k / 12) as i64 - 1 } else { (k / 12) as i64 };
            assert_eq!(dim_cusp_forms(1, k) as i64, expected.max(0), "k = {k}");
        }
    }
}
