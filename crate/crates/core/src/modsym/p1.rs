//! The projective line over `Z/NZ`.

use std::collections::HashMap;

use crate::ffarith::{gcd, xgcd};

/// Normalized representatives of P^1(Z/NZ) with an index lookup.
#[derive(Debug, Clone)]
pub struct P1List {
    n: i64,
    elements: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), usize>,
}

impl P1List {
    pub fn new(n: u64) -> Self {
        let n = n as i64;
        let mut elements = Vec::new();
        if n == 1 {
            elements.push((0, 0));
        } else {
            for c in 0..n {
                for d in 0..n {
                    if gcd(gcd(c, d), n) == 1 {
                        if let Some(x) = normalize(n, c, d) {
                            if x == (c, d) {
                                elements.push(x);
                            }
                        }
                    }
                }
            }
        }
        elements.sort_unstable();
        let index = elements.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        P1List { n, elements, index }
    }

    pub fn level(&self) -> u64 {
        self.n as u64
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> (i64, i64) {
        self.elements[i]
    }

    /// Index of the class of `(c : d)`, or `None` when `gcd(c, d, N) > 1`.
    pub fn index_of(&self, c: i64, d: i64) -> Option<usize> {
        normalize(self.n, c, d).map(|x| self.index[&x])
    }
}

/// Canonical representative `(g, v)` with `g | N` of the class of `(u : v)`
/// under scaling by units of `Z/NZ`.
fn normalize(n: i64, u: i64, v: i64) -> Option<(i64, i64)> {
    if n == 1 {
        return Some((0, 0));
    }
    let u = u.rem_euclid(n);
    let v = v.rem_euclid(n);
    if u == 0 {
        return (gcd(v, n) == 1).then_some((0, 1));
    }
    let (g, s, _) = xgcd(u, n);
    let mut s = s.rem_euclid(n);
    if gcd(g, v) != 1 {
        return None;
    }
    if g != 1 {
        let step = n / g;
        while gcd(s, n) != 1 {
            s = (s + step) % n;
        }
    }
    // (u, v) ~ (s u, s v) = (g, s v)
    let mut v = (s as i128 * v as i128).rem_euclid(n as i128) as i64;
    let mut min_v = v;
    if g != 1 {
        // Scalars 1 + k N/g fix g and move v by multiples of v N/g.
        let ng = n / g;
        let v_ng = (v as i128 * ng as i128 % n as i128) as i64;
        let mut t = 1;
        for _ in 1..g {
            v = (v + v_ng) % n;
            t = (t + ng) % n;
            if v < min_v && gcd(t, n) == 1 {
                min_v = v;
            }
        }
    }
    Some((g, min_v))
}

/// Number of elements of P^1(Z/NZ): `N prod_{p | N} (1 + 1/p)`.
pub fn p1_size(n: u64) -> u64 {
    crate::ffarith::prime_factors(n).iter().fold(n, |acc, &(p, _)| acc / p * (p + 1))
}
