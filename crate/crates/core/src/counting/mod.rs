//! Point counts of quintic threefolds in P^4 over prime fields.
//!
//! The Schoen quintic `sum X_i^5 = 5 X_0 X_1 X_2 X_3 X_4` is written in the
//! coordinates `U = X_0 + X_1`, `V = X_0 - X_1`, where the involution swapping
//! `X_0, X_1` is `V -> -V` and the equation only involves `V^2`. Replacing `V`
//! by `sqrt(d) V` gives the quadratic twist `X_d`, again defined over Q.

mod trace;

pub use trace::{
    calibrate_correction, calibrate_correction_with, trace_congruence, trace_congruence_from_count,
    trace_exact, trace_exact_from_counts, CalibrationError, CorrectionModel, CountRecord, FrobeniusData,
    TraceMode, TraceValue, COUNT_FORMAT_VERSION, MAX_CORRECTION,
};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ffarith::{is_squarefree, power_table, Prime};

pub type Exponents = [u8; 5];

/// A projective point with its first nonzero coordinate scaled to 1.
pub type ProjectivePoint = [u64; 5];

/// Number of degree-5 monomials in 5 variables.
pub const MAX_TERMS: usize = 126;

/// Largest characteristic the counting kernels accept (keeps every
/// intermediate sum below 2^64).
pub const MAX_COUNT_PRIME: u64 = 1 << 28;

/// Homogeneous quintic in five variables with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuinticForm {
    terms: BTreeMap<Exponents, i64>,
    names: [String; 5],
}

impl QuinticForm {
    /// Collects like terms and drops zero coefficients.
    pub fn new<I>(terms: I, names: [&str; 5]) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, i64)>,
    {
        let mut map: BTreeMap<Exponents, i64> = BTreeMap::new();
        for (e, c) in terms {
            if e.iter().map(|&x| x as u32).sum::<u32>() != 5 {
                return Err(Error::InvalidArgument(format!("monomial {e:?} is not of degree 5")));
            }
            let slot = map.entry(e).or_insert(0);
            *slot = slot.checked_add(c).ok_or(Error::Overflow("quintic coefficient"))?;
        }
        map.retain(|_, c| *c != 0);
        if map.is_empty() {
            return Err(Error::InvalidArgument("quintic form has no terms".into()));
        }
        debug_assert!(map.len() <= MAX_TERMS);
        Ok(QuinticForm { terms: map, names: names.map(String::from) })
    }

    pub fn fermat() -> Self {
        let terms = (0..5).map(|i| {
            let mut e = [0u8; 5];
            e[i] = 5;
            (e, 1)
        });
        Self::new(terms, ["X0", "X1", "X2", "X3", "X4"]).expect("valid form")
    }

    /// The Schoen quintic in its original coordinates.
    pub fn schoen_original() -> Self {
        let mut terms: Vec<(Exponents, i64)> = (0..5)
            .map(|i| {
                let mut e = [0u8; 5];
                e[i] = 5;
                (e, 1)
            })
            .collect();
        terms.push(([1, 1, 1, 1, 1], -5));
        Self::new(terms, ["X0", "X1", "X2", "X3", "X4"]).expect("valid form")
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &i64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: Exponents) -> i64 {
        self.terms.get(&e).copied().unwrap_or(0)
    }

    pub fn names(&self) -> &[String; 5] {
        &self.names
    }

    pub fn eval_mod(&self, x: &[u64; 5], p: u64) -> u64 {
        eval_terms(self.terms.iter().map(|(e, c)| (*e, *c)), x, p)
    }

    /// Partial derivative in variable `var`, as a list of degree-4 terms.
    pub fn derivative(&self, var: usize) -> Vec<(Exponents, i64)> {
        self.terms
            .iter()
            .filter(|(e, _)| e[var] > 0)
            .map(|(e, c)| {
                let mut e2 = *e;
                e2[var] -= 1;
                (e2, c * e[var] as i64)
            })
            .collect()
    }
}

fn eval_terms(terms: impl Iterator<Item = (Exponents, i64)>, x: &[u64; 5], p: u64) -> u64 {
    let mut acc = 0u64;
    for (e, c) in terms {
        let mut t = c.rem_euclid(p as i64) as u64;
        for (xi, ei) in x.iter().zip(e) {
            for _ in 0..ei {
                t = t * xi % p;
            }
        }
        acc = (acc + t) % p;
    }
    acc
}

/// `U^5 + 10d U^3V^2 + 5d^2 UV^4 + 16(X2^5+X3^5+X4^5) - 20(U^2 - dV^2) X2X3X4`.
pub fn schoen_form(d: i64) -> Result<QuinticForm> {
    if d == 0 || !is_squarefree(d) {
        return Err(Error::InvalidArgument(format!("twist parameter {d} must be nonzero and squarefree")));
    }
    let d2 = d.checked_mul(d).ok_or(Error::Overflow("schoen_form"))?;
    let terms = vec![
        ([5, 0, 0, 0, 0], 1),
        ([3, 2, 0, 0, 0], 10 * d),
        ([1, 4, 0, 0, 0], 5 * d2),
        ([0, 0, 5, 0, 0], 16),
        ([0, 0, 0, 5, 0], 16),
        ([0, 0, 0, 0, 5], 16),
        ([2, 0, 1, 1, 1], -20),
        ([0, 2, 1, 1, 1], 20 * d),
    ];
    QuinticForm::new(terms, ["U", "V", "X2", "X3", "X4"])
}

/// A form reduced modulo `p`, split by the exponent of the last variable so
/// the innermost loop is a degree-5 polynomial in one coordinate.
struct ReducedForm {
    p: u64,
    powers: [Vec<u64>; 6],
    by_last: [Vec<(u64, [u8; 4])>; 6],
    /// `x4 -> [1, x4, x4^2, ..., x4^5]`, contiguous per point.
    last_powers: Vec<[u64; 6]>,
}

impl ReducedForm {
    fn new(f: &QuinticForm, p: Prime) -> Self {
        let powers: [Vec<u64>; 6] = std::array::from_fn(|e| power_table(p, e as u32));
        let p = p.get();
        let mut by_last: [Vec<(u64, [u8; 4])>; 6] = Default::default();
        for (e, c) in f.terms() {
            let c = c.rem_euclid(p as i64) as u64;
            if c != 0 {
                by_last[e[4] as usize].push((c, [e[0], e[1], e[2], e[3]]));
            }
        }
        let last_powers = (0..p as usize).map(|x| std::array::from_fn(|j| powers[j][x])).collect();
        ReducedForm { p, powers, by_last, last_powers }
    }

    #[inline]
    fn prefix_coeffs(&self, x: [u64; 4]) -> [u64; 6] {
        let p = self.p;
        let mut out = [0u64; 6];
        for (slot, terms) in out.iter_mut().zip(&self.by_last) {
            let mut acc = 0u64;
            for &(c, e) in terms {
                let mut t = c;
                for k in 0..4 {
                    if e[k] != 0 {
                        t = t * self.powers[e[k] as usize][x[k] as usize] % p;
                    }
                }
                acc += t;
            }
            *slot = acc % p;
        }
        out
    }

    /// Number of `x4` in F_p with `sum_j c_j x4^j = 0`.
    #[inline]
    fn count_last(&self, c: &[u64; 6]) -> u64 {
        let p = self.p;
        let mut n = 0;
        for pw in &self.last_powers {
            let s = c[0] + c[1] * pw[1] + c[2] * pw[2] + c[3] * pw[3] + c[4] * pw[4] + c[5] * pw[5];
            if s % p == 0 {
                n += 1;
            }
        }
        n
    }

    /// Points of the affine chart `x_0 = .. = x_{i-1} = 0, x_i = 1`.
    fn chart(&self, i: usize) -> u64 {
        let p = self.p;
        if i == 4 {
            return u64::from(self.prefix_coeffs([0, 0, 0, 0])[5] == 0);
        }
        let mut base = [0u64; 4];
        base[i] = 1;
        let free: Vec<usize> = (i + 1..4).collect();
        if free.is_empty() {
            return self.count_last(&self.prefix_coeffs(base));
        }
        // Disjoint slices on the first free coordinate; the sum is order independent.
        (0..p)
            .into_par_iter()
            .map(|v| {
                let mut x = base;
                x[free[0]] = v;
                self.sweep(&mut x, &free[1..])
            })
            .sum()
    }

    fn sweep(&self, x: &mut [u64; 4], free: &[usize]) -> u64 {
        match free.split_first() {
            None => self.count_last(&self.prefix_coeffs(*x)),
            Some((&k, rest)) => {
                let mut n = 0;
                for v in 0..self.p {
                    x[k] = v;
                    n += self.sweep(x, rest);
                }
                x[k] = 0;
                n
            }
        }
    }
}

fn check_prime(p: Prime) -> Result<()> {
    if p.get() > MAX_COUNT_PRIME {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds the counting limit {MAX_COUNT_PRIME}")));
    }
    Ok(())
}

/// Zero counts of `f` on each of the five standard affine charts.
pub fn chart_counts(f: &QuinticForm, p: Prime) -> Result<[u64; 5]> {
    check_prime(p)?;
    let reduced = ReducedForm::new(f, p);
    Ok(std::array::from_fn(|i| reduced.chart(i)))
}

/// `#{x in P^4(F_p) : f(x) = 0}`.
pub fn count_projective(f: &QuinticForm, p: Prime) -> Result<u64> {
    Ok(chart_counts(f, p)?.iter().sum())
}

/// `(p^5 - 1) / (p - 1)`.
pub fn projective_size(p: Prime) -> u64 {
    let p = p.get();
    1 + p + p * p + p * p * p + p * p * p * p
}

/// F_p-rational points where `f` and its gradient vanish.
pub fn singular_points(f: &QuinticForm, p: Prime) -> Result<Vec<ProjectivePoint>> {
    check_prime(p)?;
    let q = p.get();
    let grads: Vec<Vec<(Exponents, i64)>> = (0..5).map(|v| f.derivative(v)).collect();
    let mut out = Vec::new();
    for chart in 0..5 {
        let free = 4 - chart;
        let total = q.pow(free as u32);
        for idx in 0..total {
            let mut x = [0u64; 5];
            x[chart] = 1;
            let mut r = idx;
            for slot in x.iter_mut().skip(chart + 1) {
                *slot = r % q;
                r /= q;
            }
            if f.eval_mod(&x, q) != 0 {
                continue;
            }
            if grads.iter().all(|g| eval_terms(g.iter().copied(), &x, q) == 0) {
                out.push(x);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Scales `x` so that its first nonzero coordinate is 1.
pub fn normalize_point(x: [u64; 5], p: Prime) -> Option<ProjectivePoint> {
    let q = p.get();
    let lead = x.iter().copied().find(|&v| v % q != 0)?;
    let inv = crate::ffarith::pow_mod(lead, q - 2, q);
    Some(x.map(|v| v % q * inv % q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffarith::primes_between;

    fn prime(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    /// Walks every projective point once, independent of the chart kernel.
    fn brute_count(f: &QuinticForm, p: Prime) -> u64 {
        let q = p.get();
        let mut n = 0;
        for idx in 0..q.pow(5) {
            let mut x = [0u64; 5];
            let mut r = idx;
            for s in x.iter_mut() {
                *s = r % q;
                r /= q;
            }
            if x.iter().all(|&v| v == 0) || normalize_point(x, p) != Some(x) {
                continue;
            }
            if f.eval_mod(&x, q) == 0 {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn schoen_coefficients() {
        let f = schoen_form(1).unwrap();
        assert_eq!(f.coefficient([3, 2, 0, 0, 0]), 10);
        assert_eq!(f.coefficient([1, 4, 0, 0, 0]), 5);
        let g = schoen_form(2).unwrap();
        assert_eq!(g.coefficient([1, 4, 0, 0, 0]), 20);
        assert_eq!(g.coefficient([3, 2, 0, 0, 0]), 20);
        assert_eq!(g.coefficient([0, 2, 1, 1, 1]), 40);
        assert!(schoen_form(0).is_err());
        assert!(schoen_form(12).is_err());
    }

    /// Expands 16 * (X0^5 + X1^5 - 5 X0 X1 Y) with X0 = (U + sqrt(d) V)/2,
    /// X1 = (U - sqrt(d) V)/2 by binomial sums, keeping the terms even in V.
    #[test]
    fn twisted_form_matches_symbolic_substitution() {
        fn binom(n: u64, k: u64) -> i64 {
            (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
        }
        for d in [1i64, 2, -1, 3, -7] {
            let f = schoen_form(d).unwrap();
            // X0^5 + X1^5 = 2^{-5} * 2 * sum_{j even} C(5,j) U^{5-j} d^{j/2} V^j
            for j in [0u64, 2, 4] {
                let c = 16 * 2 * binom(5, j) * d.pow(j as u32 / 2) / 32;
                assert_eq!(f.coefficient([(5 - j) as u8, j as u8, 0, 0, 0]), c);
            }
            // -5 X0 X1 = -5 (U^2 - d V^2) / 4
            assert_eq!(f.coefficient([2, 0, 1, 1, 1]), -16 * 5 / 4);
            assert_eq!(f.coefficient([0, 2, 1, 1, 1]), 16 * 5 * d / 4);
        }
    }

    #[test]
    fn hyperplane_and_fermat_counts() {
        let hyper = QuinticForm::new([([5, 0, 0, 0, 0], 1)], ["X0", "X1", "X2", "X3", "X4"]).unwrap();
        let fermat = QuinticForm::fermat();
        let p7 = prime(7);
        assert_eq!(count_projective(&hyper, p7).unwrap(), 400);
        assert_eq!(count_projective(&fermat, p7).unwrap(), 400);
    }

    #[test]
    fn schoen_mod_two_matches_direct_enumeration() {
        let f = schoen_form(1).unwrap();
        let p2 = prime(2);
        let direct = brute_count(&f, p2);
        assert_eq!(count_projective(&f, p2).unwrap(), direct);
        // Mod 2 the form is U^5 + UV^4 = U (U + V)^4: two hyperplanes (15 points each)
        // meeting in a plane (7 points).
        assert_eq!(direct, 23);
    }

    #[test]
    fn chart_counts_match_one_shot_enumeration() {
        let forms = [QuinticForm::fermat(), QuinticForm::schoen_original(), schoen_form(1).unwrap(), schoen_form(-3).unwrap()];
        for p in primes_between(2, 7) {
            for f in &forms {
                let charts = chart_counts(f, p).unwrap();
                let mut reversed = charts;
                reversed.reverse();
                assert_eq!(charts.iter().sum::<u64>(), reversed.iter().sum::<u64>());
                assert_eq!(charts.iter().sum::<u64>(), brute_count(f, p), "p={p}");
            }
        }
    }

    #[test]
    fn uv_form_has_schoen_counts_for_odd_p() {
        let orig = QuinticForm::schoen_original();
        let uv = schoen_form(1).unwrap();
        for p in primes_between(3, 23) {
            assert_eq!(count_projective(&orig, p).unwrap(), count_projective(&uv, p).unwrap(), "p={p}");
        }
    }

    #[test]
    fn square_class_invariance() {
        // d and d q^2 give projectively equivalent forms via V -> q V.
        for p in primes_between(3, 13) {
            for (d, q) in [(2i64, 3i64), (-1, 2), (3, 5)] {
                if (d * q) % p.get() as i64 == 0 {
                    continue;
                }
                let base = count_projective(&schoen_form(d).unwrap(), p).unwrap();
                let dq2 = d * q * q;
                // schoen_form rejects non-squarefree d, so build the d q^2 form by hand.
                let terms: Vec<(Exponents, i64)> = schoen_form(d)
                    .unwrap()
                    .terms()
                    .map(|(e, c)| (*e, c * q.pow(e[1] as u32)))
                    .collect();
                let scaled = QuinticForm::new(terms, ["U", "V", "X2", "X3", "X4"]).unwrap();
                assert_eq!(scaled.coefficient([3, 2, 0, 0, 0]), 10 * dq2);
                assert_eq!(count_projective(&scaled, p).unwrap(), base);
            }
        }
    }

    #[test]
    fn fermat_has_no_singular_points() {
        assert!(singular_points(&QuinticForm::fermat(), prime(3)).unwrap().is_empty());
    }

    #[test]
    fn schoen_node_counts() {
        let f = schoen_form(1).unwrap();
        assert_eq!(singular_points(&f, prime(11)).unwrap().len(), 125);
        let pts = singular_points(&f, prime(7)).unwrap();
        assert_eq!(pts, vec![normalize_point([2, 0, 1, 1, 1], prime(7)).unwrap()]);
        for p in [3u64, 13, 17] {
            assert_eq!(singular_points(&f, prime(p)).unwrap().len(), 1);
        }
    }

    #[test]
    fn count_is_bounded_by_projective_space() {
        for p in primes_between(2, 11) {
            let n = count_projective(&schoen_form(1).unwrap(), p).unwrap();
            assert!(n <= projective_size(p));
        }
    }
}
