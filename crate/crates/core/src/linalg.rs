//! Dense matrices over Q with fraction-free elimination.
//!
//! Vectors are rows and operators act on the right (`v -> v * T`), the
//! convention used throughout the modular symbols code. Row reduction clears
//! denominators row by row and eliminates over the integers, dividing each
//! row by its content after every update so entries stay small.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl QMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        QMatrix { nrows, ncols, data: vec![Q::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Q::one();
        }
        m
    }

    pub fn from_rows(ncols: usize, rows: Vec<Vec<Q>>) -> Self {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend(r);
        }
        QMatrix { nrows, ncols, data }
    }

    pub fn from_i64(nrows: usize, ncols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), nrows * ncols);
        QMatrix { nrows, ncols, data: entries.iter().map(|&x| q(x)).collect() }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Q]> {
        self.data.chunks(self.ncols.max(1)).take(self.nrows)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t.data[j * self.nrows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn trace(&self) -> Q {
        assert!(self.is_square());
        (0..self.nrows).fold(Q::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn scale(&self, c: &Q) -> Self {
        QMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.nrows, cols.len());
        for i in 0..self.nrows {
            for (k, &j) in cols.iter().enumerate() {
                out.data[i * cols.len() + k] = self.get(i, j).clone();
            }
        }
        out
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &QMatrix) -> Self {
        assert_eq!(self.ncols, other.ncols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        QMatrix { nrows: self.nrows + other.nrows, ncols: self.ncols, data }
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn augment(&self, other: &QMatrix) -> Self {
        assert_eq!(self.nrows, other.nrows);
        let ncols = self.ncols + other.ncols;
        let mut data = Vec::with_capacity(self.nrows * ncols);
        for i in 0..self.nrows {
            data.extend(self.row(i).iter().cloned());
            data.extend(other.row(i).iter().cloned());
        }
        QMatrix { nrows: self.nrows, ncols, data }
    }

    /// Row vector times matrix.
    pub fn apply_row(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.nrows);
        let mut out = vec![Q::zero(); self.ncols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o += vi * a;
                }
            }
        }
        out
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut rows: Vec<Vec<BigInt>> = self.rows().map(integral_row).collect();
        let pivots = eliminate(&mut rows, self.ncols);
        let mut out = Vec::with_capacity(pivots.len());
        for (row, &pc) in rows.iter().zip(&pivots) {
            let lead = &row[pc];
            out.push(row.iter().map(|x| Q::new(x.clone(), lead.clone())).collect());
        }
        (QMatrix::from_rows(self.ncols, out), pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Echelon basis of `{v : v * self = 0}`.
    pub fn left_kernel(&self) -> QMatrix {
        let (r, pivots) = self.transpose().rref();
        let n = self.nrows;
        let mut basis = Vec::new();
        for f in (0..n).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.get(i, f).clone();
            }
            basis.push(v);
        }
        QMatrix::from_rows(n, basis).rref().0
    }

    /// Characteristic polynomial `det(x I - self)` by Faddeev-LeVerrier.
    pub fn charpoly(&self) -> Poly {
        assert!(self.is_square());
        let n = self.nrows;
        let mut coeffs = vec![Q::zero(); n + 1];
        coeffs[n] = Q::one();
        let mut m = QMatrix::zeros(n, n);
        for k in 1..=n {
            let mut next = self * &m;
            for i in 0..n {
                let v = next.get(i, i) + &coeffs[n - k + 1];
                next.set(i, i, v);
            }
            let am = self * &next;
            coeffs[n - k] = -am.trace() / q(k as i64);
            m = next;
        }
        Poly::new(coeffs)
    }

    pub fn pow(&self, e: u32) -> QMatrix {
        let mut acc = QMatrix::identity(self.nrows);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

fn integral_row(row: &[Q]) -> Vec<BigInt> {
    let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut out: Vec<BigInt> = row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            *x /= &g;
        }
    }
}

/// Gauss-Jordan over Z; returns pivot columns. Rows past the rank are
/// dropped, pivot rows are primitive with a positive pivot.
fn eliminate(rows: &mut Vec<Vec<BigInt>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        // Sparsest row with a nonzero entry keeps fill-in down.
        let choice = (r..rows.len())
            .filter(|&i| !rows[i][col].is_zero())
            .min_by_key(|&i| (rows[i].iter().filter(|x| !x.is_zero()).count(), rows[i][col].abs()));
        let Some(i) = choice else { continue };
        rows.swap(r, i);
        if rows[r][col].is_negative() {
            for x in rows[r].iter_mut() {
                *x = -&*x;
            }
        }
        let pivot_row = rows[r].clone();
        let a = &pivot_row[col];
        for (j, row) in rows.iter_mut().enumerate() {
            if j == r || row[col].is_zero() {
                continue;
            }
            let g = a.gcd(&row[col]);
            let fa = a / &g;
            let fb = &row[col] / &g;
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if y.is_zero() {
                    if !x.is_zero() {
                        *x *= &fa;
                    }
                } else {
                    *x = &*x * &fa - y * &fb;
                }
            }
            make_primitive(row);
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols, rhs.nrows, "dimension mismatch");
        let mut out = QMatrix::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            let row = rhs.apply_row(self.row(i));
            for (j, v) in row.into_iter().enumerate() {
                out.data[i * rhs.ncols + j] = v;
            }
        }
        out
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        QMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        QMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Polynomial over Q, coefficients from the constant term up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Q>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    /// Quotient by `(x - root)`, assuming `root` is a root.
    pub fn deflate(&self, root: &Q) -> Poly {
        let n = self.degree();
        let mut out = vec![Q::zero(); n];
        let mut carry = Q::zero();
        for i in (1..=n).rev() {
            carry = &self.coeffs[i] + carry * root;
            out[i - 1] = carry.clone();
        }
        Poly::new(out)
    }

    /// Integer roots in `[-bound, bound]` with multiplicity, ascending.
    /// Candidates are restricted to divisors of the constant term of the
    /// integer-cleared polynomial.
    pub fn integer_roots(&self, bound: i64) -> Vec<(i64, usize)> {
        let mut f = self.clone();
        let mut zero = 0;
        while f.degree() > 0 && f.coeffs[0].is_zero() {
            f = Poly::new(f.coeffs[1..].to_vec());
            zero += 1;
        }
        let denom = f.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let c0 = (&f.coeffs[0] * Q::from_integer(denom)).to_integer();
        let mut roots = Vec::new();
        for r in -bound..=bound {
            if r == 0 {
                if zero > 0 {
                    roots.push((0, zero));
                }
                continue;
            }
            if f.degree() == 0 || !(&c0 % BigInt::from(r)).is_zero() {
                continue;
            }
            let x = q(r);
            let mut mult = 0;
            while f.degree() > 0 && f.eval(&x).is_zero() {
                f = f.deflate(&x);
                mult += 1;
            }
            if mult > 0 {
                roots.push((r, mult));
            }
        }
        roots
    }
}

/// A subspace of Q^n held as an echelon basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    basis: QMatrix,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn from_rows(rows: &QMatrix) -> Self {
        let (basis, pivots) = rows.rref();
        Subspace { basis, pivots }
    }

    pub fn whole(n: usize) -> Self {
        Subspace { basis: QMatrix::identity(n), pivots: (0..n).collect() }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &QMatrix {
        &self.basis
    }

    /// Coordinates of an ambient vector known to lie in the subspace.
    pub fn coordinates(&self, v: &[Q]) -> Vec<Q> {
        self.pivots.iter().map(|&c| v[c].clone()).collect()
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        let c = self.coordinates(v);
        self.basis.apply_row(&c) == v
    }

    /// Matrix of `T` on this subspace, or `None` if the subspace is not `T`-stable.
    pub fn restrict(&self, op: &QMatrix) -> Option<QMatrix> {
        let image = &self.basis * op;
        let restricted = image.select_columns(&self.pivots);
        if &restricted * &self.basis == image {
            Some(restricted)
        } else {
            None
        }
    }

    /// Vectors `u * B` for `u` in the given coordinate subspace.
    pub fn lift(&self, coords: &QMatrix) -> Subspace {
        Subspace::from_rows(&(coords * &self.basis))
    }

    /// `{v in self : v * map = 0}`.
    pub fn kernel_of(&self, map: &QMatrix) -> Subspace {
        if self.dim() == 0 {
            return self.clone();
        }
        let k = (&self.basis * map).left_kernel();
        if k.nrows() == 0 {
            return Subspace { basis: QMatrix::zeros(0, self.ambient_dim()), pivots: vec![] };
        }
        self.lift(&k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_kernel() {
        let a = QMatrix::from_i64(3, 3, &[2, 4, 6, 1, 2, 3, 0, 1, 1]);
        let (r, piv) = a.rref();
        assert_eq!(piv, vec![0, 1]);
        assert_eq!(r, QMatrix::from_i64(2, 3, &[1, 0, 1, 0, 1, 1]));
        let k = a.left_kernel();
        assert_eq!(k.nrows(), 1);
        assert!((&k * &a).is_zero());
    }

    #[test]
    fn charpoly_of_companion() {
        // companion of x^3 - 2x^2 - 5x + 6 = (x-1)(x+2)(x-3)
        let c = QMatrix::from_i64(3, 3, &[0, 1, 0, 0, 0, 1, -6, 5, 2]);
        let f = c.charpoly();
        assert_eq!(f.coeffs(), &[q(6), q(-5), q(-2), q(1)]);
        assert_eq!(f.integer_roots(10), vec![(-2, 1), (1, 1), (3, 1)]);
    }

    #[test]
    fn repeated_roots() {
        let f = Poly::new(vec![q(4), q(-4), q(1)]);
        assert_eq!(f.integer_roots(5), vec![(2, 2)]);
    }

    #[test]
    fn restriction_to_invariant_subspace() {
        let t = QMatrix::from_i64(3, 3, &[2, 0, 0, 0, 3, 1, 0, 0, 3]);
        let s = Subspace::from_rows(&QMatrix::from_i64(1, 3, &[1, 0, 0]));
        assert_eq!(s.restrict(&t).unwrap(), QMatrix::from_i64(1, 1, &[2]));
        let not_stable = Subspace::from_rows(&QMatrix::from_i64(1, 3, &[0, 1, 0]));
        assert!(not_stable.restrict(&t).is_none());
    }
}
