//! Cusps of Gamma0(N) and the boundary map.
//!
//! For `g = [a, b; c, d]` in SL2(Z), `[P, g] = (gP){g 0, g oo}`. The boundary
//! space for weight k is spanned by cusp classes, the class of `[gQ, {g oo}]`
//! being the coefficient of `X^(k-2)` in `Q` times `{g oo}`. Hence
//! `delta [X^i Y^(k-2-i), g] = [i = k-2] {a/c} - [i = 0] {b/d}`.
//! In the plus quotient the cusps `alpha` and `-alpha` are identified.

use super::space::ModularSymbols;
use crate::ffarith::{gcd, inverse_mod, xgcd};
use crate::linalg::{QMatrix, Subspace, Q};

/// A cusp `u/v` in lowest terms with `v >= 0`; `1/0` is infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cusp {
    pub u: i64,
    pub v: i64,
}

impl Cusp {
    pub fn new(u: i64, v: i64) -> Self {
        assert!(u != 0 || v != 0);
        let g = gcd(u, v);
        let (mut u, mut v) = (u / g, v / g);
        if v < 0 || (v == 0 && u < 0) {
            u = -u;
            v = -v;
        }
        Cusp { u, v }
    }

    pub fn infinity() -> Self {
        Cusp { u: 1, v: 0 }
    }

    pub fn negate(self) -> Self {
        Cusp::new(-self.u, self.v)
    }

    /// Gamma0(N)-equivalence: `v2 s1 = v1 s2 (mod gcd(v1 v2, N))` where
    /// `u_j s_j = 1 (mod v_j)`.
    pub fn is_gamma0_equivalent(self, other: Cusp, n: u64) -> bool {
        let n = n as i64;
        // oo ~ 1/N via [1, 0; N, 1]
        let lift = |c: Cusp| if c.v == 0 { Cusp::new(1, n) } else { c };
        let (a, b) = (lift(self), lift(other));
        let s = |c: Cusp| if c.v == 1 { 0 } else { inverse_mod(c.u, c.v).expect("lowest terms") };
        let m = gcd((a.v as i128 * b.v as i128 % n as i128) as i64, n);
        let lhs = s(a) as i128 * b.v as i128 - s(b) as i128 * a.v as i128;
        lhs.rem_euclid(m as i128) == 0
    }
}

/// Lift of `(c : d)` in P^1(Z/NZ) to `[a, b; c', d']` in SL2(Z).
pub fn lift_to_sl2z(c: i64, d: i64, n: u64) -> [i64; 4] {
    let n = n as i64;
    let c = if n == 1 { 0 } else { c.rem_euclid(n) };
    let d0 = if n == 1 { 1 } else { d.rem_euclid(n) };
    let c1 = if c == 0 { n } else { c };
    let mut d1 = d0;
    while gcd(c1, d1) != 1 {
        d1 += n;
    }
    let c1 = if n == 1 && c == 0 { 0 } else { c1 };
    // a d1 - b c1 = 1
    let (g, x, y) = xgcd(d1, c1);
    debug_assert_eq!(g, 1);
    [x, -y, c1, d1]
}

/// Cusp classes met so far, modulo Gamma0(N) and `alpha ~ -alpha`.
#[derive(Debug, Default)]
pub struct CuspClasses {
    reps: Vec<Cusp>,
}

impl CuspClasses {
    pub fn index(&mut self, c: Cusp, n: u64) -> usize {
        if let Some(i) = self.reps.iter().position(|&r| r.is_gamma0_equivalent(c, n) || r.is_gamma0_equivalent(c.negate(), n)) {
            return i;
        }
        self.reps.push(c);
        self.reps.len() - 1
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
}

/// Boundary image of Manin symbol `x` as `(cusp class, coefficient)` terms.
pub fn symbol_boundary(space: &ModularSymbols, x: usize, classes: &mut CuspClasses) -> Vec<(usize, i64)> {
    let sym = space.symbol(x);
    let n = space.level();
    let top = space.weight() - 2;
    let [a, b, c, d] = lift_to_sl2z(sym.cd.0, sym.cd.1, n);
    let mut out = Vec::new();
    if sym.i == top {
        out.push((classes.index(Cusp::new(a, c), n), 1));
    }
    if sym.i == 0 {
        out.push((classes.index(Cusp::new(b, d), n), -1));
    }
    out
}

/// Matrix of the boundary map on the basis (rows: basis vectors).
pub fn boundary_matrix(space: &ModularSymbols) -> QMatrix {
    let mut classes = CuspClasses::default();
    let images: Vec<Vec<(usize, i64)>> = (0..space.dim())
        .map(|b| {
            let sym = space.basis_symbol(b);
            let x = space.symbol_index(sym.i, sym.cd.0, sym.cd.1).expect("basis symbol is valid");
            symbol_boundary(space, x, &mut classes)
        })
        .collect();
    let mut m = QMatrix::zeros(space.dim(), classes.len().max(1));
    for (b, terms) in images.iter().enumerate() {
        for &(cls, c) in terms {
            let v = m.get(b, cls) + Q::from_integer(c.into());
            m.set(b, cls, v);
        }
    }
    m
}

/// Kernel of the boundary map.
pub fn cuspidal_subspace(space: &ModularSymbols) -> Subspace {
    let whole = Subspace::whole(space.dim());
    let d = boundary_matrix(space);
    if d.is_zero() {
        return whole;
    }
    whole.kernel_of(&d)
}
