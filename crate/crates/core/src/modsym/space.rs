//! Ambient plus-quotient of weight-k modular symbols for Gamma0(N).
//!
//! A Manin symbol `[X^i Y^(k-2-i), (c : d)]` stands for `g (P {0, oo})` where
//! `g` is any SL2(Z) lift of the bottom row `(c, d)`. Matrices act on the right,
//! `[P, (u, v)] h = [P(aX + bY, cX + dY), (u, v) h]`, and the space is the
//! quotient by
//!
//! * `x + x S = 0` with `S = [0, -1; 1, 0]`,
//! * `x + x T + x T^2 = 0` with `T = [0, -1; 1, -1]`,
//! * `x = x J` with `J = [-1, 0; 0, 1]` (the star involution, plus quotient).
//!
//! The S and J relations send monomials to signed monomials, so they are
//! solved first by a signed union-find; the three-term relations are then
//! row-reduced over the surviving generators.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::p1::P1List;
use crate::error::{Error, Result};
use crate::linalg::{QMatrix, Q};

pub const DEFAULT_MAX_WEIGHT: u32 = 12;
pub const DEFAULT_MAX_LEVEL: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_level: u64,
    pub max_weight: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_level: DEFAULT_MAX_LEVEL, max_weight: DEFAULT_MAX_WEIGHT }
    }
}

/// `[X^i Y^(k-2-i), (c : d)]` with `(c : d)` normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ManinSymbol {
    pub i: u32,
    pub cd: (i64, i64),
}

pub type Mat2 = [i64; 4];

/// Coefficients of `X^m Y^(j-m)`, `m = 0..=j`, in `(aX + bY)^i (cX + dY)^(j-i)`.
pub fn apply_to_monomial(i: u32, j: u32, m: Mat2) -> Result<Vec<i128>> {
    let [a, b, c, d] = m.map(i128::from);
    // Polynomials in X with implicit Y, indexed by the X-degree.
    let mut out = vec![0i128; (j + 1) as usize];
    out[0] = 1;
    let mut deg = 0usize;
    let mul_linear = |x: i128, y: i128, deg: usize, out: &mut Vec<i128>| -> Result<()> {
        for m in (0..=deg + 1).rev() {
            let from_x = if m > 0 { out[m - 1].checked_mul(x) } else { Some(0) };
            let from_y = if m <= deg { out[m].checked_mul(y) } else { Some(0) };
            out[m] = from_x
                .zip(from_y)
                .and_then(|(p, q)| p.checked_add(q))
                .ok_or(Error::Overflow("monomial expansion"))?;
        }
        Ok(())
    };
    for _ in 0..i {
        mul_linear(a, b, deg, &mut out)?;
        deg += 1;
    }
    for _ in i..j {
        mul_linear(c, d, deg, &mut out)?;
        deg += 1;
    }
    Ok(out)
}

/// Sparse vector in basis coordinates.
pub type SparseQ = Vec<(usize, Q)>;

#[derive(Debug, Clone)]
pub struct ModularSymbols {
    level: u64,
    weight: u32,
    p1: P1List,
    /// For each Manin symbol index: `None` if it is zero in the quotient,
    /// otherwise `(free generator, sign)`.
    symbol_to_gen: Vec<Option<(usize, i8)>>,
    /// Representative symbol index of each free generator.
    gen_symbols: Vec<usize>,
    gen_to_basis: Vec<SparseQ>,
    /// Free generator behind each basis vector.
    basis_gens: Vec<usize>,
}

impl ModularSymbols {
    pub fn new(level: u64, weight: u32) -> Result<Self> {
        Self::with_limits(level, weight, Limits::default())
    }

    pub fn with_limits(level: u64, weight: u32, limits: Limits) -> Result<Self> {
        if weight < 2 || weight % 2 == 1 {
            return Err(Error::InvalidArgument(format!("weight {weight} must be even and at least 2")));
        }
        if level == 0 {
            return Err(Error::InvalidArgument("level must be positive".into()));
        }
        if level > limits.max_level || weight > limits.max_weight {
            return Err(Error::OutOfRange { level, weight });
        }
        let p1 = P1List::new(level);
        let r = p1.len();
        let nsym = r * (weight as usize - 1);
        let mut space = ModularSymbols {
            level,
            weight,
            p1,
            symbol_to_gen: Vec::new(),
            gen_symbols: Vec::new(),
            gen_to_basis: Vec::new(),
            basis_gens: Vec::new(),
        };

        // Two-term relations.
        let mut uf = SignedUnionFind::new(nsym);
        for x in 0..nsym {
            let s_image = space.apply_symbol(x, [0, -1, 1, 0])?;
            debug_assert_eq!(s_image.len(), 1);
            let (y, c) = s_image[0];
            uf.relate(x, y, -(c as i8));
            let j_image = space.apply_symbol(x, [-1, 0, 0, 1])?;
            let (y, c) = j_image[0];
            uf.relate(x, y, c as i8);
        }
        let mut gen_of_root: HashMap<usize, usize> = HashMap::new();
        let mut symbol_to_gen = vec![None; nsym];
        for (x, slot) in symbol_to_gen.iter_mut().enumerate() {
            let (root, sign) = uf.find(x);
            if uf.zero[root] {
                continue;
            }
            let next = gen_of_root.len();
            let g = *gen_of_root.entry(root).or_insert_with(|| {
                space.gen_symbols.push(root);
                next
            });
            *slot = Some((g, sign));
        }
        space.symbol_to_gen = symbol_to_gen;
        let ngens = space.gen_symbols.len();

        // Three-term relations over the free generators.
        let t = [0, -1, 1, -1];
        let t2 = [-1, 1, -1, 0];
        let mut seen = std::collections::HashSet::new();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for x in 0..nsym {
            let mut rel: HashMap<usize, i128> = HashMap::new();
            let mut add = |sym: usize, c: i128| {
                if let Some((g, s)) = space.symbol_to_gen[sym] {
                    *rel.entry(g).or_insert(0) += c * s as i128;
                }
            };
            add(x, 1);
            for (y, c) in space.apply_symbol(x, t)? {
                add(y, c);
            }
            for (y, c) in space.apply_symbol(x, t2)? {
                add(y, c);
            }
            let mut key: Vec<(usize, i128)> = rel.into_iter().filter(|(_, c)| *c != 0).collect();
            if key.is_empty() {
                continue;
            }
            key.sort_unstable();
            if !seen.insert(key.clone()) {
                continue;
            }
            let mut row = vec![Q::zero(); ngens];
            for (g, c) in key {
                row[g] = Q::from_integer(c.into());
            }
            rows.push(row);
        }
        let relations = QMatrix::from_rows(ngens, rows);
        let (rref, pivots) = relations.rref();
        let basis_gens: Vec<usize> = (0..ngens).filter(|g| !pivots.contains(g)).collect();
        let basis_pos: HashMap<usize, usize> = basis_gens.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut gen_to_basis: Vec<SparseQ> = vec![Vec::new(); ngens];
        for (&g, &i) in &basis_pos {
            gen_to_basis[g] = vec![(i, BigRational::from_integer(1.into()))];
        }
        for (row, &pg) in pivots.iter().enumerate() {
            gen_to_basis[pg] = basis_gens
                .iter()
                .enumerate()
                .filter(|(_, &f)| !rref.get(row, f).is_zero())
                .map(|(i, &f)| (i, -rref.get(row, f).clone()))
                .collect();
        }
        space.gen_to_basis = gen_to_basis;
        space.basis_gens = basis_gens;
        Ok(space)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.basis_gens.len()
    }

    pub fn p1(&self) -> &P1List {
        &self.p1
    }

    pub fn num_symbols(&self) -> usize {
        self.p1.len() * (self.weight as usize - 1)
    }

    pub fn symbol(&self, index: usize) -> ManinSymbol {
        let r = self.p1.len();
        ManinSymbol { i: (index / r) as u32, cd: self.p1.get(index % r) }
    }

    pub fn symbol_index(&self, i: u32, c: i64, d: i64) -> Option<usize> {
        self.p1.index_of(c, d).map(|j| i as usize * self.p1.len() + j)
    }

    /// Manin symbol standing for basis vector `b`.
    pub fn basis_symbol(&self, b: usize) -> ManinSymbol {
        self.symbol(self.gen_symbols[self.basis_gens[b]])
    }

    /// `x h` as `(symbol, coefficient)` pairs; terms whose bottom row leaves
    /// P^1(Z/NZ) are dropped.
    pub fn apply_symbol(&self, x: usize, h: Mat2) -> Result<Vec<(usize, i128)>> {
        let ManinSymbol { i, cd: (u, v) } = self.symbol(x);
        self.apply_raw(i, u, v, h)
    }

    pub(crate) fn apply_raw(&self, i: u32, u: i64, v: i64, h: Mat2) -> Result<Vec<(usize, i128)>> {
        let [a, b, c, d] = h;
        let Some(j) = self.p1.index_of(u * a + v * c, u * b + v * d) else {
            return Ok(Vec::new());
        };
        let poly = apply_to_monomial(i, self.weight - 2, h)?;
        let r = self.p1.len();
        Ok(poly.into_iter().enumerate().filter(|(_, c)| *c != 0).map(|(m, c)| (m * r + j, c)).collect())
    }

    /// Coordinates of a Manin symbol in the basis.
    pub fn symbol_to_basis(&self, x: usize) -> SparseQ {
        match self.symbol_to_gen[x] {
            None => Vec::new(),
            Some((g, s)) => {
                let sign = Q::from_integer(i64::from(s).into());
                self.gen_to_basis[g].iter().map(|(i, c)| (*i, c * &sign)).collect()
            }
        }
    }

    /// Dense coordinates of an integer combination of Manin symbols.
    pub fn combination_to_basis<I>(&self, terms: I) -> Vec<Q>
    where
        I: IntoIterator<Item = (usize, i128)>,
    {
        let mut by_gen: HashMap<usize, i128> = HashMap::new();
        for (x, c) in terms {
            if let Some((g, s)) = self.symbol_to_gen[x] {
                *by_gen.entry(g).or_insert(0) += c * s as i128;
            }
        }
        let mut out = vec![Q::zero(); self.dim()];
        for (g, c) in by_gen {
            if c == 0 {
                continue;
            }
            let c = Q::from_integer(c.into());
            for (i, v) in &self.gen_to_basis[g] {
                out[*i] += v * &c;
            }
        }
        out
    }
}

/// Union-find tracking `x = sign * parent(x)`; a class equal to its own
/// negative is zero.
struct SignedUnionFind {
    parent: Vec<usize>,
    sign: Vec<i8>,
    zero: Vec<bool>,
}

impl SignedUnionFind {
    fn new(n: usize) -> Self {
        SignedUnionFind { parent: (0..n).collect(), sign: vec![1; n], zero: vec![false; n] }
    }

    fn find(&mut self, x: usize) -> (usize, i8) {
        let p = self.parent[x];
        if p == x {
            return (x, 1);
        }
        let (root, s) = self.find(p);
        self.parent[x] = root;
        self.sign[x] *= s;
        (root, self.sign[x])
    }

    /// Records `x = s * y`.
    fn relate(&mut self, x: usize, y: usize, s: i8) {
        let (rx, a) = self.find(x);
        let (ry, b) = self.find(y);
        // a rx = s b ry
        let rel = a * s * b;
        if rx == ry {
            if rel == -1 {
                self.zero[rx] = true;
            }
            return;
        }
        // Keep the smaller index as root so representatives are deterministic.
        let (child, root) = if rx < ry { (ry, rx) } else { (rx, ry) };
        self.parent[child] = root;
        self.sign[child] = rel;
        self.zero[root] |= self.zero[child];
    }
}
