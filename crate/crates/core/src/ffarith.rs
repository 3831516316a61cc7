//! Prime-field arithmetic and quadratic residue symbols.
//!
//! Everything here is small-word integer arithmetic: the toolkit never needs
//! primes above 64 bits, so products are formed in `u128`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Witness set making Miller-Rabin deterministic for every `u64`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n == w {
            return true;
        }
        if n % w == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A rational prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(value: u64) -> Result<Self> {
        if is_prime(value) {
            Ok(Prime(value))
        } else {
            Err(Error::NotPrime(value))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(value: u64) -> Result<Self> {
        Prime::new(value)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_between(lo: u64, hi: u64) -> Vec<Prime> {
    (lo.max(2)..=hi).filter(|&n| is_prime(n)).map(Prime).collect()
}

/// An element of `Z/pZ` in canonical form `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Residue {
    value: u64,
    modulus: Prime,
}

impl Residue {
    pub fn new(value: i128, modulus: Prime) -> Self {
        let m = modulus.get() as i128;
        Residue { value: value.rem_euclid(m) as u64, modulus }
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.modulus
    }

    /// Whether the integer `n` reduces to this residue.
    pub fn matches(self, n: i128) -> bool {
        n.rem_euclid(self.modulus.get() as i128) as u64 == self.value
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// Jacobi symbol `(a/n)` for odd `n >= 1`.
fn jacobi(a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = (a as i128).rem_euclid(n as i128) as u64;
    let mut n = n;
    let mut sign = 1;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            sign = -sign;
        }
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker symbol `(d/n)` for nonzero `d` and `n >= 1`.
pub fn kronecker(d: i64, n: u64) -> Result<i32> {
    if d == 0 {
        return Err(Error::InvalidArgument("kronecker symbol needs d != 0".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("kronecker symbol needs n >= 1".into()));
    }
    let twos = n.trailing_zeros();
    let odd = n >> twos;
    let mut value = 1;
    if twos > 0 {
        if d % 2 == 0 {
            return Ok(0);
        }
        // (d/2) = 1 for d = +-1 mod 8, -1 for d = +-3 mod 8
        let at_two = match d.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        };
        if twos % 2 == 1 {
            value = at_two;
        }
    }
    Ok(value * jacobi(d, odd))
}

/// `table[x] = x^e mod p` for every `x` in `[0, p)`.
pub fn power_table(p: Prime, e: u32) -> Vec<u64> {
    let p = p.get();
    (0..p).map(|x| pow_mod(x, e as u64, p)).collect()
}

pub fn inverse_mod(a: i64, m: i64) -> Option<i64> {
    let (g, x, _) = xgcd(a.rem_euclid(m), m);
    if g == 1 {
        Some(x.rem_euclid(m))
    } else {
        None
    }
}

/// Extended gcd: returns `(g, x, y)` with `a x + b y = g >= 0`.
pub fn xgcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    num_integer::gcd(a, b)
}

pub fn is_squarefree(n: i64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n.unsigned_abs();
    let mut q = 2u64;
    while q * q <= m {
        if m % q == 0 {
            m /= q;
            if m % q == 0 {
                return false;
            }
        }
        q += 1;
    }
    true
}

/// The squarefree integer in the square class of `n`, keeping the sign.
pub fn squarefree_part(n: i64) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidArgument("squarefree part of 0".into()));
    }
    let mut m = n.unsigned_abs();
    let mut out = 1u64;
    let mut q = 2u64;
    while q * q <= m {
        let mut e = 0;
        while m % q == 0 {
            m /= q;
            e += 1;
        }
        if e % 2 == 1 {
            out *= q;
        }
        q += 1;
    }
    out *= m;
    Ok(n.signum() * out as i64)
}

pub fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q * q <= n {
        if n % q == 0 {
            let mut e = 0;
            while n % q == 0 {
                n /= q;
                e += 1;
            }
            out.push((q, e));
        }
        q += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).take_while(|q| q * q <= n).filter(|q| n % q == 0).collect();
    let upper: Vec<u64> = out.iter().rev().map(|q| n / q).filter(|&q| q * q != n).collect();
    out.extend(upper);
    out
}

pub fn euler_phi(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}
