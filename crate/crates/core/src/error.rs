use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bad reduction at p = {p} for d = {d}")]
    BadReduction { d: i64, p: u64 },
    #[error("Weil bound violated at p = {p}: |{a_p}| > 2 p^(3/2)")]
    WeilBoundViolation { p: u64, a_p: i64 },
    #[error("trace {a_p} at p = {p} disagrees with the point-count congruence {residue} mod p")]
    CongruenceMismatch { p: u64, a_p: i64, residue: u64 },
    #[error("level {level} / weight {weight} outside configured limits")]
    OutOfRange { level: u64, weight: u32 },
    #[error("Hecke operators failed to split a block of dimension {dim} after {primes} primes")]
    Unsplit { dim: usize, primes: usize },
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
