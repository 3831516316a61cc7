//! Point counts on a twisted Schoen quintic, rational newforms from modular
//! symbols, and Serre-style matching of compatible systems against them.

pub mod counting;
pub mod error;
pub mod ffarith;
pub mod linalg;
pub mod modsym;
pub mod serre;
pub mod twist;

pub use error::{Error, Result};
