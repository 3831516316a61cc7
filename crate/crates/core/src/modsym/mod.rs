//! Plus-quotient modular symbols for Gamma0(N) in even weight.

pub mod boundary;
pub mod degeneracy;
pub mod dims;
pub mod hecke;
pub mod newform;
pub mod p1;
pub mod space;

pub use boundary::{cuspidal_subspace, Cusp};
pub use degeneracy::new_subspace;
pub use dims::{dim_cusp_forms, dim_new_cusp_forms};
pub use hecke::{heilbronn_merel, LinearOperator};
pub use space::{Limits, ManinSymbol, ModularSymbols};
pub use newform::{rational_newforms, weil_bound, Newform, NewformDecomposition};
