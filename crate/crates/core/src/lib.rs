//! Finite-dimensional non-commutative probability: filtered matrix algebras,
//! stochastic integrals of simple adapted biprocesses, martingale states, and a
//! certificate-producing no-free-lunch / martingale-state decision procedure.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod error;
pub mod ftap;
pub mod integration;
pub mod martingale;
pub mod models;

pub use algebra::{AlgebraElement, Filtration, MultiMatrixAlgebra, Subalgebra};
pub use error::{Error, Result};
pub use ftap::{check_nfl, verify_certificate, Outcome, SolverOptions, Verdict};
pub use integration::{AdaptedProcess, SimpleBiprocess, TradingStrategy};
pub use martingale::{is_martingale, State};
pub use num_complex::Complex64;
