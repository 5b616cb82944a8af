//! Deciding no free lunch versus existence of a faithful martingale state, with a
//! certificate either way.

mod classical;
mod lmi;
mod payoff;
mod solve;
mod supergradient;
mod verdict;

pub use classical::{classical_oracle, ClassicalVerdict};
pub use lmi::{BarrierOptions, BarrierSolver, MaxMinSolution, MinEigenvalueMaximizer};
pub use payoff::{payoff_subspace, PayoffGenerator, PayoffReport, PayoffSubspace};
pub use solve::{
    best_payoff_in, find_arbitrage, find_martingale_state, martingale_state_in, ArbitrageSolution,
    MartingaleStateSolution, SolverKind, SolverOptions, DEFAULT_TOL_POS,
};
pub use supergradient::SupergradientSolver;
pub use verdict::{
    check_nfl, verify_certificate, ArbitrageCertificate, Bound, CertificateReport, Check, EmsCertificate,
    Outcome, Verdict,
};
