//! Instance generators: classical trees embedded as diagonal matrices, a tensor
//! quantum binomial market, and seeded random markets.

mod classical;
mod quantum;
mod random;

pub use classical::{embed_classical, ClassicalTree, TreeNode, MAX_BRANCHING, MAX_PERIODS};
pub use quantum::{quantum_binomial, QuantumBinomialSpec, MAX_QUANTUM_PERIODS};
pub use random::{
    random_element_in, random_hermitian_in, random_market, random_martingale_market, random_state,
    random_strategy, MAX_TOTAL_DIM,
};

use alloc::sync::Arc;

use crate::algebra::Filtration;
use crate::integration::AdaptedProcess;

/// A generated instance.
pub type Market = (Arc<Filtration>, AdaptedProcess);
