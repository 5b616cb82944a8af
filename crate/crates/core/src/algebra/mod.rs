//! Finite-dimensional W*-probability spaces.
//!
//! Every finite von Neumann algebra carrying a faithful tracial state is a direct sum
//! of full matrix algebras `M_{n_1} ⊕ … ⊕ M_{n_K}` with the trace
//! `τ(x) = Σ_k w_k tr(x_k)`, where `w_k > 0` and `Σ_k w_k n_k = 1`. That normal form is
//! the data model here: [`MultiMatrixAlgebra`] holds the block sizes and weights and
//! [`AlgebraElement`] holds one complex matrix per block.

mod coords;
mod element;
mod filtration;
mod subalgebra;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) use coords::{dot, norm};
pub use coords::{orthonormalize_real, PivotedBasis, RealGramSchmidt};
pub use element::{AlgebraElement, Block};
pub use filtration::{Filtration, FiltrationReport, LevelReport};
pub use subalgebra::{make_subalgebra, Subalgebra, SubalgebraReport};

/// Default absolute tolerance for predicate checks on GNS norms and eigenvalues.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A direct sum of matrix blocks with a weighted normalized trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMatrixAlgebra {
    block_dims: Vec<usize>,
    trace_weights: Vec<f64>,
}

impl MultiMatrixAlgebra {
    /// Builds the algebra, rescaling the weights so that `τ(I) = 1`.
    pub fn new(block_dims: Vec<usize>, trace_weights: Vec<f64>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        if block_dims.len() != trace_weights.len() {
            return Err(Error::InvalidAlgebra(format!(
                "{} blocks but {} trace weights",
                block_dims.len(),
                trace_weights.len()
            )));
        }
        if let Some(k) = block_dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidAlgebra(format!("block {k} has dimension 0")));
        }
        if let Some(k) = trace_weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidAlgebra(format!(
                "trace weight {k} is {}, must be positive",
                trace_weights[k]
            )));
        }
        let total: f64 = block_dims
            .iter()
            .zip(&trace_weights)
            .map(|(&n, &w)| n as f64 * w)
            .sum();
        // Already-normalized weights are kept bit-for-bit so files round-trip.
        let trace_weights = if (total - 1.0).abs() <= 1e-14 {
            trace_weights
        } else {
            trace_weights.iter().map(|w| w / total).collect()
        };
        Ok(Self {
            block_dims,
            trace_weights,
        })
    }

    /// Weights proportional to block size: `w_k = n_k / Σ_j n_j²`.
    pub fn with_default_weights(block_dims: Vec<usize>) -> Result<Self> {
        let sq: usize = block_dims.iter().map(|n| n * n).sum();
        let weights = block_dims.iter().map(|&n| n as f64 / sq.max(1) as f64).collect();
        Self::new(block_dims, weights)
    }

    /// The full matrix algebra `M_n` with normalized trace `tr / n`.
    pub fn matrix(n: usize) -> Result<Self> {
        Self::with_default_weights(alloc::vec![n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn trace_weights(&self) -> &[f64] {
        &self.trace_weights
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Size of the underlying Hilbert space, `Σ n_k`.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Complex dimension of the algebra, `Σ n_k²` (also the real dimension of its
    /// self-adjoint part).
    pub fn algebra_dim(&self) -> usize {
        self.block_dims.iter().map(|n| n * n).sum()
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement::identity(&self.block_dims)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement::zeros(&self.block_dims)
    }

    /// Matrix unit `e_ij` inside block `block`.
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> Result<AlgebraElement> {
        let n = *self
            .block_dims
            .get(block)
            .ok_or_else(|| Error::Domain(format!("block index {block} out of range")))?;
        if i >= n || j >= n {
            return Err(Error::Domain(format!(
                "matrix unit ({i}, {j}) out of range for block of size {n}"
            )));
        }
        let mut x = self.zero();
        x.blocks_mut()[block][(i, j)] = Complex64::new(1.0, 0.0);
        Ok(x)
    }

    /// Checks that `x` has this algebra's block structure.
    pub fn check(&self, x: &AlgebraElement) -> Result<()> {
        let blocks = x.blocks();
        if blocks.len() != self.block_dims.len() {
            return Err(Error::BlockCount {
                expected: self.block_dims.len(),
                found: blocks.len(),
            });
        }
        for (k, (b, &n)) in blocks.iter().zip(&self.block_dims).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::BlockShape {
                    block: k,
                    expected: n,
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
        }
        Ok(())
    }

    /// `τ(x) = Σ_k w_k tr(x_k)`.
    pub fn trace(&self, x: &AlgebraElement) -> Result<Complex64> {
        self.check(x)?;
        Ok(self.tau(x))
    }

    pub(crate) fn tau(&self, x: &AlgebraElement) -> Complex64 {
        x.blocks()
            .iter()
            .zip(&self.trace_weights)
            .map(|(b, &w)| b.trace() * w)
            .sum()
    }

    /// `τ(x y)` without forming the product.
    pub(crate) fn tau_product(&self, x: &AlgebraElement, y: &AlgebraElement) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), &w) in x.blocks().iter().zip(y.blocks()).zip(&self.trace_weights) {
            let n = a.nrows();
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    s += a[(i, j)] * b[(j, i)];
                }
            }
            acc += s * w;
        }
        acc
    }

    /// GNS inner product `⟨x, y⟩ = τ(x* y)`.
    pub fn gns_inner(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<Complex64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.inner(x, y))
    }

    pub(crate) fn inner(&self, x: &AlgebraElement, y: &AlgebraElement) -> Complex64 {
        x.blocks()
            .iter()
            .zip(y.blocks())
            .zip(&self.trace_weights)
            .map(|((a, b), &w)| a.dotc(b) * w)
            .sum()
    }

    /// `‖x‖_2 = τ(x* x)^{1/2}`, unchecked.
    pub(crate) fn norm2(&self, x: &AlgebraElement) -> f64 {
        let s: f64 = x
            .blocks()
            .iter()
            .zip(&self.trace_weights)
            .map(|(b, &w)| b.norm_squared() * w)
            .sum();
        libm::sqrt(s)
    }

    /// Non-commutative `L^p` norm `τ(|x|^p)^{1/p}`; `p = ∞` gives the operator norm.
    pub fn lp_norm(&self, x: &AlgebraElement, p: f64) -> Result<f64> {
        self.check(x)?;
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
        }
        if p == 2.0 {
            return Ok(self.norm2(x));
        }
        if p.is_infinite() {
            return Ok(operator_norm(x));
        }
        let mut s = 0.0;
        for (b, &w) in x.blocks().iter().zip(&self.trace_weights) {
            let sv = b.clone().singular_values();
            s += w * sv.iter().map(|&v| libm::pow(v, p)).sum::<f64>();
        }
        Ok(libm::pow(s, 1.0 / p))
    }

    /// Eigenvalues of the self-adjoint part of `x`, all blocks, ascending.
    pub fn eigenvalues(&self, x: &AlgebraElement) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out: Vec<f64> = x
            .blocks()
            .iter()
            .flat_map(|b| hermitian_eigenvalues(b).into_iter())
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        Ok(out)
    }

    /// Smallest eigenvalue of the self-adjoint part of `x` over all blocks.
    pub fn min_eigenvalue(&self, x: &AlgebraElement) -> Result<f64> {
        self.check(x)?;
        Ok(min_eigenvalue(x))
    }

    /// `x ⪰ 0` up to `tol`. Non-self-adjoint input (beyond `tol`) is a domain error.
    pub fn check_positive(&self, x: &AlgebraElement, tol: f64) -> Result<bool> {
        self.check(x)?;
        let defect = x.self_adjoint_defect();
        if defect > tol * x.max_abs().max(1.0) {
            return Err(Error::NotSelfAdjoint { residual: defect });
        }
        Ok(min_eigenvalue(x) >= -tol)
    }

    /// Trace-preserving conditional expectation onto `sub`, realized as the
    /// GNS-orthogonal projection.
    pub fn conditional_expectation(
        &self,
        x: &AlgebraElement,
        sub: &Subalgebra,
    ) -> Result<AlgebraElement> {
        self.check(x)?;
        sub.check_algebra(self)?;
        Ok(sub.project(self, x))
    }
}

/// Operator norm: largest singular value over all blocks.
pub(crate) fn operator_norm(x: &AlgebraElement) -> f64 {
    x.blocks()
        .iter()
        .map(|b| b.clone().singular_values().max())
        .fold(0.0, f64::max)
}

pub(crate) fn hermitian_eigenvalues(b: &Block) -> Vec<f64> {
    let h = (b + b.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Smallest eigenvalue of the self-adjoint part, over all blocks.
pub(crate) fn min_eigenvalue(x: &AlgebraElement) -> f64 {
    x.blocks()
        .iter()
        .map(|b| {
            hermitian_eigenvalues(b)
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue with a unit eigenvector and the block it lives in.
pub(crate) fn min_eigenpair(x: &AlgebraElement) -> (f64, usize, DVector<Complex64>) {
    let mut best = (f64::INFINITY, 0, DVector::zeros(0));
    for (k, b) in x.blocks().iter().enumerate() {
        let h = (b + b.adjoint()).scale(0.5);
        let eig = h.symmetric_eigen();
        let (i, &v) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("blocks are non-empty");
        if v < best.0 {
            best = (v, k, eig.eigenvectors.column(i).into_owned());
        }
    }
    best
}
