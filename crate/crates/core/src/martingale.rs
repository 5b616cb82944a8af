//! Normal states given by densities, and the martingale predicate
//! `σ(a M_t a*) = σ(a M_s a*)` for all `a ∈ A_s`, `s ≤ t`.
//!
//! The universally quantified condition is reduced by complex polarization: the
//! sesquilinear form `(x, y) ↦ σ(x ΔM y*)` on `A_s` vanishes on the diagonal iff it
//! vanishes identically, iff `σ(b_i ΔM b_j*) = 0` for every ordered pair of basis
//! vectors. Consecutive grid points suffice because increments telescope and the
//! filtration is increasing. No conditional expectation with respect to `σ` is ever
//! formed.

use alloc::format;

use num_complex::Complex64;

use crate::algebra::{operator_norm, AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::ftap::payoff_subspace;
use crate::integration::{AdaptedProcess, TradingStrategy};

/// The normal state `σ(x) = τ(ρ x)` for a density `ρ ⪰ 0` with `τ(ρ) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    density: AlgebraElement,
    min_eigenvalue: f64,
}

impl State {
    /// Validates `density` (self-adjoint, `⪰ −tol`, unit trace) and stores its
    /// self-adjoint part.
    pub fn new(alg: &MultiMatrixAlgebra, density: AlgebraElement, tol: f64) -> Result<Self> {
        alg.check(&density)
            .map_err(|e| Error::InvalidState(format!("density shape: {e}")))?;
        let defect = density.self_adjoint_defect();
        if defect > tol * density.max_abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "density is not self-adjoint (defect {defect:.3e})"
            )));
        }
        let density = density.hermitian_part();
        let min_eigenvalue = alg.min_eigenvalue(&density)?;
        if min_eigenvalue < -tol {
            return Err(Error::InvalidState(format!(
                "density has negative eigenvalue {min_eigenvalue:.3e}"
            )));
        }
        let t = alg.tau(&density).re;
        if (t - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("density has trace {t}, expected 1")));
        }
        Ok(Self {
            density,
            min_eigenvalue,
        })
    }

    /// The trace `τ` itself (`ρ = I`).
    pub fn tracial(alg: &MultiMatrixAlgebra) -> Self {
        Self {
            density: alg.identity(),
            min_eigenvalue: 1.0,
        }
    }

    pub fn density(&self) -> &AlgebraElement {
        &self.density
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Faithful iff the density is strictly positive with margin `tol_pos`.
    pub fn is_faithful(&self, tol_pos: f64) -> bool {
        self.min_eigenvalue >= tol_pos
    }

    /// `σ(x) = τ(ρ x)`
    pub fn expectation(&self, alg: &MultiMatrixAlgebra, x: &AlgebraElement) -> Result<Complex64> {
        alg.check(x)?;
        Ok(alg.tau_product(&self.density, x))
    }

    fn check_algebra(&self, alg: &MultiMatrixAlgebra) -> Result<()> {
        alg.check(&self.density)
            .map_err(|e| Error::InvalidState(format!("state does not live on this algebra: {e}")))
    }
}

/// Outcome of a martingale test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleCheck {
    pub holds: bool,
    /// Largest absolute residual encountered.
    pub max_residual: f64,
    /// Largest residual divided by its threshold; `holds` iff this is `≤ 1`.
    pub worst_ratio: f64,
    /// Interval (or payoff generator) index of the worst ratio.
    pub worst_index: Option<usize>,
}

impl MartingaleCheck {
    fn new() -> Self {
        Self {
            holds: true,
            max_residual: 0.0,
            worst_ratio: 0.0,
            worst_index: None,
        }
    }

    fn record(&mut self, index: usize, residual: f64, threshold: f64) {
        self.max_residual = self.max_residual.max(residual);
        let ratio = residual / threshold;
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst_index = Some(index);
        }
        if residual > threshold {
            self.holds = false;
        }
    }
}

/// Tests whether `m` is a martingale under `state`. Residuals at interval `k` are
/// compared against `tol · (1 + ‖ΔM_k‖_∞)`.
pub fn is_martingale(m: &AdaptedProcess, state: &State, tol: f64) -> Result<MartingaleCheck> {
    let alg = m.algebra();
    state.check_algebra(alg)?;
    m.ensure_adapted(tol)?;
    let rho = state.density();
    let mut check = MartingaleCheck::new();
    for k in 0..m.filtration().num_steps() {
        let dm = m.increment(k);
        if dm.is_zero() {
            continue;
        }
        let threshold = tol * (1.0 + operator_norm(&dm));
        let basis = m.filtration().level(k).basis();
        let mut worst: f64 = 0.0;
        for bi in basis {
            let left = &(rho * bi) * &dm;
            for bj in basis {
                worst = worst.max(alg.inner(bj, &left).norm());
            }
        }
        check.record(k, worst, threshold);
    }
    Ok(check)
}

/// Tests `σ[(H ♯ X)_∞] = 0` on every generator of the strategy-payoff subspace.
/// Agrees with [`is_martingale`] (they are equivalent characterizations).
pub fn zero_integral_criterion(
    x: &AdaptedProcess,
    state: &State,
    tol: f64,
) -> Result<MartingaleCheck> {
    let alg = x.algebra();
    state.check_algebra(alg)?;
    let payoffs = payoff_subspace(x)?;
    let scale = (0..x.filtration().num_steps())
        .map(|k| operator_norm(&x.increment(k)))
        .fold(0.0, f64::max);
    let threshold = tol * (1.0 + scale);
    let mut check = MartingaleCheck::new();
    for (i, k) in payoffs.basis().iter().enumerate() {
        let v = alg.tau_product(state.density(), k).norm();
        check.record(i, v, threshold);
    }
    Ok(check)
}

/// Builds the running integral `t_k ↦ (H ♯ X)_{t_k}` and tests it with
/// [`is_martingale`].
pub fn integral_martingale_check(
    h: &TradingStrategy,
    x: &AdaptedProcess,
    state: &State,
    tol: f64,
) -> Result<MartingaleCheck> {
    let y = h.running_integral(x)?;
    is_martingale(&y, state, tol)
}
