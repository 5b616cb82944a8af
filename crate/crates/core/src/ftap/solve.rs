//! The two sides of the decision.
//!
//! Martingale side: maximize `λ_min(ρ)` over self-adjoint `ρ` with `τ(ρ) = 1` and
//! `τ(ρ k_i) = 0` for an orthonormal basis `{k_i}` of `K^s`.
//! Arbitrage side: maximize `λ_min(k)` over `k ∈ K^s` with `τ(k) = 1`.
//!
//! Both are max-min-eigenvalue problems over an affine family. The martingale side is
//! solved either directly over the affine set or, when `K^s` is the smaller space,
//! through its dual
//!
//! ```text
//! minimize 1 − Σ_i β_i τ(k_i)   subject to   I + Σ_i β_i (k_i − τ(k_i) I) ⪰ 0,
//! ```
//!
//! whose barrier dual matrix is `ρ − λ* I`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::lmi::{BarrierOptions, BarrierSolver, Lmi, MinEigenvalueMaximizer};
use super::payoff::{payoff_subspace, PayoffSubspace};
use super::supergradient::SupergradientSolver;
use crate::algebra::{dot, min_eigenvalue, norm, AlgebraElement, MultiMatrixAlgebra, RealGramSchmidt, DEFAULT_TOL};
use crate::error::Result;
use crate::integration::{AdaptedProcess, TradingStrategy};
use crate::martingale::State;

/// Default strict-positivity margin for faithfulness.
pub const DEFAULT_TOL_POS: f64 = 1e-6;

const COMPLEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Log-barrier interior point.
    #[default]
    Barrier,
    /// Diminishing-step supergradient ascent. Slow and inaccurate near the
    /// boundary; kept as a dependency-light cross-check.
    Supergradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Feasibility tolerance.
    pub tol: f64,
    /// Minimum eigenvalue a density needs to count as faithful.
    pub tol_pos: f64,
    pub solver: SolverKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            tol_pos: DEFAULT_TOL_POS,
            solver: SolverKind::Barrier,
        }
    }
}

impl SolverOptions {
    fn maximizer(&self) -> Box<dyn MinEigenvalueMaximizer> {
        match self.solver {
            SolverKind::Barrier => Box::new(BarrierSolver::default()),
            SolverKind::Supergradient => Box::new(SupergradientSolver::default()),
        }
    }
}

/// Maximizer of the martingale-side program.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleStateSolution {
    /// Satisfies the affine constraints to rounding; not necessarily positive.
    pub density: AlgebraElement,
    /// `λ_min(density)`.
    pub lambda: f64,
    /// Upper bound on the true optimum, when the solver provides one.
    pub upper_bound: Option<f64>,
}

impl MartingaleStateSolution {
    pub fn state(&self, alg: &MultiMatrixAlgebra, tol: f64) -> Result<State> {
        State::new(alg, self.density.clone(), tol)
    }
}

/// Maximizer of the arbitrage-side program.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageSolution {
    pub strategy: TradingStrategy,
    /// `∫ strategy ♯ dX`, normalized to `τ(k) = 1`.
    pub payoff: AlgebraElement,
    /// Coordinates of `payoff` in the payoff-subspace basis.
    pub coefficients: Vec<f64>,
    /// `λ_min(payoff)`.
    pub mu: f64,
    pub upper_bound: Option<f64>,
}

/// Returns `None` when no density satisfies the affine constraints (`I ∈ K^s`).
/// Otherwise the maximizer is returned whatever the sign of `λ*`.
pub fn find_martingale_state(
    x: &AdaptedProcess,
    opts: &SolverOptions,
) -> Result<Option<MartingaleStateSolution>> {
    martingale_state_in(&payoff_subspace(x)?, opts)
}

/// Like [`find_martingale_state`] on a precomputed payoff subspace.
pub fn martingale_state_in(
    k: &PayoffSubspace,
    opts: &SolverOptions,
) -> Result<Option<MartingaleStateSolution>> {
    let alg = k.algebra();
    let dim = alg.algebra_dim();
    let iota = alg.hermitian_coords(&alg.identity());
    let mut span = RealGramSchmidt::new();
    for q in k.coords() {
        span.push_orthonormal(q.clone());
    }
    let p = span.project(&iota);
    let tilde: Vec<f64> = iota.iter().zip(&p).map(|(a, b)| a - b).collect();
    let tn = norm(&tilde);
    if tn <= opts.tol {
        return Ok(None);
    }
    let r = k.dim();
    let free = dim - r - 1;
    if free == 0 {
        let rho0: Vec<f64> = tilde.iter().map(|v| v / (tn * tn)).collect();
        let density = alg.from_hermitian_coords(&rho0);
        let lambda = min_eigenvalue(&density);
        return Ok(Some(MartingaleStateSolution {
            density,
            lambda,
            upper_bound: Some(lambda),
        }));
    }

    let (density, upper_bound) = if opts.solver == SolverKind::Barrier && r < free {
        dual_route(k)?
    } else {
        primal_route(alg, span, &tilde, &*opts.maximizer())?
    };
    let density = project_affine(alg, k, &tilde, &density);
    let lambda = min_eigenvalue(&density);
    Ok(Some(MartingaleStateSolution {
        density,
        lambda,
        upper_bound,
    }))
}

fn primal_route(
    alg: &MultiMatrixAlgebra,
    mut span: RealGramSchmidt,
    tilde: &[f64],
    maximizer: &dyn MinEigenvalueMaximizer,
) -> Result<(AlgebraElement, Option<f64>)> {
    let tn = norm(tilde);
    let rho0: Vec<f64> = tilde.iter().map(|v| v / (tn * tn)).collect();
    span.push_orthonormal(tilde.iter().map(|v| v / tn).collect());
    let directions: Vec<AlgebraElement> = span
        .complement(alg.algebra_dim(), COMPLEMENT_TOL)
        .iter()
        .map(|d| alg.from_hermitian_coords(d))
        .collect();
    let offset = alg.from_hermitian_coords(&rho0);
    let sol = maximizer.maximize(&offset, &directions)?;
    let mut rho = offset;
    for (c, d) in sol.coefficients.iter().zip(&directions) {
        rho.axpy_real(*c, d);
    }
    Ok((rho, sol.upper_bound))
}

fn dual_route(k: &PayoffSubspace) -> Result<(AlgebraElement, Option<f64>)> {
    let alg = k.algebra();
    let id = alg.identity();
    let traces = k.traces();
    let coefficients: Vec<AlgebraElement> = k
        .basis()
        .iter()
        .zip(&traces)
        .map(|(ki, t)| {
            let mut g = ki.clone();
            g.axpy_real(-t, &id);
            g
        })
        .collect();
    let lmi = Lmi {
        constant: &id,
        coefficients: &coefficients,
        objective: &traces,
    };
    let sol = lmi.maximize(vec![0.0; k.dim()], &BarrierOptions::default())?;
    let upper = 1.0 - dot(&traces, &sol.x);
    let blocks = sol
        .dual
        .blocks()
        .iter()
        .zip(alg.trace_weights())
        .map(|(z, w)| z.scale(1.0 / w))
        .collect();
    let mut rho = AlgebraElement::from_blocks(blocks).hermitian_part();
    let nu = 1.0 - alg.tau(&rho).re;
    rho.axpy_real(nu, &id);
    Ok((rho, Some(upper)))
}

/// Orthogonal projection (GNS) of `rho` onto `{τ(ρ) = 1, τ(ρ k_i) = 0}`; `tilde` is
/// the component of `I` orthogonal to `K^s`.
fn project_affine(
    alg: &MultiMatrixAlgebra,
    k: &PayoffSubspace,
    tilde: &[f64],
    rho: &AlgebraElement,
) -> AlgebraElement {
    let mut v = alg.hermitian_coords(&rho.hermitian_part());
    for _ in 0..2 {
        for q in k.coords() {
            let c = dot(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
    let iota = alg.hermitian_coords(&alg.identity());
    let shift = (1.0 - dot(&v, &iota)) / dot(tilde, tilde);
    for (vi, ti) in v.iter_mut().zip(tilde) {
        *vi += shift * ti;
    }
    alg.from_hermitian_coords(&v)
}

/// Best arbitrage candidate: the maximizer of `λ_min(k)` over `k ∈ K^s`, `τ(k) = 1`,
/// whatever the sign of the margin. `None` when every payoff is traceless (then no
/// nonzero positive payoff exists).
pub fn best_payoff_in(k: &PayoffSubspace, opts: &SolverOptions) -> Result<Option<ArbitrageSolution>> {
    let traces = k.traces();
    let tn = norm(&traces);
    if tn <= opts.tol {
        return Ok(None);
    }
    let r = k.dim();
    let c0: Vec<f64> = traces.iter().map(|t| t / (tn * tn)).collect();
    let mut span = RealGramSchmidt::new();
    span.push_orthonormal(traces.iter().map(|t| t / tn).collect());
    let dirs = span.complement(r, COMPLEMENT_TOL);
    let offset = k.combination(&c0);
    let directions: Vec<AlgebraElement> = dirs.iter().map(|d| k.combination(d)).collect();
    let sol = opts.maximizer().maximize(&offset, &directions)?;
    let mut coefficients = c0;
    for (y, d) in sol.coefficients.iter().zip(&dirs) {
        for (c, di) in coefficients.iter_mut().zip(d) {
            *c += y * di;
        }
    }
    let t = dot(&coefficients, &traces);
    for c in &mut coefficients {
        *c /= t;
    }
    let payoff = k.combination(&coefficients);
    Ok(Some(ArbitrageSolution {
        strategy: k.strategy(&coefficients),
        mu: min_eigenvalue(&payoff),
        payoff,
        coefficients,
        upper_bound: sol.upper_bound,
    }))
}

/// An arbitrage: a strategy whose payoff `k` has `τ(k) = 1` and `λ_min(k) ≥ −tol`.
pub fn find_arbitrage(x: &AdaptedProcess, opts: &SolverOptions) -> Result<Option<ArbitrageSolution>> {
    let k = payoff_subspace(x)?;
    Ok(best_payoff_in(&k, opts)?.filter(|a| a.mu >= -opts.tol))
}
