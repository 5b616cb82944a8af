use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{
    orthonormalize_real, AlgebraElement, Filtration, MultiMatrixAlgebra, DEFAULT_TOL,
};
use crate::error::Result;
use crate::integration::{AdaptedProcess, TradingStrategy};

/// Gram–Schmidt rank tolerance for the payoff subspace.
const RANK_TOL: f64 = 1e-8;

/// A one-step position `a ⊗ a*` held over interval `step`; its payoff is
/// `a (X_{t_{step+1}} − X_{t_step}) a*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffGenerator {
    pub step: usize,
    pub position: AlgebraElement,
}

/// The real subspace `K^s` of strategy payoffs, with an orthonormal self-adjoint
/// basis (for `Re τ(h₁ h₂)`) and each basis vector's provenance as a combination of
/// one-step payoffs.
#[derive(Debug, Clone)]
pub struct PayoffSubspace {
    filtration: Arc<Filtration>,
    basis: Vec<AlgebraElement>,
    coords: Vec<Vec<f64>>,
    generators: Vec<PayoffGenerator>,
    expansion: Vec<Vec<f64>>,
}

/// Which polarization combination of level-basis vectors a candidate uses.
#[derive(Debug, Clone, Copy)]
enum Combo {
    Single(usize),
    Sum(usize, usize),
    ISum(usize, usize),
}

fn position(basis: &[AlgebraElement], combo: Combo) -> AlgebraElement {
    match combo {
        Combo::Single(i) => basis[i].clone(),
        Combo::Sum(i, j) => &basis[i] + &basis[j],
        Combo::ISum(i, j) => {
            let mut a = basis[i].clone();
            a.axpy(Complex64::new(0.0, 1.0), &basis[j]);
            a
        }
    }
}

/// Computes `K^s` for `x`.
///
/// For each interval `k` with level basis `{b_i}` the candidate positions are
/// `b_i`, `b_i + b_j` and `b_i + i·b_j` (`i < j`); their payoffs `a ΔX_k a*` span
/// `{a ΔX_k a* : a ∈ A_{t_k}}` over the reals by polarization. All candidates are
/// orthonormalized together with column pivoting.
pub fn payoff_subspace(x: &AdaptedProcess) -> Result<PayoffSubspace> {
    x.ensure_adapted(DEFAULT_TOL)?;
    let filtration = x.filtration().clone();
    let alg = filtration.algebra();

    let mut tags: Vec<(usize, Combo)> = Vec::new();
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for k in 0..filtration.num_steps() {
        let dx = x.increment(k);
        if dx.is_zero() {
            continue;
        }
        let basis = filtration.level(k).basis();
        let d = basis.len();
        let mut push = |combo: Combo| {
            let a = position(basis, combo);
            let g = dx.sandwich(&a, &a.adjoint());
            cands.push(alg.hermitian_coords(&g));
            tags.push((k, combo));
        };
        for i in 0..d {
            push(Combo::Single(i));
        }
        for i in 0..d {
            for j in i + 1..d {
                push(Combo::Sum(i, j));
                push(Combo::ISum(i, j));
            }
        }
    }

    let pivoted = orthonormalize_real(&cands, RANK_TOL);
    let generators = pivoted
        .selected
        .iter()
        .map(|&c| {
            let (step, combo) = tags[c];
            PayoffGenerator {
                step,
                position: position(filtration.level(step).basis(), combo),
            }
        })
        .collect();
    let basis = pivoted
        .vectors
        .iter()
        .map(|v| alg.from_hermitian_coords(v))
        .collect();
    Ok(PayoffSubspace {
        filtration,
        basis,
        coords: pivoted.vectors,
        generators,
        expansion: pivoted.expansion,
    })
}

/// Residuals of the [`PayoffSubspace`] invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffReport {
    pub dim: usize,
    pub orthonormality_residual: f64,
    pub self_adjoint_residual: f64,
    /// `max_i ‖∫ S_i ♯ dX − k_i‖_2` where `S_i` is the strategy rebuilt from provenance.
    pub reconstruction_residual: f64,
    pub passed: bool,
}

impl PayoffSubspace {
    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        self.filtration.algebra()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    /// Basis vectors in real self-adjoint coordinates.
    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn generators(&self) -> &[PayoffGenerator] {
        &self.generators
    }

    /// `basis[i] = Σ_l expansion[i][l] · payoff(generators[l])`.
    pub fn expansion(&self) -> &[Vec<f64>] {
        &self.expansion
    }

    /// `Σ_i c_i k_i`
    pub fn combination(&self, coeffs: &[f64]) -> AlgebraElement {
        assert_eq!(coeffs.len(), self.dim(), "coefficient count mismatch");
        let mut v = vec![0.0; self.algebra().algebra_dim()];
        for (c, q) in coeffs.iter().zip(&self.coords) {
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi += c * qi;
            }
        }
        self.algebra().from_hermitian_coords(&v)
    }

    /// `τ(k_i)` for every basis vector.
    pub fn traces(&self) -> Vec<f64> {
        let alg = self.algebra();
        self.basis.iter().map(|k| alg.tau(k).re).collect()
    }

    /// A trading strategy whose payoff is `Σ_i c_i k_i`.
    pub fn strategy(&self, coeffs: &[f64]) -> TradingStrategy {
        assert_eq!(coeffs.len(), self.dim(), "coefficient count mismatch");
        let mut weights = vec![0.0; self.generators.len()];
        for (c, row) in coeffs.iter().zip(&self.expansion) {
            for (w, e) in weights.iter_mut().zip(row) {
                *w += c * e;
            }
        }
        let mut steps: Vec<Vec<(f64, AlgebraElement)>> = vec![Vec::new(); self.filtration.num_steps()];
        for (w, g) in weights.into_iter().zip(&self.generators) {
            if w != 0.0 {
                steps[g.step].push((w, g.position.clone()));
            }
        }
        TradingStrategy::new(self.filtration.clone(), steps)
            .expect("provenance positions come from the filtration levels")
    }

    pub fn validate(&self, x: &AdaptedProcess, tol: f64) -> Result<PayoffReport> {
        let alg = self.algebra();
        let mut orthonormality_residual: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                orthonormality_residual =
                    orthonormality_residual.max((alg.tau_product(a, b).re - target).abs());
            }
        }
        let self_adjoint_residual = self
            .basis
            .iter()
            .map(|k| k.self_adjoint_defect())
            .fold(0.0, f64::max);
        let mut reconstruction_residual: f64 = 0.0;
        for i in 0..self.dim() {
            let mut e = vec![0.0; self.dim()];
            e[i] = 1.0;
            let y = self.strategy(&e).integral(x)?;
            reconstruction_residual = reconstruction_residual.max(alg.norm2(&(&y - &self.basis[i])));
        }
        Ok(PayoffReport {
            dim: self.dim(),
            orthonormality_residual,
            self_adjoint_residual,
            reconstruction_residual,
            passed: orthonormality_residual <= tol
                && self_adjoint_residual <= tol
                && reconstruction_residual <= tol,
        })
    }
}
