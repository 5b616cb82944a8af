//! Log-barrier interior-point method for
//!
//! ```text
//! maximize  c·x   subject to   F(x) = F_0 + Σ_j x_j G_j ⪰ 0
//! ```
//!
//! over block-diagonal Hermitian matrices. Each centering step maximizes
//! `t c·x + log det F(x)` by damped Newton; `t` grows geometrically until the
//! central-path gap bound `n / t` drops below the requested tolerance.
//! At a centered point `Z = F(x)^{-1} / t` is dual feasible, which is how the
//! martingale-state density is recovered from the dual problem.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::algebra::{AlgebraElement, Block};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Stop once `n / t` is below this.
    pub gap_tol: f64,
    /// Factor by which `t` grows between centerings.
    pub growth: f64,
    pub initial_t: f64,
    /// Centering stops when half the squared Newton decrement is below this.
    pub centering_tol: f64,
    pub max_newton_steps: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            growth: 10.0,
            initial_t: 1.0,
            centering_tol: 1e-12,
            max_newton_steps: 2_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub x: Vec<f64>,
    /// `F^{-1} / t` at the last well-centered iterate, blockwise (plain matrix
    /// trace pairing). It may trail `x` by a few orders of `t`.
    pub dual: AlgebraElement,
    /// Barrier parameter of `dual`.
    pub t: f64,
    pub newton_steps: usize,
}

type Chol = Cholesky<Complex64, Dyn>;

/// Newton steps allowed per centering.
const CENTERING_STEPS: usize = 50;
const DUAL_RESIDUAL: f64 = 1e-8;

pub(crate) struct Lmi<'a> {
    pub constant: &'a AlgebraElement,
    pub coefficients: &'a [AlgebraElement],
    pub objective: &'a [f64],
}

impl Lmi<'_> {
    fn slack(&self, x: &[f64]) -> AlgebraElement {
        let mut s = self.constant.clone();
        for (xi, g) in x.iter().zip(self.coefficients) {
            if *xi != 0.0 {
                s.axpy_real(*xi, g);
            }
        }
        s
    }

    /// Blockwise Cholesky factors, or `None` unless every block is positive
    /// definite. The complex factorization happily takes square roots of negative
    /// pivots, so the pivots are checked explicitly.
    fn factor(s: &AlgebraElement) -> Option<Vec<Chol>> {
        s.blocks()
            .iter()
            .map(|b| {
                let c = Cholesky::new(b.clone())?;
                let l = c.l_dirty();
                (0..l.nrows())
                    .all(|i| {
                        let p = l[(i, i)];
                        p.re > 0.0 && p.im.abs() < p.re
                    })
                    .then_some(c)
            })
            .collect()
    }

    fn log_det(chol: &[Chol]) -> f64 {
        chol.iter()
            .map(|c| {
                let l = c.l_dirty();
                (0..l.nrows()).map(|i| libm::log(l[(i, i)].re)).sum::<f64>() * 2.0
            })
            .sum()
    }

    /// Newton direction, squared decrement and the dual residual
    /// `max_j |tr(Z G_j) + c_j|` of `Z = F^{-1} / t`.
    fn newton(&self, t: f64, chol: &[Chol]) -> Option<(Vec<f64>, f64, f64)> {
        let m = self.coefficients.len();
        let width: usize = chol.iter().map(|c| 2 * c.l_dirty().nrows().pow(2)).sum();
        let mut rows = DMatrix::<f64>::zeros(m, width);
        let mut grad: Vec<f64> = self.objective.iter().map(|c| t * c).collect();
        let mut offset = 0;
        for (b, c) in chol.iter().enumerate() {
            let l = c.l();
            let n = l.nrows();
            for (j, g) in self.coefficients.iter().enumerate() {
                let y = l.solve_lower_triangular(&g.blocks()[b])?;
                let w = l.solve_lower_triangular(&y.adjoint())?;
                let mut col = offset;
                let mut tr = 0.0;
                for (k, z) in w.iter().enumerate() {
                    if k % (n + 1) == 0 {
                        tr += z.re;
                    }
                    rows[(j, col)] = z.re;
                    rows[(j, col + 1)] = z.im;
                    col += 2;
                }
                grad[j] += tr;
            }
            offset += 2 * n * n;
        }
        let hess = &rows * rows.transpose();
        let g = nalgebra::DVector::from_vec(grad.clone());
        let dir = match Cholesky::new(hess.clone()) {
            Some(c) => c.solve(&g),
            None => hess.lu().solve(&g)?,
        };
        let dec2: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let residual = grad.iter().fold(0.0, |a: f64, g| a.max(g.abs())) / t;
        Some((dir.iter().copied().collect(), dec2, residual))
    }

    pub fn maximize(&self, start: Vec<f64>, opts: &BarrierOptions) -> Result<LmiSolution> {
        let n_total: usize = self.constant.blocks().iter().map(|b| b.nrows()).sum();
        let mut x = start;
        let mut chol = Self::factor(&self.slack(&x))
            .ok_or_else(|| Error::Domain("barrier start is not strictly feasible".into()))?;
        let mut t = opts.initial_t;
        let mut steps = 0;
        let c_max = self.objective.iter().fold(0.0, |a: f64, c| a.max(c.abs()));
        // Roundoff floors the dual residual once F(x) is nearly singular, so the
        // reported dual comes from the last point where it was still small.
        let mut dual: Option<(Vec<Chol>, f64)> = None;
        loop {
            let mut residual = f64::INFINITY;
            let budget = (steps + CENTERING_STEPS).min(opts.max_newton_steps);
            while steps < budget {
                let Some((dir, dec2, r)) = self.newton(t, &chol) else {
                    break;
                };
                steps += 1;
                residual = r;
                if !(dec2 > 2.0 * opts.centering_tol) {
                    break;
                }
                // Compare barrier increments rather than values: at large t the
                // linear term swamps the log-det change.
                let ld0 = Self::log_det(&chol);
                let slope: f64 = self.objective.iter().zip(&dir).map(|(c, d)| c * d).sum();
                let mut s = 1.0;
                let mut accepted = None;
                while s > 1e-14 {
                    let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                    if cand == x {
                        break;
                    }
                    if let Some(c) = Self::factor(&self.slack(&cand)) {
                        let gain = t * s * slope + (Self::log_det(&c) - ld0);
                        if gain >= 0.25 * s * dec2 {
                            accepted = Some((cand, c));
                            break;
                        }
                    }
                    s *= 0.5;
                }
                match accepted {
                    Some((cand, c)) => {
                        x = cand;
                        chol = c;
                    }
                    None => break,
                }
                if x.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
                    return Err(Error::Domain("barrier iterates diverged".into()));
                }
            }
            if residual <= DUAL_RESIDUAL * (1.0 + c_max) {
                dual = Some((chol.clone(), t));
            }
            if n_total as f64 / t <= opts.gap_tol || steps >= opts.max_newton_steps {
                break;
            }
            t *= opts.growth;
        }
        let (dual_chol, t) = dual.unwrap_or((chol, t));
        let dual_blocks: Vec<Block> = dual_chol
            .iter()
            .map(|c| c.inverse().scale(1.0 / t))
            .collect();
        Ok(LmiSolution {
            x,
            dual: AlgebraElement::from_blocks(dual_blocks),
            t,
            newton_steps: steps,
        })
    }
}

/// Result of maximizing `λ_min(F_0 + Σ_j y_j G_j)` over `y`.
#[derive(Debug, Clone)]
pub struct MaxMinSolution {
    pub coefficients: Vec<f64>,
    /// `λ_min` at the returned coefficients.
    pub value: f64,
    /// An upper bound on the optimum when the method provides one.
    pub upper_bound: Option<f64>,
    pub iterations: usize,
}

/// Solver contract for `max_y λ_min(F_0 + Σ_j y_j G_j)`, a concave maximization.
pub trait MinEigenvalueMaximizer {
    fn maximize(&self, offset: &AlgebraElement, directions: &[AlgebraElement]) -> Result<MaxMinSolution>;
}

/// Interior-point solver: maximize `s` subject to `F(y) − s I ⪰ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BarrierSolver {
    pub options: BarrierOptions,
}

impl MinEigenvalueMaximizer for BarrierSolver {
    fn maximize(&self, offset: &AlgebraElement, directions: &[AlgebraElement]) -> Result<MaxMinSolution> {
        let m = directions.len();
        let dims = offset.block_dims();
        let mut coeffs: Vec<AlgebraElement> = directions.to_vec();
        coeffs.push(-&AlgebraElement::identity(&dims));
        let mut objective = vec![0.0; m + 1];
        objective[m] = 1.0;
        let mut start = vec![0.0; m + 1];
        start[m] = crate::algebra::min_eigenvalue(offset) - 1.0;
        let lmi = Lmi {
            constant: offset,
            coefficients: &coeffs,
            objective: &objective,
        };
        let sol = lmi.maximize(start, &self.options)?;
        let n_total: usize = dims.iter().sum();
        let coefficients = sol.x[..m].to_vec();
        let mut point = offset.clone();
        for (c, g) in coefficients.iter().zip(directions) {
            point.axpy_real(*c, g);
        }
        Ok(MaxMinSolution {
            value: crate::algebra::min_eigenvalue(&point),
            upper_bound: Some(sol.x[m] + n_total as f64 / sol.t),
            coefficients,
            iterations: sol.newton_steps,
        })
    }
}
