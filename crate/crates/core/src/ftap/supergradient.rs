use alloc::vec;
use alloc::vec::Vec;

use super::lmi::{MaxMinSolution, MinEigenvalueMaximizer};
use crate::algebra::{min_eigenpair, AlgebraElement};
use crate::error::Result;

/// Supergradient ascent on `y ↦ λ_min(F_0 + Σ_j y_j G_j)`.
///
/// The supergradient at `y` is `g_j = v* G_j v` for a unit eigenvector `v` of the
/// smallest eigenvalue. Steps are `step / √iter` along `g / ‖g‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupergradientSolver {
    pub step: f64,
    pub max_iterations: usize,
    /// Stop when the best value improved by less than `min_improvement` over this
    /// many iterations.
    pub window: usize,
    pub min_improvement: f64,
}

impl Default for SupergradientSolver {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_iterations: 20_000,
            window: 500,
            min_improvement: 1e-10,
        }
    }
}

fn point(offset: &AlgebraElement, directions: &[AlgebraElement], y: &[f64]) -> AlgebraElement {
    let mut p = offset.clone();
    for (c, g) in y.iter().zip(directions) {
        p.axpy_real(*c, g);
    }
    p
}

impl MinEigenvalueMaximizer for SupergradientSolver {
    fn maximize(&self, offset: &AlgebraElement, directions: &[AlgebraElement]) -> Result<MaxMinSolution> {
        let m = directions.len();
        let mut y = vec![0.0; m];
        let mut best_y = y.clone();
        let (mut best, _, _) = min_eigenpair(offset);
        let mut anchor = best;
        let mut iterations = 0;
        if m == 0 {
            return Ok(MaxMinSolution {
                coefficients: y,
                value: best,
                upper_bound: None,
                iterations,
            });
        }
        for it in 1..=self.max_iterations {
            iterations = it;
            let p = point(offset, directions, &y);
            let (val, block, v) = min_eigenpair(&p);
            if val > best {
                best = val;
                best_y.clone_from(&y);
            }
            if it % self.window == 0 {
                if best - anchor < self.min_improvement {
                    break;
                }
                anchor = best;
            }
            let g: Vec<f64> = directions
                .iter()
                .map(|d| (v.adjoint() * &d.blocks()[block] * &v)[(0, 0)].re)
                .collect();
            let gn = libm::sqrt(g.iter().map(|x| x * x).sum());
            if gn == 0.0 {
                break;
            }
            let s = self.step / libm::sqrt(it as f64) / gn;
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi += s * gi;
            }
        }
        Ok(MaxMinSolution {
            coefficients: best_y,
            value: best,
            upper_bound: None,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approaches_the_symmetric_optimum() {
        let offset = AlgebraElement::diagonal(&[&[0.5, 1.5]]);
        let dir = AlgebraElement::diagonal(&[&[1.0, -1.0]]);
        let sol = SupergradientSolver::default().maximize(&offset, &[dir]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-2, "value {}", sol.value);
        assert!(sol.upper_bound.is_none());
    }
}
