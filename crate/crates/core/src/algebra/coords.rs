//! Real coordinates for the self-adjoint part of the algebra.
//!
//! The map is an isometry from `(A_sa, Re τ(x y))` onto Euclidean `R^{Σ n_k²}`, so
//! orthogonality questions about self-adjoint elements become plain vector algebra.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{AlgebraElement, MultiMatrixAlgebra};

impl MultiMatrixAlgebra {
    /// Coordinates of the self-adjoint part of `x`.
    pub fn hermitian_coords(&self, x: &AlgebraElement) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.algebra_dim());
        for (b, &w) in x.blocks().iter().zip(self.trace_weights()) {
            let n = b.nrows();
            let s = libm::sqrt(w);
            let s2 = libm::sqrt(2.0 * w);
            for i in 0..n {
                out.push(s * b[(i, i)].re);
            }
            for i in 0..n {
                for j in i + 1..n {
                    let h = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
                    out.push(s2 * h.re);
                    out.push(s2 * h.im);
                }
            }
        }
        out
    }

    /// Inverse of [`hermitian_coords`](Self::hermitian_coords).
    pub fn from_hermitian_coords(&self, v: &[f64]) -> AlgebraElement {
        assert_eq!(v.len(), self.algebra_dim(), "coordinate length mismatch");
        let mut x = self.zero();
        let mut pos = 0;
        let weights = self.trace_weights().to_vec();
        for (b, w) in x.blocks_mut().iter_mut().zip(weights) {
            let n = b.nrows();
            let s = libm::sqrt(w);
            let s2 = libm::sqrt(2.0 * w);
            for i in 0..n {
                b[(i, i)] = Complex64::new(v[pos] / s, 0.0);
                pos += 1;
            }
            for i in 0..n {
                for j in i + 1..n {
                    let z = Complex64::new(v[pos] / s2, v[pos + 1] / s2);
                    b[(i, j)] = z;
                    b[(j, i)] = z.conj();
                    pos += 2;
                }
            }
        }
        x
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Incrementally built orthonormal family in `R^d`.
#[derive(Debug, Clone, Default)]
pub struct RealGramSchmidt {
    vectors: Vec<Vec<f64>>,
}

impl RealGramSchmidt {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Residual of `v` after projecting out the current span (two passes), together
    /// with the projection coefficients.
    pub fn residual(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = v.to_vec();
        let mut h = vec![0.0; self.vectors.len()];
        for _ in 0..2 {
            for (q, hq) in self.vectors.iter().zip(h.iter_mut()) {
                let c = dot(q, &r);
                *hq += c;
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        (r, h)
    }

    /// Adds the normalized residual of `v` when it exceeds
    /// `rank_tol * (‖v‖ + 1)`; returns whether the span grew.
    pub fn push(&mut self, v: &[f64], rank_tol: f64) -> bool {
        let (r, _) = self.residual(v);
        let rn = norm(&r);
        if rn <= rank_tol * (norm(v) + 1.0) {
            return false;
        }
        self.vectors.push(r.into_iter().map(|x| x / rn).collect());
        true
    }

    /// Pushes without a rank test; the caller guarantees `v` is a unit vector
    /// orthogonal to the current span.
    pub(crate) fn push_orthonormal(&mut self, v: Vec<f64>) {
        self.vectors.push(v);
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for q in &self.vectors {
            let c = dot(q, v);
            for (o, qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        out
    }

    /// Orthonormal basis of the orthogonal complement of the span in `R^dim`.
    pub fn complement(&self, dim: usize, rank_tol: f64) -> Vec<Vec<f64>> {
        let mut all = self.clone();
        let start = all.len();
        for i in 0..dim {
            if all.len() == dim {
                break;
            }
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            all.push(&e, rank_tol);
        }
        all.vectors.split_off(start)
    }
}

/// Result of [`orthonormalize_real`]: an orthonormal basis together with each basis
/// vector's expansion over the selected input vectors.
#[derive(Debug, Clone)]
pub struct PivotedBasis {
    /// Orthonormal vectors.
    pub vectors: Vec<Vec<f64>>,
    /// Indices of the inputs that entered the basis, in pivot order.
    pub selected: Vec<usize>,
    /// `vectors[i] = Σ_l expansion[i][l] · inputs[selected[l]]`, lower triangular.
    pub expansion: Vec<Vec<f64>>,
}

/// Column-pivoted Gram–Schmidt. At each step the input with the largest relative
/// residual `‖r‖ / (‖v‖ + 1)` enters; inputs whose relative residual drops to
/// `rank_tol` or below are discarded.
pub fn orthonormalize_real(inputs: &[Vec<f64>], rank_tol: f64) -> PivotedBasis {
    let dim = inputs.first().map_or(0, Vec::len);
    let scale: Vec<f64> = inputs.iter().map(|v| norm(v) + 1.0).collect();
    let mut residuals: Vec<Vec<f64>> = inputs.to_vec();
    let mut alive: Vec<bool> = vec![true; inputs.len()];
    let mut gs = RealGramSchmidt::new();
    let mut selected = Vec::new();
    let mut expansion: Vec<Vec<f64>> = Vec::new();

    while gs.len() < dim {
        let mut pick = None;
        let mut best = rank_tol;
        for (i, r) in residuals.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let ratio = norm(r) / scale[i];
            if ratio > best {
                best = ratio;
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        alive[i] = false;

        // Re-derive the residual from the original input for accuracy.
        let (r, h) = gs.residual(&inputs[i]);
        let rn = norm(&r);
        if rn <= rank_tol * scale[i] {
            continue;
        }
        let q: Vec<f64> = r.iter().map(|x| x / rn).collect();

        let mut coeff = vec![0.0; selected.len() + 1];
        coeff[selected.len()] = 1.0;
        for (hj, row) in h.iter().zip(&expansion) {
            for (c, e) in coeff.iter_mut().zip(row) {
                *c -= hj * e;
            }
        }
        for c in coeff.iter_mut() {
            *c /= rn;
        }

        for (k, res) in residuals.iter_mut().enumerate() {
            if alive[k] {
                let c = dot(&q, res);
                for (ri, qi) in res.iter_mut().zip(&q) {
                    *ri -= c * qi;
                }
            }
        }
        gs.push_orthonormal(q);
        selected.push(i);
        expansion.push(coeff);
    }

    PivotedBasis {
        vectors: gs.vectors,
        selected,
        expansion,
    }
}
