use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::coords::orthonormalize_real;
use super::{AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};

/// Rank tolerance for Gram–Schmidt: a candidate is dropped when its residual norm is
/// at most `RANK_TOL * (‖candidate‖ + 1)`.
pub const RANK_TOL: f64 = 1e-8;

/// A unital *-subalgebra presented by a GNS-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subalgebra {
    basis: Vec<AlgebraElement>,
    contains_identity: bool,
}

/// Invariant residuals of a [`Subalgebra`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubalgebraReport {
    pub dim: usize,
    /// `max |⟨b_i, b_j⟩ − δ_ij|`
    pub gram_residual: f64,
    /// `‖I − E[I]‖_2`
    pub identity_residual: f64,
    /// `max_i ‖b_i* − E[b_i*]‖_2`
    pub adjoint_residual: f64,
    /// `max_{i,j} ‖b_i b_j − E[b_i b_j]‖_2`
    pub product_residual: f64,
    pub passed: bool,
}

impl SubalgebraReport {
    pub fn worst_residual(&self) -> f64 {
        self.gram_residual
            .max(self.identity_residual)
            .max(self.adjoint_residual)
            .max(self.product_residual)
    }
}

struct ComplexGramSchmidt<'a> {
    alg: &'a MultiMatrixAlgebra,
    basis: Vec<AlgebraElement>,
}

impl<'a> ComplexGramSchmidt<'a> {
    fn new(alg: &'a MultiMatrixAlgebra) -> Self {
        Self {
            alg,
            basis: Vec::new(),
        }
    }

    fn push(&mut self, x: &AlgebraElement) -> bool {
        let mut r = x.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let c = self.alg.inner(b, &r);
                r.axpy(-c, b);
            }
        }
        let rn = self.alg.norm2(&r);
        if rn <= RANK_TOL * (self.alg.norm2(x) + 1.0) {
            return false;
        }
        self.basis.push(r.scale_real(1.0 / rn));
        true
    }
}

/// Smallest unital *-subalgebra containing `generators`.
///
/// Starts from `span{I} + span(generators ∪ generators*)` and closes under left
/// multiplication by the generator set until the dimension stabilizes; because the
/// generator set is closed under adjoints, the fixpoint is the span of all words.
pub fn make_subalgebra(
    alg: &MultiMatrixAlgebra,
    generators: &[AlgebraElement],
) -> Result<Subalgebra> {
    for g in generators {
        alg.check(g)?;
    }
    let full_dim = alg.algebra_dim();
    let mut letters: Vec<AlgebraElement> = Vec::with_capacity(2 * generators.len());
    for g in generators {
        letters.push(g.clone());
        if g.self_adjoint_defect() > 0.0 {
            letters.push(g.adjoint());
        }
    }

    let mut gs = ComplexGramSchmidt::new(alg);
    gs.push(&alg.identity());
    for l in &letters {
        gs.push(l);
    }
    let mut frontier_start = 0;
    while frontier_start < gs.basis.len() && gs.basis.len() < full_dim {
        let frontier_end = gs.basis.len();
        for idx in frontier_start..frontier_end {
            for l in &letters {
                if gs.basis.len() == full_dim {
                    break;
                }
                let cand = l * &gs.basis[idx];
                gs.push(&cand);
            }
        }
        frontier_start = frontier_end;
    }
    Ok(Subalgebra {
        basis: gs.basis,
        contains_identity: true,
    })
}

impl Subalgebra {
    /// `C·I`
    pub fn scalars(alg: &MultiMatrixAlgebra) -> Self {
        Self {
            basis: alloc::vec![alg.identity()],
            contains_identity: true,
        }
    }

    /// The whole algebra, spanned by normalized matrix units `e_ij / √w_k`.
    pub fn full(alg: &MultiMatrixAlgebra) -> Self {
        let mut basis = Vec::with_capacity(alg.algebra_dim());
        for (k, (&n, &w)) in alg.block_dims().iter().zip(alg.trace_weights()).enumerate() {
            let s = 1.0 / libm::sqrt(w);
            for i in 0..n {
                for j in 0..n {
                    let mut e = alg.zero();
                    e.blocks_mut()[k][(i, j)] = Complex64::new(s, 0.0);
                    basis.push(e);
                }
            }
        }
        Self {
            basis,
            contains_identity: true,
        }
    }

    /// Wraps an orthonormal basis after checking every subalgebra invariant.
    pub fn from_orthonormal_basis(
        alg: &MultiMatrixAlgebra,
        basis: Vec<AlgebraElement>,
        tol: f64,
    ) -> Result<Self> {
        for b in &basis {
            alg.check(b)?;
        }
        let mut sub = Self {
            basis,
            contains_identity: false,
        };
        let report = sub.validate(alg, tol);
        sub.contains_identity = report.identity_residual <= tol;
        if !report.passed {
            return Err(Error::InvalidSubalgebra(format!(
                "gram residual {:.3e}, identity residual {:.3e}, adjoint residual {:.3e}, \
                 product residual {:.3e}",
                report.gram_residual,
                report.identity_residual,
                report.adjoint_residual,
                report.product_residual
            )));
        }
        Ok(sub)
    }

    pub(crate) fn from_basis_unchecked(basis: Vec<AlgebraElement>) -> Self {
        Self {
            basis,
            contains_identity: true,
        }
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    pub(crate) fn check_algebra(&self, alg: &MultiMatrixAlgebra) -> Result<()> {
        match self.basis.first() {
            Some(b) => alg.check(b),
            None => Err(Error::InvalidSubalgebra("empty basis".into())),
        }
    }

    /// `E[x] = Σ_i ⟨b_i, x⟩ b_i`, unchecked.
    pub(crate) fn project(&self, alg: &MultiMatrixAlgebra, x: &AlgebraElement) -> AlgebraElement {
        let mut out = alg.zero();
        for b in &self.basis {
            out.axpy(alg.inner(b, x), b);
        }
        out
    }

    /// `‖x − E[x]‖_2`.
    pub fn residual(&self, alg: &MultiMatrixAlgebra, x: &AlgebraElement) -> f64 {
        let p = self.project(alg, x);
        alg.norm2(&(x - &p))
    }

    /// Checks orthonormality, unitality and closure under adjoint and product.
    pub fn validate(&self, alg: &MultiMatrixAlgebra, tol: f64) -> SubalgebraReport {
        let d = self.basis.len();
        let mut gram_residual: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let g = alg.inner(&self.basis[i], &self.basis[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                gram_residual = gram_residual.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        let identity_residual = self.residual(alg, &alg.identity());
        let mut adjoint_residual: f64 = 0.0;
        let mut product_residual: f64 = 0.0;
        // A full-rank orthonormal family spans the whole algebra, so closure is automatic.
        if d < alg.algebra_dim() || gram_residual > tol {
            for b in &self.basis {
                adjoint_residual = adjoint_residual.max(self.residual(alg, &b.adjoint()));
            }
            for bi in &self.basis {
                for bj in &self.basis {
                    product_residual = product_residual.max(self.residual(alg, &(bi * bj)));
                }
            }
        }
        let passed = d > 0
            && gram_residual <= tol
            && identity_residual <= tol
            && adjoint_residual <= tol
            && product_residual <= tol;
        SubalgebraReport {
            dim: d,
            gram_residual,
            identity_residual,
            adjoint_residual,
            product_residual,
            passed,
        }
    }

    /// Orthonormal basis (in real coordinates) of the self-adjoint part.
    pub fn self_adjoint_coords(&self, alg: &MultiMatrixAlgebra) -> Vec<Vec<f64>> {
        let mut cands = Vec::with_capacity(2 * self.basis.len());
        let i = Complex64::new(0.0, 1.0);
        for b in &self.basis {
            cands.push(alg.hermitian_coords(b));
            cands.push(alg.hermitian_coords(&b.scale(i)));
        }
        orthonormalize_real(&cands, RANK_TOL).vectors
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::DEFAULT_TOL;
    use alloc::vec;

    fn m2() -> MultiMatrixAlgebra {
        MultiMatrixAlgebra::new(vec![2], vec![0.5]).unwrap()
    }

    #[test]
    fn empty_generators_give_scalars() {
        let alg = m2();
        let sub = make_subalgebra(&alg, &[]).unwrap();
        assert_eq!(sub.dim(), 1);
        assert!(sub.validate(&alg, DEFAULT_TOL).passed);
    }

    #[test]
    fn diagonal_generator_gives_diagonal_algebra() {
        let alg = m2();
        let d = AlgebraElement::diagonal(&[&[1.0, -1.0]]);
        let sub = make_subalgebra(&alg, &[d]).unwrap();
        assert_eq!(sub.dim(), 2);
        // Every product of diagonal matrices is diagonal: e11, e22 lie in the span.
        assert!(sub.residual(&alg, &alg.matrix_unit(0, 0, 0).unwrap()) < 1e-12);
        assert!(sub.residual(&alg, &alg.matrix_unit(0, 1, 1).unwrap()) < 1e-12);
        assert!((sub.residual(&alg, &alg.matrix_unit(0, 0, 1).unwrap()) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(sub.validate(&alg, DEFAULT_TOL).passed);
    }

    #[test]
    fn off_diagonal_unit_generates_everything() {
        let alg = m2();
        let e12 = alg.matrix_unit(0, 0, 1).unwrap();
        let sub = make_subalgebra(&alg, &[e12]).unwrap();
        assert_eq!(sub.dim(), 4);
        assert!(sub.validate(&alg, DEFAULT_TOL).passed);
    }

    #[test]
    fn conditional_expectation_examples() {
        let alg = m2();
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let mut x = alg.zero();
        x.blocks_mut()[0][(0, 0)] = c(1.0, 2.0);
        x.blocks_mut()[0][(0, 1)] = c(-3.0, 0.5);
        x.blocks_mut()[0][(1, 0)] = c(0.25, 1.0);
        x.blocks_mut()[0][(1, 1)] = c(4.0, -1.0);

        let scalars = Subalgebra::scalars(&alg);
        let e = alg.conditional_expectation(&x, &scalars).unwrap();
        let tau = alg.trace(&x).unwrap();
        assert!((&e - &alg.identity().scale(tau)).max_abs() < 1e-15);

        let diag = make_subalgebra(&alg, &[AlgebraElement::diagonal(&[&[1.0, -1.0]])]).unwrap();
        let e = alg.conditional_expectation(&x, &diag).unwrap();
        let mut expected = alg.zero();
        expected.blocks_mut()[0][(0, 0)] = c(1.0, 2.0);
        expected.blocks_mut()[0][(1, 1)] = c(4.0, -1.0);
        assert!((&e - &expected).max_abs() < 1e-14);

        let again = alg.conditional_expectation(&e, &diag).unwrap();
        assert!((&again - &e).max_abs() < 1e-14);
    }

    #[test]
    fn full_subalgebra_is_valid() {
        let alg = MultiMatrixAlgebra::with_default_weights(vec![2, 1, 3]).unwrap();
        let sub = Subalgebra::full(&alg);
        assert_eq!(sub.dim(), 14);
        assert!(sub.validate(&alg, DEFAULT_TOL).passed);
        assert_eq!(sub.self_adjoint_coords(&alg).len(), 14);
    }

    #[test]
    fn non_closed_basis_is_rejected() {
        let alg = m2();
        let e12 = alg.matrix_unit(0, 0, 1).unwrap().scale_real(2f64.sqrt());
        let basis = vec![alg.identity(), e12];
        assert!(matches!(
            Subalgebra::from_orthonormal_basis(&alg, basis, DEFAULT_TOL),
            Err(Error::InvalidSubalgebra(_))
        ));
    }
}
