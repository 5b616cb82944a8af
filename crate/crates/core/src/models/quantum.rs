use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Market;
use crate::algebra::{AlgebraElement, Filtration, MultiMatrixAlgebra, Subalgebra};
use crate::error::{Error, Result};
use crate::integration::AdaptedProcess;

pub const MAX_QUANTUM_PERIODS: usize = 8;

/// Tensor binomial market on `(C^2)^{⊗P}`. Period `j` multiplies the price by
/// `diag(u, d)` measured in a basis rotated by `basis_angles[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumBinomialSpec {
    pub periods: usize,
    pub up: f64,
    pub down: f64,
    pub rate: f64,
    pub spot: f64,
    pub basis_angles: Vec<f64>,
}

impl QuantumBinomialSpec {
    /// Unrotated spec with unit spot.
    pub fn new(periods: usize, up: f64, down: f64, rate: f64) -> Self {
        Self {
            periods,
            up,
            down,
            rate,
            spot: 1.0,
            basis_angles: vec![0.0; periods],
        }
    }

    /// Same rotation angle in every period.
    pub fn with_angle(mut self, theta: f64) -> Self {
        self.basis_angles = vec![theta; self.periods];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods > MAX_QUANTUM_PERIODS {
            return Err(Error::Domain(format!(
                "{} periods exceeds the limit of {MAX_QUANTUM_PERIODS}",
                self.periods
            )));
        }
        if !(self.down > 0.0 && self.down < self.up && self.up.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 < down < up, got down {} up {}",
                self.down, self.up
            )));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::Domain(format!("rate {} must be finite and >= 0", self.rate)));
        }
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::Domain(format!("spot {} must be positive", self.spot)));
        }
        if self.basis_angles.len() != self.periods || self.basis_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain(format!(
                "need {} finite basis angles, got {}",
                self.periods,
                self.basis_angles.len()
            )));
        }
        Ok(())
    }
}

fn factor(up: f64, down: f64, theta: f64) -> DMatrix<Complex64> {
    let (s, c) = libm::sincos(theta);
    let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![up, down]));
    (&r * d * r.transpose()).map(|v| Complex64::new(v, 0.0))
}

/// Level `k` is `M_2^{⊗k} ⊗ I`; `X_k = S_0 (1+r)^{-k} ⊗_{j<k} R_j diag(u, d) R_j^T ⊗ I`.
pub fn quantum_binomial(spec: &QuantumBinomialSpec) -> Result<Market> {
    spec.validate()?;
    let p = spec.periods;
    let n = 1usize << p;
    let alg = MultiMatrixAlgebra::matrix(n)?;
    let mut levels = Vec::with_capacity(p + 1);
    let mut values = Vec::with_capacity(p + 1);
    let mut prod = DMatrix::<Complex64>::identity(1, 1);
    for k in 0..=p {
        let dk = 1usize << k;
        let m = n / dk;
        let s = libm::sqrt(dk as f64);
        let mut basis = Vec::with_capacity(dk * dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut e = AlgebraElement::zeros(&[n]);
                for i in 0..m {
                    e.blocks_mut()[0][(a * m + i, b * m + i)] = Complex64::new(s, 0.0);
                }
                basis.push(e);
            }
        }
        levels.push(Subalgebra::from_basis_unchecked(basis));
        let scale = spec.spot / libm::pow(1.0 + spec.rate, k as f64);
        let x = prod
            .kronecker(&DMatrix::<Complex64>::identity(m, m))
            .scale(scale);
        values.push(AlgebraElement::from_blocks(vec![x]));
        if k < p {
            prod = prod.kronecker(&factor(spec.up, spec.down, spec.basis_angles[k]));
        }
    }
    let f = Arc::new(Filtration::with_unit_steps(alg, levels)?);
    let x = AdaptedProcess::new(f.clone(), values)?;
    Ok((f, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::DEFAULT_TOL;
    use crate::models::{embed_classical, ClassicalTree};

    #[test]
    fn unrotated_matches_the_classical_embedding_values() {
        let spec = QuantumBinomialSpec::new(2, 1.2, 0.9, 0.05);
        let (f, x) = quantum_binomial(&spec).unwrap();
        assert!(f.validate(DEFAULT_TOL).passed);
        assert!(x.validate(DEFAULT_TOL).passed);
        let tree = ClassicalTree::binomial(1.0, 1.2, 0.9, 0.05, 2).unwrap();
        let (_, y) = embed_classical(&tree).unwrap();
        let alg = f.algebra();
        for k in 0..3 {
            assert!(alg.norm2(&(x.value(k) - y.value(k))) < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn rotated_instances_validate() {
        let spec = QuantumBinomialSpec::new(3, 1.1, 0.95, 0.02).with_angle(0.7);
        let (f, x) = quantum_binomial(&spec).unwrap();
        assert!(f.validate(DEFAULT_TOL).passed);
        assert!(x.validate(DEFAULT_TOL).passed);
    }

    #[test]
    fn spec_errors() {
        assert!(quantum_binomial(&QuantumBinomialSpec::new(9, 1.2, 0.9, 0.0)).is_err());
        assert!(quantum_binomial(&QuantumBinomialSpec::new(1, 0.9, 1.2, 0.0)).is_err());
        let mut s = QuantumBinomialSpec::new(2, 1.2, 0.9, 0.0);
        s.basis_angles.pop();
        assert!(quantum_binomial(&s).is_err());
    }
}
