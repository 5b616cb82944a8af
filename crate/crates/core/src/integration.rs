//! Adapted processes, simple adapted biprocesses, quantum trading strategies and the
//! ♯-stochastic integral
//!
//! ```text
//! ∫ H ♯ dX = Σ_k Σ_j A_{j,k} (X_{t_{k+1}} − X_{t_k}) B_{j,k}
//! ```
//!
//! Biprocesses are stored as explicit per-step pair lists `(A_j, B_j)`; no canonical
//! form of the tensor is ever computed.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{AlgebraElement, Filtration, MultiMatrixAlgebra};
use crate::error::{Error, Result};

pub(crate) fn same_filtration(a: &Arc<Filtration>, b: &Arc<Filtration>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Per-grid-point (or per-interval) residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub index: usize,
    /// `‖x − E[x | A_k]‖_2`, maximized over every element attached to the index.
    pub adaptedness_residual: f64,
    /// `‖x − x*‖_2` for process values.
    pub self_adjoint_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptednessReport {
    pub steps: Vec<StepReport>,
    pub passed: bool,
}

impl AdaptednessReport {
    fn from_steps(steps: Vec<StepReport>, tol: f64) -> Self {
        let passed = steps.iter().all(|s| {
            s.adaptedness_residual <= tol && s.self_adjoint_residual.is_none_or(|r| r <= tol)
        });
        Self { steps, passed }
    }

    /// First failing index with a human-readable reason.
    pub fn first_failure(&self, tol: f64) -> Option<(usize, String)> {
        self.steps.iter().find_map(|s| {
            if s.adaptedness_residual > tol {
                Some((
                    s.index,
                    format!(
                        "step {} is not adapted (projection residual {:.3e})",
                        s.index, s.adaptedness_residual
                    ),
                ))
            } else {
                match s.self_adjoint_residual {
                    Some(r) if r > tol => Some((
                        s.index,
                        format!("step {} is not self-adjoint (residual {:.3e})", s.index, r),
                    )),
                    _ => None,
                }
            }
        })
    }

    pub(crate) fn into_result(self, tol: f64) -> Result<()> {
        match self.steps.iter().find(|s| {
            s.adaptedness_residual > tol || s.self_adjoint_residual.is_some_and(|r| r > tol)
        }) {
            None => Ok(()),
            Some(s) if s.adaptedness_residual > tol => Err(Error::NotAdapted {
                step: s.index,
                residual: s.adaptedness_residual,
            }),
            Some(s) => Err(Error::NotSelfAdjoint {
                residual: s.self_adjoint_residual.unwrap_or_default(),
            }),
        }
    }
}

/// A process `X_{t_0}, …, X_{t_m}` on a filtration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    filtration: Arc<Filtration>,
    values: Vec<AlgebraElement>,
}

impl AdaptedProcess {
    /// Checks lengths and shapes only; see [`validate`](Self::validate).
    pub fn new(filtration: Arc<Filtration>, values: Vec<AlgebraElement>) -> Result<Self> {
        if values.len() != filtration.len() {
            return Err(Error::Domain(format!(
                "process has {} values for {} grid points",
                values.len(),
                filtration.len()
            )));
        }
        for v in &values {
            filtration.algebra().check(v)?;
        }
        Ok(Self { filtration, values })
    }

    pub fn constant(filtration: Arc<Filtration>, value: AlgebraElement) -> Result<Self> {
        let values = alloc::vec![value; filtration.len()];
        Self::new(filtration, values)
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        self.filtration.algebra()
    }

    pub fn values(&self) -> &[AlgebraElement] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &AlgebraElement {
        &self.values[k]
    }

    /// `X_{t_{k+1}} − X_{t_k}`
    pub fn increment(&self, k: usize) -> AlgebraElement {
        &self.values[k + 1] - &self.values[k]
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            filtration: self.filtration.clone(),
            values: self.values.iter().map(|v| v.scale_real(c)).collect(),
        }
    }

    /// Adaptedness and self-adjointness residuals per grid point.
    pub fn validate(&self, tol: f64) -> AdaptednessReport {
        let alg = self.algebra();
        let steps = self
            .values
            .iter()
            .zip(self.filtration.levels())
            .enumerate()
            .map(|(k, (x, level))| StepReport {
                index: k,
                adaptedness_residual: level.residual(alg, x),
                self_adjoint_residual: Some(alg.norm2(&(x - &x.adjoint()))),
            })
            .collect();
        AdaptednessReport::from_steps(steps, tol)
    }

    pub(crate) fn ensure_adapted(&self, tol: f64) -> Result<()> {
        self.validate(tol).into_result(tol)
    }
}

/// A simple adapted biprocess: for each interval `[t_k, t_{k+1})` a list of pairs
/// `(A_j, B_j)` representing `Σ_j A_j ⊗ B_j`; zero from `t_m` on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleBiprocess {
    filtration: Arc<Filtration>,
    steps: Vec<Vec<(AlgebraElement, AlgebraElement)>>,
}

impl SimpleBiprocess {
    pub fn new(
        filtration: Arc<Filtration>,
        steps: Vec<Vec<(AlgebraElement, AlgebraElement)>>,
    ) -> Result<Self> {
        if steps.len() != filtration.num_steps() {
            return Err(Error::Domain(format!(
                "biprocess has {} steps, filtration has {} intervals",
                steps.len(),
                filtration.num_steps()
            )));
        }
        let alg = filtration.algebra();
        for (a, b) in steps.iter().flatten() {
            alg.check(a)?;
            alg.check(b)?;
        }
        Ok(Self { filtration, steps })
    }

    pub fn zero(filtration: Arc<Filtration>) -> Self {
        let steps = alloc::vec![Vec::new(); filtration.num_steps()];
        Self { filtration, steps }
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn steps(&self) -> &[Vec<(AlgebraElement, AlgebraElement)>] {
        &self.steps
    }

    /// `(Σ A_j ⊗ B_j)* = Σ B_j* ⊗ A_j*`, step by step.
    pub fn adjoint(&self) -> Self {
        Self {
            filtration: self.filtration.clone(),
            steps: self
                .steps
                .iter()
                .map(|pairs| pairs.iter().map(|(a, b)| (b.adjoint(), a.adjoint())).collect())
                .collect(),
        }
    }

    /// `c · H`, folded into the left legs.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            filtration: self.filtration.clone(),
            steps: self
                .steps
                .iter()
                .map(|pairs| pairs.iter().map(|(a, b)| (a.scale(c), b.clone())).collect())
                .collect(),
        }
    }

    /// `H + G` by concatenating pair lists.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if !same_filtration(&self.filtration, &other.filtration) {
            return Err(Error::FiltrationMismatch);
        }
        Ok(Self {
            filtration: self.filtration.clone(),
            steps: self
                .steps
                .iter()
                .zip(&other.steps)
                .map(|(a, b)| a.iter().chain(b).cloned().collect())
                .collect(),
        })
    }

    /// `∫_0^∞ H ♯ dX`
    pub fn integral(&self, x: &AdaptedProcess) -> Result<AlgebraElement> {
        self.window_integral(0, self.steps.len(), x)
    }

    /// `∫_s^t H ♯ dX`, the integral of `H` stopped outside `[s, t)`; `s` and `t` must
    /// be grid times.
    pub fn stopped_integral(&self, s: f64, t: f64, x: &AdaptedProcess) -> Result<AlgebraElement> {
        if s > t {
            return Err(Error::Domain(format!("stopping window [{s}, {t}) is reversed")));
        }
        let i = self.filtration.time_index(s)?;
        let j = self.filtration.time_index(t)?;
        self.window_integral(i, j.min(self.steps.len()), x)
    }

    fn window_integral(&self, from: usize, to: usize, x: &AdaptedProcess) -> Result<AlgebraElement> {
        if !same_filtration(&self.filtration, &x.filtration) {
            return Err(Error::FiltrationMismatch);
        }
        let mut out = self.filtration.algebra().zero();
        for k in from..to {
            let pairs = &self.steps[k];
            if pairs.is_empty() {
                continue;
            }
            let dx = x.increment(k);
            for (a, b) in pairs {
                out += &dx.sandwich(a, b);
            }
        }
        Ok(out)
    }

    /// Projection residual of every leg onto the level of its interval.
    pub fn validate(&self, tol: f64) -> AdaptednessReport {
        let alg = self.filtration.algebra();
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(k, pairs)| {
                let level = self.filtration.level(k);
                let adaptedness_residual = pairs
                    .iter()
                    .flat_map(|(a, b)| [level.residual(alg, a), level.residual(alg, b)])
                    .fold(0.0, f64::max);
                StepReport {
                    index: k,
                    adaptedness_residual,
                    self_adjoint_residual: None,
                }
            })
            .collect();
        AdaptednessReport::from_steps(steps, tol)
    }
}

/// A simple quantum trading strategy `H_t = Σ_j α_j a_j ⊗ a_j*` with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingStrategy {
    filtration: Arc<Filtration>,
    steps: Vec<Vec<(f64, AlgebraElement)>>,
}

impl TradingStrategy {
    pub fn new(filtration: Arc<Filtration>, steps: Vec<Vec<(f64, AlgebraElement)>>) -> Result<Self> {
        if steps.len() != filtration.num_steps() {
            return Err(Error::Domain(format!(
                "strategy has {} steps, filtration has {} intervals",
                steps.len(),
                filtration.num_steps()
            )));
        }
        let alg = filtration.algebra();
        for (alpha, a) in steps.iter().flatten() {
            if !alpha.is_finite() {
                return Err(Error::Domain(format!("strategy weight {alpha} is not finite")));
            }
            alg.check(a)?;
        }
        Ok(Self { filtration, steps })
    }

    /// Holds one unit, `I ⊗ I`, on every interval.
    pub fn identity(filtration: Arc<Filtration>) -> Self {
        let one = filtration.algebra().identity();
        let steps = alloc::vec![alloc::vec![(1.0, one)]; filtration.num_steps()];
        Self { filtration, steps }
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn steps(&self) -> &[Vec<(f64, AlgebraElement)>] {
        &self.steps
    }

    /// Pairs `(α_j a_j, a_j*)`.
    pub fn to_biprocess(&self) -> SimpleBiprocess {
        SimpleBiprocess {
            filtration: self.filtration.clone(),
            steps: self
                .steps
                .iter()
                .map(|pairs| {
                    pairs
                        .iter()
                        .map(|(alpha, a)| (a.scale_real(*alpha), a.adjoint()))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn integral(&self, x: &AdaptedProcess) -> Result<AlgebraElement> {
        self.to_biprocess().integral(x)
    }

    pub fn stopped_integral(&self, s: f64, t: f64, x: &AdaptedProcess) -> Result<AlgebraElement> {
        self.to_biprocess().stopped_integral(s, t, x)
    }

    /// `t_k ↦ (H ♯ X)_{t_k}`.
    pub fn running_integral(&self, x: &AdaptedProcess) -> Result<AdaptedProcess> {
        let h = self.to_biprocess();
        let values = (0..self.filtration.len())
            .map(|k| h.window_integral(0, k, x))
            .collect::<Result<Vec<_>>>()?;
        AdaptedProcess::new(self.filtration.clone(), values)
    }

    pub fn validate(&self, tol: f64) -> AdaptednessReport {
        self.to_biprocess().validate(tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_subalgebra, Subalgebra, DEFAULT_TOL};
    use alloc::vec;

    /// Diagonal M_2, levels C·I then diagonal, X = (0, diag(1, -1)).
    fn setup() -> (Arc<Filtration>, AdaptedProcess) {
        let alg = MultiMatrixAlgebra::matrix(2).unwrap();
        let d = AlgebraElement::diagonal(&[&[1.0, -1.0]]);
        let diag = make_subalgebra(&alg, core::slice::from_ref(&d)).unwrap();
        let f = Arc::new(
            Filtration::with_unit_steps(alg.clone(), vec![Subalgebra::scalars(&alg), diag.clone(), diag])
                .unwrap(),
        );
        let x = AdaptedProcess::new(
            f.clone(),
            vec![alg.zero(), d.clone(), d.scale_real(3.0)],
        )
        .unwrap();
        (f, x)
    }

    #[test]
    fn identity_strategy_telescopes() {
        let (f, x) = setup();
        let s = TradingStrategy::identity(f);
        let y = s.integral(&x).unwrap();
        let expected = &x.values()[2] - &x.values()[0];
        assert!((&y - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn empty_biprocess_integrates_to_zero() {
        let (f, x) = setup();
        let h = SimpleBiprocess::zero(f);
        assert!(h.integral(&x).unwrap().is_zero());
    }

    #[test]
    fn single_pair_is_a_sandwich() {
        let (f, x) = setup();
        let alg = f.algebra().clone();
        let a = AlgebraElement::diagonal(&[&[2.0, 0.5]]);
        let h = SimpleBiprocess::new(
            f,
            vec![vec![], vec![(a.clone(), a.adjoint())]],
        )
        .unwrap();
        let y = h.integral(&x).unwrap();
        let expected = x.increment(1).sandwich(&a, &a.adjoint());
        assert!((&y - &expected).max_abs() < 1e-15);
        assert!(alg.check(&y).is_ok());
    }

    #[test]
    fn stopped_windows() {
        let (f, x) = setup();
        let s = TradingStrategy::identity(f);
        assert!(s.stopped_integral(1.0, 1.0, &x).unwrap().is_zero());
        let full = s.stopped_integral(0.0, 2.0, &x).unwrap();
        assert!((&full - &s.integral(&x).unwrap()).max_abs() < 1e-15);
        assert!(matches!(s.stopped_integral(2.0, 1.0, &x), Err(Error::Domain(_))));
        assert!(matches!(s.stopped_integral(0.0, 1.5, &x), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn weight_folding() {
        let (f, _) = setup();
        let alg = f.algebra().clone();
        let a = alg.matrix_unit(0, 0, 0).unwrap();
        let s = TradingStrategy::new(f.clone(), vec![vec![(-2.0, a.clone())], vec![]]).unwrap();
        let h = s.to_biprocess();
        let (l, r) = &h.steps()[0][0];
        assert_eq!(*l, a.scale_real(-2.0));
        assert_eq!(*r, a.adjoint());

        let one = TradingStrategy::new(f, vec![vec![(1.0, alg.identity())], vec![]]).unwrap();
        let h1 = one.to_biprocess();
        let (l, r) = &h1.steps()[0][0];
        assert_eq!(*l, alg.identity());
        assert_eq!(*r, alg.identity());
    }

    #[test]
    fn adjoint_swaps_and_conjugates() {
        let (f, _) = setup();
        let alg = f.algebra().clone();
        let a = alg.matrix_unit(0, 0, 1).unwrap().scale(Complex64::new(0.0, 2.0));
        let b = alg.matrix_unit(0, 1, 1).unwrap();
        let h = SimpleBiprocess::new(f, vec![vec![(a.clone(), b.clone())], vec![]]).unwrap();
        let hs = h.adjoint();
        assert_eq!(hs.steps()[0][0], (b.adjoint(), a.adjoint()));
        assert_eq!(hs.adjoint(), h);
    }

    #[test]
    fn adaptedness_reports() {
        let (f, x) = setup();
        assert!(x.validate(DEFAULT_TOL).passed);
        let alg = f.algebra().clone();
        let constant = AdaptedProcess::constant(f.clone(), alg.identity()).unwrap();
        assert!(constant.validate(DEFAULT_TOL).passed);

        // e12 is not in the diagonal level.
        let mut values = x.values().to_vec();
        values[1] = &alg.matrix_unit(0, 0, 1).unwrap() + &alg.matrix_unit(0, 1, 0).unwrap();
        let bad = AdaptedProcess::new(f.clone(), values).unwrap();
        let report = bad.validate(DEFAULT_TOL);
        assert!(!report.passed);
        assert_eq!(report.first_failure(DEFAULT_TOL).unwrap().0, 1);
        assert!(matches!(bad.ensure_adapted(DEFAULT_TOL), Err(Error::NotAdapted { step: 1, .. })));

        let e12 = alg.matrix_unit(0, 0, 1).unwrap();
        let s = TradingStrategy::new(f, vec![vec![(1.0, e12)], vec![]]).unwrap();
        assert!(!s.validate(DEFAULT_TOL).passed);
    }

    #[test]
    fn mismatched_filtrations_are_rejected() {
        let (_, x) = setup();
        let (g, _) = {
            let alg = MultiMatrixAlgebra::matrix(2).unwrap();
            let f = Arc::new(
                Filtration::with_unit_steps(
                    alg.clone(),
                    vec![Subalgebra::scalars(&alg), Subalgebra::full(&alg), Subalgebra::full(&alg)],
                )
                .unwrap(),
            );
            (f, ())
        };
        let s = TradingStrategy::identity(g);
        assert!(matches!(s.integral(&x), Err(Error::FiltrationMismatch)));
    }
}
