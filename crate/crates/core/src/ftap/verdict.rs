use alloc::vec::Vec;
use core::fmt;

use super::payoff::payoff_subspace;
use super::solve::{best_payoff_in, martingale_state_in, SolverOptions};
use crate::algebra::{min_eigenvalue, AlgebraElement};
use crate::error::Result;
use crate::integration::{same_filtration, AdaptedProcess, TradingStrategy};
use crate::martingale::{is_martingale, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// A faithful martingale state exists.
    Ems,
    /// A strategy with a nonzero positive payoff exists.
    Arbitrage,
    /// Neither side cleared its margin.
    Undecided,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ems => "EMS",
            Outcome::Arbitrage => "ARBITRAGE",
            Outcome::Undecided => "UNDECIDED",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmsCertificate {
    pub state: State,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageCertificate {
    pub strategy: TradingStrategy,
    pub payoff: AlgebraElement,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub ems: Option<EmsCertificate>,
    pub arbitrage: Option<ArbitrageCertificate>,
    /// Martingale-side margin `λ*`; `−∞` when no density meets the constraints.
    pub lambda: f64,
    /// Arbitrage-side margin `μ*`; `None` when the arbitrage side was not run, `−∞`
    /// when every payoff is traceless.
    pub mu: Option<f64>,
    pub payoff_dim: usize,
    pub options: SolverOptions,
    pub report: CertificateReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    fn holds(self, v: f64) -> bool {
        match self {
            Bound::AtMost(t) => v <= t,
            Bound::AtLeast(t) => v >= t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

/// Independent re-check of a verdict's certificate. UNDECIDED carries no certificate
/// and its report is vacuously passing.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl CertificateReport {
    fn new(outcome: Outcome) -> Self {
        Self {
            outcome,
            checks: Vec::new(),
            passed: true,
        }
    }

    fn push(&mut self, name: &'static str, value: f64, bound: Bound) {
        let passed = bound.holds(value);
        self.passed &= passed;
        self.checks.push(Check {
            name,
            value,
            bound,
            passed,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Decides EMS versus arbitrage for `x`.
pub fn check_nfl(x: &AdaptedProcess, opts: &SolverOptions) -> Result<Verdict> {
    let alg = x.algebra();
    let k = payoff_subspace(x)?;
    let sol = martingale_state_in(&k, opts)?;
    let lambda = sol.as_ref().map_or(f64::NEG_INFINITY, |s| s.lambda);

    let mut verdict = Verdict {
        outcome: Outcome::Undecided,
        ems: None,
        arbitrage: None,
        lambda,
        mu: None,
        payoff_dim: k.dim(),
        options: *opts,
        report: CertificateReport::new(Outcome::Undecided),
    };
    if let Some(sol) = sol.filter(|s| s.lambda > opts.tol_pos) {
        verdict.outcome = Outcome::Ems;
        verdict.ems = Some(EmsCertificate {
            state: sol.state(alg, opts.tol)?,
            lambda: sol.lambda,
        });
    } else {
        let arb = best_payoff_in(&k, opts)?;
        verdict.mu = Some(arb.as_ref().map_or(f64::NEG_INFINITY, |a| a.mu));
        if let Some(a) = arb.filter(|a| a.mu >= -opts.tol) {
            verdict.outcome = Outcome::Arbitrage;
            verdict.arbitrage = Some(ArbitrageCertificate {
                strategy: a.strategy,
                payoff: a.payoff,
                mu: a.mu,
            });
        }
    }
    verdict.report = verify_certificate(&verdict, x, opts)?;
    Ok(verdict)
}

/// Recomputes every certificate invariant from scratch: the payoff subspace is
/// rebuilt, the density is re-diagonalized, the strategy is re-integrated.
pub fn verify_certificate(
    v: &Verdict,
    x: &AdaptedProcess,
    opts: &SolverOptions,
) -> Result<CertificateReport> {
    let alg = x.algebra();
    let tol = opts.tol;
    let mut report = CertificateReport::new(v.outcome);
    match v.outcome {
        Outcome::Undecided => {}
        Outcome::Ems => {
            let Some(cert) = &v.ems else {
                report.push("certificate_present", 0.0, Bound::AtLeast(1.0));
                return Ok(report);
            };
            let rho = cert.state.density();
            if alg.check(rho).is_err() {
                report.push("density_shape", 1.0, Bound::AtMost(0.0));
                return Ok(report);
            }
            report.push("density_self_adjoint", rho.self_adjoint_defect(), Bound::AtMost(tol));
            report.push("density_min_eigenvalue", min_eigenvalue(rho), Bound::AtLeast(opts.tol_pos));
            report.push("density_trace", (alg.tau(rho).re - 1.0).abs(), Bound::AtMost(tol));
            let k = payoff_subspace(x)?;
            let annihilation = k
                .basis()
                .iter()
                .map(|ki| alg.tau_product(rho, ki).norm())
                .fold(0.0, f64::max);
            report.push("payoff_annihilation", annihilation, Bound::AtMost(tol));
            let m = is_martingale(x, &cert.state, tol)?;
            report.push("martingale_ratio", m.worst_ratio, Bound::AtMost(1.0));
        }
        Outcome::Arbitrage => {
            let Some(cert) = &v.arbitrage else {
                report.push("certificate_present", 0.0, Bound::AtLeast(1.0));
                return Ok(report);
            };
            if !same_filtration(cert.strategy.filtration(), x.filtration()) || alg.check(&cert.payoff).is_err() {
                report.push("certificate_matches_market", 0.0, Bound::AtLeast(1.0));
                return Ok(report);
            }
            let adapted = cert
                .strategy
                .validate(tol)
                .steps
                .iter()
                .map(|s| s.adaptedness_residual)
                .fold(0.0, f64::max);
            report.push("strategy_adapted", adapted, Bound::AtMost(tol));
            let y = cert.strategy.integral(x)?;
            report.push("payoff_reconstruction", alg.norm2(&(&y - &cert.payoff)), Bound::AtMost(tol));
            let k = &cert.payoff;
            report.push("payoff_self_adjoint", k.self_adjoint_defect(), Bound::AtMost(tol));
            report.push("payoff_min_eigenvalue", min_eigenvalue(k), Bound::AtLeast(-tol));
            report.push("payoff_trace", (alg.tau(k).re - 1.0).abs(), Bound::AtMost(tol));
        }
    }
    Ok(report)
}
