//! JSON documents for markets, strategies, elements and verdicts.
//!
//! Complex entries are `[re, im]` pairs, a block is a list of rows and an element
//! is a list of blocks. Floats are written in shortest round-trip form, so
//! `emit(parse(emit(m)))` reproduces `emit(m)` byte for byte.

use std::fmt::Write as _;
use std::sync::Arc;

use ncftap_core::algebra::{make_subalgebra, Block};
use ncftap_core::ftap::{
    ArbitrageCertificate, Bound, CertificateReport, EmsCertificate, SolverKind,
};
use ncftap_core::{
    AdaptedProcess, AlgebraElement, Complex64, Filtration, MultiMatrixAlgebra, Outcome,
    SimpleBiprocess, SolverOptions, State, Subalgebra, TradingStrategy, Verdict,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const MARKET_FORMAT: &str = "ncftap-market";
pub const STRATEGY_FORMAT: &str = "ncftap-strategy";
pub const ELEMENT_FORMAT: &str = "ncftap-element";
pub const VERDICT_FORMAT: &str = "ncftap-verdict";
pub const VERSION: u64 = 1;

/// Residual tolerance for stored orthonormal bases.
pub const BASIS_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{section}: {message}")]
    Section { section: String, message: String },
}

impl FormatError {
    fn section(section: impl Into<String>, message: impl ToString) -> Self {
        FormatError::Section {
            section: section.into(),
            message: message.to_string(),
        }
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends its own " at line L column C".
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FormatError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

pub type ElementDoc = Vec<Vec<Vec<[f64; 2]>>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketDoc {
    pub format: String,
    pub version: u64,
    pub algebra: AlgebraDoc,
    pub filtration: FiltrationDoc,
    pub process: Vec<ElementDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub block_dims: Vec<usize>,
    pub trace_weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationDoc {
    pub times: Vec<f64>,
    pub levels: Vec<LevelDoc>,
}

/// A level is either an orthonormal basis (what the tool writes) or a generator
/// list whose generated subalgebra is computed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<ElementDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<ElementDoc>>,
}

#[derive(Debug, Clone)]
pub struct Market {
    pub filtration: Arc<Filtration>,
    pub process: AdaptedProcess,
}

fn check_header(section: &str, format: &str, version: u64, expected: &str) -> Result<(), FormatError> {
    if format != expected {
        return Err(FormatError::section(
            section,
            format!("format is {format:?}, expected {expected:?}"),
        ));
    }
    if version != VERSION {
        return Err(FormatError::section(
            section,
            format!("unsupported version {version}, expected {VERSION}"),
        ));
    }
    Ok(())
}

pub fn element_to_doc(x: &AlgebraElement) -> ElementDoc {
    x.blocks()
        .iter()
        .map(|b| {
            (0..b.nrows())
                .map(|i| (0..b.ncols()).map(|j| [b[(i, j)].re, b[(i, j)].im]).collect())
                .collect()
        })
        .collect()
}

pub fn element_from_doc(
    doc: &ElementDoc,
    alg: &MultiMatrixAlgebra,
    section: &str,
) -> Result<AlgebraElement, FormatError> {
    let dims = alg.block_dims();
    if doc.len() != dims.len() {
        return Err(FormatError::section(
            section,
            format!("{} blocks, algebra has {}", doc.len(), dims.len()),
        ));
    }
    let mut blocks = Vec::with_capacity(dims.len());
    for (b, (rows, &n)) in doc.iter().zip(dims).enumerate() {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(FormatError::section(
                format!("{section}.block[{b}]"),
                format!("expected a {n}x{n} matrix"),
            ));
        }
        if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(FormatError::section(format!("{section}.block[{b}]"), "non-finite entry"));
        }
        blocks.push(Block::from_fn(n, n, |i, j| {
            let [re, im] = rows[i][j];
            Complex64::new(re, im)
        }));
    }
    Ok(AlgebraElement::from_blocks(blocks))
}

fn elements_from_docs(
    docs: &[ElementDoc],
    alg: &MultiMatrixAlgebra,
    section: &str,
) -> Result<Vec<AlgebraElement>, FormatError> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| element_from_doc(d, alg, &format!("{section}[{i}]")))
        .collect()
}

impl MarketDoc {
    pub fn from_market(filtration: &Filtration, process: &AdaptedProcess) -> Self {
        let alg = filtration.algebra();
        MarketDoc {
            format: MARKET_FORMAT.into(),
            version: VERSION,
            algebra: AlgebraDoc {
                block_dims: alg.block_dims().to_vec(),
                trace_weights: alg.trace_weights().to_vec(),
            },
            filtration: FiltrationDoc {
                times: filtration.times().to_vec(),
                levels: filtration
                    .levels()
                    .iter()
                    .map(|l| LevelDoc {
                        basis: Some(l.basis().iter().map(element_to_doc).collect()),
                        generators: None,
                    })
                    .collect(),
            },
            process: process.values().iter().map(element_to_doc).collect(),
        }
    }

    /// Builds the market. Only structure is checked here; nesting, adaptedness and
    /// self-adjointness are left to the validators.
    pub fn to_market(&self) -> Result<Market, FormatError> {
        check_header("header", &self.format, self.version, MARKET_FORMAT)?;
        let alg = MultiMatrixAlgebra::new(
            self.algebra.block_dims.clone(),
            self.algebra.trace_weights.clone(),
        )
        .map_err(|e| FormatError::section("algebra", e))?;
        let mut levels = Vec::with_capacity(self.filtration.levels.len());
        for (k, level) in self.filtration.levels.iter().enumerate() {
            let section = format!("filtration.levels[{k}]");
            let sub = match (&level.basis, &level.generators) {
                (Some(basis), None) => {
                    let basis = elements_from_docs(basis, &alg, &format!("{section}.basis"))?;
                    Subalgebra::from_orthonormal_basis(&alg, basis, BASIS_TOL)
                }
                (None, Some(gens)) => {
                    let gens = elements_from_docs(gens, &alg, &format!("{section}.generators"))?;
                    make_subalgebra(&alg, &gens)
                }
                _ => {
                    return Err(FormatError::section(
                        section,
                        "exactly one of \"basis\" or \"generators\" is required",
                    ))
                }
            }
            .map_err(|e| FormatError::section(&section, e))?;
            levels.push(sub);
        }
        let filtration = Arc::new(
            Filtration::new(alg.clone(), self.filtration.times.clone(), levels)
                .map_err(|e| FormatError::section("filtration", e))?,
        );
        let values = elements_from_docs(&self.process, &alg, "process")?;
        let process = AdaptedProcess::new(filtration.clone(), values)
            .map_err(|e| FormatError::section("process", e))?;
        Ok(Market {
            filtration,
            process,
        })
    }
}

pub fn parse_market(text: &str) -> Result<Market, FormatError> {
    serde_json::from_str::<MarketDoc>(text)?.to_market()
}

pub fn emit_market(market: &Market) -> String {
    let doc = MarketDoc::from_market(&market.filtration, &market.process);
    to_text(&serde_json::to_value(doc).expect("market documents serialize"))
}

/// A strategy file: real-weighted `a ⊗ a*` terms or a general biprocess.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyDoc {
    pub format: String,
    pub version: u64,
    #[serde(flatten)]
    pub body: StrategyBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "steps", rename_all = "lowercase")]
pub enum StrategyBody {
    Strategy(Vec<Vec<WeightedTerm>>),
    Biprocess(Vec<Vec<PairTerm>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub element: ElementDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTerm {
    pub left: ElementDoc,
    pub right: ElementDoc,
}

#[derive(Debug, Clone)]
pub enum Integrand {
    Strategy(TradingStrategy),
    Biprocess(SimpleBiprocess),
}

impl Integrand {
    pub fn stopped_integral(
        &self,
        s: f64,
        t: f64,
        x: &AdaptedProcess,
    ) -> ncftap_core::Result<AlgebraElement> {
        match self {
            Integrand::Strategy(h) => h.stopped_integral(s, t, x),
            Integrand::Biprocess(h) => h.stopped_integral(s, t, x),
        }
    }
}

pub fn strategy_body(h: &TradingStrategy) -> StrategyBody {
    StrategyBody::Strategy(
        h.steps()
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(w, a)| WeightedTerm {
                        weight: *w,
                        element: element_to_doc(a),
                    })
                    .collect()
            })
            .collect(),
    )
}

pub fn emit_strategy(h: &TradingStrategy) -> String {
    let doc = StrategyDoc {
        format: STRATEGY_FORMAT.into(),
        version: VERSION,
        body: strategy_body(h),
    };
    to_text(&serde_json::to_value(doc).expect("strategy documents serialize"))
}

impl StrategyBody {
    pub fn to_integrand(&self, f: &Arc<Filtration>, section: &str) -> Result<Integrand, FormatError> {
        let alg = f.algebra();
        match self {
            StrategyBody::Strategy(steps) => {
                let mut out = Vec::with_capacity(steps.len());
                for (k, terms) in steps.iter().enumerate() {
                    let mut step = Vec::with_capacity(terms.len());
                    for (j, t) in terms.iter().enumerate() {
                        let a = element_from_doc(&t.element, alg, &format!("{section}.steps[{k}][{j}].element"))?;
                        step.push((t.weight, a));
                    }
                    out.push(step);
                }
                TradingStrategy::new(f.clone(), out)
                    .map(Integrand::Strategy)
                    .map_err(|e| FormatError::section(section, e))
            }
            StrategyBody::Biprocess(steps) => {
                let mut out = Vec::with_capacity(steps.len());
                for (k, terms) in steps.iter().enumerate() {
                    let mut step = Vec::with_capacity(terms.len());
                    for (j, t) in terms.iter().enumerate() {
                        let at = format!("{section}.steps[{k}][{j}]");
                        step.push((
                            element_from_doc(&t.left, alg, &format!("{at}.left"))?,
                            element_from_doc(&t.right, alg, &format!("{at}.right"))?,
                        ));
                    }
                    out.push(step);
                }
                SimpleBiprocess::new(f.clone(), out)
                    .map(Integrand::Biprocess)
                    .map_err(|e| FormatError::section(section, e))
            }
        }
    }
}

pub fn parse_strategy(text: &str, f: &Arc<Filtration>) -> Result<Integrand, FormatError> {
    let doc: StrategyDoc = serde_json::from_str(text)?;
    check_header("header", &doc.format, doc.version, STRATEGY_FORMAT)?;
    doc.body.to_integrand(f, "strategy")
}

pub fn element_value(x: &AlgebraElement) -> Value {
    serde_json::to_value(element_to_doc(x)).expect("elements serialize")
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn solver_name(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Barrier => "barrier",
        SolverKind::Supergradient => "supergradient",
    }
}

pub fn exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Ems => 0,
        Outcome::Arbitrage => 2,
        Outcome::Undecided => 3,
    }
}

pub fn report_value(report: &CertificateReport) -> Value {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            let (kind, threshold) = match c.bound {
                Bound::AtMost(t) => ("at_most", t),
                Bound::AtLeast(t) => ("at_least", t),
            };
            json!({
                "name": c.name,
                "value": finite_or_null(c.value),
                "bound": kind,
                "threshold": threshold,
                "passed": c.passed,
            })
        })
        .collect();
    json!({ "passed": report.passed, "checks": checks })
}

/// Structured verdict. It carries everything `verify_certificate` reads, so a
/// verdict can be re-checked later against the market file alone.
pub fn verdict_value(v: &Verdict) -> Value {
    let ems = v.ems.as_ref().map_or(Value::Null, |c| {
        json!({
            "lambda": c.lambda,
            "density": element_value(c.state.density()),
        })
    });
    let arbitrage = v.arbitrage.as_ref().map_or(Value::Null, |c| {
        json!({
            "mu": c.mu,
            "payoff": element_value(&c.payoff),
            "strategy": serde_json::to_value(strategy_body(&c.strategy)).expect("strategies serialize"),
        })
    });
    json!({
        "format": VERDICT_FORMAT,
        "version": VERSION,
        "outcome": v.outcome.as_str(),
        "exit_code": exit_code(v.outcome),
        "lambda": finite_or_null(v.lambda),
        "mu": v.mu.map_or(Value::Null, finite_or_null),
        "payoff_dim": v.payoff_dim,
        "options": {
            "tol": v.options.tol,
            "tol_pos": v.options.tol_pos,
            "solver": solver_name(v.options.solver),
        },
        "ems": ems,
        "arbitrage": arbitrage,
        "report": report_value(&v.report),
    })
}

#[derive(Debug, Deserialize)]
struct VerdictDoc {
    format: String,
    version: u64,
    outcome: String,
    lambda: Option<f64>,
    mu: Option<f64>,
    payoff_dim: usize,
    options: OptionsDoc,
    ems: Option<EmsDoc>,
    arbitrage: Option<ArbitrageDoc>,
}

#[derive(Debug, Deserialize)]
struct OptionsDoc {
    tol: f64,
    tol_pos: f64,
    solver: String,
}

#[derive(Debug, Deserialize)]
struct EmsDoc {
    lambda: f64,
    density: ElementDoc,
}

#[derive(Debug, Deserialize)]
struct ArbitrageDoc {
    mu: f64,
    payoff: ElementDoc,
    strategy: StrategyBody,
}

/// A verdict read back from its structured form. `density_defect` is the
/// self-adjointness defect of the density as written, before symmetrization.
#[derive(Debug, Clone)]
pub struct StoredVerdict {
    pub verdict: Verdict,
    pub density_defect: Option<f64>,
}

pub fn parse_verdict(text: &str, market: &Market) -> Result<StoredVerdict, FormatError> {
    let doc: VerdictDoc = serde_json::from_str(text)?;
    check_header("header", &doc.format, doc.version, VERDICT_FORMAT)?;
    let outcome = match doc.outcome.as_str() {
        "EMS" => Outcome::Ems,
        "ARBITRAGE" => Outcome::Arbitrage,
        "UNDECIDED" => Outcome::Undecided,
        other => return Err(FormatError::section("outcome", format!("unknown outcome {other:?}"))),
    };
    let solver = match doc.options.solver.as_str() {
        "barrier" => SolverKind::Barrier,
        "supergradient" => SolverKind::Supergradient,
        other => return Err(FormatError::section("options.solver", format!("unknown solver {other:?}"))),
    };
    let options = SolverOptions {
        tol: doc.options.tol,
        tol_pos: doc.options.tol_pos,
        solver,
    };
    let alg = market.filtration.algebra();
    let mut density_defect = None;
    let ems = match &doc.ems {
        None => None,
        Some(e) => {
            let density = element_from_doc(&e.density, alg, "ems.density")?;
            density_defect = Some(density.self_adjoint_defect());
            // Admit any density of the right shape; judging it is the verifier's job.
            let state = State::new(alg, density, f64::INFINITY)
                .map_err(|e| FormatError::section("ems.density", e))?;
            Some(EmsCertificate {
                state,
                lambda: e.lambda,
            })
        }
    };
    let arbitrage = match &doc.arbitrage {
        None => None,
        Some(a) => {
            let strategy = match a.strategy.to_integrand(&market.filtration, "arbitrage.strategy")? {
                Integrand::Strategy(h) => h,
                Integrand::Biprocess(_) => {
                    return Err(FormatError::section(
                        "arbitrage.strategy",
                        "an arbitrage certificate needs a strategy, not a biprocess",
                    ))
                }
            };
            Some(ArbitrageCertificate {
                strategy,
                payoff: element_from_doc(&a.payoff, alg, "arbitrage.payoff")?,
                mu: a.mu,
            })
        }
    };
    let verdict = Verdict {
        outcome,
        ems,
        arbitrage,
        lambda: doc.lambda.unwrap_or(f64::NEG_INFINITY),
        mu: doc.mu.or(if outcome == Outcome::Ems { None } else { Some(f64::NEG_INFINITY) }),
        payoff_dim: doc.payoff_dim,
        options,
        report: CertificateReport {
            outcome,
            checks: Vec::new(),
            passed: true,
        },
    };
    Ok(StoredVerdict {
        verdict,
        density_defect,
    })
}

/// Pretty JSON with short arrays (rows of `[re, im]` pairs, time grids) on one line.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn depth(v: &Value) -> usize {
    match v {
        Value::Array(a) => 1 + a.iter().map(depth).max().unwrap_or(0),
        Value::Object(_) => usize::MAX / 2,
        _ => 0,
    }
}

fn indent(n: usize, out: &mut String) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) if depth(v) <= 2 => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, level, out);
            }
            out.push(']');
        }
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                indent(level + 1, out);
                write_value(x, level + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                indent(level + 1, out);
                let _ = write!(out, "{}: ", Value::String(k.clone()));
                write_value(x, level + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push('}');
        }
        scalar => {
            let _ = write!(out, "{scalar}");
        }
    }
}

/// Human-readable blocks, one matrix row per line.
pub fn element_text(x: &AlgebraElement, pad: &str) -> String {
    let mut out = String::new();
    for (b, block) in x.blocks().iter().enumerate() {
        let _ = writeln!(out, "{pad}block {b} ({n}x{n}):", n = block.nrows());
        for i in 0..block.nrows() {
            let row: Vec<String> = (0..block.ncols()).map(|j| complex_text(block[(i, j)])).collect();
            let _ = writeln!(out, "{pad}  [{}]", row.join(", "));
        }
    }
    out
}

fn complex_text(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}
