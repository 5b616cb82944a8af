use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use ncftap_core::ftap::{Bound, CertificateReport, SolverKind};
use ncftap_core::models::{
    embed_classical, quantum_binomial, random_market, random_martingale_market, ClassicalTree,
    QuantumBinomialSpec,
};
use ncftap_core::{check_nfl, verify_certificate, SolverOptions, TradingStrategy, Verdict};
use serde_json::{json, Value};

use crate::format::{
    element_text, element_value, emit_market, exit_code, parse_market, parse_strategy,
    parse_verdict, report_value, solver_name, to_text, verdict_value, FormatError, Integrand,
    Market, ELEMENT_FORMAT, VERSION,
};

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_REJECTED: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] ncftap_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and parses a market file without semantic validation.
pub fn load_market(path: &Path) -> Result<Market> {
    parse_market(&read(path)?).map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })
}

/// Fails with the first filtration or process defect.
pub fn require_valid(market: &Market, tol: f64) -> Result<()> {
    if let Some((_, why)) = market.filtration.validate(tol).first_failure(tol) {
        return Err(CliError::Invalid(format!("filtration: {why}")));
    }
    if let Some((_, why)) = market.process.validate(tol).first_failure(tol) {
        return Err(CliError::Invalid(format!("process: {why}")));
    }
    Ok(())
}

fn load_valid(path: &Path, tol: f64) -> Result<Market> {
    let m = load_market(path)?;
    require_valid(&m, tol).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(m)
}

fn margin(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(_) => "-inf".into(),
        None => "n/a".into(),
    }
}

fn report_text(report: &CertificateReport, out: &mut String) {
    let status = if report.passed { "verified" } else { "REJECTED" };
    let _ = writeln!(out, "certificate: {status}");
    for c in &report.checks {
        let (op, t) = match c.bound {
            Bound::AtMost(t) => ("<=", t),
            Bound::AtLeast(t) => (">=", t),
        };
        let mark = if c.passed { "ok" } else { "FAIL" };
        let _ = writeln!(out, "  {} = {:.3e} ({op} {t:e}) {mark}", c.name, c.value);
    }
}

fn strategy_text(h: &TradingStrategy, out: &mut String) {
    let times = h.filtration().times();
    for (k, terms) in h.steps().iter().enumerate() {
        let _ = writeln!(out, "  step {k} [{}, {}]:", times[k], times[k + 1]);
        for (w, a) in terms {
            let _ = writeln!(out, "    weight {w}:");
            out.push_str(&element_text(a, "      "));
        }
    }
}

pub fn verdict_text(v: &Verdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "outcome: {}", v.outcome);
    let _ = writeln!(out, "lambda*: {}", margin(Some(v.lambda)));
    let _ = writeln!(out, "mu*: {}", margin(v.mu));
    let _ = writeln!(out, "payoff dimension: {}", v.payoff_dim);
    let _ = writeln!(
        out,
        "solver: {} (tol {:e}, tol_pos {:e})",
        solver_name(v.options.solver),
        v.options.tol,
        v.options.tol_pos
    );
    if let Some(c) = &v.ems {
        out.push_str("density:\n");
        out.push_str(&element_text(c.state.density(), "  "));
    }
    if let Some(c) = &v.arbitrage {
        out.push_str("strategy:\n");
        strategy_text(&c.strategy, &mut out);
        out.push_str("payoff:\n");
        out.push_str(&element_text(&c.payoff, "  "));
    }
    report_text(&v.report, &mut out);
    out
}

pub fn check(path: &Path, opts: &SolverOptions, json: bool, out: &mut impl Write) -> Result<u8> {
    let m = load_valid(path, opts.tol)?;
    let v = check_nfl(&m.process, opts)?;
    if json {
        out.write_all(to_text(&verdict_value(&v)).as_bytes())?;
    } else {
        out.write_all(verdict_text(&v).as_bytes())?;
    }
    Ok(exit_code(v.outcome))
}

fn batch_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Checks every `*.json` file in `dir`, in parallel. The exit status is the most
/// severe per-file status: input error, then UNDECIDED, then ARBITRAGE, then EMS.
pub fn check_batch(dir: &Path, opts: &SolverOptions, json: bool, out: &mut impl Write) -> Result<u8> {
    let files = batch_files(dir)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(files.len().max(1));
    let mut results: Vec<Option<Result<Verdict>>> = (0..files.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunk = files.len().div_ceil(workers).max(1);
        for (paths, slots) in files.chunks(chunk).zip(results.chunks_mut(chunk)) {
            s.spawn(move || {
                for (p, slot) in paths.iter().zip(slots) {
                    *slot = Some(load_valid(p, opts.tol).and_then(|m| Ok(check_nfl(&m.process, opts)?)));
                }
            });
        }
    });

    let severity = |code: u8| match code {
        0 => 0,
        2 => 1,
        3 => 2,
        _ => 3,
    };
    let mut worst = 0u8;
    let mut docs = Vec::new();
    let mut text = String::new();
    for (p, r) in files.iter().zip(results) {
        let r = r.expect("every file is processed");
        let code = r.as_ref().map_or(EXIT_INPUT, |v| exit_code(v.outcome));
        if severity(code) > severity(worst) {
            worst = code;
        }
        let name = p.display().to_string();
        match r {
            Ok(v) => {
                let status = if v.report.passed { "verified" } else { "REJECTED" };
                let _ = writeln!(
                    text,
                    "{name}: {} lambda*={} mu*={} certificate {status}",
                    v.outcome,
                    margin(Some(v.lambda)),
                    margin(v.mu)
                );
                docs.push(json!({"file": name, "verdict": verdict_value(&v)}));
            }
            Err(e) => {
                let _ = writeln!(text, "{name}: error: {e}");
                docs.push(json!({"file": name, "error": e.to_string()}));
            }
        }
    }
    if json {
        out.write_all(to_text(&Value::Array(docs)).as_bytes())?;
    } else {
        out.write_all(text.as_bytes())?;
    }
    Ok(worst)
}

pub fn integrate(
    path: &Path,
    spec: &str,
    from: Option<f64>,
    to: Option<f64>,
    tol: f64,
    json: bool,
    out: &mut impl Write,
) -> Result<u8> {
    let m = load_valid(path, tol)?;
    let f = &m.filtration;
    let h = if spec == "identity" {
        Integrand::Strategy(TradingStrategy::identity(f.clone()))
    } else {
        let p = Path::new(spec);
        parse_strategy(&read(p)?, f).map_err(|source| CliError::Format {
            path: p.to_path_buf(),
            source,
        })?
    };
    let times = f.times();
    let s = from.unwrap_or(times[0]);
    let t = to.unwrap_or(times[times.len() - 1]);
    let y = h.stopped_integral(s, t, &m.process)?;
    let residual = match h {
        Integrand::Strategy(_) => Some(f.algebra().lp_norm(&(&y - &y.adjoint()), 2.0)?),
        Integrand::Biprocess(_) => None,
    };
    if json {
        let mut doc = json!({
            "format": ELEMENT_FORMAT,
            "version": VERSION,
            "from": s,
            "to": t,
            "element": element_value(&y),
        });
        if let Some(r) = residual {
            doc["self_adjoint_residual"] = json!(r);
        }
        out.write_all(to_text(&doc).as_bytes())?;
    } else {
        let mut text = format!("integral over [{s}, {t}]:\n");
        text.push_str(&element_text(&y, "  "));
        if let Some(r) = residual {
            let _ = writeln!(text, "self-adjoint residual: {r:.3e}");
        }
        out.write_all(text.as_bytes())?;
    }
    Ok(0)
}

#[derive(Debug, Clone)]
pub enum Generator {
    Classical {
        spot: f64,
        up: f64,
        down: f64,
        rate: f64,
        periods: usize,
    },
    QuantumBinomial {
        spot: f64,
        up: f64,
        down: f64,
        rate: f64,
        periods: usize,
        /// One angle for every period, or one per period.
        angles: Vec<f64>,
    },
    Random {
        seed: u64,
        dims: Vec<usize>,
        periods: usize,
        martingale: bool,
    },
}

pub fn generate(g: &Generator) -> Result<String> {
    let (filtration, process) = match g {
        Generator::Classical {
            spot,
            up,
            down,
            rate,
            periods,
        } => embed_classical(&ClassicalTree::binomial(*spot, *up, *down, *rate, *periods)?)?,
        Generator::QuantumBinomial {
            spot,
            up,
            down,
            rate,
            periods,
            angles,
        } => {
            let mut spec = QuantumBinomialSpec::new(*periods, *up, *down, *rate);
            spec.spot = *spot;
            match angles.as_slice() {
                [] => {}
                [a] => spec = spec.with_angle(*a),
                many if many.len() == *periods => spec.basis_angles = many.to_vec(),
                many => {
                    return Err(CliError::Invalid(format!(
                        "{} angles given for {periods} periods",
                        many.len()
                    )))
                }
            }
            quantum_binomial(&spec)?
        }
        Generator::Random {
            seed,
            dims,
            periods,
            martingale,
        } => {
            if *martingale {
                let (f, x, _) = random_martingale_market(*seed, dims, *periods)?;
                (f, x)
            } else {
                random_market(*seed, dims, *periods)?
            }
        }
    };
    Ok(emit_market(&Market {
        filtration,
        process,
    }))
}

pub fn validate(path: &Path, tol: f64, out: &mut impl Write) -> Result<u8> {
    let m = load_market(path)?;
    let alg = m.filtration.algebra();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "algebra: blocks {:?}, weights {:?}, dimension {}",
        alg.block_dims(),
        alg.trace_weights(),
        alg.algebra_dim()
    );
    let fr = m.filtration.validate(tol);
    text.push_str("filtration:\n");
    for l in &fr.levels {
        let s = &l.subalgebra;
        let _ = write!(
            text,
            "  level {} t={} dim {}: gram {:.3e}, identity {:.3e}, adjoint {:.3e}, product {:.3e}",
            l.index, l.time, s.dim, s.gram_residual, s.identity_residual, s.adjoint_residual, s.product_residual
        );
        match l.inclusion_residual {
            Some(r) => {
                let _ = writeln!(text, ", inclusion {r:.3e}");
            }
            None => text.push('\n'),
        }
    }
    let pr = m.process.validate(tol);
    text.push_str("process:\n");
    for (s, t) in pr.steps.iter().zip(m.filtration.times()) {
        let _ = writeln!(
            text,
            "  step {} t={t}: adaptedness {:.3e}, self-adjointness {:.3e}",
            s.index,
            s.adaptedness_residual,
            s.self_adjoint_residual.unwrap_or(0.0)
        );
    }
    let failure = fr
        .first_failure(tol)
        .map(|(_, why)| format!("filtration: {why}"))
        .or_else(|| pr.first_failure(tol).map(|(_, why)| format!("process: {why}")));
    let code = match &failure {
        None => {
            let _ = writeln!(text, "result: ok (tol {tol:e})");
            0
        }
        Some(why) => {
            let _ = writeln!(text, "result: FAILED: {why}");
            EXIT_INPUT
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(code)
}

/// Re-checks a stored verdict against its market. Exit 0 when every check
/// passes, [`EXIT_REJECTED`] otherwise.
pub fn verify(market: &Path, verdict: &Path, json: bool, out: &mut impl Write) -> Result<u8> {
    let m = load_market(market)?;
    let stored = parse_verdict(&read(verdict)?, &m).map_err(|source| CliError::Format {
        path: verdict.to_path_buf(),
        source,
    })?;
    let v = &stored.verdict;
    require_valid(&m, v.options.tol).map_err(|e| CliError::Invalid(format!("{}: {e}", market.display())))?;
    let mut report = verify_certificate(v, &m.process, &v.options)?;
    // The state constructor symmetrizes; judge the density as written too.
    if let Some(d) = stored.density_defect {
        let passed = d <= v.options.tol;
        report.passed &= passed;
        report.checks.insert(
            0,
            ncftap_core::ftap::Check {
                name: "stored_density_self_adjoint",
                value: d,
                bound: Bound::AtMost(v.options.tol),
                passed,
            },
        );
    }
    if json {
        let mut doc = report_value(&report);
        doc["outcome"] = json!(v.outcome.as_str());
        out.write_all(to_text(&doc).as_bytes())?;
    } else {
        let mut text = format!("outcome: {}\n", v.outcome);
        report_text(&report, &mut text);
        out.write_all(text.as_bytes())?;
    }
    Ok(if report.passed { 0 } else { EXIT_REJECTED })
}

pub fn solver_options(tol: f64, tol_pos: f64, solver: SolverKind) -> Result<SolverOptions> {
    if !(tol > 0.0 && tol.is_finite()) || !(tol_pos > 0.0 && tol_pos.is_finite()) {
        return Err(CliError::Invalid(format!(
            "tolerances must be positive and finite, got tol {tol}, tol-pos {tol_pos}"
        )));
    }
    Ok(SolverOptions { tol, tol_pos, solver })
}
