use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncftap::format::{element_from_doc, parse_market, ElementDoc};
use ncftap::{emit_market, Generator};
use ncftap_core::{AlgebraElement, TradingStrategy};
use serde_json::Value;
use tempfile::TempDir;

fn ncftap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncftap"))
        .args(args)
        .env_remove("NCFTAP_TOL")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ZERO: &str = "[[[[0, 0], [0, 0]], [[0, 0], [0, 0]]]]";
const E11: &str = "[[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]";
const E12: &str = "[[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]";
const SIGMA_X: &str = "[[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]]";
const IDENTITY: &str = "[[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]";

/// One-period market on M_2 with the given level generators and process values.
fn m2_market(times: &str, levels: &[&str], values: &[&str]) -> String {
    let levels: Vec<String> = levels.iter().map(|g| format!("{{\"generators\": [{g}]}}")).collect();
    format!(
        "{{\"format\": \"ncftap-market\", \"version\": 1,
          \"algebra\": {{\"block_dims\": [2], \"trace_weights\": [0.5]}},
          \"filtration\": {{\"times\": {times}, \"levels\": [{}]}},
          \"process\": [{}]}}",
        levels.join(", "),
        values.join(", ")
    )
}

fn one_period(dx: &str) -> String {
    m2_market("[0, 1]", &["", &format!("{E11}, {E12}")], &[ZERO, dx])
}

const DIAG_SYMMETRIC: &str = "[[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]";

#[test]
fn symmetric_market_is_ems_with_tracial_density() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "sym.json", &one_period(DIAG_SYMMETRIC));
    let o = ncftap(&["check", &p]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("outcome: EMS\n") && out.contains("density:\n"));
    assert!(out.contains("certificate: verified"));

    let v: Value = serde_json::from_str(&stdout(&ncftap(&["check", &p, "--json"]))).unwrap();
    let market = parse_market(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let doc: ElementDoc = serde_json::from_value(v["ems"]["density"].clone()).unwrap();
    let rho = element_from_doc(&doc, market.filtration.algebra(), "density").unwrap();
    let alg = market.filtration.algebra();
    assert!(alg.lp_norm(&(&rho - &alg.identity()), 2.0).unwrap() < 1e-12);
}

#[test]
fn identity_increment_is_arbitrage_holding_one_unit() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "id.json", &one_period(IDENTITY));
    let o = ncftap(&["check", &p]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("outcome: ARBITRAGE"));
    assert!(
        out.contains("step 0 [0, 1]:\n    weight 1:\n      block 0 (2x2):\n        [1, 0]\n        [0, 1]\n"),
        "{out}"
    );
}

#[test]
fn non_nested_filtration_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let text = m2_market("[0, 1, 2]", &["", E11, SIGMA_X], &[ZERO, ZERO, SIGMA_X]);
    let p = write(&dir, "nest.json", &text);
    let o = ncftap(&["check", &p]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("level 1 is not contained in level 2"), "{err}");
    assert!(err.contains("inclusion residual"), "{err}");
    let v = ncftap(&["validate", &p]);
    assert_eq!(code(&v), 1);
    assert!(stdout(&v).contains("result: FAILED: filtration: level 1"));
}

#[test]
fn undecided_has_its_own_status() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "sym.json", &one_period(DIAG_SYMMETRIC));
    let o = ncftap(&["check", &p, "--tol-pos", "10", "--json"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "UNDECIDED");
    assert_eq!(v["exit_code"], 3);
    assert!(v["ems"].is_null() && v["arbitrage"].is_null());
}

#[test]
fn malformed_files_report_positions_and_sections() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\n  \"format\": \"ncftap-market\",\n  \"version\": 1,\n  oops\n}");
    let o = ncftap(&["check", &p]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let text = one_period(DIAG_SYMMETRIC).replace("\"block_dims\": [2]", "\"block_dims\": [3]");
    let p = write(&dir, "shape.json", &text);
    let o = ncftap(&["validate", &p]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("filtration.levels[1].generators[0].block[0]"), "{}", stderr(&o));

    let o = ncftap(&["check", "--bogus"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn validate_names_broken_steps() {
    let dir = TempDir::new().unwrap();
    let adapted = m2_market("[0, 1, 2]", &["", E11, &format!("{E11}, {E12}")], &[ZERO, SIGMA_X, SIGMA_X]);
    let o = ncftap(&["validate", &write(&dir, "a.json", &adapted)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("step 1 is not adapted"), "{}", stdout(&o));

    let not_sa = one_period(E12);
    let o = ncftap(&["validate", &write(&dir, "s.json", &not_sa)]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("step 1 is not self-adjoint (residual 1.000e0)"), "{out}");
}

#[test]
fn generated_files_validate_and_check() {
    let dir = TempDir::new().unwrap();
    let q = dir.path().join("q.json");
    let q = q.to_str().unwrap();
    let o = ncftap(&["generate", "qbinomial", "--periods", "1", "--up", "1.2", "--down", "0.9", "--rate", "0.05", "--out", q]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&ncftap(&["validate", q])), 0);
    assert_eq!(code(&ncftap(&["check", q])), 0);

    let c = dir.path().join("c.json");
    let c = c.to_str().unwrap();
    ncftap(&["generate", "classical", "--up", "1.2", "--down", "1.1", "--rate", "0.05", "--out", c]);
    assert_eq!(code(&ncftap(&["validate", c])), 0);
    assert_eq!(code(&ncftap(&["check", c])), 2);

    let o = ncftap(&["generate", "qbinomial", "--up", "0.9", "--down", "1.2"]);
    assert_eq!(code(&o), 1);
    let o = ncftap(&["generate", "classical", "--up", "1.2", "--down", "0.9", "--periods", "9"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn random_generation_is_deterministic_and_matches_golden() {
    let args = ["generate", "random", "--seed", "7", "--dims", "2,1", "--periods", "2"];
    let a = stdout(&ncftap(&args));
    let b = stdout(&ncftap(&args));
    assert_eq!(a, b);
    let expected = std::fs::read_to_string(golden("random-seed7.json")).unwrap();
    assert_eq!(a, expected);
    assert_ne!(a, stdout(&ncftap(&["generate", "random", "--seed", "8", "--dims", "2,1", "--periods", "2"])));
}

#[test]
fn emitted_markets_round_trip_byte_for_byte() {
    let mut gens = vec![
        Generator::Classical {
            spot: 100.0,
            up: 1.1,
            down: 0.95,
            rate: 0.01,
            periods: 3,
        },
        Generator::QuantumBinomial {
            spot: 1.0,
            up: 1.3,
            down: 0.8,
            rate: 0.02,
            periods: 2,
            angles: vec![0.3, -1.1],
        },
    ];
    for seed in 0..20 {
        gens.push(Generator::Random {
            seed,
            dims: vec![1 + (seed as usize % 3), 2],
            periods: 1 + seed as usize % 3,
            martingale: seed % 2 == 0,
        });
    }
    for g in &gens {
        let text = ncftap::commands::generate(g).unwrap();
        let m = parse_market(&text).unwrap();
        assert_eq!(emit_market(&m), text, "{g:?}");
    }
}

fn integrate_json(args: &[&str]) -> (AlgebraElement, Value) {
    let o = ncftap(args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let market = parse_market(&std::fs::read_to_string(args[1]).unwrap()).unwrap();
    let doc: ElementDoc = serde_json::from_value(v["element"].clone()).unwrap();
    (element_from_doc(&doc, market.filtration.algebra(), "element").unwrap(), v)
}

#[test]
fn integrals_match_the_library_bit_for_bit() {
    let path = golden("random-seed7.json");
    let path = path.to_str().unwrap();
    let market = parse_market(&std::fs::read_to_string(path).unwrap()).unwrap();
    let f = &market.filtration;
    let x = &market.process;

    let (y, v) = integrate_json(&["integrate", path, "identity", "--json"]);
    let expected = TradingStrategy::identity(f.clone()).integral(x).unwrap();
    assert_eq!(y, expected);
    assert_eq!(y, x.value(2) - x.value(0));
    assert_eq!(v["self_adjoint_residual"], 0.0);

    let (y, _) = integrate_json(&["integrate", path, "identity", "--from", "1", "--to", "1", "--json"]);
    assert!(y.is_zero());

    let strategy_path = golden("strategy-seed7.json");
    let (y, v) = integrate_json(&["integrate", path, strategy_path.to_str().unwrap(), "--from", "1", "--json"]);
    let h = match ncftap::format::parse_strategy(&std::fs::read_to_string(&strategy_path).unwrap(), f).unwrap() {
        ncftap::format::Integrand::Strategy(h) => h,
        other => panic!("{other:?}"),
    };
    assert_eq!(y, h.stopped_integral(1.0, 2.0, x).unwrap());
    assert!(v["self_adjoint_residual"].as_f64().unwrap() < 1e-12);

    let o = ncftap(&["integrate", path, "identity", "--to", "1.5"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not a grid point"));
}

#[test]
fn json_verdicts_verify_and_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let market = write(&dir, "m.json", &ncftap::commands::generate(&Generator::Random {
        seed: 11,
        dims: vec![2, 2],
        periods: 2,
        martingale: true,
    })
    .unwrap());
    let o = ncftap(&["check", &market, "--json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let verdict = write(&dir, "v.json", &stdout(&o));
    let ok = ncftap(&["verify", &market, &verdict]);
    assert_eq!(code(&ok), 0, "{}{}", stdout(&ok), stderr(&ok));

    let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["ems"]["density"][0][0][0] = serde_json::json!([-0.5, 0.0]);
    let bad = write(&dir, "bad.json", &v.to_string());
    let o = ncftap(&["verify", &market, &bad, "--json"]);
    assert_eq!(code(&o), 4);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["passed"], false);
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"density_min_eigenvalue"), "{failed:?}");

    let arb = write(&dir, "id.json", &one_period(IDENTITY));
    let o = ncftap(&["check", &arb, "--json"]);
    assert_eq!(code(&o), 2);
    let verdict = write(&dir, "va.json", &stdout(&o));
    assert_eq!(code(&ncftap(&["verify", &arb, &verdict])), 0);
    let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["arbitrage"]["strategy"]["steps"][0][0]["weight"] = serde_json::json!(2.0);
    let bad = write(&dir, "bada.json", &v.to_string());
    let o = ncftap(&["verify", &arb, &bad]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("payoff_reconstruction"));
}

#[test]
fn tolerance_comes_from_the_environment() {
    let path = golden("random-seed7.json");
    let run = |tol: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_ncftap"));
        c.args(["validate", path.to_str().unwrap()]).env_remove("NCFTAP_TOL");
        if let Some(t) = tol {
            c.env("NCFTAP_TOL", t);
        }
        c.output().unwrap()
    };
    assert_eq!(code(&run(None)), 0);
    let strict = run(Some("1e-30"));
    assert_eq!(code(&strict), 1);
    assert!(stdout(&strict).contains("result: FAILED"));
    assert_eq!(code(&run(Some("not-a-number"))), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_ncftap"))
        .args(["check", path.to_str().unwrap(), "--json"])
        .env("NCFTAP_TOL", "1e-7")
        .output()
        .unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["options"]["tol"], 1e-7);
}

#[test]
fn batch_reports_every_file_and_the_worst_status() {
    let dir = TempDir::new().unwrap();
    write(&dir, "a-sym.json", &one_period(DIAG_SYMMETRIC));
    write(&dir, "b-id.json", &one_period(IDENTITY));
    write(&dir, "notes.txt", "ignored");
    let d = dir.path().to_str().unwrap();
    let o = ncftap(&["check", "--batch", d]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("a-sym.json: EMS"));
    assert!(lines[1].contains("b-id.json: ARBITRAGE"));

    write(&dir, "c-broken.json", "{}");
    let o = ncftap(&["check", "--batch", d, "--json"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[2]["error"].is_string());
    assert_eq!(v[0]["verdict"]["outcome"], "EMS");
}
