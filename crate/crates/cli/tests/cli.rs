use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn band(kind: &str, odd: f64, even: f64, extra: &str) -> String {
    format!("kind = \"{kind}\"\nodd-limit = {odd:?}\neven-limit = {even:?}\n{extra}\n")
}

fn config(task: &str, a: &str, b: &str, c: &str, tail: &str) -> String {
    format!("task = \"{task}\"\n{tail}\n[model.a]\n{a}\n[model.b]\n{b}\n[model.c]\n{c}\n")
}

fn free_bands() -> (String, String) {
    (band("constant", 1.0, 1.0, ""), band("constant", 1.0, 1.0, ""))
}

fn single_site(task: &str) -> String {
    let (b, c) = free_bands();
    config(task, &band("finite-support", 0.0, 0.0, "overrides = [[1, 3.0]]"), &b, &c, "")
}

struct Run {
    code: i32,
    report: Value,
}

fn run(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, text).unwrap();
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_pentaspec"))
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    let report = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    Run {
        code: status.status.code().unwrap(),
        report,
    }
}

#[test]
fn essential_spectrum_two_bands() {
    let tmp = tempfile::tempdir().unwrap();
    let (b, c) = free_bands();
    let text = config("essential-spectrum", &band("constant", 0.0, 5.0, ""), &b, &c, "");
    let r = run(tmp.path(), "ess", &text, &[]);
    assert_eq!(r.code, 0);
    assert_eq!(r.report["status"], "ok");
    let iv: Vec<[f64; 2]> = serde_json::from_value(r.report["result"]["intervals"].clone()).unwrap();
    assert_eq!(iv, vec![[-2.0, 2.0], [3.0, 7.0]]);
    assert_eq!(r.report["config_sha256"].as_str().unwrap().len(), 64);
    assert!(tmp.path().join("ess/intervals.csv").exists());
    assert!(tmp.path().join("ess/plot.gp").exists());
}

#[test]
fn single_site_eigenvalue() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), "eig", &single_site("eigenvalues"), &[]);
    assert_eq!(r.code, 0);
    let eig = r.report["result"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 1);
    assert!((eig[0]["re"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-10);
    assert_eq!(eig[0]["matched_by_adjoint"], true);
    let csv = fs::read_to_string(tmp.path().join("eig/eigenvalues.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn zero_off_diagonal_limit_is_a_model_error() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = band("constant", 0.0, 1.0, "");
    let text = config("essential-spectrum", &band("constant", 0.0, 0.0, ""), &zero, &zero, "");
    let r = run(tmp.path(), "bad", &text, &[]);
    assert_eq!(r.code, 2);
    assert_eq!(r.report["status"], "error");
    assert_eq!(r.report["exit_code"], 2);
    assert!(r.report["error"]["message"].as_str().unwrap().contains("s1"), "{}", r.report["error"]);
}

#[test]
fn mismatched_limits_are_a_model_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = config(
        "essential-spectrum",
        &band("constant", 0.0, 0.0, ""),
        &band("constant", 1.0, 1.0, ""),
        &band("constant", 2.0, 1.0, ""),
        "",
    );
    let r = run(tmp.path(), "mismatch", &text, &[]);
    assert_eq!(r.code, 2);
    assert_eq!(r.report["error"]["kind"], "model-inconsistency");
}

#[test]
fn malformed_config_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), "broken", "task = \"essential-spectrum\"\n[model.a\n", &[]);
    assert_eq!(r.code, 1);
    assert_eq!(r.report["error"]["kind"], "config");
    let (b, c) = free_bands();
    let text = config("essential-spectrum", &band("constant", 0.0, 0.0, ""), &b, &c, "[params]\ncollar = 0.0");
    assert_eq!(run(tmp.path(), "collar", &text, &[]).code, 1);
}

#[test]
fn power_law_needs_acknowledgment() {
    let tmp = tempfile::tempdir().unwrap();
    let (b, c) = free_bands();
    let a = band("power-law", 0.0, 0.0, "amplitude = 0.5\nexponent = 6.0");
    let r = run(tmp.path(), "gate", &config("fine-spectrum", &a, &b, &c, ""), &[]);
    assert_eq!(r.code, 3);
    assert_eq!(r.report["error"]["kind"], "hypothesis-unmet");
    assert_eq!(r.report["error"]["attachment"]["rate_verdict"]["status"], "fails");

    let r = run(
        tmp.path(),
        "ack",
        &config("fine-spectrum", &a, &b, &c, "acknowledge-hypothesis = true"),
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.report);
    assert_eq!(r.report["acknowledge_hypothesis"], true);
    assert_eq!(r.report["heuristic"], true);
}

#[test]
fn fine_spectrum_of_t0() {
    let tmp = tempfile::tempdir().unwrap();
    let (b, c) = free_bands();
    let text = config("fine-spectrum", &band("constant", 0.0, 0.0, ""), &b, &c, "");
    let r = run(tmp.path(), "fine0", &text, &[]);
    assert_eq!(r.code, 0);
    let sets = &r.report["result"]["sets"];
    for empty in ["point", "residual", "compression", "discrete"] {
        assert_eq!(sets[empty]["intervals"].as_array().unwrap().len(), 0, "{empty}");
        assert_eq!(sets[empty]["points"].as_array().unwrap().len(), 0, "{empty}");
    }
    for full in ["spectrum", "continuous", "essential", "approximate", "defect"] {
        assert_eq!(sets[full]["intervals"], serde_json::json!([[-2.0, 2.0]]), "{full}");
    }
    assert_eq!(r.report["result"]["identities_hold"], true);
}

#[test]
fn fine_spectrum_with_eigenvalue() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), "fine1", &single_site("fine-spectrum"), &[]);
    assert_eq!(r.code, 0);
    let sets = &r.report["result"]["sets"];
    for s in ["point", "discrete", "compression"] {
        assert_eq!(sets[s]["points"].as_array().unwrap().len(), 1, "{s}");
    }
    assert_eq!(sets["residual"]["points"].as_array().unwrap().len(), 0);
    assert_eq!(sets["spectrum"]["points"].as_array().unwrap().len(), 1);
}

#[test]
fn report_is_reproducible_except_timestamp() {
    let tmp = tempfile::tempdir().unwrap();
    let (b, c) = free_bands();
    let text = config("norm-bounds", &band("constant", 0.5, -1.0, ""), &b, &c, "p = 3.0");
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timestamp_unix");
        v
    };
    let a = strip(run(tmp.path(), "n1", &text, &["--seed", "7"]).report);
    let b2 = strip(run(tmp.path(), "n2", &text, &["--seed", "7"]).report);
    assert_eq!(a, b2);
    assert_eq!(a["seed"], 7);
    let lower = a["result"]["t0_lower"].as_f64().unwrap();
    assert!((a["result"]["witness_ratio"].as_f64().unwrap() - lower).abs() < 1e-12);
}

#[test]
fn conditions_truncate_portrait() {
    let tmp = tempfile::tempdir().unwrap();
    let (b, c) = free_bands();
    let expo = band("exponential", 0.0, 0.0, "amplitude = 0.1\nrate = 0.5");
    let r = run(
        tmp.path(),
        "cond",
        &config("check-conditions", &expo, &b, &c, "[params]\nlambdas = [0.0, 2.0]"),
        &[],
    );
    assert_eq!(r.code, 0);
    let v = r.report["result"]["verdicts"].as_array().unwrap();
    assert_eq!(v.len(), 2);
    assert!(v.iter().all(|x| x["status"] == "guaranteed-absent"));
    assert!(tmp.path().join("cond/partial_sums.csv").exists());

    let r = run(
        tmp.path(),
        "outside",
        &config("check-conditions", &expo, &b, &c, "[params]\nlambdas = [5.0]"),
        &[],
    );
    assert_eq!(r.code, 3);
    assert_eq!(r.report["error"]["kind"], "domain");

    let r = run(tmp.path(), "trunc", &single_site("truncate").replace("task = \"truncate\"", "task = \"truncate\"\n[params]\nn = 40"), &[]);
    assert_eq!(r.code, 0, "{}", r.report);
    assert_eq!(r.report["result"]["eigenvalues"].as_array().unwrap().len(), 40);
    let dense = fs::read_to_string(tmp.path().join("trunc/section_dense.csv")).unwrap();
    assert_eq!(dense.lines().count(), 40);

    let r = run(
        tmp.path(),
        "portrait",
        &single_site("portrait").replace("task = \"portrait\"", "task = \"portrait\"\n[params]\nschedule = [64, 128]"),
        &["--format", "csv"],
    );
    assert_eq!(r.code, 0);
    assert!(r.report.get("result").is_none());
    let csv = fs::read_to_string(tmp.path().join("portrait/portrait.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
