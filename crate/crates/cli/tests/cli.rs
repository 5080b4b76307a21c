use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn pdfa(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pdfa").chain(args.iter().copied());
    let code = pdfa_cli::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn program(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares `actual` with the stored fixture; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing fixture {}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    std::io::Write::write_all(&mut f, contents.as_bytes()).unwrap();
    f
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap_or_else(|e| panic!("not JSON ({e}): {}", o.stdout))
}

const GOLDEN_RUNS: &[(&str, &str, &[&str])] = &[
    ("running.pw", "parse", &["parse"]),
    ("running.pw", "pretty", &["pretty"]),
    ("running.pw", "cfg", &["cfg"]),
    ("running.pw", "cfg.dot", &["cfg", "--format", "dot"]),
    ("running.pw", "lv", &["analyze", "lv"]),
    ("running.pw", "plv", &["analyze", "plv", "--abstraction", "forgetful:z"]),
    ("running.pw", "branch-probs", &["branch-probs"]),
    (
        "running.pw",
        "ops-3",
        &["ops", "--abstraction", "forgetful:z", "--label", "3"],
    ),
    ("running.pw", "exec", &["exec", "--trials", "20000", "--seed", "7"]),
    ("example1.pw", "cfg", &["cfg"]),
    ("example1.pw", "lv", &["analyze", "lv"]),
    ("example1.pw", "plv", &["analyze", "plv"]),
    ("example1.pw", "branch-probs", &["branch-probs"]),
    ("example1.pw", "exec", &["exec", "--trials", "20000", "--seed", "7"]),
    ("countprimes.pw", "lv", &["analyze", "lv"]),
    ("countprimes.pw", "plv", &["analyze", "plv"]),
    (
        "countprimes.pw",
        "branch-probs",
        &["branch-probs", "--abstraction", "parity:i,forgetful:p"],
    ),
    ("decrement.pw", "cfg", &["cfg"]),
    ("decrement.pw", "lv", &["analyze", "lv"]),
    ("decrement.pw", "plv", &["analyze", "plv"]),
    ("decrement.pw", "branch-probs", &["branch-probs"]),
];

#[test]
fn golden_outputs() {
    for (prog, tag, args) in GOLDEN_RUNS {
        let path = program(prog);
        let mut argv: Vec<&str> = args.to_vec();
        argv.insert(
            args.iter().position(|a| a.starts_with("--")).unwrap_or(args.len()),
            &path,
        );
        let o = pdfa(&argv);
        assert_eq!(o.code, 0, "{prog} {tag}: {}", o.stderr);
        let ext = match *tag {
            "pretty" => "txt",
            "cfg.dot" => "",
            _ => "json",
        };
        let name = if ext.is_empty() {
            format!("{}.{tag}", prog.trim_end_matches(".pw"))
        } else {
            format!("{}.{tag}.{ext}", prog.trim_end_matches(".pw"))
        };
        check_golden(&name, &o.stdout);
    }
}

#[test]
fn abstract_test_golden() {
    let o = pdfa(&["abstract-test", "--n", "10", "--n", "100", "--format", "text"]);
    assert_eq!(o.code, 0);
    check_golden("abstract-test.txt", &o.stdout);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let p = program("countprimes.pw");
    for args in [
        vec!["analyze", "plv", p.as_str()],
        vec!["exec", p.as_str(), "--trials", "5000", "--seed", "3"],
    ] {
        let a = pdfa(&args);
        let b = pdfa(&args);
        assert_eq!(a.code, 0);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn every_report_carries_the_schema_tag() {
    let p = program("running.pw");
    for args in [
        vec!["parse", p.as_str()],
        vec!["cfg", p.as_str()],
        vec!["analyze", "lv", p.as_str()],
        vec!["branch-probs", p.as_str()],
        vec!["abstract-test", "--n", "10"],
        vec!["pretty", p.as_str(), "--format", "json"],
    ] {
        let o = pdfa(&args);
        assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
        assert_eq!(json(&o)["schema"], "pdfa/1", "{args:?}");
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let o = pdfa(&["cfg", "missing.pw"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("no such file"), "{}", o.stderr);
    assert_eq!(o.stderr.lines().count(), 1);
    let v = json(&o);
    assert_eq!(v["error"]["kind"], "input");
    assert!(v["error"]["message"].as_str().unwrap().contains("no such file"));
}

#[test]
fn text_errors_have_no_json_body() {
    let o = pdfa(&["pretty", "missing.pw"]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn parse_errors_point_at_the_source() {
    let f = temp_file("var x : 0..1;\n[x := ]^1\n");
    let o = pdfa(&["parse", f.path().to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.starts_with("pdfa: error: "), "{}", o.stderr);
}

#[test]
fn unknown_flag_is_rejected() {
    let o = pdfa(&["cfg", &program("running.pw"), "--bogus"]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn dot_is_only_for_cfg() {
    let o = pdfa(&["analyze", "lv", &program("running.pw"), "--format", "dot"]);
    assert_eq!(o.code, 1);
}

#[test]
fn distribution_with_wrong_mass_is_rejected() {
    let f = temp_file(r#"[{"state": {"x": 0}, "p": 0.4}, {"state": {"x": 1}, "p": 0.5}]"#);
    let o = pdfa(&[
        "branch-probs",
        &program("example1.pw"),
        "--input-dist",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("total probability"), "{}", o.stderr);
}

#[test]
fn distribution_values_must_be_in_range() {
    let f = temp_file(r#"[{"state": {"x": 2}, "p": 1.0}]"#);
    let o = pdfa(&[
        "branch-probs",
        &program("example1.pw"),
        "--input-dist",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("outside 0..1"), "{}", o.stderr);
}

#[test]
fn explicit_half_half_matches_uniform() {
    let f = temp_file(r#"[{"state": {"x": 0}, "p": 0.5}, {"state": {"x": 1}, "p": 0.5}]"#);
    let prog = program("example1.pw");
    let explicit = pdfa(&["branch-probs", &prog, "--input-dist", f.path().to_str().unwrap()]);
    let uniform = pdfa(&["branch-probs", &prog]);
    assert_eq!(explicit.code, 0, "{}", explicit.stderr);
    assert_eq!(json(&explicit)["branches"], json(&uniform)["branches"]);
}

#[test]
fn singular_loop_exits_with_solver_failure() {
    let f = temp_file("var x : 0..1;\nwhile [true]^1 do [skip]^2 od\n");
    for cmd in [&["analyze", "plv"][..], &["branch-probs"][..]] {
        let mut args = cmd.to_vec();
        args.push(f.path().to_str().unwrap());
        let o = pdfa(&args);
        assert_eq!(o.code, 2, "{}", o.stderr);
        assert!(o.stderr.contains("singular"), "{}", o.stderr);
        assert_eq!(json(&o)["error"]["kind"], "solver");
    }
}

#[test]
fn static_probabilities_skip_the_forward_phase() {
    let f = temp_file(r#"{"4": 0.25}"#);
    let o = pdfa(&[
        "analyze",
        "plv",
        &program("running.pw"),
        "--static-probs",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v = json(&o);
    assert_eq!(v["solver"]["forward"], Value::Null);
    assert_eq!(v["labels"]["4"]["entry"]["marginals"]["y"], 0.75);
}

#[test]
fn static_probabilities_must_name_tests() {
    let f = temp_file(r#"{"4": 0.25, "3": 0.5}"#);
    let o = pdfa(&[
        "analyze",
        "plv",
        &program("running.pw"),
        "--static-probs",
        f.path().to_str().unwrap(),
    ]);
    assert_eq!(o.code, 1);
}

#[test]
fn identity_random_transfer_keeps_liveness_through_random_assignments() {
    let o = pdfa(&[
        "analyze",
        "plv",
        &program("running.pw"),
        "--random-transfer",
        "identity",
    ]);
    assert_eq!(o.code, 0);
    let v = json(&o);
    assert_eq!(v["labels"]["2"]["entry"]["marginals"]["y"], 1.0);
    assert_eq!(v["random_transfer"], "identity");
}

#[test]
fn unreached_test_warns_on_stderr() {
    let f = temp_file("var x : 0..1;\n[x := 0]^1;\nif [x > 0]^2 then\n  if [x > 0]^3 then [skip]^4 else [skip]^5 fi\nelse\n  [skip]^6\nfi\n");
    let o = pdfa(&["branch-probs", f.path().to_str().unwrap()]);
    assert_eq!(o.code, 0);
    assert!(o.stderr.contains("warning"), "{}", o.stderr);
    assert_eq!(json(&o)["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn ops_can_show_the_abstraction() {
    let o = pdfa(&[
        "ops",
        &program("running.pw"),
        "--abstraction",
        "forgetful:z",
        "--label",
        "4",
        "--concrete",
        "--show-abstraction",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v = json(&o);
    assert_eq!(v["classification"]["rows"], 64);
    assert_eq!(v["classification"]["cols"], 16);
    assert_eq!(v["labels"]["4"]["concrete"]["rows"], 64);
    assert_eq!(v["labels"]["4"]["abstract"]["rows"], 16);
}

#[test]
fn ops_rejects_unknown_labels() {
    let o = pdfa(&["ops", &program("running.pw"), "--label", "9"]);
    assert_eq!(o.code, 1);
}

#[test]
fn bad_abstraction_spec_is_an_input_error() {
    let o = pdfa(&["branch-probs", &program("running.pw"), "--abstraction", "forgetful:w"]);
    assert_eq!(o.code, 1);
}

#[test]
fn help_exits_cleanly() {
    let o = pdfa(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("analyze"));
}
