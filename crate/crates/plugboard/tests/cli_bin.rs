//! End-to-end tests of the `plugboard` binary against the bundled example
//! programs, including exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plugboard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn program(name: &str) -> String {
    programs_dir().join(name).display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn check_prints_types_for_every_definition() {
    let out = run(&["check", &program("compose.pbc")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "twice : N -> N\nmain : N -> N\n");

    let out = run(&["check", &program("h.pbc")]);
    assert_eq!(stdout(&out), "main : (N;N) -> N\n");

    let out = run(&["check", &program("iter.pbc")]);
    assert_eq!(stdout(&out), "main : N -> N\n");
}

#[test]
fn check_rejects_type_errors_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pbc");
    std::fs::write(&bad, "(define main (compose succ add))").unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("type mismatch"), "{}", stderr(&out));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn eval_programs_under_both_semantics() {
    for (file, input, want) in [
        ("h.pbc", "3;4", "9\n"),
        ("ackermann.pbc", "3;4", "10\n"),
        ("iter.pbc", "1", "5\n"),
        ("rec_add.pbc", "", "7\n"),
        ("comp_gadget.pbc", "4", "6\n"),
        ("product.pbc", "9;4", "7\n"),
    ] {
        let out = run(&["eval", &program(file), "--input", input]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), want, "{file} fast");
    }
    for (file, input, want) in [("h.pbc", "3;4", "9\n"), ("iter.pbc", "1", "5\n")] {
        let out = run(&[
            "eval",
            &program(file),
            "--input",
            input,
            "--semantics",
            "tokens",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), want, "{file} tokens");
    }
}

#[test]
fn eval_tokens_writes_trace_and_spike_trains() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.trace");
    let prefix = dir.path().join("run");
    let out = run(&[
        "eval",
        &program("iter.pbc"),
        "--input",
        "1",
        "--semantics",
        "tokens",
        "--trace",
        trace.to_str().unwrap(),
        "--spike-out",
        prefix.to_str().unwrap(),
        "--isi-ms",
        "2",
        "--gap-ms",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(trace_text.lines().count(), 4);
    for (i, line) in trace_text.lines().enumerate() {
        assert!(line.starts_with(&format!("step={} board=", i + 1)), "{line}");
    }
    let out_train = std::fs::read_to_string(dir.path().join("run.out0.spk")).unwrap();
    assert_eq!(out_train, "0\n2\n4\n6\n8\n"); // 5 as a burst at isi 2
}

#[test]
fn eval_rejects_bad_inputs_with_exit_1() {
    let out = run(&["eval", &program("h.pbc"), "--input", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["eval", &program("h.pbc"), "--input", "0;4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("start at 1"), "{}", stderr(&out));
}

#[test]
fn elaborate_reports_counts_and_writes_canonical_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("iter4.pbg");
    let out = run(&[
        "elaborate",
        &program("iter.pbc"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "boards=5 links=5\n");
    let text = std::fs::read_to_string(&out_path).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/iter4_circuit.pbg");
    assert_eq!(text, std::fs::read_to_string(golden).unwrap());
}

#[test]
fn elaborate_rejects_second_order_main() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("gadget.pbc");
    std::fs::write(&bad, "(define main (comp N N N))").unwrap();
    let out = run(&[
        "elaborate",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("x.pbg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unresolved functional"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn export_dot_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.dot"), dir.path().join("b.dot"));
    for p in [&a, &b] {
        let out = run(&["export-dot", &program("h.pbc"), "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let dot = std::fs::read_to_string(&a).unwrap();
    assert_eq!(dot, std::fs::read_to_string(&b).unwrap());
    assert!(dot.starts_with("digraph construction {"), "{dot}");
    assert_eq!(dot.matches(" -> ").count(), 5);
}

#[test]
fn selftest_passes_and_prints_counts() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("recursor equations: PASS"), "{text}");
    assert!(text.contains("9/9 suites passed"), "{text}");
}

#[test]
fn missing_file_is_a_user_error() {
    let out = run(&["check", "/nonexistent/never.pbc"]);
    assert_eq!(out.status.code(), Some(1));
}
