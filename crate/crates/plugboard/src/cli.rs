//! Command behavior behind the `plugboard` binary: check, eval, elaborate,
//! export-dot, and selftest. Commands return their stdout text; errors are
//! classified as user errors (exit 1) or internal invariant violations
//! (exit 2).

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::eval::{elaborate, run_fast_big, run_tokens, EvalError};
use crate::netgraph::{Construction, GraphError};
use crate::program::load_program;
use crate::selftest::{render_report, run_all};
use crate::spikecodec::{decode, encode, BurstConfig, TimeMs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

fn classify_eval(e: EvalError) -> CliError {
    match e {
        EvalError::Internal(m) => CliError::Internal(m),
        EvalError::Graph(GraphError::Internal(m)) => CliError::Internal(m),
        EvalError::InvalidConstruction(m) => CliError::Internal(m),
        other => CliError::User(other.to_string()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn load_main(path: &Path) -> Result<Construction, CliError> {
    let text = read(path)?;
    let built = load_program(&text).map_err(user)?;
    Ok(built.main().map_err(user)?.clone())
}

/// Type-checks a program file; prints one `name : type` line per
/// definition.
pub fn cmd_check(path: &Path) -> Result<String, CliError> {
    let text = read(path)?;
    let built = load_program(&text).map_err(user)?;
    for (name, c) in &built.defs {
        let violations = c.validate();
        if !violations.is_empty() {
            return Err(CliError::Internal(format!(
                "definition `{name}` failed validation: {}",
                violations[0]
            )));
        }
    }
    Ok(built.type_report())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    Fast,
    Tokens,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub input: String,
    pub semantics: Semantics,
    pub trace: Option<PathBuf>,
    pub isi: TimeMs,
    pub gap: TimeMs,
    pub spike_out: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        let cfg = BurstConfig::default();
        EvalOptions {
            input: String::new(),
            semantics: Semantics::Fast,
            trace: None,
            isi: cfg.isi,
            gap: cfg.gap,
            spike_out: None,
        }
    }
}

fn parse_inputs(text: &str) -> Result<Vec<BigUint>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(vec![]);
    }
    text.split(';')
        .map(|s| {
            let s = s.trim();
            let v: BigUint = s
                .parse()
                .map_err(|_| user(format!("input {s:?} is not a natural number")))?;
            if v.is_zero() {
                return Err(user("numerals start at 1"));
            }
            Ok(v)
        })
        .collect()
}

fn render_outputs(values: &[BigUint]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("{}\n", parts.join(";"))
}

/// Evaluates a program's `main` on semicolon-separated inputs under the
/// chosen semantics. Under token semantics the inputs and outputs take a
/// round trip through the spike codec (one train per channel), and the
/// firing trace / trains can be written out.
pub fn cmd_eval(path: &Path, opts: &EvalOptions) -> Result<String, CliError> {
    let main = load_main(path)?;
    let inputs = parse_inputs(&opts.input)?;
    match opts.semantics {
        Semantics::Fast => {
            let out = run_fast_big(&main, &inputs).map_err(classify_eval)?;
            Ok(render_outputs(&out))
        }
        Semantics::Tokens => {
            let cfg = BurstConfig::new(opts.isi, opts.gap).map_err(user)?;
            let circuit = elaborate(&main).map_err(classify_eval)?;
            let mut decoded = Vec::with_capacity(inputs.len());
            let mut in_trains = Vec::with_capacity(inputs.len());
            for v in &inputs {
                let train = encode(std::slice::from_ref(v), &cfg, TimeMs::zero())
                    .map_err(user)?;
                let mut burst = decode(&train, &cfg).map_err(user)?;
                decoded.push(burst.pop().expect("one burst"));
                in_trains.push(train);
            }
            let (outputs, trace) = run_tokens(&circuit, &decoded).map_err(classify_eval)?;
            if let Some(trace_path) = &opts.trace {
                write(trace_path, &trace.render())?;
            }
            if let Some(prefix) = &opts.spike_out {
                let prefix = prefix.display();
                for (k, train) in in_trains.iter().enumerate() {
                    write(Path::new(&format!("{prefix}.in{k}.spk")), &train.to_text())?;
                }
                for (k, v) in outputs.iter().enumerate() {
                    let train = encode(std::slice::from_ref(v), &cfg, TimeMs::zero())
                        .map_err(user)?;
                    write(Path::new(&format!("{prefix}.out{k}.spk")), &train.to_text())?;
                }
            }
            Ok(render_outputs(&outputs))
        }
    }
}

/// Elaborates `main` to a first-order circuit and writes its canonical
/// serialized form; prints the board and link counts.
pub fn cmd_elaborate(path: &Path, out: &Path) -> Result<String, CliError> {
    let main = load_main(path)?;
    let circuit = elaborate(&main).map_err(classify_eval)?;
    let c = circuit.construction();
    write(out, &c.serialize())?;
    Ok(format!("boards={} links={}\n", c.board_count(), c.link_count()))
}

/// Writes the DOT rendering of `main`.
pub fn cmd_export_dot(path: &Path, out: &Path) -> Result<String, CliError> {
    let main = load_main(path)?;
    write(out, &main.to_dot())?;
    Ok(format!("wrote {}\n", out.display()))
}

/// Runs the oracle differential suites; the report ends with pass/fail
/// counts. Returns the report and whether everything passed.
pub fn cmd_selftest() -> (String, bool) {
    render_report(&run_all(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_program(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn check_reports_types() {
        let f = write_program("(define main (compose succ succ))");
        assert_eq!(cmd_check(f.path()).unwrap(), "main : N -> N\n");
        let f = write_program("(define main (iter (numeral 4) succ))");
        assert_eq!(cmd_check(f.path()).unwrap(), "main : N -> N\n");
    }

    #[test]
    fn check_rejects_type_errors() {
        let f = write_program("(define main (compose succ add))");
        let err = cmd_check(f.path()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("type mismatch"), "{err}");
    }

    #[test]
    fn eval_fast_and_tokens_agree_on_h() {
        let f = write_program("(define main (compose (copy succ) add))");
        let mut opts = EvalOptions {
            input: "3;4".to_string(),
            ..EvalOptions::default()
        };
        assert_eq!(cmd_eval(f.path(), &opts).unwrap(), "9\n");
        opts.semantics = Semantics::Tokens;
        assert_eq!(cmd_eval(f.path(), &opts).unwrap(), "9\n");
    }

    #[test]
    fn eval_writes_trace_and_trains() {
        let f = write_program("(define main (iter (numeral 3) succ))");
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("run.trace");
        let spikes = dir.path().join("run");
        let opts = EvalOptions {
            input: "2".to_string(),
            semantics: Semantics::Tokens,
            trace: Some(trace.clone()),
            spike_out: Some(spikes),
            ..EvalOptions::default()
        };
        assert_eq!(cmd_eval(f.path(), &opts).unwrap(), "5\n");
        let trace_text = std::fs::read_to_string(&trace).unwrap();
        assert_eq!(trace_text.lines().count(), 3);
        assert!(trace_text.starts_with("step=1 board="));
        let in0 = std::fs::read_to_string(dir.path().join("run.in0.spk")).unwrap();
        assert_eq!(in0.lines().count(), 2);
        let out0 = std::fs::read_to_string(dir.path().join("run.out0.spk")).unwrap();
        assert_eq!(out0.lines().count(), 5);
    }

    #[test]
    fn elaborate_writes_canonical_circuit() {
        let f = write_program("(define main (iter (numeral 4) succ))");
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("main.pbg");
        let report = cmd_elaborate(f.path(), &out).unwrap();
        assert_eq!(report, "boards=5 links=5\n");
        let text = std::fs::read_to_string(&out).unwrap();
        let back = Construction::deserialize(&text).unwrap();
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn elaborate_rejects_second_order_main() {
        let f = write_program("(define main (comp N N N))");
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_elaborate(f.path(), &dir.path().join("x.pbg")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("second order"), "{err}");
    }

    #[test]
    fn export_dot_is_deterministic() {
        let f = write_program("(define main (compose (copy succ) add))");
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.dot"), dir.path().join("b.dot"));
        cmd_export_dot(f.path(), &a).unwrap();
        cmd_export_dot(f.path(), &b).unwrap();
        assert_eq!(
            std::fs::read_to_string(&a).unwrap(),
            std::fs::read_to_string(&b).unwrap()
        );
    }

    #[test]
    fn eval_checks_input_arity() {
        let f = write_program("(define main succ)");
        let opts = EvalOptions {
            input: "1;2".to_string(),
            ..EvalOptions::default()
        };
        let err = cmd_eval(f.path(), &opts).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
