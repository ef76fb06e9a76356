use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use plugboard::cli::{
    cmd_check, cmd_elaborate, cmd_eval, cmd_export_dot, cmd_selftest, CliError, EvalOptions,
    Semantics,
};
use plugboard::spikecodec::TimeMs;

/// Typed port-graph calculus: check, evaluate, elaborate, and export
/// construction programs.
#[derive(Parser)]
#[command(name = "plugboard", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    #[default]
    Fast,
    Tokens,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check a program and print every definition's interface type.
    Check { file: PathBuf },
    /// Evaluate `main` on semicolon-separated inputs.
    Eval {
        file: PathBuf,
        /// Inputs as `v1;v2;...`, one positive integer per input leaf.
        #[arg(long, default_value = "")]
        input: String,
        #[arg(long, value_enum, default_value_t)]
        semantics: SemanticsArg,
        /// Write the firing trace here (tokens semantics).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Intra-burst inter-spike interval in milliseconds.
        #[arg(long, default_value = "2", value_parser = parse_time)]
        isi_ms: TimeMs,
        /// Minimum inter-burst silence in milliseconds.
        #[arg(long, default_value = "20", value_parser = parse_time)]
        gap_ms: TimeMs,
        /// Write per-channel spike trains as `<prefix>.inK.spk` / `<prefix>.outK.spk`.
        #[arg(long)]
        spike_out: Option<PathBuf>,
    },
    /// Elaborate `main` to a first-order circuit and write it as a `.pbg` graph.
    Elaborate {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the DOT rendering of `main`.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle differential suites and print one line per law.
    Selftest,
}

fn parse_time(s: &str) -> Result<TimeMs, String> {
    s.parse().map_err(|e: plugboard::spikecodec::CodecError| e.to_string())
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.cmd {
        Cmd::Check { file } => cmd_check(&file),
        Cmd::Eval {
            file,
            input,
            semantics,
            trace,
            isi_ms,
            gap_ms,
            spike_out,
        } => cmd_eval(
            &file,
            &EvalOptions {
                input,
                semantics: match semantics {
                    SemanticsArg::Fast => Semantics::Fast,
                    SemanticsArg::Tokens => Semantics::Tokens,
                },
                trace,
                isi: isi_ms,
                gap: gap_ms,
                spike_out,
            },
        ),
        Cmd::Elaborate { file, out } => cmd_elaborate(&file, &out),
        Cmd::ExportDot { file, out } => cmd_export_dot(&file, &out),
        Cmd::Selftest => {
            let (report, ok) = cmd_selftest();
            print!("{report}");
            if ok {
                Ok(String::new())
            } else {
                Err(CliError::Internal("selftest failed".to_string()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
