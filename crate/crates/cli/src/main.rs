//! `verify`: runs the check suite on a preset or a JSON datum and writes the
//! report. Exit status is 0 when every check passes, 1 when some check fails
//! and 2 on invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use spinweil_core::report::{check_names, run_all};
use spinweil_core::weil::{preset, WeilDatum, PRESETS};

#[derive(Parser, Debug)]
#[command(name = "verify", version, about = "Exact checks for abelian varieties of Weil type")]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "input"])))]
struct Args {
    /// Built-in instance
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// JSON datum with fields tower, n, eta_hat, theta
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only run checks whose name contains this string
    #[arg(long)]
    check: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(path: &PathBuf) -> Result<WeilDatum, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        format!("{}: at `{}`: {}", path.display(), if p.is_empty() { "." } else { &p }, e.inner())
    })
}

fn run(args: &Args) -> Result<bool, String> {
    let datum = match (&args.preset, &args.input) {
        (Some(name), _) => preset(name).ok_or_else(|| format!("unknown preset {name:?}"))?,
        (None, Some(path)) => load(path)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    if let Some(f) = &args.check {
        if !check_names().iter().any(|n| n.contains(f.as_str())) {
            return Err(format!("no check matches {f:?}; known checks: {}", check_names().join(", ")));
        }
    }
    let report = run_all(&datum, args.preset.as_deref(), args.seed, args.check.as_deref()).map_err(|e| e.to_string())?;
    let json = report.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?,
        None => println!("{json}"),
    }
    for c in &report.checks {
        eprintln!("{:<24} {:?}", c.name, c.status);
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
