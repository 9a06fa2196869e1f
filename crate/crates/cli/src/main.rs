mod commands;
mod ingest;
mod output;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "fattail", version, about = "Estimators and diagnostics for fat-tailed data")]
struct Cli {
    /// Base seed for every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for Monte Carlo loops. Results do not depend on it.
    #[arg(long, global = true, env = "FATTAIL_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Plotdata,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// κ metric: speed of convergence of partial sums (Monte Carlo or bootstrap)
    Kappa(commands::KappaArgs),
    /// Maximum-to-sum curves, kurtosis under aggregation, records, Zipf slope
    Diag(commands::DiagArgs),
    /// Pareto MLE, Hill sweep and GPD fit of the upper tail
    Tailfit(commands::TailfitArgs),
    /// Shadow mean of a bounded variable through the log dual transform
    Shadow(commands::ShadowArgs),
    /// Gini index with the stable-limit mode correction
    Gini(commands::GiniArgs),
    /// Top-q concentration share and its pooling behaviour
    Kq(commands::KqArgs),
    /// Distribution of p-values across replications of a study
    Pvmeta(commands::PvmetaArgs),
    /// Power-law option prices from one anchor, with arbitrage checks
    Tailprice(commands::TailpriceArgs),
    /// Draw a sample from one of the reference distributions
    Dist(commands::DistCmdArgs),
}

fn run(cli: &Cli) -> Result<(String, Outcome), CliError> {
    let (name, outcome) = match &cli.cmd {
        Cmd::Kappa(a) => ("kappa", commands::kappa(a, cli.seed)?),
        Cmd::Diag(a) => ("diag", commands::diag(a)?),
        Cmd::Tailfit(a) => ("tailfit", commands::tailfit(a)?),
        Cmd::Shadow(a) => ("shadow", commands::shadow(a, cli.seed)?),
        Cmd::Gini(a) => ("gini", commands::gini(a, cli.seed)?),
        Cmd::Kq(a) => ("kq", commands::kq(a, cli.seed)?),
        Cmd::Pvmeta(a) => ("pvmeta", commands::pvmeta(a, cli.seed)?),
        Cmd::Tailprice(a) => ("tailprice", commands::tailprice(a)?),
        Cmd::Dist(a) => ("dist", commands::dist(a, cli.seed)?),
    };
    Ok((name.into(), outcome))
}

fn render(cli: &Cli, name: &str, outcome: &Outcome) -> String {
    match cli.output {
        Format::Plotdata => output::to_plotdata(&outcome.plot),
        fmt => {
            // the worker count is left out of the echo: it never changes results
            let report = json!({
                "schema_version": output::SCHEMA_VERSION,
                "tool": "fattail",
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config": {
                    "seed": cli.seed,
                    "output": fmt,
                    "input_path": outcome.input_path,
                    "args": outcome.args,
                },
                "results": outcome.results,
                "warnings": outcome.warnings,
            });
            if fmt == Format::Csv { output::to_flat_csv(&report) } else { output::to_json(&report) }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let (name, outcome) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let text = render(&cli, &name, &outcome);
    let written = match &cli.out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
