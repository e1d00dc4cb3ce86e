use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsdc_core::harness::{
    cmd_run, cmd_sweep, cmd_verify, parse_run_config, parse_sweep_spec, report_csv, report_json,
    sweep_csv, sweep_json, RunConfig, RunOptions, SweepSpec, VerifyOptions,
};
use qsdc_core::QsdcError;

/// Simulator for d-level QSDC over a network of servers.
#[derive(Parser)]
#[command(name = "qsdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials from a config file and write a report.
    Run(RunArgs),
    /// Run a grid of configs and write one row per grid point.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// JSON sweep spec; omitted means a single grid point.
        #[arg(long, value_name = "PATH")]
        spec: Option<PathBuf>,
    },
    /// Check the built-in invariants and print one line per property.
    Verify {
        #[arg(long, hide = true)]
        perturb_hadamard: Option<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trials.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    parallel: Option<u16>,
    /// Write one NDJSON transcript per trial into this directory.
    #[arg(long, value_name = "DIR")]
    transcripts: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Config(String),
    Other(String),
}

impl From<QsdcError> for Failure {
    fn from(e: QsdcError) -> Self {
        match e {
            QsdcError::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let text = read(&args.config)?;
    let mut cfg = parse_run_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Other(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn options(args: &RunArgs) -> RunOptions<'_> {
    RunOptions {
        parallel: args.parallel.map(usize::from),
        transcripts: args.transcripts.as_deref(),
    }
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let report = cmd_run(&cfg, &options(&args))?;
            let text = match args.format {
                Format::Json => report_json(&report),
                Format::Csv => report_csv(&report),
            };
            emit(args.out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Sweep { run: args, spec } => {
            let cfg = load_config(&args)?;
            let spec = match &spec {
                Some(p) => parse_sweep_spec(&read(p)?)?,
                None => SweepSpec::default(),
            };
            let rows = cmd_sweep(&cfg, &spec, &options(&args))?;
            let text = match args.format {
                Format::Json => sweep_json(&rows),
                Format::Csv => sweep_csv(&rows),
            };
            emit(args.out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Verify { perturb_hadamard } => {
            let results = cmd_verify(&VerifyOptions { perturb_hadamard });
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("qsdc: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("qsdc: {msg}");
            ExitCode::from(1)
        }
    }
}
