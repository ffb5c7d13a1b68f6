//! `impulse-dose`: design, verify, and simulate pulse-modulated dosing
//! controllers from one TOML config.
//!
//! Exit codes: 0 success (and, for analysis commands, a positive verdict),
//! 1 analysis negative (infeasible regimen / unstable design), 2 invalid
//! config or usage, 3 I/O failure. Failures additionally emit a one-line
//! JSON error record on stderr.

mod commands;
mod config;
mod output;
mod svg;

use clap::{Args, Parser, Subcommand};
use commands::CommandOutput;
use config::FileConfig;
use std::path::{Path, PathBuf};

/// A failed run: `Config` maps to exit 2, `Io` to exit 3.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "impulse-dose",
    version,
    about = "Pulse-modulated dosing controllers: design, feasibility, simulation, bifurcation",
    arg_required_else_help = true
)]
struct Cli {
    /// Print the built-in default configuration (TOML) and exit.
    #[arg(long, exclusive = true)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize modulation coefficients for a target cycle and report
    /// its stability (exit 1 if the designed cycle is unstable).
    Design(RunArgs),
    /// Test a (lambda, period) regimen against an effect corridor
    /// (exit 1 if infeasible).
    Feasibility(RunArgs),
    /// Integrate the closed loop exactly and write event + dense CSVs.
    Simulate(RunArgs),
    /// Sweep alpha or gamma and write the periodic points per value.
    Bifurcate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration (TOML; see --print-defaults).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Additionally render an SVG of y(t) and ybar(t) (simulate only).
    #[arg(long)]
    svg: bool,
}

fn report_failure(f: &Failure) -> i32 {
    let record = serde_json::json!({
        "error": { "kind": f.kind(), "exit": f.exit_code(), "message": f.message() }
    });
    eprintln!("{record}");
    f.exit_code()
}

fn load_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    FileConfig::parse(&text)
}

fn write_outputs(out_dir: &Path, output: &CommandOutput) -> Result<(), Failure> {
    std::fs::create_dir_all(out_dir).map_err(|e| {
        Failure::Io(format!("cannot create output directory {}: {e}", out_dir.display()))
    })?;
    for (name, content) in &output.files {
        let path = out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<i32, Failure> {
    let (args, run): (&RunArgs, fn(&FileConfig, &RunArgs) -> Result<CommandOutput, Failure>) =
        match cmd {
            Command::Design(a) => (a, |cfg, _| commands::cmd_design(cfg)),
            Command::Feasibility(a) => (a, |cfg, _| commands::cmd_feasibility(cfg)),
            Command::Simulate(a) => (a, |cfg, a| commands::cmd_simulate(cfg, a.svg)),
            Command::Bifurcate(a) => (a, |cfg, _| commands::cmd_bifurcate(cfg)),
        };
    let cfg = load_config(&args.config)?;
    let output = run(&cfg, args)?;
    write_outputs(&args.out, &output)?;
    for (name, _) in &output.files {
        println!("wrote {}", args.out.join(name).display());
    }
    println!("{}", output.summary);
    Ok(output.exit)
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if cli.print_defaults {
        print!("{}", config::DEFAULT_CONFIG);
        return 0;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: a subcommand is required (design | feasibility | simulate | bifurcate)");
        return 2;
    };
    match dispatch(&cmd) {
        Ok(code) => code,
        Err(f) => report_failure(&f),
    }
}
