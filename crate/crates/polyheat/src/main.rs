//! `polyheat` command-line front end.
//!
//! Every run command reads a JSON config, writes artifacts plus
//! `manifest.json` into the output directory and exits nonzero iff the
//! manifest outcome is failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyheat::runner::{self, Command, Outcome};

const CONFIG_DEFAULTS: &str = "\
Config defaults (JSON, unknown keys rejected):
  initial            gaussian, amplitude 1, center 0, width 1
  degeneracy.variant simple
  solver             dealias true, energy_tol 1e-8, stabilization from f and the path
  sweep              m 2, include_zero false, weak_samples 50, weak_modes 4
  branch             time_nodes 1000, clamp_relative 1e-8, thresholds [0.1, 0.5]
  kernel             h 0.02, fit true, r_max from the decay range
  spectrum           max_order 4, adjoint_max_order 8, weight_a 0.1
  interface          k_radius 1, threshold_relative 1e-8
  seed 0, workers 1

Output directory precedence: POLYHEAT_OUT, then --out, then the config's
`output`, then runs/<command>.";

#[derive(Parser)]
#[command(name = "polyheat", version, about = "Numerical laboratory for degenerate polyharmonic diffusion", after_help = CONFIG_DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the polyharmonic heat kernel profile and fit its decay.
    Kernel(RunArgs),
    /// Check eigenfunctions of the rescaled operator and its adjoint.
    Spectrum(RunArgs),
    /// Run one regularized solve with energy and interface monitors.
    Solve(RunArgs),
    /// Sweep the homotopy schedule toward the polyharmonic limit.
    Sweep(RunArgs),
    /// Sweep plus first-order correction and branching residuals.
    Branch(RunArgs),
    /// Summarize manifests from run directories or manifest files.
    Report {
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
#[command(after_help = CONFIG_DEFAULTS)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep rows.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for randomized initial data.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(command: Command, args: RunArgs) -> Result<bool, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = runner::parse_config(&text).map_err(|e| e.to_string())?;
    cfg.command = Some(command);
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = std::env::var_os("POLYHEAT_OUT")
        .map(PathBuf::from)
        .or(args.out)
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
    let manifest = runner::run(&cfg, &out).map_err(|e| e.to_string())?;
    match &manifest.outcome {
        Outcome::Ok => println!("{} {} ok -> {}", manifest.run_id, manifest.command, out.display()),
        Outcome::Failed { reason } => eprintln!(
            "{} {} failed: {reason} -> {}",
            manifest.run_id,
            manifest.command,
            out.display()
        ),
    }
    Ok(manifest.is_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Report { paths } => {
            print!("{}", runner::report(&paths));
            return ExitCode::SUCCESS;
        }
        Cmd::Kernel(a) => (Command::Kernel, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Branch(a) => (Command::Branch, a),
    };
    match execute(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
