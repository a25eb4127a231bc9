//! `ccplan`: measure dataset complexity, fit degradation laws and plan
//! channel multipliers from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod files;

/// Exit status for malformed input or arguments.
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "ccplan",
    version,
    about = "Image-complexity guided channel-multiplier planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure per-scale complexity of a dataset directory.
    Complexity(ComplexityArgs),
    /// Fit the degradation law from accuracy observations.
    Fit(FitArgs),
    /// Solve for channel multipliers under a constraint.
    Plan(PlanArgs),
    /// Predict relative accuracy at given network sizes.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    /// Dataset directory (images in `images/` or directly inside).
    pub dir: PathBuf,
    /// Mask directory; defaults to `<dir>/masks` when present.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, default_value_t = ccplan_core::complexity::DEFAULT_SCALES)]
    pub scales: usize,
    /// Square working resolution; 0 keeps native sizes. Defaults by dataset name.
    #[arg(long)]
    pub resize: Option<usize>,
    /// Dataset name; defaults to the directory name.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Measure images one at a time.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    F1,
    Iu,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ComplexityArg {
    J,
    Jb,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with columns dataset,alpha,theta,metric,value.
    pub observations: PathBuf,
    /// Profile documents, one per dataset in the CSV.
    #[arg(long, num_args = 1.., required = true)]
    pub profiles: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value = "j")]
    pub complexity: ComplexityArg,
    /// Two datasets observed at alpha 1, 0.25 and 0.0625 only.
    #[arg(long)]
    pub fast: bool,
    /// Architecture file, or `unet` for the built-in preset.
    #[arg(long, default_value = "unet")]
    pub arch: String,
    #[arg(long, default_value_t = ccplan_core::complexity::DEFAULT_OMEGA_STEP)]
    pub omega_step: f64,
    /// Output file; defaults to `<out-dir>/<arch>-<metric>-<complexity>.model.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    LayerWise,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("constraint").required(true).args(["disk_budget", "memory_budget", "min_accuracy"])))]
pub struct PlanArgs {
    /// Architecture file, or `unet` for the built-in preset.
    pub arch: String,
    pub profile: PathBuf,
    pub model: PathBuf,
    /// Storage budget in bytes.
    #[arg(long)]
    pub disk_budget: Option<u64>,
    /// Main-memory budget in bytes.
    #[arg(long)]
    pub memory_budget: Option<u64>,
    /// Minimum accuracy as a fraction of the uncompressed network's.
    #[arg(long)]
    pub min_accuracy: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Overrides the architecture's bytes per weight.
    #[arg(long)]
    pub bytes_per_weight: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Baseline accuracy; when given, absolute predictions are printed too.
    #[arg(long)]
    pub base_accuracy: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub profile: PathBuf,
    /// Comma-separated log10 weight counts.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub log_theta: Vec<f64>,
    /// log10 weights of the base network; defaults to the model's.
    #[arg(long)]
    pub base_log_theta: Option<f64>,
    #[arg(long)]
    pub base_accuracy: Option<f64>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use ccplan_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Infeasible { .. } | E::PlanRejected(_) => EXIT_INFEASIBLE,
                E::DegenerateModel(_) => EXIT_DEGENERATE,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.downcast_ref::<commands::ValidationError>().is_some()
            || cause.downcast_ref::<csv::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return EXIT_VALIDATION;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // reserved for future stochastic features; every path is deterministic
    let _ = std::env::var("CCPLAN_SEED");
    let result = match cli.command {
        Command::Complexity(a) => commands::complexity(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Plan(a) => commands::plan(&a),
        Command::Predict(a) => commands::predict(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
