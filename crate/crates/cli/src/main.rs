//! `protoseg`: command-line front end for prototype-based point labeling.

mod commands;
mod synth_out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use protoseg_core::ErrorCategory;

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (formats: igft v1, igl v1, poses text v1, ppm P6, bank json v1, model json v1)"
);

#[derive(Debug, Parser)]
#[command(name = "protoseg", version = VERSION, about = "Zero-shot point cloud labeling from prototype features")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average patch features of every prototype image into a bank.
    BuildBank(BuildBankArgs),
    /// Fit the logistic-regression probe on a bank.
    Fit(FitArgs),
    /// Label point features.
    Classify(ClassifyArgs),
    /// Binary mask of points similar to one prototype.
    Retrieve(RetrieveArgs),
    /// Concatenate two feature matrices or two banks.
    Ensemble(EnsembleArgs),
    /// Voxel majority relabeling of a posed scan sequence.
    Consist(ConsistArgs),
    /// Per-class IoU of one or more predictions.
    Eval(EvalArgs),
    /// Generate a synthetic scene and scan sequence.
    Synth(SynthArgs),
    /// Crop a prototype image to its non-white content.
    Crop(CropArgs),
}

#[derive(Debug, Args)]
struct BuildBankArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Bank metadata path; prototypes go to the same stem with `.igft`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Objective {
    Ovr,
    Softmax,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Inverse regularization strength.
    #[arg(long = "C", visible_alias = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value_t = Objective::Ovr)]
    objective: Objective,
    /// Weight matrix path (`.igft`); metadata goes to the same stem with `.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Nn,
    Lr,
    Threshold,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long, value_enum, default_value_t = Mode::Lr)]
    mode: Mode,
    #[arg(long)]
    points: PathBuf,
    /// Bank for `nn` and `threshold`.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Model for `lr`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Minimum cosine for `threshold`.
    #[arg(long)]
    tau: Option<f64>,
    /// Class labels (`.igl`).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    subclass_out: Option<PathBuf>,
    /// Winning scores as an `N × 1` `.igft`.
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    points: PathBuf,
    /// A `1 × D` `.igft` holding the query prototype.
    #[arg(long, conflicts_with_all = ["bank", "row"])]
    prototype: Option<PathBuf>,
    #[arg(long, requires = "row")]
    bank: Option<PathBuf>,
    /// Bank row used as the query.
    #[arg(long, requires = "bank")]
    row: Option<usize>,
    #[arg(long)]
    tau: f64,
    /// Mask as `.igl` (1 = retrieved, 0 = not).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// `.igft` features or bank `.json`.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Renormalize concatenated feature rows (banks are always renormalized).
    #[arg(long)]
    renorm: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Majority,
    Confidence,
}

#[derive(Debug, Args)]
struct ConsistArgs {
    /// Sequence manifest listing points, labels and pose index per scan.
    #[arg(long)]
    scans: PathBuf,
    /// Voxel edge in meters.
    #[arg(long, default_value_t = 0.10)]
    voxel: f64,
    #[arg(long, value_enum, default_value_t = Policy::Majority)]
    policy: Policy,
    /// Directory receiving `<scan id>.igl`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Prediction file, optionally `name=path`; repeat to compare several.
    #[arg(long, required = true)]
    pred: Vec<String>,
    /// Any JSON with a `classes` array (prompt manifest, bank, model).
    #[arg(long)]
    classes: PathBuf,
    /// CSV report; the text table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CropArgs {
    #[arg(long)]
    image: PathBuf,
    /// Darkest-channel value at or above which a pixel is background.
    #[arg(long, default_value_t = protoseg_core::prototype_bank::DEFAULT_WHITE_THRESHOLD)]
    white: u8,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] protoseg_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Io => 1,
                ErrorCategory::Format => 3,
                ErrorCategory::Numeric => 4,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e.category() {
                ErrorCategory::Io => "io",
                ErrorCategory::Format => "format",
                ErrorCategory::Numeric => "numeric",
            },
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).init();
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::BuildBank(a) => commands::build_bank(a),
        Command::Fit(a) => commands::fit(a),
        Command::Classify(a) => commands::classify(a),
        Command::Retrieve(a) => commands::retrieve(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Consist(a) => commands::consist(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => synth_out::run(a),
        Command::Crop(a) => commands::crop(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("protoseg: usage error: cannot start {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', "; ");
            eprintln!("protoseg: {} error: {message}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn version_lists_current_formats() {
        use protoseg_core::tensor_io::{IGFT_VERSION, IGL_VERSION};
        assert!(VERSION.contains(&format!("igft v{IGFT_VERSION}")));
        assert!(VERSION.contains(&format!("igl v{IGL_VERSION}")));
    }
}
