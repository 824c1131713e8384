mod commands;
mod error;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ebmix", version, about = "Empirical Bayes mixture-prior estimation of effect sizes, fdr and FDR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a mixture prior and write the model document.
    Fit(FitArgs),
    /// Per-case posterior effect sizes, fdr and FDR under a fitted model.
    Estimate(EstimateArgs),
    /// Run a simulation study and write its CSV tables.
    Simulate(SimulateArgs),
    /// Choose the null penalty by parametric bootstrap.
    Calibrate(CalibrateArgs),
    /// Score a range of component counts by BIC.
    Bic(BicArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Normal,
    Binomial,
}

impl From<Family> for ebmix::FamilyKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Normal => ebmix::FamilyKind::Normal,
            Family::Binomial => ebmix::FamilyKind::Binomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Null {
    Theoretical,
    Empirical,
    None,
}

impl From<Null> for ebmix::NullMode {
    fn from(n: Null) -> Self {
        match n {
            Null::Theoretical => ebmix::NullMode::Theoretical,
            Null::Empirical => ebmix::NullMode::Empirical,
            Null::None => ebmix::NullMode::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Effect,
    Fdr,
    Baseball,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "normal")]
    pub family: Family,
    /// Number of mixture components.
    #[arg(long = "J", default_value_t = 3)]
    pub j: usize,
    /// Null pseudo-count; defaults to N/5 (0 without a null component).
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Null handling; theoretical for normal data, none for binomial.
    #[arg(long, value_enum)]
    pub null: Option<Null>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Free-form label stored in the document's timestamp field.
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "nearly-null", value_enum, default_value = "on")]
    pub nearly_null: Switch,
    #[arg(long = "mean-tol", default_value_t = ebmix::inference::DEFAULT_MEAN_TOL)]
    pub mean_tol: f64,
    #[arg(long = "var-tol", default_value_t = ebmix::inference::DEFAULT_VAR_TOL)]
    pub var_tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub study: Study,
    /// Replications per scenario (effect: 100, fdr: 50).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Override the mixture component count.
    #[arg(long = "J")]
    pub j: Option<usize>,
    /// Override the mixture null penalty.
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Baseball only: a real `player_id,is_pitcher,H1,N1,H2,N2` file.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `auto` or a comma-separated list of penalties.
    #[arg(long, default_value = "auto")]
    pub candidates: String,
    #[arg(long = "J", default_value_t = 3)]
    pub j: usize,
    #[arg(long, value_enum, default_value = "theoretical")]
    pub null: Null,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Number of perturbed generating models.
    #[arg(long)]
    pub perturbed: Option<usize>,
    /// Bootstrap data sets per perturbed model.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Write the full score table here.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BicArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "normal")]
    pub family: Family,
    /// Inclusive range `a..b`.
    #[arg(long = "J-range", default_value = "1..6")]
    pub j_range: String,
    #[arg(long, value_enum, default_value = "none")]
    pub null: Null,
    #[arg(long, default_value_t = 0.0)]
    pub penalty: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
}

fn report(err: &CliError) -> ExitCode {
    let message = err.to_string();
    let line = message.lines().next().unwrap_or_default();
    eprintln!("ERROR {}: {line}", err.category());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.kind().as_str().map(str::to_string).unwrap_or_else(|| e.to_string());
            let detail = e.to_string();
            let first = detail
                .lines()
                .next()
                .map(|l| l.trim_start_matches("error: ").to_string())
                .unwrap_or(text);
            return report(&CliError::Usage(first));
        }
    };
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Bic(a) => commands::bic(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
