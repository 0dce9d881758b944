//! `stormfit`: batch front end for the storm/buoy implicit-regression pipeline.

mod commands;
mod load;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use storm_core::factor::Rotation;

use crate::run::Failure;

#[derive(Parser, Debug)]
#[command(name = "stormfit", version, about = "Implicit-regression analysis of storm best tracks against buoy records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse raw best-track and buoy files into canonical CSV.
    Ingest(IngestArgs),
    /// Storm summary statistics and category counts.
    Stats(StatsArgs),
    /// Principal-component factor loadings of the term set.
    Pca(PcaArgs),
    /// Fit the unity model and write it as JSON.
    Fit(FitArgs),
    /// Invert a fitted model for the target variable record by record.
    Predict(PredictArgs),
    /// Correlation of observed and estimated target across day lags.
    LagScan(LagScanArgs),
    /// Mean buoy conditions per storm wind and their constancy.
    BinMeans(BinMeansArgs),
    /// Classify a two-variable slice of a fitted model.
    Conic(ConicArgs),
    /// Evaluate a fitted model on a two-variable grid.
    ExportGrid(GridArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Directory that receives every file written by the command.
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct Data {
    /// Best-track file (HURDAT2, UNISYS, or canonical storms CSV).
    #[arg(long)]
    pub storms: PathBuf,
    /// Buoy file (NDBC stdmet or canonical buoys CSV).
    #[arg(long)]
    pub buoys: PathBuf,
    /// Station id for stdmet input; defaults to the file stem.
    #[arg(long)]
    pub station: Option<String>,
    /// Days the buoy reading precedes the storm reading.
    #[arg(long, default_value_t = 3)]
    pub dt: i64,
    /// Join window half-width in minutes.
    #[arg(long, default_value_t = 90)]
    pub tolerance_min: i64,
}

#[derive(Args, Debug, Clone)]
pub struct TermsArg {
    /// Named term list: factor1-wind, buoy-6term or buoy-14term.
    #[arg(long, conflicts_with = "terms")]
    pub preset: Option<String>,
    /// Comma-separated term names, e.g. `W,P,W^2,Wp`.
    #[arg(long, value_delimiter = ',')]
    pub terms: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub storms: Option<PathBuf>,
    #[arg(long)]
    pub buoys: Option<PathBuf>,
    #[arg(long)]
    pub station: Option<String>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub storms: PathBuf,
    /// Category scale as JSON or `label,min_wind` CSV; defaults to the stand-in scale.
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct PcaArgs {
    #[command(flatten)]
    pub data: Data,
    #[command(flatten)]
    pub terms: TermsArg,
    #[arg(long, default_value_t = Rotation::Varimax)]
    pub rotation: Rotation,
    /// Factors to extract (capped at the number of terms).
    #[arg(long, default_value_t = 5)]
    pub factors: usize,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: Data,
    #[command(flatten)]
    pub terms: TermsArg,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: Data,
    #[arg(long, default_value = "W")]
    pub target: String,
    /// Physical band for the no-observation root heuristic.
    #[arg(long, default_value_t = 0.0)]
    pub band_lo: f64,
    #[arg(long, default_value_t = 200.0)]
    pub band_hi: f64,
    /// Storm-pressure bin width (mb) for the reference wind of the heuristic.
    #[arg(long, default_value_t = 10.0)]
    pub pressure_bin: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct LagScanArgs {
    #[command(flatten)]
    pub data: Data,
    /// Inclusive lag range in days, `first..last`.
    #[arg(long, default_value = "1..36")]
    pub dt_range: String,
    #[command(flatten)]
    pub terms: TermsArg,
    #[arg(long, default_value = "W")]
    pub target: String,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct BinMeansArgs {
    #[command(flatten)]
    pub data: Data,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct SliceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Held value for another model variable, `name=value`; repeatable.
    #[arg(long = "fix")]
    pub fix: Vec<String>,
    #[arg(long)]
    pub storms: Option<PathBuf>,
    #[arg(long)]
    pub buoys: Option<PathBuf>,
    #[arg(long)]
    pub station: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub dt: i64,
    #[arg(long, default_value_t = 90)]
    pub tolerance_min: i64,
}

#[derive(Args, Debug)]
pub struct ConicArgs {
    #[command(flatten)]
    pub slice: SliceArgs,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[command(flatten)]
    pub slice: SliceArgs,
    /// `lo:hi:steps`; defaults to the data range with 101 steps.
    #[arg(long)]
    pub x_range: Option<String>,
    #[arg(long)]
    pub y_range: Option<String>,
    #[command(flatten)]
    pub out: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Stats(a) => commands::stats(a),
        Command::Pca(a) => commands::pca(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::LagScan(a) => commands::lag_scan(a),
        Command::BinMeans(a) => commands::bin_means(a),
        Command::Conic(a) => commands::conic(a),
        Command::ExportGrid(a) => commands::export_grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { stage, error }) => {
            eprintln!("stormfit: {stage}: {error}");
            ExitCode::from(run::exit_code(&error))
        }
    }
}
