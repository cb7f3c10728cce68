//! `compgen`: dataset screening, model training, generation, enumeration and
//! evaluation for inorganic composition generators.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "compgen", version, about = "Generative modelling of inorganic compositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Element data CSV (symbol,Z,electronegativity,oxidation states); bundled table if omitted.
    #[arg(long)]
    elements: Option<PathBuf>,
    /// Worker threads for enumeration and validity classification (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and screen a dataset.
    Ingest(IngestArgs),
    /// Seeded train / hold-out split.
    Split(SplitArgs),
    /// Train the Wasserstein GAN.
    TrainGan(TrainGanArgs),
    /// Train the dice-loss autoencoder.
    TrainAe(TrainAeArgs),
    /// Sample compositions from a generator checkpoint.
    Generate(GenerateArgs),
    /// Validity, uniqueness, novelty and enrichment report.
    Evaluate(EvaluateArgs),
    /// Exhaustive enumeration statistics (or uniform samples) of a composition space.
    Enumerate(EnumerateArgs),
    /// Keep candidates the autoencoder reconstructs exactly.
    ScreenDecodable(ScreenArgs),
    /// Formulas to one-hot matrices (JSON lines).
    Encode(EncodeArgs),
    /// Matrices (JSON lines) to formulas.
    Decode(DecodeArgs),
    /// Flattened matrices as CSV for external embedding tools.
    ExportVectors(EncodeArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Screening profile: default, strict, no-sigma or none.
    #[arg(long, default_value = "default")]
    screen: String,
    /// Keep duplicate formulas.
    #[arg(long)]
    no_dedup: bool,
    /// Property filter such as `band_gap>0`, applied after screening.
    #[arg(long)]
    filter: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainGanArgs {
    /// Training dataset (CSV, JSON lines, or one formula per line).
    #[arg(long, alias = "in")]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `small`, `paperlike`, or a JSON architecture file.
    #[arg(long, default_value = "small")]
    arch: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 128)]
    latent_dim: usize,
    #[arg(long, default_value_t = 0.01)]
    clip: f64,
    #[arg(long, default_value_t = 5)]
    n_critic: usize,
    #[arg(long, default_value_t = 1e-3)]
    generator_lr: f64,
    #[arg(long, default_value_t = 1e-2)]
    critic_lr: f64,
    /// Save and score a generator checkpoint every this many epochs.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Samples drawn when scoring a checkpoint for selection.
    #[arg(long, default_value_t = 1000)]
    select_n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainAeArgs {
    #[arg(long, alias = "in")]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "small")]
    arch: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 128)]
    code_dim: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Generator checkpoint.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Generated samples, one formula per line.
    #[arg(long)]
    gen: PathBuf,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    holdout: Option<PathBuf>,
    /// External dataset for cross-confirmation, as NAME=PATH; repeatable.
    #[arg(long = "external", value_name = "NAME=PATH")]
    external: Vec<String>,
    /// Baseline fully-valid fraction for the enrichment factor.
    #[arg(long)]
    baseline: Option<f64>,
    /// Spacing of uniqueness-curve points.
    #[arg(long, default_value_t = 1000)]
    step: usize,
    /// Report path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the uniqueness curve as CSV.
    #[arg(long)]
    curve_csv: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FilterArg {
    None,
    ChargeNeutral,
    FullyValid,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Comma-separated element symbols.
    #[arg(long, value_delimiter = ',', required_unless_present = "data")]
    vocab: Vec<String>,
    /// Take the vocabulary from a dataset instead.
    #[arg(long, conflicts_with = "vocab")]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    arity: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    max_count: u32,
    #[arg(long, value_enum, default_value_t = FilterArg::FullyValid)]
    filter: FilterArg,
    /// Statistics report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Stream emitted formulas to this file.
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Draw this many uniform samples from the unfiltered space instead of enumerating.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    /// Autoencoder checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Candidate formulas.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated vocabulary.
    #[arg(long, value_delimiter = ',', required_unless_present = "model")]
    vocab: Vec<String>,
    /// Take the vocabulary from a checkpoint instead.
    #[arg(long, conflicts_with = "vocab")]
    model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', required_unless_present = "model")]
    vocab: Vec<String>,
    #[arg(long, conflicts_with = "vocab")]
    model: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Split(a) => commands::split(a),
        Command::TrainGan(a) => commands::train_gan(a),
        Command::TrainAe(a) => commands::train_ae(a),
        Command::Generate(a) => commands::generate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::ScreenDecodable(a) => commands::screen_decodable(a),
        Command::Encode(a) => commands::encode(a),
        Command::Decode(a) => commands::decode(a),
        Command::ExportVectors(a) => commands::export_vectors(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
