//! `heatchan` command-line tool.

mod commands;
mod config;
mod error;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use heatchan::codec::DEFAULT_MAX_MESSAGES;

use crate::error::{CliError, EXIT_USAGE};

/// Simulate heating channels, run the periodic Gaussian coding scheme and
/// evaluate rate bounds.
#[derive(Parser, Debug)]
#[command(name = "heatchan", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide whether the coefficient sequence gives bounded or unbounded capacity
    Classify(ClassifyArgs),
    /// Send a fixed input through the channel and compare residual variances with the exact law
    Simulate(SimulateArgs),
    /// Estimate the block-error probability of the periodic random Gaussian code
    Code(CodeArgs),
    /// Evaluate the achievable rates and the converse constant
    Bounds(BoundsArgs),
    /// Estimate block-error probabilities over a grid of SNR, period, length and rate
    Sweep(SweepArgs),
    /// Estimate the expected log-inverse distance of shifted noise to zero
    Lemma1(Lemma1Args),
    /// Check concentration of the subsampled output and noise norms
    Lemma2(Lemma2Args),
    /// Tabulate the best formula rate against SNR for several coefficient families
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write the result table to this file instead of standard output
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Result table format: csv or jsonl
    #[arg(long, default_value = "csv", value_name = "FORMAT")]
    pub format: String,
    /// Read flag values from a `key = value` file or from an earlier result file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChannelArgs {
    /// Heating coefficients: geometric:<rho>, truncated:<cutoff>:<level>, superexp:<rho>, example1, example2, memoryless or custom:<path>
    #[arg(long, value_name = "SPEC")]
    pub coeffs: String,
    /// Ambient noise variance
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Law of the normalized noise: gaussian or uniform
    #[arg(long, default_value = "gaussian")]
    pub noise: String,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Level {
    /// Signal-to-noise ratio P/sigma2, linear
    #[arg(long)]
    pub snr: Option<f64>,
    /// Average input power P, linear
    #[arg(long)]
    pub power: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SchemeArgs {
    /// Variance of the active symbols: full (L*P) or per-slot (P)
    #[arg(long, default_value = "full")]
    pub slot_variance: String,
    /// Codebook draws: per-trial (ensemble average) or fixed
    #[arg(long, default_value = "per-trial")]
    pub codebook: String,
    /// Redraw codewords that violate the average-power constraint
    #[arg(long)]
    pub strict_power: bool,
    /// Largest message count attempted
    #[arg(long, default_value_t = DEFAULT_MAX_MESSAGES)]
    pub max_messages: u64,
    /// Worker threads, 0 for all cores; never changes results
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Heating coefficients: geometric:<rho>, truncated:<cutoff>:<level>, superexp:<rho>, example1, example2, memoryless or custom:<path>
    #[arg(long, value_name = "SPEC")]
    pub coeffs: String,
    /// Last index inspected
    #[arg(long, default_value_t = 128)]
    pub horizon: usize,
    /// Ratio liminf above this counts as bounded away from zero
    #[arg(long, default_value_t = 1e-6)]
    pub positive_floor: f64,
    /// Ratio limsup below this counts as vanishing
    #[arg(long, default_value_t = 1e-6)]
    pub zero_ceiling: f64,
    /// Decay statistic -ln(alpha_l)/l above this counts as super-exponential
    #[arg(long, default_value_t = 20.0)]
    pub divergence_threshold: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Input sequence: comma-separated values, alt:<amp>:<len> (+amp, -amp, ...) or const:<amp>:<len>
    #[arg(long, value_name = "INPUTS")]
    pub inputs: String,
    /// Monte Carlo trials
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Master seed
    #[arg(long)]
    pub seed: u64,
    /// Worker threads, 0 for all cores; never changes results
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct CodeSize {
    /// Number of messages |M|
    #[arg(long)]
    pub messages: Option<u64>,
    /// Rate in nats per channel use; |M| = round(exp(rate * n))
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CodeArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub level: Level,
    /// Period L between active slots
    #[arg(long = "L", value_name = "L")]
    pub period: usize,
    /// Block length n
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub size: CodeSize,
    /// Monte Carlo trials
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Master seed
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub level: Level,
    /// Period L between active slots
    #[arg(long = "L", value_name = "L")]
    pub period: usize,
    /// Typicality slack eps of the achievability bound
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Chernoff parameter s < 0; defaults to -1/(2(1 + alpha^(L) P))
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Variance of the active symbols: full (L*P) or per-slot (P)
    #[arg(long, default_value = "full")]
    pub slot_variance: String,
    /// Decay rate for the lower bound (1/2L)ln(1 - rho^L) + (1/2)ln(1/rho); defaults to the geometric ratio
    #[arg(long)]
    pub rho: Option<f64>,
    /// Fix the converse index l0 (needs --converse-rho); searched when absent
    #[arg(long)]
    pub l0: Option<usize>,
    /// Ratio floor for the converse with --l0
    #[arg(long)]
    pub converse_rho: Option<f64>,
    /// Largest l0 tried by the converse search
    #[arg(long, default_value_t = 64)]
    pub max_l0: usize,
    /// Window delta of the converse constant, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Exponent eta of the converse constant, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Log-inverse slack eps(delta, eta) of the converse constant
    #[arg(long, default_value_t = 0.0)]
    pub eps_delta_eta: f64,
    /// Print rates in bits instead of nats (the table stays in nats)
    #[arg(long)]
    pub bits: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct LevelGrid {
    /// SNR values (list or log:<lo>:<hi>:<count>)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Vec<String>,
    /// Input powers (list or log:<lo>:<hi>:<count>)
    #[arg(long, value_delimiter = ',')]
    pub power: Vec<String>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct RateSpec {
    /// Rates in nats per channel use
    #[arg(long, value_delimiter = ',')]
    pub rate: Vec<String>,
    /// Rates as multiples of the pre-limit achievable rate at each point
    #[arg(long, value_delimiter = ',')]
    pub rate_fraction: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub level: LevelGrid,
    /// Periods (list or <lo>:<hi>)
    #[arg(long = "L", value_name = "L", value_delimiter = ',', required = true)]
    pub period: Vec<String>,
    /// Block lengths (list or <lo>:<hi>)
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<String>,
    #[command(flatten)]
    pub rates: RateSpec,
    /// Monte Carlo trials per point
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Master seed; each point runs with a seed derived from it and the point
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Lemma1Args {
    /// Law of the normalized noise: gaussian or uniform
    #[arg(long, default_value = "gaussian")]
    pub noise: String,
    /// Window sizes delta in (0, 1]
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.01")]
    pub delta: Vec<String>,
    /// Shifts c (list or lin:<lo>:<hi>:<count>)
    #[arg(long = "c-grid", value_delimiter = ',', default_value = "lin:-1:1:9", allow_hyphen_values = true)]
    pub c_grid: Vec<String>,
    /// Samples, at least 10000
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Master seed
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Lemma2Args {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub level: Level,
    /// Period L between active slots
    #[arg(long = "L", value_name = "L")]
    pub period: usize,
    /// Block lengths (list or <lo>:<hi>)
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,10000")]
    pub n: Vec<String>,
    /// Half-width of the typical set, absolute
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Monte Carlo trials per block length
    #[arg(long, default_value_t = 500)]
    pub trials: u64,
    /// Master seed
    #[arg(long)]
    pub seed: u64,
    /// Worker threads, 0 for all cores; never changes results
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Coefficient families, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "geometric:0.5,truncated:4:1,example2")]
    pub coeffs: Vec<String>,
    /// Ambient noise variance
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// SNR values (list or log:<lo>:<hi>:<count>)
    #[arg(long, value_delimiter = ',', default_value = "log:1e-2:1e6:9")]
    pub snr: Vec<String>,
    /// Periods searched (list or <lo>:<hi>)
    #[arg(long = "L", value_name = "L", value_delimiter = ',', default_value = "1:64")]
    pub period: Vec<String>,
    /// Variance of the active symbols: full (L*P) or per-slot (P)
    #[arg(long, default_value = "full")]
    pub slot_variance: String,
    /// Print rates in bits instead of nats (the table stays in nats)
    #[arg(long)]
    pub bits: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge(argv, &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Cmd::Classify(a) => commands::classify(a),
        Cmd::Simulate(a) => commands::simulate(a),
        Cmd::Code(a) => commands::code(a),
        Cmd::Bounds(a) => commands::bounds(a),
        Cmd::Sweep(a) => commands::sweep(a),
        Cmd::Lemma1(a) => commands::lemma1(a),
        Cmd::Lemma2(a) => commands::lemma2(a),
        Cmd::Demo(a) => commands::demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Closed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
