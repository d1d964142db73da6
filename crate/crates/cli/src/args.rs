use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdiqkd::rational::{parse_rational, to_f64, Rational};

#[derive(Debug, Parser)]
#[command(name = "pdiqkd", version, about = "Parallel DIQKD simulator and bound calculator")]
pub struct Cli {
    /// Master seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; written atomically. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format. Defaults to csv for `attack` and json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for run sweeps. Results do not depend on this value.
    #[arg(long, global = true, env = "PDIQKD_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact classical values, guessing-game values and the certified C* bound.
    Values(ValuesArgs),
    /// Seeded protocol runs with one record per run and an aggregate block.
    Simulate(SimulateArgs),
    /// Analytic bounds, optionally compared against recorded runs.
    Bounds(BoundsArgs),
    /// Grid sweep over device, eavesdropper, epsilon and n.
    Attack(AttackArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    CommonBit,
    FullOutput,
}

#[derive(Debug, Args)]
pub struct ValuesArgs {
    /// `ms` or a path to a game JSON document.
    #[arg(long, default_value = "ms")]
    pub game: String,
    #[arg(long, default_value = "1/8", value_parser = parse_rational_arg)]
    pub eta: Rational,
    #[arg(long, value_enum, default_value_t = Condition::CommonBit)]
    pub condition: Condition,
    /// Working value of C*; must not exceed the certified upper bound.
    #[arg(long, default_value = "0.01", value_parser = parse_real)]
    pub cstar: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DeviceKind {
    Ideal,
    Noisy,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EveKind {
    Random,
    Predict,
    Omniscient,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value = "1/8", value_parser = parse_real)]
    pub eta: f64,
    #[arg(long, default_value = "1/4", value_parser = parse_real)]
    pub gamma: f64,
    #[arg(long = "eps", default_value = "0.1", value_parser = parse_real)]
    pub epsilon: f64,
    /// Keep test rounds in the raw key.
    #[arg(long)]
    pub include_test_rounds: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
    #[arg(long, value_enum, default_value_t = DeviceKind::Ideal)]
    pub device: DeviceKind,
    #[arg(long, value_enum, default_value_t = EveKind::Random)]
    pub eve: EveKind,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Include every run's transcript and private strings in JSON output.
    #[arg(long)]
    pub transcripts: bool,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Win probability the noisy device is calibrated to. Defaults to `1 − ε/2`.
    #[arg(long, value_parser = parse_real, conflicts_with = "q")]
    pub target_win: Option<f64>,
    /// Depolarizing strength of the noisy device.
    #[arg(long, value_parser = parse_real)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantArgs {
    #[arg(long, value_parser = parse_real)]
    pub conc: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub rep: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub leak: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub honest: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value = "0.01", value_parser = parse_real)]
    pub cstar: f64,
    /// Probability of the conditioning event.
    #[arg(long, default_value = "1", value_parser = parse_real)]
    pub pa: f64,
    #[command(flatten)]
    pub constants: ConstantArgs,
    /// Run-record file from `simulate` to compare against.
    #[arg(long)]
    pub attach: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [DeviceKind::Ideal, DeviceKind::Classical])]
    pub devices: Vec<DeviceKind>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EveKind::Random])]
    pub eves: Vec<EveKind>,
    #[arg(long = "eps", value_delimiter = ',', default_value = "0.05", value_parser = parse_real)]
    pub epsilons: Vec<f64>,
    #[arg(long = "ns", value_delimiter = ',', default_value = "100,1000", value_parser = parse_count)]
    pub ns: Vec<usize>,
    #[arg(long, default_value = "1/8", value_parser = parse_real)]
    pub eta: f64,
    #[arg(long, default_value = "1/4", value_parser = parse_real)]
    pub gamma: f64,
    #[arg(long, default_value_t = 100)]
    pub runs: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Keep test rounds in the raw key.
    #[arg(long)]
    pub include_test_rounds: bool,
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A real given as `p/q`, an integer, a decimal or scientific notation.
fn parse_real(s: &str) -> Result<f64, String> {
    if let Ok(r) = parse_rational(s) {
        return Ok(to_f64(&r));
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{s}` is not a number"))
}

/// A positive integer, also accepted in scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    let v = parse_real(s)?;
    if v < 1.0 || v.fract() != 0.0 || v > usize::MAX as f64 {
        return Err(format!("`{s}` is not a positive integer"));
    }
    Ok(v as usize)
}
