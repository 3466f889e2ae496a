//! Command-line grammar. Every parsed struct is also serialized verbatim into
//! the run manifest, so field names here are part of the output format.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "repval", version, about = "Values, advice states and search protocols for repeated multiplayer games")]
pub struct Cli {
    /// Output encoding. CSV is available for reports with a tabular form.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Classical, non-signaling or see-saw value of a game.
    #[command(subcommand)]
    Value(ValueCommand),
    /// Build the n-fold repetition, or score a strategy on it.
    Repeat(RepeatArgs),
    /// The agreement game whose k-fold repetition keeps value 1/2.
    Counterexample(CounterexampleArgs),
    /// Seeded random instances of every distance and entropy inequality.
    QitBattery(BatteryArgs),
    /// Advice states for the repeated game.
    #[command(subcommand)]
    Advice(AdviceCommand),
    /// Distributed search for a losing coordinate.
    #[command(subcommand)]
    Search(SearchCommand),
    /// Condition a classical strategy on winning a subset and play the rest.
    ProtocolC(ProtocolCArgs),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Value(v) => format!("value {}", v.method()),
            Command::Repeat(_) => "repeat".into(),
            Command::Counterexample(_) => "counterexample".into(),
            Command::QitBattery(_) => "qit-battery".into(),
            Command::Advice(_) => "advice run".into(),
            Command::Search(_) => "search sim".into(),
            Command::ProtocolC(_) => "protocol-c".into(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Value(ValueCommand::Seesaw(a)) => Some(a.seed),
            Command::QitBattery(a) => Some(a.seed),
            Command::Search(SearchCommand::Sim(a)) => Some(a.seed),
            Command::ProtocolC(a) => a.samples.map(|_| a.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueCommand {
    /// Exact value over all deterministic strategies.
    Classical(GameArg),
    /// Non-signaling value by linear programming.
    Ns(GameArg),
    /// Lower bound on the entangled value by alternating optimization.
    Seesaw(SeesawArgs),
}

impl ValueCommand {
    fn method(&self) -> &'static str {
        match self {
            ValueCommand::Classical(_) => "classical",
            ValueCommand::Ns(_) => "ns",
            ValueCommand::Seesaw(_) => "seesaw",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GameArg {
    pub game: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SeesawArgs {
    pub game: PathBuf,
    /// Local dimension per player, comma separated (default 2 each).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RepeatArgs {
    pub game: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Strategy for one copy (played independently in every coordinate) or
    /// for the whole repetition.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BatteryArgs {
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdviceCommand {
    /// Build the advice state, condition it, measure it and round every
    /// unconditioned coordinate.
    Run(AdviceArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AdviceArgs {
    pub game: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub strategy: PathBuf,
    /// `none`, `win-all` or `win-subset:0,2,...`.
    #[arg(long, default_value = "win-all", value_parser = parse_condition)]
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    None,
    WinAll,
    WinSubset(Vec<usize>),
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    match s {
        "none" => Ok(Condition::None),
        "win-all" => Ok(Condition::WinAll),
        _ => {
            let list = s.strip_prefix("win-subset:").ok_or_else(|| format!("expected none, win-all or win-subset:C, got `{s}`"))?;
            list.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad coordinate `{t}`: {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(Condition::WinSubset)
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchCommand {
    /// Monte Carlo acceptance of the search protocol on a synthetic loss pattern.
    Sim(SearchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Number of coordinates.
    #[arg(long)]
    pub n: usize,
    #[arg(long = "eps-prime")]
    pub eps_prime: f64,
    #[arg(long)]
    pub eta: f64,
    /// Fraction of coordinates that lose; rounded up to whole coordinates.
    #[arg(long = "losing-fraction")]
    pub losing_fraction: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the number of groups.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "answer-bits", default_value_t = 1)]
    pub answer_bits: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ProtocolCArgs {
    pub game: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Classical strategy for one copy or for the whole repetition.
    #[arg(long)]
    pub strategy: PathBuf,
    /// Coordinates conditioned on winning.
    #[arg(long = "C", value_delimiter = ',', num_args = 1.., required = true)]
    pub coords: Vec<usize>,
    /// Sample this many inputs instead of enumerating.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
