use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use saelab::dragonfly::{MacAddr, Mode};
use saelab::field_curve::CurveId;
use saelab::leakage::{Channels, LibraryProfile};

#[derive(Debug, Parser)]
#[command(
    name = "saelab",
    version,
    about = "WPA3 Dragonfly handshakes, leakage simulation and dictionary partitioning"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key = value configuration file; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// RNG seed; required when the CI environment variable is set
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout. Relative paths are resolved
    /// against $SAELAB_OUT_DIR when set.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Worker threads for parallel work (0 = all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run complete handshakes between two simulated stations
    Handshake(HandshakeArgs),
    /// Observe a victim and write its leakage fingerprint
    Leaksim(LeaksimArgs),
    /// Empirical versus analytic information per session
    Stats(StatsArgs),
    /// Prune a dictionary with a fingerprint
    Attack(AttackArgs),
    /// Traces needed to prune a dictionary with a given confidence
    Plan(PlanArgs),
    /// Classify cache-probe traces of the parity branch
    Classify(ClassifyArgs),
    /// Generate a random dictionary, optionally planting a password
    Dictionary(DictionaryArgs),
}

/// Session parameters shared by the commands that run password conversion.
#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub curve: Option<CurveId>,
    /// openssl, wolfssl, ell, corecrypto, freeradius-openssl or hardened
    #[arg(long)]
    pub profile: Option<LibraryProfile>,
    #[arg(long, conflicts_with = "password_file")]
    pub password: Option<String>,
    /// First line of this file is the password
    #[arg(long, value_name = "FILE")]
    pub password_file: Option<PathBuf>,
    #[arg(long)]
    pub ssid: Option<String>,
    /// SAE-PT password identifier
    #[arg(long)]
    pub identifier: Option<String>,
    /// Address of the first station (the victim)
    #[arg(long)]
    pub mac: Option<MacAddr>,
    /// Address of the second station, incremented per session under the
    /// incrementing strategy
    #[arg(long)]
    pub peer_mac: Option<MacAddr>,
    #[arg(long, value_enum)]
    pub mac_strategy: Option<MacStrategy>,
    #[arg(long, short = 'n')]
    pub sessions: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MacStrategy {
    Fixed,
    Incrementing,
}

impl FromStr for MacStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <MacStrategy as ValueEnum>::from_str(s, true)
    }
}

/// Which channels the attacker monitors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelsArg(pub Channels);

impl FromStr for ChannelsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(ChannelsArg(Channels::ALL)),
            "decompression" => Ok(ChannelsArg(Channels::DECOMPRESSION)),
            "bin2bn" => Ok(ChannelsArg(Channels::BIN2BN)),
            _ => Err(format!(
                "unknown channels `{s}` (all, decompression or bin2bn)"
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct HandshakeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Password of the second station; defaults to the first's
    #[arg(long, conflicts_with = "peer_password_file")]
    pub peer_password: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub peer_password_file: Option<PathBuf>,
    /// Configuration file for the second station (password keys only)
    #[arg(long, value_name = "FILE")]
    pub peer_config: Option<PathBuf>,
    /// Write line-delimited JSON commit/confirm records here
    #[arg(long, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LeaksimArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Raw measurements merged per session
    #[arg(long, short = 'r')]
    pub repetitions: Option<u32>,
    /// Probability that one raw measurement misreads a binary event
    #[arg(long)]
    pub flip_probability: Option<f64>,
    /// Merged sessions below this vote confidence are discarded
    #[arg(long)]
    pub usable_threshold: Option<f64>,
    #[arg(long)]
    pub channels: Option<ChannelsArg>,
    /// Label stored in the fingerprint
    #[arg(long)]
    pub password_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub curve: Option<CurveId>,
    /// Restrict to one profile (default: every profile)
    #[arg(long)]
    pub profile: Option<LibraryProfile>,
    #[arg(long)]
    pub channels: Option<ChannelsArg>,
    /// Random-password sessions per profile
    #[arg(long, short = 'n')]
    pub sessions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Candidate passwords, one per line
    #[arg(long, value_name = "FILE")]
    pub dictionary: PathBuf,
    /// Fingerprint JSON written by `leaksim`
    #[arg(long, value_name = "FILE")]
    pub fingerprint: PathBuf,
    /// Write the surviving candidates here, one per line
    #[arg(long, value_name = "FILE")]
    pub survivors: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LeakKind {
    /// One fair bit per trace
    Bit,
    /// Index of the first successful hunting-and-pecking iteration
    Iteration,
    /// Per-session distribution of a library profile
    Profile,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Dictionary sizes, comma separated (scientific notation accepted)
    #[arg(
        long = "dict-size",
        short = 'd',
        value_delimiter = ',',
        required = true
    )]
    pub dict_size: Vec<f64>,
    #[arg(long, value_enum, default_value = "profile")]
    pub leak: LeakKind,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Raw measurements per trace
    #[arg(long, short = 'r')]
    pub repetitions: Option<u32>,
    #[arg(long)]
    pub profile: Option<LibraryProfile>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub curve: Option<CurveId>,
    #[arg(long)]
    pub channels: Option<ChannelsArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Default,
    ZeroNoise,
    Elevated,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Trace files in `slot hit cycles` format
    #[arg(value_name = "TRACE")]
    pub traces: Vec<PathBuf>,
    /// Treat all given files as repeated traces of one event
    #[arg(long)]
    pub repeated: bool,
    /// Synthesize this many events instead of reading files
    #[arg(long, value_name = "N", conflicts_with = "traces")]
    pub synth: Option<usize>,
    /// Traces averaged per synthesized event
    #[arg(long, short = 'r', default_value_t = 1)]
    pub repetitions: u32,
    /// Hit-count model for synthesis and default cutoffs
    #[arg(long, value_enum, default_value = "default")]
    pub model: ModelKind,
    /// Access time separating hits from misses when reading files
    #[arg(long, default_value_t = 120)]
    pub threshold_cycles: u32,
    #[arg(long)]
    pub taken_min: Option<f64>,
    #[arg(long)]
    pub not_taken_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DictionaryArgs {
    #[arg(long, short = 'n')]
    pub size: usize,
    /// Insert this password at a random position
    #[arg(long)]
    pub plant: Option<String>,
}
