//! Command-line surface and the run configuration echoed into reports.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diagdesign::ensembles::{EnsembleKind, DEFAULT_J_STAR};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Parser)]
#[command(
    name = "diagdesign",
    version,
    about = "Second-moment checks for alternating random Z/X-diagonal unitaries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    pub format: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0, global = true)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and numerical checks of the coefficient algebra and the maps.
    VerifyLemmas(VerifyArgs),
    /// Design-error bracket table for ell = 1..ell-max.
    Bracket(BracketArgs),
    /// Compare a finite or sampled ensemble with the ideal diagonal twirl.
    Ensemble(EnsembleArgs),
    /// Smallest repetition count meeting a target design error.
    EllForEpsilon(EpsilonArgs),
    /// Frame potentials of the Haar twirl and of R^ell.
    FramePotential(BracketArgs),
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub qubits: u32,

    #[arg(long, default_value_t = 3)]
    pub ell_max: u32,

    /// Replace every tolerance by this value (harness self-test).
    #[arg(long, hide = true, allow_negative_numbers = true)]
    pub tolerance_override: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BracketArgs {
    #[arg(long, default_value_t = 2)]
    pub qubits: u32,

    #[arg(long, default_value_t = 4)]
    pub ell_max: u32,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 2)]
    pub qubits: u32,

    #[arg(long, value_enum, default_value_t = Kind::Circuit)]
    pub kind: Kind,

    #[arg(long, default_value_t = 1)]
    pub ell: u32,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Monte-Carlo draws (at least 100).
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,

    /// Nonzero coupling of the Hamiltonian segments.
    #[arg(long, default_value_t = DEFAULT_J_STAR)]
    pub j_star: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EpsilonArgs {
    #[arg(long)]
    pub qubits: u32,

    /// Target design error, 0 < epsilon < 2.
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Circuit,
    Hamiltonian,
    Continuous,
}

impl From<Kind> for EnsembleKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Circuit => EnsembleKind::Circuit,
            Kind::Hamiltonian => EnsembleKind::Hamiltonian,
            Kind::Continuous => EnsembleKind::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    VerifyLemmas,
    Bracket,
    Ensemble,
    EllForEpsilon,
    FramePotential,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::VerifyLemmas => "verify-lemmas",
            CommandKind::Bracket => "bracket",
            CommandKind::Ensemble => "ensemble",
            CommandKind::EllForEpsilon => "ell-for-epsilon",
            CommandKind::FramePotential => "frame-potential",
        }
    }
}

/// Everything that influences a report's numbers. Thread count and output
/// path are deliberately absent so they cannot change the bytes written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n_qubits: u32,
    pub ell: Option<u32>,
    pub ell_max: Option<u32>,
    pub epsilon: Option<f64>,
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub j_star: Option<f64>,
    pub tolerance_override: Option<f64>,
    pub output_format: OutputFormat,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        RunConfig {
            command,
            n_qubits: 2,
            ell: None,
            ell_max: None,
            epsilon: None,
            kind: None,
            seed: None,
            samples: None,
            j_star: None,
            tolerance_override: None,
            output_format: OutputFormat::Csv,
        }
    }

    pub fn from_cli(cli: &Cli) -> Self {
        let mut c = match &cli.command {
            Command::VerifyLemmas(a) => RunConfig {
                n_qubits: a.qubits,
                ell_max: Some(a.ell_max),
                tolerance_override: a.tolerance_override,
                ..RunConfig::new(CommandKind::VerifyLemmas)
            },
            Command::Bracket(a) => RunConfig {
                n_qubits: a.qubits,
                ell_max: Some(a.ell_max),
                ..RunConfig::new(CommandKind::Bracket)
            },
            Command::FramePotential(a) => RunConfig {
                n_qubits: a.qubits,
                ell_max: Some(a.ell_max),
                ..RunConfig::new(CommandKind::FramePotential)
            },
            Command::Ensemble(a) => RunConfig {
                n_qubits: a.qubits,
                ell: Some(a.ell),
                kind: Some(a.kind),
                seed: Some(a.seed),
                samples: Some(a.samples),
                j_star: Some(a.j_star),
                ..RunConfig::new(CommandKind::Ensemble)
            },
            Command::EllForEpsilon(a) => RunConfig {
                n_qubits: a.qubits,
                epsilon: Some(a.epsilon),
                ..RunConfig::new(CommandKind::EllForEpsilon)
            },
        };
        c.output_format = cli.output.format;
        c
    }

    /// Config as a JSON object without the command name (reported separately).
    pub fn echo(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("config serialises") {
            Value::Object(mut m) => {
                m.remove("command");
                m
            }
            _ => unreachable!("struct serialises to an object"),
        }
    }
}
