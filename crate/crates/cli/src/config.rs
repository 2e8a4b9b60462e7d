//! Command-line flags, configuration files and their validated merge.

use std::fmt;
use std::path::{Path, PathBuf};

use cavity_search::experiments::SCALING_ATOMS;
use cavity_search::propagator::Integrator;
use cavity_search::pulsedesign::{DEFAULT_CUTOFF, DEFAULT_EPSILON, MAX_EPSILON, MIN_SAMPLES};
use cavity_search::statespace::Level;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Default output directory when neither `--out`, the config file nor the
/// environment name one.
pub const DEFAULT_OUT: &str = "cavity-search-out";
pub const OUT_ENV: &str = "CAVITY_SEARCH_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Design,
    Simulate,
    Sweep,
    Compare,
    Figure3,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandName::Design => "design",
            CommandName::Simulate => "simulate",
            CommandName::Sweep => "sweep",
            CommandName::Compare => "compare",
            CommandName::Figure3 => "figure3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    /// `|w⟩`, the uniform superposition.
    Uniform,
    /// `|m⟩`, the marked state.
    Marked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Companion {
    /// `Ω'` from the design law.
    Designed,
    /// `Ω' ≡ 0`.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[value(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LevelArg {
    Full,
    Collective5,
    Effective3,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Full => Level::Full,
            LevelArg::Collective5 => Level::Collective5,
            LevelArg::Effective3 => Level::Effective3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorArg {
    Midpoint,
    Rk4,
}

impl From<IntegratorArg> for Integrator {
    fn from(i: IntegratorArg) -> Self {
        match i {
            IntegratorArg::Midpoint => Integrator::ExponentialMidpoint,
            IntegratorArg::Rk4 => Integrator::RungeKutta4,
        }
    }
}

/// Pulse design and dynamics for adiabatic search with atoms in a cavity.
#[derive(Debug, Parser)]
#[command(name = "cavity-search", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Cmd>,

    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Number of atoms N (a comma-separated list for `sweep`).
    #[arg(long, global = true, value_delimiter = ',', value_name = "N")]
    pub n: Option<Vec<usize>>,

    /// Adiabaticity ratio ε, in (0, 0.2].
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    /// Cavity coupling G (default 100·Ω_peak/N).
    #[arg(long, global = true)]
    pub g: Option<f64>,

    /// Marked-state shift δ.
    #[arg(long, global = true, conflicts_with = "delta_duration")]
    pub delta: Option<f64>,

    /// Marked-state shift given as δ·𝒯.
    #[arg(long, global = true)]
    pub delta_duration: Option<f64>,

    /// Drop the counter-rotating terms (default).
    #[arg(long, global = true, overrides_with = "no_rwa")]
    pub rwa: bool,

    /// Keep the counter-rotating terms `e^{±iδt}`.
    #[arg(long, global = true, overrides_with = "rwa")]
    pub no_rwa: bool,

    /// Fixed number of integration steps (default: converge automatically).
    #[arg(long, global = true)]
    pub steps: Option<usize>,

    /// Gaussian truncation half-width in units of T, at least 3.
    #[arg(long = "cutoff-c", global = true)]
    pub cutoff_c: Option<f64>,

    /// Pulse samples across the window, at least 100.
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Cmd {
    /// Design the pulse pair and check the adiabaticity law.
    Design,
    /// Propagate one model under the designed (or modified) schedule.
    Simulate {
        #[arg(long, value_enum, ignore_case = true)]
        level: Option<LevelArg>,
        #[arg(long, value_enum)]
        initial: Option<Initial>,
        #[arg(long = "omega-prime", value_enum)]
        omega_prime: Option<Companion>,
        #[arg(long, value_enum)]
        integrator: Option<IntegratorArg>,
    },
    /// Duration-scaling sweep over a list of N.
    Sweep,
    /// Compare the effective, 5-level and full models.
    Compare {
        /// Skip the 2N+1-dimensional run.
        #[arg(long)]
        no_full: bool,
    },
    /// The reference run: N = 8, ε = 0.05 unless overridden.
    Figure3,
}

impl Cmd {
    pub fn name(&self) -> CommandName {
        match self {
            Cmd::Design => CommandName::Design,
            Cmd::Simulate { .. } => CommandName::Simulate,
            Cmd::Sweep => CommandName::Sweep,
            Cmd::Compare { .. } => CommandName::Compare,
            Cmd::Figure3 => CommandName::Figure3,
        }
    }
}

/// `n` may be one number or a list in a file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AtomsValue {
    One(usize),
    Many(Vec<usize>),
}

/// Contents of a configuration file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandName>,
    pub n: Option<AtomsValue>,
    pub epsilon: Option<f64>,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub delta_duration: Option<f64>,
    pub rwa: Option<bool>,
    pub steps: Option<usize>,
    pub cutoff_c: Option<f64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub level: Option<LevelArg>,
    pub initial: Option<Initial>,
    pub omega_prime: Option<Companion>,
    pub integrator: Option<IntegratorArg>,
    pub include_full: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Fully merged and validated settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub n: Vec<usize>,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_duration: Option<f64>,
    pub rwa: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub cutoff_c: f64,
    pub samples: usize,
    pub out: PathBuf,
    pub format: Format,
    pub level: LevelArg,
    pub initial: Initial,
    pub omega_prime: Companion,
    pub integrator: IntegratorArg,
    pub include_full: bool,
}

impl RunConfig {
    /// Single `N` of non-sweep commands.
    pub fn n_atoms(&self) -> usize {
        self.n[0]
    }

    /// The normalized configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// One-line JSON form, embedded in output headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("run configuration serializes")
    }
}

fn invalid(field: &str, reason: impl fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for `{field}`: {reason}"))
}

/// Merges file values, then flags, then defaults, and validates the result.
pub fn resolve(
    cli: &Cli,
    file: &FileConfig,
    env_out: Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let command = cli
        .command
        .as_ref()
        .map(Cmd::name)
        .or(file.command)
        .ok_or_else(|| {
            CliError::Usage("no command given (design, simulate, sweep, compare or figure3)".into())
        })?;

    let n = match (&cli.n, &file.n) {
        (Some(v), _) => v.clone(),
        (None, Some(AtomsValue::One(x))) => vec![*x],
        (None, Some(AtomsValue::Many(v))) => v.clone(),
        (None, None) if command == CommandName::Sweep => SCALING_ATOMS.to_vec(),
        (None, None) => vec![8],
    };
    if n.is_empty() {
        return Err(invalid("n", "at least one value is required"));
    }
    if command != CommandName::Sweep && n.len() != 1 {
        return Err(invalid(
            "n",
            format!("`{command}` takes a single N, got {} values", n.len()),
        ));
    }
    if let Some(bad) = n.iter().find(|&&x| x < 2) {
        return Err(invalid("n", format!("need N >= 2, got {bad}")));
    }

    let epsilon = cli.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(invalid(
            "epsilon",
            format!("must lie in (0, {MAX_EPSILON}], got {epsilon}"),
        ));
    }

    let g = cli.g.or(file.g);
    if let Some(g) = g {
        if !(g.is_finite() && g > 0.0) {
            return Err(invalid("g", format!("must be > 0, got {g}")));
        }
    }

    let (delta, delta_duration) = match (cli.delta, cli.delta_duration) {
        (Some(d), _) => (d, None),
        (None, Some(dt)) => (0.0, Some(dt)),
        (None, None) => match (file.delta, file.delta_duration) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "delta",
                    "give either `delta` or `delta_duration`, not both",
                ))
            }
            (Some(d), None) => (d, None),
            (None, dt) => (0.0, dt),
        },
    };
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(invalid("delta", format!("must be >= 0, got {delta}")));
    }
    if let Some(dt) = delta_duration {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(invalid("delta_duration", format!("must be >= 0, got {dt}")));
        }
    }

    let rwa = if cli.no_rwa {
        false
    } else if cli.rwa {
        true
    } else {
        file.rwa.unwrap_or(true)
    };
    if !rwa && delta == 0.0 && delta_duration.unwrap_or(0.0) == 0.0 {
        return Err(invalid(
            "delta",
            "counter-rotating terms (--no-rwa) need delta > 0",
        ));
    }

    let steps = cli.steps.or(file.steps);
    if steps == Some(0) {
        return Err(invalid("steps", "must be >= 1"));
    }
    let cutoff_c = cli.cutoff_c.or(file.cutoff_c).unwrap_or(DEFAULT_CUTOFF);
    if !(cutoff_c.is_finite() && cutoff_c >= 3.0) {
        return Err(invalid("cutoff_c", format!("must be >= 3, got {cutoff_c}")));
    }
    let samples = cli.samples.or(file.samples).unwrap_or(4000);
    if samples < MIN_SAMPLES {
        return Err(invalid(
            "samples",
            format!("need at least {MIN_SAMPLES}, got {samples}"),
        ));
    }

    let (mut level, mut initial, mut omega_prime, mut integrator) =
        (file.level, file.initial, file.omega_prime, file.integrator);
    let mut include_full = file.include_full;
    match &cli.command {
        Some(Cmd::Simulate {
            level: l,
            initial: i,
            omega_prime: o,
            integrator: m,
        }) => {
            level = l.or(level);
            initial = i.or(initial);
            omega_prime = o.or(omega_prime);
            integrator = m.or(integrator);
        }
        Some(Cmd::Compare { no_full: true }) => include_full = Some(false),
        _ => {}
    }
    let level = level.unwrap_or(LevelArg::Effective3);
    if level == LevelArg::Effective3 && !rwa && command == CommandName::Simulate {
        return Err(invalid(
            "level",
            "EFFECTIVE3 assumes the resonant approximation; use COLLECTIVE5 or FULL with --no-rwa",
        ));
    }

    let out = cli
        .out
        .clone()
        .or_else(|| file.out.clone())
        .or(env_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    Ok(RunConfig {
        command,
        n,
        epsilon,
        g,
        delta,
        delta_duration,
        rwa,
        steps,
        cutoff_c,
        samples,
        out,
        format: cli.format.or(file.format).unwrap_or(Format::Text),
        level,
        initial: initial.unwrap_or(Initial::Uniform),
        omega_prime: omega_prime.unwrap_or(Companion::Designed),
        integrator: integrator.unwrap_or(IntegratorArg::Midpoint),
        include_full: include_full.unwrap_or(true),
    })
}
