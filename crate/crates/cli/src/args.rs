use std::f64::consts::FRAC_1_SQRT_2;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsp_core::protocol::{AliceOutcome, AuxOutcome, ChannelPair, TargetState};
use rsp_core::Amplitude;

use crate::CliError;

/// Default trial count for `simulate`.
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(
    name = "rsp",
    version,
    about = "Remote preparation of a two-qubit state over two shared entangled pairs",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace a single protocol run.
    Run(Flags),
    /// Exact branch probabilities and success weights.
    Exact(Flags),
    /// Seeded Monte Carlo estimate of the success rate.
    Simulate(Flags),
    /// Closed-form (and optionally sampled) success over an (a, c) grid.
    Sweep(Flags),
    /// Check each constraint on a target given inline or in a file.
    Validate {
        /// File holding four complex literals separated by commas or
        /// whitespace; lines starting with '#' are ignored.
        file: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Args)]
struct Flags {
    /// Target coefficients alpha,beta,gamma,delta, e.g. 0.5,0+0.5j,0.5,0+0.5j
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// First channel pair coefficient, in [0, 1/√2]; b = √(1−a²).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Second channel pair coefficient, in [0, 1/√2]; d = √(1−c²).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Monte Carlo trials (simulate defaults to 100000; sweep samples only when set).
    #[arg(long)]
    trials: Option<u64>,
    /// Base seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fix Alice's measurement outcome in `run`.
    #[arg(long, value_parser = ["phi", "phi-perp", "psi", "psi-perp"])]
    forced_outcome: Option<String>,
    /// Fix Bob's auxiliary-qubit outcome in `run`.
    #[arg(long, value_parser = ["0", "1"])]
    forced_aux: Option<String>,
    /// Grid spacing for `sweep`.
    #[arg(long)]
    step: Option<f64>,
    /// Output format (sweep defaults to csv, everything else to json).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Exact,
    Simulate,
    Sweep,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Exact => "exact",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
        }
    }
}

/// Fully validated command-line configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Coefficients as typed; for `validate` these are not yet checked.
    pub raw_target: Option<[Amplitude; 4]>,
    /// Validated target; `None` in `validate` mode and for a target-less
    /// closed-form sweep.
    pub target: Option<TargetState>,
    pub channel: ChannelPair,
    /// Trial count; `None` disables sampling in `sweep`.
    pub trials: Option<u64>,
    pub seed: u64,
    pub forced_outcome: Option<AliceOutcome>,
    pub forced_aux: Option<AuxOutcome>,
    pub step: f64,
    pub format: Format,
    pub output_path: Option<PathBuf>,
}

/// Parses a complex literal: `re`, `imj`, `re+imj` or `re-imj` (`i` is
/// accepted in place of `j`).
pub fn parse_complex(text: &str) -> Result<Amplitude, CliError> {
    let bad = || CliError::Usage(format!("malformed complex literal {text:?}"));
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| t.parse::<f64>().ok().filter(|x| x.is_finite());
    let Some(body) = s.strip_suffix(['j', 'i']) else {
        return num(s).map(|re| Amplitude::new(re, 0.0)).ok_or_else(bad);
    };
    // Split at the last sign that is not the leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k]).ok_or_else(bad)?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "+" | "" => 1.0,
        "-" => -1.0,
        t => num(t).ok_or_else(bad)?,
    };
    Ok(Amplitude::new(re, im))
}

/// Four complex literals separated by commas and/or whitespace.
pub fn parse_target_list(text: &str) -> Result<[Amplitude; 4], CliError> {
    let parts: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|ch: char| ch == ',' || ch.is_whitespace()))
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "target needs 4 coefficients, got {}",
            parts.len()
        )));
    }
    let mut out = [Amplitude::new(0.0, 0.0); 4];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = parse_complex(p)?;
    }
    Ok(out)
}

fn channel_coefficient(name: &str, value: Option<f64>) -> Result<f64, CliError> {
    let v = value.unwrap_or(FRAC_1_SQRT_2);
    if !(v.is_finite() && (0.0..=FRAC_1_SQRT_2 + 1e-12).contains(&v)) {
        return Err(CliError::Usage(format!(
            "--{name} {v} is outside [0, 1/√2]; the pair needs |{name}| <= √(1−{name}²)"
        )));
    }
    Ok(v.min(FRAC_1_SQRT_2))
}

/// Parses `argv` (including the program name) into a validated config.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (mode, flags, file) = match cli.command {
        Command::Run(f) => (Mode::Run, f, None),
        Command::Exact(f) => (Mode::Exact, f, None),
        Command::Simulate(f) => (Mode::Simulate, f, None),
        Command::Sweep(f) => (Mode::Sweep, f, None),
        Command::Validate { file, flags } => (Mode::Validate, flags, file),
    };

    let a = channel_coefficient("a", flags.a)?;
    let c = channel_coefficient("c", flags.c)?;
    let channel = ChannelPair::from_ac(a, c).map_err(|e| CliError::Usage(e.to_string()))?;

    let raw_target = match (&file, &flags.target) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either a target file or --target, not both".into()))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            Some(parse_target_list(&text)?)
        }
        (None, Some(t)) => Some(parse_target_list(t)?),
        (None, None) => None,
    };

    let needs_target = match mode {
        Mode::Run | Mode::Exact | Mode::Simulate | Mode::Validate => true,
        Mode::Sweep => flags.trials.is_some(),
    };
    if needs_target && raw_target.is_none() {
        return Err(CliError::Usage(format!("{} requires --target", mode.name())));
    }
    let target = match (mode, raw_target) {
        (Mode::Validate, _) | (_, None) => None,
        (_, Some(raw)) => Some(TargetState::validate(raw).map_err(|e| CliError::Usage(e.to_string()))?),
    };

    let trials = match (mode, flags.trials) {
        (_, Some(0)) => return Err(CliError::Usage("--trials must be at least 1".into())),
        (Mode::Simulate, None) => Some(DEFAULT_TRIALS),
        (_, t) => t,
    };
    let step = flags.step.unwrap_or(DEFAULT_STEP);
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Usage(format!("--step must be positive, got {step}")));
    }
    let default_format = if mode == Mode::Sweep { Format::Csv } else { Format::Json };

    Ok(RunConfig {
        mode,
        raw_target,
        target,
        channel,
        trials,
        seed: flags.seed,
        forced_outcome: flags
            .forced_outcome
            .map(|s| s.parse().expect("restricted by clap")),
        forced_aux: flags.forced_aux.map(|s| s.parse().expect("restricted by clap")),
        step,
        format: flags.format.unwrap_or(default_format),
        output_path: flags.out,
    })
}
