//! Command-line front end.
//!
//! Flags, an optional JSON config file (same keys as the long flags) and,
//! for `reproduce`, a named preset are merged in that order of precedence
//! into a [`JobSpec`], which is then run and rendered.

mod jobs;
mod output;
mod presets;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelInstance, Gain};
use crate::constellation::ConstellationSpec;
use crate::error::{Error, Result};
use crate::mi::{NoiseRule, DEFAULT_NODES_PER_DIM};
use crate::rotation::DEFAULT_GRID_STEP_DEG;

pub use jobs::run_job;
pub use output::{render, Check, Report, Row};
pub use presets::Experiment;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;
pub const EXIT_IO: i32 = 4;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_ALPHA_POINTS: usize = 201;

#[derive(Parser, Debug)]
#[command(
    name = "cclab",
    version,
    about = "Constellation-constrained rate regions of the two-user Gaussian interference channel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Subcommand, Debug)]
pub enum Commands {
    /// Interference regime and the four SNR/INR ratios
    Classify(CommonArgs),
    /// Gaussian and constellation-constrained rate regions
    Region(CommonArgs),
    /// Optimal relative rotation (--theta metric|numerical)
    RotateOpt(CommonArgs),
    /// FDMA rate curves over the bandwidth split (needs --bandwidth)
    Fdma(CommonArgs),
    /// Simultaneous decoding against FDMA (needs --bandwidth)
    Compare(CommonArgs),
    /// Run a named experiment with its parameters built in
    Reproduce {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        args: CommonArgs,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Transmit power of user 1
    #[arg(long)]
    pub p1: Option<f64>,
    /// Transmit power of user 2
    #[arg(long)]
    pub p2: Option<f64>,
    /// Cross gain from transmitter 1 to receiver 2 (mag∠deg, mag@deg or [re,im])
    #[arg(long, allow_hyphen_values = true)]
    pub h12: Option<String>,
    /// Cross gain from transmitter 2 to receiver 1
    #[arg(long, allow_hyphen_values = true)]
    pub h21: Option<String>,
    #[arg(long = "sigma1-sq")]
    pub sigma1_sq: Option<f64>,
    #[arg(long = "sigma2-sq")]
    pub sigma2_sq: Option<f64>,
    /// Total bandwidth W in Hz; noise variance becomes W and rates are in bits/s
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// psk4|psk8|qam16|single|file:PATH, or two of them separated by a comma
    #[arg(long)]
    pub constellation: Option<String>,
    /// zero|metric|numerical or a fixed angle in degrees
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Rotation search grid step in degrees
    #[arg(long = "grid-step")]
    pub grid_step: Option<f64>,
    /// Search only [0, 360/k) degrees; k must be a symmetry order of the objective
    #[arg(long = "fold-symmetry")]
    pub fold_symmetry: Option<u32>,
    /// Gauss–Hermite nodes per dimension
    #[arg(long, conflicts_with = "samples")]
    pub nodes: Option<usize>,
    /// Use Monte-Carlo with this many noise samples
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte-Carlo seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of α values in FDMA sweeps
    #[arg(long = "alpha-points")]
    pub alpha_points: Option<usize>,
    /// Output file (stdout if absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of the above keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Require file constellations to be at unit power already
    #[arg(long = "no-normalize")]
    pub no_normalize: bool,
    /// Also locate optima numerically where a closed form is used
    #[arg(long)]
    pub verify: bool,
}

/// Config-file mirror of [`CommonArgs`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConfigFile {
    p1: Option<f64>,
    p2: Option<f64>,
    h12: Option<serde_json::Value>,
    h21: Option<serde_json::Value>,
    sigma1_sq: Option<f64>,
    sigma2_sq: Option<f64>,
    bandwidth: Option<f64>,
    constellation: Option<String>,
    theta: Option<serde_json::Value>,
    grid_step: Option<f64>,
    fold_symmetry: Option<u32>,
    nodes: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    alpha_points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    no_normalize: Option<bool>,
    verify: Option<bool>,
}

fn value_to_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ConfigFile {
    fn into_args(self) -> CommonArgs {
        CommonArgs {
            p1: self.p1,
            p2: self.p2,
            h12: self.h12.as_ref().map(value_to_text),
            h21: self.h21.as_ref().map(value_to_text),
            sigma1_sq: self.sigma1_sq,
            sigma2_sq: self.sigma2_sq,
            bandwidth: self.bandwidth,
            constellation: self.constellation,
            theta: self.theta.as_ref().map(value_to_text),
            grid_step: self.grid_step,
            fold_symmetry: self.fold_symmetry,
            nodes: self.nodes,
            samples: self.samples,
            seed: self.seed,
            alpha_points: self.alpha_points,
            out: self.out,
            format: self.format,
            config: None,
            no_normalize: self.no_normalize.unwrap_or(false),
            verify: self.verify.unwrap_or(false),
        }
    }
}

impl CommonArgs {
    /// Fields set here win; unset ones are taken from `base`.
    fn overlay(self, base: CommonArgs) -> CommonArgs {
        CommonArgs {
            p1: self.p1.or(base.p1),
            p2: self.p2.or(base.p2),
            h12: self.h12.or(base.h12),
            h21: self.h21.or(base.h21),
            sigma1_sq: self.sigma1_sq.or(base.sigma1_sq),
            sigma2_sq: self.sigma2_sq.or(base.sigma2_sq),
            bandwidth: self.bandwidth.or(base.bandwidth),
            constellation: self.constellation.or(base.constellation),
            theta: self.theta.or(base.theta),
            grid_step: self.grid_step.or(base.grid_step),
            fold_symmetry: self.fold_symmetry.or(base.fold_symmetry),
            // an explicit choice of either rule replaces the other
            nodes: if self.samples.is_some() {
                self.nodes
            } else {
                self.nodes.or(base.nodes)
            },
            samples: if self.nodes.is_some() {
                self.samples
            } else {
                self.samples.or(base.samples)
            },
            seed: self.seed.or(base.seed),
            alpha_points: self.alpha_points.or(base.alpha_points),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            config: None,
            no_normalize: self.no_normalize || base.no_normalize,
            verify: self.verify || base.verify,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Classify,
    Region,
    RotateOpt,
    Fdma,
    Compare,
    Reproduce,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::Classify => "classify",
            CommandKind::Region => "region",
            CommandKind::RotateOpt => "rotate-opt",
            CommandKind::Fdma => "fdma",
            CommandKind::Compare => "compare",
            CommandKind::Reproduce => "reproduce",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaPolicy {
    Zero,
    Metric,
    Numerical,
    /// Radians.
    Fixed(f64),
}

impl FromStr for ThetaPolicy {
    type Err = Error;

    /// Fixed angles are given in degrees.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(ThetaPolicy::Zero),
            "metric" => Ok(ThetaPolicy::Metric),
            "numerical" => Ok(ThetaPolicy::Numerical),
            other => {
                let deg: f64 = other.trim_end_matches('°').parse().map_err(|_| {
                    Error::Parse(format!(
                        "--theta expects zero|metric|numerical|DEG, got '{s}'"
                    ))
                })?;
                if !deg.is_finite() {
                    return Err(Error::Parse("--theta must be finite".into()));
                }
                Ok(ThetaPolicy::Fixed(deg.to_radians()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub format: Format,
    pub path: Option<PathBuf>,
}

/// Fully resolved description of one run; embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub command: CommandKind,
    pub experiment: Option<Experiment>,
    pub instance: ChannelInstance,
    pub constellations: [ConstellationSpec; 2],
    pub normalize: bool,
    pub theta_policy: ThetaPolicy,
    pub noise_rule: NoiseRule,
    pub seed: u64,
    pub grid_step_deg: f64,
    pub fold_symmetry: u32,
    pub alpha_points: usize,
    pub verify: bool,
    pub output: OutputSpec,
}

fn gain(text: Option<&str>, name: &str) -> Result<num_complex::Complex64> {
    match text {
        None => Ok(num_complex::Complex64::new(1.0, 0.0)),
        Some(t) => t
            .parse::<Gain>()
            .map(|g| g.0)
            .map_err(|e| Error::Parse(format!("--{name}: {e}"))),
    }
}

fn constellation_pair(text: Option<&str>) -> Result<[ConstellationSpec; 2]> {
    let text = text.unwrap_or("psk4");
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [one] => {
            let c: ConstellationSpec = one.parse()?;
            Ok([c.clone(), c])
        }
        [a, b] => Ok([a.parse()?, b.parse()?]),
        _ => Err(Error::Parse(format!(
            "--constellation expects one or two specs, got '{text}'"
        ))),
    }
}

/// Merges flags, config file and preset into a [`JobSpec`]. Every error here
/// is a parse error.
pub fn resolve(
    command: CommandKind,
    experiment: Option<Experiment>,
    args: CommonArgs,
) -> Result<JobSpec> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("config file {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| Error::Parse(format!("config file {}: {e}", path.display())))?
                .into_args()
        }
        None => CommonArgs::default(),
    };
    let preset = experiment.map(presets::defaults).unwrap_or_default();
    let a = args.overlay(config.overlay(preset));

    let p1 =
        a.p1.ok_or_else(|| Error::Parse("--p1 is required".into()))?;
    let p2 =
        a.p2.ok_or_else(|| Error::Parse("--p2 is required".into()))?;
    let h12 = gain(a.h12.as_deref(), "h12")?;
    let h21 = gain(a.h21.as_deref(), "h21")?;
    let instance = match a.bandwidth {
        Some(w) => {
            if a.sigma1_sq.is_some() || a.sigma2_sq.is_some() {
                return Err(Error::Parse(
                    "--bandwidth fixes the noise variance to W; do not combine it with --sigma1-sq/--sigma2-sq".into(),
                ));
            }
            ChannelInstance::with_bandwidth(p1, p2, h12, h21, w)
        }
        None => ChannelInstance::new(p1, p2, h12, h21, a.sigma1_sq.unwrap_or(1.0), a.sigma2_sq.unwrap_or(1.0)),
    }
    .map_err(|e| Error::Parse(e.to_string()))?;

    let constellations = constellation_pair(a.constellation.as_deref())?;
    for c in &constellations {
        if let ConstellationSpec::File(p) = c {
            if !std::path::Path::new(p).is_file() {
                return Err(Error::Parse(format!(
                    "constellation file '{p}' does not exist"
                )));
            }
        }
    }
    let theta_policy = match a.theta.as_deref() {
        Some(t) => t.parse()?,
        None => ThetaPolicy::Metric,
    };
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let noise_rule = match (a.nodes, a.samples) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "--nodes and --samples are mutually exclusive".into(),
            ))
        }
        (_, Some(samples)) => NoiseRule::MonteCarlo { samples, seed },
        (nodes, None) => NoiseRule::GaussHermite {
            nodes_per_dim: nodes.unwrap_or(DEFAULT_NODES_PER_DIM),
        },
    };
    noise_rule
        .validate()
        .map_err(|e| Error::Parse(e.to_string()))?;
    let grid_step_deg = a.grid_step.unwrap_or(DEFAULT_GRID_STEP_DEG);
    if !(grid_step_deg.is_finite() && grid_step_deg > 0.0) {
        return Err(Error::Parse(
            "--grid-step must be a positive number of degrees".into(),
        ));
    }
    let fold_symmetry = a.fold_symmetry.unwrap_or(1);
    if fold_symmetry == 0 {
        return Err(Error::Parse("--fold-symmetry must be at least 1".into()));
    }
    let alpha_points = a.alpha_points.unwrap_or(DEFAULT_ALPHA_POINTS);
    if alpha_points < 2 {
        return Err(Error::Parse("--alpha-points must be at least 2".into()));
    }
    Ok(JobSpec {
        command,
        experiment,
        instance,
        constellations,
        normalize: !a.no_normalize,
        theta_policy,
        noise_rule,
        seed,
        grid_step_deg,
        fold_symmetry,
        alpha_points,
        verify: a.verify,
        output: OutputSpec {
            format: a.format.unwrap_or(Format::Table),
            path: a.out,
        },
    })
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid-argument",
        Error::Internal(_) => "internal",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn report_error(stderr: &mut dyn Write, kind: &str, message: &str, code: i32) -> i32 {
    let record =
        serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    let _ = writeln!(stderr, "{record}");
    code
}

fn limit_threads() {
    if let Some(n) = std::env::var("CCLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // fails only if a pool already exists, which is harmless
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

/// Parses `argv`, runs the job and writes its output. Returns the exit code.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = write!(stdout, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    EXIT_PARSE
                } else {
                    0
                };
            }
            return report_error(stderr, "parse", e.render().to_string().trim(), EXIT_PARSE);
        }
    };
    limit_threads();
    let (kind, experiment, args) = match cli.command {
        Commands::Classify(a) => (CommandKind::Classify, None, a),
        Commands::Region(a) => (CommandKind::Region, None, a),
        Commands::RotateOpt(a) => (CommandKind::RotateOpt, None, a),
        Commands::Fdma(a) => (CommandKind::Fdma, None, a),
        Commands::Compare(a) => (CommandKind::Compare, None, a),
        Commands::Reproduce { experiment, args } => {
            (CommandKind::Reproduce, Some(experiment), args)
        }
    };
    let spec = match resolve(kind, experiment, args) {
        Ok(s) => s,
        Err(e) => return report_error(stderr, "parse", &e.to_string(), EXIT_PARSE),
    };
    let report = match run_job(&spec) {
        Ok(r) => r,
        Err(e) => {
            let code = if matches!(e, Error::Io(_)) {
                EXIT_IO
            } else {
                EXIT_ENGINE
            };
            return report_error(stderr, error_kind(&e), &e.to_string(), code);
        }
    };
    let text = match render(&report) {
        Ok(t) => t,
        Err(e) => return report_error(stderr, error_kind(&e), &e.to_string(), EXIT_ENGINE),
    };
    let written = match &spec.output.path {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => report_error(stderr, "io", &e.to_string(), EXIT_IO),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_policy_parsing() {
        assert_eq!(
            "metric".parse::<ThetaPolicy>().unwrap(),
            ThetaPolicy::Metric
        );
        assert_eq!("ZERO".parse::<ThetaPolicy>().unwrap(), ThetaPolicy::Zero);
        match "-45".parse::<ThetaPolicy>().unwrap() {
            ThetaPolicy::Fixed(r) => assert!((r + std::f64::consts::FRAC_PI_4).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!("sideways".parse::<ThetaPolicy>().is_err());
    }

    #[test]
    fn flags_override_config_and_preset() {
        let base = CommonArgs {
            p1: Some(1.0),
            p2: Some(2.0),
            nodes: Some(16),
            ..Default::default()
        };
        let flags = CommonArgs {
            p2: Some(5.0),
            samples: Some(5000),
            ..Default::default()
        };
        let merged = flags.overlay(base);
        assert_eq!(merged.p1, Some(1.0));
        assert_eq!(merged.p2, Some(5.0));
        assert_eq!(merged.nodes, None);
        assert_eq!(merged.samples, Some(5000));
    }

    #[test]
    fn resolve_rejects_bad_combinations() {
        let args = CommonArgs {
            p1: Some(1.0),
            p2: Some(1.0),
            bandwidth: Some(2.0),
            sigma1_sq: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            resolve(CommandKind::Region, None, args),
            Err(Error::Parse(_))
        ));
        let args = CommonArgs {
            p1: Some(1.0),
            ..Default::default()
        };
        assert!(resolve(CommandKind::Region, None, args).is_err());
        let args = CommonArgs {
            p1: Some(1.0),
            p2: Some(1.0),
            constellation: Some("file:/nonexistent/c.json".into()),
            ..Default::default()
        };
        assert!(resolve(CommandKind::Region, None, args).is_err());
    }

    #[test]
    fn constellation_pairs() {
        let [a, b] = constellation_pair(Some("psk4,qam16")).unwrap();
        assert_eq!(a.to_string(), "psk4");
        assert_eq!(b.to_string(), "qam16");
        let [a, b] = constellation_pair(None).unwrap();
        assert_eq!(a, b);
        assert!(constellation_pair(Some("psk4,psk4,psk4")).is_err());
    }
}
