//! Command-line front end: `sweep`, `bound`, `fit` and `tomo`.
//!
//! Settings come from an optional TOML file (`--config`) and are then
//! overridden by flags. Results go to `--out` or standard output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bilocal::{curve_to_csv, default_grid, validate_correction};
use crate::ejm::{ejm_povm, EjmBasis, PhaseErrors};
use crate::error::{Error, Result};
use crate::noisefit::{self, FitOptions, NoiseParams};
use crate::qmath::{pure_fidelity, PureState};
use crate::swapnet::{prepare_input, sample_counts};
use crate::tomo::{self, FixtureAngle, TomoInputSet};
use crate::witnesses::{eval_bilocal, eval_bprime, eval_fnn};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const SWEEP_HEADER: &str = "theta,B,Z,bilocal_bound,F1,F2,Bprime";

const BOUND_RESTARTS: usize = 200;
const DETECTOR_SHOTS: u64 = 100_000;
const STATE_SHOTS: u64 = 10_000;

/// Parses radians or multiples of π such as `pi/12`, `5pi/12`, `5*pi/12`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return finite_angle(v, text);
    }
    let bad = || Error::Parse(format!("cannot parse angle {text:?}"));
    let lower = s.to_ascii_lowercase();
    let (num, den) = match lower.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (lower.as_str(), 1.0),
    };
    let coef = num
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim()
        .trim_end_matches('*')
        .trim();
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| bad())?
    };
    finite_angle(coef * std::f64::consts::PI / den, text)
}

fn finite_angle(v: f64, text: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("angle {text:?} is not finite")))
    }
}

/// An angle in radians; reads numbers or `pi/k` strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AngleText", into = "f64")]
pub struct Angle(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleText {
    Number(f64),
    Text(String),
}

impl TryFrom<AngleText> for Angle {
    type Error = Error;

    fn try_from(v: AngleText) -> Result<Self> {
        match v {
            AngleText::Number(x) => Ok(Angle(x)),
            AngleText::Text(s) => parse_angle(&s).map(Angle),
        }
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    #[default]
    Sweep,
    Bound,
    Fit,
    Tomo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TomoMode {
    /// Element fidelities of the shipped detector matrices.
    #[default]
    Fixture,
    /// Simulated detector tomography of the model measurement.
    RoundTrip,
    /// Simulated four-qubit state tomography of the model input.
    State,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub visibility: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            visibility: 1.0,
            delta1: 0.0,
            delta2: 0.0,
            delta3: 0.0,
            delta4: 0.0,
            delta5: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn params(&self) -> Result<NoiseParams> {
        NoiseParams::new(
            self.visibility,
            PhaseErrors::new([
                self.delta1,
                self.delta2,
                self.delta3,
                self.delta4,
                self.delta5,
            ])?,
        )
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: CommandKind,
    pub theta: Vec<Angle>,
    pub noise: NoiseConfig,
    /// Shots per setting; absent means exact probabilities in `sweep`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub grid: Vec<f64>,
    /// Restarts per grid point in `bound`, starts in `fit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub mode: TomoMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
}

/// The angles of the measured data, `0, π/12, …, π/2`.
pub fn default_angles() -> Vec<Angle> {
    (0..=6)
        .map(|k| Angle(k as f64 * std::f64::consts::PI / 12.0))
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::Sweep,
            theta: default_angles(),
            noise: NoiseConfig::default(),
            shots: None,
            seed: 0,
            output: None,
            grid: default_grid(),
            restarts: None,
            data: None,
            mode: TomoMode::Fixture,
            fixtures: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn angles(&self) -> Result<Vec<f64>> {
        if self.theta.is_empty() {
            return Err(Error::invalid("empty theta list"));
        }
        Ok(self.theta.iter().map(|a| a.0).collect())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ejmnet",
    version,
    about = "EJM entanglement-swapping network: simulation, bounds, fits, tomography"
)]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print the effective configuration instead of running.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// B, Z, F1, F2 and B' over a list of angles.
    Sweep,
    /// Bilocal bound curve against 3 + Z + 4Z².
    Bound,
    /// Least-squares noise fit to a CSV with theta,B,F1,F2 columns.
    Fit {
        /// Data file; defaults to the config's `data`.
        data: Option<PathBuf>,
    },
    /// Tomography reports.
    Tomo {
        #[arg(long, value_enum)]
        mode: Option<TomoMode>,
        /// Directory holding E1_theta0.txt … E4_theta45.txt.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Comma-separated angles in radians or as `pi/k`.
    #[arg(long, global = true, value_delimiter = ',', value_parser = angle_arg)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub visibility: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta3: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta4: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta5: Option<f64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated Z caps.
    #[arg(long, global = true, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
}

fn angle_arg(s: &str) -> std::result::Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

impl Cli {
    /// The file configuration with flags and the subcommand applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let o = &self.overrides;
        if let Some(t) = &o.theta {
            cfg.theta = t.iter().copied().map(Angle).collect();
        }
        let n = &mut cfg.noise;
        for (slot, v) in [
            (&mut n.visibility, o.visibility),
            (&mut n.delta1, o.delta1),
            (&mut n.delta2, o.delta2),
            (&mut n.delta3, o.delta3),
            (&mut n.delta4, o.delta4),
            (&mut n.delta5, o.delta5),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if o.shots.is_some() {
            cfg.shots = o.shots;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if o.out.is_some() {
            cfg.output = o.out.clone();
        }
        if let Some(g) = &o.grid {
            cfg.grid = g.clone();
        }
        if o.restarts.is_some() {
            cfg.restarts = o.restarts;
        }
        match &self.command {
            Command::Sweep => cfg.command = CommandKind::Sweep,
            Command::Bound => cfg.command = CommandKind::Bound,
            Command::Fit { data } => {
                cfg.command = CommandKind::Fit;
                if data.is_some() {
                    cfg.data = data.clone();
                }
            }
            Command::Tomo { mode, fixtures } => {
                cfg.command = CommandKind::Tomo;
                if let Some(m) = mode {
                    cfg.mode = *m;
                }
                if fixtures.is_some() {
                    cfg.fixtures = fixtures.clone();
                }
            }
        }
        Ok(cfg)
    }
}

/// Runs the configured command and returns its output text.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    match cfg.command {
        CommandKind::Sweep => cmd_sweep(cfg),
        CommandKind::Bound => cmd_bound(cfg),
        CommandKind::Fit => cmd_fit(cfg),
        CommandKind::Tomo => cmd_tomo(cfg),
    }
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let params = cfg.noise.params()?;
    let mut out = format!("{SWEEP_HEADER}\n");
    for (k, theta) in cfg.angles()?.into_iter().enumerate() {
        let exact = noisefit::noisy_table(theta, &params)?;
        let table = match cfg.shots {
            Some(shots) => {
                sample_counts(&exact, shots, cfg.seed.wrapping_add(k as u64))?.frequencies()?
            }
            None => exact,
        };
        let bilocal = eval_bilocal(&table)?;
        let fnn = eval_fnn(&table)?;
        let bprime = eval_bprime(&table)?.bprime;
        let bound = bilocal.bound.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{theta},{},{},{bound},{},{},{bprime}",
            bilocal.b, bilocal.z, fnn.f1, fnn.f2
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn cmd_bound(cfg: &RunConfig) -> Result<String> {
    let curve = validate_correction(&cfg.grid, cfg.restarts.unwrap_or(BOUND_RESTARTS), cfg.seed)?;
    if let Some(p) = curve.iter().find(|p| !p.within_envelopes()) {
        return Err(Error::Numerical(format!(
            "bilocal value {} at Z = {} exceeds the correction envelope",
            p.best_b, p.z_cap
        )));
    }
    Ok(curve_to_csv(&curve))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<String> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| Error::invalid("fit needs a data file"))?;
    let data = noisefit::load_fit_data(path)?;
    let mut opts = FitOptions {
        seed: cfg.seed,
        ..FitOptions::default()
    };
    if let Some(r) = cfg.restarts {
        opts.starts = r;
    }
    noisefit::fit_with(&data, &opts)?.record().to_text()
}

pub fn cmd_tomo(cfg: &RunConfig) -> Result<String> {
    match cfg.mode {
        TomoMode::Fixture => tomo_fixture(cfg),
        TomoMode::RoundTrip => tomo_round_trip(cfg),
        TomoMode::State => tomo_state(cfg),
    }
}

fn tomo_fixture(cfg: &RunConfig) -> Result<String> {
    let dir = cfg
        .fixtures
        .as_deref()
        .unwrap_or_else(|| tomo::fixture_dir());
    let mut out = String::from("theta,E1,E2,E3,E4,measurement_fidelity\n");
    for angle in FixtureAngle::ALL {
        let povm = tomo::load_fixture_povm(dir, angle)?;
        let basis = EjmBasis::new(angle.theta())?;
        let f = tomo::element_fidelities(&povm, &basis)?;
        let m = tomo::measurement_fidelity(&povm, &basis)?;
        writeln!(
            out,
            "{},{},{},{},{},{m}",
            angle.theta(),
            f[0],
            f[1],
            f[2],
            f[3]
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn tomo_round_trip(cfg: &RunConfig) -> Result<String> {
    let params = cfg.noise.params()?;
    let shots = cfg.shots.unwrap_or(DETECTOR_SHOTS);
    let inputs = TomoInputSet::standard();
    let mut out =
        String::from("theta,shots,iterations,converged,log_likelihood,measurement_fidelity\n");
    for (k, theta) in cfg.angles()?.into_iter().enumerate() {
        let truth = ejm_povm(theta, params.deltas())?;
        let counts =
            tomo::simulate_tomo_counts(&truth, &inputs, shots, cfg.seed.wrapping_add(k as u64))?;
        let report = tomo::ml_povm(&counts, &inputs)?;
        if !report.monotone() {
            return Err(Error::Numerical("log-likelihood decreased".into()));
        }
        let fidelity = tomo::measurement_fidelity(&report.estimate, &EjmBasis::new(theta)?)?;
        writeln!(
            out,
            "{theta},{shots},{},{},{},{fidelity}",
            report.iterations,
            report.converged,
            report.log_likelihood.last().copied().unwrap_or(f64::NAN)
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn tomo_state(cfg: &RunConfig) -> Result<String> {
    let v = cfg.noise.visibility;
    let shots = cfg.shots.unwrap_or(STATE_SHOTS);
    let truth = prepare_input(v, v)?;
    let counts = tomo::simulate_pauli_counts(truth.rho(), shots, cfg.seed)?;
    let report = tomo::ml_state(&counts)?;
    if !report.monotone() {
        return Err(Error::Numerical("log-likelihood decreased".into()));
    }
    let target = PureState::phi_plus().tensor(&PureState::phi_plus())?;
    let fidelity = pure_fidelity(&target, &report.estimate)?;
    let ind = tomo::independence_metrics(&report.estimate)?;
    Ok(format!(
        "visibility,shots,iterations,converged,fidelity,product_fidelity,mutual_information_bits\n\
         {v},{shots},{},{},{fidelity},{},{}\n",
        report.iterations, report.converged, ind.product_fidelity, ind.mutual_information_bits
    ))
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidArgument(_) | Error::Parse(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn write_output(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = cli.resolve().and_then(|cfg| {
        if cli.print_config {
            print!("{}", cfg.to_toml()?);
            return Ok(());
        }
        let text = execute(&cfg)?;
        write_output(&cfg, &text)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
