//! Command-line front end: configuration, sweep orchestration and artifact
//! emission.

mod commands;

use crate::channel_params::ChannelConfig;
use crate::error::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "zc-rate", version, about = "Zero-crossing channel rate bounds and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat TOML file of settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one setting; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Base RNG seed; overrides a `seed` setting [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Units for the printed summary; CSV files carry both.
    #[arg(long, global = true, value_enum, default_value_t = Units::Bits)]
    pub units: Units,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lower and upper rate bounds over k and SNR.
    BoundsSweep,
    /// Optimal k and the gap to AWGN capacity over SNR.
    KOpt,
    /// Bounds normalized by the bandwidth 2W over SNR.
    SpectralEfficiency,
    /// PSD bounds against the simulated periodogram.
    Psd,
    /// Zero-crossings per transition interval, analytic and simulated.
    TransitionCensus,
    /// Exact shift variance against its Gaussian approximation.
    GaussCheck,
    /// Mean excursion duration above the signal level.
    Excursion,
    /// Lowpass-distortion statistics and histograms.
    LpDistortion,
    /// Deletion counts with decoupled bandwidth and transition time.
    Deletions,
    /// One end-to-end waveform run with optional crossing dumps.
    Simulate,
    /// Transition constants with oracle residuals.
    Constants,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BoundsSweep => "bounds-sweep",
            Command::KOpt => "k-opt",
            Command::SpectralEfficiency => "spectral-efficiency",
            Command::Psd => "psd",
            Command::TransitionCensus => "transition-census",
            Command::GaussCheck => "gauss-check",
            Command::Excursion => "excursion",
            Command::LpDistortion => "lp-distortion",
            Command::Deletions => "deletions",
            Command::Simulate => "simulate",
            Command::Constants => "constants",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Bits,
    Nats,
}

impl Units {
    /// Converts a value in nats.
    pub fn convert(&self, nats: f64) -> f64 {
        match self {
            Units::Bits => nats / std::f64::consts::LN_2,
            Units::Nats => nats,
        }
    }

    pub fn rate_label(&self) -> &'static str {
        match self {
            Units::Bits => "bit/s",
            Units::Nats => "nat/s",
        }
    }
}

/// Failure of a CLI run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    /// Wraps a library error with the operation and parameter context.
    pub fn at(context: impl fmt::Display, err: Error) -> Self {
        match err {
            Error::InvalidParameter { .. } | Error::Config(_) => CliError::Usage(format!("{context}: {err}")),
            _ => CliError::Numerical(format!("{context}: {err}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flat key/value settings with consumption tracking, so that unknown keys
/// are rejected.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Settings {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self { values: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(), used: BTreeSet::new() }
    }

    /// Loads a flat TOML table; arrays become comma-separated lists.
    pub fn load_toml(text: &str) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e| usage(format!("config: {e}")))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            values.insert(k.clone(), toml_scalar(&k, &v)?);
        }
        Ok(Self { values, used: BTreeSet::new() })
    }

    pub fn apply_override(&mut self, kv: &str) -> CliResult<()> {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        self.values.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    pub fn f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => parse_f64(key, &s),
        }
    }

    pub fn usize(&mut self, key: &str, default: usize) -> CliResult<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => {
                let v = parse_f64(key, &s)?;
                if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
                    return Err(usage(format!("`{key}` must be a non-negative integer, got `{s}`")));
                }
                Ok(v as usize)
            }
        }
    }

    pub fn bool(&mut self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key).as_deref() {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(s) => Err(usage(format!("`{key}` must be a boolean, got `{s}`"))),
        }
    }

    pub fn list(&mut self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        let v = match self.raw(key) {
            None => default.to_vec(),
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(key, t))
                .collect::<CliResult<Vec<f64>>>()?,
        };
        if v.is_empty() {
            return Err(usage(format!("`{key}` must not be empty")));
        }
        Ok(v)
    }

    /// `n` log-spaced points from `min` to `max`.
    pub fn log_range(&mut self, prefix: &str, min: f64, max: f64, n: usize) -> CliResult<Vec<f64>> {
        let lo = self.f64(&format!("{prefix}_min"), min)?;
        let hi = self.f64(&format!("{prefix}_max"), max)?;
        let n = self.usize(&format!("{prefix}_points"), n)?;
        if !(lo > 0.0 && hi >= lo && n >= 1) || (n == 1 && hi != lo) {
            return Err(usage(format!("invalid `{prefix}` range [{lo}, {hi}] with {n} points")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
    }

    /// Inclusive arithmetic range `min, min+step, ..., <= max`.
    pub fn step_range(&mut self, prefix: &str, min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
        let lo = self.f64(&format!("{prefix}_min"), min)?;
        let hi = self.f64(&format!("{prefix}_max"), max)?;
        let st = self.f64(&format!("{prefix}_step"), step)?;
        if !(hi >= lo && st > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(usage(format!("invalid `{prefix}` range [{lo}, {hi}] step {st}")));
        }
        let n = ((hi - lo) / st + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(usage(format!("`{prefix}` range has too many points ({n})")));
        }
        Ok((0..n).map(|i| lo + st * i as f64).collect())
    }

    /// Rejects any key that no step of the command consumed.
    pub fn finish(&self) -> CliResult<()> {
        let unknown: Vec<&String> = self.values.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!(
                "unknown setting(s) for this subcommand: {}",
                unknown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )))
        }
    }

    /// Base channel from `W`, `P_hat`, `rho_dB` or `rho`, and `k` or
    /// `lambda`.
    pub fn channel(&mut self) -> CliResult<ChannelConfig> {
        let mut cfg = ChannelConfig::from_k(1.0, 1.0, 10.0).map_err(|e| CliError::at("channel", e))?;
        for key in ["W", "w", "P_hat", "p_hat", "lambda", "rho", "rho_dB", "rho_db"] {
            if let Some(v) = self.raw(key) {
                cfg.set(key, &v).map_err(|e| CliError::at("channel", e))?;
            }
        }
        if let Some(v) = self.raw("k") {
            let k = parse_f64("k", &v)?;
            if !(k > 0.0 && k.is_finite()) {
                return Err(usage("`k` must be > 0"));
            }
            cfg.lambda = cfg.w / k;
        }
        cfg.validate().map_err(|e| CliError::at("channel", e))?;
        Ok(cfg)
    }
}

fn parse_f64(key: &str, s: &str) -> CliResult<f64> {
    let v: f64 = s.trim().parse().map_err(|_| usage(format!("`{key}` is not a number: `{s}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("`{key}` must be finite")))
    }
}

fn toml_scalar(key: &str, v: &toml::Value) -> CliResult<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(a) => {
            a.iter().map(|x| toml_scalar(key, x)).collect::<CliResult<Vec<_>>>()?.join(",")
        }
        _ => return Err(usage(format!("config key `{key}` must be a scalar or array"))),
    })
}

/// Fully resolved run request.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub settings: Settings,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub units: Units,
}

impl ExperimentSpec {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let mut settings = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                Settings::load_toml(&text)?
            }
            None => Settings::default(),
        };
        for kv in &cli.set {
            settings.apply_override(kv)?;
        }
        let mut seed = 1;
        if let Some(s) = settings.raw("seed") {
            seed = s.parse().map_err(|_| usage(format!("`seed` must be an integer, got `{s}`")))?;
        }
        if let Some(s) = cli.seed {
            seed = s;
        }
        settings.insert("seed", seed.to_string());
        Ok(Self { command: cli.command, settings, output_dir: cli.out.clone(), seed, units: cli.units })
    }

    /// SHA-256 over the subcommand and the sorted settings.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.name().as_bytes());
        for (k, v) in self.settings.entries() {
            h.update(b"\n");
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Single-owner writer for the files of one run.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let path = self.path(name);
        let io = |e: csv::Error| CliError::Numerical(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        for r in rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Numerical(format!("writing {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| CliError::Numerical(format!("writing {}: {e}", path.display())))
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    seed: u64,
    units: Units,
    config_hash: String,
    settings: &'a BTreeMap<String, String>,
    files: &'a [String],
}

/// Runs a resolved spec and writes its artifacts and manifest.
pub fn run(spec: &ExperimentSpec) -> CliResult<()> {
    let mut settings = spec.settings.clone();
    settings.raw("seed");
    let mut out = Artifacts::new(&spec.output_dir)?;
    commands::dispatch(spec, &mut settings, &mut out)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: spec.command.name(),
        seed: spec.seed,
        units: spec.units,
        config_hash: spec.config_hash(),
        settings: spec.settings.entries(),
        files: out.files(),
    };
    let body =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numerical(format!("manifest: {e}")))?;
    out.text("manifest.json", &(body + "\n"))
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = ExperimentSpec::from_cli(&cli).and_then(|spec| match cli.jobs {
        Some(0) => Err(usage("--jobs must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(format!("--jobs: {e}")))?
            .install(|| run(&spec)),
        None => run(&spec),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("zc-rate {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
