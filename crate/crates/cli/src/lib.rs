//! Command-line front end: loads a run config, evaluates one sweep and
//! writes CSV (and optionally SVG) files.

mod commands;
mod plot;

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use qcoupler::config::RunConfig;
use qcoupler::{Error, ErrorKind, Result};

pub use commands::Artifact;

/// Environment variable naming the directory searched for configs.
pub const CONFIG_DIR_ENV: &str = "QCOUPLER_CONFIG_DIR";
/// Config file looked up in the config directory when `--config` is absent.
pub const DEFAULT_CONFIG_NAME: &str = "qcoupler.json";

/// Configs shipped with the tool, addressable by file name.
pub const BUNDLED: [(&str, &str); 2] = [
    (
        "table1_semiclassical.json",
        include_str!("../configs/table1_semiclassical.json"),
    ),
    (
        "table1_full.json",
        include_str!("../configs/table1_full.json"),
    ),
];

#[derive(Debug, Parser)]
#[command(name = "qcoupler", version, about = "Flux-qubit coupler simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run config (JSON). Relative paths are also tried under the config
    /// directory, then against the bundled configs.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps [default: available parallelism].
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<NonZeroUsize>,

    /// Also render SVG plots next to the CSV files.
    #[arg(long, global = true)]
    pub svg: bool,

    /// Directory searched for configs.
    #[arg(long, global = true, env = CONFIG_DIR_ENV, value_name = "DIR")]
    pub config_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Coupler ground energy, current and effective inductance vs. bias.
    CouplerResponse,
    /// Coupling strength from the semi-classical formula and from the
    /// composite avoided crossing.
    CouplingSweep,
    /// Qubit B gap, sensitivity, T1 and T2 vs. coupler bias.
    Coherence,
    /// Flux-noise amplitude consistent with measured rates, per exponent.
    NoiseFit {
        /// Rate table (CSV); overrides `sweep.rates`.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Dephasing factors eta0 and eta1 vs. noise exponent.
    EtaTable,
    /// Lowest composite transitions along one flux axis.
    Spectrum,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CouplerResponse => "coupler-response",
            Command::CouplingSweep => "coupling-sweep",
            Command::Coherence => "coherence",
            Command::NoiseFit { .. } => "noise-fit",
            Command::EtaTable => "eta-table",
            Command::Spectrum => "spectrum",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Data => 4,
    }
}

/// A resolved config and the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn from_text(text: &str, base: &Path) -> Result<LoadedConfig> {
    let config = RunConfig::from_json_str(text)?.resolve(base)?;
    config.validate()?;
    Ok(LoadedConfig {
        config,
        base: base.to_path_buf(),
    })
}

/// Finds and parses the run config.
///
/// With `--config`, the path is tried as given, then under `config_dir`,
/// then as the name of a bundled config. Without it, `config_dir` is searched
/// for [`DEFAULT_CONFIG_NAME`] and the semi-classical bundled config is the
/// fallback.
pub fn load_config(config: Option<&Path>, config_dir: Option<&Path>) -> Result<LoadedConfig> {
    let candidates: Vec<PathBuf> = match config {
        Some(p) => {
            let mut c = vec![p.to_path_buf()];
            if let (Some(dir), true) = (config_dir, p.is_relative()) {
                c.push(dir.join(p));
            }
            c
        }
        None => config_dir
            .map(|d| vec![d.join(DEFAULT_CONFIG_NAME)])
            .unwrap_or_default(),
    };
    for path in &candidates {
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
            return from_text(&text, &base);
        }
    }
    let name = match config {
        Some(p) => p.to_string_lossy().into_owned(),
        None => BUNDLED[0].0.to_string(),
    };
    match bundled(&name) {
        Some(text) => from_text(text, Path::new(".")),
        None => Err(Error::Config(format!("config `{name}` not found"))),
    }
}

fn init_threads(threads: Option<NonZeroUsize>) {
    qcoupler::sequential_linear_algebra();
    if let Some(n) = threads {
        // A pool already exists when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build_global();
    }
}

/// Runs one command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    init_threads(cli.threads);
    let loaded = load_config(cli.config.as_deref(), cli.config_dir.as_deref())?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&loaded.config.output.dir));
    let svg = cli.svg || loaded.config.output.svg;

    let artifacts = commands::execute(&cli.command, &loaded)?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let digest = loaded.config.digest();
    let mut written = Vec::new();
    for a in &artifacts {
        written.extend(a.write(&out_dir, cli.command.name(), &digest, svg)?);
    }
    Ok(written)
}
