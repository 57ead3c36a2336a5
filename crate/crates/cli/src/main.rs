//! `flatchain`: run one experiment, write its CSVs and a JSON summary, and
//! exit 0 when every check of the run passed, 1 when one failed and 2 on a
//! usage error.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use flatchain::kernel::MollifierKernel;
use flatchain::oracle::RiemannScheme;
use flatchain::paths::Extension;

use config::{Command, ExperimentConfig, Generator, SpectralMode};
use error::CliError;

#[derive(Parser)]
#[command(name = "flatchain", version, about = "Pathwise line integrals along rough paths")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample a path and write it as CSV with a JSON sidecar.
    GenPath(Common),
    /// Surface mass of the mollified sheet against its predicted bound.
    SurfaceMass(Common),
    /// Line integrals through the flat-chain construction.
    ChainIntegrate {
        /// Lift the path to its graph t -> (t, X_t) and integrate a time-dependent form.
        #[arg(long)]
        graph_lift: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Riemann, Lyons-Zheng, Young and chain values side by side.
    OracleCompare(Common),
    /// Fourier coefficients of the path current.
    Spectral {
        #[arg(value_enum)]
        mode: SpectralMode,
        #[command(flatten)]
        common: Common,
    },
    /// Strip masses of the Brownian sheet over dyadic scales.
    Scaling(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Experiment document (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, value_enum)]
    generator: Option<Generator>,
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Number of path steps N.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Path CSV for `--generator file`.
    #[arg(long)]
    path_file: Option<PathBuf>,

    #[arg(long)]
    kernel: Option<MollifierKernel>,
    #[arg(long)]
    extension: Option<Extension>,
    /// Declared Hölder exponent of the path.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha_min: Option<f64>,
    /// Ratio between neighbouring smoothing scales.
    #[arg(long)]
    ratio: Option<f64>,

    /// Form name; repeat for several.
    #[arg(long = "form")]
    forms: Vec<String>,

    /// Wave-vector cutoff K.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Wave-grid points per axis M (odd).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    scheme: Option<RiemannScheme>,
    #[arg(long)]
    sobolev_s: Option<f64>,

    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long = "nmax")]
    n_max: Option<usize>,
}

impl Common {
    fn overrides(&self, command: Command) -> ExperimentConfig {
        let mut c = ExperimentConfig { command: Some(command), output_dir: self.output_dir.clone(), ..Default::default() };
        c.path.generator = self.generator.or(self.path_file.as_ref().map(|_| Generator::File));
        c.path.hurst = self.hurst;
        c.path.dim = self.dim;
        c.path.steps = self.steps;
        c.path.horizon = self.horizon;
        c.path.seed = self.seed;
        c.path.file = self.path_file.clone();
        c.sheet.kernel = self.kernel;
        c.sheet.extension = self.extension;
        c.sheet.gamma = self.gamma;
        c.sheet.alpha_min = self.alpha_min;
        c.sheet.ratio = self.ratio;
        c.forms.names = (!self.forms.is_empty()).then(|| self.forms.clone());
        c.spectral.cutoff = self.cutoff;
        c.spectral.resolution = self.resolution;
        c.spectral.scheme = self.scheme;
        c.spectral.sobolev_s = self.sobolev_s;
        c.ensemble.replicas = self.replicas;
        c.ensemble.base_seed = self.base_seed;
        c.ensemble.n_max = self.n_max;
        c
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("flatchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (common, over) = match &cli.command {
        Sub::GenPath(c) => (c, c.overrides(Command::GenPath)),
        Sub::SurfaceMass(c) => (c, c.overrides(Command::SurfaceMass)),
        Sub::ChainIntegrate { graph_lift, common } => {
            let mut o = common.overrides(Command::ChainIntegrate);
            o.forms.graph_lift = graph_lift.then_some(true);
            (common, o)
        }
        Sub::OracleCompare(c) => (c, c.overrides(Command::OracleCompare)),
        Sub::Spectral { mode, common } => {
            let mut o = common.overrides(Command::Spectral);
            o.spectral.mode = Some(*mode);
            (common, o)
        }
        Sub::Scaling(c) => (c, c.overrides(Command::Scaling)),
    };

    let threads = common.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let base = match &common.config {
        Some(file) => ExperimentConfig::load(file)?,
        None => ExperimentConfig::default(),
    };
    if let (Some(a), Some(b)) = (base.command, over.command) {
        if a != b {
            return Err(CliError::Usage(format!("config is for `{}`, not `{}`", a.name(), b.name())));
        }
    }
    let doc = base.overlay(over);
    let resolved = doc.resolve()?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let outcome = run::run(&resolved)?;
    let run_info = output::RunInfo {
        started_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads,
        version: env!("CARGO_PKG_VERSION"),
    };
    let out_dir = doc.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let summary = output::write(&out_dir, &doc, &resolved, &outcome, &run_info)?;

    let passed = outcome.checks.iter().all(|c| c.passed);
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    println!("{}", summary.display());
    Ok(passed)
}
