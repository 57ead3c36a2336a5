//! Experiment configuration: the on-disk document, command-line overrides and
//! the fully resolved form that is hashed and echoed into every summary.
//!
//! Every field of the document is optional. Unset fields take defaults that
//! depend on the subcommand, so a file only records what was chosen.

use std::path::{Path, PathBuf};

use flatchain::kernel::MollifierKernel;
use flatchain::oracle::RiemannScheme;
use flatchain::paths::Extension;
use flatchain::sheet::DEFAULT_RATIO;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenPath,
    SurfaceMass,
    ChainIntegrate,
    OracleCompare,
    Spectral,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::GenPath => "gen-path",
            Self::SurfaceMass => "surface-mass",
            Self::ChainIntegrate => "chain-integrate",
            Self::OracleCompare => "oracle-compare",
            Self::Spectral => "spectral",
            Self::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMode {
    Zk,
    Reconstruct,
    Sobolev,
    Algass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Fbm,
    Bm,
    Circle,
    Line,
    Constant,
    File,
}

impl Generator {
    fn analytic(self) -> bool {
        matches!(self, Self::Circle | Self::Line | Self::Constant)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<MollifierKernel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<Extension>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_lift: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SpectralMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<RiemannScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

/// The on-disk experiment document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub path: PathSpec,
    #[serde(default)]
    pub sheet: SheetSpec,
    #[serde(default)]
    pub forms: FormSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(file: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", file.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(mut self, over: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($section:ident . $field:ident),* $(,)?) => {
                $( if over.$section.$field.is_some() { self.$section.$field = over.$section.$field; } )*
            };
        }
        if over.command.is_some() {
            self.command = over.command;
        }
        if over.output_dir.is_some() {
            self.output_dir = over.output_dir;
        }
        take!(
            path.generator, path.hurst, path.dim, path.steps, path.horizon, path.seed, path.file,
            sheet.kernel, sheet.extension, sheet.gamma, sheet.alpha_min, sheet.ratio,
            forms.names, forms.graph_lift,
            spectral.mode, spectral.cutoff, spectral.resolution, spectral.scheme, spectral.sobolev_s,
            ensemble.replicas, ensemble.base_seed, ensemble.n_max,
        );
        self
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let command = self.command.ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
        let spectral_mode = match command {
            Command::Spectral => Some(self.spectral.mode.unwrap_or(SpectralMode::Zk)),
            _ => None,
        };
        let ensemble_mode = matches!(spectral_mode, Some(SpectralMode::Sobolev | SpectralMode::Algass));

        let p = &self.path;
        let generator = p.generator.unwrap_or(match command {
            Command::Scaling | Command::Spectral => Generator::Bm,
            _ => Generator::Fbm,
        });
        if command == Command::Scaling && generator != Generator::Bm {
            return Err(CliError::Usage("scaling runs on Brownian paths only".into()));
        }
        if generator == Generator::File && p.file.is_none() {
            return Err(CliError::Usage("generator `file` needs path.file".into()));
        }
        if ensemble_mode && generator == Generator::File {
            return Err(CliError::Usage("ensemble modes need a random generator".into()));
        }
        let hurst = match generator {
            Generator::Fbm => Some(p.hurst.unwrap_or(0.7)),
            Generator::Bm => Some(0.5),
            _ => None,
        };
        let steps = p.steps.unwrap_or(match (command, spectral_mode) {
            (Command::Scaling, _) => flatchain::scaling::DEFAULT_STEPS,
            (_, Some(SpectralMode::Algass)) => 1 << 13,
            _ => 1 << 12,
        });
        let horizon = p.horizon.unwrap_or(match (command, generator) {
            (Command::Scaling, _) => flatchain::scaling::DEFAULT_HORIZON,
            (_, Generator::Circle) => 2.0 * std::f64::consts::PI,
            _ => 1.0,
        });
        let needs_sheet = matches!(command, Command::SurfaceMass | Command::ChainIntegrate | Command::OracleCompare);
        let gamma = match (self.sheet.gamma, hurst) {
            (Some(g), _) => g,
            (None, Some(h)) => h - 0.05,
            (None, None) if generator.analytic() || !needs_sheet => 1.0,
            (None, None) => return Err(CliError::Usage("a path read from file needs sheet.gamma".into())),
        };
        let graph_lift = self.forms.graph_lift.unwrap_or(false);
        let default_forms: &[&str] = match (command, spectral_mode) {
            (_, Some(SpectralMode::Reconstruct)) => &["gaussian"],
            _ if graph_lift => &["subgraph"],
            _ => &["rotation"],
        };
        let forms = self
            .forms
            .names
            .clone()
            .unwrap_or_else(|| default_forms.iter().map(|s| s.to_string()).collect());
        let (cutoff, resolution) = match spectral_mode {
            Some(SpectralMode::Algass) => (16.0, 33),
            _ => (12.0, 49),
        };
        let replicas = self.ensemble.replicas.unwrap_or(match (command, spectral_mode) {
            (Command::Scaling, _) => 200,
            (_, Some(SpectralMode::Algass)) => 400,
            _ => 100,
        });
        let resolved = Resolved {
            command,
            spectral_mode: spectral_mode.filter(|_| command == Command::Spectral),
            generator,
            hurst,
            dim: p.dim.unwrap_or(2),
            steps,
            horizon,
            seed: p.seed.unwrap_or(0),
            file: p.file.clone(),
            kernel: self.sheet.kernel.unwrap_or(MollifierKernel::Epanechnikov),
            extension: self.sheet.extension.unwrap_or(Extension::Reflect),
            gamma,
            alpha_min: self.sheet.alpha_min,
            ratio: self.sheet.ratio.unwrap_or(DEFAULT_RATIO),
            forms,
            graph_lift,
            cutoff: self.spectral.cutoff.unwrap_or(cutoff),
            resolution: self.spectral.resolution.unwrap_or(resolution),
            scheme: self.spectral.scheme.unwrap_or(RiemannScheme::Midpoint),
            sobolev_s: self.spectral.sobolev_s.unwrap_or(1.0),
            replicas,
            base_seed: self.ensemble.base_seed.unwrap_or(0),
            n_max: self.ensemble.n_max.unwrap_or(flatchain::scaling::DEFAULT_N_MAX),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

/// Every parameter of a run with defaults applied. This is what gets hashed,
/// so two documents that mean the same run produce the same file names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_mode: Option<SpectralMode>,
    pub generator: Generator,
    pub hurst: Option<f64>,
    pub dim: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub kernel: MollifierKernel,
    pub extension: Extension,
    pub gamma: f64,
    /// `None` means four path steps.
    pub alpha_min: Option<f64>,
    pub ratio: f64,
    pub forms: Vec<String>,
    pub graph_lift: bool,
    pub cutoff: f64,
    pub resolution: usize,
    pub scheme: RiemannScheme,
    pub sobolev_s: f64,
    pub replicas: usize,
    pub base_seed: u64,
    pub n_max: usize,
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.dim == 0 {
            return bad("path dimension must be positive".into());
        }
        if self.steps == 0 {
            return bad("path needs at least one step".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        if self.ratio.is_nan() || self.ratio <= 1.0 {
            return bad(format!("grid ratio {} must exceed 1", self.ratio));
        }
        if self.forms.is_empty() {
            return bad("no forms selected".into());
        }
        if self.resolution < 3 || self.resolution.is_multiple_of(2) {
            return bad(format!("wave-grid resolution {} must be odd and at least 3", self.resolution));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Output file stem, e.g. `chain-integrate-3f9a…`.
    pub fn stem(&self) -> String {
        match self.spectral_mode {
            Some(mode) => format!("{}-{}-{}", self.command.name(), mode_name(mode), self.hash()),
            None => format!("{}-{}", self.command.name(), self.hash()),
        }
    }
}

pub fn mode_name(mode: SpectralMode) -> &'static str {
    match mode {
        SpectralMode::Zk => "zk",
        SpectralMode::Reconstruct => "reconstruct",
        SpectralMode::Sobolev => "sobolev",
        SpectralMode::Algass => "algass",
    }
}
