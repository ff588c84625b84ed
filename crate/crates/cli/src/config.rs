//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spdelab::basis::{min_grid_size, SpectralBasis};
use spdelab::integrate::StepperConfig;
use spdelab::model::PolyModel;
use spdelab::noise::{NoiseFamily, NoiseSpec};
use spdelab::Field;

use crate::error::CliError;

pub const KNOWN_CHECKS: [&str; 3] = ["energy", "dissipativity", "regularity"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub basis: BasisSection,
    pub noise: NoiseSection,
    pub model: ModelSection,
    pub stepper: StepperConfig,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub kolmogorov: KolmogorovSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    #[serde(rename = "L")]
    pub length: f64,
    pub a0: f64,
    #[serde(rename = "N")]
    pub modes: usize,
    /// Defaults to the smallest dealiased grid.
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub family: NoiseFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `f(u) = Σ f[k] u|u|^k`
    pub f: Vec<f64>,
    /// `σ(u) = σ[0] + Σ_{k≥1} σ[k] u|u|^{k−1}`
    pub sigma: Vec<f64>,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_n: Option<f64>,
    /// Also check the one-sided Lipschitz condition (grid verified only).
    #[serde(default)]
    pub h3: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h3_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub paths: usize,
    pub master_seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            paths: 1,
            master_seed: 0,
        }
    }
}

/// Initial state by its leading sine coefficients; the rest are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub coeffs: Vec<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { coeffs: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default)]
    pub names: Vec<String>,
    /// Energy exponents; default `{q, qr}`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_max: Option<f64>,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            names: vec!["energy".into(), "dissipativity".into()],
            rho: Vec::new(),
            kappa_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    /// Iteration horizon; defaults to the analytic budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub xi_prime: f64,
    pub c_emb: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            horizon: None,
            tol: 1e-12,
            max_iter: 200,
            alpha: 0.2,
            gamma: 0.2,
            xi_prime: 2.0,
            c_emb: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KolmogorovSource {
    /// Scalar Brownian motion, `E|B_t − B_s|^4 = 3|t − s|^2`.
    Brownian,
    /// Grid values of simulated paths at the record times.
    Simulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KolmogorovSection {
    pub source: KolmogorovSource,
    pub depth: u32,
    pub paths: usize,
    pub q: f64,
    pub xi: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub eta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl Default for KolmogorovSection {
    fn default() -> Self {
        Self {
            source: KolmogorovSource::Brownian,
            depth: 10,
            paths: 1000,
            q: 4.0,
            xi: 2.0,
            c: 3.0,
            eta: 0.125,
            horizon: 1.0,
        }
    }
}

/// Everything a command needs, built and validated from the config.
pub struct Setup {
    pub basis: SpectralBasis,
    pub noise: NoiseSpec,
    pub model: PolyModel,
    pub u0: Field,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.model.q > 6.0) {
            return bad(format!("model.q = {} must exceed 6", self.model.q));
        }
        if self.basis.modes == 0 {
            return bad("basis.N must be positive".into());
        }
        if let Some(g) = self.basis.grid {
            if g < min_grid_size(self.basis.modes) {
                return bad(format!(
                    "basis.G = {g} aliases; need at least {}",
                    min_grid_size(self.basis.modes)
                ));
            }
        }
        if let Some(name) = self.checks.names.iter().find(|n| !KNOWN_CHECKS.contains(&n.as_str())) {
            return bad(format!("unknown check {name:?}; known: {KNOWN_CHECKS:?}"));
        }
        if self.ensemble.paths == 0 {
            return bad("ensemble.paths must be positive".into());
        }
        if self.initial.coeffs.len() > self.basis.modes {
            return bad("initial.coeffs has more entries than basis.N".into());
        }
        self.stepper.validate().map_err(|e| CliError::Config(format!("stepper: {e}")))?;
        Ok(())
    }

    pub fn growth_exponent(&self) -> usize {
        self.model.r.unwrap_or_else(|| {
            let beta = self.model.f.len();
            let gamma = self.model.sigma.len().saturating_sub(1);
            beta.max(gamma).max(1)
        })
    }

    pub fn energy_rhos(&self) -> Vec<f64> {
        if self.checks.rho.is_empty() {
            let q = self.model.q;
            let qr = q * self.growth_exponent() as f64;
            if qr == q {
                vec![q]
            } else {
                vec![q, qr]
            }
        } else {
            self.checks.rho.clone()
        }
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let grid = self.basis.grid.unwrap_or_else(|| min_grid_size(self.basis.modes));
        let basis = SpectralBasis::new(self.basis.length, self.basis.a0, self.basis.modes, grid)?;
        let mut noise = NoiseSpec::new(self.noise.family.clone(), &basis)?;
        if let Some(m) = self.noise.truncation_m {
            noise = noise.truncate(&basis, m)?;
        }
        let mut model = PolyModel::new(self.model.f.clone(), self.model.sigma.clone())?
            .with_growth_exponent(self.growth_exponent())?;
        if let Some(n) = self.model.cutoff_n {
            model = model.with_cutoff(n)?;
        }
        let mut c = self.initial.coeffs.clone();
        c.resize(self.basis.modes, 0.0);
        let u0 = basis.field_from_coeffs(c)?;
        Ok(Setup {
            basis,
            noise,
            model,
            u0,
        })
    }
}
