//! Experiment configuration: a single JSON document.
//!
//! Infinite parameters (θ, β) are written as `null`.

use std::path::Path;

use anderson_lab::asymptotics::{Regime, RegimeTag};
use anderson_lab::field::ShapeFunction;
use anderson_lab::fk::AnnealedMode;
use anderson_lab::levy::LevyModel;
use anderson_lab::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Stable {
        dim: usize,
        alpha: f64,
    },
    Tempered {
        dim: usize,
        alpha: f64,
        /// `null` for θ = ∞.
        theta: Option<f64>,
        #[serde(default = "one")]
        c: f64,
        /// Small-jump cutoff ε of the sampler.
        #[serde(default)]
        cutoff: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub k: f64,
    /// `null` for compactly supported φ (β = ∞).
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBudget {
    pub n_paths: usize,
    pub n_fields: usize,
    pub dt: f64,
    /// Half-width of sampled fields (quenched runs, two-level annealed runs).
    pub field_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralBudget {
    /// Coarsest spacing of the h, h/2, h/4 ladders.
    pub h0: f64,
    pub radii: Vec<f64>,
    pub ids_half_width: f64,
    pub ids_h: f64,
    pub ids_n_fields: usize,
    pub lambda_grid: Vec<f64>,
    /// Times at which to run the local-eigenvalue grid search (may be empty).
    #[serde(default)]
    pub search_t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBudget {
    pub radius: f64,
    pub inner_radius: f64,
    pub n_configs: usize,
    pub n_paths: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_a")]
    pub a: f64,
}

fn default_delta() -> f64 {
    0.1
}

fn default_a() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub shape: ShapeSpec,
    pub rho: f64,
    /// Derived from (α, β) when absent; an explicit tag must agree.
    #[serde(default)]
    pub regime: Option<RegimeTag>,
    pub t_ladder: Vec<f64>,
    pub mc: McBudget,
    pub spectral: SpectralBudget,
    pub bounds: BoundsBudget,
    pub annealed_mode: AnnealedMode,
    pub seed: u64,
    /// Wall-clock budget per subcommand; exceeded runs stop early and are
    /// flagged partial.
    #[serde(default)]
    pub budget_seconds: Option<f64>,
}

fn field_err<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config { path: path.into(), message: message.into() })
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        field_err(path, format!("must be positive and finite, got {x}"))
    }
}

fn increasing(path: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return field_err(path, "must not be empty");
    }
    for (i, x) in xs.iter().enumerate() {
        positive(&format!("{path}[{i}]"), *x)?;
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return field_err(&format!("{path}[{}]", i + 1), "must be strictly increasing");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config {
            path: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.shape()?;
        positive("rho", self.rho)?;
        self.regime()?;
        increasing("t_ladder", &self.t_ladder)?;
        if self.mc.n_paths == 0 {
            return field_err("mc.n_paths", "must be positive");
        }
        if self.mc.n_fields == 0 {
            return field_err("mc.n_fields", "must be positive");
        }
        positive("mc.dt", self.mc.dt)?;
        positive("mc.field_half_width", self.mc.field_half_width)?;
        positive("spectral.h0", self.spectral.h0)?;
        increasing("spectral.radii", &self.spectral.radii)?;
        positive("spectral.ids_half_width", self.spectral.ids_half_width)?;
        positive("spectral.ids_h", self.spectral.ids_h)?;
        if self.spectral.ids_n_fields == 0 {
            return field_err("spectral.ids_n_fields", "must be positive");
        }
        increasing("spectral.lambda_grid", &self.spectral.lambda_grid)?;
        if !self.spectral.search_t.is_empty() {
            increasing("spectral.search_t", &self.spectral.search_t)?;
        }
        positive("bounds.radius", self.bounds.radius)?;
        positive("bounds.inner_radius", self.bounds.inner_radius)?;
        if self.bounds.inner_radius > self.bounds.radius {
            return field_err("bounds.inner_radius", "must not exceed bounds.radius");
        }
        if self.bounds.n_configs == 0 || self.bounds.n_paths == 0 {
            return field_err("bounds", "n_configs and n_paths must be positive");
        }
        positive("bounds.delta", self.bounds.delta)?;
        if !(self.bounds.a > 1.0) {
            return field_err("bounds.a", "must exceed 1");
        }
        if let Some(b) = self.budget_seconds {
            positive("budget_seconds", b)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.model {
            ModelSpec::Stable { dim, .. } | ModelSpec::Tempered { dim, .. } => dim,
        }
    }

    pub fn model(&self) -> Result<LevyModel> {
        let m = match self.model {
            ModelSpec::Stable { dim, alpha } => LevyModel::stable(dim, alpha),
            ModelSpec::Tempered { dim, alpha, theta, c, cutoff } => {
                LevyModel::tempered(dim, alpha, theta.unwrap_or(f64::INFINITY), c).map(|m| match cutoff {
                    Some(eps) => m.with_cutoff(eps),
                    None => m,
                })
            }
        };
        m.and_then(|m| m.validate().map(|()| m)).or_else(|e| field_err("model", e.to_string()))
    }

    pub fn beta(&self) -> f64 {
        self.shape.beta.unwrap_or(f64::INFINITY)
    }

    pub fn shape(&self) -> Result<ShapeFunction> {
        ShapeFunction::new(self.shape.k, self.beta(), self.dim()).or_else(|e| field_err("shape", e.to_string()))
    }

    pub fn regime(&self) -> Result<Regime> {
        let r = Regime::from_model(&self.model()?, self.beta(), self.rho, self.shape.k)
            .or_else(|e| field_err("regime", e.to_string()))?;
        match self.regime {
            Some(tag) => r.with_tag(tag).or_else(|e| field_err("regime", e.to_string())),
            None => Ok(r),
        }
    }

    /// sha256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
