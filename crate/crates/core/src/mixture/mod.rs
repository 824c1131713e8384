//! The mixture prior `g = Σ π_j g_j`, its penalized EM fit, and BIC.

mod beta_fit;
mod bic;
mod em;
mod init;

pub use bic::{bic, bic_scan, free_parameters, loglik, BicScan};
pub use em::{e_step, em_fit, fit_dataset, m_step, Responsibilities};
pub use init::initialize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{self, ComponentPrior, FamilyKind, Observation};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMode {
    /// Component 0 is pinned to the point mass at zero.
    Theoretical,
    /// Component 0 is free but carries the proportion penalty.
    Empirical,
    /// No component is designated null.
    None,
}

impl std::fmt::Display for NullMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NullMode::Theoretical => "theoretical",
            NullMode::Empirical => "empirical",
            NullMode::None => "none",
        })
    }
}

impl std::str::FromStr for NullMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(NullMode::Theoretical),
            "empirical" => Ok(NullMode::Empirical),
            "none" => Ok(NullMode::None),
            other => Err(Error::contract(format!("unknown null mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Number of mixture components `J`.
    pub components: usize,
    /// Null pseudo-count `P`; the penalty vector is `(P, 0, …, 0)`.
    /// `None` means `N / 5`.
    pub penalty: Option<f64>,
    pub null_mode: NullMode,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Total number of EM runs; run 0 starts from the unjittered initialization.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            components: 3,
            penalty: None,
            null_mode: NullMode::Theoretical,
            max_iters: 1000,
            rel_tol: 1e-8,
            restarts: 3,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_components(mut self, j: usize) -> Self {
        self.components = j;
        self
    }

    pub fn with_penalty(mut self, p: f64) -> Self {
        self.penalty = Some(p);
        self
    }

    pub fn with_null_mode(mut self, mode: NullMode) -> Self {
        self.null_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self, family: FamilyKind) -> Result<()> {
        if self.components == 0 {
            return Err(Error::contract("J must be at least 1"));
        }
        if self.null_mode != NullMode::None && self.components < 2 {
            return Err(Error::contract("J must be at least 2 when a null component is designated"));
        }
        if self.max_iters == 0 {
            return Err(Error::contract("max_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::contract("rel_tol must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::contract("at least one EM run is required"));
        }
        if let Some(p) = self.penalty {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::contract(format!("penalty {p} must be a nonnegative number")));
            }
        }
        if family == FamilyKind::Binomial && self.null_mode != NullMode::None {
            return Err(Error::contract(
                "binomial mixtures have no point-mass null; use null mode `none`",
            ));
        }
        Ok(())
    }

    /// The Dirichlet pseudo-count vector `β = (P, 0, …, 0)` for `n` cases.
    pub fn penalty_vector(&self, n: usize) -> Vec<f64> {
        let mut beta = vec![0.0; self.components];
        beta[0] = self.penalty.unwrap_or(n as f64 / 5.0);
        beta
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub penalized_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest drop of the penalized log-likelihood between consecutive
    /// iterations (zero for a monotone run).
    pub max_decrease: f64,
}

/// A fitted (or hand-specified) mixture prior.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub family: FamilyKind,
    pub weights: Vec<f64>,
    pub components: Vec<ComponentPrior>,
    pub null_mode: NullMode,
    pub penalty: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

impl MixtureModel {
    /// Build and validate a model from proportions and components.
    pub fn new(weights: Vec<f64>, components: Vec<ComponentPrior>, null_mode: NullMode) -> Result<Self> {
        let family = components
            .first()
            .ok_or_else(|| Error::contract("a mixture needs at least one component"))?
            .family();
        let j = components.len();
        let model = Self {
            family,
            weights,
            components,
            null_mode,
            penalty: vec![0.0; j],
            diagnostics: FitDiagnostics::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.components.len() || self.penalty.len() != self.components.len() {
            return Err(Error::contract("weights, components and penalty must have equal length"));
        }
        if self.components.iter().any(|c| c.family() != self.family) {
            return Err(Error::contract("mixed families in one model"));
        }
        if self.weights.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::contract("proportions must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!("proportions sum to {total}, not 1")));
        }
        for c in &self.components {
            match *c {
                ComponentPrior::Normal { mean, var } => {
                    ComponentPrior::normal(mean, var)?;
                }
                ComponentPrior::Beta { alpha, beta } => {
                    ComponentPrior::beta(alpha, beta)?;
                }
            }
        }
        if self.null_mode == NullMode::Theoretical && self.components[0] != ComponentPrior::POINT_NULL {
            return Err(Error::contract("theoretical null requires component 0 = point mass at 0"));
        }
        if self.null_mode != NullMode::None && self.len() < 2 && self.family == FamilyKind::Binomial {
            return Err(Error::contract("binomial mixtures have no null component"));
        }
        Ok(())
    }

    /// `log π_j + log f^(j)(obs)` for every component.
    pub fn log_joint(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(&p, c)| Ok(p.ln() + families::component_marginal(obs, c)?))
            .collect()
    }

    /// `log f(obs)` under the full mixture.
    pub fn log_marginal(&self, obs: &Observation) -> Result<f64> {
        Ok(special::log_sum_exp(&self.log_joint(obs)?))
    }

    /// Prior mean of δ, `Σ π_j E_j(δ)`.
    pub fn prior_mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(p, c)| p * c.prior_mean())
            .sum()
    }
}

/// Cases in column form, validated to a single family.
#[derive(Debug, Clone)]
pub enum Dataset {
    Normal {
        z: Vec<f64>,
        s2: Vec<f64>,
        /// Set when every case has the same variance.
        common_s2: Option<f64>,
    },
    Binomial {
        h: Vec<u64>,
        n: Vec<u64>,
        ln_choose: Vec<f64>,
    },
}

impl Dataset {
    pub fn new(obs: &[Observation]) -> Result<Self> {
        let first = obs.first().ok_or_else(|| Error::contract("data must be nonempty"))?;
        match first.family() {
            FamilyKind::Normal => {
                let mut z = Vec::with_capacity(obs.len());
                let mut s2 = Vec::with_capacity(obs.len());
                for o in obs {
                    match *o {
                        Observation::Normal { z: zi, s2: si } => {
                            Observation::normal_with_variance(zi, si)?;
                            z.push(zi);
                            s2.push(si);
                        }
                        _ => return Err(Error::contract("mixed families in data")),
                    }
                }
                Ok(Self::normal_columns(z, s2))
            }
            FamilyKind::Binomial => {
                let mut h = Vec::with_capacity(obs.len());
                let mut n = Vec::with_capacity(obs.len());
                for o in obs {
                    match *o {
                        Observation::Binomial { h: hi, n: ni } => {
                            Observation::binomial(hi, ni)?;
                            h.push(hi);
                            n.push(ni);
                        }
                        _ => return Err(Error::contract("mixed families in data")),
                    }
                }
                let ln_choose = h.iter().zip(&n).map(|(&hi, &ni)| special::ln_choose(ni, hi)).collect();
                Ok(Dataset::Binomial { h, n, ln_choose })
            }
        }
    }

    /// Unit-variance normal data.
    pub fn from_z(z: &[f64]) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::contract("data must be nonempty"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("statistics must be finite"));
        }
        Ok(Self::normal_columns(z.to_vec(), vec![1.0; z.len()]))
    }

    fn normal_columns(z: Vec<f64>, s2: Vec<f64>) -> Self {
        let common_s2 = s2
            .first()
            .copied()
            .filter(|&first| s2.iter().all(|&v| v == first));
        Dataset::Normal { z, s2, common_s2 }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Normal { z, .. } => z.len(),
            Dataset::Binomial { h, .. } => h.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family(&self) -> FamilyKind {
        match self {
            Dataset::Normal { .. } => FamilyKind::Normal,
            Dataset::Binomial { .. } => FamilyKind::Binomial,
        }
    }

    pub fn observation(&self, i: usize) -> Observation {
        match self {
            Dataset::Normal { z, s2, .. } => Observation::Normal { z: z[i], s2: s2[i] },
            Dataset::Binomial { h, n, .. } => Observation::Binomial { h: h[i], n: n[i] },
        }
    }

    pub fn observations(&self) -> Vec<Observation> {
        (0..self.len()).map(|i| self.observation(i)).collect()
    }
}
