//! Posterior summaries from a fitted mixture: component membership, effect
//! size moments, local and tail-area false discovery rates, rejection
//! thresholds and Tweedie-formula estimators.

mod curves;
mod spline;
mod tweedie;

pub use curves::{fdr_curve, rejection_threshold, tail_fdr_curve, CurveKind};
pub use spline::NaturalCubicSpline;
pub use tweedie::{
    tweedie_continuous, tweedie_discrete, tweedie_normal_mixture, IntegerTable, LogDensity,
    MixtureLogDensity, NullLogDensity, TweedieMoments,
};

use crate::error::{Error, Result};
use crate::families::{self, ComponentPrior, FamilyKind, Observation};
use crate::mixture::{MixtureModel, NullMode};
use crate::special::{log_add_exp, log_norm_cdf, log_norm_sf, log_sum_exp};

pub const DEFAULT_MEAN_TOL: f64 = 0.25;
pub const DEFAULT_VAR_TOL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupingRule {
    ExplicitOnly,
    NearlyNull { mean_tol: f64, var_tol: f64 },
    Custom,
}

/// Which components count as null when computing fdr and FDR.
#[derive(Debug, Clone, PartialEq)]
pub struct NullGrouping {
    pub null_set: Vec<usize>,
    pub rule: GroupingRule,
}

impl NullGrouping {
    /// Only the designated null component (none for `NullMode::None`).
    pub fn explicit(model: &MixtureModel) -> Self {
        let null_set = if model.null_mode == NullMode::None { vec![] } else { vec![0] };
        Self {
            null_set,
            rule: GroupingRule::ExplicitOnly,
        }
    }

    pub fn custom(mut null_set: Vec<usize>) -> Self {
        null_set.sort_unstable();
        null_set.dedup();
        Self {
            null_set,
            rule: GroupingRule::Custom,
        }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.null_set.binary_search(&j).is_ok()
    }

    fn check(&self, model: &MixtureModel) -> Result<()> {
        if let Some(&j) = self.null_set.iter().find(|&&j| j >= model.len()) {
            return Err(Error::contract(format!("null component {j} out of range")));
        }
        Ok(())
    }
}

/// Components within `mean_tol` of the null mean and at most `var_tol` more
/// dispersed than it are merged into the null.
pub fn nearly_null_grouping(model: &MixtureModel, mean_tol: f64, var_tol: f64) -> Result<NullGrouping> {
    if model.family != FamilyKind::Normal {
        return Err(Error::Unsupported("nearly-null grouping is defined for normal mixtures".into()));
    }
    let rule = GroupingRule::NearlyNull { mean_tol, var_tol };
    if model.null_mode == NullMode::None {
        return Ok(NullGrouping { null_set: vec![], rule });
    }
    let (m0, v0) = (model.components[0].prior_mean(), model.components[0].prior_var());
    let null_set = model
        .components
        .iter()
        .enumerate()
        .filter(|(j, c)| *j == 0 || ((c.prior_mean() - m0).abs() <= mean_tol && c.prior_var() <= v0 + var_tol))
        .map(|(j, _)| j)
        .collect();
    Ok(NullGrouping { null_set, rule })
}

/// Per-case posterior output.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// `p_j(z)`, the posterior probability of each component.
    pub weights: Vec<f64>,
    pub effect_mean: f64,
    pub effect_var: f64,
    /// Local false discovery rate; absent when no component is null.
    pub fdr: Option<f64>,
    /// Tail-area false discovery rate; normal family only.
    pub tail_fdr: Option<f64>,
}

pub fn posterior_weights(obs: &Observation, model: &MixtureModel) -> Result<Vec<f64>> {
    let joint = model.log_joint(obs)?;
    let total = log_sum_exp(&joint);
    if !total.is_finite() {
        return Err(Error::NumericDomain(format!("marginal density of {obs:?} is zero")));
    }
    Ok(joint.iter().map(|l| (l - total).exp()).collect())
}

fn moments_from_weights(obs: &Observation, model: &MixtureModel, weights: &[f64]) -> Result<(f64, f64)> {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (p, c) in weights.iter().zip(&model.components) {
        let post = families::component_posterior(obs, c)?;
        mean += p * post.mean;
        second += p * (post.var + post.mean * post.mean);
    }
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Posterior mean and variance of the effect, without fdr quantities.
pub fn posterior_moments(obs: &Observation, model: &MixtureModel) -> Result<(f64, f64)> {
    if obs.family() != model.family {
        return Err(Error::contract(format!("{} observation against a {} model", obs.family(), model.family)));
    }
    let weights = posterior_weights(obs, model)?;
    moments_from_weights(obs, model, &weights)
}

pub fn posterior_summary(obs: &Observation, model: &MixtureModel, grouping: &NullGrouping) -> Result<PosteriorSummary> {
    if obs.family() != model.family {
        return Err(Error::contract(format!(
            "{} observation against a {} model",
            obs.family(),
            model.family
        )));
    }
    grouping.check(model)?;
    let weights = posterior_weights(obs, model)?;
    let (mean, var) = moments_from_weights(obs, model, &weights)?;
    let fdr = (!grouping.null_set.is_empty()).then(|| grouping.null_set.iter().map(|&j| weights[j]).sum::<f64>());
    let tail = match *obs {
        Observation::Normal { z, s2 } if !grouping.null_set.is_empty() => Some(tail_fdr(model, grouping, z, s2)?),
        _ => None,
    };
    Ok(PosteriorSummary {
        weights,
        effect_mean: mean,
        effect_var: var,
        fdr,
        tail_fdr: tail,
    })
}

/// `log P_j(|Z| ≥ t)` for a normal component and `t ≥ 0`.
pub(crate) fn log_two_sided_tail(t: f64, mean: f64, var: f64, s2: f64) -> f64 {
    let sd = (var + s2).sqrt();
    log_add_exp(log_norm_sf((t - mean) / sd), log_norm_cdf((-t - mean) / sd))
}

/// Tail-area false discovery rate at `|z|`: the null sub-mixture's two-sided
/// tail mass over the full mixture's.
pub fn tail_fdr(model: &MixtureModel, grouping: &NullGrouping, z: f64, s2: f64) -> Result<f64> {
    if model.family != FamilyKind::Normal {
        return Err(Error::Unsupported("FDR is defined for the normal family only".into()));
    }
    if grouping.null_set.is_empty() {
        return Err(Error::Unsupported("FDR needs at least one null component".into()));
    }
    grouping.check(model)?;
    let t = z.abs();
    if t == 0.0 {
        return Ok(grouping.null_set.iter().map(|&j| model.weights[j]).sum());
    }
    let terms: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.components)
        .map(|(p, c)| match *c {
            ComponentPrior::Normal { mean, var } => p.ln() + log_two_sided_tail(t, mean, var, s2),
            ComponentPrior::Beta { .. } => f64::NAN,
        })
        .collect();
    let null_terms: Vec<f64> = grouping.null_set.iter().map(|&j| terms[j]).collect();
    let num = log_sum_exp(&null_terms);
    let den = log_sum_exp(&terms);
    if !den.is_finite() {
        return Err(Error::NumericDomain(format!("tail mass at {t} vanished")));
    }
    Ok((num - den).exp().clamp(0.0, 1.0))
}
