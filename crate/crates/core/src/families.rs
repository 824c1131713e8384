//! Conjugate kernels: normal observations with normal priors on the mean, and
//! binomial counts with beta priors on the success rate.
//!
//! All densities are returned on the log scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, ln_beta, ln_choose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// `z ~ N(δ, s²)` with known per-case variance (1 by default).
    Normal,
    /// `H ~ Binomial(N, δ)` with known per-case trial count.
    Binomial,
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Normal => "normal",
            FamilyKind::Binomial => "binomial",
        })
    }
}

/// One case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Normal { z: f64, s2: f64 },
    Binomial { h: u64, n: u64 },
}

impl Observation {
    pub fn normal(z: f64) -> Self {
        Observation::Normal { z, s2: 1.0 }
    }

    pub fn normal_with_variance(z: f64, s2: f64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::contract(format!("statistic {z} is not finite")));
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::contract(format!("variance {s2} must be positive")));
        }
        Ok(Observation::Normal { z, s2 })
    }

    pub fn binomial(h: u64, n: u64) -> Result<Self> {
        if n == 0 || h > n {
            return Err(Error::contract(format!("count {h} of {n} trials is invalid")));
        }
        Ok(Observation::Binomial { h, n })
    }

    pub fn family(&self) -> FamilyKind {
        match self {
            Observation::Normal { .. } => FamilyKind::Normal,
            Observation::Binomial { .. } => FamilyKind::Binomial,
        }
    }

    /// The statistic on its natural scale: `z`, or the count `H`.
    pub fn statistic(&self) -> f64 {
        match *self {
            Observation::Normal { z, .. } => z,
            Observation::Binomial { h, .. } => h as f64,
        }
    }
}

/// Hyperparameters of one mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentPrior {
    /// `δ ~ N(mean, var)`; `var == 0` is a point mass at `mean`.
    Normal { mean: f64, var: f64 },
    /// `δ ~ Beta(alpha, beta)`.
    Beta { alpha: f64, beta: f64 },
}

impl ComponentPrior {
    /// The theoretical null: a point mass at zero.
    pub const POINT_NULL: ComponentPrior = ComponentPrior::Normal { mean: 0.0, var: 0.0 };

    pub fn normal(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !(var >= 0.0 && var.is_finite()) {
            return Err(Error::contract(format!("invalid normal prior ({mean}, {var})")));
        }
        Ok(ComponentPrior::Normal { mean, var })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(alpha) || !ok(beta) {
            return Err(Error::contract(format!("invalid beta prior ({alpha}, {beta})")));
        }
        Ok(ComponentPrior::Beta { alpha, beta })
    }

    pub fn family(&self) -> FamilyKind {
        match self {
            ComponentPrior::Normal { .. } => FamilyKind::Normal,
            ComponentPrior::Beta { .. } => FamilyKind::Binomial,
        }
    }

    /// Prior mean of δ under this component.
    pub fn prior_mean(&self) -> f64 {
        match *self {
            ComponentPrior::Normal { mean, .. } => mean,
            ComponentPrior::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn prior_var(&self) -> f64 {
        match *self {
            ComponentPrior::Normal { var, .. } => var,
            ComponentPrior::Beta { alpha, beta } => beta_var(alpha, beta),
        }
    }
}

/// Posterior of δ under a single component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorComponent {
    pub mean: f64,
    pub var: f64,
    /// Updated `(alpha, beta)` for beta components.
    pub beta_shapes: Option<(f64, f64)>,
}

fn beta_var(a: f64, b: f64) -> f64 {
    let s = a + b;
    a * b / (s * s * (s + 1.0))
}

fn mismatch(obs: &Observation, comp: &ComponentPrior) -> Error {
    Error::contract(format!(
        "observation family {} does not match component family {}",
        obs.family(),
        comp.family()
    ))
}

/// Log marginal density (or pmf) of the observation under one component.
pub fn component_marginal(obs: &Observation, comp: &ComponentPrior) -> Result<f64> {
    let value = match (*obs, *comp) {
        (Observation::Normal { z, s2 }, ComponentPrior::Normal { mean, var }) => {
            special::norm_logpdf(z, mean, var + s2)
        }
        (Observation::Binomial { h, n }, ComponentPrior::Beta { alpha, beta }) => {
            beta_binomial_logpmf(h, n, alpha, beta)
        }
        _ => return Err(mismatch(obs, comp)),
    };
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::NumericDomain(format!(
            "marginal of {obs:?} under {comp:?} is {value}"
        )));
    }
    Ok(value)
}

pub(crate) fn beta_binomial_logpmf(h: u64, n: u64, alpha: f64, beta: f64) -> f64 {
    ln_choose(n, h) + ln_beta(alpha + h as f64, beta + (n - h) as f64) - ln_beta(alpha, beta)
}

pub fn component_posterior(obs: &Observation, comp: &ComponentPrior) -> Result<PosteriorComponent> {
    match (*obs, *comp) {
        (Observation::Normal { z, s2 }, ComponentPrior::Normal { mean, var }) => {
            Ok(normal_posterior(z, s2, mean, var))
        }
        (Observation::Binomial { h, n }, ComponentPrior::Beta { alpha, beta }) => {
            let a = alpha + h as f64;
            let b = beta + (n - h) as f64;
            Ok(PosteriorComponent {
                mean: a / (a + b),
                var: beta_var(a, b),
                beta_shapes: Some((a, b)),
            })
        }
        _ => Err(mismatch(obs, comp)),
    }
}

pub(crate) fn normal_posterior(z: f64, s2: f64, mean: f64, var: f64) -> PosteriorComponent {
    if var == 0.0 {
        return PosteriorComponent {
            mean,
            var: 0.0,
            beta_shapes: None,
        };
    }
    let total = var + s2;
    PosteriorComponent {
        mean: (s2 * mean + var * z) / total,
        var: var * s2 / total,
        beta_shapes: None,
    }
}

/// Marginal cdf `F^(j)(z)` for a normal component.
pub fn component_marginal_cdf(z: f64, comp: &ComponentPrior, s2: f64) -> Result<f64> {
    match *comp {
        ComponentPrior::Normal { mean, var } => {
            Ok(special::norm_cdf((z - mean) / (var + s2).sqrt()))
        }
        ComponentPrior::Beta { .. } => Err(Error::Unsupported(
            "marginal cdf is defined for the normal family only".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, GaussLegendre};
    use approx::assert_relative_eq;

    fn normal(mean: f64, var: f64) -> ComponentPrior {
        ComponentPrior::normal(mean, var).unwrap()
    }

    fn beta(a: f64, b: f64) -> ComponentPrior {
        ComponentPrior::beta(a, b).unwrap()
    }

    #[test]
    fn standard_normal_mode() {
        let v = component_marginal(&Observation::normal(0.0), &ComponentPrior::POINT_NULL).unwrap();
        assert_relative_eq!(v, -0.918_938_533_204_672_8, epsilon = 1e-15);
    }

    #[test]
    fn uniform_prior_gives_uniform_counts() {
        for h in 0..=3 {
            let obs = Observation::binomial(h, 3).unwrap();
            let v = component_marginal(&obs, &beta(1.0, 1.0)).unwrap();
            assert_relative_eq!(v, 0.25f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_binomial_matches_grid_oracle() {
        // ∫ C(3,1) δ (1-δ)^2 Be(δ; 2, 2) dδ evaluated on a fine midpoint grid
        let m = 200_000;
        let mut acc = 0.0;
        for i in 0..m {
            let d = (i as f64 + 0.5) / m as f64;
            let prior = 6.0 * d * (1.0 - d);
            acc += 3.0 * d * (1.0 - d).powi(2) * prior / m as f64;
        }
        let obs = Observation::binomial(1, 3).unwrap();
        let v = component_marginal(&obs, &beta(2.0, 2.0)).unwrap().exp();
        assert_relative_eq!(v, acc, epsilon = 1e-9);
        assert_relative_eq!(v, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_is_unmoved() {
        let p = component_posterior(&Observation::normal(5.0), &ComponentPrior::POINT_NULL).unwrap();
        assert_eq!((p.mean, p.var), (0.0, 0.0));
    }

    #[test]
    fn normal_shrinkage() {
        let p = component_posterior(&Observation::normal(2.0), &normal(0.0, 3.0)).unwrap();
        assert_relative_eq!(p.mean, 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.var, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn beta_conjugate_update() {
        let obs = Observation::binomial(10, 30).unwrap();
        let p = component_posterior(&obs, &beta(302.0, 884.0)).unwrap();
        assert_eq!(p.beta_shapes, Some((312.0, 904.0)));
        assert_relative_eq!(p.mean, 312.0 / 1216.0, epsilon = 1e-15);
    }

    #[test]
    fn cdf_examples() {
        let c = normal(1.3, 0.7);
        assert_relative_eq!(component_marginal_cdf(1.3, &c, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(component_marginal_cdf(60.0, &c, 1.0).unwrap(), 1.0);
        let v = component_marginal_cdf(1.96, &ComponentPrior::POINT_NULL, 1.0).unwrap();
        assert!((v - 0.975).abs() < 1e-4);
        assert!(matches!(
            component_marginal_cdf(0.0, &beta(1.0, 1.0), 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn family_mismatch_is_a_contract_violation() {
        let obs = Observation::binomial(1, 2).unwrap();
        assert!(matches!(
            component_marginal(&obs, &ComponentPrior::POINT_NULL),
            Err(Error::Contract(_))
        ));
        assert!(component_posterior(&Observation::normal(0.0), &beta(1.0, 1.0)).is_err());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(Observation::binomial(4, 3).is_err());
        assert!(Observation::binomial(0, 0).is_err());
        assert!(Observation::normal_with_variance(0.0, 0.0).is_err());
        assert!(ComponentPrior::beta(0.0, 1.0).is_err());
        assert!(ComponentPrior::normal(0.0, -1.0).is_err());
    }

    #[test]
    fn beta_binomial_normalizes() {
        for &(n, a, b) in &[(1u64, 0.5, 0.5), (10, 2.0, 3.0), (57, 302.0, 884.0), (200, 0.3, 7.0), (200, 90.0, 983.0)] {
            let total: f64 = (0..=n)
                .map(|h| beta_binomial_logpmf(h, n, a, b).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n} a={a} b={b}: {total}");
        }
    }

    #[test]
    fn normal_marginal_integrates_to_one() {
        for &(mean, var, s2) in &[(0.0, 0.0, 1.0), (2.0, 3.0, 1.0), (-1.0, 0.2, 0.3)] {
            let sd = f64::sqrt(var + s2);
            let c = normal(mean, var);
            let total = adaptive(
                |z| {
                    let obs = Observation::normal_with_variance(z, s2).unwrap();
                    component_marginal(&obs, &c).unwrap().exp()
                },
                mean - 10.0 * sd,
                mean + 10.0 * sd,
                1e-12,
            );
            assert!((total - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn normal_posterior_mean_matches_quadrature() {
        for &(z, s2, mean, var) in &[(2.0, 1.0, 0.0, 3.0), (-1.5, 0.5, 1.0, 0.4), (4.0, 2.0, -1.0, 9.0)] {
            let c = normal(mean, var);
            let sd = var.sqrt();
            let lik = |d: f64| (-(z - d) * (z - d) / (2.0 * s2)).exp();
            let prior = |d: f64| (-(d - mean) * (d - mean) / (2.0 * var)).exp();
            let (lo, hi) = (mean - 15.0 * sd, mean + 15.0 * sd);
            let num = adaptive(|d| d * lik(d) * prior(d), lo, hi, 1e-14);
            let den = adaptive(|d| lik(d) * prior(d), lo, hi, 1e-14);
            let obs = Observation::normal_with_variance(z, s2).unwrap();
            let p = component_posterior(&obs, &c).unwrap();
            assert!((p.mean - num / den).abs() < 1e-6);
        }
    }

    #[test]
    fn beta_posterior_mean_matches_quadrature() {
        let rule = GaussLegendre::new(1024);
        for &(h, n, a, b) in &[(1u64, 3u64, 2.0, 2.0), (10, 30, 302.0, 884.0), (0, 12, 0.7, 1.5)] {
            let (pa, pb) = (a + h as f64, b + (n - h) as f64);
            // δ = u^k removes the integrable singularity at 0 when pa < 1
            let k = (1.0 / pa).max(1.0);
            let log_post = |u: f64| {
                let d = u.powf(k);
                (pa - 1.0) * d.ln() + (pb - 1.0) * (1.0 - d).ln() + (k - 1.0) * u.ln()
            };
            let peak = (0..=1000)
                .map(|i| log_post((i as f64 + 0.5) / 1001.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let num = rule.integrate(0.0, 1.0, |u| u.powf(k) * (log_post(u) - peak).exp());
            let den = rule.integrate(0.0, 1.0, |u| (log_post(u) - peak).exp());
            let obs = Observation::binomial(h, n).unwrap();
            let p = component_posterior(&obs, &beta(a, b)).unwrap();
            assert!((p.mean - num / den).abs() < 1e-6, "{h}/{n}: {} vs {}", p.mean, num / den);
        }
    }
}
