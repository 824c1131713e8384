use super::scenario::{ScenarioKind, ScenarioSpec};
use crate::error::{Error, Result};
use crate::special::{log_norm_cdf, log_norm_sf, log_sum_exp, norm_cdf, norm_sf, LN_SQRT_2PI};

/// A point mass at zero plus uniform blocks `(weight, lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingPrior {
    pub null_weight: f64,
    pub blocks: Vec<(f64, f64, f64)>,
}

fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `ln(Φ(b) − Φ(a))` for `a < b`, choosing the tail that avoids cancellation.
fn ln_cdf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        let (la, lb) = (log_norm_sf(a), log_norm_sf(b));
        la + (-(lb - la).exp()).ln_1p()
    } else if b <= 0.0 {
        let (la, lb) = (log_norm_cdf(a), log_norm_cdf(b));
        lb + (-(la - lb).exp()).ln_1p()
    } else {
        (1.0 - norm_sf(b) - norm_cdf(a)).ln()
    }
}

impl GeneratingPrior {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n as f64;
        let k = spec.k;
        let mu = spec.mu;
        let blocks = match spec.kind {
            ScenarioKind::EffectOneSided => vec![(k as f64 / n, mu - 0.5, mu + 0.5)],
            ScenarioKind::EffectTwoSided => {
                let neg = spec.negative_count();
                vec![((k - neg) as f64 / n, mu - 0.5, mu + 0.5), (neg as f64 / n, -mu - 0.5, -mu + 0.5)]
            }
            ScenarioKind::FdrScenario => {
                return Err(Error::contract("the fdr scenario has a discrete generating prior"));
            }
        };
        Ok(Self { null_weight: 1.0 - k as f64 / n, blocks: blocks.into_iter().filter(|b| b.0 > 0.0).collect() })
    }

    /// `E(δ | z)` for `z ~ N(δ, 1)`.
    pub fn posterior_mean(&self, z: f64) -> f64 {
        let mut log_w = Vec::with_capacity(self.blocks.len() + 1);
        let mut means = Vec::with_capacity(self.blocks.len() + 1);
        if self.null_weight > 0.0 {
            log_w.push(self.null_weight.ln() + ln_phi(z));
            means.push(0.0);
        }
        for &(w, lo, hi) in &self.blocks {
            // Substituting u = z − δ maps [lo, hi] to [z − hi, z − lo].
            let (a, b) = (z - hi, z - lo);
            let ln_d = ln_cdf_diff(a, b);
            log_w.push(w.ln() - (hi - lo).ln() + ln_d);
            means.push(z - ((ln_phi(a) - ln_d).exp() - (ln_phi(b) - ln_d).exp()));
        }
        let total = log_sum_exp(&log_w);
        log_w.iter().zip(&means).map(|(lw, m)| (lw - total).exp() * m).sum()
    }
}

/// Posterior means under the exact generating prior of an effect scenario.
pub fn bayes_oracle(z: &[f64], spec: &ScenarioSpec) -> Result<Vec<f64>> {
    let prior = GeneratingPrior::from_spec(spec)?;
    Ok(z.iter().map(|&v| prior.posterior_mean(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_pdf;

    fn spec(kind: ScenarioKind, k: usize, mu: f64) -> ScenarioSpec {
        ScenarioSpec { kind, n: 1000, k, mu, reps: 1, seed: 0 }
    }

    fn riemann(prior: &GeneratingPrior, z: f64, m: usize) -> f64 {
        let mut num = 0.0;
        let mut den = prior.null_weight * norm_pdf(z);
        for &(w, lo, hi) in &prior.blocks {
            let h = (hi - lo) / m as f64;
            for i in 0..m {
                let d = lo + (i as f64 + 0.5) * h;
                let f = w / (hi - lo) * norm_pdf(z - d) * h;
                num += d * f;
                den += f;
            }
        }
        num / den
    }

    #[test]
    fn riemann_oracle() {
        let prior = GeneratingPrior::from_spec(&spec(ScenarioKind::EffectOneSided, 50, 3.0)).unwrap();
        assert!((prior.posterior_mean(3.0) - riemann(&prior, 3.0, 1_000_000)).abs() < 1e-6);
        let two = GeneratingPrior::from_spec(&spec(ScenarioKind::EffectTwoSided, 500, 2.0)).unwrap();
        for z in [-4.0, -1.0, 0.3, 2.5, 7.0] {
            assert!((two.posterior_mean(z) - riemann(&two, z, 200_000)).abs() < 1e-6);
        }
    }

    #[test]
    fn null_prior_and_symmetry() {
        let zero = bayes_oracle(&[-3.0, 0.0, 5.0], &spec(ScenarioKind::EffectOneSided, 0, 3.0)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let sym = GeneratingPrior { null_weight: 0.9, blocks: vec![(0.05, 2.5, 3.5), (0.05, -3.5, -2.5)] };
        assert!(sym.posterior_mean(0.0).abs() < 1e-15);
        assert!((sym.posterior_mean(2.0) + sym.posterior_mean(-2.0)).abs() < 1e-12);
    }

    #[test]
    fn extreme_statistics_stay_finite() {
        let prior = GeneratingPrior::from_spec(&spec(ScenarioKind::EffectTwoSided, 5, 5.0)).unwrap();
        for z in [-60.0, -30.0, 30.0, 60.0] {
            let m = prior.posterior_mean(z);
            assert!(m.is_finite());
            assert!((m.abs() - 5.5).abs() < 0.05, "{z} -> {m}");
        }
    }
}
