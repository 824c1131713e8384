use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

const NOISE: u64 = 0x6e6f_6973;
const POSITIONS: u64 = 0x706f_7369;
const EFFECTS: u64 = 0x6566_6665;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Nonzero effects `Unif(μ − ½, μ + ½)`.
    EffectOneSided,
    /// Two thirds of the nonzero effects `Unif(μ − ½, μ + ½)`, one third
    /// `Unif(−μ − ½, −μ + ½)`.
    EffectTwoSided,
    /// `K` alternatives drawn once from `Unif(μ − 1, μ + 1)` and reused.
    FdrScenario,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::EffectOneSided => "one",
            ScenarioKind::EffectTwoSided => "two",
            ScenarioKind::FdrScenario => "fdr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub reps: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k > self.n {
            return Err(Error::contract(format!("K = {} exceeds N = {}", self.k, self.n)));
        }
        if self.reps == 0 {
            return Err(Error::contract("reps must be at least 1"));
        }
        Ok(())
    }

    /// Number of negative effects: `round(K / 3)` when two-sided.
    pub fn negative_count(&self) -> usize {
        match self.kind {
            ScenarioKind::EffectTwoSided => (self.k as f64 / 3.0).round() as usize,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectDraw {
    pub delta: Vec<f64>,
    pub z: Vec<f64>,
}

/// Unit normal noise for replication `rep`; shared by every scenario cell
/// with the same seed.
pub(crate) fn noise(seed: u64, rep: usize, n: usize) -> Vec<f64> {
    let mut gen = rng::stream(seed, &[NOISE, rep as u64]);
    (0..n).map(|_| gen.sample(StandardNormal)).collect()
}

/// One replication of an effect-size scenario.
pub fn generate_effect_scenario(spec: &ScenarioSpec, rep: usize) -> Result<EffectDraw> {
    spec.validate()?;
    if spec.kind == ScenarioKind::FdrScenario {
        return Err(Error::contract("fdr scenarios are generated by the fdr study"));
    }
    let n = spec.n;
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut rng::stream(spec.seed, &[POSITIONS, rep as u64]));
    let mut effects = rng::stream(spec.seed, &[EFFECTS, rep as u64]);
    let negatives = spec.negative_count();
    let mut delta = vec![0.0; n];
    for (idx, &pos) in positions[..spec.k].iter().enumerate() {
        let u: f64 = effects.random();
        let center = if idx < negatives { -spec.mu } else { spec.mu };
        delta[pos] = center - 0.5 + u;
    }
    let z = delta.iter().zip(noise(spec.seed, rep, n)).map(|(d, e)| d + e).collect();
    Ok(EffectDraw { delta, z })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ScenarioKind, k: usize, mu: f64) -> ScenarioSpec {
        ScenarioSpec { kind, n: 1000, k, mu, reps: 1, seed: 9 }
    }

    #[test]
    fn k_zero_is_pure_noise() {
        let d = generate_effect_scenario(&spec(ScenarioKind::EffectOneSided, 0, 3.0), 0).unwrap();
        assert!(d.delta.iter().all(|&v| v == 0.0));
        assert_eq!(d.z, noise(9, 0, 1000));
    }

    #[test]
    fn dense_one_sided_support() {
        let d = generate_effect_scenario(&spec(ScenarioKind::EffectOneSided, 1000, 4.0), 3).unwrap();
        assert!(d.delta.iter().all(|&v| (3.5..=4.5).contains(&v)));
    }

    #[test]
    fn two_sided_split_by_count() {
        for (k, neg) in [(300, 100), (5, 2), (50, 17), (500, 167)] {
            let d = generate_effect_scenario(&spec(ScenarioKind::EffectTwoSided, k, 2.0), 1).unwrap();
            assert_eq!(d.delta.iter().filter(|&&v| v < 0.0).count(), neg);
            assert_eq!(d.delta.iter().filter(|&&v| v != 0.0).count(), k);
        }
    }

    #[test]
    fn noise_is_shared_across_cells() {
        let a = generate_effect_scenario(&spec(ScenarioKind::EffectOneSided, 5, 2.0), 4).unwrap();
        let b = generate_effect_scenario(&spec(ScenarioKind::EffectTwoSided, 500, 5.0), 4).unwrap();
        let ea: Vec<f64> = a.z.iter().zip(&a.delta).map(|(z, d)| z - d).collect();
        let eb: Vec<f64> = b.z.iter().zip(&b.delta).map(|(z, d)| z - d).collect();
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = generate_effect_scenario(&spec(ScenarioKind::EffectOneSided, 5, 2.0), 5).unwrap();
        assert_ne!(a.z, c.z);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_effect_scenario(&spec(ScenarioKind::EffectOneSided, 1001, 2.0), 0).is_err());
        assert!(generate_effect_scenario(&spec(ScenarioKind::FdrScenario, 50, 3.0), 0).is_err());
    }
}
