use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{Dataset, FitConfig, FitDiagnostics, MixtureModel, NullMode};
use crate::families::ComponentPrior;
use crate::rng;
use crate::special::{median, quantile_sorted};

/// Starting point for EM run `restart_index`. Deterministic in
/// `(config.seed, restart_index)`; run 0 is never jittered.
pub fn initialize(data: &Dataset, config: &FitConfig, restart_index: usize) -> MixtureModel {
    let j = config.components;
    let mut gen = rng::stream(config.seed, &[0x1417, restart_index as u64]);
    let mut jitter = || -> f64 {
        if restart_index == 0 {
            0.0
        } else {
            gen.sample(StandardNormal)
        }
    };
    let (weights, components) = match data {
        Dataset::Normal { z, .. } => {
            let mut sorted = z.clone();
            sorted.sort_by(f64::total_cmp);
            let mut comps = Vec::with_capacity(j);
            let mut weights = Vec::with_capacity(j);
            match config.null_mode {
                NullMode::Theoretical | NullMode::Empirical => {
                    let null_mean = if config.null_mode == NullMode::Theoretical {
                        0.0
                    } else {
                        median(z)
                    };
                    comps.push(ComponentPrior::Normal { mean: null_mean, var: 0.0 });
                    weights.push(0.9);
                    for k in 1..j {
                        let center = normal_center(&sorted, config.null_mode, k, j) + jitter();
                        comps.push(ComponentPrior::Normal { mean: center, var: 1.0 });
                        weights.push(0.1 / (j - 1) as f64);
                    }
                }
                NullMode::None => {
                    for k in 0..j {
                        let center = normal_center(&sorted, config.null_mode, k, j) + jitter();
                        comps.push(ComponentPrior::Normal { mean: center, var: 1.0 });
                        weights.push(1.0 / j as f64);
                    }
                }
            }
            (weights, comps)
        }
        Dataset::Binomial { h, n, .. } => {
            let groups = rate_groups(h, n, j);
            let comps = (0..j)
                .map(|k| {
                    let (mean, conc) = moment_fit(h, n, &groups[k]);
                    let logit = (mean / (1.0 - mean)).ln() + 0.5 * jitter();
                    let m = 1.0 / (1.0 + (-logit).exp());
                    ComponentPrior::Beta {
                        alpha: m * conc,
                        beta: (1.0 - m) * conc,
                    }
                })
                .collect();
            (vec![1.0 / j as f64; j], comps)
        }
    };
    MixtureModel {
        family: data.family(),
        weights: normalize(weights),
        components,
        null_mode: config.null_mode,
        penalty: config.penalty_vector(data.len()),
        diagnostics: FitDiagnostics::default(),
    }
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Center for component `k` before jitter: the `(k/J)`-quantile when a null
/// occupies slot 0, else the `((k + 1/2)/J)`-quantile.
pub(super) fn normal_center(sorted: &[f64], mode: NullMode, k: usize, j: usize) -> f64 {
    let p = match mode {
        NullMode::None => (k as f64 + 0.5) / j as f64,
        _ => k as f64 / j as f64,
    };
    quantile_sorted(sorted, p)
}

/// Case indices split into `j` contiguous groups by observed rate `H/N`.
fn rate_groups(h: &[u64], n: &[u64], j: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..h.len()).collect();
    idx.sort_by(|&a, &b| (h[a] as f64 / n[a] as f64).total_cmp(&(h[b] as f64 / n[b] as f64)));
    let len = idx.len();
    (0..j)
        .map(|k| {
            let lo = k * len / j;
            let hi = ((k + 1) * len / j).max(lo + 1).min(len);
            idx[lo.min(len - 1)..hi].to_vec()
        })
        .collect()
}

/// Method-of-moments beta fit `(mean, α + β)` to a group of binomial cases,
/// correcting the rate variance for binomial noise.
pub(super) fn moment_fit(h: &[u64], n: &[u64], group: &[usize]) -> (f64, f64) {
    let m = group.len().max(1) as f64;
    let rates: Vec<f64> = group.iter().map(|&i| h[i] as f64 / n[i] as f64).collect();
    let mean = (rates.iter().sum::<f64>() / m).clamp(0.01, 0.99);
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / m;
    let inv_n = group.iter().map(|&i| 1.0 / n[i] as f64).sum::<f64>() / m;
    let prior_var = var - mean * (1.0 - mean) * inv_n;
    let conc = if prior_var > 0.0 {
        (mean * (1.0 - mean) / prior_var - 1.0).clamp(2.0, 1e4)
    } else {
        1e4
    };
    (mean, conc)
}

/// Re-seed an emptied component from the data, as at initialization.
pub(super) fn reinitialize_component(data: &Dataset, mode: NullMode, k: usize, j: usize) -> ComponentPrior {
    match data {
        Dataset::Normal { z, .. } => {
            let mut sorted = z.clone();
            sorted.sort_by(f64::total_cmp);
            ComponentPrior::Normal {
                mean: normal_center(&sorted, mode, k, j),
                var: 1.0,
            }
        }
        Dataset::Binomial { h, n, .. } => {
            let groups = rate_groups(h, n, j);
            let (mean, conc) = moment_fit(h, n, &groups[k]);
            ComponentPrior::Beta {
                alpha: mean * conc,
                beta: (1.0 - mean) * conc,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Observation;

    fn normal_data() -> Dataset {
        let z: Vec<f64> = (0..101).map(|i| (i as f64 - 50.0) / 10.0 + 4.2).collect();
        Dataset::from_z(&z).unwrap()
    }

    #[test]
    fn deterministic_per_restart() {
        let data = normal_data();
        let cfg = FitConfig::default().with_seed(11);
        assert_eq!(initialize(&data, &cfg, 2), initialize(&data, &cfg, 2));
        assert_ne!(initialize(&data, &cfg, 1), initialize(&data, &cfg, 2));
    }

    #[test]
    fn theoretical_null_is_pinned_at_start() {
        let data = normal_data();
        for r in 0..4 {
            let m = initialize(&data, &FitConfig::default(), r);
            assert_eq!(m.components[0], ComponentPrior::POINT_NULL);
            assert_eq!(m.weights[0], 0.9);
            assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_null_starts_at_the_median() {
        let data = normal_data();
        let cfg = FitConfig::default().with_null_mode(NullMode::Empirical);
        let m = initialize(&data, &cfg, 0);
        match m.components[0] {
            ComponentPrior::Normal { mean, var } => {
                assert!((mean - 4.2).abs() < 1e-12);
                assert_eq!(var, 0.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unjittered_centers_sit_on_quantiles() {
        let data = normal_data();
        let m = initialize(&data, &FitConfig::default(), 0);
        // quantiles 1/3 and 2/3 of an evenly spaced grid on [-0.8, 9.2]
        let expected = [-0.8 + 10.0 / 3.0, -0.8 + 20.0 / 3.0];
        for (c, e) in m.components[1..].iter().zip(expected) {
            assert!((c.prior_mean() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn binomial_groups_are_ordered_by_rate() {
        let obs: Vec<Observation> = (0..60)
            .map(|i| Observation::binomial(if i < 30 { 5 } else { 40 }, 50).unwrap())
            .collect();
        let data = Dataset::new(&obs).unwrap();
        let cfg = FitConfig::default().with_components(2).with_null_mode(NullMode::None);
        let m = initialize(&data, &cfg, 0);
        assert!(m.components[0].prior_mean() < 0.2);
        assert!(m.components[1].prior_mean() > 0.7);
    }
}
