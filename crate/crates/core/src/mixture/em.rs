use super::init::{initialize, reinitialize_component};
use super::{beta_fit, Dataset, FitConfig, FitDiagnostics, MixtureModel, NullMode};
use crate::error::{Error, Result};
use crate::families::{beta_binomial_logpmf, ComponentPrior, Observation};
use crate::special::{self, LN_SQRT_2PI};

/// Posterior component-membership probabilities, `N × J`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub cases: usize,
    pub components: usize,
    pub values: Vec<f64>,
}

impl Responsibilities {
    fn zeros(cases: usize, components: usize) -> Self {
        Self {
            cases,
            components,
            values: vec![0.0; cases * components],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.components];
        for row in self.values.chunks_exact(self.components) {
            for (s, w) in sums.iter_mut().zip(row) {
                *s += w;
            }
        }
        sums
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.values.chunks_exact(self.components).map(|r| r[j]).collect()
    }
}

fn penalty_term(model: &MixtureModel) -> f64 {
    model
        .penalty
        .iter()
        .zip(&model.weights)
        .filter(|(b, _)| **b != 0.0)
        .map(|(b, p)| b * p.ln())
        .sum()
}

/// E-step: responsibilities and the penalized marginal log-likelihood
/// `Σ_i log f(z_i) + Σ_j β_j log π_j` at the current parameters.
pub fn e_step(data: &Dataset, model: &MixtureModel) -> Result<(Responsibilities, f64)> {
    let mut w = Responsibilities::zeros(data.len(), model.len());
    let ll = e_step_into(data, model, &mut w)?;
    Ok((w, ll))
}

fn e_step_into(data: &Dataset, model: &MixtureModel, w: &mut Responsibilities) -> Result<f64> {
    let j = model.len();
    let log_pi: Vec<f64> = model.weights.iter().map(|p| p.ln()).collect();
    let mut total = 0.0;
    let mut fill_row = |i: usize, row: &mut [f64]| -> Result<()> {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::ZeroDensity { case: i });
        }
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
        total += m + s.ln();
        Ok(())
    };
    match data {
        Dataset::Normal { z, s2, common_s2 } => {
            let means: Vec<f64> = model.components.iter().map(|c| c.prior_mean()).collect();
            let vars: Vec<f64> = model.components.iter().map(|c| c.prior_var()).collect();
            if let Some(s2c) = common_s2 {
                let consts: Vec<f64> = (0..j)
                    .map(|k| log_pi[k] - 0.5 * (vars[k] + s2c).ln() - LN_SQRT_2PI)
                    .collect();
                let half_prec: Vec<f64> = vars.iter().map(|v| 0.5 / (v + s2c)).collect();
                for (i, row) in w.values.chunks_exact_mut(j).enumerate() {
                    let zi = z[i];
                    for k in 0..j {
                        let d = zi - means[k];
                        row[k] = consts[k] - d * d * half_prec[k];
                    }
                    fill_row(i, row)?;
                }
            } else {
                for (i, row) in w.values.chunks_exact_mut(j).enumerate() {
                    for k in 0..j {
                        row[k] = log_pi[k] + special::norm_logpdf(z[i], means[k], vars[k] + s2[i]);
                    }
                    fill_row(i, row)?;
                }
            }
        }
        Dataset::Binomial { h, n, ln_choose } => {
            let shapes: Vec<(f64, f64)> = model
                .components
                .iter()
                .map(|c| match *c {
                    ComponentPrior::Beta { alpha, beta } => Ok((alpha, beta)),
                    _ => Err(Error::contract("binomial data needs beta components")),
                })
                .collect::<Result<_>>()?;
            let max_n = n.iter().copied().max().unwrap_or(0);
            let tables: Vec<beta_fit::LogRatioTable> =
                shapes.iter().map(|&(a, b)| beta_fit::LogRatioTable::new(a, b, max_n)).collect();
            for (i, row) in w.values.chunks_exact_mut(j).enumerate() {
                for k in 0..j {
                    row[k] = log_pi[k] + ln_choose[i] + tables[k].get(h[i], n[i]);
                }
                fill_row(i, row)?;
            }
        }
    }
    Ok(total + penalty_term(model))
}

/// M-step: proportions by pseudo-counts, component hyperparameters by
/// weighted maximum likelihood. A theoretical null component is left alone.
pub fn m_step(data: &Dataset, w: &Responsibilities, current: &MixtureModel) -> MixtureModel {
    let j = current.len();
    let counts = w.column_sums();
    let beta = &current.penalty;
    let mut weights: Vec<f64> = counts.iter().zip(beta).map(|(n, b)| n + b).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|p| *p /= total);
    let mut components = current.components.clone();
    for k in 0..j {
        if k == 0 && current.null_mode == NullMode::Theoretical {
            continue;
        }
        if counts[k] + beta[k] == 0.0 || counts[k] < f64::MIN_POSITIVE {
            // an empty component keeps its (zero) weight but restarts from the data
            if counts[k] + beta[k] == 0.0 {
                components[k] = reinitialize_component(data, current.null_mode, k, j);
            }
            continue;
        }
        let col = w.column(k);
        components[k] = match (data, current.components[k]) {
            (Dataset::Normal { z, s2, common_s2 }, ComponentPrior::Normal { mean, var }) => {
                update_normal(z, s2, *common_s2, &col, counts[k], (mean, var))
            }
            (Dataset::Binomial { h, n, .. }, ComponentPrior::Beta { alpha, beta }) => {
                let (a, b) = beta_fit::fit(h, n, &col, (alpha, beta));
                ComponentPrior::Beta { alpha: a, beta: b }
            }
            _ => current.components[k],
        };
    }
    MixtureModel {
        family: current.family,
        weights,
        components,
        null_mode: current.null_mode,
        penalty: current.penalty.clone(),
        diagnostics: current.diagnostics.clone(),
    }
}

fn update_normal(
    z: &[f64],
    s2: &[f64],
    common_s2: Option<f64>,
    w: &[f64],
    total: f64,
    old: (f64, f64),
) -> ComponentPrior {
    let mean = w.iter().zip(z).map(|(wi, zi)| wi * zi).sum::<f64>() / total;
    let spread = w.iter().zip(z).map(|(wi, zi)| wi * (zi - mean).powi(2)).sum::<f64>() / total;
    if let Some(s2c) = common_s2 {
        // exact maximizer when all variances agree
        return ComponentPrior::Normal {
            mean,
            var: (spread - s2c).max(0.0),
        };
    }
    let avg_s2 = w.iter().zip(s2).map(|(wi, si)| wi * si).sum::<f64>() / total;
    let moment = (mean, (spread - avg_s2).max(0.0));
    // With unequal variances the moment update is not the maximizer; refine
    // on the profile objective and keep the best of old, moment and refined.
    let q = |m: f64, v: f64| -> f64 {
        w.iter()
            .zip(z)
            .zip(s2)
            .map(|((wi, zi), si)| {
                let t = v + si;
                wi * (-0.5 * t.ln() - (zi - m).powi(2) / (2.0 * t))
            })
            .sum()
    };
    let profile_mean = |v: f64| -> f64 {
        let (num, den) = w.iter().zip(z).zip(s2).fold((0.0, 0.0), |(a, b), ((wi, zi), si)| {
            let p = wi / (v + si);
            (a + p * zi, b + p)
        });
        num / den
    };
    let upper = (spread * 4.0 + 1.0).ln_1p();
    let golden = golden_max(|t| {
        let v = t.exp_m1();
        q(profile_mean(v), v)
    }, 0.0, upper);
    let v_ref = golden.exp_m1().max(0.0);
    let candidates = [old, moment, (profile_mean(v_ref), v_ref), (profile_mean(0.0), 0.0)];
    let best = candidates
        .into_iter()
        .map(|(m, v)| (q(m, v), m, v))
        .fold((f64::NEG_INFINITY, old.0, old.1), |acc, c| if c.0 > acc.0 { c } else { acc });
    ComponentPrior::Normal { mean: best.1, var: best.2 }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn run_em(data: &Dataset, config: &FitConfig, restart: usize) -> Result<MixtureModel> {
    let mut model = initialize(data, config, restart);
    let mut w = Responsibilities::zeros(data.len(), model.len());
    let mut ll = e_step_into(data, &model, &mut w).map_err(|e| Error::NumericFailure {
        iteration: 0,
        message: e.to_string(),
    })?;
    let mut diagnostics = FitDiagnostics::default();
    for it in 1..=config.max_iters {
        model = m_step(data, &w, &model);
        let next = e_step_into(data, &model, &mut w).map_err(|e| Error::NumericFailure {
            iteration: it,
            message: e.to_string(),
        })?;
        if !next.is_finite() {
            return Err(Error::NumericFailure {
                iteration: it,
                message: format!("penalized log-likelihood is {next}"),
            });
        }
        let drop = ll - next;
        debug_assert!(drop <= 1e-6 * (1.0 + ll.abs()), "EM decreased the objective by {drop}");
        diagnostics.max_decrease = diagnostics.max_decrease.max(drop);
        diagnostics.iterations = it;
        let rel = (next - ll).abs() / (next.abs() + 1.0);
        ll = next;
        if rel < config.rel_tol {
            diagnostics.converged = true;
            break;
        }
    }
    diagnostics.penalized_loglik = ll;
    model.diagnostics = diagnostics;
    Ok(model)
}

/// Penalized marginal maximum likelihood by EM, keeping the best of
/// `config.restarts` runs.
pub fn em_fit(data: &[Observation], config: &FitConfig) -> Result<MixtureModel> {
    let dataset = Dataset::new(data)?;
    fit_dataset(&dataset, config)
}

/// [`em_fit`] on an already assembled dataset.
pub fn fit_dataset(data: &Dataset, config: &FitConfig) -> Result<MixtureModel> {
    config.validate(data.family())?;
    if data.is_empty() {
        return Err(Error::contract("data must be nonempty"));
    }
    let mut best: Option<MixtureModel> = None;
    let mut failures = Vec::new();
    for r in 0..config.restarts {
        match run_em(data, config, r) {
            Ok(m) => {
                let better = best
                    .as_ref()
                    .map_or(true, |b| m.diagnostics.penalized_loglik > b.diagnostics.penalized_loglik);
                if better {
                    best = Some(m);
                }
            }
            Err(e) => failures.push(format!("run {r}: {e}")),
        }
    }
    best.ok_or_else(|| Error::Fitting(failures.join("; ")))
}

impl Dataset {
    /// Log marginal density of case `i` under each component (without weights).
    pub(crate) fn log_component_densities(&self, i: usize, model: &MixtureModel) -> Vec<f64> {
        match self {
            Dataset::Normal { z, s2, .. } => model
                .components
                .iter()
                .map(|c| special::norm_logpdf(z[i], c.prior_mean(), c.prior_var() + s2[i]))
                .collect(),
            Dataset::Binomial { h, n, .. } => model
                .components
                .iter()
                .map(|c| match *c {
                    ComponentPrior::Beta { alpha, beta } => beta_binomial_logpmf(h[i], n[i], alpha, beta),
                    _ => f64::NAN,
                })
                .collect(),
        }
    }
}
