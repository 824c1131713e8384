//! Parametric-bootstrap choice of the proportion penalty `P`.
//!
//! A preliminary fit is perturbed in its null component, data sets are
//! simulated from each perturbed model, every candidate penalty is fitted to
//! every data set, and the candidate whose fdr curves best track the
//! generating models wins.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{ComponentPrior, FamilyKind};
use crate::inference::{fdr_curve, nearly_null_grouping, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL};
use crate::mixture::{fit_dataset, Dataset, FitConfig, MixtureModel, NullMode};
use crate::rng;

const SAMPLE_STREAM: u64 = 0xca11;
/// Score assigned to a failed bootstrap fit (the largest possible value).
pub const FAILED_SCORE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPlan {
    pub candidates: Vec<f64>,
    pub preliminary_penalty: f64,
    /// Number of perturbed models `L`.
    pub n_perturbed: usize,
    /// Data sets per perturbed model `B`.
    pub n_bootstrap: usize,
    /// Null mean shift, applied with alternating sign across perturbed models.
    pub null_mean_jitter: f64,
    /// Multipliers on the null's marginal standard deviation, cycled.
    pub null_sd_scales: Vec<f64>,
    pub seed: u64,
}

/// Twenty candidates evenly spaced on `[100, N/2]`, preliminary `P = N/5`.
pub fn default_plan(n: usize) -> Result<CalibrationPlan> {
    if n <= 200 {
        return Err(Error::DegenerateRange(format!(
            "N = {n} leaves no room for candidates in [100, N/2]; supply candidates explicitly"
        )));
    }
    let (lo, hi) = (100.0, n as f64 / 2.0);
    let k = 20;
    let candidates = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    Ok(CalibrationPlan::with_defaults(n, candidates))
}

impl CalibrationPlan {
    /// Default perturbation and bootstrap settings around explicit candidates.
    pub fn with_defaults(n: usize, candidates: Vec<f64>) -> Self {
        CalibrationPlan {
            candidates,
            preliminary_penalty: n as f64 / 5.0,
            n_perturbed: 4,
            n_bootstrap: 20,
            null_mean_jitter: 0.05,
            null_sd_scales: vec![0.95, 1.0, 1.05, 1.1],
            seed: 0,
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<f64>) -> Self {
        self.candidates = candidates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::contract("at least one candidate penalty is required"));
        }
        if let Some(p) = self.candidates.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::contract(format!("candidate penalties must be finite and nonnegative, got {p}")));
        }
        if !(self.preliminary_penalty.is_finite() && self.preliminary_penalty >= 0.0) {
            return Err(Error::contract("preliminary penalty must be finite and nonnegative"));
        }
        if self.n_perturbed == 0 || self.n_bootstrap == 0 {
            return Err(Error::contract("L and B must be at least 1"));
        }
        if self.null_sd_scales.is_empty() || self.null_sd_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::contract("null sd scales must be positive"));
        }
        if !self.null_mean_jitter.is_finite() {
            return Err(Error::contract("null mean jitter must be finite"));
        }
        Ok(())
    }

    /// Null mean shift and sd scale of perturbed model `l`.
    pub fn perturbation(&self, l: usize) -> (f64, f64) {
        let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
        (sign * self.null_mean_jitter, self.null_sd_scales[l % self.null_sd_scales.len()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    #[serde(rename = "candidate_P")]
    pub candidate_p: f64,
    pub perturbed_model_index: usize,
    pub bootstrap_index: usize,
    pub score: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub chosen: f64,
    /// Mean score per candidate, in plan order.
    pub mean_scores: Vec<f64>,
    /// `K × L·B` rows, candidate-major.
    pub scores: Vec<ScoreRow>,
    pub preliminary: MixtureModel,
}

impl Calibration {
    pub fn scores_csv(&self) -> Result<String> {
        crate::harness::to_csv(&self.scores)
    }
}

/// 101 points on `[−5, 5]`.
fn score_grid() -> Vec<f64> {
    (0..=100).map(|i| (i as f64 - 50.0) / 10.0).collect()
}

fn perturb(model: &MixtureModel, shift: f64, scale: f64, s2: f64) -> Result<MixtureModel> {
    let mut out = model.clone();
    let ComponentPrior::Normal { mean, var } = model.components[0] else {
        return Err(Error::Unsupported("calibration needs a normal null component".into()));
    };
    let marginal = scale * scale * (var + s2);
    out.components[0] = ComponentPrior::Normal { mean: mean + shift, var: (marginal - s2).max(0.0) };
    // the perturbed null is no longer the theoretical one
    out.null_mode = NullMode::Empirical;
    Ok(out)
}

fn sample(model: &MixtureModel, s2: &[f64], gen: &mut rng::Rng) -> Vec<f64> {
    let cumulative: Vec<f64> = model
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    s2.iter()
        .map(|&si| {
            let u: f64 = gen.random::<f64>() * cumulative[cumulative.len() - 1];
            let j = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            let (mean, var) = (model.components[j].prior_mean(), model.components[j].prior_var());
            let e1: f64 = gen.sample(StandardNormal);
            let e2: f64 = gen.sample(StandardNormal);
            mean + var.sqrt() * e1 + si.sqrt() * e2
        })
        .collect()
}

fn fdr_under_own_grouping(model: &MixtureModel, grid: &[f64]) -> Result<Vec<f64>> {
    let grouping = nearly_null_grouping(model, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL)?;
    fdr_curve(model, &grouping, grid)
}

/// Parametric-bootstrap calibration of the penalty for a normal-family fit.
pub fn calibrate_penalty(data: &Dataset, base: &FitConfig, plan: &CalibrationPlan) -> Result<Calibration> {
    plan.validate()?;
    let Dataset::Normal { s2, .. } = data else {
        return Err(Error::Unsupported("penalty calibration is implemented for the normal family".into()));
    };
    if data.is_empty() {
        return Err(Error::contract("data must be nonempty"));
    }
    if base.null_mode == NullMode::None {
        return Err(Error::Unsupported("calibration scores fdr curves and needs a null component".into()));
    }
    base.validate(FamilyKind::Normal)?;
    let preliminary = fit_dataset(data, &base.clone().with_penalty(plan.preliminary_penalty))?;
    let mean_s2 = s2.iter().sum::<f64>() / s2.len() as f64;
    let grid = score_grid();
    let perturbed: Vec<(MixtureModel, Vec<f64>)> = (0..plan.n_perturbed)
        .map(|l| {
            let (shift, scale) = plan.perturbation(l);
            let m = perturb(&preliminary, shift, scale, mean_s2)?;
            let curve = fdr_under_own_grouping(&m, &grid)?;
            Ok((m, curve))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> =
        (0..plan.n_perturbed).flat_map(|l| (0..plan.n_bootstrap).map(move |b| (l, b))).collect();
    let cell_scores = crate::harness::par_map(&cells, |&(l, b)| -> Result<Vec<(f64, bool)>> {
        let (truth, truth_curve) = &perturbed[l];
        let mut gen = rng::stream(plan.seed, &[SAMPLE_STREAM, l as u64, b as u64]);
        let z = sample(truth, s2, &mut gen);
        let boot = match data {
            Dataset::Normal { common_s2: Some(_), .. } => Dataset::from_z(&z)?,
            _ => {
                let obs = z
                    .iter()
                    .zip(s2)
                    .map(|(&zi, &si)| crate::families::Observation::normal_with_variance(zi, si))
                    .collect::<Result<Vec<_>>>()?;
                Dataset::new(&obs)?
            }
        };
        Ok(plan
            .candidates
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let config = base
                    .clone()
                    .with_penalty(p)
                    .with_restarts(1)
                    .with_seed(rng::derive_seed(plan.seed, &[l as u64, b as u64, k as u64]));
                let scored = fit_dataset(&boot, &config)
                    .and_then(|m| fdr_under_own_grouping(&m, &grid))
                    .map(|curve| curve.iter().zip(truth_curve).map(|(a, t)| (a - t).powi(2)).sum::<f64>() / grid.len() as f64);
                match scored {
                    Ok(s) if s.is_finite() => (s, false),
                    _ => (FAILED_SCORE, true),
                }
            })
            .collect())
    });
    let cell_scores: Vec<Vec<(f64, bool)>> = cell_scores.into_iter().collect::<Result<_>>()?;

    let mut scores = Vec::with_capacity(plan.candidates.len() * cells.len());
    let mut mean_scores = Vec::with_capacity(plan.candidates.len());
    for (k, &p) in plan.candidates.iter().enumerate() {
        let mut total = 0.0;
        for (&(l, b), row) in cells.iter().zip(&cell_scores) {
            let (score, failed) = row[k];
            total += score;
            scores.push(ScoreRow { candidate_p: p, perturbed_model_index: l, bootstrap_index: b, score, failed });
        }
        mean_scores.push(total / cells.len() as f64);
    }
    let mut best = 0;
    for k in 1..plan.candidates.len() {
        let (s, bs) = (mean_scores[k], mean_scores[best]);
        if s < bs || (s == bs && plan.candidates[k] > plan.candidates[best]) {
            best = k;
        }
    }
    Ok(Calibration { chosen: plan.candidates[best], mean_scores, scores, preliminary })
}
