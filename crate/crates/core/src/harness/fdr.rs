use rand::Rng as _;
use serde::Serialize;

use super::effect::to_csv;
use super::scenario::{noise, ScenarioKind, ScenarioSpec};
use super::{mean_sd, par_map};
use crate::error::{Error, Result};
use crate::families::ComponentPrior;
use crate::inference::{fdr_curve, nearly_null_grouping, rejection_threshold, tail_fdr_curve, CurveKind, NullGrouping};
use crate::inference::{DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL};
use crate::mixture::{fit_dataset, Dataset, FitConfig, MixtureModel, NullMode};
use crate::rng;

const ALTERNATIVES: u64 = 0x616c_7465;

/// Levels at which rejection thresholds are reported.
pub const FDR_LEVELS: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdrMethod {
    /// The generating model itself.
    Truth,
    Mixture { null_mode: NullMode, components: usize, penalty: f64 },
}

impl FdrMethod {
    pub fn name(&self) -> String {
        match self {
            FdrMethod::Truth => "truth".into(),
            FdrMethod::Mixture { components, penalty, .. } => format!("mixture_J{components}_P{penalty}"),
        }
    }

    pub fn null_label(&self) -> String {
        match self {
            FdrMethod::Truth => NullMode::Theoretical.to_string(),
            FdrMethod::Mixture { null_mode, .. } => null_mode.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdrStudyConfig {
    pub spec: ScenarioSpec,
    pub methods: Vec<FdrMethod>,
    pub restarts: usize,
}

impl FdrStudyConfig {
    /// 950 nulls and 50 alternatives from `Unif(2, 4)`.
    pub fn standard(reps: usize, seed: u64) -> Self {
        Self {
            spec: ScenarioSpec { kind: ScenarioKind::FdrScenario, n: 1000, k: 50, mu: 3.0, reps, seed },
            methods: vec![
                FdrMethod::Mixture { null_mode: NullMode::Theoretical, components: 3, penalty: 50.0 },
                FdrMethod::Mixture { null_mode: NullMode::Empirical, components: 3, penalty: 50.0 },
            ],
            restarts: 1,
        }
    }

    /// The alternative effects, drawn once from the study seed.
    pub fn alternatives(&self) -> Vec<f64> {
        let mut gen = rng::stream(self.spec.seed, &[ALTERNATIVES]);
        (0..self.spec.k).map(|_| self.spec.mu - 1.0 + 2.0 * gen.random::<f64>()).collect()
    }

    /// Replication `rep`: nulls first, then the alternatives.
    pub fn draw(&self, rep: usize) -> Vec<f64> {
        let n = self.spec.n;
        let alts = self.alternatives();
        let mut z = noise(self.spec.seed, rep, n);
        for (v, d) in z[n - alts.len()..].iter_mut().zip(&alts) {
            *v += d;
        }
        z
    }

    /// Point mass at zero with weight `(N − K)/N` plus `1/N` at each alternative.
    pub fn truth_model(&self) -> Result<MixtureModel> {
        let n = self.spec.n as f64;
        let alts = self.alternatives();
        let mut weights = vec![(self.spec.n - alts.len()) as f64 / n];
        let mut comps = vec![ComponentPrior::POINT_NULL];
        for d in alts {
            weights.push(1.0 / n);
            comps.push(ComponentPrior::Normal { mean: d, var: 0.0 });
        }
        MixtureModel::new(weights, comps, NullMode::Theoretical)
    }
}

/// Grid `[−4, 6]` with step 0.1.
pub fn fdr_grid() -> Vec<f64> {
    (0..=100).map(|i| (i as f64 - 40.0) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveStat {
    pub z: f64,
    pub method: String,
    pub null_mode: String,
    pub quantity: &'static str,
    pub mean: f64,
    pub sd: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdStat {
    pub q: f64,
    pub method: String,
    pub null_mode: String,
    pub quantity: &'static str,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub truth: Option<f64>,
    /// Replications with no rejection region at this level.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdrStudy {
    pub curves: Vec<CurveStat>,
    pub thresholds: Vec<ThresholdStat>,
}

impl FdrStudy {
    pub fn curves_csv(&self) -> Result<String> {
        to_csv(&self.curves)
    }

    pub fn thresholds_csv(&self) -> Result<String> {
        to_csv(&self.thresholds)
    }

    pub fn curve(&self, method: &str, null_mode: &str, quantity: &str) -> Vec<&CurveStat> {
        self.curves
            .iter()
            .filter(|c| c.method == method && c.null_mode == null_mode && c.quantity == quantity)
            .collect()
    }

    pub fn threshold(&self, method: &str, null_mode: &str, quantity: &str, q: f64) -> Option<&ThresholdStat> {
        self.thresholds
            .iter()
            .find(|t| t.method == method && t.null_mode == null_mode && t.quantity == quantity && t.q == q)
    }
}

const KINDS: [CurveKind; 2] = [CurveKind::Local, CurveKind::Tail];

fn kind_label(kind: CurveKind) -> &'static str {
    match kind {
        CurveKind::Local => "fdr",
        CurveKind::Tail => "FDR",
    }
}

struct RepOutput {
    /// Per kind: curve values on the grid.
    curves: [Vec<f64>; 2],
    /// Per kind: thresholds per level (`None` when no rejection region).
    thresholds: [Vec<Option<f64>>; 2],
}

fn evaluate(model: &MixtureModel, grouping: &NullGrouping, grid: &[f64]) -> Result<RepOutput> {
    let curves = [fdr_curve(model, grouping, grid)?, tail_fdr_curve(model, grouping, grid)?];
    let mut thresholds: [Vec<Option<f64>>; 2] = Default::default();
    for (slot, kind) in thresholds.iter_mut().zip(KINDS) {
        for q in FDR_LEVELS {
            slot.push(match rejection_threshold(model, grouping, q, kind) {
                Ok(t) => Some(t),
                Err(Error::NoRejectionRegion { .. }) => None,
                Err(e) => return Err(e),
            });
        }
    }
    Ok(RepOutput { curves, thresholds })
}

/// Fits every method on every replication and summarizes curve and
/// threshold estimates against the truth.
pub fn run_fdr_study(config: &FdrStudyConfig) -> Result<FdrStudy> {
    let spec = &config.spec;
    spec.validate()?;
    if spec.kind != ScenarioKind::FdrScenario {
        return Err(Error::contract("fdr study needs an FdrScenario spec"));
    }
    let grid = fdr_grid();
    let truth = config.truth_model()?;
    let truth_out = evaluate(&truth, &NullGrouping::explicit(&truth), &grid)?;

    let cells: Vec<(usize, usize)> =
        (0..config.methods.len()).flat_map(|m| (0..spec.reps).map(move |r| (m, r))).collect();
    let outputs = par_map(&cells, |&(mi, r)| -> Result<RepOutput> {
        let method = &config.methods[mi];
        let wrap = |e: Error| {
            Error::Fitting(format!("fdr scenario, rep {r}, method {} ({} null): {e}", method.name(), method.null_label()))
        };
        match *method {
            FdrMethod::Truth => evaluate(&truth, &NullGrouping::explicit(&truth), &grid),
            FdrMethod::Mixture { null_mode, components, penalty } => {
                let data = Dataset::from_z(&config.draw(r))?;
                let fit = FitConfig::default()
                    .with_components(components)
                    .with_penalty(penalty)
                    .with_null_mode(null_mode)
                    .with_restarts(config.restarts)
                    .with_seed(rng::derive_seed(spec.seed, &[mi as u64, r as u64]));
                let model = fit_dataset(&data, &fit).map_err(wrap)?;
                let grouping = nearly_null_grouping(&model, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL).map_err(wrap)?;
                evaluate(&model, &grouping, &grid).map_err(wrap)
            }
        }
    });
    let outputs: Vec<RepOutput> = outputs.into_iter().collect::<Result<_>>()?;

    let mut curves = Vec::new();
    let mut thresholds = Vec::new();
    for (mi, method) in config.methods.iter().enumerate() {
        let reps = &outputs[mi * spec.reps..(mi + 1) * spec.reps];
        for (ki, kind) in KINDS.into_iter().enumerate() {
            for (gi, &z) in grid.iter().enumerate() {
                let values: Vec<f64> = reps.iter().map(|o| o.curves[ki][gi]).collect();
                let (mean, sd) = mean_sd(&values);
                curves.push(CurveStat {
                    z,
                    method: method.name(),
                    null_mode: method.null_label(),
                    quantity: kind_label(kind),
                    mean,
                    sd,
                    truth: truth_out.curves[ki][gi],
                });
            }
            for (qi, &q) in FDR_LEVELS.iter().enumerate() {
                let values: Vec<f64> = reps.iter().filter_map(|o| o.thresholds[ki][qi]).collect();
                let (mean, sd) = mean_sd(&values);
                thresholds.push(ThresholdStat {
                    q,
                    method: method.name(),
                    null_mode: method.null_label(),
                    quantity: kind_label(kind),
                    mean: (!values.is_empty()).then_some(mean),
                    sd: (!values.is_empty()).then_some(sd),
                    truth: truth_out.thresholds[ki][qi],
                    missing: spec.reps - values.len(),
                });
            }
        }
    }
    Ok(FdrStudy { curves, thresholds })
}
