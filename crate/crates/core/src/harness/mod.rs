//! Simulation scenarios, baseline estimators, the Bayes oracle, and the
//! effect-size, fdr and batting-average studies built from them.

mod baseball;
mod baselines;
mod effect;
mod fdr;
mod oracle;
mod scenario;

pub use baseball::{
    arcsine_transform, read_baseball_csv, run_baseball, synthetic_season, BaseballConfig, BaseballMethod,
    BaseballRecord, BaseballReport, SyntheticSeason, SyntheticSeasonConfig, TseRow,
};
pub use baselines::{
    baseline_estimate, bh_threshold, hard_threshold, soft_threshold, sure_threshold, universal_threshold, Baseline,
};
pub(crate) use effect::to_csv;
pub use effect::{run_effect_study, EffectMethod, EffectRow, EffectStudy, EffectStudyConfig, SummaryRow};
pub use fdr::{fdr_grid, run_fdr_study, CurveStat, FdrMethod, FdrStudy, FdrStudyConfig, ThresholdStat, FDR_LEVELS};
pub use oracle::{bayes_oracle, GeneratingPrior};
pub use scenario::{generate_effect_scenario, EffectDraw, ScenarioKind, ScenarioSpec};

/// Mean and sample standard deviation (zero for fewer than two values).
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}
