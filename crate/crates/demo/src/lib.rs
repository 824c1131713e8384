//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated glue
//! beyond `wasm-bindgen`'s own.

use ebmix::harness::{
    bh_threshold, generate_effect_scenario, soft_threshold, sure_threshold, universal_threshold, FdrStudyConfig,
    ScenarioKind, ScenarioSpec,
};
use ebmix::inference::{
    fdr_curve, nearly_null_grouping, posterior_moments, rejection_threshold, tail_fdr_curve, CurveKind,
    DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL,
};
use ebmix::mixture::em_fit;
use ebmix::special::norm_logpdf;
use ebmix::{ComponentPrior, Error, FitConfig, MixtureModel, NullMode, Observation, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn threshold_or_null(model: &MixtureModel, q: f64, kind: CurveKind) -> Result<Value> {
    let grouping = nearly_null_grouping(model, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL)?;
    match rejection_threshold(model, &grouping, q, kind) {
        Ok(t) => Ok(json!(t)),
        Err(Error::NoRejectionRegion { .. }) => Ok(Value::Null),
        Err(e) => Err(e),
    }
}

fn describe(model: &MixtureModel) -> Value {
    let comps: Vec<Value> = model
        .components
        .iter()
        .map(|c| json!({ "mean": c.prior_mean(), "var": c.prior_var() }))
        .collect();
    json!({ "pi": model.weights, "components": comps, "converged": model.diagnostics.converged })
}

fn marginal_density(model: &MixtureModel, z: f64) -> f64 {
    model
        .weights
        .iter()
        .zip(&model.components)
        .map(|(p, c)| p * norm_logpdf(z, c.prior_mean(), c.prior_var() + 1.0).exp())
        .sum()
}

/// fdr and FDR under `π0 δ0 + (1 − π0) N(alt_mean, alt_var)` with unit noise.
pub fn two_group_curves(pi0: f64, alt_mean: f64, alt_var: f64, q: f64) -> Result<Value> {
    if !(0.0 < pi0 && pi0 < 1.0) {
        return Err(Error::Contract(format!("pi0 = {pi0} must lie in (0, 1)")));
    }
    let model = MixtureModel::new(
        vec![pi0, 1.0 - pi0],
        vec![ComponentPrior::POINT_NULL, ComponentPrior::normal(alt_mean, alt_var)?],
        NullMode::Theoretical,
    )?;
    let z = grid(-4.0, 8.0, 241);
    let grouping = nearly_null_grouping(&model, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL)?;
    let density: Vec<f64> = z.iter().map(|&v| marginal_density(&model, v)).collect();
    Ok(json!({
        "z": z,
        "fdr": fdr_curve(&model, &grouping, &z)?,
        "FDR": tail_fdr_curve(&model, &grouping, &z)?,
        "density": density,
        "threshold_fdr": threshold_or_null(&model, q, CurveKind::Local)?,
        "threshold_FDR": threshold_or_null(&model, q, CurveKind::Tail)?,
        "null_grouped": grouping.null_set.len() > 1,
    }))
}

/// Draws `n − k` nulls and `k` effects from `Unif(mu − 1, mu + 1)`, fits a
/// mixture and compares its fdr curve with the generating one.
pub fn simulate_fit(n: usize, k: usize, mu: f64, components: usize, penalty: f64, empirical: bool, seed: u64) -> Result<Value> {
    let spec = ScenarioSpec { kind: ScenarioKind::FdrScenario, n, k, mu, reps: 1, seed };
    spec.validate()?;
    let study = FdrStudyConfig { spec, methods: vec![], restarts: 1 };
    let z = study.draw(0);
    let truth = study.truth_model()?;
    let mode = if empirical { NullMode::Empirical } else { NullMode::Theoretical };
    let config = FitConfig::default()
        .with_components(components)
        .with_penalty(penalty)
        .with_null_mode(mode)
        .with_seed(seed)
        .with_restarts(1);
    let model = em_fit(&z.iter().map(|&v| Observation::normal(v)).collect::<Vec<_>>(), &config)?;

    let g = grid(-4.0, 8.0, 121);
    let fitted = nearly_null_grouping(&model, DEFAULT_MEAN_TOL, DEFAULT_VAR_TOL)?;
    let exact = nearly_null_grouping(&truth, 0.0, 0.0)?;
    let (lo, hi, bins) = (-4.0, 8.0, 48);
    let mut counts = vec![0usize; bins];
    for &v in &z {
        let b = ((v - lo) / (hi - lo) * bins as f64).floor();
        if (0.0..bins as f64).contains(&b) {
            counts[b as usize] += 1;
        }
    }
    Ok(json!({
        "grid": g,
        "fdr_fit": fdr_curve(&model, &fitted, &g)?,
        "FDR_fit": tail_fdr_curve(&model, &fitted, &g)?,
        "fdr_true": fdr_curve(&truth, &exact, &g)?,
        "density_fit": g.iter().map(|&v| marginal_density(&model, v) * n as f64 * (hi - lo) / bins as f64).collect::<Vec<_>>(),
        "histogram": { "lo": lo, "hi": hi, "counts": counts },
        "model": describe(&model),
        "threshold_fdr": threshold_or_null(&model, 0.1, CurveKind::Local)?,
    }))
}

fn mse(estimate: &[f64], delta: &[f64]) -> f64 {
    estimate.iter().zip(delta).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / delta.len() as f64
}

/// Sparse one-sided effects: mixture posterior means against soft
/// thresholding at the universal, SURE and BH thresholds.
pub fn shrinkage_comparison(n: usize, k: usize, mu: f64, components: usize, penalty: f64, seed: u64) -> Result<Value> {
    let spec = ScenarioSpec { kind: ScenarioKind::EffectOneSided, n, k, mu, reps: 1, seed };
    spec.validate()?;
    let draw = generate_effect_scenario(&spec, 0)?;
    let config = FitConfig::default().with_components(components).with_penalty(penalty).with_seed(seed).with_restarts(1);
    let model = em_fit(&draw.z.iter().map(|&v| Observation::normal(v)).collect::<Vec<_>>(), &config)?;
    let posterior = |v: f64| posterior_moments(&Observation::normal(v), &model).map(|m| m.0);

    let universal = universal_threshold(n);
    let sure = sure_threshold(&draw.z);
    let bh = bh_threshold(&draw.z, 0.1);
    let g = grid(-3.0, 9.0, 241);
    let curve = g.iter().map(|&v| posterior(v)).collect::<Result<Vec<f64>>>()?;
    let soft = |t: f64| g.iter().map(|&v| soft_threshold(v, t)).collect::<Vec<_>>();

    let mixture_est = draw.z.iter().map(|&v| posterior(v)).collect::<Result<Vec<f64>>>()?;
    let by_threshold = |t: f64| draw.z.iter().map(|&v| soft_threshold(v, t)).collect::<Vec<_>>();
    let mut errors = vec![
        json!({ "method": "mixture", "mse": mse(&mixture_est, &draw.delta) }),
        json!({ "method": "naive", "mse": mse(&draw.z, &draw.delta) }),
        json!({ "method": "universal_soft", "mse": mse(&by_threshold(universal), &draw.delta) }),
        json!({ "method": "sure_soft", "mse": mse(&by_threshold(sure), &draw.delta) }),
    ];
    if let Some(t) = bh {
        errors.push(json!({ "method": "bh_soft", "mse": mse(&by_threshold(t), &draw.delta) }));
    }
    Ok(json!({
        "grid": g,
        "posterior_mean": curve,
        "soft_universal": soft(universal),
        "soft_sure": soft(sure),
        "thresholds": {
            "universal": universal,
            "sure": sure,
            "bh": bh,
            "mixture_fdr": threshold_or_null(&model, 0.1, CurveKind::Local)?,
            "mixture_FDR": threshold_or_null(&model, 0.1, CurveKind::Tail)?,
        },
        "errors": errors,
        "points": draw.z.iter().zip(&draw.delta).map(|(z, d)| [*z, *d]).collect::<Vec<_>>(),
    }))
}

fn to_js(result: Result<Value>) -> std::result::Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fdrCurves)]
pub fn fdr_curves(pi0: f64, alt_mean: f64, alt_var: f64, q: f64) -> std::result::Result<String, JsError> {
    to_js(two_group_curves(pi0, alt_mean, alt_var, q))
}

#[wasm_bindgen(js_name = simulateAndFit)]
pub fn simulate_and_fit(
    n: u32,
    k: u32,
    mu: f64,
    components: u32,
    penalty: f64,
    empirical: bool,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(simulate_fit(n as usize, k as usize, mu, components as usize, penalty, empirical, seed as u64))
}

#[wasm_bindgen(js_name = thresholdsAndShrinkage)]
pub fn thresholds_and_shrinkage(
    n: u32,
    k: u32,
    mu: f64,
    components: u32,
    penalty: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(shrinkage_comparison(n as usize, k as usize, mu, components as usize, penalty, seed as u64))
}
