use serde::Serialize;

use super::baselines::{baseline_estimate, Baseline};
use super::oracle::bayes_oracle;
use super::scenario::{generate_effect_scenario, ScenarioKind, ScenarioSpec};
use super::{mean_sd, par_map};
use crate::error::{Error, Result};
use crate::families::Observation;
use crate::inference::posterior_moments;
use crate::mixture::{fit_dataset, Dataset, FitConfig, NullMode};
use crate::rng::derive_seed;
use crate::special::median;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectMethod {
    BayesOracle,
    Baseline(Baseline),
    /// Theoretical-null normal mixture; posterior means as estimates.
    Mixture { components: usize, penalty: f64 },
}

impl EffectMethod {
    pub fn name(&self) -> String {
        match self {
            EffectMethod::BayesOracle => "bayes_oracle".into(),
            EffectMethod::Baseline(b) => b.name(),
            EffectMethod::Mixture { components, penalty } => format!("mixture_J{components}_P{penalty}"),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        if name == "bayes_oracle" {
            return Ok(EffectMethod::BayesOracle);
        }
        if let Some(rest) = name.strip_prefix("mixture_J") {
            let parsed = rest
                .split_once("_P")
                .and_then(|(j, p)| Some((j.parse().ok()?, p.parse().ok()?)));
            return match parsed {
                Some((components, penalty)) => Ok(EffectMethod::Mixture { components, penalty }),
                None => Err(Error::contract(format!("bad mixture method {name:?}; expected mixture_J<j>_P<p>"))),
            };
        }
        Baseline::parse(name).map(EffectMethod::Baseline)
    }

    /// All baselines plus the J = 10, P = 50 mixture.
    pub fn standard_set() -> Vec<Self> {
        vec![
            EffectMethod::Mixture { components: 10, penalty: 50.0 },
            EffectMethod::Baseline(Baseline::Naive),
            EffectMethod::Baseline(Baseline::UniversalSoft),
            EffectMethod::Baseline(Baseline::UniversalHard),
            EffectMethod::Baseline(Baseline::FdrThreshold(0.1)),
            EffectMethod::Baseline(Baseline::SureShrink),
            EffectMethod::Baseline(Baseline::JamesSteinPP),
            EffectMethod::Baseline(Baseline::GrandMean),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct EffectStudyConfig {
    pub n: usize,
    pub ks: Vec<usize>,
    pub mus: Vec<f64>,
    pub kinds: Vec<ScenarioKind>,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<EffectMethod>,
    /// EM restarts for mixture methods.
    pub restarts: usize,
}

impl Default for EffectStudyConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            ks: vec![5, 50, 500],
            mus: vec![2.0, 3.0, 4.0, 5.0],
            kinds: vec![ScenarioKind::EffectOneSided, ScenarioKind::EffectTwoSided],
            reps: 100,
            seed: 0,
            methods: EffectMethod::standard_set(),
            restarts: 1,
        }
    }
}

impl EffectStudyConfig {
    pub fn scenarios(&self) -> Vec<ScenarioSpec> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            for &k in &self.ks {
                for &mu in &self.mus {
                    out.push(ScenarioSpec { kind, n: self.n, k, mu, reps: self.reps, seed: self.seed });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub mu: f64,
    pub sided: &'static str,
    pub method: String,
    /// Total squared error averaged over replications.
    pub mse: f64,
    pub oracle_mse: f64,
    pub rel_error: f64,
    /// Standard error of the mean difference from the oracle's error.
    pub diff_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub mean_rel_error: f64,
    pub median_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectStudy {
    pub rows: Vec<EffectRow>,
    pub summary: Vec<SummaryRow>,
}

impl EffectStudy {
    pub fn rows_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn summary_csv(&self) -> Result<String> {
        to_csv(&self.summary)
    }

    pub fn row(&self, k: usize, mu: f64, sided: &str, method: &str) -> Option<&EffectRow> {
        self.rows.iter().find(|r| r.k == k && r.mu == mu && r.sided == sided && r.method == method)
    }
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn estimate(method: &EffectMethod, z: &[f64], oracle: &[f64], seed: u64, restarts: usize) -> Result<Vec<f64>> {
    match *method {
        EffectMethod::BayesOracle => Ok(oracle.to_vec()),
        EffectMethod::Baseline(b) => baseline_estimate(b, z),
        EffectMethod::Mixture { components, penalty } => {
            let data = Dataset::from_z(z)?;
            let config = FitConfig::default()
                .with_components(components)
                .with_penalty(penalty)
                .with_null_mode(NullMode::Theoretical)
                .with_restarts(restarts)
                .with_seed(seed);
            let model = fit_dataset(&data, &config)?;
            z.iter().map(|&v| posterior_moments(&Observation::normal(v), &model).map(|m| m.0)).collect()
        }
    }
}

/// Runs every method on every scenario and replication.
///
/// Returns an error naming the first failing (scenario, rep, method).
pub fn run_effect_study(config: &EffectStudyConfig) -> Result<EffectStudy> {
    if config.reps == 0 {
        return Err(Error::contract("reps must be at least 1"));
    }
    if config.methods.is_empty() {
        return Err(Error::contract("no methods registered"));
    }
    let scenarios = config.scenarios();
    for s in &scenarios {
        s.validate()?;
    }
    let cells: Vec<(usize, usize)> =
        (0..scenarios.len()).flat_map(|s| (0..config.reps).map(move |r| (s, r))).collect();
    let results = par_map(&cells, |&(s, r)| -> Result<(f64, Vec<f64>)> {
        let spec = &scenarios[s];
        let draw = generate_effect_scenario(spec, r)?;
        let oracle = bayes_oracle(&draw.z, spec)?;
        let oracle_se = squared_error(&oracle, &draw.delta);
        let seed = derive_seed(config.seed, &[s as u64, r as u64]);
        let mut errs = Vec::with_capacity(config.methods.len());
        for m in &config.methods {
            let est = estimate(m, &draw.z, &oracle, seed, config.restarts).map_err(|e| {
                Error::Fitting(format!(
                    "scenario {s} (K={}, mu={}, {}-sided), rep {r}, method {}: {e}",
                    spec.k,
                    spec.mu,
                    spec.kind.label(),
                    m.name()
                ))
            })?;
            errs.push(squared_error(&est, &draw.delta));
        }
        Ok((oracle_se, errs))
    });
    let results: Vec<(f64, Vec<f64>)> = results.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (s, spec) in scenarios.iter().enumerate() {
        let cell = &results[s * config.reps..(s + 1) * config.reps];
        let oracle_mse = cell.iter().map(|c| c.0).sum::<f64>() / config.reps as f64;
        for (mi, m) in config.methods.iter().enumerate() {
            let errs: Vec<f64> = cell.iter().map(|c| c.1[mi]).collect();
            let diffs: Vec<f64> = cell.iter().map(|c| c.1[mi] - c.0).collect();
            let mse = errs.iter().sum::<f64>() / config.reps as f64;
            let (_, sd) = mean_sd(&diffs);
            rows.push(EffectRow {
                k: spec.k,
                mu: spec.mu,
                sided: spec.kind.label(),
                method: m.name(),
                mse,
                oracle_mse,
                rel_error: if matches!(m, EffectMethod::BayesOracle) { 1.0 } else { mse / oracle_mse },
                diff_se: sd / (config.reps as f64).sqrt(),
            });
        }
    }
    let summary = config
        .methods
        .iter()
        .map(|m| {
            let name = m.name();
            let rel: Vec<f64> = rows.iter().filter(|r| r.method == name).map(|r| r.rel_error).collect();
            SummaryRow {
                method: name,
                mean_rel_error: rel.iter().sum::<f64>() / rel.len() as f64,
                median_rel_error: median(&rel),
            }
        })
        .collect();
    Ok(EffectStudy { rows, summary })
}
