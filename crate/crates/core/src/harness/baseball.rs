use std::io::Read;

use rand::Rng as _;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::effect::to_csv;
use crate::error::{Error, Result};
use crate::families::{ComponentPrior, Observation};
use crate::mixture::{fit_dataset, Dataset, FitConfig, MixtureModel, NullMode};
use crate::quadrature::GaussLegendre;
use crate::rng;
use crate::special::log_sum_exp;

/// Minimum at-bats in a half season.
pub const MIN_AT_BATS: u64 = 11;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseballRecord {
    pub player_id: String,
    pub is_pitcher: bool,
    pub h1: u64,
    pub n1: u64,
    /// Second-half hits and at-bats; `None` when not recorded.
    pub h2: Option<u64>,
    pub n2: Option<u64>,
}

#[derive(Deserialize)]
struct RawRecord {
    player_id: String,
    is_pitcher: String,
    #[serde(rename = "H1")]
    h1: u64,
    #[serde(rename = "N1")]
    n1: u64,
    #[serde(rename = "H2")]
    h2: Option<u64>,
    #[serde(rename = "N2")]
    n2: Option<u64>,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Some(true),
        "0" | "false" | "f" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `player_id,is_pitcher,H1,N1,H2,N2`; `H2`/`N2` may be blank.
pub fn read_baseball_csv<R: Read>(input: R) -> Result<Vec<BaseballRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRecord>() {
        let raw = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = out.len() + 2;
        let is_pitcher = parse_flag(&raw.is_pitcher)
            .ok_or_else(|| Error::Parse { line, message: format!("bad is_pitcher value {:?}", raw.is_pitcher) })?;
        if raw.h1 > raw.n1 {
            return Err(Error::Parse { line, message: format!("H1 = {} exceeds N1 = {}", raw.h1, raw.n1) });
        }
        match (raw.h2, raw.n2) {
            (Some(h), Some(n)) if h > n => {
                return Err(Error::Parse { line, message: format!("H2 = {h} exceeds N2 = {n}") });
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(Error::Parse { line, message: "H2 and N2 must both be present or both blank".into() });
            }
            _ => {}
        }
        out.push(BaseballRecord {
            player_id: raw.player_id,
            is_pitcher,
            h1: raw.h1,
            n1: raw.n1,
            h2: raw.h2,
            n2: raw.n2,
        });
    }
    Ok(out)
}

/// `arcsin(sqrt((H + 1/4) / (N + 1/2)))`.
pub fn arcsine_transform(h: u64, n: u64) -> f64 {
    ((h as f64 + 0.25) / (n as f64 + 0.5)).sqrt().asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseballMethod {
    Naive,
    GrandMean,
    JamesStein,
    BinomialMixture,
}

impl BaseballMethod {
    pub const ALL: [BaseballMethod; 4] =
        [BaseballMethod::Naive, BaseballMethod::GrandMean, BaseballMethod::JamesStein, BaseballMethod::BinomialMixture];

    pub fn name(&self) -> &'static str {
        match self {
            BaseballMethod::Naive => "naive",
            BaseballMethod::GrandMean => "grand_mean",
            BaseballMethod::JamesStein => "james_stein",
            BaseballMethod::BinomialMixture => "binomial_mixture",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseballConfig {
    pub components: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BaseballConfig {
    fn default() -> Self {
        Self { components: 2, restarts: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TseRow {
    pub group: &'static str,
    pub method: &'static str,
    pub tse: f64,
    pub normalized: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseballReport {
    pub rows: Vec<TseRow>,
    /// Fitted mixture per group, in `overall`, `pitchers`, `nonpitchers` order.
    pub models: Vec<(&'static str, MixtureModel)>,
    /// Training players without second-half data.
    pub excluded_missing: usize,
}

impl BaseballReport {
    pub fn to_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn normalized(&self, group: &str, method: BaseballMethod) -> Option<f64> {
        self.rows.iter().find(|r| r.group == group && r.method == method.name()).map(|r| r.normalized)
    }

    pub fn model(&self, group: &str) -> Option<&MixtureModel> {
        self.models.iter().find(|m| m.0 == group).map(|m| &m.1)
    }
}

/// Computes `E(arcsin √δ | H, N)` under a beta-mixture prior.
pub(crate) struct ArcsineQuadrature {
    nodes: Vec<(f64, f64, f64, f64)>,
}

impl ArcsineQuadrature {
    pub(crate) fn new(points: usize) -> Self {
        let rule = GaussLegendre::new(points);
        let nodes = rule.mapped(0.0, 1.0).map(|(x, w)| (x.ln(), (-x).ln_1p(), w.ln(), x.sqrt().asin())).collect();
        Self { nodes }
    }

    pub(crate) fn posterior_mean(&self, model: &MixtureModel, h: u64, n: u64) -> Result<f64> {
        let joint = model.log_joint(&Observation::binomial(h, n)?)?;
        let total = log_sum_exp(&joint);
        let mut kernel = vec![0.0; self.nodes.len()];
        let mut mean = 0.0;
        for (lj, comp) in joint.iter().zip(&model.components) {
            let ComponentPrior::Beta { alpha, beta } = *comp else {
                return Err(Error::contract("beta components required"));
            };
            let (a, b) = (alpha + h as f64, beta + (n - h) as f64);
            for (k, &(lx, l1x, lw, _)) in kernel.iter_mut().zip(&self.nodes) {
                *k = (a - 1.0) * lx + (b - 1.0) * l1x + lw;
            }
            let norm = log_sum_exp(&kernel);
            let e: f64 = kernel.iter().zip(&self.nodes).map(|(k, node)| (k - norm).exp() * node.3).sum();
            mean += (lj - total).exp() * e;
        }
        Ok(mean)
    }
}

struct Player<'a> {
    rec: &'a BaseballRecord,
    x: f64,
}

fn james_stein(train: &[Player]) -> Vec<f64> {
    let p = train.len() as f64;
    let xbar = train.iter().map(|t| t.x).sum::<f64>() / p;
    let s: f64 = train.iter().map(|t| (t.x - xbar).powi(2) * 4.0 * t.rec.n1 as f64).sum();
    let factor = if s > 0.0 { (1.0 - (p - 3.0) / s).max(0.0) } else { 0.0 };
    train.iter().map(|t| xbar + factor * (t.x - xbar)).collect()
}

/// Fits the beta-binomial mixture to first-half records, in the order given.
pub(crate) fn fit_binomial_mixture(records: &[&BaseballRecord], config: &BaseballConfig, group: u64) -> Result<MixtureModel> {
    let obs: Vec<Observation> =
        records.iter().map(|r| Observation::binomial(r.h1, r.n1)).collect::<Result<_>>()?;
    let fit = FitConfig::default()
        .with_components(config.components)
        .with_penalty(0.0)
        .with_null_mode(NullMode::None)
        .with_restarts(config.restarts)
        .with_seed(rng::derive_seed(config.seed, &[group]));
    fit_dataset(&Dataset::new(&obs)?, &fit)
}

/// Total squared error of each method on the second half, per group.
///
/// Each group is estimated from its own first-half records; subgroups with
/// fewer than four players are omitted.
pub fn run_baseball(records: &[BaseballRecord], config: &BaseballConfig) -> Result<BaseballReport> {
    let train: Vec<&BaseballRecord> = records.iter().filter(|r| r.n1 >= MIN_AT_BATS).collect();
    let excluded_missing = train.iter().filter(|r| r.n2.is_none()).count();
    let quad = ArcsineQuadrature::new(256);
    let groups: [(&'static str, fn(&BaseballRecord) -> bool); 3] =
        [("overall", |_| true), ("pitchers", |r| r.is_pitcher), ("nonpitchers", |r| !r.is_pitcher)];
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for (gi, (group, member)) in groups.into_iter().enumerate() {
        let members: Vec<&BaseballRecord> = train.iter().copied().filter(|r| member(r)).collect();
        if members.len() < 4 {
            if gi == 0 {
                return Err(Error::contract(format!("only {} players with enough at-bats", members.len())));
            }
            continue;
        }
        let players: Vec<Player> = members.iter().map(|&rec| Player { rec, x: arcsine_transform(rec.h1, rec.n1) }).collect();
        let model = fit_binomial_mixture(&members, config, gi as u64)?;
        let xbar = players.iter().map(|p| p.x).sum::<f64>() / players.len() as f64;
        let js = james_stein(&players);
        let mix: Vec<f64> =
            players.iter().map(|p| quad.posterior_mean(&model, p.rec.h1, p.rec.n1)).collect::<Result<_>>()?;
        let test: Vec<usize> = (0..players.len())
            .filter(|&i| matches!(players[i].rec.n2, Some(n) if n >= MIN_AT_BATS))
            .collect();
        let tse = |est: &dyn Fn(usize) -> f64| -> f64 {
            test.iter()
                .map(|&i| {
                    let r = players[i].rec;
                    let (h2, n2) = (r.h2.unwrap_or(0), r.n2.unwrap_or(0));
                    (est(i) - arcsine_transform(h2, n2)).powi(2) - 0.25 / n2 as f64
                })
                .sum()
        };
        let values = [
            tse(&|i| players[i].x),
            tse(&|_| xbar),
            tse(&|i| js[i]),
            tse(&|i| mix[i]),
        ];
        for (method, value) in BaseballMethod::ALL.iter().zip(values) {
            rows.push(TseRow {
                group,
                method: method.name(),
                tse: value,
                normalized: value / values[0],
                n_train: players.len(),
                n_test: test.len(),
            });
        }
        models.push((group, model));
    }
    Ok(BaseballReport { rows, models, excluded_missing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeasonConfig {
    pub players: usize,
    pub pitcher_fraction: f64,
    pub nonpitcher_prior: (f64, f64),
    pub pitcher_prior: (f64, f64),
    /// Inclusive range of at-bats per half season.
    pub at_bats: (u64, u64),
}

impl Default for SyntheticSeasonConfig {
    fn default() -> Self {
        Self { players: 567, pitcher_fraction: 0.0, nonpitcher_prior: (302.0, 884.0), pitcher_prior: (302.0, 884.0), at_bats: (11, 300) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeason {
    pub records: Vec<BaseballRecord>,
    /// True batting probability per player.
    pub delta: Vec<f64>,
    /// Exact `E(X̃_i | δ_i)` for the second-half transform.
    pub mu: Vec<f64>,
}

fn expected_transform(n: u64, p: f64) -> Result<f64> {
    // Binomial pmf summed in log space.
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut total = 0.0;
    for h in 0..=n {
        let lpmf = crate::special::ln_choose(n, h) + h as f64 * lp + (n - h) as f64 * lq;
        total += lpmf.exp() * arcsine_transform(h, n);
    }
    if !total.is_finite() {
        return Err(Error::NumericDomain(format!("transform expectation for n={n}, p={p}")));
    }
    Ok(total)
}

/// Players with Beta-distributed batting probabilities and binomial halves.
pub fn synthetic_season(config: &SyntheticSeasonConfig, seed: u64) -> Result<SyntheticSeason> {
    let (lo, hi) = config.at_bats;
    if lo == 0 || lo > hi {
        return Err(Error::contract(format!("bad at-bat range {lo}..={hi}")));
    }
    let make = |(a, b): (f64, f64)| Beta::new(a, b).map_err(|e| Error::contract(format!("beta prior: {e}")));
    let (pitch, nonpitch) = (make(config.pitcher_prior)?, make(config.nonpitcher_prior)?);
    let mut gen = rng::stream(seed, &[0x6261_7365]);
    let mut records = Vec::with_capacity(config.players);
    let mut delta = Vec::with_capacity(config.players);
    let mut mu = Vec::with_capacity(config.players);
    for i in 0..config.players {
        let is_pitcher = gen.random::<f64>() < config.pitcher_fraction;
        let d = if is_pitcher { pitch.sample(&mut gen) } else { nonpitch.sample(&mut gen) };
        let n1 = gen.random_range(lo..=hi);
        let n2 = gen.random_range(lo..=hi);
        let draw = |n: u64, gen: &mut rng::Rng| -> Result<u64> {
            Ok(Binomial::new(n, d).map_err(|e| Error::NumericDomain(e.to_string()))?.sample(gen))
        };
        let h1 = draw(n1, &mut gen)?;
        let h2 = draw(n2, &mut gen)?;
        records.push(BaseballRecord { player_id: format!("p{i:04}"), is_pitcher, h1, n1, h2: Some(h2), n2: Some(n2) });
        mu.push(expected_transform(n2, d)?);
        delta.push(d);
    }
    Ok(SyntheticSeason { records, delta, mu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_reading() {
        let text = "player_id,is_pitcher,H1,N1,H2,N2\na,0,10,40,12,45\nb,true,1,20,,\n";
        let recs = read_baseball_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[1].is_pitcher);
        assert_eq!(recs[1].n2, None);
        let bad = "player_id,is_pitcher,H1,N1,H2,N2\na,0,50,40,1,2\n";
        assert!(matches!(read_baseball_csv(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let bad_flag = "player_id,is_pitcher,H1,N1,H2,N2\na,0,5,40,1,2\nb,maybe,1,2,1,2\n";
        assert!(matches!(read_baseball_csv(bad_flag.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let bad_num = "player_id,is_pitcher,H1,N1,H2,N2\na,0,x,40,1,2\n";
        assert!(matches!(read_baseball_csv(bad_num.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn quadrature_matches_finer_rule() {
        let model = MixtureModel::new(
            vec![0.3, 0.7],
            vec![ComponentPrior::Beta { alpha: 90.0, beta: 983.0 }, ComponentPrior::Beta { alpha: 302.0, beta: 884.0 }],
            NullMode::None,
        )
        .unwrap();
        let (q256, q1024) = (ArcsineQuadrature::new(256), ArcsineQuadrature::new(1024));
        for (h, n) in [(0, 11), (5, 20), (30, 100), (150, 500)] {
            let a = q256.posterior_mean(&model, h, n).unwrap();
            let b = q1024.posterior_mean(&model, h, n).unwrap();
            assert!((a - b).abs() < 1e-10, "{h}/{n}: {a} vs {b}");
        }
    }

    #[test]
    fn single_beta_posterior_mean_vs_adaptive() {
        let model =
            MixtureModel::new(vec![1.0], vec![ComponentPrior::Beta { alpha: 2.0, beta: 5.0 }], NullMode::None).unwrap();
        let (h, n) = (3u64, 15u64);
        let (a, b) = (5.0, 17.0);
        let lb = crate::special::ln_beta(a, b);
        let dens = |x: f64| ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - lb).exp();
        let exact = crate::quadrature::adaptive(|x| dens(x) * x.sqrt().asin(), 0.0, 1.0, 1e-13);
        let got = ArcsineQuadrature::new(256).posterior_mean(&model, h, n).unwrap();
        assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn naive_normalizes_to_one_and_groups_reported() {
        let cfg = SyntheticSeasonConfig { players: 600, pitcher_fraction: 0.3, pitcher_prior: (90.0, 983.0), ..Default::default() };
        let season = synthetic_season(&cfg, 3).unwrap();
        let report = run_baseball(&season.records, &BaseballConfig { restarts: 1, ..Default::default() }).unwrap();
        for group in ["overall", "pitchers", "nonpitchers"] {
            assert_eq!(report.normalized(group, BaseballMethod::Naive), Some(1.0));
            let tse = report.normalized(group, BaseballMethod::BinomialMixture).unwrap();
            assert!(tse < 1.0, "{group}: {tse} {:?}", report.rows);
        }
        assert_eq!(report.rows.len(), 12);
        assert_eq!(report.excluded_missing, 0);
    }

    #[test]
    fn missing_second_half_excluded() {
        let mut season = synthetic_season(&SyntheticSeasonConfig { players: 60, ..Default::default() }, 1).unwrap();
        season.records[0].h2 = None;
        season.records[0].n2 = None;
        season.records[1].is_pitcher = true;
        season.records[2].is_pitcher = true;
        season.records[3].is_pitcher = true;
        season.records[4].is_pitcher = true;
        let report = run_baseball(&season.records, &BaseballConfig { restarts: 1, ..Default::default() }).unwrap();
        assert_eq!(report.excluded_missing, 1);
        let overall = report.rows.iter().find(|r| r.group == "overall").unwrap();
        assert_eq!(overall.n_train, 60);
        assert_eq!(overall.n_test, 59);
    }

    #[test]
    fn expected_transform_limits() {
        let e = expected_transform(200, 0.25).unwrap();
        assert!((e - 0.25f64.sqrt().asin()).abs() < 0.01);
    }
}
