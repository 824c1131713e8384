use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ebmix::calibration::{calibrate_penalty, default_plan, CalibrationPlan};
use ebmix::document::ModelDocument;
use ebmix::harness::{
    read_baseball_csv, run_baseball, run_effect_study, run_fdr_study, synthetic_season, BaseballConfig,
    EffectMethod, EffectStudyConfig, FdrMethod, FdrStudyConfig, SyntheticSeasonConfig,
};
use ebmix::inference::{nearly_null_grouping, posterior_summary};
use ebmix::mixture::{bic_scan, em_fit, Dataset};
use ebmix::{FamilyKind, FitConfig, NullGrouping, NullMode, Observation};

use crate::error::{usage, CliResult};
use crate::input::read_cases;
use crate::{BicArgs, CalibrateArgs, EstimateArgs, FitArgs, Null, SimulateArgs, Study, Switch};

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn resolve_null(family: FamilyKind, null: Option<Null>) -> CliResult<NullMode> {
    match (family, null) {
        (FamilyKind::Normal, None) => Ok(NullMode::Theoretical),
        (FamilyKind::Binomial, None | Some(Null::None)) => Ok(NullMode::None),
        (FamilyKind::Binomial, Some(n)) => Err(usage(format!(
            "--null {} is not available for binomial data; use --null none",
            NullMode::from(n)
        ))),
        (FamilyKind::Normal, Some(n)) => Ok(n.into()),
    }
}

fn checked(config: FitConfig, family: FamilyKind) -> CliResult<FitConfig> {
    config.validate(family).map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let family = FamilyKind::from(args.family);
    let null_mode = resolve_null(family, args.null)?;
    let cases = read_cases(&args.input, Some(family))?;
    let mut config = FitConfig::default()
        .with_components(args.j)
        .with_null_mode(null_mode)
        .with_seed(args.seed)
        .with_restarts(args.restarts);
    config.penalty = match (args.penalty, null_mode) {
        (Some(p), _) => Some(p),
        (None, NullMode::None) => Some(0.0),
        (None, _) => None,
    };
    let config = checked(config, family)?;
    let model = em_fit(&cases.observations, &config)?;
    let mut doc = ModelDocument::new(model, args.seed);
    doc.timestamp = args.timestamp.clone();
    emit(args.output.as_deref(), &doc.to_json()?)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.model).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", args.model.display()))
    })?;
    let model = ModelDocument::from_json(&text)?.model;
    let cases = read_cases(&args.input, Some(model.family))?;
    let grouping = match (model.family, args.nearly_null) {
        (FamilyKind::Normal, Switch::On) => nearly_null_grouping(&model, args.mean_tol, args.var_tol)?,
        _ => NullGrouping::explicit(&model),
    };
    let mut out = String::from("id,z,effect_mean,effect_var,fdr,FDR\n");
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for (id, obs) in cases.ids.iter().zip(&cases.observations) {
        let summary = posterior_summary(obs, &model, &grouping)?;
        let z = match *obs {
            Observation::Normal { z, .. } => z,
            Observation::Binomial { h, n } => h as f64 / n as f64,
        };
        writer
            .write_record([
                id.clone(),
                z.to_string(),
                summary.effect_mean.to_string(),
                summary.effect_var.to_string(),
                cell(summary.fdr),
                cell(summary.tail_fdr),
            ])
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    let body = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    out.push_str(&String::from_utf8_lossy(&body));
    emit(args.output.as_deref(), &out)
}

/// Fails early when `dir` cannot hold output files.
fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    let annotate = |e: std::io::Error| std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(annotate)?;
    let probe = dir.join(".ebmix-write-probe");
    fs::write(&probe, b"").map_err(annotate)?;
    fs::remove_file(&probe).map_err(annotate)?;
    Ok(())
}

fn write_table(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if let Some(0) = args.reps {
        return Err(usage("--reps must be at least 1"));
    }
    if args.study == Study::Baseball && (args.reps.is_some() || args.penalty.is_some()) {
        return Err(usage("--reps and --penalty do not apply to the baseball study"));
    }
    if args.study != Study::Baseball && args.input.is_some() {
        return Err(usage("--input applies to the baseball study only"));
    }
    prepare_out_dir(&args.out_dir)?;
    let dir = args.out_dir.as_path();
    let written = match args.study {
        Study::Effect => {
            let mut config = EffectStudyConfig { seed: args.seed, ..Default::default() };
            if let Some(r) = args.reps {
                config.reps = r;
            }
            if let Some(r) = args.restarts {
                config.restarts = r;
            }
            for method in &mut config.methods {
                if let EffectMethod::Mixture { components, penalty } = method {
                    *components = args.j.unwrap_or(*components);
                    *penalty = args.penalty.unwrap_or(*penalty);
                }
            }
            let study = run_effect_study(&config)?;
            vec![
                write_table(dir, "effect_scenarios.csv", &study.rows_csv()?)?,
                write_table(dir, "effect_summary.csv", &study.summary_csv()?)?,
            ]
        }
        Study::Fdr => {
            let mut config = FdrStudyConfig::standard(args.reps.unwrap_or(50), args.seed);
            if let Some(r) = args.restarts {
                config.restarts = r;
            }
            for method in &mut config.methods {
                if let FdrMethod::Mixture { components, penalty, .. } = method {
                    *components = args.j.unwrap_or(*components);
                    *penalty = args.penalty.unwrap_or(*penalty);
                }
            }
            let study = run_fdr_study(&config)?;
            vec![
                write_table(dir, "fdr_curves.csv", &study.curves_csv()?)?,
                write_table(dir, "fdr_thresholds.csv", &study.thresholds_csv()?)?,
            ]
        }
        Study::Baseball => {
            let records = match &args.input {
                Some(path) => read_baseball_csv(fs::File::open(path)?)?,
                None => synthetic_season(&SyntheticSeasonConfig::default(), args.seed)?.records,
            };
            let defaults = BaseballConfig::default();
            let config = BaseballConfig {
                components: args.j.unwrap_or(defaults.components),
                restarts: args.restarts.unwrap_or(defaults.restarts),
                seed: args.seed,
            };
            let report = run_baseball(&records, &config)?;
            vec![write_table(dir, "baseball_tse.csv", &report.to_csv()?)?]
        }
    };
    let mut listing = String::new();
    for path in written {
        let _ = writeln!(listing, "{}", path.display());
    }
    emit(None, &listing)
}

fn parse_candidates(text: &str) -> CliResult<Option<Vec<f64>>> {
    if text.trim() == "auto" {
        return Ok(None);
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--candidates: `{}` is not a number", s.trim())))
        })
        .collect::<CliResult<Vec<f64>>>()
        .map(Some)
}

pub fn calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let candidates = parse_candidates(&args.candidates)?;
    if args.null == Null::None {
        return Err(usage("calibration needs a null component; use --null theoretical or empirical"));
    }
    let cases = read_cases(&args.input, Some(FamilyKind::Normal))?;
    let data = Dataset::new(&cases.observations)?;
    let n = data.len();
    let mut plan = match candidates {
        None => default_plan(n)?,
        Some(list) => CalibrationPlan::with_defaults(n, list),
    }
    .with_seed(args.seed);
    if let Some(l) = args.perturbed {
        plan.n_perturbed = l;
    }
    if let Some(b) = args.bootstrap {
        plan.n_bootstrap = b;
    }
    plan.validate().map_err(|e| usage(e.to_string()))?;
    let base = checked(
        FitConfig::default()
            .with_components(args.j)
            .with_null_mode(args.null.into())
            .with_seed(args.seed)
            .with_restarts(args.restarts),
        FamilyKind::Normal,
    )?;
    let result = calibrate_penalty(&data, &base, &plan)?;
    if let Some(path) = &args.scores {
        fs::write(path, result.scores_csv()?)?;
    }
    let mut out = String::from("candidate_P,mean_score,chosen\n");
    for (p, score) in plan.candidates.iter().zip(&result.mean_scores) {
        let _ = writeln!(out, "{p},{score},{}", *p == result.chosen);
    }
    emit(None, &out)
}

fn parse_range(text: &str) -> CliResult<(usize, usize)> {
    let bad = || usage(format!("--J-range expects `a..b` with 1 <= a <= b, got `{text}`"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn bic(args: &BicArgs) -> CliResult<()> {
    let (lo, hi) = parse_range(&args.j_range)?;
    let family = FamilyKind::from(args.family);
    let null_mode = resolve_null(family, Some(args.null))?;
    let base = checked(
        FitConfig::default()
            .with_components(hi)
            .with_null_mode(null_mode)
            .with_penalty(args.penalty)
            .with_seed(args.seed)
            .with_restarts(args.restarts),
        family,
    )?;
    if null_mode != NullMode::None && lo < 2 {
        return Err(usage("J must be at least 2 when a null component is designated"));
    }
    let cases = read_cases(&args.input, Some(family))?;
    let data = Dataset::new(&cases.observations)?;
    let scan = bic_scan(&data, &base, lo..=hi)?;
    let mut out = String::from("J,bic,selected\n");
    for (j, score) in &scan.scores {
        let _ = writeln!(out, "{j},{score},{}", *j == scan.selected);
    }
    emit(None, &out)
}
