mod common;

use std::fs;

use common::{csv_rows, ebmix, fdr_scenario, stderr, stdout, two_component, write_z};
use ebmix::document::ModelDocument;
use ebmix::special::{norm_pdf, norm_sf};
use ebmix::{ComponentPrior, MixtureModel, NullMode};

fn write_model(dir: &std::path::Path, name: &str, model: MixtureModel) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, ModelDocument::new(model, 0).to_json().unwrap()).unwrap();
    path
}

#[test]
fn fit_smoke_on_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "tiny.csv", &[0.1, 2.5, -1.0]);
    let out = ebmix(["fit", "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = ModelDocument::from_json(&stdout(&out)).unwrap();
    assert!(doc.model.diagnostics.converged);
    assert_eq!(doc.model.len(), 3);
    assert!(stdout(&out).contains("\"format_version\": 1"));
}

#[test]
fn fit_recovers_null_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "fdr.csv", &fdr_scenario(3));
    let out = ebmix(["fit", "--input", input.to_str().unwrap(), "--J", "3", "--penalty", "50", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = ModelDocument::from_json(&stdout(&out)).unwrap();
    assert!((doc.model.weights[0] - 0.95).abs() <= 0.05, "pi0 = {}", doc.model.weights[0]);
}

#[test]
fn fit_output_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "fdr.csv", &fdr_scenario(5));
    let mut texts = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let out = ebmix([
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--null",
            "empirical",
            "--seed",
            "11",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(out.stdout.is_empty());
        texts.push(fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn binomial_with_point_null_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("b.csv");
    fs::write(&input, "id,H,N\na,3,10\nb,4,12\n").unwrap();
    let out = ebmix(["fit", "--input", input.to_str().unwrap(), "--family", "binomial", "--null", "theoretical"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ERROR usage:"), "{}", stderr(&out));
}

#[test]
fn malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "id,z\na,0.5\nb,oops\n").unwrap();
    let out = ebmix(["fit", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("ERROR parse:") && err.contains("line 3"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = ebmix(["fit", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ERROR usage:"));
    assert!(ebmix(["--help"]).status.success());
}

#[test]
fn pure_null_model_gives_unit_fdr() {
    let dir = tempfile::tempdir().unwrap();
    let model = MixtureModel::new(vec![1.0], vec![ComponentPrior::POINT_NULL], NullMode::Theoretical).unwrap();
    let model_path = write_model(dir.path(), "null.json", model);
    let input = write_z(dir.path(), "z.csv", &[-3.0, -0.5, 0.0, 1.2, 4.0]);
    let out = ebmix(["estimate", "--model", model_path.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert_eq!(row["fdr"].parse::<f64>().unwrap(), 1.0);
        assert_eq!(row["FDR"].parse::<f64>().unwrap(), 1.0);
        assert_eq!(row["effect_mean"].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn worked_model_row_matches_closed_form() {
    // 0.5 δ_0 + 0.5 N(0, 3), unit noise, z = 2.
    let dir = tempfile::tempdir().unwrap();
    let model = MixtureModel::new(
        vec![0.5, 0.5],
        vec![ComponentPrior::POINT_NULL, ComponentPrior::Normal { mean: 0.0, var: 3.0 }],
        NullMode::Theoretical,
    )
    .unwrap();
    let model_path = write_model(dir.path(), "worked.json", model);
    let input = write_z(dir.path(), "z.csv", &[2.0]);
    let out = ebmix(["estimate", "--model", model_path.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let row = &csv_rows(&stdout(&out))[0];
    let get = |k: &str| row[k].parse::<f64>().unwrap();

    let f0 = norm_pdf(2.0);
    let f1 = norm_pdf(1.0) / 2.0;
    let fdr = f0 / (f0 + f1);
    let shrink = 0.75;
    let mean = (1.0 - fdr) * shrink * 2.0;
    let second = (1.0 - fdr) * (shrink + (shrink * 2.0f64).powi(2));
    let tail0 = 2.0 * norm_sf(2.0);
    let tail1 = 2.0 * norm_sf(1.0);
    let big_fdr = tail0 / (tail0 + tail1);

    assert_eq!(row["id"], "case0");
    assert!((get("fdr") - fdr).abs() < 1e-12);
    assert!((get("effect_mean") - mean).abs() < 1e-12);
    assert!((get("effect_var") - (second - mean * mean)).abs() < 1e-12);
    assert!((get("FDR") - big_fdr).abs() < 1e-12);
}

#[test]
fn empty_input_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let model = MixtureModel::new(vec![1.0], vec![ComponentPrior::POINT_NULL], NullMode::Theoretical).unwrap();
    let model_path = write_model(dir.path(), "null.json", model);
    let input = write_z(dir.path(), "empty.csv", &[]);
    let out = ebmix(["estimate", "--model", model_path.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "id,z,effect_mean,effect_var,fdr,FDR\n");
}

#[test]
fn binomial_estimates_leave_fdr_blank() {
    let dir = tempfile::tempdir().unwrap();
    let model = MixtureModel::new(vec![1.0], vec![ComponentPrior::Beta { alpha: 2.0, beta: 6.0 }], NullMode::None).unwrap();
    let model_path = write_model(dir.path(), "beta.json", model);
    let input = dir.path().join("b.csv");
    fs::write(&input, "id,H,N\np1,3,10\n").unwrap();
    let out = ebmix(["estimate", "--model", model_path.to_str().unwrap(), "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let row = &csv_rows(&stdout(&out))[0];
    assert_eq!(row["fdr"], "");
    assert_eq!(row["FDR"], "");
    assert!((row["effect_mean"].parse::<f64>().unwrap() - 5.0 / 18.0).abs() < 1e-12);

    let normal = write_z(dir.path(), "z.csv", &[1.0]);
    let out = ebmix(["estimate", "--model", model_path.to_str().unwrap(), "--input", normal.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("ERROR usage:"));
}

#[test]
fn unwritable_out_dir_fails_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let started = std::time::Instant::now();
    let out = ebmix(["simulate", "effect", "--out-dir", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR io:"), "{}", stderr(&out));
    assert!(started.elapsed().as_secs() < 10);
}

#[test]
fn simulate_effect_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebmix(["simulate", "effect", "--reps", "2", "--seed", "7", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&fs::read_to_string(dir.path().join("effect_scenarios.csv")).unwrap());
    let methods: std::collections::BTreeSet<&str> = rows.iter().map(|r| r["method"].as_str()).collect();
    assert_eq!(methods.len(), 8);
    assert_eq!(rows.len(), 24 * methods.len());
    for key in ["K", "mu", "sided", "method", "rel_error"] {
        assert!(rows[0].contains_key(key), "missing {key}");
    }
    assert!(dir.path().join("effect_summary.csv").exists());
}

#[test]
fn simulate_baseball_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let out = ebmix(["simulate", "baseball", "--seed", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&fs::read_to_string(dir.path().join("baseball_tse.csv")).unwrap());
    let naive = rows.iter().find(|r| r["method"] == "naive" && r["group"] == "overall").unwrap();
    assert_eq!(naive["normalized"].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn calibrate_single_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "fdr.csv", &fdr_scenario(1)[..300]);
    let scores = dir.path().join("scores.csv");
    let out = ebmix([
        "calibrate",
        "--input",
        input.to_str().unwrap(),
        "--candidates",
        "75",
        "--perturbed",
        "2",
        "--bootstrap",
        "2",
        "--scores",
        scores.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(csv_rows(&stdout(&out))[0]["chosen"], "true");
    assert_eq!(csv_rows(&stdout(&out))[0]["candidate_P"], "75");
    let table = csv_rows(&fs::read_to_string(scores).unwrap());
    assert_eq!(table.len(), 4);
}

#[test]
fn calibrate_auto_on_small_data_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "small.csv", &fdr_scenario(1)[..150]);
    let out = ebmix(["calibrate", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR degenerate-range:"), "{}", stderr(&out));
}

#[test]
fn bic_reports_every_j() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_z(dir.path(), "two.csv", &two_component(4));
    let out = ebmix(["bic", "--input", input.to_str().unwrap(), "--J-range", "1..3", "--restarts", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.iter().map(|r| r["J"].as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
    assert_eq!(rows.iter().filter(|r| r["selected"] == "true").count(), 1);

    let bad = ebmix(["bic", "--input", input.to_str().unwrap(), "--J-range", "4..2"]);
    assert_eq!(bad.status.code(), Some(2));
}
