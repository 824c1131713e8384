#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ebmix::harness::FdrStudyConfig;
use ebmix::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn ebmix<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_ebmix")).args(args).output().expect("spawn ebmix")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_z(dir: &Path, name: &str, z: &[f64]) -> PathBuf {
    let mut text = String::from("id,z\n");
    for (i, v) in z.iter().enumerate() {
        let _ = writeln!(text, "case{i},{v}");
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// 950 N(0,1) nulls plus 50 alternatives centered on a fixed Unif(2,4) draw.
pub fn fdr_scenario(seed: u64) -> Vec<f64> {
    FdrStudyConfig::standard(1, seed).draw(0)
}

/// 60/40 mixture of N(0,1) and N(5,1), N = 2000.
pub fn two_component(seed: u64) -> Vec<f64> {
    let mut gen = stream(seed, &[0xb1c]);
    (0..2000)
        .map(|_| {
            let e: f64 = gen.sample(StandardNormal);
            if gen.random::<f64>() < 0.6 {
                e
            } else {
                5.0 + e
            }
        })
        .collect()
}

/// Rows of a CSV text as header-keyed maps.
pub fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}
