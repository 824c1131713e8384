use crate::error::{Error, Result};
use std::f64::consts::LN_2;

use crate::special::log_norm_sf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Naive,
    UniversalSoft,
    UniversalHard,
    /// Benjamini–Hochberg at level `q` followed by hard thresholding.
    FdrThreshold(f64),
    SureShrink,
    JamesSteinPP,
    GrandMean,
}

impl Baseline {
    pub fn name(&self) -> String {
        match self {
            Baseline::Naive => "naive".into(),
            Baseline::UniversalSoft => "universal_soft".into(),
            Baseline::UniversalHard => "universal_hard".into(),
            Baseline::FdrThreshold(q) => format!("fdr_threshold_{q}"),
            Baseline::SureShrink => "sure_shrink".into(),
            Baseline::JamesSteinPP => "james_stein".into(),
            Baseline::GrandMean => "grand_mean".into(),
        }
    }

    /// Parses names produced by [`Baseline::name`]; `fdr_threshold` alone means q = 0.1.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "naive" => Baseline::Naive,
            "universal_soft" => Baseline::UniversalSoft,
            "universal_hard" => Baseline::UniversalHard,
            "fdr_threshold" => Baseline::FdrThreshold(0.1),
            "sure_shrink" => Baseline::SureShrink,
            "james_stein" => Baseline::JamesSteinPP,
            "grand_mean" => Baseline::GrandMean,
            other => match other.strip_prefix("fdr_threshold_").map(str::parse::<f64>) {
                Some(Ok(q)) => Baseline::FdrThreshold(q),
                _ => return Err(Error::contract(format!("unknown estimator {other:?}"))),
            },
        })
    }
}

pub fn universal_threshold(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

pub fn hard_threshold(z: f64, t: f64) -> f64 {
    if z.abs() > t {
        z
    } else {
        0.0
    }
}

/// Smallest rejected |z| under BH step-up on two-sided p-values, or `None`
/// when nothing is rejected.
pub fn bh_threshold(z: &[f64], q: f64) -> Option<f64> {
    let n = z.len();
    let mut abs: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let ln_q_over_n = q.ln() - (n as f64).ln();
    let mut last = None;
    for (i, &a) in abs.iter().enumerate() {
        let ln_p = LN_2 + log_norm_sf(a);
        if ln_p <= ln_q_over_n + ((i + 1) as f64).ln() {
            last = Some(i);
        }
    }
    last.map(|i| abs[i])
}

/// Soft threshold minimizing SURE over `[0, sqrt(2 log N)]`.
///
/// SURE is piecewise increasing between consecutive |z| values, so the
/// minimum is attained at 0 or at one of the |z_i| inside the range.
pub fn sure_threshold(z: &[f64]) -> f64 {
    let n = z.len();
    let upper = universal_threshold(n.max(1));
    let mut abs: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let sq: Vec<f64> = abs.iter().map(|a| a * a).collect();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + sq[i];
    }
    let sure = |t: f64| {
        // Number of |z| <= t.
        let m = abs.partition_point(|&a| a <= t);
        n as f64 + prefix[m] + (n - m) as f64 * t * t - 2.0 * m as f64
    };
    let mut best = (sure(0.0), 0.0);
    for &t in abs.iter().filter(|&&a| a <= upper) {
        let s = sure(t);
        if s < best.0 {
            best = (s, t);
        }
    }
    let s = sure(upper);
    if s < best.0 {
        best = (s, upper);
    }
    best.1
}

pub fn baseline_estimate(method: Baseline, z: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::contract(format!("non-finite statistic {bad}")));
    }
    let n = z.len();
    Ok(match method {
        Baseline::Naive => z.to_vec(),
        Baseline::UniversalSoft => {
            let t = universal_threshold(n);
            z.iter().map(|&v| soft_threshold(v, t)).collect()
        }
        Baseline::UniversalHard => {
            let t = universal_threshold(n);
            z.iter().map(|&v| hard_threshold(v, t)).collect()
        }
        Baseline::FdrThreshold(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::contract(format!("FDR level must lie in (0, 1), got {q}")));
            }
            match bh_threshold(z, q) {
                Some(t) => z.iter().map(|&v| if v.abs() >= t { v } else { 0.0 }).collect(),
                None => vec![0.0; n],
            }
        }
        Baseline::SureShrink => {
            let t = sure_threshold(z);
            z.iter().map(|&v| soft_threshold(v, t)).collect()
        }
        Baseline::JamesSteinPP => {
            let ss: f64 = z.iter().map(|v| v * v).sum();
            let factor = if ss > 0.0 { (1.0 - (n as f64 - 2.0) / ss).max(0.0) } else { 0.0 };
            z.iter().map(|&v| factor * v).collect()
        }
        Baseline::GrandMean => {
            let mean = if n == 0 { 0.0 } else { z.iter().sum::<f64>() / n as f64 };
            vec![mean; n]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn universal_examples() {
        let mut z = vec![0.0; 1000];
        z[0] = 3.0;
        z[1] = 5.0;
        let t = universal_threshold(1000);
        assert_abs_diff_eq!(t, 3.7169, epsilon = 1e-4);
        let hard = baseline_estimate(Baseline::UniversalHard, &z).unwrap();
        assert_eq!(hard[0], 0.0);
        assert_eq!(hard[1], 5.0);
        let soft = baseline_estimate(Baseline::UniversalSoft, &z).unwrap();
        assert_abs_diff_eq!(soft[1], 5.0 - t, epsilon = 1e-12);
        assert_abs_diff_eq!(soft[1], 1.283, epsilon = 1e-3);
    }

    #[test]
    fn sure_on_zeros() {
        let z = vec![0.0; 100];
        assert!(baseline_estimate(Baseline::SureShrink, &z).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sure_matches_dense_scan() {
        let z: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 - 50.0) / 15.0).collect();
        let n = z.len() as f64;
        let sure = |t: f64| {
            n + z.iter().map(|v| (v * v).min(t * t) - 2.0 * f64::from(u8::from(v.abs() <= t))).sum::<f64>()
        };
        let t = sure_threshold(&z);
        let upper = universal_threshold(z.len());
        let best = (0..=100_000).map(|i| sure(upper * i as f64 / 100_000.0)).fold(f64::INFINITY, f64::min);
        assert!(sure(t) <= best + 1e-9);
    }

    #[test]
    fn bh_against_sorted_pvalues() {
        let z: [f64; 8] = [4.0, -3.5, 2.0, 0.1, 0.5, -0.3, 1.0, 3.0];
        let n = z.len() as f64;
        let mut p: Vec<(f64, f64)> = z.iter().map(|&v| (2.0 * crate::special::norm_sf(v.abs()), v.abs())).collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = p.iter().enumerate().filter(|(i, (pv, _))| *pv <= 0.1 * (*i as f64 + 1.0) / n).map(|(i, _)| i).max();
        assert_eq!(bh_threshold(&z, 0.1), k.map(|i| p[i].1));
        let est = baseline_estimate(Baseline::FdrThreshold(0.1), &z).unwrap();
        assert_eq!(est[0], 4.0);
        assert_eq!(est[3], 0.0);
        assert_eq!(bh_threshold(&[0.0, 0.1], 0.1), None);
    }

    #[test]
    fn james_stein_and_grand_mean() {
        let z = [1.0, 2.0, 3.0];
        let js = baseline_estimate(Baseline::JamesSteinPP, &z).unwrap();
        assert_abs_diff_eq!(js[2], 3.0 * (1.0 - 1.0 / 14.0), epsilon = 1e-15);
        assert_eq!(baseline_estimate(Baseline::GrandMean, &z).unwrap(), vec![2.0; 3]);
        let small = baseline_estimate(Baseline::JamesSteinPP, &[0.1, 0.1, 0.1, 0.1]).unwrap();
        assert!(small.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn names_round_trip() {
        for b in [
            Baseline::Naive,
            Baseline::UniversalSoft,
            Baseline::UniversalHard,
            Baseline::FdrThreshold(0.05),
            Baseline::SureShrink,
            Baseline::JamesSteinPP,
            Baseline::GrandMean,
        ] {
            assert_eq!(Baseline::parse(&b.name()).unwrap(), b);
        }
        assert!(Baseline::parse("oracle2").is_err());
    }
}
