//! Posterior moments as derivatives of the log density ratio `log(f / f_0)`.
//!
//! For an exponential family with natural parameter δ, the posterior of δ
//! given `z` is itself exponential-family in `z` with cumulant generating
//! function `log f(z) − log f_0(z)`, so its mean and variance are the first
//! two derivatives of that function.

use super::spline::NaturalCubicSpline;
use crate::error::{Error, Result};
use crate::families::{ComponentPrior, FamilyKind};
use crate::mixture::MixtureModel;
use crate::special::{log_sum_exp, norm_logpdf};

/// A log density with first and second derivatives.
pub trait LogDensity {
    fn log_density(&self, z: f64) -> f64;

    /// `(log f, d/dz log f, d²/dz² log f)`. The default uses a five-point
    /// central stencil.
    fn derivatives(&self, z: f64) -> (f64, f64, f64) {
        let h = 5e-3 * z.abs().max(1.0);
        let f = |x: f64| self.log_density(x);
        let (m2, m1, c, p1, p2) = (f(z - 2.0 * h), f(z - h), f(z), f(z + h), f(z + 2.0 * h));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        (c, d1, d2)
    }
}

impl<F: Fn(f64) -> f64> LogDensity for F {
    fn log_density(&self, z: f64) -> f64 {
        self(z)
    }
}

/// The marginal density of a normal mixture, with analytic derivatives.
#[derive(Debug, Clone)]
pub struct MixtureLogDensity {
    log_pi: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

impl MixtureLogDensity {
    pub fn new(model: &MixtureModel, s2: f64) -> Result<Self> {
        if model.family != FamilyKind::Normal {
            return Err(Error::Unsupported("continuous Tweedie needs a normal mixture".into()));
        }
        let (means, vars) = model
            .components
            .iter()
            .map(|c| match *c {
                ComponentPrior::Normal { mean, var } => (mean, var + s2),
                ComponentPrior::Beta { .. } => unreachable!("family checked above"),
            })
            .unzip();
        Ok(Self {
            log_pi: model.weights.iter().map(|p| p.ln()).collect(),
            means,
            vars,
        })
    }
}

impl LogDensity for MixtureLogDensity {
    fn log_density(&self, z: f64) -> f64 {
        let terms: Vec<f64> = (0..self.means.len())
            .map(|j| self.log_pi[j] + norm_logpdf(z, self.means[j], self.vars[j]))
            .collect();
        log_sum_exp(&terms)
    }

    fn derivatives(&self, z: f64) -> (f64, f64, f64) {
        let terms: Vec<f64> = (0..self.means.len())
            .map(|j| self.log_pi[j] + norm_logpdf(z, self.means[j], self.vars[j]))
            .collect();
        let total = log_sum_exp(&terms);
        let (mut d1, mut curv) = (0.0, 0.0);
        for j in 0..terms.len() {
            let p = (terms[j] - total).exp();
            let score = -(z - self.means[j]) / self.vars[j];
            d1 += p * score;
            curv += p * (score * score - 1.0 / self.vars[j]);
        }
        (total, d1, curv - d1 * d1)
    }
}

/// `f_0`: the sampling density at δ = 0, `N(0, s²)`.
#[derive(Debug, Clone, Copy)]
pub struct NullLogDensity {
    pub s2: f64,
}

impl LogDensity for NullLogDensity {
    fn log_density(&self, z: f64) -> f64 {
        norm_logpdf(z, 0.0, self.s2)
    }

    fn derivatives(&self, z: f64) -> (f64, f64, f64) {
        (self.log_density(z), -z / self.s2, -1.0 / self.s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweedieMoments {
    pub mean: f64,
    pub var: f64,
}

/// First and second derivatives of `log f − log f_0` at `z`.
pub fn tweedie_continuous<F: LogDensity + ?Sized, G: LogDensity + ?Sized>(
    log_f: &F,
    log_f0: &G,
    z: f64,
) -> Result<TweedieMoments> {
    let (_, f1, f2) = log_f.derivatives(z);
    let (_, g1, g2) = log_f0.derivatives(z);
    let (mean, var) = (f1 - g1, f2 - g2);
    if !mean.is_finite() || !var.is_finite() {
        return Err(Error::NumericFailure {
            iteration: 0,
            message: format!("non-finite derivative of log(f/f0) at z = {z}"),
        });
    }
    Ok(TweedieMoments { mean, var })
}

/// Posterior moments of δ for `z ~ N(δ, s²)` under a fitted normal mixture.
/// The natural parameter is `δ / s²`, hence the rescaling.
pub fn tweedie_normal_mixture(model: &MixtureModel, z: f64, s2: f64) -> Result<TweedieMoments> {
    let f = MixtureLogDensity::new(model, s2)?;
    let m = tweedie_continuous(&f, &NullLogDensity { s2 }, z)?;
    Ok(TweedieMoments {
        mean: s2 * m.mean,
        var: s2 * s2 * m.var,
    })
}

/// Log density values on a contiguous integer support starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerTable {
    pub start: i64,
    pub values: Vec<f64>,
}

impl IntegerTable {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    fn get(&self, k: i64) -> f64 {
        self.values[(k - self.start) as usize]
    }
}

/// Discrete-family Tweedie estimate: interpolate `log f − log f_0` over the
/// common integer support with a natural cubic spline and differentiate it.
pub fn tweedie_discrete(log_f: &IntegerTable, log_f0: &IntegerTable, z: i64) -> Result<TweedieMoments> {
    let lo = log_f.start.max(log_f0.start);
    let hi = log_f.end().min(log_f0.end());
    if hi - lo + 1 < 4 {
        return Err(Error::contract("discrete Tweedie needs at least 4 support points"));
    }
    if z < lo || z > hi {
        return Err(Error::contract(format!("z = {z} outside the support [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (lo..=hi).map(|k| k as f64).collect();
    let ys: Vec<f64> = (lo..=hi).map(|k| log_f.get(k) - log_f0.get(k)).collect();
    if ys.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericDomain("log-ratio table has non-finite entries".into()));
    }
    let (_, mean, var) = NaturalCubicSpline::new(xs, ys)?.eval(z as f64);
    Ok(TweedieMoments { mean, var })
}
