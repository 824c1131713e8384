use super::{log_two_sided_tail, NullGrouping};
use crate::error::{Error, Result};
use crate::families::FamilyKind;
use crate::mixture::MixtureModel;
use crate::special::{log_sum_exp, norm_logpdf};

const GRID_STEP: f64 = 0.001;
const GRID_MAX: f64 = 10.0;
const BISECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    /// Local false discovery rate `fdr(z)`.
    Local,
    /// Tail-area false discovery rate `FDR(z)`.
    Tail,
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CurveKind::Local => "fdr",
            CurveKind::Tail => "FDR",
        })
    }
}

/// Unit-variance curve evaluator with the per-component constants hoisted.
pub(crate) struct Curves<'a> {
    log_pi: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
    grouping: &'a NullGrouping,
}

impl<'a> Curves<'a> {
    pub(crate) fn new(model: &MixtureModel, grouping: &'a NullGrouping) -> Result<Self> {
        if model.family != FamilyKind::Normal {
            return Err(Error::Unsupported("fdr curves are defined for the normal family only".into()));
        }
        if grouping.null_set.is_empty() {
            return Err(Error::Unsupported("curves need at least one null component".into()));
        }
        grouping.check(model)?;
        Ok(Self {
            log_pi: model.weights.iter().map(|p| p.ln()).collect(),
            means: model.components.iter().map(|c| c.prior_mean()).collect(),
            vars: model.components.iter().map(|c| c.prior_var() + 1.0).collect(),
            grouping,
        })
    }

    fn split(&self, terms: &[f64]) -> f64 {
        let null: Vec<f64> = self.grouping.null_set.iter().map(|&j| terms[j]).collect();
        (log_sum_exp(&null) - log_sum_exp(terms)).exp().clamp(0.0, 1.0)
    }

    pub(crate) fn local(&self, z: f64) -> f64 {
        let terms: Vec<f64> = (0..self.means.len())
            .map(|j| self.log_pi[j] + norm_logpdf(z, self.means[j], self.vars[j]))
            .collect();
        self.split(&terms)
    }

    pub(crate) fn tail(&self, z: f64) -> f64 {
        let t = z.abs();
        if t == 0.0 {
            return self.grouping.null_set.iter().map(|&j| self.log_pi[j].exp()).sum();
        }
        let terms: Vec<f64> = (0..self.means.len())
            .map(|j| self.log_pi[j] + log_two_sided_tail(t, self.means[j], self.vars[j] - 1.0, 1.0))
            .collect();
        self.split(&terms)
    }

    pub(crate) fn eval(&self, kind: CurveKind, z: f64) -> f64 {
        match kind {
            CurveKind::Local => self.local(z),
            CurveKind::Tail => self.tail(z),
        }
    }

    /// Smallest `t` such that the curve is `≤ q` on every grid point `≥ t`.
    pub(crate) fn threshold(&self, kind: CurveKind, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::contract(format!("level q = {q} must lie in (0, 1)")));
        }
        let n = (GRID_MAX / GRID_STEP).round() as usize;
        let grid = |i: usize| i as f64 * GRID_STEP;
        let last_above = (0..=n).rev().find(|&i| self.eval(kind, grid(i)) > q);
        match last_above {
            None => Ok(0.0),
            Some(i) if i == n => Err(Error::NoRejectionRegion { q }),
            Some(i) => {
                let (mut lo, mut hi) = (grid(i), grid(i + 1));
                while hi - lo > BISECT_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(kind, mid) > q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(hi)
            }
        }
    }
}

/// `fdr(z)` at each grid point, unit observation variance.
pub fn fdr_curve(model: &MixtureModel, grouping: &NullGrouping, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::contract("empty z grid"));
    }
    let c = Curves::new(model, grouping)?;
    Ok(grid.iter().map(|&z| c.local(z)).collect())
}

/// `FDR(z)` at each grid point from the closed-form component cdfs.
pub fn tail_fdr_curve(model: &MixtureModel, grouping: &NullGrouping, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::contract("empty z grid"));
    }
    let c = Curves::new(model, grouping)?;
    Ok(grid.iter().map(|&z| c.tail(z)).collect())
}

/// Right-tail rejection threshold `t(q)`: scan `[0, 10]` in steps of 0.001,
/// then bisect the last crossing to 1e-6.
pub fn rejection_threshold(model: &MixtureModel, grouping: &NullGrouping, q: f64, kind: CurveKind) -> Result<f64> {
    Curves::new(model, grouping)?.threshold(kind, q)
}
