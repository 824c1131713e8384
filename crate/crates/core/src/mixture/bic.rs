use super::{fit_dataset, Dataset, FitConfig, MixtureModel, NullMode};
use crate::error::{Error, Result};
use crate::families::ComponentPrior;
use crate::special::log_sum_exp;

/// Unpenalized marginal log-likelihood `Σ_i log f(z_i)`.
pub fn loglik(data: &Dataset, model: &MixtureModel) -> f64 {
    let log_pi: Vec<f64> = model.weights.iter().map(|p| p.ln()).collect();
    (0..data.len())
        .map(|i| {
            let mut terms = data.log_component_densities(i, model);
            terms.iter_mut().zip(&log_pi).for_each(|(t, lp)| *t += lp);
            log_sum_exp(&terms)
        })
        .sum()
}

/// `(J − 1)` proportions plus two hyperparameters per free component.
pub fn free_parameters(model: &MixtureModel) -> usize {
    let comps: usize = model
        .components
        .iter()
        .enumerate()
        .map(|(j, c)| match c {
            ComponentPrior::Normal { .. } if j == 0 && model.null_mode == NullMode::Theoretical => 0,
            _ => 2,
        })
        .sum();
    model.len() - 1 + comps
}

/// `−2 log L + k log N` with the unpenalized likelihood.
pub fn bic(data: &Dataset, model: &MixtureModel) -> f64 {
    -2.0 * loglik(data, model) + free_parameters(model) as f64 * (data.len() as f64).ln()
}

/// BIC of one fitted model per component count.
#[derive(Debug, Clone, PartialEq)]
pub struct BicScan {
    pub scores: Vec<(usize, f64)>,
    pub selected: usize,
}

/// Fits `base` with each `J` in `range` and keeps the smallest BIC (ties to
/// the smaller `J`).
pub fn bic_scan(data: &Dataset, base: &FitConfig, range: std::ops::RangeInclusive<usize>) -> Result<BicScan> {
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::contract(format!("bad component range {}..{}", range.start(), range.end())));
    }
    let mut scores = Vec::new();
    for j in range {
        let model = fit_dataset(data, &base.clone().with_components(j))?;
        scores.push((j, bic(data, &model)));
    }
    let selected = scores.iter().fold(scores[0], |best, &c| if c.1 < best.1 { c } else { best }).0;
    Ok(BicScan { scores, selected })
}
