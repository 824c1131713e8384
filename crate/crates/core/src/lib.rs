//! Empirical Bayes mixture-prior estimation for exponential-family data.
//!
//! The prior on case effect sizes is modelled as a finite mixture of
//! conjugate components. Fitting is penalized marginal maximum likelihood by
//! EM. From the fitted prior the crate derives posterior effect-size means and
//! variances, local false discovery rates (`fdr`) and tail-area false
//! discovery rates (`FDR`) together, for normal and binomial observations.
//!
//! Module map:
//!
//! * [`families`]: conjugate kernels (normal/normal, binomial/beta).
//! * [`mixture`]: the mixture prior, EM fitting and BIC.
//! * [`inference`]: posterior summaries, fdr/FDR curves, thresholds, Tweedie estimators.
//! * [`calibration`]: parametric-bootstrap choice of the null penalty.
//! * [`harness`]: simulation scenarios, baseline estimators and studies.
//! * [`document`]: canonical JSON model documents.

pub mod calibration;
pub mod document;
pub mod error;
pub mod families;
pub mod harness;
pub mod inference;
pub mod mixture;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use families::{ComponentPrior, FamilyKind, Observation, PosteriorComponent};
pub use inference::{NullGrouping, PosteriorSummary};
pub use mixture::{FitConfig, MixtureModel, NullMode};
