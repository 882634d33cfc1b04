//! Nonlinear statistical coupling toolkit.
//!
//! The crate implements the deformed (coupled) pseudo-algebra of nonextensive
//! statistics, coupled probability distributions, generalized-mean accuracy
//! metrics, and three class-conditional Gaussian fusion models:
//!
//! * naive Bayes (independent per-feature normals),
//! * a full multivariate Gaussian with shrinkage-regularized covariance,
//! * coupled-product fusion, where per-feature evidence is combined through
//!   the coupled product `(Σ xᵢ^κ − (n−1))^{1/κ}` instead of the ordinary
//!   product, trading decisiveness for heavy-tailed robustness.
//!
//! The [`harness`] module runs the whole benchmark (six feature sets of the
//! UCI handwritten-numeral data, three models each) and emits CSV/JSON
//! reports; the `cfuse` binary is its CLI front end.
//!
//! Everything dispatches to an exact classical branch at coupling zero, so
//! `κ = 0` recovers ordinary logs, exponentials, products, Gaussians and
//! Bayes rule with no `0/0` anywhere.

pub mod algebra;
pub mod classifiers;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod harness;
pub mod metrics;

pub use algebra::Coupling;
pub use error::{Error, Result};
