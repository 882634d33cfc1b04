//! Generalized-mean probability accuracy, Risk Profile curves, and
//! classification scoring.
//!
//! The generalized mean of the reported true-class probabilities,
//!
//! ```text
//! P_acc(r) = ((1/N) Σ pᵢ^r)^{1/r}        P_acc(0) = (Π pᵢ)^{1/N}
//! ```
//!
//! measures inference accuracy at risk bias `r`: positive `r` rewards
//! decisive (confident) probabilities, negative `r` rewards robustness,
//! and `r = 0` — the geometric mean — is the proper-score point used as
//! the headline accuracy. Swept over a grid of `r` values the curve is a
//! Risk Profile.

use serde::{Deserialize, Serialize};

use crate::classifiers::Posterior;
use crate::error::{Error, Result};

/// Default floor applied to reported probabilities before averaging; keeps
/// one zero report from collapsing every mean with `r ≤ 0`.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Reported probabilities of the true class, one per test sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueClassProbabilities {
    values: Vec<f64>,
}

impl TrueClassProbabilities {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("need at least one probability"));
        }
        if values.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::domain("probabilities must lie in [0, 1]"));
        }
        Ok(TrueClassProbabilities { values })
    }

    /// Extracts `posterior[label]` per sample.
    pub fn from_posteriors(posteriors: &[Posterior], labels: &[usize]) -> Result<Self> {
        if posteriors.len() != labels.len() {
            return Err(Error::Dimension {
                expected: posteriors.len(),
                got: labels.len(),
            });
        }
        let mut values = Vec::with_capacity(labels.len());
        for (post, &label) in posteriors.iter().zip(labels) {
            let p = post.probs().get(label).copied().ok_or(Error::Dimension {
                expected: post.probs().len(),
                got: label,
            })?;
            values.push(p.clamp(0.0, 1.0));
        }
        TrueClassProbabilities::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Generalized (power) mean of the true-class probabilities at risk bias
/// `r`, with `p ← max(p, floor)` applied first.
///
/// `r = 0` is the geometric mean. With `floor = 0`, any zero entry sends
/// every `r ≤ 0` mean to zero.
pub fn generalized_mean(p: &TrueClassProbabilities, r: f64, floor: f64) -> f64 {
    let n = p.values.len() as f64;
    if r == 0.0 {
        if floor <= 0.0 && p.values.iter().any(|&v| v == 0.0) {
            return 0.0;
        }
        let mean_ln: f64 = p.values.iter().map(|&v| v.max(floor).ln()).sum::<f64>() / n;
        return mean_ln.exp();
    }
    if r < 0.0 && floor <= 0.0 && p.values.iter().any(|&v| v == 0.0) {
        return 0.0;
    }
    let mean_pow: f64 = p.values.iter().map(|&v| v.max(floor).powf(r)).sum::<f64>() / n;
    mean_pow.powf(1.0 / r)
}

/// Risk Profile: generalized mean sampled over a grid of risk-bias values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub grid: Vec<f64>,
    pub accuracy: Vec<f64>,
}

/// Evaluates [`generalized_mean`] at every grid point. The grid must be
/// sorted ascending; the power-mean inequality then makes the output
/// nondecreasing.
pub fn risk_profile(p: &TrueClassProbabilities, grid: &[f64], floor: f64) -> Result<RiskProfile> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("risk grid must be sorted ascending"));
    }
    let accuracy = grid.iter().map(|&r| generalized_mean(p, r, floor)).collect();
    Ok(RiskProfile {
        grid: grid.to_vec(),
        accuracy,
    })
}

/// Fraction of samples whose argmax class matches the label. Ties break
/// toward the lowest class index.
pub fn percent_correct(posteriors: &[Posterior], labels: &[usize]) -> Result<f64> {
    if posteriors.len() != labels.len() {
        return Err(Error::Dimension {
            expected: posteriors.len(),
            got: labels.len(),
        });
    }
    if posteriors.is_empty() {
        return Err(Error::domain("percent_correct needs at least one sample"));
    }
    let mut correct = 0usize;
    for (post, &label) in posteriors.iter().zip(labels) {
        if post.argmax() == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / posteriors.len() as f64)
}

/// Default risk-bias grid for Risk Profiles: −2 to 2 in steps of 0.1.
pub fn default_risk_grid() -> Vec<f64> {
    (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect()
}
