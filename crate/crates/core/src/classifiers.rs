//! Three class-conditional Gaussian fusion models over the same per-feature
//! statistics:
//!
//! * **Naive Bayes** — per-feature normal densities combined by the ordinary
//!   product (conditional independence).
//! * **Multivariate Gaussian** — full covariance with shrinkage
//!   regularization; the precision matrix carries the pairwise dependence.
//! * **Coupled fusion** — per-feature coupled-Gaussian (heavy-tailed)
//!   densities, normalized across classes feature by feature, combined by
//!   the coupled product. A single coupling parameter replaces the full
//!   correlation structure; `κ = 0` reproduces naive Bayes exactly.
//!
//! All likelihood work happens in the natural-log domain with max-shift
//! normalization: fusing hundreds of per-feature densities underflows any
//! direct product.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{log_coupled_product, Coupling};
use crate::dataset::LabeledDataset;
use crate::dist::CoupledGaussian1D;
use crate::error::{Error, Result};
use crate::metrics::{generalized_mean, TrueClassProbabilities};

mod persist;

pub use persist::{load_model, save_model, Model};

const LN_2PI: f64 = 1.8378770664093453;

/// Normalized class-probability vector for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("posterior needs at least one class"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("posterior entries must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("posterior sums to {total}")));
        }
        Ok(Posterior { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Most probable class; ties break toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Whether per-feature variances are estimated per class or pooled across
/// classes (within-class scatter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    PerClass,
    Pooled,
}

/// Whether one covariance is shared by all classes or each class gets its
/// own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMode {
    PerClass,
    Pooled,
}

/// Shrinkage target for covariance regularization.
///
/// `ScaledIdentity` pulls toward `(tr(S)/d)·I`; `Diagonal` pulls toward
/// `diag(max(S_jj, floor))`, which preserves wildly different per-feature
/// scales and keeps degenerate features invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkageTarget {
    ScaledIdentity,
    Diagonal { floor: f64 },
}

/// Per-class independent-feature Gaussian model.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNBModel {
    class_count: usize,
    dim: usize,
    /// Row-major `[class][feature]`.
    means: Vec<f64>,
    variances: Vec<f64>,
    priors: Vec<f64>,
    variance_floor: f64,
    variance_mode: VarianceMode,
}

impl GaussianNBModel {
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, class: usize) -> &[f64] {
        &self.means[class * self.dim..(class + 1) * self.dim]
    }

    pub fn variance(&self, class: usize) -> &[f64] {
        &self.variances[class * self.dim..(class + 1) * self.dim]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn variance_floor(&self) -> f64 {
        self.variance_floor
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.variance_mode
    }
}

fn class_slices(train: &LabeledDataset) -> Result<Vec<Vec<usize>>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); train.class_count];
    for (i, &label) in train.labels.iter().enumerate() {
        by_class[label].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::Fit(format!(
                "class {c} has {} samples; need at least 2 for a variance estimate",
                rows.len()
            )));
        }
    }
    Ok(by_class)
}

/// Fits per-class means and (per-class or pooled) per-feature variances,
/// with priors from class frequencies. Variances are clamped from below at
/// `variance_floor`.
pub fn fit_naive_bayes(
    train: &LabeledDataset,
    variance_floor: f64,
    variance_mode: VarianceMode,
) -> Result<GaussianNBModel> {
    if !(variance_floor > 0.0) {
        return Err(Error::Fit(format!("variance floor must be > 0, got {variance_floor}")));
    }
    let by_class = class_slices(train)?;
    let c_count = train.class_count;
    let d = train.dim();
    let n = train.len() as f64;

    let mut means = vec![0.0; c_count * d];
    let mut variances = vec![0.0; c_count * d];
    let mut priors = vec![0.0; c_count];

    for (c, rows) in by_class.iter().enumerate() {
        let nc = rows.len() as f64;
        priors[c] = nc / n;
        let mean = &mut means[c * d..(c + 1) * d];
        for &r in rows {
            for (m, &x) in mean.iter_mut().zip(train.features.row(r)) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= nc;
        }
        let var = &mut variances[c * d..(c + 1) * d];
        for &r in rows {
            for ((v, &m), &x) in var.iter_mut().zip(&means[c * d..(c + 1) * d]).zip(train.features.row(r)) {
                let diff = x - m;
                *v += diff * diff;
            }
        }
        for v in var.iter_mut() {
            *v /= nc - 1.0;
        }
    }

    if variance_mode == VarianceMode::Pooled {
        // Scatter-weighted pooled variance per feature, copied to every class.
        let mut pooled = vec![0.0; d];
        let mut dof = 0.0;
        for (c, rows) in by_class.iter().enumerate() {
            let w = rows.len() as f64 - 1.0;
            dof += w;
            for (p, &v) in pooled.iter_mut().zip(&variances[c * d..(c + 1) * d]) {
                *p += w * v;
            }
        }
        for p in pooled.iter_mut() {
            *p /= dof;
        }
        for c in 0..c_count {
            variances[c * d..(c + 1) * d].copy_from_slice(&pooled);
        }
    }

    for v in variances.iter_mut() {
        *v = v.max(variance_floor);
    }

    Ok(GaussianNBModel {
        class_count: c_count,
        dim: d,
        means,
        variances,
        priors,
        variance_floor,
        variance_mode,
    })
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        // Every class vanished identically; fall back to uniform.
        return vec![1.0 / log_w.len() as f64; log_w.len()];
    }
    let weights: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Posterior under conditional independence: per-feature normal
/// log-densities summed per class, shifted, exponentiated and normalized.
pub fn predict_naive_bayes(m: &GaussianNBModel, x: &[f64]) -> Result<Posterior> {
    check_dim(m.dim, x.len())?;
    let mut log_w = Vec::with_capacity(m.class_count);
    for c in 0..m.class_count {
        let mean = m.mean(c);
        let var = m.variance(c);
        let mut ll = m.priors[c].ln();
        for j in 0..m.dim {
            let diff = x[j] - mean[j];
            ll += -0.5 * ((var[j].ln() + LN_2PI) + diff * diff / var[j]);
        }
        log_w.push(ll);
    }
    Posterior::new(normalize_log_weights(&log_w))
}

/// Full-covariance Gaussian model with cached precision and log-determinant.
#[derive(Debug, Clone)]
pub struct MultivariateGaussianModel {
    class_count: usize,
    dim: usize,
    means: Vec<DVector<f64>>,
    priors: Vec<f64>,
    shrinkage: f64,
    covariance_mode: CovarianceMode,
    shrink_target: ShrinkageTarget,
    /// One entry if pooled, `class_count` if per-class.
    covariances: Vec<DMatrix<f64>>,
    precisions: Vec<DMatrix<f64>>,
    ln_dets: Vec<f64>,
}

impl MultivariateGaussianModel {
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn covariance_mode(&self) -> CovarianceMode {
        self.covariance_mode
    }

    pub fn shrink_target(&self) -> ShrinkageTarget {
        self.shrink_target
    }

    pub fn mean(&self, class: usize) -> &DVector<f64> {
        &self.means[class]
    }

    pub fn covariance(&self, class: usize) -> &DMatrix<f64> {
        match self.covariance_mode {
            CovarianceMode::Pooled => &self.covariances[0],
            CovarianceMode::PerClass => &self.covariances[class],
        }
    }

    pub fn precision(&self, class: usize) -> &DMatrix<f64> {
        match self.covariance_mode {
            CovarianceMode::Pooled => &self.precisions[0],
            CovarianceMode::PerClass => &self.precisions[class],
        }
    }

    pub fn ln_det(&self, class: usize) -> f64 {
        match self.covariance_mode {
            CovarianceMode::Pooled => self.ln_dets[0],
            CovarianceMode::PerClass => self.ln_dets[class],
        }
    }

    fn from_covariances(
        class_count: usize,
        dim: usize,
        means: Vec<DVector<f64>>,
        priors: Vec<f64>,
        shrinkage: f64,
        covariance_mode: CovarianceMode,
        shrink_target: ShrinkageTarget,
        covariances: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let mut precisions = Vec::with_capacity(covariances.len());
        let mut ln_dets = Vec::with_capacity(covariances.len());
        for cov in &covariances {
            let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
                Error::Fit(format!(
                    "covariance is not positive definite after shrinkage {shrinkage}; a larger shrinkage is required"
                ))
            })?;
            let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            precisions.push(chol.inverse());
            ln_dets.push(ln_det);
        }
        Ok(MultivariateGaussianModel {
            class_count,
            dim,
            means,
            priors,
            shrinkage,
            covariance_mode,
            shrink_target,
            covariances,
            precisions,
            ln_dets,
        })
    }
}

fn apply_shrinkage(s: &DMatrix<f64>, lambda: f64, target: ShrinkageTarget) -> DMatrix<f64> {
    let d = s.nrows();
    let mut out = s * (1.0 - lambda);
    match target {
        ShrinkageTarget::ScaledIdentity => {
            let mean_var = s.trace() / d as f64;
            for j in 0..d {
                out[(j, j)] += lambda * mean_var;
            }
        }
        ShrinkageTarget::Diagonal { floor } => {
            for j in 0..d {
                out[(j, j)] += lambda * s[(j, j)].max(floor);
            }
        }
    }
    out
}

/// Fits per-class means and a shrinkage-regularized sample covariance
/// (pooled across classes or per class): `Σ̂ = (1−λ)S + λT`.
pub fn fit_multivariate(
    train: &LabeledDataset,
    shrinkage: f64,
    covariance_mode: CovarianceMode,
    shrink_target: ShrinkageTarget,
) -> Result<MultivariateGaussianModel> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::Fit(format!("shrinkage must be in [0, 1], got {shrinkage}")));
    }
    let by_class = class_slices(train)?;
    let c_count = train.class_count;
    let d = train.dim();
    let n = train.len() as f64;

    let mut means = Vec::with_capacity(c_count);
    let mut priors = Vec::with_capacity(c_count);
    let mut scatters: Vec<DMatrix<f64>> = Vec::with_capacity(c_count);
    for rows in &by_class {
        let nc = rows.len() as f64;
        priors.push(nc / n);
        let mut mean = DVector::zeros(d);
        for &r in rows {
            mean += DVector::from_column_slice(train.features.row(r));
        }
        mean /= nc;
        let mut scatter = DMatrix::zeros(d, d);
        for &r in rows {
            let diff = DVector::from_column_slice(train.features.row(r)) - &mean;
            scatter.ger(1.0, &diff, &diff, 1.0);
        }
        means.push(mean);
        scatters.push(scatter);
    }

    let covariances: Vec<DMatrix<f64>> = match covariance_mode {
        CovarianceMode::PerClass => by_class
            .iter()
            .zip(&scatters)
            .map(|(rows, sc)| {
                let s = sc / (rows.len() as f64 - 1.0);
                apply_shrinkage(&s, shrinkage, shrink_target)
            })
            .collect(),
        CovarianceMode::Pooled => {
            let mut total = DMatrix::zeros(d, d);
            let mut dof = 0.0;
            for (rows, sc) in by_class.iter().zip(&scatters) {
                total += sc;
                dof += rows.len() as f64 - 1.0;
            }
            let s = total / dof;
            vec![apply_shrinkage(&s, shrinkage, shrink_target)]
        }
    };

    MultivariateGaussianModel::from_covariances(
        c_count,
        d,
        means,
        priors,
        shrinkage,
        covariance_mode,
        shrink_target,
        covariances,
    )
}

/// Posterior from the full Gaussian log-likelihood
/// `−½[(x−μ)ᵀ P (x−μ) + ln det Σ + d ln 2π]` per class.
pub fn predict_multivariate(m: &MultivariateGaussianModel, x: &[f64]) -> Result<Posterior> {
    check_dim(m.dim, x.len())?;
    let xv = DVector::from_column_slice(x);
    let mut log_w = Vec::with_capacity(m.class_count);
    for c in 0..m.class_count {
        let diff = &xv - m.mean(c);
        let quad = (m.precision(c) * &diff).dot(&diff);
        let ll = -0.5 * (quad + m.ln_det(c) + m.dim as f64 * LN_2PI) + m.priors[c].ln();
        log_w.push(ll);
    }
    Posterior::new(normalize_log_weights(&log_w))
}

/// Coupled-product fusion over the naive-Bayes base statistics.
///
/// Each feature contributes a coupled-Gaussian (heavy-tailed for `κ < 0`)
/// density built from the base mean/variance; per feature the class
/// densities are normalized to evidence shares, and the shares are fused
/// across features with the coupled product. `κ = 0` takes the exact
/// naive-Bayes path.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledFusionModel {
    base: GaussianNBModel,
    kappa: Coupling,
    /// Cached `ln A_κ(σ_cj)` per class×feature; empty when `κ = 0`.
    ln_norms: Vec<f64>,
    /// Cached `κ/((2+κ)σ²_cj)` per class×feature; empty when `κ = 0`.
    kappa_scale: Vec<f64>,
}

impl CoupledFusionModel {
    /// Requires `κ > −2` so the per-feature density stays normalizable.
    pub fn new(base: GaussianNBModel, kappa: Coupling) -> Result<Self> {
        if kappa.get() <= -2.0 {
            return Err(Error::domain(format!(
                "coupled fusion requires kappa > -2, got {}",
                kappa.get()
            )));
        }
        let (ln_norms, kappa_scale) = if kappa.is_zero() {
            (Vec::new(), Vec::new())
        } else {
            let k = kappa.get();
            let total = base.class_count * base.dim;
            let mut ln_norms = Vec::with_capacity(total);
            let mut kappa_scale = Vec::with_capacity(total);
            for c in 0..base.class_count {
                for j in 0..base.dim {
                    let var = base.variance(c)[j];
                    let g = CoupledGaussian1D::new(0.0, var.sqrt(), kappa)?;
                    ln_norms.push(g.ln_normalizer());
                    kappa_scale.push(k / ((2.0 + k) * var));
                }
            }
            (ln_norms, kappa_scale)
        };
        Ok(CoupledFusionModel {
            base,
            kappa,
            ln_norms,
            kappa_scale,
        })
    }

    pub fn base(&self) -> &GaussianNBModel {
        &self.base
    }

    pub fn kappa(&self) -> Coupling {
        self.kappa
    }
}

/// Coupled Bayes rule: evidence shares fused by the coupled product, scaled
/// by the prior and normalized across classes in the log domain.
///
/// Classes whose coupled product truncates to zero receive probability
/// zero; if every class truncates identically the posterior is uniform.
pub fn predict_coupled(m: &CoupledFusionModel, x: &[f64]) -> Result<Posterior> {
    if m.kappa.is_zero() {
        return predict_naive_bayes(&m.base, x);
    }
    let base = &m.base;
    check_dim(base.dim, x.len())?;
    let k = m.kappa.get();
    let c_count = base.class_count;
    let d = base.dim;

    // Log density of each class's coupled-Gaussian marginal, class-major.
    let mut log_ev = vec![0.0_f64; c_count * d];
    for c in 0..c_count {
        let mean = base.mean(c);
        for j in 0..d {
            let diff = x[j] - mean[j];
            let ku = -diff * diff * m.kappa_scale[c * d + j];
            log_ev[c * d + j] = if ku <= -1.0 {
                f64::NEG_INFINITY
            } else {
                m.ln_norms[c * d + j] + f64::ln_1p(ku) / k
            };
        }
    }

    // Normalize per feature across classes (evidence shares, always <= 1).
    for j in 0..d {
        let max = (0..c_count)
            .map(|c| log_ev[c * d + j])
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            // No class explains this feature value; it carries no evidence.
            let flat = -(c_count as f64).ln();
            for c in 0..c_count {
                log_ev[c * d + j] = flat;
            }
            continue;
        }
        let lse = max
            + (0..c_count)
                .map(|c| (log_ev[c * d + j] - max).exp())
                .sum::<f64>()
                .ln();
        for c in 0..c_count {
            log_ev[c * d + j] -= lse;
        }
    }

    let mut log_w = Vec::with_capacity(c_count);
    let mut saturated = Vec::new();
    for c in 0..c_count {
        let lcp = log_coupled_product(&log_ev[c * d..(c + 1) * d], m.kappa)?;
        if lcp == f64::INFINITY {
            saturated.push(c);
            log_w.push(f64::INFINITY);
        } else {
            log_w.push(lcp + base.priors[c].ln());
        }
    }

    if !saturated.is_empty() {
        // Saturated classes swamp every finite one; split mass by prior.
        let total: f64 = saturated.iter().map(|&c| base.priors[c]).sum();
        let mut probs = vec![0.0; c_count];
        for &c in &saturated {
            probs[c] = base.priors[c] / total;
        }
        return Posterior::new(probs);
    }
    Posterior::new(normalize_log_weights(&log_w))
}

/// Grid search for the coupling that maximizes the geometric-mean accuracy
/// (`r = 0`) of the true-class posteriors on `data`.
///
/// Grid points at which the model is undefined (`κ ≤ −2`) are skipped.
/// Ties break toward the κ closest to zero.
pub fn select_coupling(
    base: &GaussianNBModel,
    data: &LabeledDataset,
    grid: &[f64],
    floor: f64,
) -> Result<(Coupling, f64)> {
    if grid.is_empty() {
        return Err(Error::domain("coupling grid must be nonempty"));
    }
    check_dim(base.dim(), data.dim())?;
    let mut best: Option<(Coupling, f64)> = None;
    for &kv in grid {
        let kappa = Coupling::new(kv)?;
        if kv <= -2.0 {
            continue;
        }
        let model = CoupledFusionModel::new(base.clone(), kappa)?;
        let score = score_coupled(&model, data, floor)?;
        best = match best {
            None => Some((kappa, score)),
            Some((bk, bs)) => {
                if score > bs || (score == bs && kv.abs() < bk.get().abs()) {
                    Some((kappa, score))
                } else {
                    Some((bk, bs))
                }
            }
        };
    }
    best.ok_or_else(|| Error::domain("no admissible grid point (all kappa <= -2)"))
}

/// Geometric-mean accuracy of a coupled model on a labeled dataset.
pub fn score_coupled(model: &CoupledFusionModel, data: &LabeledDataset, floor: f64) -> Result<f64> {
    let mut tp = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let post = predict_coupled(model, data.features.row(i))?;
        tp.push(post.probs()[data.labels[i]].clamp(0.0, 1.0));
    }
    let tcp = TrueClassProbabilities::new(tp)?;
    Ok(generalized_mean(&tcp, 0.0, floor))
}

/// Model family, for parameter counting and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NaiveBayes,
    Coupled,
    Multivariate,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::NaiveBayes, ModelKind::Coupled, ModelKind::Multivariate];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "naive-bayes",
            ModelKind::Coupled => "coupled",
            ModelKind::Multivariate => "multivariate",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters per class-model template: `2d` for naive Bayes (mean and
/// variance per feature), one more for the coupling, `d + d²` for the full
/// covariance model.
pub fn parameter_count(kind: ModelKind, d: usize) -> u64 {
    let d = d as u64;
    match kind {
        ModelKind::NaiveBayes => 2 * d,
        ModelKind::Coupled => 2 * d + 1,
        ModelKind::Multivariate => d + d * d,
    }
}

/// Default coupling sweep: 0 to −2 in increments of −0.05.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..=40).map(|i| -0.05 * i as f64).collect()
}
