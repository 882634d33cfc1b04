//! Coupled probability (escort) transform, coupled entropy and moments, and
//! the one-dimensional coupled Gaussian.
//!
//! The coupled Gaussian is the maximum-coupled-entropy density
//!
//! ```text
//! p(x) = A_κ · exp_κ( −(x−μ)² / ((2+κ)σ²) )
//! ```
//!
//! For `κ < 0` it is heavy-tailed and coincides exactly with a Student-t
//! density of `ν = −(2+κ)/κ` degrees of freedom at scale `σ`, which gives
//! the closed-form normalizer. For `κ > 0` the support is the compact
//! interval `|x−μ| ≤ σ√((2+κ)/κ)` and the normalizer is obtained by
//! adaptive quadrature. `κ = 0` is the ordinary normal density.

use serde::{Deserialize, Serialize};

use crate::algebra::{coupled_log, Coupling};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// A finite discrete probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates nonnegativity and normalization (Σp = 1 within 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("distribution must have at least one state"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("probabilities must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(DiscreteDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        DiscreteDistribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Escort transform: `P_i ∝ p_i^{1−κ}`, renormalized.
///
/// For `κ > 1` the exponent is negative, so zero-probability states are a
/// domain error; otherwise they stay zero.
pub fn coupled_probability(d: &DiscreteDistribution, k: Coupling) -> Result<DiscreteDistribution> {
    let e = 1.0 - k.get();
    if e < 0.0 && d.probs.iter().any(|&p| p == 0.0) {
        return Err(Error::domain(
            "coupled_probability: zero probability with exponent 1 - kappa < 0",
        ));
    }
    if k.is_zero() {
        return Ok(d.clone());
    }
    let weights: Vec<f64> = d.probs.iter().map(|&p| p.powf(e)).collect();
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Numeric(format!(
            "coupled_probability: escort weights sum to {total}"
        )));
    }
    Ok(DiscreteDistribution {
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

/// Coupled (normalized Tsallis) entropy `S_κ = −Σ P_i^{(κ)} ln_κ(p_i)`.
///
/// Zero-probability states contribute nothing: their escort weight vanishes
/// faster than `ln_κ` diverges.
pub fn coupled_entropy(d: &DiscreteDistribution, k: Coupling) -> Result<f64> {
    let escort = coupled_probability(d, k)?;
    let mut s = 0.0;
    for (&p, &w) in d.probs.iter().zip(escort.probs.iter()) {
        if p > 0.0 {
            s += w * coupled_log(p, k)?;
        }
    }
    Ok(-s)
}

/// Unnormalized escort moments `(Σ xᵢ pᵢ^{1−κ}, Σ xᵢ² pᵢ^{1−κ})`.
pub fn coupled_moments(xs: &[f64], d: &DiscreteDistribution, k: Coupling) -> Result<(f64, f64)> {
    if xs.len() != d.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: xs.len(),
        });
    }
    let e = 1.0 - k.get();
    if e < 0.0 && d.probs.iter().any(|&p| p == 0.0) {
        return Err(Error::domain("coupled_moments: zero probability with exponent 1 - kappa < 0"));
    }
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (&x, &p) in xs.iter().zip(d.probs.iter()) {
        let w = if k.is_zero() { p } else { p.powf(e) };
        m1 += x * w;
        m2 += x * x * w;
    }
    Ok((m1, m2))
}

/// One-dimensional coupled Gaussian with location `mu`, scale `sigma` and
/// coupling `kappa > −2` (the tail exponent `2/κ` must keep the density
/// integrable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledGaussian1D {
    pub mu: f64,
    pub sigma: f64,
    pub kappa: Coupling,
}

impl CoupledGaussian1D {
    pub fn new(mu: f64, sigma: f64, kappa: Coupling) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::domain(format!(
                "coupled Gaussian requires finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        if kappa.get() <= -2.0 {
            return Err(Error::domain(format!(
                "coupled Gaussian is not normalizable for kappa <= -2, got {}",
                kappa.get()
            )));
        }
        Ok(CoupledGaussian1D { mu, sigma, kappa })
    }

    /// Degrees of freedom of the equivalent Student-t shape (`κ < 0` only).
    pub fn equivalent_dof(&self) -> Option<f64> {
        let k = self.kappa.get();
        (k < 0.0).then(|| -(2.0 + k) / k)
    }

    /// Half-width of the support for `κ > 0`; `None` for full support.
    pub fn support_halfwidth(&self) -> Option<f64> {
        let k = self.kappa.get();
        (k > 0.0).then(|| self.sigma * ((2.0 + k) / k).sqrt())
    }

    /// Normalization constant `A_κ` making the density integrate to one.
    ///
    /// * `κ < 0`: Student-t closed form with `ν = −(2+κ)/κ`,
    ///   `A = Γ((ν+1)/2) / (σ √(νπ) Γ(ν/2))`.
    /// * `κ = 0`: `1/(σ√(2π))`.
    /// * `κ > 0`: reciprocal of the kernel integral over the compact
    ///   support, by adaptive quadrature to 1e-10 relative.
    pub fn normalizer(&self) -> f64 {
        self.ln_normalizer().exp()
    }

    /// `ln A_κ`; preferred in likelihood sums.
    pub fn ln_normalizer(&self) -> f64 {
        let k = self.kappa.get();
        if k == 0.0 {
            return -(self.sigma.ln() + 0.5 * LN_2PI);
        }
        if k < 0.0 {
            let nu = -(2.0 + k) / k;
            return libm::lgamma(0.5 * (nu + 1.0))
                - libm::lgamma(0.5 * nu)
                - 0.5 * (nu * std::f64::consts::PI).ln()
                - self.sigma.ln();
        }
        // Compact support: integrate the unnormalized kernel.
        let half = self.support_halfwidth().expect("kappa > 0 has compact support");
        let denom = (2.0 + k) * self.sigma * self.sigma;
        let integral = adaptive_simpson(
            &|x: f64| {
                let base = 1.0 - k * x * x / denom;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(1.0 / k)
                }
            },
            -half,
            half,
            1e-12,
            60,
        );
        -integral.ln()
    }

    /// Log density. `−∞` outside the support when `κ > 0`.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let k = self.kappa.get();
        let z = (x - self.mu) / self.sigma;
        if k == 0.0 {
            return self.ln_normalizer() - 0.5 * z * z;
        }
        let u = -z * z / (2.0 + k);
        let ku = k * u;
        if ku <= -1.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_normalizer() + f64::ln_1p(ku) / k
    }

    /// Density `A_κ · exp_κ(−(x−μ)²/((2+κ)σ²))`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

/// Adaptive Simpson integration with a fixed absolute/relative tolerance mix.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-16 * whole.abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
