//! The coupled pseudo-algebra: deformed logarithm/exponential and the
//! product, sum, power and their inverses built from them.
//!
//! For coupling `κ ≠ 0` the deformed pair is
//!
//! ```text
//! ln_κ(x)  = (x^κ − 1) / κ            exp_κ(x) = (1 + κx)^{1/κ}
//! ```
//!
//! and the derived operations are
//!
//! ```text
//! x ⊗_κ y = (x^κ + y^κ − 1)^{1/κ}     x ⊕_κ y = x + y + κxy
//! ```
//!
//! `κ = 0` always dispatches to the exact classical branch (`ln`, `exp`,
//! product, sum); the deformed formulas are never evaluated at `κ = 0`.
//!
//! When the base `1 + κx` (or its n-ary analogue) is not positive the power
//! is undefined over the reals. Consistent with the limit of `t^{1/κ}` as
//! `t → 0⁺`, the operations truncate to `0` when `1/κ > 0` and saturate to
//! `+∞` when `1/κ < 0`.
//!
//! All operations are pure functions; the non-zero-κ paths are written with
//! `expm1`/`ln_1p` so that round trips like `exp_κ(ln_κ x)` stay accurate to
//! a few ulp for every `κ`, including `|κ|` far below 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real coupling parameter of the deformed algebra.
///
/// `κ = 0` is the classical (uncoupled) point, `κ < 0` produces heavy-tailed
/// behavior, `κ > 0` compact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coupling(f64);

impl Coupling {
    pub const ZERO: Coupling = Coupling(0.0);

    /// Rejects NaN and infinite values.
    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::domain(format!("coupling must be finite, got {kappa}")));
        }
        Ok(Coupling(kappa))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for Coupling {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Coupling::new(v)
    }
}

/// Value of a truncated power `base^{1/κ}` when `base ≤ 0`.
#[inline]
fn truncated(kappa: f64) -> f64 {
    if kappa > 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(1 + Σ terms)^{1/κ}` with truncation semantics.
///
/// The base is accumulated with compensated summation and the leading 1 is
/// carried as a separate piece, so a base that nearly cancels (the regime
/// where `x^κ` is far below 1) still comes out with full relative
/// precision. Terms may arrive in exact two-piece form.
fn deformed_base_root(terms: impl IntoIterator<Item = f64>, kappa: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        if t == f64::INFINITY {
            return if kappa > 0.0 { f64::INFINITY } else { truncated(kappa) };
        }
        if t == f64::NEG_INFINITY {
            return truncated(kappa);
        }
        let (s, c) = two_sum(sum, t);
        sum = s;
        comp += c;
    }
    let (b_hi, b_lo) = two_sum(1.0, sum);
    let tail = b_lo + comp;
    let base = b_hi + tail;
    if base <= 0.0 {
        return truncated(kappa);
    }
    let ln_base = if (0.5..2.0).contains(&base) {
        // b_hi − 1 is exact here (Sterbenz), keeping ln(base) sharp near 1.
        f64::ln_1p((b_hi - 1.0) + tail)
    } else {
        base.ln()
    };
    f64::exp(ln_base / kappa)
}

/// Coupled logarithm `ln_κ(x) = (x^κ − 1)/κ`; natural log at `κ = 0`.
pub fn coupled_log(x: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("coupled_log requires finite x > 0, got {x}")));
    }
    if k.is_zero() {
        return Ok(x.ln());
    }
    // expm1 keeps (x^κ − 1) accurate for x near 1 and |κ| near 0.
    Ok(f64::exp_m1(k.get() * x.ln()) / k.get())
}

/// Coupled exponential `exp_κ(x) = (1 + κx)^{1/κ}`; `e^x` at `κ = 0`.
///
/// Returns the truncated value (`0` for `κ > 0`, `+∞` for `κ < 0`) when
/// `1 + κx ≤ 0`.
pub fn coupled_exp(x: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("coupled_exp requires finite x, got {x}")));
    }
    if k.is_zero() {
        return Ok(x.exp());
    }
    // κx in exact two-piece form: the base 1+κx survives near-cancellation.
    let p = k.get() * x;
    let e = f64::mul_add(k.get(), x, -p);
    Ok(deformed_base_root([p, e], k.get()))
}

/// Coupled product over a sequence of nonnegative reals:
/// `(Σ xⱼ^κ − (n−1))^{1/κ}` for `κ ≠ 0`, ordinary product at `κ = 0`.
///
/// A zero element is only admissible when `x^κ` is finite, i.e. `κ > 0`
/// (or `κ = 0`, where the classical product applies).
pub fn coupled_product(xs: &[f64], k: Coupling) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::domain("coupled_product requires at least one element"));
    }
    for &x in xs {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::domain(format!("coupled_product requires finite x >= 0, got {x}")));
        }
        if x == 0.0 && k.get() < 0.0 {
            return Err(Error::domain("coupled_product: zero element with negative coupling"));
        }
    }
    if k.is_zero() {
        return Ok(xs.iter().product());
    }
    // Σ x^κ − (n−1) = 1 + Σ (x^κ − 1), each term cancellation-free.
    let kappa = k.get();
    Ok(deformed_base_root(
        xs.iter().map(|&x| f64::exp_m1(kappa * x.ln())),
        kappa,
    ))
}

/// Coupled sum `x ⊕_κ y = x + y + κxy`.
pub fn coupled_sum(x: f64, y: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::domain("coupled_sum requires finite inputs"));
    }
    Ok(x + y + k.get() * x * y)
}

/// Coupled power `x^{⊗κ a} = (a·x^κ − (a−1))^{1/κ}`; `x^a` at `κ = 0`.
pub fn coupled_power(x: f64, a: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("coupled_power requires finite x >= 0, got {x}")));
    }
    if !a.is_finite() {
        return Err(Error::domain("coupled_power requires finite exponent"));
    }
    if x == 0.0 && k.get() < 0.0 {
        return Err(Error::domain("coupled_power: zero base with negative coupling"));
    }
    if k.is_zero() {
        return Ok(x.powf(a));
    }
    let kappa = k.get();
    // a·x^κ − (a−1) = 1 + a·(x^κ − 1), the product in exact two-piece form.
    let em1 = f64::exp_m1(kappa * x.ln());
    let p = a * em1;
    let e = f64::mul_add(a, em1, -p);
    Ok(deformed_base_root([p, e], kappa))
}

/// Inverse of [`coupled_sum`] in its second argument:
/// `(x − y)/(1 + κy)`, so `coupled_subtract(coupled_sum(x, y), y) = x`.
pub fn coupled_subtract(x: f64, y: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::domain("coupled_subtract requires finite inputs"));
    }
    let denom = 1.0 + k.get() * y;
    if denom == 0.0 {
        return Err(Error::Singularity(format!(
            "coupled_subtract undefined at 1 + kappa*y = 0 (y = {y})"
        )));
    }
    Ok((x - y) / denom)
}

/// Inverse of the binary [`coupled_product`]:
/// `(x^κ − y^κ + 1)^{1/κ}`, with `x/y` at `κ = 0`.
pub fn coupled_divide(x: f64, y: f64, k: Coupling) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!("coupled_divide requires finite x >= 0, got {x}")));
    }
    if !y.is_finite() || y <= 0.0 {
        return Err(Error::domain(format!("coupled_divide requires finite y > 0, got {y}")));
    }
    if k.is_zero() {
        return Ok(x / y);
    }
    let kappa = k.get();
    if x == 0.0 && kappa < 0.0 {
        return Err(Error::domain("coupled_divide: zero numerator with negative coupling"));
    }
    Ok(deformed_base_root(
        [
            f64::exp_m1(kappa * x.ln()),
            -f64::exp_m1(kappa * y.ln()),
        ],
        kappa,
    ))
}

/// Natural log of `coupled_product(exp(logs), κ)`, computed without leaving
/// the log domain.
///
/// For `κ ≠ 0` the factor powers are max-shifted before exponentiation:
/// with `M = max_j(κ Lⱼ)`,
///
/// ```text
/// s = Σⱼ e^{κLⱼ − M} − (n−1) e^{−M}
/// ln ⊗_κ = (M + ln s)/κ          when s > 0
/// ```
///
/// and the truncated cases map to `−∞` (κ > 0) or `+∞` (κ < 0). At `κ = 0`
/// this is just `Σ Lⱼ`. Inputs far below the underflow threshold of `exp`
/// (e.g. log densities near −700) are handled exactly like any other.
pub fn log_coupled_product(logs: &[f64], k: Coupling) -> Result<f64> {
    if logs.is_empty() {
        return Err(Error::domain("log_coupled_product requires at least one element"));
    }
    if logs.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::domain("log_coupled_product requires logs < +inf"));
    }
    if k.is_zero() {
        return Ok(logs.iter().sum());
    }
    let kappa = k.get();
    if kappa < 0.0 && logs.iter().any(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::domain("log_coupled_product: zero factor with negative coupling"));
    }
    if logs.len() == 1 {
        return Ok(logs[0]);
    }
    let m = logs
        .iter()
        .map(|&l| kappa * l)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        // Every factor is zero (possible only for κ > 0).
        return Ok(f64::NEG_INFINITY);
    }
    let n_minus_1 = (logs.len() - 1) as f64;
    let s: f64 = logs.iter().map(|&l| f64::exp(kappa * l - m)).sum::<f64>()
        - n_minus_1 * f64::exp(-m);
    if s <= 0.0 {
        return Ok(if kappa > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY });
    }
    Ok((m + s.ln()) / kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> Coupling {
        Coupling::new(v).unwrap()
    }

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let scale = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() / scale <= tol,
            "got {actual}, want {expected} (rel tol {tol})"
        );
    }

    #[test]
    fn coupling_rejects_non_finite() {
        assert!(Coupling::new(f64::NAN).is_err());
        assert!(Coupling::new(f64::INFINITY).is_err());
        assert!(Coupling::new(-1.5).is_ok());
    }

    #[test]
    fn log_classical_and_deformed() {
        assert_rel(coupled_log(std::f64::consts::E, k(0.0)).unwrap(), 1.0, 1e-15);
        assert_rel(coupled_log(1.0, k(-0.7)).unwrap(), 0.0, 1e-15);
        assert_rel(coupled_log(4.0, k(0.5)).unwrap(), 2.0, 1e-15);
        assert!(coupled_log(0.0, k(0.5)).is_err());
        assert!(coupled_log(-1.0, k(0.0)).is_err());
        assert!(coupled_log(f64::INFINITY, k(0.0)).is_err());
    }

    #[test]
    fn exp_classical_deformed_truncation() {
        assert_rel(coupled_exp(0.0, k(1.3)).unwrap(), 1.0, 1e-15);
        assert_rel(coupled_exp(0.0, k(0.0)).unwrap(), 1.0, 1e-15);
        assert_rel(coupled_exp(2.0, k(1.0)).unwrap(), 3.0, 1e-15);
        assert_rel(coupled_exp(0.5, k(-1.0)).unwrap(), 2.0, 1e-15);
        // truncation (1+κx)_+ with κ>0
        assert_eq!(coupled_exp(-2.0, k(1.0)).unwrap(), 0.0);
        // saturation with κ<0
        assert_eq!(coupled_exp(3.0, k(-1.0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn product_examples() {
        assert_rel(coupled_product(&[2.0, 3.0], k(1.0)).unwrap(), 4.0, 1e-15);
        assert_rel(coupled_product(&[7.5, 1.0], k(-0.8)).unwrap(), 7.5, 1e-12);
        assert_rel(coupled_product(&[2.0, 3.0], k(0.0)).unwrap(), 6.0, 1e-15);
        assert!(coupled_product(&[], k(0.0)).is_err());
        assert!(coupled_product(&[0.0, 1.0], k(-0.5)).is_err());
        // zero with positive coupling is fine: 0^κ = 0
        let v = coupled_product(&[0.0, 1.0], k(0.5)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sum_examples() {
        assert_rel(coupled_sum(4.2, 0.0, k(-1.1)).unwrap(), 4.2, 1e-15);
        assert_rel(coupled_sum(1.0, 1.0, k(1.0)).unwrap(), 3.0, 1e-15);
        assert_rel(coupled_sum(1.0, 2.0, k(0.0)).unwrap(), 3.0, 1e-15);
    }

    #[test]
    fn power_examples() {
        assert_rel(coupled_power(9.1, 1.0, k(-0.3)).unwrap(), 9.1, 1e-12);
        assert_rel(coupled_power(2.0, 3.0, k(1.0)).unwrap(), 4.0, 1e-15);
        assert_rel(coupled_power(2.0, 3.0, k(0.0)).unwrap(), 8.0, 1e-15);
    }

    #[test]
    fn subtract_inverts_sum() {
        assert_rel(coupled_subtract(6.3, 0.0, k(0.9)).unwrap(), 6.3, 1e-15);
        assert_rel(coupled_subtract(3.0, 1.0, k(1.0)).unwrap(), 1.0, 1e-15);
        assert_rel(coupled_subtract(5.0, 2.0, k(0.0)).unwrap(), 3.0, 1e-15);
        assert!(coupled_subtract(1.0, 2.0, k(-0.5)).is_err());
    }

    #[test]
    fn divide_inverts_product() {
        assert_rel(coupled_divide(4.0, 1.0, k(0.7)).unwrap(), 4.0, 1e-12);
        assert_rel(coupled_divide(4.0, 3.0, k(1.0)).unwrap(), 2.0, 1e-15);
        assert_rel(coupled_divide(6.0, 3.0, k(0.0)).unwrap(), 2.0, 1e-15);
        assert!(coupled_divide(1.0, 0.0, k(0.0)).is_err());
        assert!(coupled_divide(1.0, -2.0, k(0.5)).is_err());
    }

    #[test]
    fn log_product_single_factor_is_exact() {
        for &l in &[-700.0, -1.0, 0.0, 3.5] {
            for &kv in &[-1.5, -0.5, 0.0, 0.5, 2.0] {
                assert_eq!(log_coupled_product(&[l], k(kv)).unwrap(), l);
            }
        }
    }

    #[test]
    fn log_product_matches_plain_product() {
        let got = log_coupled_product(&[2.0f64.ln(), 3.0f64.ln()], k(1.0)).unwrap();
        assert_rel(got, 4.0f64.ln(), 1e-14);
        let got = log_coupled_product(&[2.0f64.ln(), 3.0f64.ln()], k(0.0)).unwrap();
        assert_rel(got, 6.0f64.ln(), 1e-14);
    }

    #[test]
    fn log_product_deep_underflow_matches_extended_precision() {
        // Reference value from 60-digit decimal evaluation of
        // (e^{-350} + e^{-300} + e^{-325} - 2)^{-2} in the log domain.
        let got = log_coupled_product(&[-700.0, -600.0, -650.0], k(-0.5)).unwrap();
        assert_rel(got, -700.00000000002777588773, 1e-10);
    }

    #[test]
    fn log_product_positive_kappa_reference() {
        let got = log_coupled_product(&[-0.5, -0.3], k(0.8)).unwrap();
        assert_rel(got, -0.97898235427577241611, 1e-13);
    }

    #[test]
    fn log_product_truncation_signs() {
        // (e^{-3.5·0.35} + ... − 2) < 0 for these inputs: truncated.
        let got = log_coupled_product(&[-3.5, -1.2, -2.7], k(0.35)).unwrap();
        assert_eq!(got, f64::NEG_INFINITY);
        let got = log_coupled_product(&[3.5, 1.2, 2.7], k(-0.35)).unwrap();
        assert_eq!(got, f64::INFINITY);
    }

    #[test]
    fn nary_product_equals_binary_fold() {
        let xs = [0.3, 1.7, 2.9, 0.04, 5.5];
        for &kv in &[-1.5, -0.6, 0.4, 1.0, 2.0] {
            let nary = coupled_product(&xs, k(kv)).unwrap();
            let fold = xs[1..]
                .iter()
                .try_fold(xs[0], |acc, &x| coupled_product(&[acc, x], k(kv)))
                .unwrap();
            assert_rel(nary, fold, 1e-12);
        }
    }
}
