//! Shared test-only utilities: double-double (~31 significant digit)
//! arithmetic for extended-precision oracles, an independent quadrature
//! routine, and synthetic data generators.
//!
//! Everything here is deliberately implementation-independent of the crate
//! paths it is used to check.
#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Double-double float: value = hi + lo, |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.3190468138462996e-17,
    };

    pub fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2b) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2b + t2);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(Dd::from(q2)));
        let q3 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2 + q3);
        Dd { hi, lo }
    }

    pub fn scale(self, v: f64) -> Dd {
        self.mul(Dd::from(v))
    }

    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// exp(self) by argument reduction and a Taylor tail.
    pub fn exp(self) -> Dd {
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let n = (self.hi / Dd::LN2.hi).round();
        let r = self.sub(Dd::LN2.scale(n));
        // Taylor sum of exp(r) for |r| <= ln2/2.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..40 {
            term = term.mul(r).div(Dd::from(k as f64));
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 * sum.hi.abs() {
                break;
            }
        }
        let scale = 2.0f64.powi(n as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// Natural log by Newton refinement of the f64 estimate.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "dd ln of non-positive value");
        let mut y = Dd::from(self.hi.ln());
        // y <- y + x*exp(-y) - 1, twice.
        for _ in 0..2 {
            let e = Dd {
                hi: -y.hi,
                lo: -y.lo,
            }
            .exp();
            y = y.add(self.mul(e)).sub(Dd::ONE);
        }
        y
    }

    /// self^p for real p via exp(p ln self).
    pub fn powf(self, p: f64) -> Dd {
        self.ln().scale(p).exp()
    }
}

/// Composite Simpson on a fixed uniform grid; plain and independent of the
/// crate's adaptive routine.
pub fn simpson_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        sum += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// ∫_{-∞}^{∞} f via the substitution x = sinh t, which keeps the
/// transformed integrand exponentially decaying even for very heavy
/// polynomial tails (any tail exponent > 1, i.e. any normalizable case).
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, panels: usize) -> f64 {
    let t_max = 120.0;
    simpson_fixed(
        |t: f64| {
            let x = t.sinh();
            f(x) * t.cosh()
        },
        -t_max,
        t_max,
        panels,
    )
}

/// Uniform f64 in [0, 1).
pub fn unit(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform in [lo, hi).
pub fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = unit(rng).max(1e-15);
    let u2 = unit(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random probability vector of length n (normalized exponentials).
pub fn random_simplex(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -unit(rng).max(1e-12).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn dd_round_trip_exp_ln() {
        for v in [1e-8, 0.37, 1.0, 2.5, 731.0] {
            let x = Dd::from(v);
            let r = x.ln().exp().to_f64();
            assert!((r - v).abs() / v < 1e-28 * v.abs().max(1.0) + 1e-30, "{v} -> {r}");
        }
    }

    #[test]
    fn dd_exp_matches_f64_at_f64_precision() {
        for v in [-700.0, -5.0, 0.0, 1.0, 200.0] {
            let got = Dd::from(v).exp().to_f64();
            let want = v.exp();
            if want > 0.0 {
                assert!((got - want).abs() / want < 1e-14, "{v}: {got} vs {want}");
            }
        }
    }
}
