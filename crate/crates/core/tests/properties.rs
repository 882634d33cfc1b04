//! Property-based invariants of the algebra, the distributions, the
//! metrics, and the classifier posteriors.

mod support;

use proptest::prelude::*;

use coupled_fusion::algebra::{
    coupled_exp, coupled_log, coupled_power, coupled_product, coupled_subtract, coupled_sum,
    Coupling,
};
use coupled_fusion::classifiers::{
    fit_naive_bayes, predict_coupled, predict_naive_bayes, CoupledFusionModel, VarianceMode,
};
use coupled_fusion::dataset::{LabeledDataset, Matrix};
use coupled_fusion::dist::{
    coupled_entropy, coupled_probability, CoupledGaussian1D, DiscreteDistribution,
};
use coupled_fusion::metrics::{generalized_mean, TrueClassProbabilities};

fn k(v: f64) -> Coupling {
    Coupling::new(v).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn inverse_pair(x in 1e-3f64..1e3, kv in -2.0f64..2.0) {
        // Once ln_κ(x) is rounded to one f64, the base 1 + κy = x^κ is only
        // recoverable to ~ε/(x^κ·|κ|) relative; below κ·ln x ≈ −9.8 that
        // exceeds the 1e-12 budget for any implementation.
        prop_assume!(kv * x.ln() >= -9.0);
        let y = coupled_log(x, k(kv)).unwrap();
        let back = coupled_exp(y, k(kv)).unwrap();
        prop_assert!(rel_close(back, x, 1e-12), "x={x} kv={kv} back={back}");
    }

    #[test]
    fn log_homomorphism(x in 0.05f64..20.0, y in 0.05f64..20.0, kv in -2.0f64..2.0) {
        let lhs = coupled_log(x * y, k(kv)).unwrap();
        let rhs = coupled_sum(
            coupled_log(x, k(kv)).unwrap(),
            coupled_log(y, k(kv)).unwrap(),
            k(kv),
        )
        .unwrap();
        prop_assert!(rel_close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn exp_homomorphism(a in -3.0f64..3.0, b in -3.0f64..3.0, kv in -2.0f64..2.0) {
        let sum = coupled_sum(a, b, k(kv)).unwrap();
        let lhs = coupled_exp(sum, k(kv)).unwrap();
        let rhs = coupled_exp(a, k(kv)).unwrap() * coupled_exp(b, k(kv)).unwrap();
        prop_assume!(lhs.is_finite() && rhs.is_finite() && lhs > 0.0 && rhs > 0.0);
        prop_assert!(rel_close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn product_assoc_comm(
        x in 0.3f64..8.0,
        y in 0.3f64..8.0,
        z in 0.3f64..8.0,
        kv in -2.0f64..2.0,
    ) {
        let kc = k(kv);
        let xy = coupled_product(&[x, y], kc).unwrap();
        let yx = coupled_product(&[y, x], kc).unwrap();
        prop_assert!(xy == yx || rel_close(xy, yx, 1e-12));
        prop_assume!(xy.is_finite() && xy > 0.0);
        let yz = coupled_product(&[y, z], kc).unwrap();
        prop_assume!(yz.is_finite() && yz > 0.0);
        let left = coupled_product(&[xy, z], kc).unwrap();
        let right = coupled_product(&[x, yz], kc).unwrap();
        prop_assume!(left.is_finite() && left > 0.0 && right.is_finite() && right > 0.0);
        prop_assert!(rel_close(left, right, 1e-12), "{left} vs {right}");
    }

    #[test]
    fn sum_assoc_comm(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, kv in -2.0f64..2.0) {
        let kc = k(kv);
        let ab = coupled_sum(a, b, kc).unwrap();
        let ba = coupled_sum(b, a, kc).unwrap();
        prop_assert!(rel_close(ab, ba, 1e-12));
        let left = coupled_sum(ab, c, kc).unwrap();
        let right = coupled_sum(a, coupled_sum(b, c, kc).unwrap(), kc).unwrap();
        prop_assert!(rel_close(left, right, 1e-12), "{left} vs {right}");
    }

    #[test]
    fn kappa_to_zero_continuity(x in 0.1f64..10.0, sign in proptest::bool::ANY) {
        let kv = if sign { 1e-6 } else { -1e-6 };
        let log_dev = coupled_log(x, k(kv)).unwrap();
        prop_assert!(rel_close(log_dev, x.ln(), 1e-5));
        let exp_dev = coupled_exp(x.ln(), k(kv)).unwrap();
        prop_assert!(rel_close(exp_dev, x, 1e-5));
        let prod_dev = coupled_product(&[x, 2.0 * x], k(kv)).unwrap();
        prop_assert!(rel_close(prod_dev, 2.0 * x * x, 1e-5));
    }

    #[test]
    fn power_is_repeated_product(x in 0.2f64..6.0, a in 1usize..6, kv in -2.0f64..2.0) {
        let kc = k(kv);
        let pow = coupled_power(x, a as f64, kc).unwrap();
        let copies = vec![x; a];
        let prod = coupled_product(&copies, kc).unwrap();
        if pow.is_finite() && prod.is_finite() {
            prop_assert!(rel_close(pow, prod, 1e-12), "{pow} vs {prod}");
        } else {
            prop_assert_eq!(pow.is_finite(), prod.is_finite());
        }
    }

    #[test]
    fn subtract_then_sum_round_trip(x in -5.0f64..5.0, y in -5.0f64..5.0, kv in -2.0f64..2.0) {
        prop_assume!((1.0 + kv * y).abs() > 1e-6);
        let s = coupled_sum(x, y, k(kv)).unwrap();
        let back = coupled_subtract(s, y, k(kv)).unwrap();
        prop_assert!((back - x).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn escort_is_normalized_and_order_preserving(
        raw in proptest::collection::vec(0.01f64..1.0, 2..12),
        kv in -2.0f64..0.99,
    ) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let d = DiscreteDistribution::new(probs.clone()).unwrap();
        let escort = coupled_probability(&d, k(kv)).unwrap();
        let sum: f64 = escort.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for i in 0..probs.len() {
            for j in 0..probs.len() {
                if probs[i] >= probs[j] {
                    prop_assert!(escort.probs()[i] >= escort.probs()[j] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn entropy_at_zero_is_shannon(raw in proptest::collection::vec(0.01f64..1.0, 2..10)) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let d = DiscreteDistribution::new(probs.clone()).unwrap();
        let s = coupled_entropy(&d, k(0.0)).unwrap();
        let shannon: f64 = -probs.iter().map(|&p| p * p.ln()).sum::<f64>();
        prop_assert!((s - shannon).abs() <= 1e-10);
    }

    #[test]
    fn power_mean_monotone_and_bounded(
        raw in proptest::collection::vec(1e-6f64..1.0, 2..40),
        r1 in -2.0f64..2.0,
        r2 in -2.0f64..2.0,
    ) {
        let p = TrueClassProbabilities::new(raw.clone()).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let m_lo = generalized_mean(&p, lo, 0.0);
        let m_hi = generalized_mean(&p, hi, 0.0);
        prop_assert!(m_lo <= m_hi + 1e-12, "gm({lo})={m_lo} > gm({hi})={m_hi}");
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = raw.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!(m_lo >= min - 1e-12 && m_lo <= max + 1e-12);
        prop_assert!(m_hi >= min - 1e-12 && m_hi <= max + 1e-12);
    }

    #[test]
    fn entropy_exponential_identity(
        raw in proptest::collection::vec(0.01f64..1.0, 2..20),
        kv in -1.5f64..1.5,
    ) {
        // With equal weights 1/N, exp_κ(−S_κ) collapses to the generalized
        // mean of the values at risk bias κ.
        let n = raw.len() as f64;
        let kc = k(kv);
        let s = -raw
            .iter()
            .map(|&p| coupled_log(p, kc).unwrap() / n)
            .sum::<f64>();
        let lhs = coupled_exp(-s, kc).unwrap();
        let p = TrueClassProbabilities::new(raw.clone()).unwrap();
        let rhs = generalized_mean(&p, kv, 0.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn geometric_limit_continuity(raw in proptest::collection::vec(1e-6f64..1.0, 2..30)) {
        let p = TrueClassProbabilities::new(raw).unwrap();
        let g0 = generalized_mean(&p, 0.0, 1e-12);
        let g_eps = generalized_mean(&p, 1e-8, 1e-12);
        prop_assert!((g0 - g_eps).abs() < 1e-6);
    }

    #[test]
    fn posteriors_normalized_for_all_models(
        seed in 0u64..500,
        kv in -1.5f64..0.5,
    ) {
        let mut rng = support::rng(seed);
        let classes = 3usize;
        let d = 4usize;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            for _ in 0..8 {
                rows.push((0..d).map(|j| support::normal(&mut rng) + (c * j) as f64 * 0.5).collect());
                labels.push(c);
            }
        }
        let ds = LabeledDataset::new(Matrix::from_rows(rows).unwrap(), labels, classes).unwrap();
        let nb = fit_naive_bayes(&ds, 1e-9, VarianceMode::PerClass).unwrap();
        let cm = CoupledFusionModel::new(nb.clone(), k(kv)).unwrap();
        let x: Vec<f64> = (0..d).map(|_| 4.0 * support::normal(&mut rng)).collect();
        for post in [predict_naive_bayes(&nb, &x).unwrap(), predict_coupled(&cm, &x).unwrap()] {
            let sum: f64 = post.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(post.probs().iter().all(|&p| p >= 0.0));
        }
    }
}

// Deterministic spot checks that pair with the properties above.

#[test]
fn uniform_maximizes_coupled_entropy_three_states() {
    // Dense grid over the 3-simplex for a few couplings in (−1, 1).
    for &kv in &[-0.9, -0.4, 0.3, 0.9] {
        let kc = k(kv);
        let uniform = DiscreteDistribution::uniform(3);
        let s_uniform = coupled_entropy(&uniform, kc).unwrap();
        let steps = 60;
        for i in 1..steps {
            for j in 1..(steps - i) {
                let p1 = i as f64 / steps as f64;
                let p2 = j as f64 / steps as f64;
                let p3 = 1.0 - p1 - p2;
                if p3 <= 0.0 {
                    continue;
                }
                let d = DiscreteDistribution::new(vec![p1, p2, p3]).unwrap();
                let s = coupled_entropy(&d, kc).unwrap();
                assert!(
                    s <= s_uniform + 1e-9,
                    "kappa {kv}: S({p1},{p2},{p3})={s} exceeds uniform {s_uniform}"
                );
            }
        }
    }
}

#[test]
fn coupled_gaussian_near_zero_matches_normal() {
    let g = CoupledGaussian1D::new(0.0, 1.0, k(-1e-4)).unwrap();
    let normal = CoupledGaussian1D::new(0.0, 1.0, k(0.0)).unwrap();
    let mut worst = 0.0f64;
    let mut x = -5.0;
    while x <= 5.0 {
        worst = worst.max((g.pdf(x) - normal.pdf(x)).abs());
        x += 0.01;
    }
    assert!(worst < 1e-4, "max pointwise deviation {worst}");
}

#[test]
fn heavy_tail_exponent_matches_dof() {
    // κ = −0.5 is the ν = 3 case: tail falls off as x^{−4}.
    let g = CoupledGaussian1D::new(0.0, 1.0, k(-0.5)).unwrap();
    let (x1, x2) = (1e3, 1e5);
    let slope = (g.ln_pdf(x2) - g.ln_pdf(x1)) / (x2.ln() - x1.ln());
    assert!(
        (slope + 4.0).abs() < 0.01,
        "log-log tail slope {slope}, expected -4"
    );
}

#[test]
fn coupled_gaussian_integrates_to_one() {
    for &(kv, sigma) in &[(-1.0, 1.0), (-0.5, 1.3), (0.0, 0.7), (0.5, 2.0)] {
        let g = CoupledGaussian1D::new(0.4, sigma, k(kv)).unwrap();
        let integral = if kv > 0.0 {
            let half = g.support_halfwidth().unwrap();
            support::simpson_fixed(|x| g.pdf(x), 0.4 - half, 0.4 + half, 200_000)
        } else {
            support::integrate_real_line(|x| g.pdf(x), 400_000)
        };
        assert!(
            (integral - 1.0).abs() < 1e-6,
            "kappa {kv} sigma {sigma}: integral {integral}"
        );
    }
}
