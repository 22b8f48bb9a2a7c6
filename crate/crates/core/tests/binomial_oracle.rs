#![allow(clippy::excessive_precision)]

use chancecheck::prob::{any_of, best_of_m, binom_cdf, binom_pmf, binom_sf, binom_sf_strict, wilson_interval};
use chancecheck::{BinomialQuery, Probability};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn q(k: u64, n: u64, p: f64) -> BinomialQuery {
    BinomialQuery::new(k, n, p).unwrap()
}

/// Exact pmf row for the f64 value `p`, as rationals.
fn exact_row(n: u64, p: f64) -> Vec<BigRational> {
    let p = BigRational::from_float(p).unwrap();
    let qq = BigRational::one() - &p;
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut coeff = BigInt::one();
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        let term = BigRational::from_integer(coeff.clone()) * num_traits::pow(p.clone(), k as usize)
            * num_traits::pow(qq.clone(), (n - k) as usize);
        row.push(term);
    }
    row
}

fn exact_upper(row: &[BigRational], k: u64) -> f64 {
    row[k as usize..]
        .iter()
        .fold(BigRational::zero(), |acc, t| acc + t)
        .to_f64()
        .unwrap()
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    if want == 0.0 {
        return got == 0.0;
    }
    ((got - want) / want).abs() <= tol
}

#[test]
fn fair_coin_tails_are_exact_rationals() {
    for n in 1..=40u64 {
        let row = exact_row(n, 0.5);
        for k in 0..=n {
            let want = exact_upper(&row, k);
            assert_eq!(binom_sf(&q(k, n, 0.5)).value(), want, "sf({k}; {n}, 0.5)");
        }
    }
}

#[test]
fn pmf_rows_sum_to_one() {
    for n in (1..=1000u64).step_by(37).chain([1000]) {
        for p in [1e-4, 0.05, 0.3, 0.5, 0.77, 0.999] {
            let total: f64 = (0..=n).map(|k| binom_pmf(&q(k, n, p)).value()).sum();
            assert!((total - 1.0).abs() < 1e-12, "n = {n}, p = {p}: {total}");
        }
    }
}

/// 50-digit reference values.
const REFERENCE: &[(&str, f64)] = &[
    ("pmf(50; 1e6, 5e-5)", 0.056326414502921143775),
    ("P[X > 50]; 1e6, 5e-5", 0.46248330913511749342),
    ("pmf(5; 10, 5e-5)", 7.8730314468651564961e-20),
    ("sf(600; 1000, 0.5)", 1.3642320780330092128e-10),
    ("sf(65; 100, 0.5)", 0.0017588208614850791028),
    ("sf(301; 500, 0.6)", 0.48301175754121405414),
    ("sf(251; 500, 0.4)", 2.4976515112154342471e-6),
    ("sf(300; 500, 0.6)", 0.51941082288834993985),
    ("sf(250; 500, 0.4)", 3.8160484079756660826e-6),
    ("cdf(24; 50, 0.6)", 0.0573437605422003603),
    ("cdf(49; 100, 0.6)", 0.016761686503161387696),
    ("pmf(500000; 1e6, 0.5)", 0.00079788436133175008909),
    ("pmf(1000; 1e7, 1e-4)", 0.012615242126587157009),
];

#[test]
fn high_precision_reference_values() {
    let computed = [
        binom_pmf(&q(50, 1_000_000, 5e-5)).value(),
        binom_sf_strict(&q(50, 1_000_000, 5e-5)).value(),
        binom_pmf(&q(5, 10, 5e-5)).value(),
        binom_sf(&q(600, 1000, 0.5)).value(),
        binom_sf(&q(65, 100, 0.5)).value(),
        binom_sf(&q(301, 500, 0.6)).value(),
        binom_sf(&q(251, 500, 0.4)).value(),
        binom_sf(&q(300, 500, 0.6)).value(),
        binom_sf(&q(250, 500, 0.4)).value(),
        binom_cdf(&q(24, 50, 0.6)).value(),
        binom_cdf(&q(49, 100, 0.6)).value(),
        binom_pmf(&q(500_000, 1_000_000, 0.5)).value(),
        binom_pmf(&q(1000, 10_000_000, 1e-4)).value(),
    ];
    for ((name, want), got) in REFERENCE.iter().zip(computed) {
        assert!(rel_close(got, *want, 1e-11), "{name}: got {got:e}, want {want:e}");
    }
}

#[test]
fn best_of_m_reference_values() {
    assert!((best_of_m(&q(8, 10, 0.5), 2).unwrap().value() - 0.10638427734375).abs() < 1e-15);
    let ten = best_of_m(&q(65, 100, 0.5), 10).unwrap().value();
    assert!(rel_close(ten, 0.017449654221579148853, 1e-12), "{ten}");
    let hundred = best_of_m(&q(65, 100, 0.5), 100).unwrap().value();
    assert!(rel_close(hundred, 0.16141299488232280562, 1e-12), "{hundred}");
}

#[test]
fn far_tails_keep_relative_precision() {
    let row = exact_row(200, 0.5);
    for k in [180u64, 190, 199, 200] {
        assert!(rel_close(binom_sf(&q(k, 200, 0.5)).value(), exact_upper(&row, k), 1e-12));
    }
    let row = exact_row(300, 0.01);
    for k in [40u64, 80, 120] {
        assert!(rel_close(binom_sf(&q(k, 300, 0.01)).value(), exact_upper(&row, k), 1e-11));
    }
    assert_eq!(binom_sf(&q(1000, 1000, 0.01)).value(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tails_match_rational_oracle(n in 1u64..=150, kf in 0.0f64..=1.0, p in 0.001f64..0.999) {
        let k = ((n as f64) * kf).round() as u64;
        let row = exact_row(n, p);
        let want = exact_upper(&row, k);
        let got = binom_sf(&q(k, n, p)).value();
        prop_assume!(want > 1e-290);
        prop_assert!(rel_close(got, want, 1e-10), "sf({}; {}, {}) = {:e}, want {:e}", k, n, p, got, want);
        let pmf_want = row[k as usize].to_f64().unwrap();
        prop_assume!(pmf_want > 1e-290);
        prop_assert!(rel_close(binom_pmf(&q(k, n, p)).value(), pmf_want, 1e-10));
    }

    #[test]
    fn sf_and_cdf_are_complements(n in 1u64..=2000, kf in 0.0f64..1.0, p in 0.0f64..=1.0) {
        let k = ((n as f64) * kf) as u64;
        let sf = binom_sf(&q(k + 1, n, p)).value();
        let cdf = binom_cdf(&q(k, n, p)).value();
        prop_assert!((sf + cdf - 1.0).abs() < 1e-12);
        prop_assert_eq!(binom_sf_strict(&q(k, n, p)).value(), sf);
    }

    #[test]
    fn reflection_symmetry(n in 1u64..=3000, kf in 0.0f64..=1.0, p in 0.5f64..1.0) {
        // 1 - p is exact for p in [0.5, 1].
        let k = ((n as f64) * kf) as u64;
        let upper = binom_sf(&q(k, n, p)).value();
        let mirrored = binom_cdf(&q(n - k, n, 1.0 - p)).value();
        prop_assert!(rel_close(upper, mirrored, 1e-11) || (upper - mirrored).abs() < 1e-300,
            "{} vs {}", upper, mirrored);
    }

    #[test]
    fn sf_decreases_in_k(n in 1u64..=500, p in 0.0f64..=1.0) {
        let mut prev = 1.0;
        for k in 0..=n {
            let v = binom_sf(&q(k, n, p)).value();
            prop_assert!(v <= prev + 1e-15);
            prop_assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn best_of_m_bounds(n in 1u64..=300, kf in 0.0f64..=1.0, p in 0.0f64..=1.0, m in 1u64..10_000) {
        let k = ((n as f64) * kf) as u64;
        let single = binom_sf(&q(k, n, p)).value();
        let many = best_of_m(&q(k, n, p), m).unwrap().value();
        let more = best_of_m(&q(k, n, p), m + 1).unwrap().value();
        prop_assert!(many >= single - 1e-15);
        prop_assert!(more >= many);
        prop_assert!(many <= (m as f64 * single).min(1.0) + 1e-12);
    }

    #[test]
    fn any_of_keeps_tiny_values(exp in -300i32..-20, m in 1u64..1_000_000) {
        let p = 10f64.powi(exp);
        let v = any_of(Probability::new(p).unwrap(), m).value();
        prop_assert!(rel_close(v, p * m as f64, 1e-9));
    }

    #[test]
    fn wilson_brackets_the_proportion(trials in 1u64..100_000, frac in 0.0f64..=1.0, conf in 0.5f64..0.9999) {
        let hits = ((trials as f64) * frac) as u64;
        let i = wilson_interval(hits, trials, conf).unwrap();
        let phat = hits as f64 / trials as f64;
        prop_assert!(i.lower.value() <= phat && phat <= i.upper.value());
        let wider = wilson_interval(hits, trials, (conf + 1.0) / 2.0).unwrap();
        prop_assert!(wider.lower.value() <= i.lower.value() + 1e-15);
        prop_assert!(wider.upper.value() >= i.upper.value() - 1e-15);
    }
}
