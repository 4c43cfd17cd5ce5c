//! Special functions against exact rational partial sums and classical
//! identities.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use telegraph_core::specfun::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact partial sum of `pFq(a; b; z)` with rational data, rounded once.
fn rational_pfq(a: &[BigRational], b: &[BigRational], z: &BigRational, terms: usize) -> f64 {
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for n in 0..terms {
        let nn = BigRational::from_integer(BigInt::from(n as i64));
        let mut num = z.clone();
        for ai in a {
            num *= ai + &nn;
        }
        let mut den = nn.clone() + BigRational::one();
        for bi in b {
            den *= bi + &nn;
        }
        if num.is_zero() {
            break;
        }
        term = term * num / den;
        sum += &term;
    }
    sum.to_f64().unwrap()
}

/// Exact partial sum of `I_n(z) = sum (z/2)^(2k+n) / (k! (k+n)!)`.
fn rational_bessel(n: u32, z: &BigRational, terms: usize) -> f64 {
    let half = z / BigRational::from_integer(BigInt::from(2));
    let mut sum = BigRational::zero();
    let mut kfact = BigRational::one();
    let mut knfact: BigRational = (1..=n as i64)
        .map(|i| q(i, 1))
        .fold(BigRational::one(), |a, b| a * b);
    let mut pow = num::pow(half.clone(), n as usize);
    let sq = &half * &half;
    for k in 0..terms {
        if k > 0 {
            kfact *= q(k as i64, 1);
            knfact *= q((k as i64) + n as i64, 1);
            pow *= &sq;
        }
        sum += &pow / (&kfact * &knfact);
    }
    sum.to_f64().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ctrl() -> SeriesControl {
    SeriesControl::default()
}

#[test]
fn bessel_against_exact_series() {
    for (n, num, den) in [
        (0u32, 2, 1),
        (1, 2, 1),
        (1, 1, 4),
        (2, 7, 2),
        (1, 25, 1),
        (3, 10, 1),
    ] {
        let z = q(num, den);
        let exact = rational_bessel(n, &z, 120);
        let got = bessel_i(n, num as f64 / den as f64, &ctrl()).unwrap();
        assert!(
            rel(got, exact) < 1e-14,
            "I_{n}({num}/{den}): {got} vs {exact}"
        );
    }
}

#[test]
fn hyper_0f1_against_exact_series() {
    for (b, z) in [(q(1, 1), q(1, 1)), (q(3, 1), q(9, 2)), (q(5, 2), q(-3, 1))] {
        let exact = rational_pfq(&[], std::slice::from_ref(&b), &z, 100);
        let got = hyper_0f1(b.to_f64().unwrap(), z.to_f64().unwrap(), &ctrl()).unwrap();
        assert!(rel(got, exact) < 1e-14);
    }
}

#[test]
fn hyper_1f2_against_exact_series() {
    let cases = [
        (q(-1, 2), q(1, 1), q(3, 2), q(1, 4)),
        (q(-1, 2), q(7, 2), q(4, 1), q(30, 1)),
        (q(1, 1), q(2, 1), q(2, 1), q(5, 1)),
        (q(3, 2), q(5, 2), q(6, 1), q(12, 1)),
        (q(2, 1), q(5, 1), q(2, 1), q(20, 1)),
    ];
    for (a, b, c, z) in cases {
        let exact = rational_pfq(std::slice::from_ref(&a), &[b.clone(), c.clone()], &z, 120);
        let f = |x: &BigRational| x.to_f64().unwrap();
        let got = hyper_1f2(f(&a), f(&b), f(&c), f(&z), &ctrl()).unwrap();
        assert!(rel(got, exact) < 1e-13, "{got} vs {exact}");
        let minus = hyper_1f2_minus_one(f(&a), f(&b), f(&c), f(&z), &ctrl())
            .unwrap()
            .value();
        assert!(rel(minus, exact - 1.0) < 1e-12);
    }
}

#[test]
fn hyper_2f1_against_exact_series() {
    let cases = [
        (q(1, 1), q(3, 2), q(2, 1), q(16, 25)),
        (q(2, 1), q(5, 2), q(2, 1), q(1, 4)),
        (q(-3, 1), q(-1, 2), q(1, 2), q(1, 9)),
        (q(-4, 1), q(7, 3), q(5, 2), q(3, 1)),
    ];
    for (a, b, c, z) in cases {
        let exact = rational_pfq(&[a.clone(), b.clone()], std::slice::from_ref(&c), &z, 400);
        let f = |x: &BigRational| x.to_f64().unwrap();
        let ctrl = ctrl().with_max_terms(2000).with_rel_tol(1e-15);
        let got = hyper_2f1(f(&a), f(&b), f(&c), f(&z), &ctrl).unwrap();
        assert!(rel(got, exact) < 1e-13, "{got} vs {exact}");
    }
}

#[test]
fn bessel_is_a_confluent_limit() {
    // 0F1(; j + 1; z) = j! z^(-j/2) I_j(2 sqrt(z)).
    for j in 0..5u32 {
        for z in [0.3, 2.0, 17.0] {
            let lhs = hyper_0f1(j as f64 + 1.0, z, &ctrl()).unwrap();
            let fact: f64 = (1..=j).map(|k| k as f64).product();
            let rhs =
                fact * z.powf(-(j as f64) / 2.0) * bessel_i(j, 2.0 * z.sqrt(), &ctrl()).unwrap();
            assert!(rel(lhs, rhs) < 1e-13);
        }
    }
}

#[test]
fn hyper_1f2_reduces_to_bessel() {
    // 1F2(1; 2, 2; z) = (I_0(2 sqrt z) - 1) / z.
    for z in [0.1, 4.0, 50.0] {
        let lhs = hyper_1f2(1.0, 2.0, 2.0, z, &ctrl()).unwrap();
        let rhs = (bessel_i(0, 2.0 * f64::sqrt(z), &ctrl()).unwrap() - 1.0) / z;
        assert!(rel(lhs, rhs) < 1e-13);
    }
}

#[test]
fn hyper_2f1_elementary_closed_forms() {
    // 2F1(a, b; b; z) = (1 - z)^(-a) and 2F1(1, 1; 2; z) = -ln(1 - z) / z.
    for z in [-0.7, 0.2, 0.9] {
        let lhs = hyper_2f1(1.7, 0.4, 0.4, z, &ctrl().with_max_terms(5000)).unwrap();
        assert!(rel(lhs, (1.0 - z).powf(-1.7)) < 1e-11);
        let lhs = hyper_2f1(1.0, 1.0, 2.0, z, &ctrl().with_max_terms(5000)).unwrap();
        assert!(rel(lhs, -(1.0 - z).ln() / z) < 1e-11);
    }
}

#[test]
fn scaled_bessel_matches_asymptotics() {
    // I_n(z) ~ e^z / sqrt(2 pi z) (1 - (4n^2 - 1) / (8z) + ...).
    let ctrl = ctrl().with_max_terms(10_000);
    for z in [800.0, 3000.0] {
        let s = bessel_i_scaled(1, z, &ctrl).unwrap();
        let mu = 4.0;
        let ln_asym = z - 0.5 * (2.0 * std::f64::consts::PI * z).ln()
            + (1.0 - (mu - 1.0) / (8.0 * z) + (mu - 1.0) * (mu - 9.0) / (2.0 * (8.0 * z).powi(2)))
                .ln();
        assert!(
            (s.ln_abs() - ln_asym).abs() < 1e-8,
            "z = {z}: {} vs {ln_asym}",
            s.ln_abs()
        );
    }
}

#[test]
fn binomial_coefficients() {
    assert_eq!(gen_binom(5.0, 2), 10.0);
    assert_eq!(gen_binom(1.0, 3), 0.0);
    assert!((gen_binom(0.5, 2) + 0.125).abs() < 1e-16);
    assert_eq!(rising_factorial(1.0, 5), 120.0);
}
