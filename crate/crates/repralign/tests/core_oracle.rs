//! Numeric oracles for the core kernel and the statistics layer:
//! compensated-summation distance checks, sampling-distribution agreement
//! for the subsampler, a high-precision Pearson recomputation, and a
//! quadrature oracle for the t-distribution tail.

mod common;

use common::rel_diff;
use ndarray::Array2;
use proptest::prelude::*;
use repralign::core::rng::Rng;
use repralign::core::{squared_euclidean, subsample, validate_dataset};
use repralign::stats::{pearson, student_t_two_sided_p};
use repralign::Seed;

/// Neumaier compensated summation.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let new_sum = sum + t;
        comp += if sum.abs() >= t.abs() {
            (sum - new_sum) + t
        } else {
            (t - new_sum) + sum
        };
        sum = new_sum;
    }
    sum + comp
}

#[test]
fn squared_euclidean_matches_compensated_oracle() {
    let mut rng = Rng::from_seed(Seed::new(0xd157));
    for case in 0..200 {
        let d = 50;
        let a: Vec<f64> = (0..d).map(|_| 1e3 * rng.next_standard_normal()).collect();
        let b: Vec<f64> = (0..d).map(|_| 1e3 * rng.next_standard_normal()).collect();
        let av = ndarray::Array1::from_vec(a.clone());
        let bv = ndarray::Array1::from_vec(b.clone());
        let got = squared_euclidean(av.view(), bv.view()).unwrap();
        let want = compensated_sum(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)));
        assert!(rel_diff(got, want) < 1e-12, "case {case}: {got} vs {want}");
    }
}

proptest! {
    #[test]
    fn parallelogram_identity(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let av = ndarray::Array1::from_vec(a.clone());
        let bv = ndarray::Array1::from_vec(b.clone());
        let lhs = squared_euclidean(av.view(), bv.view()).unwrap();
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let rhs = sq(&a) + sq(&b) - 2.0 * dot;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() / scale < 1e-9);
    }
}

#[test]
fn subsample_overlap_matches_hypergeometric_expectation() {
    // identify rows by their (unique) single coordinate
    let n = 20_000;
    let m = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let ds = validate_dataset(m, labels, vec!["a".into(), "b".into()], 1).unwrap();

    let size = 5000;
    let take = |seed: u64| -> Vec<usize> {
        subsample(&ds, size, Seed::new(seed))
            .unwrap()
            .vectors()
            .column(0)
            .iter()
            .map(|&v| v as usize)
            .collect()
    };
    let a = take(1);
    let b = take(2);
    assert_ne!(a, b);
    let set: std::collections::HashSet<usize> = a.into_iter().collect();
    let overlap = b.iter().filter(|i| set.contains(i)).count() as f64;

    // hypergeometric: mean m^2/n, sd ~ 26.5; allow 6 sigma
    let expected = (size * size) as f64 / n as f64;
    assert!(
        (overlap - expected).abs() < 160.0,
        "overlap {overlap} vs expected {expected}"
    );
}

#[test]
fn pearson_matches_compensated_direct_formula() {
    let mut rng = Rng::from_seed(Seed::new(0xbead));
    for case in 0..20 {
        let n = 50;
        let x: Vec<f64> = (0..n).map(|_| rng.next_standard_normal()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 0.6 * v + 0.8 * rng.next_standard_normal())
            .collect();
        let (got, _) = pearson(&x, &y).unwrap();

        // direct n*Sxy - Sx*Sy formulation with compensated sums
        let nf = n as f64;
        let sx = compensated_sum(x.iter().copied());
        let sy = compensated_sum(y.iter().copied());
        let sxx = compensated_sum(x.iter().map(|v| v * v));
        let syy = compensated_sum(y.iter().map(|v| v * v));
        let sxy = compensated_sum(x.iter().zip(&y).map(|(a, b)| a * b));
        let want =
            (nf * sxy - sx * sy) / ((nf * sxx - sx * sx) * (nf * syy - sy * sy)).sqrt();
        assert!(
            (got - want).abs() < 1e-12,
            "case {case}: {got} vs {want}"
        );
    }
}

/// B(nu/2, 1/2) from exact gamma recursions (no shared code with the
/// library's Lanczos ln_gamma).
fn beta_half(nu: usize) -> f64 {
    if nu % 2 == 0 {
        // B(m, 1/2) = (m-1)! / [(m-1/2)(m-3/2)...(1/2)]
        let m = nu / 2;
        let mut num = 1.0;
        for j in 1..m {
            num *= j as f64;
        }
        let mut den = 1.0;
        for j in 1..=m {
            den *= j as f64 - 0.5;
        }
        num / den
    } else {
        // B(m+1/2, 1/2) = pi * prod_{j=1..m} (j - 1/2) / m!
        let m = nu / 2;
        let mut acc = std::f64::consts::PI;
        for j in 1..=m {
            acc *= (j as f64 - 0.5) / j as f64;
        }
        acc
    }
}

/// Two-sided t tail by quadrature: with x = nu/(nu + t^2), the incomplete
/// beta reduces to 2/B(nu/2,1/2) * integral of cos^(nu-1) from atan(t/sqrt(nu))
/// to pi/2 — a polynomial in sin/cos, so plain Simpson nails it.
fn quadrature_p(t: f64, nu: usize) -> f64 {
    let theta0 = (t / (nu as f64).sqrt()).atan();
    let theta1 = std::f64::consts::FRAC_PI_2;
    let steps = 200_000; // even
    let h = (theta1 - theta0) / steps as f64;
    let f = |theta: f64| theta.cos().powi(nu as i32 - 1);
    let mut acc = f(theta0) + f(theta1);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(theta0 + i as f64 * h);
    }
    let integral = acc * h / 3.0;
    2.0 * integral / beta_half(nu)
}

#[test]
fn t_tail_matches_quadrature_oracle_at_20_probes() {
    let probes = [
        (0.05, 4),
        (0.10, 5),
        (0.15, 6),
        (0.20, 7),
        (0.25, 8),
        (0.30, 10),
        (0.35, 12),
        (0.40, 14),
        (0.45, 16),
        (0.50, 18),
        (0.55, 20),
        (0.60, 22),
        (0.65, 24),
        (0.70, 26),
        (0.75, 28),
        (0.80, 30),
        (0.85, 9),
        (0.90, 11),
        (0.95, 13),
        (0.99, 15),
    ];
    for &(r, n) in &probes {
        let nu = n - 2;
        let t = r * ((nu as f64) / (1.0 - r * r)).sqrt();
        let got = student_t_two_sided_p(r, n);
        let want = quadrature_p(t, nu);
        assert!(
            (got - want).abs() < 1e-10,
            "r={r} n={n}: {got} vs {want}"
        );
    }
}
