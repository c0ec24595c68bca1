//! NN-chain Ward clustering against the naive O(n^3) greedy oracle.

mod common;

use common::{canonical_assignment, random_dataset, rel_diff};
use repralign::core::rng::Rng;
use repralign::hierclust::{cut, naive_agglomerative, ward_cluster};
use repralign::Seed;

#[test]
fn nnchain_matches_naive_oracle_on_100_instances() {
    let mut rng = Rng::from_seed(Seed::new(0x05ac1e));
    for case in 0..100 {
        let n = 4 + rng.next_below(61);
        let d = 1 + rng.next_below(8);
        let ds = random_dataset(n, d, 1000 + case);
        let fast = ward_cluster(&ds).unwrap();
        let naive = naive_agglomerative(&ds).unwrap();

        let fast_costs: Vec<f64> = fast.merges().iter().map(|m| m.cost).collect();
        let naive_costs: Vec<f64> = naive.merges().iter().map(|m| m.cost).collect();
        assert_eq!(fast_costs.len(), naive_costs.len());
        for (i, (&a, &b)) in fast_costs.iter().zip(&naive_costs).enumerate() {
            assert!(
                rel_diff(a, b) < 1e-9,
                "case {case} (n={n}, d={d}) merge {i}: {a} vs {b}"
            );
        }

        // with distinct costs the merge sequence is forced, so every cut
        // must agree up to relabeling
        let distinct = fast_costs
            .windows(2)
            .all(|w| rel_diff(w[0], w[1]) > 1e-6);
        if distinct {
            for k in [2, n / 2, n].into_iter().filter(|&k| k >= 2) {
                let a = cut(&fast, &ds, k).unwrap();
                let b = cut(&naive, &ds, k).unwrap();
                assert_eq!(
                    canonical_assignment(&a.assignment),
                    canonical_assignment(&b.assignment),
                    "case {case} k={k}"
                );
            }
        }
    }
}

#[test]
fn total_variance_identity_on_50_instances() {
    let mut rng = Rng::from_seed(Seed::new(0x70b4));
    for case in 0..50 {
        let n = 4 + rng.next_below(61);
        let d = 1 + rng.next_below(8);
        let ds = random_dataset(n, d, 2000 + case);
        let dn = ward_cluster(&ds).unwrap();
        let total_cost: f64 = dn.merges().iter().map(|m| m.cost).sum();

        let vectors = ds.vectors();
        let mut centroid = vec![0.0; d];
        for row in vectors.rows() {
            for (c, v) in centroid.iter_mut().zip(row) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
        let mut tss = 0.0;
        for row in vectors.rows() {
            for (c, v) in centroid.iter().zip(row) {
                tss += (v - c) * (v - c);
            }
        }
        assert!(
            rel_diff(total_cost, tss) < 1e-6,
            "case {case}: {total_cost} vs {tss}"
        );
    }
}

#[test]
fn merge_costs_non_decreasing() {
    for case in 0..20 {
        let ds = random_dataset(30, 3, 3000 + case);
        let dn = ward_cluster(&ds).unwrap();
        let costs: Vec<f64> = dn.merges().iter().map(|m| m.cost).collect();
        for w in costs.windows(2) {
            assert!(w[0] <= w[1], "case {case}: {} > {}", w[0], w[1]);
        }
    }
}
