//! Shared helpers for the oracle test suites.
#![allow(dead_code)] // each suite uses its own subset

use ndarray::Array2;
use repralign::core::rng::Rng;
use repralign::core::validate_dataset;
use repralign::{EmbeddedDataset, Seed};

/// Random binary-labeled dataset with standard-normal coordinates and at
/// least one point of each class.
pub fn random_dataset(n: usize, d: usize, seed: u64) -> EmbeddedDataset {
    let mut rng = Rng::from_seed(Seed::new(seed));
    let vectors = Array2::from_shape_fn((n, d), |_| rng.next_standard_normal());
    let mut labels: Vec<usize> = (0..n).map(|_| rng.next_below(2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    validate_dataset(vectors, labels, vec!["neg".into(), "pos".into()], 1).unwrap()
}

/// Renumbers cluster ids by first occurrence, so partitions can be compared
/// up to relabeling.
pub fn canonical_assignment(assignment: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; assignment.len()];
    let mut next = 0;
    assignment
        .iter()
        .map(|&c| {
            *map[c].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Relative difference, guarded for near-zero references.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
