//! Ward agglomerative clustering via the nearest-neighbor-chain algorithm,
//! plus per-level partition views with incrementally maintained label
//! histograms and centroid statistics.
//!
//! Merge heights are Ward variance increases
//! `delta(A,B) = |A||B|/(|A|+|B|) * ||mu_A - mu_B||^2`, not square-rooted
//! linkage distances. Summed over all merges they equal the total squared
//! deviation of the dataset about its global centroid, which the tests rely
//! on.

mod nnchain;
mod partition;

pub use nnchain::{ward_cluster, ward_cluster_low_memory};
pub use partition::{cut, partitions, ClusterStats, PartitionSweep, PartitionView};

use crate::core::sq_dist_slices;
use crate::{EmbeddedDataset, Error, Result};

/// One agglomeration step. Leaf ids are `0..n-1`; the cluster created by
/// merge `m` gets id `n + m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
    pub size: usize,
}

/// Ordered list of `n - 1` Ward merges with non-decreasing costs.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Validates the merge list: every id used exactly once as a child,
    /// sizes additive, costs non-negative and non-decreasing.
    pub fn from_parts(n: usize, merges: Vec<Merge>) -> Result<Self> {
        if n < 2 || merges.len() != n - 1 {
            return Err(Error::MismatchedDendrogram(format!(
                "{} merges for {} leaves",
                merges.len(),
                n
            )));
        }
        let mut size = vec![0usize; 2 * n - 1];
        let mut used = vec![false; 2 * n - 1];
        for s in size.iter_mut().take(n) {
            *s = 1;
        }
        let mut prev_cost = 0.0;
        for (m, merge) in merges.iter().enumerate() {
            let id = n + m;
            for child in [merge.left, merge.right] {
                if child >= id {
                    return Err(Error::MismatchedDendrogram(format!(
                        "merge {m} references id {child} not yet created"
                    )));
                }
                if used[child] {
                    return Err(Error::MismatchedDendrogram(format!(
                        "id {child} used as a child twice"
                    )));
                }
                used[child] = true;
            }
            size[id] = size[merge.left] + size[merge.right];
            if merge.size != size[id] {
                return Err(Error::MismatchedDendrogram(format!(
                    "merge {m} declares size {} but children sum to {}",
                    merge.size, size[id]
                )));
            }
            if !merge.cost.is_finite() || merge.cost < 0.0 {
                return Err(Error::MismatchedDendrogram(format!(
                    "merge {m} has invalid cost {}",
                    merge.cost
                )));
            }
            if merge.cost + 1e-9 * merge.cost.abs().max(1.0) < prev_cost {
                return Err(Error::MismatchedDendrogram(format!(
                    "merge {m} cost {} decreases below {}",
                    merge.cost, prev_cost
                )));
            }
            prev_cost = prev_cost.max(merge.cost);
        }
        if size[2 * n - 2] != n {
            return Err(Error::MismatchedDendrogram(
                "final merge does not cover all leaves".into(),
            ));
        }
        Ok(Dendrogram { n, merges })
    }

    /// Number of leaves.
    pub fn num_leaves(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

const ORACLE_LIMIT: usize = 512;

/// Globally greedy agglomerative clustering recomputing all pairwise Ward
/// costs from raw points at every step. O(n^3); test oracle for
/// [`ward_cluster`]. Ties broken toward the candidate pair with the smaller
/// (min id, max id) node-id key.
pub fn naive_agglomerative(ds: &EmbeddedDataset) -> Result<Dendrogram> {
    let n = ds.len();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLargeForOracle {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let d = ds.dim();

    struct Cluster {
        node: usize,
        size: usize,
        centroid: Vec<f64>,
    }
    let mut clusters: Vec<Cluster> = (0..n)
        .map(|i| Cluster {
            node: i,
            size: 1,
            centroid: ds.point(i).to_vec(),
        })
        .collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (a, b) = (&clusters[i], &clusters[j]);
                let cost = ward_cost(a.size, &a.centroid, b.size, &b.centroid);
                let lo = a.node.min(b.node);
                let hi = a.node.max(b.node);
                let candidate = (cost, lo, hi, i, j);
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        (candidate.0, candidate.1, candidate.2) < (cur.0, cur.1, cur.2)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let (cost, lo, hi, i, j) = best.expect("at least one pair");
        let merged_size = clusters[i].size + clusters[j].size;
        let mut centroid = vec![0.0; d];
        for (t, c) in centroid.iter_mut().enumerate() {
            *c = (clusters[i].size as f64 * clusters[i].centroid[t]
                + clusters[j].size as f64 * clusters[j].centroid[t])
                / merged_size as f64;
        }
        merges.push(Merge {
            left: lo,
            right: hi,
            cost,
            size: merged_size,
        });
        clusters[i] = Cluster {
            node: n + step,
            size: merged_size,
            centroid,
        };
        clusters.swap_remove(j);
    }
    Dendrogram::from_parts(n, merges)
}

/// Ward variance increase for merging two clusters given their sizes and
/// centroids.
#[inline]
pub(crate) fn ward_cost(size_a: usize, centroid_a: &[f64], size_b: usize, centroid_b: &[f64]) -> f64 {
    let sa = size_a as f64;
    let sb = size_b as f64;
    sa * sb / (sa + sb) * sq_dist_slices(centroid_a, centroid_b)
}
