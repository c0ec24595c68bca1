//! Nearest-neighbor-chain Ward clustering.
//!
//! Two variants share the chain walk:
//!
//! * [`ward_cluster`] keeps the full condensed n(n-1)/2 distance store and
//!   applies the Lance-Williams update on every merge (O(n^2) time,
//!   O(n^2) memory, ~400 MB at n = 10K).
//! * [`ward_cluster_low_memory`] recomputes Ward costs from cluster
//!   centroids and sizes on demand (O(n^2 d) time, O(n d) memory).
//!
//! The chain discovers merges out of cost order; reducibility of Ward
//! linkage guarantees that sorting the merges by cost yields a valid
//! dendrogram. Node ids are then assigned in sorted order via union-find.

use super::{ward_cost, Dendrogram, Merge};
use crate::core::sq_dist_slices;
use crate::{EmbeddedDataset, Result};

/// A merge as discovered by the chain: representatives are original point
/// indices inside the two clusters.
struct RawMerge {
    rep_a: usize,
    rep_b: usize,
    cost: f64,
    size: usize,
}

/// Cluster-distance backend for the chain walk. Slots are original point
/// indices; a merged cluster lives in slot `min(a, b)`.
trait WardStore {
    fn distance(&self, a: usize, b: usize) -> f64;
    /// Merges b into a (into slot `min(a, b)`) and returns the merge cost.
    fn merge(&mut self, a: usize, b: usize) -> f64;
    fn size(&self, i: usize) -> usize;
}

/// Ward clustering with a stored condensed distance matrix.
pub fn ward_cluster(ds: &EmbeddedDataset) -> Result<Dendrogram> {
    let n = ds.len();
    let store = CondensedStore {
        n,
        dist: condensed_ward_distances(ds),
        sizes: vec![1; n],
    };
    finalize(n, chain_walk(n, store))
}

/// Ward clustering recomputing costs from centroids; no pairwise store.
pub fn ward_cluster_low_memory(ds: &EmbeddedDataset) -> Result<Dendrogram> {
    let n = ds.len();
    let store = CentroidStore {
        centroids: (0..n).map(|i| ds.point(i).to_vec()).collect(),
        sizes: vec![1; n],
    };
    finalize(n, chain_walk(n, store))
}

struct CondensedStore {
    n: usize,
    dist: Vec<f64>,
    sizes: Vec<usize>,
}

impl WardStore for CondensedStore {
    #[inline]
    fn distance(&self, a: usize, b: usize) -> f64 {
        condensed(&self.dist, self.n, a, b)
    }

    fn merge(&mut self, a: usize, b: usize) -> f64 {
        let keep = a.min(b);
        let drop = a.max(b);
        let d_ab = condensed(&self.dist, self.n, a, b);
        let (sa, sb) = (self.sizes[a] as f64, self.sizes[b] as f64);
        for c in 0..self.n {
            if c == keep || c == drop || self.sizes[c] == 0 {
                continue;
            }
            let sc = self.sizes[c] as f64;
            let d_ac = condensed(&self.dist, self.n, a, c);
            let d_bc = condensed(&self.dist, self.n, b, c);
            // Lance-Williams update for Ward linkage.
            let updated = ((sa + sc) * d_ac + (sb + sc) * d_bc - sc * d_ab) / (sa + sb + sc);
            set_condensed(&mut self.dist, self.n, keep, c, updated);
        }
        self.sizes[keep] = self.sizes[a] + self.sizes[b];
        self.sizes[drop] = 0;
        d_ab
    }

    #[inline]
    fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }
}

struct CentroidStore {
    centroids: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl WardStore for CentroidStore {
    #[inline]
    fn distance(&self, a: usize, b: usize) -> f64 {
        ward_cost(
            self.sizes[a],
            &self.centroids[a],
            self.sizes[b],
            &self.centroids[b],
        )
    }

    fn merge(&mut self, a: usize, b: usize) -> f64 {
        let cost = self.distance(a, b);
        let keep = a.min(b);
        let drop = a.max(b);
        let (sa, sb) = (self.sizes[a] as f64, self.sizes[b] as f64);
        let merged: Vec<f64> = self.centroids[a]
            .iter()
            .zip(&self.centroids[b])
            .map(|(x, y)| (sa * x + sb * y) / (sa + sb))
            .collect();
        self.centroids[keep] = merged;
        self.centroids[drop] = Vec::new();
        self.sizes[keep] = self.sizes[a] + self.sizes[b];
        self.sizes[drop] = 0;
        cost
    }

    #[inline]
    fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }
}

fn chain_walk<S: WardStore>(n: usize, mut store: S) -> Vec<RawMerge> {
    let mut active = vec![true; n];
    let mut raw: Vec<RawMerge> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    while raw.len() < n - 1 {
        if chain.is_empty() {
            let start = (0..n).find(|&i| active[i]).expect("active cluster");
            chain.push(start);
        }
        loop {
            let a = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            // Nearest active neighbor of a. The previous chain element wins
            // ties so the chain terminates; other ties go to the smaller id.
            let mut best = prev.map(|p| (store.distance(a, p), p));
            for c in 0..n {
                if !active[c] || c == a || Some(c) == prev {
                    continue;
                }
                let d = store.distance(a, c);
                best = match best {
                    Some((bd, bc)) if bd <= d => Some((bd, bc)),
                    _ => Some((d, c)),
                };
            }
            let (_, nearest) = best.expect("at least two active clusters");
            if Some(nearest) == prev {
                let b = nearest;
                chain.pop();
                chain.pop();
                let size = store.size(a) + store.size(b);
                let cost = store.merge(a, b);
                active[a.max(b)] = false;
                raw.push(RawMerge {
                    rep_a: a.min(b),
                    rep_b: a.max(b),
                    cost: cost.max(0.0),
                    size,
                });
                break;
            }
            chain.push(nearest);
        }
    }
    raw
}

/// Sorts raw merges by cost (stable over discovery order) and assigns
/// dendrogram node ids through a union-find over the leaves.
fn finalize(n: usize, mut raw: Vec<RawMerge>) -> Result<Dendrogram> {
    raw.sort_by(|x, y| x.cost.partial_cmp(&y.cost).expect("finite costs"));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut label: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut merges = Vec::with_capacity(n - 1);
    let mut running_cost = 0.0f64;
    for (step, rm) in raw.into_iter().enumerate() {
        let ra = find(&mut parent, rm.rep_a);
        let rb = find(&mut parent, rm.rep_b);
        let (la, lb) = (label[ra], label[rb]);
        parent[ra] = rb;
        label[rb] = n + step;
        // Guard against ~1e-18 float noise from the Lance-Williams update.
        running_cost = running_cost.max(rm.cost);
        merges.push(Merge {
            left: la.min(lb),
            right: la.max(lb),
            cost: running_cost,
            size: rm.size,
        });
    }
    Dendrogram::from_parts(n, merges)
}

/// Condensed upper-triangle index for i < j.
#[inline]
fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

#[inline]
fn condensed(dist: &[f64], n: usize, a: usize, b: usize) -> f64 {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    dist[condensed_index(n, i, j)]
}

#[inline]
fn set_condensed(dist: &mut [f64], n: usize, a: usize, b: usize, value: f64) {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    dist[condensed_index(n, i, j)] = value;
}

/// Initial pairwise Ward costs between singletons: half the squared
/// Euclidean distance. Rows are filled in parallel via recursive splits at
/// row boundaries.
fn condensed_ward_distances(ds: &EmbeddedDataset) -> Vec<f64> {
    let n = ds.len();
    let mut dist = vec![0.0f64; n * (n - 1) / 2];
    let d = ds.dim();
    let data = ds.vectors();
    let raw = data.as_slice().expect("row-major contiguous");

    fn fill(buf: &mut [f64], rows: std::ops::Range<usize>, n: usize, d: usize, raw: &[f64]) {
        let count = rows.end - rows.start;
        if count <= 4 || buf.len() < (1 << 14) {
            let mut offset = 0;
            for i in rows {
                let a = &raw[i * d..(i + 1) * d];
                for j in i + 1..n {
                    let b = &raw[j * d..(j + 1) * d];
                    buf[offset] = 0.5 * sq_dist_slices(a, b);
                    offset += 1;
                }
            }
            return;
        }
        let mid = rows.start + count / 2;
        let split =
            condensed_index(n, mid, mid + 1) - condensed_index(n, rows.start, rows.start + 1);
        let (lo, hi) = buf.split_at_mut(split);
        rayon::join(
            || fill(lo, rows.start..mid, n, d, raw),
            || fill(hi, mid..rows.end, n, d, raw),
        );
    }

    fill(&mut dist, 0..n - 1, n, d, raw);
    dist
}
