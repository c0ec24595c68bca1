//! Streaming partition views over a dendrogram, k = n down to 1.
//!
//! Cluster statistics (size, label histogram, centroid, squared deviation)
//! are folded incrementally per merge. Cluster ids stay dense in `0..k`;
//! the freed slot is back-filled by the last cluster on every merge.

use super::{ward_cost, Dendrogram};
use crate::{EmbeddedDataset, Error, Result};

/// Per-cluster statistics at one dendrogram level.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub size: usize,
    /// Gold-label counts, one entry per vocabulary label.
    pub histogram: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Sum of squared deviations of members about the centroid.
    pub sq_dev: f64,
}

/// A partition of the dataset into `k` non-empty disjoint covering clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionView {
    pub k: usize,
    /// Cluster id in `0..k` for every point.
    pub assignment: Vec<usize>,
    pub clusters: Vec<ClusterStats>,
}

impl PartitionView {
    /// Members of each cluster, recovered from the assignment.
    pub fn member_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.k];
        for (point, &c) in self.assignment.iter().enumerate() {
            lists[c].push(point);
        }
        lists
    }
}

/// Streams partition views from k = n (singletons) down to k = 1 (root).
pub struct PartitionSweep<'a> {
    ds: &'a EmbeddedDataset,
    dn: &'a Dendrogram,
    view: PartitionView,
    members: Vec<Vec<u32>>,
    /// Maps dendrogram node id to the current slot holding that cluster.
    slot_of_node: Vec<usize>,
    /// Dendrogram node id currently held by each slot.
    node_of_slot: Vec<usize>,
    step: usize,
}

/// Starts a sweep at k = n. Call [`PartitionSweep::advance`] to apply merges
/// one at a time.
pub fn partitions<'a>(dn: &'a Dendrogram, ds: &'a EmbeddedDataset) -> Result<PartitionSweep<'a>> {
    if dn.num_leaves() != ds.len() {
        return Err(Error::MismatchedDendrogram(format!(
            "dendrogram has {} leaves, dataset {} points",
            dn.num_leaves(),
            ds.len()
        )));
    }
    let n = ds.len();
    let num_labels = ds.num_labels();
    let clusters = (0..n)
        .map(|i| {
            let mut histogram = vec![0usize; num_labels];
            histogram[ds.labels()[i]] = 1;
            ClusterStats {
                size: 1,
                histogram,
                centroid: ds.point(i).to_vec(),
                sq_dev: 0.0,
            }
        })
        .collect();
    Ok(PartitionSweep {
        ds,
        dn,
        view: PartitionView {
            k: n,
            assignment: (0..n).collect(),
            clusters,
        },
        members: (0..n).map(|i| vec![i as u32]).collect(),
        slot_of_node: (0..2 * n - 1).map(|id| if id < n { id } else { usize::MAX }).collect(),
        node_of_slot: (0..n).collect(),
        step: 0,
    })
}

impl<'a> PartitionSweep<'a> {
    pub fn view(&self) -> &PartitionView {
        &self.view
    }

    pub fn k(&self) -> usize {
        self.view.k
    }

    /// Applies the next merge; false once the root view (k = 1) is reached.
    pub fn advance(&mut self) -> bool {
        let n = self.ds.len();
        if self.step >= n - 1 {
            return false;
        }
        let merge = &self.dn.merges()[self.step];
        let slot_a = self.slot_of_node[merge.left];
        let slot_b = self.slot_of_node[merge.right];
        debug_assert!(slot_a != usize::MAX && slot_b != usize::MAX);

        // Merge b into a.
        {
            let hi = slot_a.max(slot_b);
            let (head, tail) = self.view.clusters.split_at_mut(hi);
            let (ca, cb) = if slot_a < slot_b {
                (&mut head[slot_a], &mut tail[0])
            } else {
                (&mut tail[0], &mut head[slot_b])
            };
            let sa = ca.size as f64;
            let sb = cb.size as f64;
            let delta = ward_cost(ca.size, &ca.centroid, cb.size, &cb.centroid);
            for (x, y) in ca.centroid.iter_mut().zip(&cb.centroid) {
                *x = (sa * *x + sb * *y) / (sa + sb);
            }
            for (h, g) in ca.histogram.iter_mut().zip(&cb.histogram) {
                *h += *g;
            }
            ca.size += cb.size;
            ca.sq_dev += cb.sq_dev + delta;
        }
        let moved = std::mem::take(&mut self.members[slot_b]);
        for &p in &moved {
            self.view.assignment[p as usize] = slot_a;
        }
        self.members[slot_a].extend_from_slice(&moved);

        let node_id = n + self.step;
        self.slot_of_node[merge.left] = usize::MAX;
        self.slot_of_node[merge.right] = usize::MAX;
        self.slot_of_node[node_id] = slot_a;
        self.node_of_slot[slot_a] = node_id;

        // Back-fill the freed slot with the last cluster to keep ids dense.
        let last = self.view.clusters.len() - 1;
        if slot_b != last {
            self.view.clusters.swap(slot_b, last);
            self.members.swap(slot_b, last);
            for &p in &self.members[slot_b] {
                self.view.assignment[p as usize] = slot_b;
            }
            let moved_node = self.node_of_slot[last];
            self.node_of_slot[slot_b] = moved_node;
            self.slot_of_node[moved_node] = slot_b;
        }
        self.view.clusters.pop();
        self.members.pop();
        self.node_of_slot.pop();

        self.view.k -= 1;
        self.step += 1;
        true
    }
}

/// Random-access view at level k; identical to the k-th element of the
/// [`partitions`] stream.
pub fn cut(dn: &Dendrogram, ds: &EmbeddedDataset, k: usize) -> Result<PartitionView> {
    let n = ds.len();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut sweep = partitions(dn, ds)?;
    while sweep.k() > k {
        sweep.advance();
    }
    Ok(sweep.view().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{rng::Rng, validate_dataset, Seed};
    use crate::hierclust::ward_cluster;
    use ndarray::Array2;

    fn random_dataset(n: usize, d: usize, num_labels: usize, seed: u64) -> EmbeddedDataset {
        let mut rng = Rng::from_seed(Seed::new(seed));
        let m = Array2::from_shape_fn((n, d), |_| rng.next_standard_normal());
        let labels: Vec<usize> = (0..n).map(|_| rng.next_below(num_labels)).collect();
        let vocab = (0..num_labels).map(|i| format!("c{i}")).collect();
        match validate_dataset(m, labels, vocab, 0) {
            Ok(ds) => ds,
            Err(_) => random_dataset(n, d, num_labels, seed + 1),
        }
    }

    #[test]
    fn leaves_view_is_one_hot() {
        let ds = random_dataset(16, 3, 2, 1);
        let dn = ward_cluster(&ds).unwrap();
        let view = cut(&dn, &ds, 16).unwrap();
        assert_eq!(view.k, 16);
        for (i, c) in view.clusters.iter().enumerate() {
            assert_eq!(c.size, 1);
            assert_eq!(c.histogram.iter().sum::<usize>(), 1);
            assert_eq!(c.histogram[ds.labels()[view.assignment.iter().position(|&a| a == i).unwrap()]], 1);
        }
    }

    #[test]
    fn root_view_matches_global_histogram() {
        let ds = random_dataset(20, 2, 3, 2);
        let dn = ward_cluster(&ds).unwrap();
        let view = cut(&dn, &ds, 1).unwrap();
        assert_eq!(view.k, 1);
        assert_eq!(view.clusters[0].histogram, ds.label_histogram());
        assert!(view.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn histograms_match_recount_at_every_level() {
        let ds = random_dataset(32, 4, 3, 3);
        let dn = ward_cluster(&ds).unwrap();
        let mut sweep = partitions(&dn, &ds).unwrap();
        loop {
            let view = sweep.view();
            // recount from scratch
            let mut sizes = vec![0usize; view.k];
            let mut hist = vec![vec![0usize; ds.num_labels()]; view.k];
            for (p, &c) in view.assignment.iter().enumerate() {
                sizes[c] += 1;
                hist[c][ds.labels()[p]] += 1;
            }
            for (c, stats) in view.clusters.iter().enumerate() {
                assert_eq!(stats.size, sizes[c]);
                assert_eq!(stats.histogram, hist[c]);
            }
            assert_eq!(sizes.iter().sum::<usize>(), ds.len());
            if !sweep.advance() {
                break;
            }
        }
    }

    #[test]
    fn centroids_match_recompute() {
        let ds = random_dataset(24, 3, 2, 4);
        let dn = ward_cluster(&ds).unwrap();
        for k in [1, 5, 12, 24] {
            let view = cut(&dn, &ds, k).unwrap();
            for (c, members) in view.member_lists().iter().enumerate() {
                let mut mean = vec![0.0; ds.dim()];
                for &p in members {
                    for (t, v) in mean.iter_mut().enumerate() {
                        *v += ds.point(p)[t];
                    }
                }
                for v in &mut mean {
                    *v /= members.len() as f64;
                }
                for (a, b) in view.clusters[c].centroid.iter().zip(&mean) {
                    assert!((a - b).abs() < 1e-9, "k={k} cluster {c}");
                }
            }
        }
    }

    #[test]
    fn cut_equals_stream() {
        let ds = random_dataset(32, 2, 2, 5);
        let dn = ward_cluster(&ds).unwrap();
        let mut sweep = partitions(&dn, &ds).unwrap();
        while sweep.k() != 7 {
            sweep.advance();
        }
        let streamed = sweep.view().clone();
        let direct = cut(&dn, &ds, 7).unwrap();
        assert_eq!(streamed, direct);
    }

    #[test]
    fn k_out_of_range() {
        let ds = random_dataset(8, 2, 2, 6);
        let dn = ward_cluster(&ds).unwrap();
        assert!(matches!(cut(&dn, &ds, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(cut(&dn, &ds, 9), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn mismatched_dendrogram_rejected() {
        let ds = random_dataset(8, 2, 2, 7);
        let other = random_dataset(9, 2, 2, 8);
        let dn = ward_cluster(&other).unwrap();
        assert!(matches!(
            partitions(&dn, &ds),
            Err(Error::MismatchedDendrogram(_))
        ));
    }
}
