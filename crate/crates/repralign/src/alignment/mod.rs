//! Per-partition label-probability scores, tie-aware average precision, and
//! the THAS aggregate over all dendrogram levels.
//!
//! Every point is scored by the relative frequency of each label inside its
//! cluster. The partition alignment score is the area under the
//! precision-recall curve of the positive-class scores against the gold
//! positive indicators, with tied scores processed as one block. THAS is the
//! mean alignment over all n levels of the dendrogram.
//!
//! Two exact identities pin the endpoints and are asserted in tests: the
//! singleton partition scores 1, and the root partition scores the positive
//! prevalence (a single tie block).

use crate::core::{mean, sample_std, CurveSeries};
use crate::hierclust::{Dendrogram, PartitionView};
use crate::{EmbeddedDataset, Error, Result};

/// n x |Y| label-probability scores for one partition. Rows are
/// within-cluster label frequencies and sum to 1; points sharing a cluster
/// share identical rows.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    n: usize,
    num_labels: usize,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn score(&self, point: usize, label: usize) -> f64 {
        self.scores[point * self.num_labels + label]
    }

    pub fn row(&self, point: usize) -> &[f64] {
        &self.scores[point * self.num_labels..(point + 1) * self.num_labels]
    }

    /// One label's scores for all points.
    pub fn column(&self, label: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.score(i, label)).collect()
    }
}

/// Alignment curve over k = 1..n together with its mean, THAS.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub curve: CurveSeries,
    pub thas: f64,
}

/// Label probability scores for one partition: row i, column j holds
/// (count of label j in point i's cluster) / (cluster size).
pub fn label_scores(pv: &PartitionView, ds: &EmbeddedDataset) -> Result<ScoreMatrix> {
    check_partition(pv, ds)?;
    let n = ds.len();
    let num_labels = ds.num_labels();
    let mut scores = vec![0.0; n * num_labels];
    for (i, &c) in pv.assignment.iter().enumerate() {
        let stats = &pv.clusters[c];
        let size = stats.size as f64;
        let row = &mut scores[i * num_labels..(i + 1) * num_labels];
        for (slot, &count) in row.iter_mut().zip(&stats.histogram) {
            *slot = count as f64 / size;
        }
    }
    Ok(ScoreMatrix {
        n,
        num_labels,
        scores,
    })
}

/// Tie-grouped average precision: points are sorted by score descending,
/// equal scores are processed as one block, and each block contributes
/// (block recall gain) x (precision at block end).
pub fn average_precision(scores: &[f64], gold: &[bool]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} gold labels",
            scores.len(),
            gold.len()
        )));
    }
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
    }
    let total_pos = gold.iter().filter(|&&g| g).count();
    if total_pos == 0 || total_pos == gold.len() {
        return Err(Error::DegenerateLabels(
            "average precision needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut ap = 0.0;
    let mut cum_pos = 0usize;
    let mut cum_total = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut block_pos = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if gold[order[j]] {
                block_pos += 1;
            }
            j += 1;
        }
        cum_pos += block_pos;
        cum_total += j - i;
        if block_pos > 0 {
            let precision = cum_pos as f64 / cum_total as f64;
            ap += block_pos as f64 / total_pos as f64 * precision;
        }
        i = j;
    }
    Ok(ap)
}

/// Alignment score of one partition: average precision of the positive-class
/// column of the score matrix against the gold positive indicators.
pub fn partition_alignment(pv: &PartitionView, ds: &EmbeddedDataset) -> Result<f64> {
    check_partition(pv, ds)?;
    let blocks: Vec<(u64, u64)> = pv
        .clusters
        .iter()
        .map(|c| (c.histogram[ds.positive_class()] as u64, c.size as u64))
        .collect();
    Ok(cluster_average_precision(blocks))
}

/// THAS for the dataset's designated positive class.
pub fn thas(ds: &EmbeddedDataset, dn: &Dendrogram) -> Result<AlignmentResult> {
    thas_for_label(ds, dn, ds.positive_class())
}

/// THAS with an arbitrary label taking the role of the positive class.
pub fn thas_for_label(
    ds: &EmbeddedDataset,
    dn: &Dendrogram,
    label: usize,
) -> Result<AlignmentResult> {
    let n = ds.len();
    if dn.num_leaves() != n {
        return Err(Error::MismatchedDendrogram(format!(
            "dendrogram has {} leaves, dataset {} points",
            dn.num_leaves(),
            n
        )));
    }
    if label >= ds.num_labels() {
        return Err(Error::LabelOutOfRange {
            row: 0,
            label,
            vocab_len: ds.num_labels(),
        });
    }
    let hist = ds.label_histogram();
    if hist[label] == 0 || hist[label] == n {
        return Err(Error::DegenerateLabels(format!(
            "label '{}' absent or universal",
            ds.label_vocab()[label]
        )));
    }

    // Lightweight sweep: only (positives, size) per cluster is needed for
    // the alignment score, so partitions are folded as count pairs instead
    // of full views.
    let mut slots: Vec<(u64, u64)> = ds
        .labels()
        .iter()
        .map(|&y| ((y == label) as u64, 1u64))
        .collect();
    let mut slot_of_node: Vec<u32> = (0..2 * n - 1).map(|i| i as u32).collect();
    let mut node_of_slot: Vec<u32> = (0..n as u32).collect();

    // values_desc[m] = a(P_{n-m})
    let mut values_desc = Vec::with_capacity(n);
    values_desc.push(cluster_average_precision(slots.clone()));
    for (m, merge) in dn.merges().iter().enumerate() {
        let sa = slot_of_node[merge.left] as usize;
        let sb = slot_of_node[merge.right] as usize;
        let (lo, hi) = (sa.min(sb), sa.max(sb));
        slots[lo] = (slots[lo].0 + slots[hi].0, slots[lo].1 + slots[hi].1);
        let last = slots.len() - 1;
        slots.swap_remove(hi);
        node_of_slot.swap(hi, last);
        let moved_node = node_of_slot[hi];
        node_of_slot.pop();
        if hi != last {
            slot_of_node[moved_node as usize] = hi as u32;
        }
        let node_id = (n + m) as u32;
        slot_of_node[node_id as usize] = lo as u32;
        node_of_slot[lo] = node_id;
        values_desc.push(cluster_average_precision(slots.clone()));
    }

    values_desc.reverse(); // now indexed by k = 1..n
    let tau = mean(&values_desc);
    let curve = CurveSeries::new((1..=n).collect(), values_desc, tau)?;
    Ok(AlignmentResult { curve, thas: tau })
}

/// Mean and sample standard deviation of THAS across seeded runs.
#[derive(Debug, Clone, Copy)]
pub struct ThasSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run (see `spread_defined`).
    pub std_dev: f64,
    pub spread_defined: bool,
}

pub fn thas_averaged(runs: &[AlignmentResult]) -> Result<ThasSummary> {
    if runs.is_empty() {
        return Err(Error::EmptyRuns);
    }
    let taus: Vec<f64> = runs.iter().map(|r| r.thas).collect();
    Ok(ThasSummary {
        mean: mean(&taus),
        std_dev: sample_std(&taus),
        spread_defined: runs.len() > 1,
    })
}

/// Average precision over clusters given (positives, size) per cluster.
/// All points in a cluster share the score positives/size, so clusters with
/// equal score rationals form one tie block; equality is checked by cross
/// multiplication, exactly.
fn cluster_average_precision(mut blocks: Vec<(u64, u64)>) -> f64 {
    // sort by pos/size descending
    blocks.sort_unstable_by(|a, b| {
        let lhs = a.0 as u128 * b.1 as u128;
        let rhs = b.0 as u128 * a.1 as u128;
        rhs.cmp(&lhs)
    });
    let total_pos: u64 = blocks.iter().map(|b| b.0).sum();
    debug_assert!(total_pos > 0);
    let mut ap = 0.0;
    let mut cum_pos = 0u64;
    let mut cum_total = 0u64;
    let mut i = 0;
    while i < blocks.len() {
        let mut block_pos = 0u64;
        let mut block_total = 0u64;
        let mut j = i;
        while j < blocks.len()
            && blocks[j].0 as u128 * blocks[i].1 as u128
                == blocks[i].0 as u128 * blocks[j].1 as u128
        {
            block_pos += blocks[j].0;
            block_total += blocks[j].1;
            j += 1;
        }
        cum_pos += block_pos;
        cum_total += block_total;
        if block_pos > 0 {
            ap += block_pos as f64 / total_pos as f64 * (cum_pos as f64 / cum_total as f64);
        }
        i = j;
    }
    ap
}

fn check_partition(pv: &PartitionView, ds: &EmbeddedDataset) -> Result<()> {
    if pv.assignment.len() != ds.len() {
        return Err(Error::MismatchedPartition(format!(
            "partition covers {} points, dataset has {}",
            pv.assignment.len(),
            ds.len()
        )));
    }
    if pv.clusters.iter().any(|c| c.histogram.len() != ds.num_labels()) {
        return Err(Error::MismatchedPartition(
            "cluster histogram width differs from vocabulary".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate_dataset;
    use crate::hierclust::{cut, partitions, ward_cluster};
    use ndarray::{array, Array2};

    fn vocab2() -> Vec<String> {
        vec!["neg".into(), "pos".into()]
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let ap = average_precision(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn constant_scores_give_prevalence() {
        let scores = [0.5; 8];
        let gold = [true, false, false, false, true, false, false, false];
        let ap = average_precision(&scores, &gold).unwrap();
        assert_eq!(ap, 0.25);
    }

    #[test]
    fn interleaved_ranking_matches_hand_value() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_gold_rejected() {
        assert!(matches!(
            average_precision(&[0.1, 0.2], &[true, true]),
            Err(Error::DegenerateLabels(_))
        ));
        assert!(matches!(
            average_precision(&[0.1, 0.2], &[false, false]),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn mixed_cluster_rows() {
        // cluster {+,+,-} -> rows [1/3 neg, 2/3 pos]
        let m = array![[0.0], [0.1], [0.2], [9.0]];
        let ds = validate_dataset(m, vec![1, 1, 0, 0], vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        let pv = cut(&dn, &ds, 2).unwrap();
        let sm = label_scores(&pv, &ds).unwrap();
        for i in 0..3 {
            assert!((sm.score(i, 0) - 1.0 / 3.0).abs() < 1e-15);
            assert!((sm.score(i, 1) - 2.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(sm.row(3), &[1.0, 0.0]);
    }

    #[test]
    fn score_rows_sum_to_one_and_match_cluster() {
        let m = Array2::from_shape_fn((12, 2), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let labels = vec![0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0];
        let ds = validate_dataset(m, labels, vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        for k in 1..=12 {
            let pv = cut(&dn, &ds, k).unwrap();
            let sm = label_scores(&pv, &ds).unwrap();
            for i in 0..12 {
                let sum: f64 = sm.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                for j in 0..12 {
                    if pv.assignment[i] == pv.assignment[j] {
                        assert_eq!(sm.row(i), sm.row(j));
                    }
                }
            }
        }
    }

    #[test]
    fn endpoint_identities() {
        let m = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 13 + j * 5) % 17) as f64 * 0.25);
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i % 3 == 0)).collect();
        let ds = validate_dataset(m, labels, vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        let leaves = cut(&dn, &ds, 30).unwrap();
        assert_eq!(partition_alignment(&leaves, &ds).unwrap(), 1.0);
        let root = cut(&dn, &ds, 1).unwrap();
        assert_eq!(partition_alignment(&root, &ds).unwrap(), ds.prevalence());
    }

    #[test]
    fn two_pure_clusters_score_one() {
        let m = array![[0.0], [0.1], [10.0], [10.1]];
        let ds = validate_dataset(m, vec![0, 0, 1, 1], vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        let pv = cut(&dn, &ds, 2).unwrap();
        assert_eq!(partition_alignment(&pv, &ds).unwrap(), 1.0);
    }

    #[test]
    fn identical_vectors_dual_route() {
        // all merge costs are zero, so the merge order among identical
        // points is pure tie-breaking; whatever order it is, the fast
        // count-sweep must agree with per-level scoring of the full
        // score matrix, and the endpoint identities must hold
        let n = 12;
        let m = Array2::from_elem((n, 2), 4.2);
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i % 4 == 0)).collect();
        let ds = validate_dataset(m, labels, vocab2(), 1).unwrap();
        let pi = ds.prevalence();
        let dn = ward_cluster(&ds).unwrap();
        let result = thas(&ds, &dn).unwrap();
        let mut sweep = partitions(&dn, &ds).unwrap();
        loop {
            let pv = sweep.view();
            let direct = partition_alignment(pv, &ds).unwrap();
            let from_curve = result.curve.values()[pv.k - 1];
            assert!(
                (direct - from_curve).abs() < 1e-12,
                "k = {}: {direct} vs {from_curve}",
                pv.k
            );
            if !sweep.advance() {
                break;
            }
        }
        assert_eq!(result.curve.values()[n - 1], 1.0);
        assert!((result.curve.values()[0] - pi).abs() < 1e-15);
    }

    #[test]
    fn curve_is_indexed_by_ascending_k() {
        let m = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let ds = validate_dataset(m, labels, vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        let result = thas(&ds, &dn).unwrap();
        assert_eq!(result.curve.index(), (1..=10).collect::<Vec<_>>());
        assert_eq!(result.curve.values()[0], ds.prevalence());
        assert_eq!(result.curve.values()[9], 1.0);
        assert!((result.thas - mean(result.curve.values())).abs() < 1e-15);
    }

    #[test]
    fn averaged_runs() {
        let m = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let ds = validate_dataset(m, labels, vocab2(), 1).unwrap();
        let dn = ward_cluster(&ds).unwrap();
        let r = thas(&ds, &dn).unwrap();
        let summary = thas_averaged(&[r.clone(), r.clone()]).unwrap();
        assert_eq!(summary.std_dev, 0.0);
        assert!(summary.spread_defined);
        let single = thas_averaged(&[r.clone()]).unwrap();
        assert_eq!(single.mean, r.thas);
        assert!(!single.spread_defined);
        assert_eq!(single.std_dev, 0.0);
        assert!(matches!(thas_averaged(&[]), Err(Error::EmptyRuns)));
    }
}
