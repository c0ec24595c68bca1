//! Shared domain types: the validated dataset, seeds, metric curves, the
//! deterministic RNG, and the squared-Euclidean kernel.

pub mod rng;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// A 64-bit seed. Identical seeds plus identical inputs give bit-identical
/// subsamples, folds, and draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(u64);

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

/// Labeled points in a fixed d-dimensional representation space.
///
/// Immutable after construction; safe to share read-only across workers.
#[derive(Debug, Clone)]
pub struct EmbeddedDataset {
    vectors: Array2<f64>,
    labels: Vec<usize>,
    label_vocab: Vec<String>,
    positive_class: usize,
}

impl EmbeddedDataset {
    /// Number of points.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Dimensionality of the representation space.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn num_labels(&self) -> usize {
        self.label_vocab.len()
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_vocab(&self) -> &[String] {
        &self.label_vocab
    }

    pub fn positive_class(&self) -> usize {
        self.positive_class
    }

    /// Fraction of points carrying the positive class.
    pub fn prevalence(&self) -> f64 {
        let pos = self
            .labels
            .iter()
            .filter(|&&y| y == self.positive_class)
            .count();
        pos as f64 / self.len() as f64
    }

    /// Per-label counts over the whole dataset.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.num_labels()];
        for &y in &self.labels {
            hist[y] += 1;
        }
        hist
    }

    /// Boolean gold indicators for the positive class.
    pub fn positive_indicators(&self) -> Vec<bool> {
        let pos = self.positive_class;
        self.labels.iter().map(|&y| y == pos).collect()
    }

    /// New dataset from a subset of rows, preserving order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<EmbeddedDataset> {
        let d = self.dim();
        let mut vectors = Array2::zeros((rows.len(), d));
        let mut labels = Vec::with_capacity(rows.len());
        for (out, &r) in rows.iter().enumerate() {
            vectors.row_mut(out).assign(&self.vectors.row(r));
            labels.push(self.labels[r]);
        }
        validate_dataset(
            vectors,
            labels,
            self.label_vocab.clone(),
            self.positive_class,
        )
    }
}

/// Checks every dataset invariant and returns the validated dataset.
///
/// Rejects non-finite entries, out-of-vocabulary labels, shape disagreements,
/// and label assignments for which AUC-PR would be undefined (positive class
/// absent or universal).
pub fn validate_dataset(
    vectors: Array2<f64>,
    labels: Vec<usize>,
    label_vocab: Vec<String>,
    positive_class: usize,
) -> Result<EmbeddedDataset> {
    let n = vectors.nrows();
    let d = vectors.ncols();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {n} rows but {} labels given",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::ShapeMismatch(format!("need n >= 2 points, got {n}")));
    }
    if d < 1 {
        return Err(Error::ShapeMismatch("need d >= 1 dimensions".into()));
    }
    for ((row, col), &v) in vectors.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    for (row, &label) in labels.iter().enumerate() {
        if label >= label_vocab.len() {
            return Err(Error::LabelOutOfRange {
                row,
                label,
                vocab_len: label_vocab.len(),
            });
        }
    }
    if positive_class >= label_vocab.len() {
        return Err(Error::LabelOutOfRange {
            row: 0,
            label: positive_class,
            vocab_len: label_vocab.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y == positive_class).count();
    if pos == 0 {
        return Err(Error::DegenerateLabels(format!(
            "positive class '{}' absent",
            label_vocab[positive_class]
        )));
    }
    if pos == n {
        return Err(Error::DegenerateLabels(format!(
            "positive class '{}' is universal; no negatives",
            label_vocab[positive_class]
        )));
    }
    Ok(EmbeddedDataset {
        vectors,
        labels,
        label_vocab,
        positive_class,
    })
}

/// Uniform sample without replacement, deterministic in the seed, preserving
/// the original row order among selected rows.
pub fn subsample(ds: &EmbeddedDataset, size: usize, seed: Seed) -> Result<EmbeddedDataset> {
    let n = ds.len();
    if size < 2 || size > n {
        return Err(Error::SizeOutOfRange { size, n });
    }
    if size == n {
        return ds.select_rows(&(0..n).collect::<Vec<_>>());
    }
    let mut rng = rng::Rng::from_seed(seed);
    let rows = rng.sample_indices(n, size);
    ds.select_rows(&rows).map_err(|e| match e {
        Error::DegenerateLabels(msg) => Error::DegenerateLabels(format!(
            "{msg} in subsample of size {size}; retry with a different seed or a larger size"
        )),
        other => other,
    })
}

/// Squared Euclidean distance between two equal-dimension vectors.
pub fn squared_euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(sq_dist_slices(
        a.as_slice().expect("contiguous"),
        b.as_slice().expect("contiguous"),
    ))
}

/// Inner kernel over contiguous slices; callers guarantee equal lengths.
#[inline]
pub(crate) fn sq_dist_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// A metric indexed by a sweep variable (cluster count k, or training size N)
/// together with its area aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    index: Vec<usize>,
    values: Vec<f64>,
    area: f64,
}

impl CurveSeries {
    /// `index` must be strictly increasing and match `values` in length.
    pub fn new(index: Vec<usize>, values: Vec<f64>, area: f64) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "curve index has {} entries, values {}",
                index.len(),
                values.len()
            )));
        }
        if index.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ShapeMismatch(
                "curve index must be strictly increasing".into(),
            ));
        }
        Ok(CurveSeries {
            index,
            values,
            area,
        })
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.index.iter().copied().zip(self.values.iter().copied())
    }
}

/// Mean of a slice; NaN on empty input.
pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
pub(crate) fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
