/*!
Measures how well a fixed vector representation of labeled data is aligned
with its classification task.

The central quantity is the task hierarchical alignment score (THAS): a Ward
dendrogram is built over the representation, every level `k = 1..n` induces a
partition, each partition is scored by the area under the precision-recall
curve of cluster-frequency label scores, and THAS is the mean of that curve.

Supporting analyses mirror the experimental protocol the score was designed
for:

* [`quality`] — Davies-Bouldin curves over the same dendrogram and their
  ADBI aggregate.
* [`fewshot`] — few-shot learning curves of an L2-regularized logistic
  classifier and their ALC aggregate.
* [`stats`] — Pearson/Spearman correlation with p-values, plus report
  matrices for cross-dataset summaries.
* [`ingest`] — dense matrix loaders (CSV, NPY), label files, JSONL corpora,
  a term-frequency bag-of-words featurizer, and artifact persistence.
*/

pub mod alignment;
pub mod core;
mod error;
pub mod fewshot;
pub mod hierclust;
pub mod ingest;
pub mod quality;
pub mod stats;

pub use crate::core::{CurveSeries, EmbeddedDataset, Seed};
pub use crate::error::{Error, Result};
