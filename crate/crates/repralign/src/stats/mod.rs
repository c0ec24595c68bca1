//! Pearson and Spearman correlation with two-sided p-values, plus report
//! matrices for cross-dataset metric summaries.
//!
//! p-values come from the exact t transform t = r sqrt((n-2)/(1-r^2))
//! against Student's t with n-2 degrees of freedom, evaluated through the
//! regularized incomplete beta function. Spearman uses mid-ranks for ties;
//! for n <= 9 pairs its p-value is the exact permutation probability, the t
//! approximation otherwise.

mod special;

pub use special::{regularized_incomplete_beta, student_t_two_sided_p};

use crate::{Error, Result};

/// Paired metric observations with both correlation coefficients.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub pairs: Vec<(f64, f64, String)>,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_r: f64,
    pub spearman_p: f64,
}

/// Builds a full report from tagged (x, y) pairs.
pub fn correlate(pairs: Vec<(f64, f64, String)>) -> Result<CorrelationReport> {
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (pearson_r, pearson_p) = pearson(&x, &y)?;
    let (spearman_r, spearman_p) = spearman(&x, &y)?;
    Ok(CorrelationReport {
        pairs,
        pearson_r,
        pearson_p,
        spearman_r,
        spearman_p,
    })
}

/// Sample Pearson correlation and its two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pairs(x, y)?;
    let r = pearson_r(x, y)?;
    Ok((r, student_t_two_sided_p(r, x.len())))
}

/// Spearman rank correlation (mid-ranks for ties) and two-sided p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pairs(x, y)?;
    let rx = midranks(x);
    let ry = midranks(y);
    let r = pearson_r(&rx, &ry)?;
    let p = if x.len() <= 9 {
        permutation_p(&rx, &ry, r)
    } else {
        student_t_two_sided_p(r, x.len())
    };
    Ok((r, p))
}

fn check_pairs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} x values vs {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::TooFewPairs(x.len()));
    }
    Ok(())
}

fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    // sqrt of the product (not product of sqrts) so that exact linear
    // relations yield r = 1 exactly
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Mid-ranks: tied values share the average of the ranks they occupy.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the block i..j shares the mean rank
        let shared = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = shared;
        }
        i = j;
    }
    ranks
}

/// Exact two-sided permutation p-value for small n: the fraction of
/// permutations of the y ranks with |r| at least as large as observed.
fn permutation_p(rx: &[f64], ry: &[f64], observed: f64) -> f64 {
    let mut perm: Vec<f64> = ry.to_vec();
    let n = perm.len();
    let mut counts = [0u64; 2]; // [at least as extreme, total]
    let threshold = observed.abs() - 1e-12;

    // Heap's algorithm, iterative
    let mut c = vec![0usize; n];
    let mut tally = |perm: &[f64]| {
        counts[1] += 1;
        if let Ok(r) = pearson_r(rx, perm) {
            if r.abs() >= threshold {
                counts[0] += 1;
            }
        }
    };
    tally(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            tally(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    counts[0] as f64 / counts[1] as f64
}

/// One metric's representation x dataset matrix with row means, sorted by
/// descending row mean.
#[derive(Debug, Clone)]
pub struct ReportMatrix {
    pub metric: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// `cells[r][c]`; missing grid entries are None.
    pub cells: Vec<Vec<Option<f64>>>,
    pub row_means: Vec<f64>,
}

/// One observation for a report matrix.
#[derive(Debug, Clone)]
pub struct ReportCell {
    pub rep: String,
    pub dataset: String,
    pub metric: String,
    pub value: f64,
}

/// Groups cells by metric into matrices. Row and column order follows first
/// occurrence in the input; rows are then sorted by descending row mean.
/// Insertion order of equal inputs does not affect the result.
pub fn build_report(cells: &[ReportCell]) -> Result<Vec<ReportMatrix>> {
    let mut metrics: Vec<String> = Vec::new();
    for cell in cells {
        if !metrics.contains(&cell.metric) {
            metrics.push(cell.metric.clone());
        }
    }
    let mut out = Vec::new();
    for metric in metrics {
        let group: Vec<&ReportCell> = cells.iter().filter(|c| c.metric == metric).collect();
        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        for cell in &group {
            if !rows.contains(&cell.rep) {
                rows.push(cell.rep.clone());
            }
            if !cols.contains(&cell.dataset) {
                cols.push(cell.dataset.clone());
            }
        }
        rows.sort();
        cols.sort();
        let mut grid: Vec<Vec<Option<f64>>> = vec![vec![None; cols.len()]; rows.len()];
        for cell in &group {
            let r = rows.iter().position(|v| v == &cell.rep).unwrap();
            let c = cols.iter().position(|v| v == &cell.dataset).unwrap();
            if grid[r][c].is_some() {
                return Err(Error::DuplicateCell {
                    rep: cell.rep.clone(),
                    dataset: cell.dataset.clone(),
                    metric: metric.clone(),
                });
            }
            grid[r][c] = Some(cell.value);
        }
        let mut indexed: Vec<(usize, f64)> = grid
            .iter()
            .map(|row| {
                let present: Vec<f64> = row.iter().flatten().copied().collect();
                if present.is_empty() {
                    f64::NAN
                } else {
                    present.iter().sum::<f64>() / present.len() as f64
                }
            })
            .enumerate()
            .collect();
        indexed.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| rows[a.0].cmp(&rows[b.0]))
        });
        let mut sorted_rows = Vec::with_capacity(rows.len());
        let mut sorted_cells = Vec::with_capacity(rows.len());
        let mut row_means = Vec::with_capacity(rows.len());
        for (idx, mean) in indexed {
            sorted_rows.push(rows[idx].clone());
            sorted_cells.push(grid[idx].clone());
            row_means.push(mean);
        }
        out.push(ReportMatrix {
            metric,
            rows: sorted_rows,
            cols,
            cells: sorted_cells,
            row_means,
        });
    }
    Ok(out)
}
