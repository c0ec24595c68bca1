//! Few-shot evaluation harness: L2-regularized logistic (max-entropy)
//! classifier trained full-batch, seeded learning curves over small training
//! sizes, k-fold cross-validation for the regularization strength, and the
//! ALC aggregate.

mod optimizer;

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::core::{mean, rng::Rng, CurveSeries, Seed};
use crate::{EmbeddedDataset, Error, Result};

pub use optimizer::train_logistic;

/// Binary logistic model: p(y=1 | x) = sigmoid(w.x + b).
#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Training loss at the returned parameters.
    pub loss: f64,
    /// Gradient norm at exit.
    pub grad_norm: f64,
    /// False when the iteration budget ran out before the tolerance was met;
    /// the best iterate is still returned.
    pub converged: bool,
}

/// Evaluation metric for learning curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Accuracy,
    F1,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::F1 => "f1",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "accuracy" => Ok(MetricKind::Accuracy),
            "f1" => Ok(MetricKind::F1),
            other => Err(format!("unknown metric '{other}' (expected accuracy or f1)")),
        }
    }
}

/// Knobs shared by hyperparameter selection and learning curves.
#[derive(Debug, Clone)]
pub struct FewshotConfig {
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FewshotConfig {
    fn default() -> Self {
        FewshotConfig {
            folds: 5,
            // 10^-4 .. 10^2, log-spaced
            lambda_grid: (-4..=2).map(|e| 10f64.powi(e)).collect(),
            tol: 1e-9,
            max_iter: 500,
        }
    }
}

/// Test metric as a function of training size, averaged over seeds, plus
/// the per-seed raw values and the ALC aggregate (mean over sizes).
#[derive(Debug, Clone)]
pub struct LearningCurveResult {
    pub curve: CurveSeries,
    /// `per_seed[s][i]` = metric for seed s at the i-th training size.
    pub per_seed: Vec<Vec<f64>>,
    pub metric_kind: MetricKind,
    pub alc: f64,
}

/// Sigmoid of the linear score for every row.
pub fn predict_scores(model: &LogisticModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::DimensionMismatch(x.ncols(), model.weights.len()));
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let z: f64 = row
                .iter()
                .zip(&model.weights)
                .map(|(a, w)| a * w)
                .sum::<f64>()
                + model.bias;
            sigmoid(z)
        })
        .collect())
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Accuracy or positive-class F1 at the 0.5 threshold. Undefined precision
/// (no predicted positives) maps to F1 = 0.
pub fn metric(pred_scores: &[f64], gold: &[bool], kind: MetricKind) -> Result<f64> {
    if pred_scores.is_empty() || pred_scores.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} gold labels",
            pred_scores.len(),
            gold.len()
        )));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fnn = 0usize;
    for (&s, &g) in pred_scores.iter().zip(gold) {
        let pred = s >= 0.5;
        match (pred, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnn += 1,
        }
    }
    match kind {
        MetricKind::Accuracy => Ok((tp + tn) as f64 / gold.len() as f64),
        MetricKind::F1 => {
            if tp + fnn == 0 {
                return Err(Error::DegenerateLabels(
                    "F1 needs at least one gold positive".into(),
                ));
            }
            if tp == 0 {
                return Ok(0.0);
            }
            let precision = tp as f64 / (tp + fp) as f64;
            let recall = tp as f64 / (tp + fnn) as f64;
            Ok(2.0 * precision * recall / (precision + recall))
        }
    }
}

/// Seeded k-fold cross-validation over the lambda grid; returns the lambda
/// with the best mean validation metric, ties going to the smaller lambda.
pub fn select_hyperparams(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    grid: &[f64],
    folds: usize,
    metric_kind: MetricKind,
    seed: Seed,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let n = y.len();
    if folds < 2 || n < folds {
        return Err(Error::FoldTooSmall { n, folds });
    }
    if grid.is_empty() {
        return Err(Error::ShapeMismatch("empty lambda grid".into()));
    }
    let fold_sets = assign_folds(y, folds, seed)?;

    let mut lambdas: Vec<f64> = grid.to_vec();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup();

    let d = x.ncols();
    let mut best: Option<(f64, f64)> = None; // (mean metric, lambda)
    for &lambda in &lambdas {
        let mut scores = Vec::with_capacity(folds);
        for fold in &fold_sets {
            let in_fold: Vec<bool> = {
                let mut mask = vec![false; n];
                for &i in fold {
                    mask[i] = true;
                }
                mask
            };
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
            let mut train_x = ndarray::Array2::zeros((train_idx.len(), d));
            let mut train_y = Vec::with_capacity(train_idx.len());
            for (row, &i) in train_idx.iter().enumerate() {
                train_x.row_mut(row).assign(&x.row(i));
                train_y.push(y[i]);
            }
            let model = train_logistic(train_x.view(), &train_y, lambda, tol, max_iter)?;
            let mut val_x = ndarray::Array2::zeros((fold.len(), d));
            let mut val_y = Vec::with_capacity(fold.len());
            for (row, &i) in fold.iter().enumerate() {
                val_x.row_mut(row).assign(&x.row(i));
                val_y.push(y[i]);
            }
            let preds = predict_scores(&model, val_x.view())?;
            scores.push(metric(&preds, &val_y, metric_kind)?);
        }
        let m = mean(&scores);
        let better = match best {
            None => true,
            Some((bm, _)) => m > bm,
        };
        if better {
            best = Some((m, lambda));
        }
    }
    Ok(best.expect("nonempty grid").1)
}

/// Shuffled fold assignment; every fold must contain both classes. One
/// reshuffle is attempted before giving up.
fn assign_folds(y: &[bool], folds: usize, seed: Seed) -> Result<Vec<Vec<usize>>> {
    let n = y.len();
    let attempt = |s: Seed| -> Option<Vec<Vec<usize>>> {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::from_seed(s).shuffle(&mut order);
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); folds];
        for (pos, &i) in order.iter().enumerate() {
            sets[pos % folds].push(i);
        }
        for set in &sets {
            let pos = set.iter().filter(|&&i| y[i]).count();
            if pos == 0 || pos == set.len() {
                return None;
            }
        }
        Some(sets)
    };
    attempt(seed)
        .or_else(|| attempt(seed.derive(0x0f)))
        .ok_or(Error::FoldTooSmall { n, folds })
}

/// Learning curve over training sizes `ns`: for every (seed, N) cell, draw N
/// pool samples, cross-validate lambda, retrain on the full draw, and score
/// the held-out test set. The curve is the per-N mean over seeds and ALC its
/// mean over N.
pub fn learning_curve(
    pool: &EmbeddedDataset,
    test: &EmbeddedDataset,
    ns: &[usize],
    seeds: &[Seed],
    metric_kind: MetricKind,
    config: &FewshotConfig,
) -> Result<LearningCurveResult> {
    if ns.is_empty() || seeds.is_empty() {
        return Err(Error::EmptyRuns);
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ShapeMismatch(
            "training sizes must be strictly increasing".into(),
        ));
    }
    if pool.dim() != test.dim() {
        return Err(Error::DimensionMismatch(pool.dim(), test.dim()));
    }
    let max_n = *ns.last().unwrap();
    if max_n > pool.len() {
        return Err(Error::SizeOutOfRange {
            size: max_n,
            n: pool.len(),
        });
    }
    let pool_y: Vec<bool> = pool.positive_indicators();
    let test_y: Vec<bool> = test.positive_indicators();

    let cells: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|s| (0..ns.len()).map(move |i| (s, i)))
        .collect();
    let results: Vec<((usize, usize), Result<f64>)> = cells
        .par_iter()
        .map(|&(s, i)| {
            let value = evaluate_cell(
                pool, &pool_y, test, &test_y, ns[i], seeds[s], metric_kind, config,
            );
            ((s, i), value)
        })
        .collect();

    let mut per_seed = vec![vec![0.0; ns.len()]; seeds.len()];
    for ((s, i), value) in results {
        per_seed[s][i] = value?;
    }
    let values: Vec<f64> = (0..ns.len())
        .map(|i| mean(&per_seed.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect();
    let alc = mean(&values);
    let curve = CurveSeries::new(ns.to_vec(), values, alc)?;
    Ok(LearningCurveResult {
        curve,
        per_seed,
        metric_kind,
        alc,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    pool: &EmbeddedDataset,
    pool_y: &[bool],
    test: &EmbeddedDataset,
    test_y: &[bool],
    n_train: usize,
    seed: Seed,
    metric_kind: MetricKind,
    config: &FewshotConfig,
) -> Result<f64> {
    let cell_seed = seed.derive(n_train as u64);
    let draw = |s: Seed| -> Vec<usize> {
        Rng::from_seed(s).sample_indices(pool.len(), n_train)
    };
    let mut idx = draw(cell_seed);
    let single_class = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&i| pool_y[i]).count();
        pos == 0 || pos == idx.len()
    };
    if single_class(&idx) {
        // one retry with a derived seed, then give up
        idx = draw(cell_seed.derive(1));
        if single_class(&idx) {
            return Err(Error::DegenerateDraw { size: n_train });
        }
    }
    let d = pool.dim();
    let mut x = ndarray::Array2::zeros((n_train, d));
    let mut y = Vec::with_capacity(n_train);
    for (row, &i) in idx.iter().enumerate() {
        x.row_mut(row).assign(&pool.point(i));
        y.push(pool_y[i]);
    }
    let lambda = select_hyperparams(
        x.view(),
        &y,
        &config.lambda_grid,
        config.folds,
        metric_kind,
        cell_seed.derive(2),
        config.tol,
        config.max_iter,
    )?;
    let model = train_logistic(x.view(), &y, lambda, config.tol, config.max_iter)?;
    let preds = predict_scores(&model, test.vectors())?;
    metric(&preds, test_y, metric_kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate_dataset;
    use ndarray::{array, Array2};

    #[test]
    fn zero_model_predicts_half() {
        let model = LogisticModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            lambda: 1.0,
            loss: 0.0,
            grad_norm: 0.0,
            converged: true,
        };
        let x = array![[1.0, 2.0], [3.0, -4.0]];
        let p = predict_scores(&model, x.view()).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let model = LogisticModel {
            weights: vec![0.0],
            bias: 0.0,
            lambda: 1.0,
            loss: 0.0,
            grad_norm: 0.0,
            converged: true,
        };
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            predict_scores(&model, x.view()),
            Err(Error::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn metric_perfect_and_degenerate() {
        let gold = [true, false, true, false];
        let perfect = [0.9, 0.1, 0.8, 0.2];
        assert_eq!(metric(&perfect, &gold, MetricKind::Accuracy).unwrap(), 1.0);
        assert_eq!(metric(&perfect, &gold, MetricKind::F1).unwrap(), 1.0);
        // all-negative predictions with gold positives -> F1 = 0
        let all_neg = [0.1, 0.1, 0.1, 0.1];
        assert_eq!(metric(&all_neg, &gold, MetricKind::F1).unwrap(), 0.0);
        assert!(matches!(
            metric(&[0.9, 0.1], &[false, false], MetricKind::F1),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn metric_matches_confusion_matrix_oracle() {
        let scores = [0.7, 0.3, 0.6, 0.4, 0.9, 0.2, 0.51, 0.49];
        let gold = [true, true, false, false, true, false, true, false];
        let (mut tp, mut fp, mut fnn, mut correct) = (0.0, 0.0, 0.0, 0.0);
        for (&s, &g) in scores.iter().zip(&gold) {
            let p = s >= 0.5;
            if p && g {
                tp += 1.0;
            }
            if p && !g {
                fp += 1.0;
            }
            if !p && g {
                fnn += 1.0;
            }
            if p == g {
                correct += 1.0;
            }
        }
        let acc = correct / gold.len() as f64;
        let f1 = 2.0 * tp / (2.0 * tp + fp + fnn);
        assert_eq!(metric(&scores, &gold, MetricKind::Accuracy).unwrap(), acc);
        assert!((metric(&scores, &gold, MetricKind::F1).unwrap() - f1).abs() < 1e-15);
    }

    fn grid_dataset(n: usize, noise_seed: u64) -> EmbeddedDataset {
        let mut rng = Rng::from_seed(Seed::new(noise_seed));
        let m = Array2::from_shape_fn((n, 2), |(i, _)| {
            let base = if i % 2 == 0 { -2.0 } else { 2.0 };
            base + 0.5 * rng.next_standard_normal()
        });
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        validate_dataset(m, labels, vec!["neg".into(), "pos".into()], 1).unwrap()
    }

    #[test]
    fn grid_of_one_is_returned() {
        let ds = grid_dataset(40, 1);
        let y = ds.positive_indicators();
        let lambda = select_hyperparams(
            ds.vectors(),
            &y,
            &[0.37],
            5,
            MetricKind::Accuracy,
            Seed::new(0),
            1e-9,
            200,
        )
        .unwrap();
        assert_eq!(lambda, 0.37);
    }

    #[test]
    fn duplicated_grid_same_as_dedup() {
        let ds = grid_dataset(40, 2);
        let y = ds.positive_indicators();
        let args = |grid: &[f64]| {
            select_hyperparams(
                ds.vectors(),
                &y,
                grid,
                5,
                MetricKind::Accuracy,
                Seed::new(3),
                1e-9,
                200,
            )
            .unwrap()
        };
        assert_eq!(args(&[0.1, 1.0, 0.1, 1.0]), args(&[0.1, 1.0]));
    }

    #[test]
    fn selection_matches_exhaustive_reevaluation() {
        let ds = grid_dataset(30, 3);
        let y = ds.positive_indicators();
        let grid = [1e-3, 1e-1, 1e1];
        let seed = Seed::new(9);
        let folds = 3;
        let picked = select_hyperparams(
            ds.vectors(),
            &y,
            &grid,
            folds,
            MetricKind::Accuracy,
            seed,
            1e-9,
            300,
        )
        .unwrap();
        // independent recomputation with the same deterministic folds
        let sets = assign_folds(&y, folds, seed).unwrap();
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for &lambda in &grid {
            let mut vals = Vec::new();
            for fold in &sets {
                let train: Vec<usize> =
                    (0..y.len()).filter(|i| !fold.contains(i)).collect();
                let mut tx = Array2::zeros((train.len(), 2));
                let mut ty = Vec::new();
                for (r, &i) in train.iter().enumerate() {
                    tx.row_mut(r).assign(&ds.point(i));
                    ty.push(y[i]);
                }
                let model = train_logistic(tx.view(), &ty, lambda, 1e-9, 300).unwrap();
                let mut vx = Array2::zeros((fold.len(), 2));
                let mut vy = Vec::new();
                for (r, &i) in fold.iter().enumerate() {
                    vx.row_mut(r).assign(&ds.point(i));
                    vy.push(y[i]);
                }
                let p = predict_scores(&model, vx.view()).unwrap();
                vals.push(metric(&p, &vy, MetricKind::Accuracy).unwrap());
            }
            let m = mean(&vals);
            if m > best.0 {
                best = (m, lambda);
            }
        }
        assert_eq!(picked, best.1);
    }

    #[test]
    fn learning_curve_deterministic_and_alc_is_mean() {
        let pool = grid_dataset(200, 4);
        let test = grid_dataset(80, 5);
        let ns = [20, 40, 60];
        let seeds = [Seed::new(0), Seed::new(1)];
        let config = FewshotConfig {
            folds: 4,
            lambda_grid: vec![1e-2, 1.0],
            tol: 1e-9,
            max_iter: 200,
        };
        let a = learning_curve(&pool, &test, &ns, &seeds, MetricKind::Accuracy, &config).unwrap();
        let b = learning_curve(&pool, &test, &ns, &seeds, MetricKind::Accuracy, &config).unwrap();
        assert_eq!(a.curve.values(), b.curve.values());
        assert_eq!(a.per_seed, b.per_seed);
        assert!((a.alc - mean(a.curve.values())).abs() < 1e-15);
        assert!(a.alc > 0.9, "clean separation should score high: {}", a.alc);
    }

    #[test]
    fn alc_scales_linearly() {
        let values = [0.75, 0.75, 0.75];
        assert_eq!(mean(&values), 0.75);
        let scaled: Vec<f64> = values.iter().map(|v| v * 0.5).collect();
        assert_eq!(mean(&scaled), 0.375);
    }
}
