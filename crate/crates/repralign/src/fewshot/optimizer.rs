//! Deterministic full-batch trainer for the L2-regularized logistic
//! objective: limited-memory BFGS with backtracking line search.
//!
//! Objective over parameters (w, b):
//!   (1/m) sum_i softplus(-t_i (w.x_i + b)) + (lambda/2) ||w||^2
//! with t_i = +-1; the bias is unregularized. The objective is convex, so
//! descent from the zero start guarantees the returned loss never exceeds
//! the zero-initialization loss.

use ndarray::ArrayView2;

use super::{sigmoid, LogisticModel};
use crate::{Error, Result};

const LBFGS_MEMORY: usize = 8;
const ARMIJO_C1: f64 = 1e-4;

/// Trains the model by minimizing mean log-loss plus (lambda/2)||w||^2.
/// Terminates when the relative loss decrease drops below `tol` or after
/// `max_iter` iterations; in the latter case the best iterate is returned
/// with `converged = false`.
pub fn train_logistic(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogisticModel> {
    let m = x.nrows();
    let d = x.ncols();
    if m != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows vs {} targets",
            m,
            y.len()
        )));
    }
    if m < 2 {
        return Err(Error::ShapeMismatch(format!("need m >= 2 samples, got {m}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::ShapeMismatch(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == m {
        return Err(Error::SingleClass);
    }
    for ((row, col), &v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }

    // params = [w_0..w_{d-1}, b]
    let mut params = vec![0.0f64; d + 1];
    let mut grad = vec![0.0f64; d + 1];
    let mut loss = objective(x, y, lambda, &params, &mut grad);

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    let mut converged = false;
    for _ in 0..max_iter {
        let direction = lbfgs_direction(&grad, &s_hist, &y_hist, &rho_hist);
        let dir_dot_grad: f64 = direction.iter().zip(&grad).map(|(p, g)| p * g).sum();
        if dir_dot_grad >= 0.0 {
            // not a descent direction (numerical breakdown); restart memory
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }

        // backtracking Armijo line search
        let mut step = 1.0f64;
        let mut new_params = params.clone();
        let mut new_grad = vec![0.0; d + 1];
        let mut new_loss;
        loop {
            for (np, (p, dir)) in new_params
                .iter_mut()
                .zip(params.iter().zip(&direction))
            {
                *np = p + step * dir;
            }
            new_loss = objective(x, y, lambda, &new_params, &mut new_grad);
            if new_loss <= loss + ARMIJO_C1 * step * dir_dot_grad {
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                break;
            }
        }
        if step < 1e-20 || !new_loss.is_finite() {
            break;
        }

        let s: Vec<f64> = new_params
            .iter()
            .zip(&params)
            .map(|(a, b)| a - b)
            .collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-18 {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
            rho_hist.push(1.0 / sy);
        }

        let decrease = loss - new_loss;
        params = new_params;
        grad = new_grad;
        loss = new_loss;
        if decrease <= tol * loss.abs().max(1e-300) {
            converged = true;
            break;
        }
    }

    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let bias = params[d];
    params.truncate(d);
    Ok(LogisticModel {
        weights: params,
        bias,
        lambda,
        loss,
        grad_norm,
        converged,
    })
}

/// Loss value and gradient at `params`; gradient written into `grad`.
pub(crate) fn objective(
    x: ArrayView2<'_, f64>,
    y: &[bool],
    lambda: f64,
    params: &[f64],
    grad: &mut [f64],
) -> f64 {
    let m = x.nrows();
    let d = x.ncols();
    let (weights, bias) = (&params[..d], params[d]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let z: f64 = row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>() + bias;
        let target = if y[i] { 1.0 } else { 0.0 };
        let margin = if y[i] { z } else { -z };
        loss += softplus(-margin);
        let residual = sigmoid(z) - target;
        for (g, a) in grad[..d].iter_mut().zip(row) {
            *g += residual * a;
        }
        grad[d] += residual;
    }
    loss /= m as f64;
    for g in grad.iter_mut() {
        *g /= m as f64;
    }
    let mut penalty = 0.0;
    for (g, w) in grad[..d].iter_mut().zip(weights) {
        *g += lambda * w;
        penalty += w * w;
    }
    loss + 0.5 * lambda * penalty
}

#[inline]
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Two-loop recursion; falls back to scaled steepest descent with empty
/// history.
fn lbfgs_direction(
    grad: &[f64],
    s_hist: &[Vec<f64>],
    y_hist: &[Vec<f64>],
    rho_hist: &[f64],
) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = vec![0.0; s_hist.len()];
    for i in (0..s_hist.len()).rev() {
        let alpha = rho_hist[i] * dot(&s_hist[i], &q);
        for (qv, yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= alpha * yv;
        }
        alphas[i] = alpha;
    }
    let gamma = if let (Some(s), Some(yv)) = (s_hist.last(), y_hist.last()) {
        let yy = dot(yv, yv);
        if yy > 0.0 {
            dot(s, yv) / yy
        } else {
            1.0
        }
    } else {
        let g_norm = dot(grad, grad).sqrt();
        1.0 / (1.0 + g_norm)
    };
    for qv in q.iter_mut() {
        *qv *= gamma;
    }
    for i in 0..s_hist.len() {
        let beta = rho_hist[i] * dot(&y_hist[i], &q);
        for (qv, sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alphas[i] - beta) * sv;
        }
    }
    for qv in q.iter_mut() {
        *qv = -*qv;
    }
    q
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_pair_has_zero_bias() {
        let x = array![[-1.0], [1.0]];
        let y = [false, true];
        let model = train_logistic(x.view(), &y, 0.1, 1e-12, 500).unwrap();
        assert!(model.bias.abs() < 1e-8, "bias {}", model.bias);
        assert!(model.weights[0] > 0.0);
        assert!(model.converged);
    }

    #[test]
    fn weight_norm_shrinks_with_lambda() {
        let x = array![[-2.0], [-1.0], [1.0], [2.0]];
        let y = [false, false, true, true];
        let mut prev = f64::INFINITY;
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let model = train_logistic(x.view(), &y, lambda, 1e-12, 500).unwrap();
            let norm = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!(norm < prev, "lambda {lambda}: {norm} !< {prev}");
            prev = norm;
        }
    }

    #[test]
    fn loss_not_above_zero_init() {
        let x = array![[0.3, -1.2], [0.7, 0.4], [-0.9, 0.1], [0.2, 0.8]];
        let y = [true, false, true, false];
        let lambda = 0.5;
        let model = train_logistic(x.view(), &y, lambda, 1e-9, 500).unwrap();
        let mut grad = vec![0.0; 3];
        let zero_loss = objective(x.view(), &y, lambda, &[0.0, 0.0, 0.0], &mut grad);
        assert!(model.loss <= zero_loss + 1e-15);
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            train_logistic(x.view(), &[true, true], 0.1, 1e-9, 10),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn nonfinite_rejected() {
        let x = array![[0.0], [f64::NAN]];
        assert!(matches!(
            train_logistic(x.view(), &[true, false], 0.1, 1e-9, 10),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences_on_20_random_instances() {
        use crate::core::rng::Rng;
        use crate::Seed;
        use ndarray::Array2;

        let mut rng = Rng::from_seed(Seed::new(0x9a));
        for case in 0..20 {
            let m = 4 + rng.next_below(20);
            let d = 1 + rng.next_below(6);
            let x = Array2::from_shape_fn((m, d), |_| rng.next_standard_normal());
            let mut y: Vec<bool> = (0..m).map(|_| rng.next_below(2) == 1).collect();
            y[0] = false;
            y[1] = true;
            let lambda = 10f64.powi(rng.next_below(5) as i32 - 3);
            let params: Vec<f64> = (0..=d).map(|_| 0.5 * rng.next_standard_normal()).collect();
            let mut grad = vec![0.0; d + 1];
            objective(x.view(), &y, lambda, &params, &mut grad);
            let h = 1e-6;
            for t in 0..=d {
                let mut hi = params.clone();
                let mut lo = params.clone();
                hi[t] += h;
                lo[t] -= h;
                let mut scratch = vec![0.0; d + 1];
                let fh = objective(x.view(), &y, lambda, &hi, &mut scratch);
                let fl = objective(x.view(), &y, lambda, &lo, &mut scratch);
                let fd = (fh - fl) / (2.0 * h);
                assert!(
                    (grad[t] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                    "case {case} component {t}: {} vs {fd}",
                    grad[t]
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = array![
            [0.5, -0.3, 0.8],
            [-1.1, 0.2, 0.4],
            [0.9, 0.7, -0.6],
            [-0.2, -0.8, 0.3],
            [0.1, 0.6, -0.9]
        ];
        let y = [true, false, true, false, true];
        let lambda = 0.3;
        let params = [0.2, -0.4, 0.1, 0.05];
        let mut grad = vec![0.0; 4];
        objective(x.view(), &y, lambda, &params, &mut grad);
        let h = 1e-6;
        for t in 0..4 {
            let mut hi = params.to_vec();
            let mut lo = params.to_vec();
            hi[t] += h;
            lo[t] -= h;
            let mut scratch = vec![0.0; 4];
            let fh = objective(x.view(), &y, lambda, &hi, &mut scratch);
            let fl = objective(x.view(), &y, lambda, &lo, &mut scratch);
            let fd = (fh - fl) / (2.0 * h);
            assert!(
                (grad[t] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "component {t}: {} vs {}",
                grad[t],
                fd
            );
        }
    }
}
