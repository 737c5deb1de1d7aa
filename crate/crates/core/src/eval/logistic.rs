//! Multinomial logistic regression with an L2 penalty, fit by full-batch
//! gradient descent with backtracking line search.
//!
//! The objective is `Σ_i −ln softmax(W x_i + b)[y_i] + λ/2 ‖W‖²`; the bias is
//! not penalized. Training starts from zero weights, so a fit is fully
//! determined by its inputs.

use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lambda: f64,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lambda: 1.0,
            tolerance: 1e-6,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub classes: usize,
    pub features: usize,
    /// `classes × (features + 1)`, the bias last in each row.
    pub weights: Vec<f64>,
    /// Objective value after every accepted step, starting at the zero model.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

fn log_softmax_into(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    for s in scores.iter_mut() {
        *s -= lse;
    }
}

fn scores(weights: &[f64], classes: usize, x: &[f64], out: &mut [f64]) {
    let p = x.len();
    for (k, o) in out.iter_mut().enumerate().take(classes) {
        let w = &weights[k * (p + 1)..(k + 1) * (p + 1)];
        *o = w[p] + w[..p].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Objective value at `weights` (layout as [`LogisticModel::weights`]).
pub fn loss(weights: &[f64], x: &FeatureMatrix, y: &[usize], classes: usize, lambda: f64) -> f64 {
    let p = x.cols;
    let mut s = vec![0.0; classes];
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        scores(weights, classes, x.row(i), &mut s);
        log_softmax_into(&mut s);
        total -= s[yi];
    }
    total + 0.5 * lambda * penalized_sq_norm(weights, p, classes)
}

fn penalized_sq_norm(weights: &[f64], p: usize, classes: usize) -> f64 {
    (0..classes)
        .map(|k| weights[k * (p + 1)..k * (p + 1) + p].iter().map(|w| w * w).sum::<f64>())
        .sum()
}

/// Objective value and its gradient at `weights`.
pub fn loss_and_gradient(
    weights: &[f64],
    x: &FeatureMatrix,
    y: &[usize],
    classes: usize,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let p = x.cols;
    let mut grad = vec![0.0; weights.len()];
    let mut s = vec![0.0; classes];
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let xi = x.row(i);
        scores(weights, classes, xi, &mut s);
        log_softmax_into(&mut s);
        total -= s[yi];
        for k in 0..classes {
            let resid = s[k].exp() - if k == yi { 1.0 } else { 0.0 };
            let g = &mut grad[k * (p + 1)..(k + 1) * (p + 1)];
            for (gj, xj) in g[..p].iter_mut().zip(xi) {
                *gj += resid * xj;
            }
            g[p] += resid;
        }
    }
    for k in 0..classes {
        for j in 0..p {
            let idx = k * (p + 1) + j;
            grad[idx] += lambda * weights[idx];
        }
    }
    (total + 0.5 * lambda * penalized_sq_norm(weights, p, classes), grad)
}

/// Fits a classifier over `classes` labels. At least two distinct labels
/// must occur in `y`.
pub fn train_logistic(x: &FeatureMatrix, y: &[usize], classes: usize, config: &LogisticConfig) -> Result<LogisticModel> {
    if x.rows != y.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", x.rows, y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&k| k >= classes) {
        return Err(Error::OutOfRange(format!("label {bad} of {classes}")));
    }
    let mut seen = vec![false; classes];
    for &k in y {
        seen[k] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Degenerate("training rows contain fewer than two classes".into()));
    }

    let mut w = vec![0.0; classes * (x.cols + 1)];
    let (mut f, mut g) = loss_and_gradient(&w, x, y, classes, config.lambda);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut converged = false;
    for _ in 0..config.max_iterations {
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < config.tolerance {
            converged = true;
            break;
        }
        // Armijo backtracking, starting from twice the last accepted step.
        step *= 2.0;
        let mut candidate;
        loop {
            candidate = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect::<Vec<_>>();
            let fc = loss(&candidate, x, y, classes, config.lambda);
            if fc <= f - 1e-4 * step * gnorm2 {
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                // No decrease representable; treat as stationary.
                return Ok(LogisticModel {
                    classes,
                    features: x.cols,
                    weights: w,
                    loss_trace: trace,
                    converged: true,
                });
            }
        }
        w = candidate;
        (f, g) = loss_and_gradient(&w, x, y, classes, config.lambda);
        trace.push(f);
    }
    if !converged {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        converged = gnorm < config.tolerance;
        if !converged {
            log::warn!("logistic regression stopped at gradient norm {gnorm:.3e}");
        }
    }
    Ok(LogisticModel {
        classes,
        features: x.cols,
        weights: w,
        loss_trace: trace,
        converged,
    })
}

impl LogisticModel {
    /// Class probabilities of one feature row.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.classes];
        scores(&self.weights, self.classes, row, &mut s);
        log_softmax_into(&mut s);
        s.iter().map(|v| v.exp()).collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<usize> {
        (0..x.rows)
            .map(|i| crate::inference::argmax(&self.predict_proba(x.row(i))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChainRng;
    use rand::{Rng, SeedableRng};

    fn random_problem(seed: u64, n: usize, p: usize, k: usize) -> (FeatureMatrix, Vec<usize>, Vec<f64>) {
        let mut rng = ChainRng::seed_from_u64(seed);
        let data = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..n).map(|i| i % k).collect();
        let w = (0..k * (p + 1)).map(|_| rng.random_range(-0.5..0.5)).collect();
        (FeatureMatrix { rows: n, cols: p, data }, y, w)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y, w) = random_problem(1, 20, 8, 3);
        let (_, g) = loss_and_gradient(&w, &x, &y, 3, 1.0);
        let h = 1e-5;
        for j in 0..w.len() {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (loss(&plus, &x, &y, 3, 1.0) - loss(&minus, &x, &y, 3, 1.0)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn separable_points_are_fit() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = train_logistic(&x, &[0, 1], 2, &LogisticConfig { lambda: 0.01, ..Default::default() }).unwrap();
        assert_eq!(m.predict(&x), vec![0, 1]);
        assert!(m.converged);
    }

    #[test]
    fn loss_trace_never_rises() {
        let (x, y, _) = random_problem(4, 60, 5, 3);
        let m = train_logistic(&x, &y, 3, &LogisticConfig::default()).unwrap();
        assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.converged);
        let (_, g) = loss_and_gradient(&m.weights, &x, &y, 3, 1.0);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn single_class_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(train_logistic(&x, &[1, 1], 2, &LogisticConfig::default()), Err(Error::Degenerate(_))));
        assert!(train_logistic(&x, &[0, 2], 2, &LogisticConfig::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let (x, y, _) = random_problem(9, 30, 4, 2);
        let a = train_logistic(&x, &y, 2, &LogisticConfig::default()).unwrap();
        let b = train_logistic(&x, &y, 2, &LogisticConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
