//! One-vs-rest L2-regularised linear classifiers on prototype rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    /// Linear SVM, `½‖w‖² + C Σ max(0, 1 − y(w·x + b))`.
    #[default]
    Hinge,
    /// `½‖w‖² + C Σ log(1 + exp(−y(w·x + b)))`.
    Logistic,
}

const SVM_EPS: f64 = 1e-6;
const SVM_MAX_ITER: usize = 10_000;

/// Dual coordinate descent for the hinge-loss SVM. The bias is an extra
/// constant feature (and therefore regularised). Returns weights without the bias.
fn svm_weights(x: &DMatrix<f64>, y: &[f64], c: f64) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut w = DVector::zeros(p + 1);
    let mut alpha = vec![0.0; n];
    let q_diag: Vec<f64> = (0..n).map(|i| x.row(i).norm_squared() + 1.0).collect();
    let dot = |w: &DVector<f64>, i: usize| -> f64 {
        x.row(i).iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[p]
    };
    for _ in 0..SVM_MAX_ITER {
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for i in 0..n {
            let g = y[i] * dot(&w, i) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for j in 0..p {
                    w[j] += step * x[(i, j)];
                }
                w[p] += step;
            }
        }
        if pg_max - pg_min < SVM_EPS {
            break;
        }
    }
    w.rows(0, p).into_owned()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log1pexp(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Newton's method with backtracking; unregularised bias.
fn logistic_weights(x: &DMatrix<f64>, y: &[f64], c: f64) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut xa = DMatrix::from_element(n, p + 1, 1.0);
    xa.view_mut((0, 0), (n, p)).copy_from(x);
    let objective = |w: &DVector<f64>| -> f64 {
        let margins = &xa * w;
        0.5 * w.rows(0, p).norm_squared()
            + c * (0..n).map(|i| log1pexp(-y[i] * margins[i])).sum::<f64>()
    };
    let mut w = DVector::zeros(p + 1);
    let mut f = objective(&w);
    for _ in 0..100 {
        let margins = &xa * &w;
        let mut grad = w.clone();
        grad[p] = 0.0;
        let mut hess = DMatrix::identity(p + 1, p + 1);
        hess[(p, p)] = 1e-10;
        for i in 0..n {
            let s = sigmoid(-y[i] * margins[i]);
            let row = xa.row(i).transpose();
            grad -= &row * (c * s * y[i]);
            hess += &row * row.transpose() * (c * s * (1.0 - s));
        }
        if grad.norm() < 1e-10 {
            break;
        }
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let cand = &w - &step * t;
            let fc = objective(&cand);
            if fc <= f - 1e-4 * t * grad.dot(&step) {
                w = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    w.rows(0, p).into_owned()
}

/// Per-attribute importance: `Σ_class |w_class,j|` over one-vs-rest models.
/// Expects standardised columns, one row per class.
pub fn linear_importance(x: &DMatrix<f64>, loss: LinearLoss, c: f64) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut scores = vec![0.0; p];
    // Two classes need a single binary model.
    let models = if n == 2 { 1 } else { n };
    for class in 0..models {
        let y: Vec<f64> = (0..n).map(|i| if i == class { 1.0 } else { -1.0 }).collect();
        let w = match loss {
            LinearLoss::Hinge => svm_weights(x, &y, c),
            LinearLoss::Logistic => logistic_weights(x, &y, c),
        };
        for (s, v) in scores.iter_mut().zip(w.iter()) {
            *s += v.abs();
        }
    }
    scores
}
