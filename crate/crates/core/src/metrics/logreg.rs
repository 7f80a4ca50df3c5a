//! L2-regularized logistic regression solved by damped Newton iterations.

use crate::geometry::linalg;
use crate::{Error, Result};

/// Convergence threshold on the gradient ∞-norm.
pub const LOGREG_TOL: f64 = 1e-6;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Gradient ∞-norm at the returned point.
    pub grad_norm: f64,
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sample_weights(y: &[bool], balanced: bool) -> Result<Vec<f64>> {
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels("logistic regression needs both classes".into()));
    }
    let n = y.len() as f64;
    Ok(y.iter()
        .map(|&v| {
            if !balanced {
                1.0
            } else if v {
                n / (2.0 * n_pos as f64)
            } else {
                n / (2.0 * n_neg as f64)
            }
        })
        .collect())
}

fn check_features(x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) || x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature rows must be finite and of equal length"));
    }
    Ok(p)
}

fn objective(x: &[Vec<f64>], y: &[bool], s: &[f64], c: f64, theta: &[f64]) -> f64 {
    let p = theta.len() - 1;
    let reg = theta[..p].iter().map(|w| w * w).sum::<f64>() / (2.0 * c);
    let loss: f64 = x
        .iter()
        .zip(y)
        .zip(s)
        .map(|((xi, &yi), si)| {
            let m = theta[p] + theta[..p].iter().zip(xi).map(|(w, v)| w * v).sum::<f64>();
            si * softplus(if yi { -m } else { m })
        })
        .sum();
    reg + loss
}

/// `(1/(2C))·‖w‖² + Σᵢ sᵢ·log(1 + exp(−yᵢ(wᵀxᵢ + b)))` with `yᵢ = ±1`.
pub fn logreg_objective(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    balanced: bool,
    weights: &[f64],
    intercept: f64,
) -> Result<f64> {
    let p = check_features(x, y)?;
    if weights.len() != p {
        return Err(Error::invalid("weight length differs from feature dimension"));
    }
    let s = sample_weights(y, balanced)?;
    let mut theta = weights.to_vec();
    theta.push(intercept);
    Ok(objective(x, y, &s, c, &theta))
}

/// Minimizes [`logreg_objective`] until the gradient ∞-norm is at most [`LOGREG_TOL`].
///
/// `balanced` weighs sample `i` by `n / (2·n_class(i))`. The intercept is not
/// regularized.
pub fn logreg_fit(x: &[Vec<f64>], y: &[bool], c: f64, balanced: bool) -> Result<LogRegModel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("C must be positive and finite"));
    }
    let p = check_features(x, y)?;
    let s = sample_weights(y, balanced)?;
    let q = p + 1;
    let mut theta = vec![0.0; q];
    let mut f = objective(x, y, &s, c, &theta);
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let mut g = vec![0.0; q];
        let mut h = vec![0.0; q * q];
        for k in 0..p {
            g[k] = theta[k] / c;
            h[k * q + k] = 1.0 / c;
        }
        for ((xi, &yi), si) in x.iter().zip(y).zip(&s) {
            let m = theta[p] + theta[..p].iter().zip(xi).map(|(w, v)| w * v).sum::<f64>();
            let prob = sigmoid(m);
            let resid = si * (prob - if yi { 1.0 } else { 0.0 });
            let curv = si * prob * (1.0 - prob);
            for a in 0..q {
                let xa = if a < p { xi[a] } else { 1.0 };
                g[a] += resid * xa;
                for b in 0..=a {
                    let xb = if b < p { xi[b] } else { 1.0 };
                    h[a * q + b] += curv * xa * xb;
                }
            }
        }
        for a in 0..q {
            for b in 0..a {
                h[b * q + a] = h[a * q + b];
            }
        }
        grad_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !grad_norm.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        if grad_norm <= LOGREG_TOL || iterations >= MAX_ITER {
            break;
        }
        iterations += 1;

        // Tiny ridge keeps the system solvable when all margins saturate.
        let trace = (0..q).map(|a| h[a * q + a]).sum::<f64>();
        for a in 0..q {
            h[a * q + a] += 1e-12 * (1.0 + trace / q as f64);
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut dir = linalg::solve(&h, &neg_g, q).unwrap_or_else(|_| neg_g.clone());
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, gv)| d * gv).sum();
        if !(slope < 0.0) {
            dir = neg_g;
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let ft = objective(x, y, &s, c, &trial);
            if ft <= f + 1e-4 * step * slope {
                theta = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No representable decrease left: the point is optimal to machine precision.
            break;
        }
    }
    let intercept = theta.pop().expect("intercept slot");
    Ok(LogRegModel {
        weights: theta,
        intercept,
        iterations,
        grad_norm,
    })
}
