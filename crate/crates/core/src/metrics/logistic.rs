//! Maximum-likelihood logistic regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_IRLS_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-8;
const MAX_ASCENT_ITERATIONS: usize = 20_000;
/// A standardized coefficient this large means the likelihood has no finite maximum.
const SEPARATION_BOUND: f64 = 25.0;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} observations for {features} feature(s), got {got}")]
    InsufficientData { needed: usize, features: usize, got: usize },
    #[error("feature rows and labels differ in length ({rows} vs {labels})")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("singular design: {0}")]
    Singular(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// `intercept` followed by the feature names.
    pub names: Vec<String>,
    /// Coefficients on the original feature scale.
    pub coefficients: Vec<f64>,
    /// McFadden's pseudo-R².
    pub pseudo_r2: f64,
    pub cox_snell_r2: f64,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood of `labels` under `σ(design · beta)`.
pub fn log_likelihood(beta: &[f64], design: &DMatrix<f64>, labels: &[bool]) -> f64 {
    let eta = design * DVector::from_column_slice(beta);
    eta.iter().zip(labels).map(|(e, &y)| if y { e - softplus(*e) } else { -softplus(*e) }).sum()
}

/// Gradient of [`log_likelihood`] with respect to `beta`.
pub fn gradient(beta: &[f64], design: &DMatrix<f64>, labels: &[bool]) -> Vec<f64> {
    let eta = design * DVector::from_column_slice(beta);
    let resid = DVector::from_iterator(labels.len(), eta.iter().zip(labels).map(|(e, &y)| f64::from(u8::from(y)) - sigmoid(*e)));
    (design.transpose() * resid).iter().copied().collect()
}

struct Standardized {
    design: DMatrix<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

fn standardize(features: &[Vec<f64>], p: usize) -> Result<Standardized, FitError> {
    let n = features.len();
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let m = features.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let v = features.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n as f64;
        if !v.is_finite() || v <= 0.0 {
            return Err(FitError::Singular(format!("feature {j} is constant or non-finite")));
        }
        means[j] = m;
        sds[j] = v.sqrt();
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { (features[i][j - 1] - means[j - 1]) / sds[j - 1] });
    Ok(Standardized { design, means, sds })
}

/// Newton–Raphson on the standardized design. Returns the coefficients, the
/// iteration count and whether the step criterion was met; `None` when the
/// weighted Hessian cannot be factored.
fn irls(x: &DMatrix<f64>, labels: &[bool]) -> Option<(Vec<f64>, usize, bool)> {
    let p = x.ncols();
    let mut beta = DVector::zeros(p);
    for it in 1..=MAX_IRLS_ITERATIONS {
        let eta = x * &beta;
        let mu: Vec<f64> = eta.iter().map(|e| sigmoid(*e)).collect();
        let w: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
        let resid = DVector::from_iterator(labels.len(), mu.iter().zip(labels).map(|(m, &y)| f64::from(u8::from(y)) - m));
        let grad = x.transpose() * resid;
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let hess = x.transpose() * xw;
        let step = hess.cholesky()?.solve(&grad);
        beta += &step;
        if beta.amax() > SEPARATION_BOUND {
            return Some((beta.iter().copied().collect(), it, false));
        }
        if step.amax() < TOLERANCE {
            return Some((beta.iter().copied().collect(), it, true));
        }
    }
    Some((beta.iter().copied().collect(), MAX_IRLS_ITERATIONS, false))
}

/// Backtracking gradient ascent, used when Newton steps are unavailable.
fn ascent(x: &DMatrix<f64>, labels: &[bool]) -> (Vec<f64>, usize, bool) {
    let mut beta = vec![0.0; x.ncols()];
    let mut ll = log_likelihood(&beta, x, labels);
    let mut rate = 1.0 / labels.len() as f64;
    for it in 1..=MAX_ASCENT_ITERATIONS {
        let g = gradient(&beta, x, labels);
        loop {
            let cand: Vec<f64> = beta.iter().zip(&g).map(|(b, d)| b + rate * d).collect();
            let cand_ll = log_likelihood(&cand, x, labels);
            if cand_ll >= ll {
                let delta = cand.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                beta = cand;
                ll = cand_ll;
                rate *= 1.5;
                if delta < TOLERANCE {
                    return (beta, it, true);
                }
                break;
            }
            rate /= 2.0;
            if rate < 1e-300 {
                return (beta, it, false);
            }
        }
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            return (beta, it, false);
        }
    }
    (beta, MAX_ASCENT_ITERATIONS, false)
}

/// Fits `P(y) = σ(β₀ + Σ βⱼ xⱼ)`. Features are standardized internally and the
/// coefficients mapped back to the original scale.
pub fn logistic_fit(features: &[Vec<f64>], labels: &[bool], names: &[&str]) -> Result<RegressionResult, FitError> {
    let n = features.len();
    let p = names.len();
    if n != labels.len() {
        return Err(FitError::LengthMismatch { rows: n, labels: labels.len() });
    }
    if let Some(bad) = features.iter().find(|r| r.len() != p) {
        return Err(FitError::Singular(format!("row of width {} for {p} feature name(s)", bad.len())));
    }
    if n < 10 * p.max(1) {
        return Err(FitError::InsufficientData { needed: 10 * p.max(1), features: p, got: n });
    }
    let std = standardize(features, p)?;
    let x = &std.design;
    if (x.transpose() * x).cholesky().is_none() {
        return Err(FitError::Singular("features are collinear".into()));
    }

    let positives = labels.iter().filter(|&&y| y).count();
    let mut diagnostic = None;
    let (beta_std, iterations, converged) = if positives == 0 || positives == n {
        diagnostic = Some("labels are constant".to_owned());
        (vec![0.0; p + 1], 0, false)
    } else {
        let (b, it, ok) = irls(x, labels).unwrap_or_else(|| {
            log::debug!("weighted Hessian not positive definite; falling back to gradient ascent");
            ascent(x, labels)
        });
        if !ok {
            diagnostic = Some(if b.iter().any(|v| v.abs() > SEPARATION_BOUND) {
                "coefficients diverge: perfect or quasi-complete separation".to_owned()
            } else {
                format!("no convergence within {it} iterations")
            });
        }
        (b, it, ok)
    };

    let ll = log_likelihood(&beta_std, x, labels);
    let ybar = positives as f64 / n as f64;
    let ll0 = if positives == 0 || positives == n {
        0.0
    } else {
        n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln())
    };
    let pseudo_r2 = if ll0 == 0.0 { 0.0 } else { 1.0 - ll / ll0 };
    let cox_snell_r2 = 1.0 - (2.0 * (ll0 - ll) / n as f64).exp();

    let mut coefficients = vec![beta_std[0]];
    for j in 0..p {
        coefficients[0] -= beta_std[j + 1] * std.means[j] / std.sds[j];
        coefficients.push(beta_std[j + 1] / std.sds[j]);
    }
    let mut all_names = vec!["intercept".to_owned()];
    all_names.extend(names.iter().map(|s| s.to_string()));
    Ok(RegressionResult {
        names: all_names,
        coefficients,
        pseudo_r2,
        cox_snell_r2,
        log_likelihood: ll,
        null_log_likelihood: ll0,
        n,
        iterations,
        converged,
        diagnostic,
    })
}

impl RegressionResult {
    /// Plain-text summary; coefficients are printed only for converged fits.
    pub fn report(&self, title: &str) -> String {
        let mut out = format!("{title}\n  n = {}\n", self.n);
        if !self.converged {
            out.push_str(&format!(
                "  not converged: {}\n",
                self.diagnostic.as_deref().unwrap_or("unknown reason")
            ));
            return out;
        }
        for (name, c) in self.names.iter().zip(&self.coefficients) {
            out.push_str(&format!("  {name:<24} {c:>12.6}\n"));
        }
        out.push_str(&format!("  pseudo R2 (McFadden)     {:>12.6}\n", self.pseudo_r2));
        out.push_str(&format!("  pseudo R2 (Cox-Snell)    {:>12.6}\n", self.cox_snell_r2));
        out.push_str(&format!("  log-likelihood           {:>12.4}\n", self.log_likelihood));
        out.push_str(&format!("  iterations               {:>12}\n", self.iterations));
        out
    }
}
