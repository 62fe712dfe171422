use nalgebra::{DMatrix, DVector};

use super::linalg::{check_rank, from_columns};
use super::ols::{dummy_columns, encode, Encoded};
use super::{Coefficient, EconError, FitResult, INTERCEPT};
use crate::panel::{column, PanelRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    /// Convergence threshold on the score's max-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Separation is declared when a coefficient times its regressor's
    /// standard deviation exceeds this.
    pub separation: f64,
    pub dummy_limit: usize,
}

impl Default for LogitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, separation: 30.0, dummy_limit: 1_000 }
    }
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

fn log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(&e, &yi)| yi * e - softplus(e)).sum()
}

struct Newton {
    score: DVector<f64>,
    information: DMatrix<f64>,
}

fn derivatives(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Newton {
    let eta = x * beta;
    let p = eta.map(sigmoid);
    let score = x.transpose() * (y - &p);
    let mut xw = x.clone();
    for (i, mut row) in xw.row_iter_mut().enumerate() {
        row *= (p[i] * (1.0 - p[i])).sqrt();
    }
    Newton { score, information: xw.transpose() * &xw }
}

fn std_dev(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Binary logit by Newton-Raphson with step halving. An intercept is always
/// included; each fixed-effect dimension enters as dummies.
pub fn logit_mle(rows: &[PanelRow], response: &str, regressors: &[&str], fe: &[&str], opts: &LogitOptions) -> Result<FitResult, EconError> {
    let n = rows.len();
    let y = column(rows, response)?;
    if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(EconError::Input(format!("logit response must be 0 or 1, found {bad}")));
    }
    let mut cols = vec![vec![1.0; n]];
    let mut names = vec![INTERCEPT.to_string()];
    for r in regressors {
        cols.push(column(rows, r)?);
        names.push(r.to_string());
    }
    let encoded: Vec<Encoded> = fe.iter().map(|d| encode(rows, d)).collect::<Result<_, _>>()?;
    let (d_cols, d_names) = dummy_columns(&encoded, opts.dummy_limit, true)?;
    cols.extend(d_cols);
    names.extend(d_names);
    let k = cols.len();
    if n <= k {
        return Err(EconError::TooFewRows { rows: n, parameters: k });
    }
    let scale: Vec<f64> = cols.iter().map(|c| std_dev(c)).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
    let x = from_columns(&cols, n);
    check_rank(&x, &names)?;
    let yv = DVector::from_vec(y);

    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(&x, &yv, &beta);
    let mut iterations = 0;
    let mut gnorm;
    loop {
        let d = derivatives(&x, &yv, &beta);
        gnorm = d.score.amax();
        if gnorm <= opts.tol {
            break;
        }
        if iterations == opts.max_iter {
            return Err(EconError::NoConvergence { iterations, gradient_norm: gnorm });
        }
        iterations += 1;
        let chol = d.information.cholesky().ok_or(EconError::SingularInformation)?;
        let step = chol.solve(&d.score);
        let mut t = 1.0;
        let mut candidate = &beta + &step;
        let mut cand_ll = log_likelihood(&x, &yv, &candidate);
        // Near the optimum likelihood changes fall below rounding, so only
        // a real decrease triggers halving.
        let floor = ll - 64.0 * f64::EPSILON * ll.abs();
        while !(cand_ll >= floor) && t > 1e-10 {
            t /= 2.0;
            candidate = &beta + &step * t;
            cand_ll = log_likelihood(&x, &yv, &candidate);
        }
        let moved = (&step * t).amax();
        beta = candidate;
        ll = cand_ll.max(ll);
        if let Some(j) = (0..k).find(|&j| (beta[j] * scale[j]).abs() > opts.separation) {
            return Err(EconError::Separation { term: names[j].clone(), coefficient: beta[j] * scale[j] });
        }
        // Rounding floor: the score of a large sample cannot reach an
        // absolute tolerance once Newton steps vanish.
        if moved <= 1e-15 * (1.0 + beta.amax()) {
            let g = derivatives(&x, &yv, &beta).score.amax();
            if g <= opts.tol * n as f64 {
                gnorm = g;
                break;
            }
        }
    }
    let d = derivatives(&x, &yv, &beta);
    let cov = d.information.cholesky().ok_or(EconError::SingularInformation)?.inverse();
    let coefficients = (0..k).map(|j| Coefficient::new(names[j].clone(), beta[j], cov[(j, j)].sqrt())).collect();
    let ll = log_likelihood(&x, &yv, &beta);
    Ok(FitResult {
        estimator: "logit".into(),
        coefficients,
        nobs: n,
        df_resid: n - k,
        residual_variance: f64::NAN,
        r_squared: None,
        log_likelihood: Some(ll),
        aic: Some(2.0 * k as f64 - 2.0 * ll),
        iterations,
        gradient_norm: gnorm,
        converged: true,
        kink: None,
    })
}
