use std::collections::BTreeMap;

use nalgebra::DVector;

use super::linalg::{from_columns, least_squares};
use super::{Coefficient, EconError, FitResult, INTERCEPT};
use crate::panel::{column, key_column, PanelRow};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FeMethod {
    /// Sweep out group means, alternating over dimensions until stable.
    #[default]
    Demean,
    /// One indicator column per level (the first level of every dimension
    /// after the first is dropped).
    Dummies,
}

impl std::str::FromStr for FeMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "demean" => Ok(Self::Demean),
            "dummies" | "dummy" => Ok(Self::Dummies),
            other => Err(format!("unknown fixed-effect method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsOptions {
    pub method: FeMethod,
    pub demean_tol: f64,
    pub max_sweeps: usize,
    pub dummy_limit: usize,
}

impl Default for OlsOptions {
    fn default() -> Self {
        Self { method: FeMethod::Demean, demean_tol: 1e-10, max_sweeps: 10_000, dummy_limit: 1_000 }
    }
}

/// Level index of every row in one fixed-effect dimension, with the
/// sorted level names.
pub(crate) struct Encoded {
    pub name: String,
    pub index: Vec<usize>,
    pub levels: Vec<String>,
}

pub(crate) fn encode(rows: &[PanelRow], dimension: &str) -> Result<Encoded, EconError> {
    let keys = key_column(rows, dimension)?;
    let levels: BTreeMap<&str, usize> = {
        let mut sorted: Vec<&str> = keys.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    Ok(Encoded {
        name: dimension.to_string(),
        index: keys.iter().map(|k| levels[k]).collect(),
        levels: levels.keys().map(|k| k.to_string()).collect(),
    })
}

/// Indicator columns for the given dimensions. With `intercept` the first
/// level of every dimension is dropped, otherwise only from the second on.
pub(crate) fn dummy_columns(fe: &[Encoded], limit: usize, intercept: bool) -> Result<(Vec<Vec<f64>>, Vec<String>), EconError> {
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for (d, e) in fe.iter().enumerate() {
        if e.levels.len() > limit {
            return Err(EconError::TooManyLevels { dimension: e.name.clone(), levels: e.levels.len(), limit });
        }
        for (l, level) in e.levels.iter().enumerate().skip(usize::from(intercept || d > 0)) {
            cols.push(e.index.iter().map(|&i| if i == l { 1.0 } else { 0.0 }).collect());
            names.push(format!("{}={}", e.name, level));
        }
    }
    Ok((cols, names))
}

fn group_means(col: &[f64], e: &Encoded) -> Vec<f64> {
    let mut sum = vec![0.0; e.levels.len()];
    let mut count = vec![0.0; e.levels.len()];
    for (&g, &v) in e.index.iter().zip(col) {
        sum[g] += v;
        count[g] += 1.0;
    }
    sum.iter().zip(&count).map(|(s, c)| s / c).collect()
}

/// Alternating projections; returns the number of sweeps.
fn demean(cols: &mut [Vec<f64>], fe: &[Encoded], tol: f64, max_sweeps: usize) -> Result<usize, EconError> {
    let scale = cols.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut moved = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        moved = 0.0;
        for e in fe {
            for col in cols.iter_mut() {
                let means = group_means(col, e);
                moved = means.iter().fold(moved, |m, v| m.max(v.abs()));
                for (v, &g) in col.iter_mut().zip(&e.index) {
                    *v -= means[g];
                }
            }
        }
        if fe.len() == 1 || moved <= tol * scale {
            return Ok(sweep);
        }
    }
    Err(EconError::DemeanNoConvergence { iterations: max_sweeps, residual: moved })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Dimension of the span of all fixed-effect indicators. Exact for one or
/// two dimensions; for more it assumes the dimensions are connected.
fn absorbed_rank(fe: &[Encoded]) -> usize {
    match fe {
        [] => 0,
        [a] => a.levels.len(),
        [a, b] => {
            let (na, nb) = (a.levels.len(), b.levels.len());
            let mut parent: Vec<usize> = (0..na + nb).collect();
            for (&i, &j) in a.index.iter().zip(&b.index) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, na + j));
                parent[ri] = rj;
            }
            let components = (0..na + nb).filter(|&x| find(&mut parent, x) == x).count();
            na + nb - components
        }
        _ => fe.iter().map(|e| e.levels.len()).sum::<usize>() - (fe.len() - 1),
    }
}

/// Least squares of `response` on `regressors` with the key columns in `fe`
/// absorbed. Without fixed effects an intercept is added.
pub fn ols_fe(rows: &[PanelRow], response: &str, regressors: &[&str], fe: &[&str], opts: &OlsOptions) -> Result<FitResult, EconError> {
    let n = rows.len();
    let y = column(rows, response)?;
    let mut x_cols: Vec<Vec<f64>> = regressors.iter().map(|r| column(rows, r)).collect::<Result<_, _>>()?;
    let mut names: Vec<String> = regressors.iter().map(|s| s.to_string()).collect();
    let encoded: Vec<Encoded> = fe.iter().map(|d| encode(rows, d)).collect::<Result<_, _>>()?;
    if encoded.is_empty() {
        x_cols.insert(0, vec![1.0; n]);
        names.insert(0, INTERCEPT.to_string());
    }
    let reported = names.len();

    let (y_fit, absorbed, sweeps) = match (opts.method, encoded.is_empty()) {
        (_, true) => (y.clone(), 0, 0),
        (FeMethod::Dummies, false) => {
            let (d_cols, d_names) = dummy_columns(&encoded, opts.dummy_limit, false)?;
            x_cols.extend(d_cols);
            names.extend(d_names);
            (y.clone(), 0, 0)
        }
        (FeMethod::Demean, false) => {
            let mut all = vec![y.clone()];
            all.append(&mut x_cols);
            let sweeps = demean(&mut all, &encoded, opts.demean_tol, opts.max_sweeps)?;
            let y_dm = all.remove(0);
            x_cols = all;
            (y_dm, absorbed_rank(&encoded), sweeps)
        }
    };
    let parameters = x_cols.len() + absorbed;
    if n <= parameters {
        return Err(EconError::TooFewRows { rows: n, parameters });
    }
    let x = from_columns(&x_cols, n);
    let yv = DVector::from_vec(y_fit);
    let ls = least_squares(&x, &yv, &names)?;
    let df_resid = n - parameters;
    let sigma2 = ls.ssr / df_resid as f64;
    let coefficients = (0..reported)
        .map(|j| Coefficient::new(names[j].clone(), ls.beta[j], (sigma2 * ls.xtx_inv[(j, j)]).sqrt()))
        .collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let score = (x.transpose() * &ls.residuals).amax();
    Ok(FitResult {
        estimator: match (encoded.is_empty(), opts.method) {
            (true, _) => "ols".into(),
            (false, FeMethod::Demean) => "ols_fe_demean".into(),
            (false, FeMethod::Dummies) => "ols_fe_dummies".into(),
        },
        coefficients,
        nobs: n,
        df_resid,
        residual_variance: sigma2,
        r_squared: Some(if sst > 0.0 { 1.0 - ls.ssr / sst } else { 1.0 }),
        log_likelihood: None,
        aic: None,
        iterations: sweeps,
        gradient_norm: score,
        converged: true,
        kink: None,
    })
}
