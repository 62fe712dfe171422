//! Estimators for the relative-outflow and driver-behavior regressions.
//!
//! Standard errors are classical (homoskedastic, unclustered) throughout.

mod kink;
mod linalg;
mod logit;
mod ols;
pub mod synth;

pub use kink::{nls_kink, KinkFit, KinkForm, KinkOptions};
pub use logit::{logit_mle, LogitOptions};
pub use ols::{ols_fe, FeMethod, OlsOptions};

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::panel::PanelError;

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("design is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("{rows} rows cannot identify {parameters} parameters")]
    TooFewRows { rows: usize, parameters: usize },
    #[error("fixed-effect demeaning did not converge after {iterations} sweeps (residual {residual})")]
    DemeanNoConvergence { iterations: usize, residual: f64 },
    #[error("fixed effect `{dimension}` has {levels} levels, above the dummy limit {limit}")]
    TooManyLevels { dimension: String, levels: usize, limit: usize },
    #[error("separation: standardized coefficient on `{term}` reached {coefficient}")]
    Separation { term: String, coefficient: f64 },
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("no convergence after {iterations} iterations (gradient max-norm {gradient_norm})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },
    #[error("kink location unidentified: {0}")]
    Unidentified(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("csv output failed: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
}

impl Coefficient {
    pub(crate) fn new(term: impl Into<String>, estimate: f64, se: f64) -> Self {
        Self { term: term.into(), estimate, se, t: estimate / se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub estimator: String,
    pub coefficients: Vec<Coefficient>,
    pub nobs: usize,
    pub df_resid: usize,
    pub residual_variance: f64,
    pub r_squared: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub aic: Option<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub kink: Option<KinkFit>,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    /// `term,estimate,se,t` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EconError> {
        let io = |e: csv::Error| EconError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        for c in &self.coefficients {
            w.serialize(c).map_err(io)?;
        }
        w.flush().map_err(|e| EconError::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut s = format!("estimator {}\nnobs {}\ndf_resid {}\n", self.estimator, self.nobs, self.df_resid);
        s += &format!("residual_variance {}\n", self.residual_variance);
        if let Some(r2) = self.r_squared {
            s += &format!("r_squared {r2}\n");
        }
        if let (Some(ll), Some(aic)) = (self.log_likelihood, self.aic) {
            s += &format!("log_likelihood {ll}\naic {aic}\n");
        }
        s += &format!("iterations {}\ngradient_norm {}\nconverged {}\n", self.iterations, self.gradient_norm, self.converged);
        if let Some(k) = &self.kink {
            s += &format!("a_max {}\na_max_se {}\n", k.a_max, k.a_max_se);
        }
        s
    }
}
