use serde::Serialize;

use super::{optimal_joint_normalized, PlatformError, RegionOptimum, SERVICE_THRESHOLD};
use crate::exec::{self, ExecMode};

const MONOTONE_TOL: f64 = 1e-10;
const CONCAVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda_tilde: f64,
    pub optimum: Option<RegionOptimum>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDiagnostics {
    pub wage_nonincreasing: bool,
    pub price_nonincreasing: bool,
    pub margin_nondecreasing: bool,
    pub access_nondecreasing: bool,
    /// Divided second differences of `log A` against `log lambda_tilde`,
    /// one per interior point.
    pub concavity_residuals: Vec<f64>,
    pub log_access_concave: bool,
    pub failures: usize,
}

impl SweepDiagnostics {
    pub fn all_pass(&self) -> bool {
        self.wage_nonincreasing
            && self.price_nonincreasing
            && self.margin_nondecreasing
            && self.access_nondecreasing
            && self.log_access_concave
            && self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
    pub diagnostics: SweepDiagnostics,
}

fn check_grid(grid: &[f64]) -> Result<(), PlatformError> {
    if grid.is_empty() {
        return Err(PlatformError::Domain("density grid is empty".into()));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !(x.is_finite() && x >= SERVICE_THRESHOLD)) {
        return Err(PlatformError::Domain(format!("density grid values must be finite and >= 27, got {bad}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PlatformError::Domain("density grid must be strictly increasing".into()));
    }
    Ok(())
}

fn monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] >= w[0] - MONOTONE_TOL } else { w[1] <= w[0] + MONOTONE_TOL })
}

fn second_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|k| {
            let s1 = (y[k] - y[k - 1]) / (x[k] - x[k - 1]);
            let s2 = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            (s2 - s1) / ((x[k + 1] - x[k - 1]) / 2.0)
        })
        .collect()
}

/// Joint optimum at every normalized density on `grid`, with the
/// comparative-statics diagnostics computed over the points that solved.
pub fn density_sweep(grid: &[f64], mode: ExecMode) -> Result<SweepTable, PlatformError> {
    check_grid(grid)?;
    let points: Vec<SweepPoint> = exec::map(mode, grid, |&lt| match optimal_joint_normalized(lt) {
        Ok(o) => SweepPoint { lambda_tilde: lt, optimum: Some(o), error: None },
        Err(e) => SweepPoint { lambda_tilde: lt, optimum: None, error: Some(e.to_string()) },
    });
    let solved: Vec<(f64, RegionOptimum)> = points.iter().filter_map(|p| p.optimum.map(|o| (p.lambda_tilde, o))).collect();
    let column = |f: fn(&RegionOptimum) -> f64| solved.iter().map(|(_, o)| f(o)).collect::<Vec<_>>();
    let access = column(|o| o.access);
    let log_l: Vec<f64> = solved.iter().map(|(l, _)| l.ln()).collect();
    let log_a: Vec<f64> = access.iter().map(|a| a.ln()).collect();
    let concavity_residuals = second_differences(&log_l, &log_a);
    let diagnostics = SweepDiagnostics {
        wage_nonincreasing: monotone(&column(|o| o.wage), false),
        price_nonincreasing: monotone(&column(|o| o.price), false),
        margin_nondecreasing: monotone(&column(|o| o.margin), true),
        access_nondecreasing: monotone(&access, true),
        log_access_concave: concavity_residuals.iter().all(|&r| r <= CONCAVITY_TOL),
        concavity_residuals,
        failures: points.len() - solved.len(),
    };
    Ok(SweepTable { points, diagnostics })
}

/// Access ratio of a sparser region `j` to a denser region `i`, before and
/// after scaling both densities by `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPair {
    pub dense: f64,
    pub sparse: f64,
    pub ratio: f64,
    pub thickened_ratio: f64,
}

impl DensityPair {
    /// `A_j / A_i <= A_j' / A_i' <= 1`.
    pub fn holds(&self) -> bool {
        self.ratio <= self.thickened_ratio + MONOTONE_TOL && self.thickened_ratio <= 1.0 + MONOTONE_TOL
    }
}

/// Every ordered pair of grid densities, thickened by `gamma > 1`.
pub fn thickening_pairs(grid: &[f64], gamma: f64, mode: ExecMode) -> Result<Vec<DensityPair>, PlatformError> {
    check_grid(grid)?;
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(PlatformError::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    let all: Vec<f64> = grid.iter().copied().chain(grid.iter().map(|l| l * gamma)).collect();
    let access: Vec<f64> = exec::map(mode, &all, |&l| optimal_joint_normalized(l).map(|o| o.access))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let (base, thick) = access.split_at(grid.len());
    let mut pairs = Vec::new();
    for i in 0..grid.len() {
        for j in 0..i {
            pairs.push(DensityPair {
                dense: grid[i],
                sparse: grid[j],
                ratio: base[j] / base[i],
                thickened_ratio: thick[j] / thick[i],
            });
        }
    }
    Ok(pairs)
}
