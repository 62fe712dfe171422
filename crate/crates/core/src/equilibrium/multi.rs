use super::{fixed_total, EquilibriumError, EquilibriumResult};
use crate::market::MarketPrimitives;

const MAX_ITER: usize = 2_100;
const SUPPLY_TOL: f64 = 1e-10;

/// Drivers needed for wait `w` on the increasing branch of the wait curve,
/// `lambda (w + sqrt(w² - 4t/lambda)) / 2`. `None` below the curve minimum.
pub fn branch_drivers(w: f64, lambda: f64, t: f64) -> Option<f64> {
    if t == 0.0 {
        return Some(lambda * w);
    }
    let disc = w * w - 4.0 * t / lambda;
    if disc < 0.0 {
        // Within rounding of the minimum wait, snap to the minimizer.
        if disc > -1e-14 * w * w {
            return Some((lambda * t).sqrt());
        }
        return None;
    }
    Some(lambda * (w + disc.sqrt()) / 2.0)
}

/// Common wait `w` and allocation with every region on its increasing
/// branch and `sum n_i = total`.
///
/// Bisects on `w` above `max_i 2 sqrt(t_i / lambda_i)`, where total supply
/// is continuous and strictly increasing.
pub fn solve_common_wait(lambdas: &[f64], sizes: &[f64], total: f64) -> Result<(f64, Vec<f64>), EquilibriumError> {
    if lambdas.len() != sizes.len() || lambdas.is_empty() {
        return Err(EquilibriumError::Domain("demand and size vectors must be non-empty and equal length".into()));
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(EquilibriumError::Domain(format!("total drivers must be positive, got {total}")));
    }
    for (&l, &t) in lambdas.iter().zip(sizes) {
        if !(l.is_finite() && l > 0.0) || !(t.is_finite() && t >= 0.0) {
            return Err(EquilibriumError::Domain(format!("need lambda > 0 and t >= 0, got ({l}, {t})")));
        }
    }
    let supply = |w: f64| -> f64 {
        lambdas.iter().zip(sizes).map(|(&l, &t)| branch_drivers(w, l, t).unwrap_or(f64::NAN)).sum()
    };
    let w_lo = lambdas.iter().zip(sizes).map(|(&l, &t)| 2.0 * (t / l).sqrt()).fold(0.0, f64::max);
    let tol = SUPPLY_TOL * total.max(1.0);
    let s_lo = supply(w_lo);
    if s_lo > total + tol {
        return Err(EquilibriumError::NoAllRegionsEquilibrium { required: s_lo, available: total, report: None });
    }
    let lambda_sum: f64 = lambdas.iter().sum();
    let mut lo = w_lo;
    let mut hi = (2.0 * total / lambda_sum).max(w_lo);
    while supply(hi) < total {
        hi *= 2.0;
    }
    let mut w = if (s_lo - total).abs() <= tol { lo } else { 0.5 * (lo + hi) };
    let mut gap = supply(w) - total;
    let mut iterations = 0;
    // Bisect down to the last representable midpoint; `tol` only decides
    // whether the minimum-wait boundary already balances supply.
    while gap != 0.0 && !(w == lo && gap.abs() <= tol) {
        if iterations == MAX_ITER {
            return Err(EquilibriumError::NoConvergence { iterations, lo, hi, gap });
        }
        if gap > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        w = mid;
        gap = supply(w) - total;
        iterations += 1;
    }
    let drivers = lambdas.iter().zip(sizes).map(|(&l, &t)| branch_drivers(w, l, t).unwrap_or(0.0)).collect();
    Ok((w, drivers))
}

/// All-regions equilibrium for a fixed driver total.
pub fn solve_all_regions(prims: &MarketPrimitives) -> Result<EquilibriumResult, EquilibriumError> {
    let total = fixed_total(prims)?;
    let lambdas = prims.lambdas();
    let sizes = prims.sizes();
    let (w, drivers) = solve_common_wait(&lambdas, &sizes, total)?;
    Ok(EquilibriumResult::from_drivers(drivers, &lambdas, &sizes, w))
}
