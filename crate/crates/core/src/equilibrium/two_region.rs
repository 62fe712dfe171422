//! Closed-form treatment of the two-region market with a common size `t`.

use serde::Serialize;

use super::{EquilibriumError, EquilibriumResult};
use crate::roots::{bisect, cubic_real_roots};

/// Existence conditions for the two-region all-regions equilibrium.
///
/// `a1`: enough drivers to put both regions on increasing wait branches.
/// `a2`/`a3`: at each region's wait minimizer, the other region (holding
/// the remaining drivers) has a weakly higher wait. Slacks are
/// `rhs - lhs`, non-negative when the condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub slack_a1: f64,
    pub slack_a2: f64,
    pub slack_a3: f64,
}

impl ExistenceReport {
    pub fn all(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

fn check_domain(l1: f64, l2: f64, total: f64, t: f64) -> Result<(), EquilibriumError> {
    let ok = [l1, l2, total, t].iter().all(|v| v.is_finite()) && l1 >= l2 && l2 > 0.0 && t > 0.0 && total > 0.0;
    if ok {
        Ok(())
    } else {
        Err(EquilibriumError::Domain(format!(
            "two-region solver needs lambda1 >= lambda2 > 0, t > 0, N > 0; got ({l1}, {l2}, {total}, {t})"
        )))
    }
}

fn minimum_wait_slack(lj: f64, li: f64, total: f64, t: f64) -> f64 {
    let lhs = 2.0 * (t / lj).sqrt();
    let rest = total - (lj * t).sqrt();
    if rest <= 0.0 {
        return f64::NEG_INFINITY;
    }
    rest / li + t / rest - lhs
}

pub fn existence_two_region(l1: f64, l2: f64, total: f64, t: f64) -> Result<ExistenceReport, EquilibriumError> {
    check_domain(l1, l2, total, t)?;
    let slack_a1 = total - ((l1 * t).sqrt() + (l2 * t).sqrt());
    let slack_a2 = minimum_wait_slack(l1, l2, total, t);
    let slack_a3 = minimum_wait_slack(l2, l1, total, t);
    Ok(ExistenceReport {
        a1: slack_a1 >= 0.0,
        a2: slack_a2 >= 0.0,
        a3: slack_a3 >= 0.0,
        slack_a1,
        slack_a2,
        slack_a3,
    })
}

fn wait_gap(n: f64, l1: f64, l2: f64, total: f64, t: f64) -> f64 {
    let m = total - n;
    (n / l1 + t / n) - (m / l2 + t / m)
}

fn result(n1: f64, l1: f64, l2: f64, total: f64, t: f64) -> EquilibriumResult {
    let drivers = vec![n1, total - n1];
    let w = n1 / l1 + t / n1;
    EquilibriumResult::from_drivers(drivers, &[l1, l2], &[t, t], w)
}

/// Solves `W_1(n) = W_2(N - n)` through the real roots of the cubic
///
/// `-(l1 + l2) n³ + N (2 l1 + l2) n² - (N² l1 + 2 t l1 l2) n + N t l1 l2 = 0`,
///
/// keeping the root between the two wait minimizers. Ambiguous filtering
/// falls back to bisection.
pub fn solve_two_region(l1: f64, l2: f64, total: f64, t: f64) -> Result<EquilibriumResult, EquilibriumError> {
    let report = existence_two_region(l1, l2, total, t)?;
    if !report.all() {
        return Err(no_equilibrium(l1, l2, total, t, report));
    }
    let lo = (l1 * t).sqrt();
    let hi = total - (l2 * t).sqrt();
    let roots = cubic_real_roots(
        -(l1 + l2),
        total * (2.0 * l1 + l2),
        -(total * total * l1 + 2.0 * t * l1 * l2),
        total * t * l1 * l2,
    );
    let slack = 1e-9 * total;
    let inside: Vec<f64> = roots.iter().copied().filter(|&r| r >= lo - slack && r <= hi + slack).collect();
    let near_edge = inside.iter().any(|&r| (r - lo).abs() <= slack || (r - hi).abs() <= slack);
    if inside.len() == 1 && !near_edge {
        return Ok(result(inside[0], l1, l2, total, t));
    }
    solve_two_region_bisection(l1, l2, total, t)
}

/// Bisection on `W_1(n) - W_2(N - n)` over the interval between the two
/// wait minimizers. Independent of the cubic route.
pub fn solve_two_region_bisection(l1: f64, l2: f64, total: f64, t: f64) -> Result<EquilibriumResult, EquilibriumError> {
    let report = existence_two_region(l1, l2, total, t)?;
    if !report.all() {
        return Err(no_equilibrium(l1, l2, total, t, report));
    }
    let lo = (l1 * t).sqrt();
    let hi = total - (l2 * t).sqrt();
    let n1 = bisect(|n| wait_gap(n, l1, l2, total, t), lo, hi, 1e-15, 400)?;
    Ok(result(n1, l1, l2, total, t))
}

fn no_equilibrium(l1: f64, l2: f64, total: f64, t: f64, report: ExistenceReport) -> EquilibriumError {
    EquilibriumError::NoAllRegionsEquilibrium {
        required: (l1 * t).sqrt() + (l2 * t).sqrt(),
        available: total,
        report: Some(report),
    }
}
