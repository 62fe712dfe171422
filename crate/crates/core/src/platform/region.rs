use super::{check_economy, PlatformError, RegionOptimum};
use crate::market::{demand_factor, finite, nonneg};
use crate::roots::bisect;

const XTOL: f64 = 1e-15;

/// `sqrt(x)` for a discriminant, with rounding-level negatives at a
/// repeated root snapped to zero. `None` when genuinely negative.
fn disc_sqrt(x: f64, scale: f64) -> Option<f64> {
    if x.abs() <= 8.0 * f64::EPSILON * scale {
        Some(0.0)
    } else if x < 0.0 {
        None
    } else {
        Some(x.sqrt())
    }
}

/// Free-entry driver count: the larger root of `c / W(n) = cbar`, or zero
/// when no entry level pays the reservation wage.
pub fn entry_n(c: f64, p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> f64 {
    let lambda = lambda_bar * demand_factor(p, alpha);
    if lambda <= 0.0 || c <= 0.0 {
        return 0.0;
    }
    let ratio = c / cbar;
    match disc_sqrt(ratio * ratio - 4.0 * t / lambda, ratio * ratio) {
        Some(root) => (ratio + root) * lambda / 2.0,
        None => 0.0,
    }
}

/// Platform profit per hour, `(p - c) (lambda / 2) [1 + sqrt(1 - 4t cbar² / (lambda c²))]`.
pub fn region_profit(c: f64, p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> f64 {
    let lambda = lambda_bar * demand_factor(p, alpha);
    if lambda <= 0.0 || c <= 0.0 {
        return 0.0;
    }
    match disc_sqrt(1.0 - 4.0 * t / lambda * (cbar / c).powi(2), 1.0) {
        Some(root) => (p - c) * lambda / 2.0 * (1.0 + root),
        None => 0.0,
    }
}

/// Access implied by terms `(c, p)` under free entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyAccess {
    pub access: f64,
    pub served: bool,
}

/// `A = f(p) [1 + sqrt(1 - 4t cbar² / (lambda_bar f(p) c²))] / 2`; depends on
/// demand and size only through their ratio.
pub fn access_of_strategy(c: f64, p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> StrategyAccess {
    let f = demand_factor(p, alpha);
    if f <= 0.0 || c <= 0.0 || lambda_bar <= 0.0 {
        return StrategyAccess { access: 0.0, served: false };
    }
    match disc_sqrt(1.0 - 4.0 * t / (lambda_bar * f) * (cbar / c).powi(2), 1.0) {
        Some(root) => StrategyAccess { access: f * (1.0 + root) / 2.0, served: true },
        None => StrategyAccess { access: 0.0, served: false },
    }
}

/// Wage that delivers access `A`: `c = cbar sqrt((t / lambda_bar) f / (A f - A²))`.
///
/// Inverts [`access_of_strategy`] for `A >= f(p) / 2`; below that the
/// formula returns the wage of the (unstable) smaller entry root.
pub fn wage_from_access(access: f64, p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<f64, PlatformError> {
    check_economy(lambda_bar, t, cbar, alpha)?;
    finite("access", access)?;
    let f = demand_factor(p, alpha);
    if !(access > 0.0 && access < f) {
        return Err(PlatformError::AccessOutOfRange { access, demand_factor: f });
    }
    Ok(cbar * ((t / lambda_bar) * f / (access * f - access * access)).sqrt())
}

fn optimum_at(c: f64, p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> RegionOptimum {
    let drivers = entry_n(c, p, lambda_bar, t, cbar, alpha);
    if drivers <= 0.0 {
        return RegionOptimum::unserved(p, c);
    }
    RegionOptimum {
        price: p,
        wage: c,
        drivers,
        access: access_of_strategy(c, p, lambda_bar, t, cbar, alpha).access,
        margin: p - c,
        profit: region_profit(c, p, lambda_bar, t, cbar, alpha),
        served: true,
    }
}

/// Profit-maximizing wage at a fixed price.
///
/// The region is served iff `lambda_bar / t >= 4 (cbar / p)² / f(p)`; the
/// wage then solves `sqrt(c² - a) = a p / c² - c` with
/// `a = 4 t cbar² / lambda(p)` on `(sqrt(a), p]`.
pub fn optimal_wage(p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<RegionOptimum, PlatformError> {
    check_economy(lambda_bar, t, cbar, alpha)?;
    nonneg("price", p)?;
    let lambda = lambda_bar * demand_factor(p, alpha);
    if lambda <= 0.0 || p <= 0.0 {
        return Ok(RegionOptimum::unserved(p, 0.0));
    }
    let a = 4.0 * t * cbar * cbar / lambda;
    if p * p < a {
        return Ok(RegionOptimum::unserved(p, 0.0));
    }
    let lo = a.sqrt();
    let c = if p * p == a {
        p
    } else {
        bisect(|c| (c * c - a).max(0.0).sqrt() - (a * p / (c * c) - c), lo, p, XTOL, 400)?
    };
    Ok(optimum_at(c, p, lambda_bar, t, cbar, alpha))
}

/// Same optimum as [`optimal_wage`], found in access space: solves
/// `2p / (cbar f^{3/2}) = sqrt((t / lambda_bar) / (A (f - A)³))` for
/// `A in [f/2, f)` and maps back through [`wage_from_access`].
pub fn optimal_wage_by_access(p: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<RegionOptimum, PlatformError> {
    check_economy(lambda_bar, t, cbar, alpha)?;
    nonneg("price", p)?;
    let f = demand_factor(p, alpha);
    if f <= 0.0 || p <= 0.0 || lambda_bar <= 0.0 {
        return Ok(RegionOptimum::unserved(p, 0.0));
    }
    let lhs = (2.0 * p / (cbar * f.powf(1.5))).ln();
    let rhs = |a: f64| 0.5 * ((t / lambda_bar).ln() - a.ln() - 3.0 * (f - a).ln());
    let half = f / 2.0;
    if rhs(half) > lhs {
        return Ok(RegionOptimum::unserved(p, 0.0));
    }
    let access = bisect(|a| rhs(a) - lhs, half, f * (1.0 - 1e-15), XTOL, 400)?;
    let c = if access == half {
        // Discriminant-zero boundary: the wage equals the price.
        2.0 * cbar * (t / (lambda_bar * f)).sqrt()
    } else {
        wage_from_access(access, p, lambda_bar, t, cbar, alpha)?
    };
    Ok(optimum_at(c, p, lambda_bar, t, cbar, alpha))
}

/// Profit-maximizing price at a fixed wage.
///
/// Served iff `4 (cbar / c)² / (1 - alpha c) <= lambda_bar / t`. The
/// log-profit first-order condition is strictly decreasing in `p` on the
/// feasible interval, so it is bisected there.
pub fn optimal_price(c: f64, lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<RegionOptimum, PlatformError> {
    check_economy(lambda_bar, t, cbar, alpha)?;
    nonneg("wage", c)?;
    if c <= 0.0 || lambda_bar <= 0.0 {
        return Ok(RegionOptimum::unserved(c, c));
    }
    let k = 4.0 * t * cbar * cbar / (lambda_bar * c * c);
    let u_at_c = 1.0 - alpha * c;
    if u_at_c < k {
        return Ok(RegionOptimum::unserved(c, c));
    }
    let p_hi = (1.0 - k) / alpha;
    if p_hi <= c {
        return Ok(optimum_at(c, c, lambda_bar, t, cbar, alpha));
    }
    let foc = |p: f64| -> f64 {
        let u = 1.0 - alpha * p;
        if u <= k {
            return f64::NEG_INFINITY;
        }
        if p <= c {
            return f64::INFINITY;
        }
        let s = (1.0 - k / u).sqrt();
        let ds = -k * alpha / (2.0 * s * u * u);
        1.0 / (p - c) - alpha / u + ds / (1.0 + s)
    };
    let p = bisect(foc, c, p_hi, XTOL, 400)?;
    Ok(optimum_at(c, p, lambda_bar, t, cbar, alpha))
}
