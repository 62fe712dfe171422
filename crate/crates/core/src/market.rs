//! Primitive market types and the closed-form per-region formulas:
//! linear demand, driver wait time, ride rate and access.
//!
//! Region size `t` is the normalized size (a quarter of the travel time
//! around the region), so the expected pickup time is `t / n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} out of range: {value} ({constraint})")]
    OutOfRange { name: &'static str, value: f64, constraint: &'static str },
    #[error("realized demand {lambda} exceeds potential demand {lambda_bar}")]
    DemandAbovePotential { lambda: f64, lambda_bar: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64, MarketError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(MarketError::NonFinite { name, value })
    }
}

pub(crate) fn nonneg(name: &'static str, value: f64) -> Result<f64, MarketError> {
    finite(name, value)?;
    if value < 0.0 {
        return Err(MarketError::OutOfRange { name, value, constraint: ">= 0" });
    }
    Ok(value)
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64, MarketError> {
    finite(name, value)?;
    if value <= 0.0 {
        return Err(MarketError::OutOfRange { name, value, constraint: "> 0" });
    }
    Ok(value)
}

/// Potential demand rate and normalized size of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub lambda_bar: f64,
    pub size_t: f64,
}

impl RegionParams {
    pub fn new(lambda_bar: f64, size_t: f64) -> Result<Self, MarketError> {
        Ok(Self { lambda_bar: nonneg("lambda_bar", lambda_bar)?, size_t: nonneg("size_t", size_t)? })
    }

    /// Demand density `lambda_bar / t`; infinite for frictionless regions.
    pub fn density(&self) -> f64 {
        if self.size_t == 0.0 {
            f64::INFINITY
        } else {
            self.lambda_bar / self.size_t
        }
    }
}

/// Regions plus the supply side. `total_drivers == None` means driver entry
/// is endogenous (free entry at the reservation wage).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPrimitives {
    regions: Vec<RegionParams>,
    pub total_drivers: Option<f64>,
    pub reservation_wage: f64,
    pub price_sensitivity: f64,
}

impl MarketPrimitives {
    /// Builds primitives with regions stably sorted by non-increasing
    /// density (frictionless regions first).
    pub fn new(
        mut regions: Vec<RegionParams>,
        total_drivers: Option<f64>,
        reservation_wage: f64,
        price_sensitivity: f64,
    ) -> Result<Self, MarketError> {
        for r in &regions {
            nonneg("lambda_bar", r.lambda_bar)?;
            nonneg("size_t", r.size_t)?;
        }
        if let Some(n) = total_drivers {
            nonneg("total_drivers", n)?;
        }
        positive("reservation_wage", reservation_wage)?;
        positive("price_sensitivity", price_sensitivity)?;
        regions.sort_by(|a, b| b.density().total_cmp(&a.density()));
        Ok(Self { regions, total_drivers, reservation_wage, price_sensitivity })
    }

    /// Fixed-driver market with unit reservation wage and price sensitivity;
    /// the usual input for the driver-game solvers.
    pub fn fixed(lambda: &[f64], t: &[f64], total_drivers: f64) -> Result<Self, MarketError> {
        if lambda.len() != t.len() {
            return Err(MarketError::LengthMismatch { expected: lambda.len(), got: t.len() });
        }
        let regions = lambda
            .iter()
            .zip(t)
            .map(|(&l, &s)| RegionParams::new(l, s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(regions, Some(total_drivers), 1.0, 1.0)
    }

    pub fn regions(&self) -> &[RegionParams] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.lambda_bar).collect()
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.size_t).collect()
    }
}

/// Per-region prices and wages, both per ride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformStrategy {
    pub prices: Vec<f64>,
    pub wages: Vec<f64>,
}

impl PlatformStrategy {
    pub fn new(prices: Vec<f64>, wages: Vec<f64>, regions: usize) -> Result<Self, MarketError> {
        if prices.len() != regions {
            return Err(MarketError::LengthMismatch { expected: regions, got: prices.len() });
        }
        if wages.len() != regions {
            return Err(MarketError::LengthMismatch { expected: regions, got: wages.len() });
        }
        for &p in &prices {
            nonneg("price", p)?;
        }
        for &c in &wages {
            nonneg("wage", c)?;
        }
        Ok(Self { prices, wages })
    }

    pub fn uniform(price: f64, wage: f64, regions: usize) -> Result<Self, MarketError> {
        Self::new(vec![price; regions], vec![wage; regions], regions)
    }
}

/// Driver mass per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub drivers: Vec<f64>,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.drivers.iter().sum()
    }

    /// Checks the driver total against `N` at tolerance `1e-9 max(1, N)`.
    pub fn matches_total(&self, total: f64) -> bool {
        (self.total() - total).abs() <= 1e-9 * total.max(1.0)
    }
}

/// Wait decomposition, ride rate and access of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub wait: f64,
    pub ride_rate: f64,
    pub access: f64,
    pub idle: f64,
    pub pickup: f64,
}

impl RegionOutcome {
    /// Evaluates a region with `n` drivers, realized demand `lambda` and
    /// potential demand `lambda_bar`. With no drivers the wait is infinite
    /// and nothing is served.
    pub fn evaluate(n: f64, lambda_bar: f64, lambda: f64, t: f64) -> Self {
        if n <= 0.0 || lambda <= 0.0 {
            let wait = if n <= 0.0 && t > 0.0 { f64::INFINITY } else { 0.0 };
            return Self { wait, ride_rate: 0.0, access: 0.0, idle: 0.0, pickup: wait };
        }
        let idle = n / lambda;
        let pickup = t / n;
        let wait = idle + pickup;
        let ride_rate = n / wait;
        let access = if lambda_bar > 0.0 { ride_rate / lambda_bar } else { 0.0 };
        Self { wait, ride_rate, access, idle, pickup }
    }
}

/// Wait time for a region; `Infinite` when no drivers face positive pickup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wait {
    Finite(f64),
    Infinite,
}

impl Wait {
    pub fn finite(self) -> Option<f64> {
        match self {
            Wait::Finite(w) => Some(w),
            Wait::Infinite => None,
        }
    }
}

/// `lambda_bar * max(0, 1 - alpha p)`.
pub fn demand_rate(lambda_bar: f64, price: f64, alpha: f64) -> Result<f64, MarketError> {
    nonneg("lambda_bar", lambda_bar)?;
    nonneg("price", price)?;
    positive("alpha", alpha)?;
    Ok(lambda_bar * demand_factor(price, alpha))
}

/// The linear demand filter `f(p) = max(0, 1 - alpha p)`.
pub fn demand_factor(price: f64, alpha: f64) -> f64 {
    (1.0 - alpha * price).max(0.0)
}

/// Driver wait `n / lambda + t / n`.
pub fn wait_time(n: f64, lambda: f64, t: f64) -> Result<Wait, MarketError> {
    nonneg("n", n)?;
    positive("lambda", lambda)?;
    nonneg("t", t)?;
    if n == 0.0 {
        return Ok(if t > 0.0 { Wait::Infinite } else { Wait::Finite(0.0) });
    }
    Ok(Wait::Finite(n / lambda + t / n))
}

/// Rides per hour `n / W(n)`; zero without drivers.
pub fn ride_rate(n: f64, lambda: f64, t: f64) -> Result<f64, MarketError> {
    match wait_time(n, lambda, t)? {
        Wait::Infinite => Ok(0.0),
        Wait::Finite(_) if n == 0.0 => Ok(0.0),
        // n / (n/λ + t/n) written to avoid cancellation for large n.
        Wait::Finite(_) => Ok(lambda / (1.0 + t * lambda / (n * n))),
    }
}

/// Fraction of potential demand served: `(lambda / lambda_bar) / (1 + t lambda / n²)`.
pub fn access(n: f64, lambda_bar: f64, lambda: f64, t: f64) -> Result<f64, MarketError> {
    positive("lambda_bar", lambda_bar)?;
    nonneg("n", n)?;
    nonneg("lambda", lambda)?;
    nonneg("t", t)?;
    if lambda > lambda_bar {
        return Err(MarketError::DemandAbovePotential { lambda, lambda_bar });
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(lambda / lambda_bar / (1.0 + t * lambda / (n * n)))
}

/// Driver count minimizing the wait, `sqrt(lambda t)`.
pub fn wait_minimizer(lambda: f64, t: f64) -> f64 {
    (lambda * t).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn demand_examples() {
        assert_eq!(demand_rate(10.0, 0.0, 1.0).unwrap(), 10.0);
        assert_eq!(demand_rate(10.0, 1.0, 1.0).unwrap(), 0.0);
        // 8 * (1 - 2 * 0.25)
        assert_relative_eq!(demand_rate(8.0, 0.25, 2.0).unwrap(), 4.0, max_relative = 1e-15);
        assert_eq!(demand_rate(10.0, 5.0, 1.0).unwrap(), 0.0);
        assert!(demand_rate(f64::NAN, 0.0, 1.0).is_err());
        assert!(demand_rate(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn wait_examples() {
        assert_eq!(wait_time(5.0, 10.0, 0.0).unwrap(), Wait::Finite(0.5));
        assert_relative_eq!(wait_time(2.0, 10.0, 2.0).unwrap().finite().unwrap(), 1.2, max_relative = 1e-15);
        assert_eq!(wait_time(0.0, 10.0, 2.0).unwrap(), Wait::Infinite);
    }

    #[test]
    fn wait_grid_minimum_at_sqrt_lambda_t() {
        // Grid oracle over (0, 20] with step 1e-4.
        let (mut best_n, mut best_w) = (0.0, f64::INFINITY);
        let mut k = 1;
        while k <= 200_000 {
            let n = k as f64 * 1e-4;
            let w = n / 10.0 + 2.0 / n;
            if w < best_w {
                best_w = w;
                best_n = n;
            }
            k += 1;
        }
        assert!((best_n - 4.4721).abs() < 1e-4);
        assert!((best_w - 0.89443).abs() < 1e-5);
        assert_relative_eq!(wait_minimizer(10.0, 2.0), 20f64.sqrt());
    }

    #[test]
    fn access_and_ride_rate_examples() {
        assert_eq!(access(3.0, 5.0, 5.0, 0.0).unwrap(), 1.0);
        assert_eq!(access(0.0, 5.0, 5.0, 1.0).unwrap(), 0.0);
        assert!((access(4.4721, 10.0, 10.0, 2.0).unwrap() - 0.5).abs() < 1e-5);
        assert!(access(1.0, 5.0, 6.0, 1.0).is_err());
        assert_eq!(ride_rate(5.0, 10.0, 0.0).unwrap(), 10.0);
        assert!((ride_rate(4.4721, 10.0, 2.0).unwrap() - 5.0).abs() < 1e-4);
        assert_eq!(ride_rate(0.0, 10.0, 2.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for k in 1..8 {
            let r = ride_rate(10f64.powi(k), 10.0, 2.0).unwrap();
            assert!(r > prev && r <= 10.0);
            prev = r;
        }
        assert!((10.0 - ride_rate(1e12, 10.0, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn primitives_sort_by_density() {
        let m = MarketPrimitives::fixed(&[5.0, 10.0, 3.0, 1.0], &[2.0, 2.0, 0.0, 1.0], 10.0).unwrap();
        assert_eq!(m.lambdas(), vec![3.0, 10.0, 5.0, 1.0]);
        assert!(MarketPrimitives::fixed(&[1.0], &[-1.0], 1.0).is_err());
        assert!(MarketPrimitives::new(vec![], None, 0.0, 1.0).is_err());
    }

    #[test]
    fn outcome_identities() {
        let o = RegionOutcome::evaluate(3.0, 12.0, 9.0, 1.5);
        assert_relative_eq!(o.wait, o.idle + o.pickup);
        assert_relative_eq!(o.ride_rate, 3.0 / o.wait);
        assert_relative_eq!(o.access * 12.0, o.ride_rate, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn wait_bounded_by_am_gm(n in 1e-3f64..1e3, lambda in 1e-2f64..1e3, t in 1e-3f64..1e2) {
            let w = wait_time(n, lambda, t).unwrap().finite().unwrap();
            prop_assert!(w >= 2.0 * (t / lambda).sqrt() * (1.0 - 1e-12));
        }

        #[test]
        fn ride_rate_increasing_and_bounded(n in 1e-3f64..1e3, dn in 1e-3f64..10.0, lambda in 1e-2f64..1e3, t in 1e-3f64..1e2) {
            let r1 = ride_rate(n, lambda, t).unwrap();
            let r2 = ride_rate(n + dn, lambda, t).unwrap();
            prop_assert!(r2 > r1);
            prop_assert!(r2 <= lambda);
            let a1 = access(n, lambda, lambda, t).unwrap();
            let a2 = access(n + dn, lambda, lambda, t).unwrap();
            prop_assert!(a2 > a1);
        }

        #[test]
        fn access_times_potential_is_ride_rate(n in 1e-3f64..1e3, lb in 1e-2f64..1e3, frac in 0.01f64..1.0, t in 0.0f64..1e2) {
            let lambda = lb * frac;
            let a = access(n, lb, lambda, t).unwrap();
            let r = ride_rate(n, lambda, t).unwrap();
            prop_assert!((a * lb - r).abs() <= 1e-12 * r.max(1e-300));
        }
    }
}
