//! Platform pricing under free driver entry.
//!
//! With endogenous supply, drivers enter a region until hourly earnings
//! `c / W` fall to the reservation wage, so each region's problem is
//! separable. This module solves it for a fixed price, a fixed wage, or
//! both free, and maps markets onto the one-parameter normalized family
//! `(lambda_tilde, 1, 1, 1)`.

mod joint;
mod normalize;
mod region;
mod sweep;

pub use joint::{optimal_joint, optimal_joint_normalized, optimal_market, SERVICE_THRESHOLD};
pub use normalize::{normalize, NormalizedDensity, RegionEconomy};
pub use region::{
    access_of_strategy, entry_n, optimal_price, optimal_wage, optimal_wage_by_access, region_profit, wage_from_access,
    StrategyAccess,
};
pub use sweep::{density_sweep, thickening_pairs, DensityPair, SweepDiagnostics, SweepPoint, SweepTable};

use serde::Serialize;
use thiserror::Error;

use crate::market::MarketError;
use crate::roots::RootError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatformError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("access {access} outside (0, f(p) = {demand_factor})")]
    AccessOutOfRange { access: f64, demand_factor: f64 },
    #[error("joint refinement did not settle: profit still moved by {delta} after {rounds} rounds")]
    NoConvergence { rounds: usize, delta: f64 },
}

/// Optimal terms and the resulting free-entry outcome in one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionOptimum {
    pub price: f64,
    pub wage: f64,
    pub drivers: f64,
    pub access: f64,
    pub margin: f64,
    pub profit: f64,
    pub served: bool,
}

impl RegionOptimum {
    pub(crate) fn unserved(price: f64, wage: f64) -> Self {
        Self { price, wage, drivers: 0.0, access: 0.0, margin: price - wage, profit: 0.0, served: false }
    }
}

pub(crate) fn check_economy(lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<(), PlatformError> {
    use crate::market::{nonneg, positive};
    nonneg("lambda_bar", lambda_bar)?;
    positive("t", t)?;
    positive("reservation_wage", cbar)?;
    positive("alpha", alpha)?;
    Ok(())
}
