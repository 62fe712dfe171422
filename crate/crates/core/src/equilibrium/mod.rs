//! Driver location game with a fixed mass of drivers and spatially uniform
//! terms. Drivers equalize total wait across served regions; this module
//! finds those allocations, enumerates partial equilibria, and runs the
//! thickening and region-splitting experiments.
//!
//! Demand inputs are the realized rates at the (uniform) price in force;
//! access is reported against the same rates.

mod enumerate;
mod ideal;
mod multi;
mod split;
mod thicken;
mod two_region;

pub use enumerate::{enumerate_equilibria, Enumeration};
pub use ideal::platform_ideal_pair;
pub use multi::{branch_drivers, solve_all_regions, solve_common_wait};
pub use split::{split_regions, SplitMarket};
pub use thicken::{comparative_thickness, thicken, PairRatio, ThickeningMode, ThickeningPoint, ThickeningReport};
pub use two_region::{existence_two_region, solve_two_region, solve_two_region_bisection, ExistenceReport};

use serde::Serialize;
use thiserror::Error;

use crate::market::{Allocation, MarketError, RegionOutcome};
use crate::roots::RootError;

pub const MAX_ENUMERATED_REGIONS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("no all-regions equilibrium: minimum supply on increasing branches is {required}, only {available} drivers")]
    NoAllRegionsEquilibrium { required: f64, available: f64, report: Option<ExistenceReport> },
    #[error("common-wait bisection did not converge after {iterations} iterations (w in [{lo}, {hi}], supply gap {gap})")]
    NoConvergence { iterations: usize, lo: f64, hi: f64, gap: f64 },
    #[error("driver game needs a fixed number of drivers")]
    EndogenousSupply,
    #[error("{regions} regions exceeds the enumeration bound of {max}")]
    TooManyRegions { regions: usize, max: usize },
    #[error("region {index}: size {size} is not a multiple of {quantum} (residue {residue})")]
    NotMultiple { index: usize, size: f64, quantum: f64, residue: f64 },
    #[error("thickening at gamma = {gamma}: {source}")]
    AtGamma { gamma: f64, source: Box<EquilibriumError> },
    #[error("invalid input: {0}")]
    Domain(String),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// A driver allocation at which every served region has the same wait.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub allocation: Allocation,
    pub outcomes: Vec<RegionOutcome>,
    pub common_wait: f64,
    pub served_set: Vec<usize>,
    /// Set when an excluded region is frictionless, where a marginal
    /// entrant's wait is not well defined by the model.
    pub provisional: bool,
}

impl EquilibriumResult {
    pub(crate) fn from_drivers(drivers: Vec<f64>, lambdas: &[f64], sizes: &[f64], common_wait: f64) -> Self {
        let outcomes = drivers
            .iter()
            .zip(lambdas.iter().zip(sizes))
            .map(|(&n, (&l, &t))| RegionOutcome::evaluate(n, l, l, t))
            .collect();
        let served_set = drivers.iter().enumerate().filter(|(_, &n)| n > 0.0).map(|(i, _)| i).collect();
        Self { allocation: Allocation { drivers }, outcomes, common_wait, served_set, provisional: false }
    }

    /// Undersupply degree `(n_i / lambda_i) / (n_j / lambda_j)`.
    pub fn undersupply(&self, lambdas: &[f64], i: usize, j: usize) -> f64 {
        let d = &self.allocation.drivers;
        (d[i] / lambdas[i]) / (d[j] / lambdas[j])
    }

    pub fn access(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.access).collect()
    }
}

pub(crate) fn fixed_total(prims: &crate::market::MarketPrimitives) -> Result<f64, EquilibriumError> {
    prims.total_drivers.ok_or(EquilibriumError::EndogenousSupply)
}
