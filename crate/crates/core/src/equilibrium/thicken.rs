use serde::Serialize;

use super::{fixed_total, solve_all_regions, EquilibriumError};
use crate::exec::{self, ExecMode};
use crate::market::{MarketPrimitives, RegionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThickeningMode {
    /// Scale drivers only.
    OneSided,
    /// Scale drivers and demand together.
    TwoSided,
}

impl std::str::FromStr for ThickeningMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one_sided" | "one-sided" | "one" => Ok(Self::OneSided),
            "two_sided" | "two-sided" | "two" => Ok(Self::TwoSided),
            other => Err(format!("unknown thickening mode `{other}`")),
        }
    }
}

/// Scales a fixed-driver market by `gamma`.
pub fn thicken(prims: &MarketPrimitives, gamma: f64, mode: ThickeningMode) -> Result<MarketPrimitives, EquilibriumError> {
    let total = fixed_total(prims)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(EquilibriumError::Domain(format!("gamma must be positive, got {gamma}")));
    }
    let demand_scale = match mode {
        ThickeningMode::OneSided => 1.0,
        ThickeningMode::TwoSided => gamma,
    };
    let regions = prims
        .regions()
        .iter()
        .map(|r| RegionParams { lambda_bar: r.lambda_bar * demand_scale, size_t: r.size_t })
        .collect();
    Ok(MarketPrimitives::new(regions, Some(total * gamma), prims.reservation_wage, prims.price_sensitivity)?)
}

/// Access ratio and undersupply degree for regions `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRatio {
    pub i: usize,
    pub j: usize,
    /// `A_j / A_i`.
    pub access_ratio: f64,
    /// `(n_i / lambda_i) / (n_j / lambda_j)`.
    pub undersupply: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThickeningPoint {
    pub gamma: f64,
    pub drivers: Vec<f64>,
    pub access: Vec<f64>,
    pub common_wait: f64,
    pub pairs: Vec<PairRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThickeningReport {
    pub mode: ThickeningMode,
    pub points: Vec<ThickeningPoint>,
}

impl ThickeningReport {
    pub fn gammas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    /// Largest decrease of any pairwise access ratio between consecutive
    /// grid points (zero when all ratios are non-decreasing).
    pub fn worst_ratio_decrease(&self) -> f64 {
        self.points
            .windows(2)
            .flat_map(|w| w[0].pairs.iter().zip(&w[1].pairs).map(|(a, b)| a.access_ratio - b.access_ratio))
            .fold(0.0, f64::max)
    }

    pub fn max_ratio(&self) -> f64 {
        self.points.iter().flat_map(|p| p.pairs.iter().map(|r| r.access_ratio)).fold(f64::MIN, f64::max)
    }
}

/// Solves the all-regions equilibrium at every `gamma` and records pairwise
/// access ratios and undersupply degrees.
pub fn comparative_thickness(
    prims: &MarketPrimitives,
    gammas: &[f64],
    mode: ThickeningMode,
    exec_mode: ExecMode,
) -> Result<ThickeningReport, EquilibriumError> {
    if gammas.iter().any(|&g| !(g >= 1.0 && g.is_finite())) || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EquilibriumError::Domain("gamma grid must be increasing and >= 1".into()));
    }
    let points = exec::map(exec_mode, gammas, |&gamma| -> Result<ThickeningPoint, EquilibriumError> {
        let wrap = |e: EquilibriumError| EquilibriumError::AtGamma { gamma, source: Box::new(e) };
        let m = thicken(prims, gamma, mode).map_err(wrap)?;
        let eq = solve_all_regions(&m).map_err(wrap)?;
        let lambdas = m.lambdas();
        let access = eq.access();
        let mut pairs = Vec::new();
        for i in 0..access.len() {
            for j in i + 1..access.len() {
                pairs.push(PairRatio {
                    i,
                    j,
                    access_ratio: access[j] / access[i],
                    undersupply: eq.undersupply(&lambdas, i, j),
                });
            }
        }
        Ok(ThickeningPoint { gamma, drivers: eq.allocation.drivers.clone(), access, common_wait: eq.common_wait, pairs })
    });
    Ok(ThickeningReport { mode, points: points.into_iter().collect::<Result<_, _>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MarketPrimitives {
        MarketPrimitives::fixed(&[10.0, 5.0], &[2.0, 2.0], 14.0).unwrap()
    }

    #[test]
    fn identity_and_componentwise_scaling() {
        assert_eq!(thicken(&base(), 1.0, ThickeningMode::TwoSided).unwrap(), base());
        let m = thicken(&base(), 2.0, ThickeningMode::TwoSided).unwrap();
        assert_eq!(m.lambdas(), vec![20.0, 10.0]);
        assert_eq!(m.total_drivers, Some(28.0));
        assert_eq!(m.sizes(), vec![2.0, 2.0]);
        let m = thicken(&base(), 2.0, ThickeningMode::OneSided).unwrap();
        assert_eq!(m.lambdas(), vec![10.0, 5.0]);
        assert_eq!(m.total_drivers, Some(28.0));
    }

    #[test]
    fn endogenous_rejected() {
        let m = MarketPrimitives::new(base().regions().to_vec(), None, 1.0, 1.0).unwrap();
        assert!(matches!(thicken(&m, 2.0, ThickeningMode::OneSided), Err(EquilibriumError::EndogenousSupply)));
    }

    #[test]
    fn two_sided_equals_shrunken_regions_scaled() {
        let gamma = 3.7;
        let big = solve_all_regions(&thicken(&base(), gamma, ThickeningMode::TwoSided).unwrap()).unwrap();
        let small = solve_all_regions(&MarketPrimitives::fixed(&[10.0, 5.0], &[2.0 / gamma, 2.0 / gamma], 14.0).unwrap()).unwrap();
        for (a, b) in big.allocation.drivers.iter().zip(&small.allocation.drivers) {
            assert!((a - gamma * b).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn ratios_rise_toward_one() {
        let grid = [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0];
        for mode in [ThickeningMode::OneSided, ThickeningMode::TwoSided] {
            let r = comparative_thickness(&base(), &grid, mode, ExecMode::Sequential).unwrap();
            assert!(r.worst_ratio_decrease() <= 0.0);
            let ratios: Vec<f64> = r.points.iter().map(|p| p.pairs[0].access_ratio).collect();
            assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
            assert!(r.max_ratio() <= 1.0);
            assert!((1.0 - ratios.last().unwrap()).abs() < 0.02);
        }
    }

    #[test]
    fn very_thick_market_is_nearly_equitable() {
        // (10, 5) with 10 drivers has no all-regions equilibrium, its
        // thousand-fold two-sided thickening does.
        let m = MarketPrimitives::fixed(&[10.0, 5.0], &[2.0, 2.0], 10.0).unwrap();
        assert!(solve_all_regions(&m).is_err());
        let r = comparative_thickness(&m, &[1000.0], ThickeningMode::TwoSided, ExecMode::Sequential).unwrap();
        assert!((1.0 - r.points[0].pairs[0].access_ratio).abs() < 0.02);
        let err = comparative_thickness(&m, &[1.0, 1000.0], ThickeningMode::TwoSided, ExecMode::Sequential).unwrap_err();
        assert!(matches!(err, EquilibriumError::AtGamma { gamma, .. } if gamma == 1.0));
    }

    #[test]
    fn equal_density_pins_ratio_at_one() {
        let m = MarketPrimitives::fixed(&[10.0, 5.0], &[2.0, 1.0], 10.0).unwrap();
        let r = comparative_thickness(&m, &[1.0, 4.0, 16.0], ThickeningMode::TwoSided, ExecMode::Parallel).unwrap();
        for p in &r.points {
            assert!((p.pairs[0].access_ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(comparative_thickness(&base(), &[2.0, 1.0], ThickeningMode::OneSided, ExecMode::Sequential).is_err());
        assert!(comparative_thickness(&base(), &[0.5], ThickeningMode::OneSided, ExecMode::Sequential).is_err());
    }
}
