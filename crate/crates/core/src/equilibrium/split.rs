use super::EquilibriumError;
use crate::market::{Allocation, MarketPrimitives, RegionParams};

/// A market whose regions all have the quantum size, with the map back to
/// the original regions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMarket {
    pub primitives: MarketPrimitives,
    /// Original region index of each copy.
    pub origin: Vec<usize>,
}

impl SplitMarket {
    /// Sums copy-level drivers back onto the original regions.
    pub fn aggregate(&self, copies: &Allocation, regions: usize) -> Allocation {
        let mut drivers = vec![0.0; regions];
        for (&o, &n) in self.origin.iter().zip(&copies.drivers) {
            drivers[o] += n;
        }
        Allocation { drivers }
    }
}

/// Replaces region `i` with `t_i / quantum` copies of size `quantum`, each
/// carrying an equal share of the region's demand.
pub fn split_regions(prims: &MarketPrimitives, quantum: f64) -> Result<SplitMarket, EquilibriumError> {
    if !(quantum.is_finite() && quantum > 0.0) {
        return Err(EquilibriumError::Domain(format!("quantum must be positive, got {quantum}")));
    }
    let mut regions = Vec::new();
    let mut origin = Vec::new();
    for (index, r) in prims.regions().iter().enumerate() {
        let ratio = r.size_t / quantum;
        let copies = ratio.round();
        let residue = r.size_t - copies * quantum;
        if copies < 1.0 || residue.abs() > 1e-9 * r.size_t.max(quantum) {
            return Err(EquilibriumError::NotMultiple { index, size: r.size_t, quantum, residue });
        }
        let copies = copies as usize;
        for _ in 0..copies {
            regions.push(RegionParams { lambda_bar: r.lambda_bar / copies as f64, size_t: quantum });
            origin.push(index);
        }
    }
    // Copies keep their region's density, so the stable sort leaves blocks in place.
    let primitives = MarketPrimitives::new(regions, prims.total_drivers, prims.reservation_wage, prims.price_sensitivity)?;
    Ok(SplitMarket { primitives, origin })
}
