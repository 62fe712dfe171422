use serde::Serialize;

use super::{fixed_total, solve_common_wait, EquilibriumError, EquilibriumResult, MAX_ENUMERATED_REGIONS};
use crate::exec::{self, ExecMode};
use crate::market::MarketPrimitives;

/// Equilibria over every non-empty served set, plus the one drivers prefer.
#[derive(Debug, Clone, Serialize)]
pub struct Enumeration {
    pub equilibria: Vec<EquilibriumResult>,
    /// Index into `equilibria`: largest served set, then lowest common wait.
    /// Provisional results are only selected when nothing else exists.
    pub selected: usize,
}

impl Enumeration {
    pub fn selected(&self) -> &EquilibriumResult {
        &self.equilibria[self.selected]
    }
}

fn subset_equilibrium(mask: u32, lambdas: &[f64], sizes: &[f64], total: f64) -> Option<EquilibriumResult> {
    let members: Vec<usize> = (0..lambdas.len()).filter(|i| mask & (1 << i) != 0).collect();
    let mut drivers = vec![0.0; lambdas.len()];
    let w = if members.len() == 1 {
        // One served region is always an equilibrium: an entrant elsewhere
        // faces unbounded pickup time.
        let i = members[0];
        drivers[i] = total;
        total / lambdas[i] + sizes[i] / total
    } else {
        let sub_l: Vec<f64> = members.iter().map(|&i| lambdas[i]).collect();
        let sub_t: Vec<f64> = members.iter().map(|&i| sizes[i]).collect();
        let (w, sub_n) = solve_common_wait(&sub_l, &sub_t, total).ok()?;
        for (&i, n) in members.iter().zip(sub_n) {
            drivers[i] = n;
        }
        w
    };
    let mut eq = EquilibriumResult::from_drivers(drivers, lambdas, sizes, w);
    eq.provisional = (0..lambdas.len()).any(|j| mask & (1 << j) == 0 && sizes[j] == 0.0);
    Some(eq)
}

/// Runs the all-regions solver on every sub-market and keeps the ones that
/// admit an equilibrium, ordered by subset bitmask.
pub fn enumerate_equilibria(prims: &MarketPrimitives, mode: ExecMode) -> Result<Enumeration, EquilibriumError> {
    let total = fixed_total(prims)?;
    let count = prims.len();
    if count == 0 {
        return Err(EquilibriumError::Domain("market has no regions".into()));
    }
    if count > MAX_ENUMERATED_REGIONS {
        return Err(EquilibriumError::TooManyRegions { regions: count, max: MAX_ENUMERATED_REGIONS });
    }
    let lambdas = prims.lambdas();
    let sizes = prims.sizes();
    if lambdas.iter().any(|&l| l <= 0.0) || total <= 0.0 {
        return Err(EquilibriumError::Domain("enumeration needs positive demand everywhere and N > 0".into()));
    }
    let masks: Vec<u32> = (1..(1u32 << count)).collect();
    let equilibria: Vec<EquilibriumResult> = exec::map(mode, &masks, |&m| subset_equilibrium(m, &lambdas, &sizes, total))
        .into_iter()
        .flatten()
        .collect();

    let rank = |e: &EquilibriumResult| (e.provisional, std::cmp::Reverse(e.served_set.len()));
    let selected = (0..equilibria.len())
        .min_by(|&a, &b| {
            let (ea, eb) = (&equilibria[a], &equilibria[b]);
            rank(ea).cmp(&rank(eb)).then(ea.common_wait.total_cmp(&eb.common_wait))
        })
        .expect("single-region subsets always qualify");
    Ok(Enumeration { equilibria, selected })
}
