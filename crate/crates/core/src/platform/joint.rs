use super::{check_economy, normalize, optimal_price, optimal_wage, PlatformError, RegionOptimum};
use crate::exec::{self, ExecMode};
use crate::market::MarketPrimitives;
use crate::roots::{cubic_real_roots, golden_min};

/// Smallest normalized density at which a region attracts drivers:
/// `4 / max_c c²(1 - c)` with the maximum at `c = 2/3`.
pub const SERVICE_THRESHOLD: f64 = 27.0;

const PROFILE_GRID: usize = 200;
const MAX_ROUNDS: usize = 100;
const PROFIT_TOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-13;

fn boundary_optimum() -> RegionOptimum {
    let x = 2.0 / 3.0;
    // Zero discriminant: n = lambda(p) c / 2 and A = f(p) / 2.
    RegionOptimum {
        price: x,
        wage: x,
        drivers: SERVICE_THRESHOLD * (1.0 - x) * x / 2.0,
        access: (1.0 - x) / 2.0,
        margin: 0.0,
        profit: 0.0,
        served: true,
    }
}

fn profile(p: f64, lt: f64) -> f64 {
    optimal_wage(p, lt, 1.0, 1.0, 1.0).map(|o| o.profit).unwrap_or(0.0)
}

/// Joint optimum for the normalized economy `(lambda_tilde, 1, 1, 1)`.
///
/// Prices with `p²(1 - p) < 4 / lambda_tilde` attract no drivers at any
/// wage, so the profit profile `max_c pi(p, c)` is searched over the
/// feasible price interval and then polished by alternating the
/// single-coordinate optima.
pub fn optimal_joint_normalized(lambda_tilde: f64) -> Result<RegionOptimum, PlatformError> {
    check_economy(lambda_tilde, 1.0, 1.0, 1.0)?;
    if lambda_tilde < SERVICE_THRESHOLD {
        return Ok(RegionOptimum::unserved(0.0, 0.0));
    }
    if lambda_tilde == SERVICE_THRESHOLD {
        return Ok(boundary_optimum());
    }
    let k = 4.0 / lambda_tilde;
    let mut roots: Vec<f64> = cubic_real_roots(1.0, -1.0, 0.0, k).into_iter().filter(|&r| r > 0.0 && r < 1.0).collect();
    roots.sort_by(f64::total_cmp);
    if roots.len() < 2 || roots[1] - roots[0] < 1e-9 {
        // Within rounding of the threshold the feasible set is a point.
        return Ok(boundary_optimum());
    }
    let (p_lo, p_hi) = (roots[0], roots[roots.len() - 1]);

    let step = (p_hi - p_lo) / PROFILE_GRID as f64;
    let best = (0..=PROFILE_GRID)
        .map(|i| p_lo + step * i as f64)
        .map(|p| (p, profile(p, lambda_tilde)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let (lo, hi) = ((best.0 - step).max(p_lo), (best.0 + step).min(p_hi));
    let (p, _) = golden_min(|p| -profile(p, lambda_tilde), lo, hi, 1e-14, 400);

    let mut current = optimal_wage(p, lambda_tilde, 1.0, 1.0, 1.0)?;
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_ROUNDS {
        let priced = optimal_price(current.wage, lambda_tilde, 1.0, 1.0, 1.0)?;
        let next = optimal_wage(priced.price, lambda_tilde, 1.0, 1.0, 1.0)?;
        delta = (next.profit - current.profit).abs();
        let step = (next.price - current.price).abs() + (next.wage - current.wage).abs();
        current = next;
        if step <= STEP_TOL {
            return Ok(current);
        }
    }
    // The terms may still creep along a flat ridge; that is harmless once
    // profit has stopped moving.
    if delta <= PROFIT_TOL * current.profit.abs().max(1.0) {
        return Ok(current);
    }
    Err(PlatformError::NoConvergence { rounds: MAX_ROUNDS, delta })
}

/// Profit-maximizing price and wage in one region under free entry,
/// computed in normalized units and mapped back.
pub fn optimal_joint(lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<RegionOptimum, PlatformError> {
    let nd = normalize(lambda_bar, t, cbar, alpha)?;
    let o = optimal_joint_normalized(nd.lambda_tilde)?;
    if !o.served {
        return Ok(RegionOptimum::unserved(nd.price(o.price), nd.wage(o.wage)));
    }
    let (price, wage) = (nd.price(o.price), nd.wage(o.wage));
    Ok(RegionOptimum {
        price,
        wage,
        drivers: nd.drivers(o.drivers),
        access: o.access,
        margin: price - wage,
        profit: (price - wage) * o.access * lambda_bar,
        served: true,
    })
}

/// Region-by-region optimum of a free-entry market, in region order.
pub fn optimal_market(prims: &MarketPrimitives, mode: ExecMode) -> Result<Vec<RegionOptimum>, PlatformError> {
    let (cbar, alpha) = (prims.reservation_wage, prims.price_sensitivity);
    exec::map(mode, prims.regions(), |r| optimal_joint(r.lambda_bar, r.size_t, cbar, alpha)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::{region_profit, RegionEconomy};
    use approx::assert_relative_eq;

    fn grid_oracle(lb: f64, t: f64, cbar: f64, alpha: f64, points: usize) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, 0.0);
        for i in 1..points {
            let p = i as f64 / (alpha * points as f64);
            for j in 1..=i {
                let c = j as f64 / (alpha * points as f64);
                let v = region_profit(c, p, lb, t, cbar, alpha);
                if v > best.2 {
                    best = (p, c, v);
                }
            }
        }
        best
    }

    #[test]
    fn threshold_point() {
        let o = optimal_joint_normalized(27.0).unwrap();
        assert!(o.served);
        assert_eq!((o.price, o.wage, o.margin), (2.0 / 3.0, 2.0 / 3.0, 0.0));
        assert_relative_eq!(o.access, 1.0 / 6.0, max_relative = 1e-15);
        assert!(!optimal_joint_normalized(26.9).unwrap().served);
        let o = optimal_joint_normalized(26.9).unwrap();
        assert_eq!((o.drivers, o.profit), (0.0, 0.0));
    }

    #[test]
    fn just_above_threshold_is_continuous() {
        let o = optimal_joint_normalized(27.001).unwrap();
        assert!((o.price - 2.0 / 3.0).abs() < 0.01 && (o.wage - 2.0 / 3.0).abs() < 0.01);
        assert!((o.access - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn matches_grid_search() {
        for lt in [30.0, 100.0, 1000.0] {
            let o = optimal_joint_normalized(lt).unwrap();
            let (p, c, v) = grid_oracle(lt, 1.0, 1.0, 1.0, 1000);
            assert!(o.profit >= v - 1e-12);
            assert!((o.price - p).abs() < 5e-3 && (o.wage - c).abs() < 5e-3, "{lt}: {o:?} vs {p} {c}");
        }
    }

    #[test]
    fn beats_local_perturbations() {
        for (lb, t, cbar, alpha) in [(30.0, 1.0, 1.0, 1.0), (500.0, 2.0, 0.7, 1.3), (1e4, 0.5, 2.0, 0.4)] {
            let o = optimal_joint(lb, t, cbar, alpha).unwrap();
            for dp in [-1e-4, 0.0, 1e-4] {
                for dc in [-1e-4, 0.0, 1e-4] {
                    let v = region_profit(o.wage + dc, o.price + dp, lb, t, cbar, alpha);
                    assert!(v <= o.profit * (1.0 + 1e-12) + 1e-12, "{dp} {dc}: {v} > {}", o.profit);
                }
            }
        }
    }

    #[test]
    fn original_units_match_normalized_back_map() {
        let e = RegionEconomy::new(900.0, 2.0, 0.5, 1.5).unwrap();
        let nd = e.normalized();
        let direct = optimal_joint(e.lambda_bar, e.t, e.cbar, e.alpha).unwrap();
        let norm = optimal_joint_normalized(nd.lambda_tilde).unwrap();
        assert!((direct.price - nd.price(norm.price)).abs() < 1e-8);
        assert!((direct.wage - nd.wage(norm.wage)).abs() < 1e-8);
        assert!((direct.drivers - nd.drivers(norm.drivers)).abs() < 1e-8 * direct.drivers);
        let (p, c, _) = grid_oracle(e.lambda_bar, e.t, e.cbar, e.alpha, 600);
        assert!((direct.price - p).abs() < 1e-2 && (direct.wage - c).abs() < 1e-2);
        let pi = region_profit(direct.wage, direct.price, e.lambda_bar, e.t, e.cbar, e.alpha);
        assert_relative_eq!(direct.profit, pi, max_relative = 1e-9);
    }

    #[test]
    fn currency_invariance() {
        let e = RegionEconomy::new(400.0, 1.5, 0.9, 1.1).unwrap();
        let base = optimal_joint(e.lambda_bar, e.t, e.cbar, e.alpha).unwrap();
        for gamma in [0.5, 3.0] {
            let s = e.change_currency(gamma);
            let o = optimal_joint(s.lambda_bar, s.t, s.cbar, s.alpha).unwrap();
            assert_relative_eq!(o.price, gamma * base.price, max_relative = 1e-9);
            assert_relative_eq!(o.wage, gamma * base.wage, max_relative = 1e-9);
            assert_relative_eq!(o.drivers, base.drivers, max_relative = 1e-9);
            assert_relative_eq!(o.access, base.access, max_relative = 1e-9);
        }
    }

    #[test]
    fn demand_wage_scaling() {
        let e = RegionEconomy::new(400.0, 1.5, 0.9, 1.1).unwrap();
        let base = optimal_joint(e.lambda_bar, e.t, e.cbar, e.alpha).unwrap();
        for gamma in [0.5, 3.0] {
            let s = e.scale_demand_wage(gamma);
            let o = optimal_joint(s.lambda_bar, s.t, s.cbar, s.alpha).unwrap();
            assert_relative_eq!(o.drivers, gamma * base.drivers, max_relative = 1e-9);
            assert_relative_eq!(o.price, base.price, max_relative = 1e-9);
            assert_relative_eq!(o.wage, base.wage, max_relative = 1e-9);
            assert_relative_eq!(o.access, base.access, max_relative = 1e-9);
        }
    }

    #[test]
    fn wage_rises_with_size_at_fixed_demand() {
        let mut prev = 0.0;
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let o = optimal_wage(0.5, 400.0, t, 1.0, 1.0).unwrap();
            assert!(o.served && o.wage > prev);
            prev = o.wage;
        }
    }

    #[test]
    fn market_is_separable() {
        let m = MarketPrimitives::new(
            vec![
                crate::market::RegionParams::new(900.0, 3.0).unwrap(),
                crate::market::RegionParams::new(50.0, 1.0).unwrap(),
                crate::market::RegionParams::new(20.0, 1.0).unwrap(),
            ],
            None,
            1.0,
            1.0,
        )
        .unwrap();
        let seq = optimal_market(&m, ExecMode::Sequential).unwrap();
        let par = optimal_market(&m, ExecMode::Parallel).unwrap();
        assert_eq!(seq, par);
        for (r, o) in m.regions().iter().zip(&seq) {
            assert_eq!(*o, optimal_joint(r.lambda_bar, r.size_t, 1.0, 1.0).unwrap());
        }
        assert!(seq[0].served && seq[1].served && !seq[2].served);
    }
}
