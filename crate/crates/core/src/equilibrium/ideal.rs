use super::EquilibriumError;
use crate::roots::bisect;

/// `n W(n)^2 = 2t / r'(n)`; increasing where the ride-rate curve is concave.
fn marginal_cost(n: f64, lambda: f64, t: f64) -> f64 {
    let w = n / lambda + t / n;
    n * w * w
}

/// Allocation of `total` drivers between two regions of size `t` that
/// maximizes total rides, from the first-order condition
/// `sqrt(n_i) W_i(n_i) = sqrt(n_j) W_j(n_j)`.
///
/// The bracket runs over allocations where both ride-rate curves are
/// concave (`n > sqrt(lambda t / 3)`), where the condition has one root.
pub fn platform_ideal_pair(total: f64, lambda_i: f64, lambda_j: f64, t: f64) -> Result<(f64, f64), EquilibriumError> {
    let ok = [total, lambda_i, lambda_j, t].iter().all(|v| v.is_finite())
        && lambda_i >= lambda_j
        && lambda_j > 0.0
        && t > 0.0
        && total > 0.0;
    if !ok {
        return Err(EquilibriumError::Domain(format!(
            "need lambda_i >= lambda_j > 0, t > 0, N > 0; got ({total}, {lambda_i}, {lambda_j}, {t})"
        )));
    }
    let lo = (lambda_i * t / 3.0).sqrt();
    let hi = total - (lambda_j * t / 3.0).sqrt();
    if hi <= lo {
        return Err(EquilibriumError::Domain(format!("{total} drivers cannot reach both concave branches")));
    }
    let gap = |n: f64| marginal_cost(n, lambda_i, t) - marginal_cost(total - n, lambda_j, t);
    let n_i = bisect(gap, lo, hi, 1e-15, 400)?;
    Ok((n_i, total - n_i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_two_region;
    use crate::market::ride_rate;

    fn total_rides(n_i: f64, total: f64, li: f64, lj: f64, t: f64) -> f64 {
        ride_rate(n_i, li, t).unwrap() + ride_rate(total - n_i, lj, t).unwrap()
    }

    #[test]
    fn symmetric_split() {
        let (a, b) = platform_ideal_pair(10.0, 6.0, 6.0, 1.0).unwrap();
        assert!((a - 5.0).abs() < 1e-10 && (b - 5.0).abs() < 1e-10);
    }

    #[test]
    fn beats_grid_and_moves_access_toward_parity() {
        let (li, lj, t, total) = (10.0, 5.0, 2.0, 14.0);
        let (ni, nj) = platform_ideal_pair(total, li, lj, t).unwrap();
        let best = total_rides(ni, total, li, lj, t);
        for k in 1..10_000 {
            let n = total * k as f64 / 10_000.0;
            assert!(total_rides(n, total, li, lj, t) <= best + 1e-12);
        }
        let eq = solve_two_region(li, lj, total, t).unwrap();
        let before = eq.outcomes[1].access / eq.outcomes[0].access;
        let after = ride_rate(nj, lj, t).unwrap() / lj / (ride_rate(ni, li, t).unwrap() / li);
        assert!(before < after && after < 1.0, "{before} {after}");
    }
}
