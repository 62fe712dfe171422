//! Scalar root finding and 1-D minimization used across the solvers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("no convergence after {iterations} iterations, bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
///
/// Stops when the bracket width falls below `xtol * max(1, |mid|)` or an
/// exact zero is hit. Exhausting `max_iter` is reported as an error.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(RootError::NotBracketed { lo, hi, f_lo: fa, f_hi: fb });
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol * m.abs().max(1.0) || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(RootError::NoConvergence { iterations: max_iter, lo: a, hi: b })
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping at relative bracket width `rtol`. Returns `(x, f(x))`.
pub fn golden_min<F>(mut f: F, lo: f64, hi: f64, rtol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (b - a).abs() <= rtol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) * 0.5 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Real roots of `a x³ + b x² + c x + d`, sorted ascending.
///
/// Falls back to the quadratic/linear case when the leading coefficients
/// vanish. Each root is polished with a few Newton steps; repeated roots
/// are reported once.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return quadratic_real_roots(b, c, d);
    }
    // Depressed cubic y³ + p y + q with x = y - b/(3a).
    let (b1, c1, d1) = (b / a, c / a, d / a);
    let shift = b1 / 3.0;
    let p = c1 - b1 * b1 / 3.0;
    let q = 2.0 * b1 * b1 * b1 / 27.0 - b1 * c1 / 3.0 + d1;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut roots = if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        // Pick the non-cancelling branch, recover the other via p.
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let y = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![y - shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_arg = if r == 0.0 { 0.0 } else { (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0) };
        let phi = cos_arg.acos();
        (0..3)
            .map(|k| {
                2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() - shift
            })
            .collect()
    };

    for x in roots.iter_mut() {
        *x = newton_polish(|x| ((a * x + b) * x + c) * x + d, |x| (3.0 * a * x + 2.0 * b) * x + c, *x);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
    roots
}

fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a, c / q];
    r.sort_by(|x, y| x.total_cmp(y));
    r
}

fn newton_polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !next.is_finite() || f(next).abs() > f(x).abs() {
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(RootError::NotBracketed { .. })
        ));
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10, 500);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_three_roots() {
        // (x-1)(x-2)(x-3)
        let r = cubic_real_roots(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn cubic_one_root_and_degenerate() {
        let r = cubic_real_roots(1.0, 0.0, 1.0, -2.0); // root at 1
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0], 1.0, max_relative = 1e-12);
        let r = cubic_real_roots(0.0, 1.0, -3.0, 2.0);
        assert_eq!(r.len(), 2);
        let r = cubic_real_roots(2.0, 0.0, 0.0, 0.0);
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn cubic_matches_random_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let mut rs: Vec<f64> = (0..3).map(|_| rng.random_range(-50.0..50.0)).collect();
            rs.sort_by(|a, b| a.total_cmp(b));
            if rs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                continue;
            }
            let k = rng.random_range(0.1..10.0);
            let (b, c, d) = (
                -k * (rs[0] + rs[1] + rs[2]),
                k * (rs[0] * rs[1] + rs[0] * rs[2] + rs[1] * rs[2]),
                -k * rs[0] * rs[1] * rs[2],
            );
            let got = cubic_real_roots(k, b, c, d);
            assert_eq!(got.len(), 3, "{rs:?}");
            for (g, w) in got.iter().zip(&rs) {
                assert!((g - w).abs() <= 1e-7 * w.abs().max(1.0), "{g} vs {w}");
            }
        }
    }
}
