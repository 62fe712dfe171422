//! Monte Carlo of a single circular region.
//!
//! `n` drivers sit at equidistant posts on a circle that takes `t_prime`
//! hours to traverse. Passengers arrive as a Poisson stream at uniform
//! positions and are matched to the nearest driver. Trips take no time, so
//! a driver's idle time is the gap since its previous assignment and the
//! pickup time is the arc distance times `t_prime`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use thiserror::Error;

use crate::exec::{self, ExecMode};

pub const MIN_ARRIVALS: u64 = 1_000;
pub const MAX_ARRIVALS: u64 = 100_000_000;
/// Pickup samples kept for the uniformity test.
pub const KS_SAMPLES: usize = 100_000;
/// Generator used for every replication; the replication index selects the
/// ChaCha stream.
pub const RNG_NAME: &str = "ChaCha8Rng(seed, stream = replication)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("csv output failed: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub drivers: u32,
    pub arrival_rate: f64,
    /// Hours for a driver to travel the full circumference (`4t`).
    pub t_prime: f64,
    pub num_arrivals: u64,
    pub seed: u64,
    /// Rotation of all driver posts, as a fraction of the spacing.
    pub phase: f64,
}

impl SimConfig {
    pub fn new(drivers: u32, arrival_rate: f64, t_prime: f64, num_arrivals: u64, seed: u64) -> Result<Self, SimError> {
        let c = Self { drivers, arrival_rate, t_prime, num_arrivals, seed, phase: 0.0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.drivers == 0 {
            return bad("drivers must be a positive integer".into());
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return bad(format!("arrival_rate must be positive, got {}", self.arrival_rate));
        }
        if !(self.t_prime.is_finite() && self.t_prime >= 0.0) {
            return bad(format!("t_prime must be non-negative, got {}", self.t_prime));
        }
        if !(MIN_ARRIVALS..=MAX_ARRIVALS).contains(&self.num_arrivals) {
            return bad(format!("num_arrivals must be in [{MIN_ARRIVALS}, {MAX_ARRIVALS}], got {}", self.num_arrivals));
        }
        if !self.phase.is_finite() {
            return bad("phase must be finite".into());
        }
        Ok(())
    }

    pub fn predicted_idle(&self) -> f64 {
        self.drivers as f64 / self.arrival_rate
    }

    pub fn predicted_pickup(&self) -> f64 {
        self.t_prime / (4.0 * self.drivers as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub drivers: u32,
    pub arrival_rate: f64,
    pub t_prime: f64,
    pub num_arrivals: u64,
    pub seed: u64,
    pub replication: u64,
    pub mean_idle: f64,
    pub mean_pickup: f64,
    pub mean_total: f64,
    pub se_idle: f64,
    pub se_pickup: f64,
    pub se_total: f64,
    pub predicted_idle: f64,
    pub predicted_pickup: f64,
    pub predicted_total: f64,
    pub rel_err_idle: f64,
    pub rel_err_pickup: f64,
    pub rel_err_total: f64,
    pub max_pickup: f64,
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
    pub rng: &'static str,
}

impl SimReport {
    pub fn ks_passes(&self) -> bool {
        self.ks_statistic <= self.ks_critical_1pct
    }
}

impl std::fmt::Display for SimReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "drivers      {}", self.drivers)?;
        writeln!(f, "arrival_rate {}", self.arrival_rate)?;
        writeln!(f, "t_prime      {}", self.t_prime)?;
        writeln!(f, "arrivals     {}", self.num_arrivals)?;
        writeln!(f, "seed         {} (replication {}, {})", self.seed, self.replication, self.rng)?;
        writeln!(f, "component  mean  se  predicted  rel_err")?;
        for (name, m, se, p, e) in [
            ("idle", self.mean_idle, self.se_idle, self.predicted_idle, self.rel_err_idle),
            ("pickup", self.mean_pickup, self.se_pickup, self.predicted_pickup, self.rel_err_pickup),
            ("total", self.mean_total, self.se_total, self.predicted_total, self.rel_err_total),
        ] {
            writeln!(f, "{name}  {m}  {se}  {p}  {e}")?;
        }
        write!(f, "pickup KS {} (1% critical {})", self.ks_statistic, self.ks_critical_1pct)
    }
}

/// Running sums for a mean and its standard error.
#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn se(&self) -> f64 {
        if self.n < 2.0 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

fn rel_err(x: f64, target: f64) -> f64 {
    if target == 0.0 {
        x.abs()
    } else {
        (x - target).abs() / target
    }
}

/// One-sample Kolmogorov-Smirnov statistic against `U[0, upper]`.
pub fn ks_uniform(samples: &mut [f64], upper: f64) -> f64 {
    if samples.is_empty() || upper <= 0.0 {
        return 0.0;
    }
    samples.sort_by(f64::total_cmp);
    let m = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let cdf = (x / upper).clamp(0.0, 1.0);
        d.max(cdf - i as f64 / m).max((i + 1) as f64 / m - cdf)
    })
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(samples: usize) -> f64 {
    1.6276 / (samples as f64).sqrt()
}

/// Runs replication 0 of `config`.
pub fn simulate_region(config: &SimConfig) -> Result<SimReport, SimError> {
    simulate_replication(config, 0)
}

pub fn simulate_replication(config: &SimConfig, replication: u64) -> Result<SimReport, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(replication);
    let n = config.drivers as usize;
    let nf = n as f64;
    let gaps = Exp::new(config.arrival_rate).expect("validated rate");

    let mut last = vec![0.0f64; n];
    let mut clock = 0.0;
    let (mut idle, mut pickup, mut total) = (Moments::default(), Moments::default(), Moments::default());
    let mut max_pickup = 0.0f64;
    let keep = (config.num_arrivals as usize).min(KS_SAMPLES);
    let mut ks = Vec::with_capacity(keep);

    for _ in 0..config.num_arrivals {
        clock += gaps.sample(&mut rng);
        let u: f64 = rng.random();
        // Position in units of driver spacing, measured from post 0.
        let d = u * nf - config.phase;
        let nearest = d.round();
        let k = (nearest as i64).rem_euclid(n as i64) as usize;
        let arc = (d - nearest).abs() / nf;
        let p = arc * config.t_prime;
        let i = clock - last[k];
        last[k] = clock;
        idle.push(i);
        pickup.push(p);
        total.push(i + p);
        max_pickup = max_pickup.max(p);
        if ks.len() < keep {
            ks.push(p);
        }
    }

    let upper = config.t_prime / (2.0 * nf);
    let ks_statistic = ks_uniform(&mut ks, upper);
    let (pi, pp) = (config.predicted_idle(), config.predicted_pickup());
    let mean_total = idle.mean + pickup.mean;
    Ok(SimReport {
        drivers: config.drivers,
        arrival_rate: config.arrival_rate,
        t_prime: config.t_prime,
        num_arrivals: config.num_arrivals,
        seed: config.seed,
        replication,
        mean_idle: idle.mean,
        mean_pickup: pickup.mean,
        mean_total,
        se_idle: idle.se(),
        se_pickup: pickup.se(),
        se_total: total.se(),
        predicted_idle: pi,
        predicted_pickup: pp,
        predicted_total: pi + pp,
        rel_err_idle: rel_err(idle.mean, pi),
        rel_err_pickup: rel_err(pickup.mean, pp),
        rel_err_total: rel_err(mean_total, pi + pp),
        max_pickup,
        ks_statistic,
        ks_critical_1pct: ks_critical_1pct(ks.len()),
        rng: RNG_NAME,
    })
}

/// Independent replications `0..count`, in order.
pub fn replicate(config: &SimConfig, count: u64, mode: ExecMode) -> Result<Vec<SimReport>, SimError> {
    let reps: Vec<u64> = (0..count).collect();
    exec::map(mode, &reps, |&r| simulate_replication(config, r)).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub report: SimReport,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitValidation {
    pub rows: Vec<ValidationRow>,
    pub tolerance: f64,
}

impl WaitValidation {
    pub fn failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.passes)
            .map(|r| {
                let s = &r.report;
                format!(
                    "n = {}: relative errors idle {}, pickup {}, total {} exceed {}",
                    s.drivers, s.rel_err_idle, s.rel_err_pickup, s.rel_err_total, self.tolerance
                )
            })
            .collect()
    }

    /// Driver count with the smallest simulated mean wait.
    pub fn argmin_drivers(&self) -> Option<u32> {
        self.rows.iter().min_by(|a, b| a.report.mean_total.total_cmp(&b.report.mean_total)).map(|r| r.report.drivers)
    }
}

/// Simulates each driver count on `grid` (one seed, independent streams per
/// point) and checks every wait component against its closed form.
pub fn validate_wait_formula(
    arrival_rate: f64,
    t_prime: f64,
    grid: &[u32],
    num_arrivals: u64,
    seed: u64,
    tolerance: f64,
    mode: ExecMode,
) -> Result<WaitValidation, SimError> {
    let configs: Vec<(u64, SimConfig)> = grid
        .iter()
        .enumerate()
        .map(|(i, &n)| SimConfig::new(n, arrival_rate, t_prime, num_arrivals, seed).map(|c| (i as u64, c)))
        .collect::<Result<_, _>>()?;
    let rows = exec::map(mode, &configs, |(i, c)| simulate_replication(c, *i))
        .into_iter()
        .map(|r| {
            r.map(|report| {
                let passes = report.rel_err_idle <= tolerance
                    && report.rel_err_pickup <= tolerance
                    && report.rel_err_total <= tolerance;
                ValidationRow { report, passes }
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(WaitValidation { rows, tolerance })
}

/// Writes reports as CSV with a header row.
pub fn write_reports_csv<W: Write>(reports: &[SimReport], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r).map_err(|e| SimError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))
}
