//! Synthetic panels with planted coefficients, for checking the estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::KinkForm;
use crate::panel::PanelRow;

fn row(values: &[(&str, f64)], keys: &[(&str, String)]) -> PanelRow {
    PanelRow {
        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        keys: keys.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

/// Coefficients of the relative-outflow regression with size interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoTruth {
    pub log_d: f64,
    pub log_s: f64,
    pub log_rho: f64,
    pub log_s_x_log_rho: f64,
    pub sigma: f64,
}

impl Default for RoTruth {
    fn default() -> Self {
        Self { log_d: 0.07, log_s: 0.9, log_rho: 1.2, log_s_x_log_rho: -0.126, sigma: 0.1 }
    }
}

/// `log_ro` on `log_d`, `log_s`, `log_rho` and their interaction plus
/// additive `group` and `window` effects.
pub fn ro_panel(n: usize, groups: usize, truth: &RoTruth, seed: u64) -> Vec<PanelRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, truth.sigma).expect("sigma must be finite and non-negative");
    let groups = groups.max(1);
    let effects: Vec<f64> = (0..groups).map(|g| (g as f64 * 0.37).sin()).collect();
    (0..n)
        .map(|i| {
            let (g, w) = (i % groups, (i / groups) % 12);
            let log_d = rng.random_range(4.0..10.0) + effects[g];
            let log_s = rng.random_range(11.0..16.0);
            let log_rho = rng.random_range(8.0..11.0) + 0.3 * effects[g];
            let inter = log_s * log_rho;
            let y = truth.log_d * log_d
                + truth.log_s * log_s
                + truth.log_rho * log_rho
                + truth.log_s_x_log_rho * inter
                + effects[g]
                + 0.05 * w as f64
                + noise.sample(&mut rng);
            row(
                &[("log_ro", y), ("log_d", log_d), ("log_s", log_s), ("log_rho", log_rho), ("log_s_x_log_rho", inter)],
                &[("group", format!("g{g:03}")), ("window", format!("w{w:02}"))],
            )
        })
        .collect()
}

/// Binary turnoff decisions from a logit in `pickup` and `idle` seconds and
/// `surge`, with intercept `beta[0]`.
pub fn turnoff_panel(n: usize, beta: [f64; 4], seed: u64) -> Vec<PanelRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pickup = rng.random_range(0.0..600.0);
            let idle = rng.random_range(0.0..1800.0);
            let surge = rng.random_range(1.0..4.0);
            let eta = beta[0] + beta[1] * pickup + beta[2] * idle + beta[3] * surge;
            let off = if rng.random::<f64>() * (1.0 + (-eta).exp()) < 1.0 { 1.0 } else { 0.0 };
            row(
                &[("off", off), ("pickup", pickup), ("idle", idle), ("surge", surge)],
                &[("hour", format!("h{:02}", i % 24))],
            )
        })
        .collect()
}

/// Size range used for kinked panels; a planted kink must lie inside it.
pub const KINK_SIZE_RANGE: (f64, f64) = (1.0e6, 1.0e7);

/// Relative outflow that stops responding to size `s` above `a_max`.
/// Sizes are log-uniform on `s_range`.
pub fn kink_panel(n: usize, a_max: f64, form: KinkForm, s_range: (f64, f64), sigma: f64, seed: u64) -> Vec<PanelRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let alpha = match form {
        KinkForm::Log => [1.0, -0.05, 1.0, -0.05],
        KinkForm::Linear => [0.0, -0.05, 2.0e-7, -1.0e-8],
    };
    (0..n)
        .map(|_| {
            let s = rng.random_range(s_range.0.ln()..s_range.1.ln()).exp();
            let l = rng.random_range(8.0..11.0);
            let h = form.h(s.min(a_max));
            let y = alpha[0] + alpha[1] * l + alpha[2] * h + alpha[3] * h * l + noise.sample(&mut rng);
            row(&[("ro", y), ("log_rho", l), ("s", s)], &[])
        })
        .collect()
}
