//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails
//! other than the ones listed in `EXPECTED_FAILURES`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use densityeq::econometrics::{self, synth, KinkForm, KinkOptions, LogitOptions, OlsOptions};
use densityeq::equilibrium::{
    comparative_thickness, existence_two_region, platform_ideal_pair, solve_all_regions, solve_two_region,
    solve_two_region_bisection, split_regions, EquilibriumError, ThickeningMode,
};
use densityeq::flows::{self, FlowOptions, OdMatrix, WindowSpec};
use densityeq::market::{ride_rate, Allocation, MarketPrimitives};
use densityeq::platform::{density_sweep, optimal_joint, optimal_joint_normalized, thickening_pairs, RegionEconomy};
use densityeq::sim::{self, SimConfig};
use densityeq::ExecMode;

/// Criteria that cannot be met as stated, with the reason. They still run
/// and print FAIL.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    5,
    "the optimal wage approaches 0 like lambda_tilde^(-1/3); at 1e6 it is 0.0127, outside the 0.01 band",
)];

type Check = (u32, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Random fixed-driver market that admits an all-regions equilibrium.
fn random_market(rng: &mut ChaCha8Rng, regions: usize) -> MarketPrimitives {
    loop {
        let lambda: Vec<f64> = (0..regions).map(|_| log_uniform(rng, 1.0, 50.0)).collect();
        let t: Vec<f64> = (0..regions).map(|_| rng.random_range(0.5..3.0)).collect();
        let probe = MarketPrimitives::fixed(&lambda, &t, 1.0).unwrap();
        let required = match solve_all_regions(&probe) {
            Err(EquilibriumError::NoAllRegionsEquilibrium { required, .. }) => required,
            Ok(_) => 1.0,
            Err(_) => continue,
        };
        let m = MarketPrimitives::fixed(&lambda, &t, required * rng.random_range(1.05..3.0)).unwrap();
        if solve_all_regions(&m).is_ok() {
            return m;
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_n, mut worst_w, mut skew_ok, mut found) = (0.0f64, 0.0f64, true, 0);
    while found < 500 {
        let l1 = log_uniform(&mut rng, 1.0, 100.0);
        let l2 = l1 * rng.random_range(0.05..0.999);
        let t = rng.random_range(0.1..5.0);
        let floor = (l1 * t).sqrt() + (l2 * t).sqrt();
        let total = floor * rng.random_range(1.0..4.0);
        if !existence_two_region(l1, l2, total, t).unwrap().all() {
            continue;
        }
        found += 1;
        let cubic = solve_two_region(l1, l2, total, t).unwrap();
        let oracle = solve_two_region_bisection(l1, l2, total, t).unwrap();
        let (n1, n2) = (cubic.allocation.drivers[0], cubic.allocation.drivers[1]);
        worst_n = worst_n.max(rel(n1, oracle.allocation.drivers[0]));
        let (w1, w2) = (n1 / l1 + t / n1, n2 / l2 + t / n2);
        worst_w = worst_w.max((w1 - w2).abs() / w1.max(1.0));
        skew_ok &= n1 / l1 > n2 / l2;
    }
    outcome(
        worst_n <= 1e-9 && worst_w <= 1e-9 && skew_ok,
        format!("500 instances; max rel n1 gap {worst_n:.2e}, max wait gap {worst_w:.2e}, skew holds: {skew_ok}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = [1.0, 2.0, 5.0, 10.0, 100.0, 1e4];
    let mut failures = Vec::new();
    let (mut worst_drop, mut worst_gap) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let regions = rng.random_range(2..=6);
        let m = random_market(&mut rng, regions);
        for mode in [ThickeningMode::OneSided, ThickeningMode::TwoSided] {
            let report = match comparative_thickness(&m, &grid, mode, ExecMode::Parallel) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("market {k} {mode:?}: {e}"));
                    continue;
                }
            };
            let drop = report.worst_ratio_decrease();
            let last = report.points.last().unwrap();
            let gap = last.pairs.iter().map(|p| 1.0 - p.access_ratio).fold(0.0, f64::max);
            worst_drop = worst_drop.max(drop);
            worst_gap = worst_gap.max(gap);
            if drop > 1e-12 || report.max_ratio() > 1.0 + 1e-12 || gap > 0.02 {
                failures.push(format!("market {k} {mode:?}: drop {drop:.2e}, max {:.6}, gap {gap:.4}", report.max_ratio()));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 markets x 2 modes; worst ratio decrease {worst_drop:.2e}, worst 1 - ratio at 1e4 {worst_gap:.4}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_w, mut worst_a, mut worst_n) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let regions = rng.random_range(2..=5);
        let quantum = [0.5, 1.0 / 3.0, 0.25][rng.random_range(0..3)];
        let lambda: Vec<f64> = (0..regions).map(|_| log_uniform(&mut rng, 2.0, 40.0)).collect();
        let t: Vec<f64> = (0..regions).map(|_| quantum * rng.random_range(1..=6) as f64).collect();
        let probe = MarketPrimitives::fixed(&lambda, &t, 1.0).unwrap();
        let required = match solve_all_regions(&probe) {
            Err(EquilibriumError::NoAllRegionsEquilibrium { required, .. }) => required,
            _ => 1.0,
        };
        let m = MarketPrimitives::fixed(&lambda, &t, required * 2.0).unwrap();
        let base = solve_all_regions(&m).unwrap();
        let split = split_regions(&m, quantum).unwrap();
        let copies = solve_all_regions(&split.primitives).unwrap();
        worst_w = worst_w.max(rel(copies.common_wait, base.common_wait));
        let mut rides = vec![0.0; m.len()];
        for (&o, out) in split.origin.iter().zip(&copies.outcomes) {
            rides[o] += out.ride_rate;
        }
        let agg: Allocation = split.aggregate(&copies.allocation, m.len());
        for (i, r) in m.regions().iter().enumerate() {
            worst_a = worst_a.max((rides[i] / r.lambda_bar - base.outcomes[i].access).abs());
            worst_n = worst_n.max(rel(agg.drivers[i], base.allocation.drivers[i]));
        }
    }
    outcome(
        worst_w <= 1e-9 && worst_a <= 1e-9 && worst_n <= 1e-9,
        format!("50 markets; max rel wait gap {worst_w:.2e}, max access gap {worst_a:.2e}, max rel driver gap {worst_n:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut beaten, mut order_fail, mut done) = (0, 0, 0);
    while done < 100 {
        let li = log_uniform(&mut rng, 2.0, 60.0);
        let lj = li * rng.random_range(0.1..0.95);
        let t = rng.random_range(0.3..3.0);
        let total = ((li * t).sqrt() + (lj * t).sqrt()) * rng.random_range(1.0..3.0);
        if !existence_two_region(li, lj, total, t).unwrap().all() {
            continue;
        }
        let Ok((ni, nj)) = platform_ideal_pair(total, li, lj, t) else {
            continue;
        };
        done += 1;
        let rides = |n: f64| ride_rate(n, li, t).unwrap() + ride_rate(total - n, lj, t).unwrap();
        let best = rides(ni);
        if (1..10_000).any(|k| rides(total * k as f64 / 10_000.0) > best + 1e-12 * best) {
            beaten += 1;
        }
        let eq = solve_two_region(li, lj, total, t).unwrap();
        let before = eq.outcomes[1].access / eq.outcomes[0].access;
        let after = (ride_rate(nj, lj, t).unwrap() / lj) / (ride_rate(ni, li, t).unwrap() / li);
        if !(before < after && after < 1.0) {
            order_fail += 1;
        }
    }
    outcome(
        beaten == 0 && order_fail == 0,
        format!("100 pairs; grid beat the ideal pair {beaten} times, access-ratio ordering failed {order_fail} times"),
    )
}

fn criterion_5() -> Outcome {
    let b = optimal_joint_normalized(27.0).unwrap();
    let f = optimal_joint_normalized(1e6).unwrap();
    let u = optimal_joint_normalized(26.9).unwrap();
    let near = |got: [f64; 4], want: [f64; 4], tol: f64| got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol);
    let boundary = near([b.price, b.wage, b.access, b.margin], [2.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0, 0.0], 1e-3);
    let limit = [f.price, f.wage, f.access, f.margin];
    let limit_ok = near(limit, [0.5, 0.0, 0.5, 0.5], 0.01);
    outcome(
        boundary && limit_ok && !u.served,
        format!(
            "27 -> ({:.6}, {:.6}, {:.6}, {:.6}) ok: {boundary}; 1e6 -> ({:.6}, {:.6}, {:.6}, {:.6}) ok: {limit_ok}; 26.9 unserved: {}",
            b.price, b.wage, b.access, b.margin, limit[0], limit[1], limit[2], limit[3], !u.served
        ),
    )
}

fn criterion_6() -> Outcome {
    let grid = [27.0, 30.0, 50.0, 100.0, 1e3, 1e6];
    let table = density_sweep(&grid, ExecMode::Parallel).unwrap();
    let d = &table.diagnostics;
    let pairs = thickening_pairs(&grid, 10.0, ExecMode::Parallel).unwrap();
    let held = pairs.iter().filter(|p| p.holds()).count();
    let worst = d.concavity_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        d.all_pass() && held == pairs.len(),
        format!(
            "c* non-increasing {}, p* non-increasing {}, margin non-decreasing {}, A* non-decreasing {}, \
             max second difference {worst:.3e}, thickening pairs {held}/{}",
            d.wage_nonincreasing,
            d.price_nonincreasing,
            d.margin_nondecreasing,
            d.access_nondecreasing,
            pairs.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let lt = log_uniform(&mut rng, 30.0, 1e5);
        let (cbar, alpha, t): (f64, f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.5..3.0));
        let e = RegionEconomy::new(lt * (cbar * alpha).powi(2) * t, t, cbar, alpha).unwrap();
        let gamma = log_uniform(&mut rng, 0.2, 5.0);
        let base = optimal_joint(e.lambda_bar, e.t, e.cbar, e.alpha).unwrap();
        let c = e.change_currency(gamma);
        let cur = optimal_joint(c.lambda_bar, c.t, c.cbar, c.alpha).unwrap();
        let s = e.scale_demand_wage(gamma);
        let dw = optimal_joint(s.lambda_bar, s.t, s.cbar, s.alpha).unwrap();
        for err in [
            rel(cur.drivers, base.drivers),
            rel(cur.access, base.access),
            rel(cur.price, gamma * base.price),
            rel(cur.wage, gamma * base.wage),
            rel(dw.drivers, gamma * base.drivers),
            rel(dw.price, base.price),
            rel(dw.wage, base.wage),
            rel(dw.access, base.access),
        ] {
            worst = worst.max(err);
        }
    }
    outcome(worst <= 1e-8, format!("100 draws; max relative deviation {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let config = SimConfig::new(5, 10.0, 8.0, 1_000_000, 8).unwrap();
    let r = sim::simulate_region(&config).unwrap();
    let ok = r.rel_err_idle < 0.01 && r.rel_err_pickup < 0.01 && r.rel_err_total < 0.01 && r.ks_passes();
    outcome(
        ok,
        format!(
            "idle {:.5}, pickup {:.5}, total {:.5} (relative errors {:.2e}, {:.2e}, {:.2e}); KS {:.5} vs {:.5}",
            r.mean_idle,
            r.mean_pickup,
            r.mean_total,
            r.rel_err_idle,
            r.rel_err_pickup,
            r.rel_err_total,
            r.ks_statistic,
            r.ks_critical_1pct
        ),
    )
}

fn zone_stats(trips: &[flows::TripRecord], zones: &[&str], zone: &str) -> flows::FlowStats {
    let meta: Vec<flows::ZoneMeta> = zones
        .iter()
        .map(|z| flows::ZoneMeta { zone: z.to_string(), area_sqmi: 1.0, group: "g".into(), zone_type: "t".into(), pop_density: None })
        .collect();
    let summary = flows::compute_flows(trips, &meta, FlowOptions { window: WindowSpec::All, exclude_intra: true }).unwrap();
    summary.stats.into_iter().find(|s| s.zone == zone).unwrap()
}

fn criterion_9() -> Outcome {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let zones = vec!["A".to_string(), "B".to_string()];
    // Balanced demand with some intra-zone trips, which are excluded.
    let balanced = OdMatrix::new(zones.clone(), vec![vec![5.0, 40.0], vec![40.0, 5.0]], vec![0.9, 0.6]).unwrap();
    let trips = flows::synth_market(&balanced, "p", start, 1000.0, 9);
    let a = zone_stats(&trips, &["A", "B"], "A");
    let est = flows::access_ratio_estimates(&a, None).balanced.unwrap();
    let ok1 = (est.estimate - 1.5).abs() <= 3.0 * est.se;

    // Two platforms facing the same unbalanced demand.
    let demand = vec![vec![0.0, 50.0], vec![30.0, 0.0]];
    let first = OdMatrix::new(zones.clone(), demand.clone(), vec![0.9, 0.6]).unwrap();
    let second = OdMatrix::new(zones, demand, vec![0.8, 0.4]).unwrap();
    let s1 = zone_stats(&flows::synth_market(&first, "one", start, 1000.0, 10), &["A", "B"], "A");
    let s2 = zone_stats(&flows::synth_market(&second, "two", start, 1000.0, 11), &["A", "B"], "A");
    let dr = flows::access_ratio_estimates(&s1, Some(&s2)).double_ratio.unwrap();
    let truth = (0.9 / 0.6) / (0.8 / 0.4);
    let ok2 = (dr.estimate - truth).abs() <= 3.0 * dr.se;
    outcome(
        ok1 && ok2,
        format!(
            "RO_1 {:.4} +- {:.4} (target 1.5); double ratio {:.4} +- {:.4} (target {truth:.4})",
            est.estimate, est.se, dr.estimate, dr.se
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let within = |est: f64, se: f64, truth: f64| (est - truth).abs() <= 3.0 * se;

    let shape14 = synth::RoTruth { log_s: 0.0, log_rho: 0.0, log_s_x_log_rho: 0.0, ..Default::default() };
    let rows = synth::ro_panel(10_000, 50, &shape14, 101);
    let f = econometrics::ols_fe(&rows, "log_ro", &["log_d"], &["group", "window"], &OlsOptions::default()).unwrap();
    let c = f.coefficient("log_d").unwrap();
    ok &= within(c.estimate, c.se, 0.07);
    notes.push(format!("alpha {:.4} ({:.4})", c.estimate, c.se));

    let rows = synth::ro_panel(10_000, 50, &synth::RoTruth::default(), 102);
    let regs = ["log_d", "log_s", "log_rho", "log_s_x_log_rho"];
    let f = econometrics::ols_fe(&rows, "log_ro", &regs, &["group", "window"], &OlsOptions::default()).unwrap();
    let c = f.coefficient("log_s_x_log_rho").unwrap();
    ok &= within(c.estimate, c.se, -0.126);
    notes.push(format!("alpha3 {:.4} ({:.4})", c.estimate, c.se));

    // The response level times a group-level factor, with group effects:
    // identical slopes.
    let scaled: Vec<_> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let g: f64 = r.keys["group"][1..].parse().unwrap();
            *r.values.get_mut("log_ro").unwrap() += (0.5 + 0.1 * g).ln();
            r
        })
        .collect();
    let g = econometrics::ols_fe(&scaled, "log_ro", &regs, &["group", "window"], &OlsOptions::default()).unwrap();
    let absorb = regs
        .iter()
        .map(|r| (f.coefficient(r).unwrap().estimate - g.coefficient(r).unwrap().estimate).abs())
        .fold(0.0, f64::max);
    ok &= absorb <= 1e-8;
    notes.push(format!("absorption gap {absorb:.1e}"));

    let rows = synth::turnoff_panel(100_000, [-1.5, 0.007, 0.001, -0.05], 103);
    let f = econometrics::logit_mle(&rows, "off", &["pickup", "idle", "surge"], &[], &LogitOptions::default()).unwrap();
    for (term, truth) in [("pickup", 0.007), ("idle", 0.001), ("surge", -0.05)] {
        let c = f.coefficient(term).unwrap();
        ok &= within(c.estimate, c.se, truth);
        notes.push(format!("{term} {:.5} ({:.5})", c.estimate, c.se));
    }

    let rows = synth::kink_panel(10_000, 3.0e6, KinkForm::Log, synth::KINK_SIZE_RANGE, 0.05, 104);
    let f = econometrics::nls_kink(&rows, "ro", "log_rho", "s", KinkForm::Log, &KinkOptions::default()).unwrap();
    let a = f.kink.as_ref().unwrap().a_max;
    ok &= rel(a, 3.0e6) < 0.01;
    notes.push(format!("a_max {a:.0}"));
    outcome(ok, notes.join(", "))
}

fn criterion_11() -> Outcome {
    let mut same = Vec::new();
    let config = SimConfig::new(5, 10.0, 8.0, 100_000, 11).unwrap();
    let csv = |mode| {
        let reports = sim::replicate(&config, 4, mode).unwrap();
        let mut buf = Vec::new();
        sim::write_reports_csv(&reports, &mut buf).unwrap();
        buf
    };
    same.push(("simulation", csv(ExecMode::Parallel) == csv(ExecMode::Sequential) && csv(ExecMode::Parallel) == csv(ExecMode::Parallel)));

    let start = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let od = OdMatrix::new(vec!["A".into(), "B".into()], vec![vec![1.0, 9.0], vec![7.0, 2.0]], vec![0.8, 0.5]).unwrap();
    let trips = |seed| {
        let mut buf = Vec::new();
        flows::write_trips(&flows::synth_market(&od, "p", start, 200.0, seed), &mut buf).unwrap();
        buf
    };
    same.push(("synthetic trips", trips(5) == trips(5)));

    let sweep = |mode| format!("{:?}", density_sweep(&[27.0, 40.0, 1e4], mode).unwrap());
    same.push(("density sweep", sweep(ExecMode::Parallel) == sweep(ExecMode::Sequential)));

    let rows = synth::kink_panel(2_000, 3.0e6, KinkForm::Log, synth::KINK_SIZE_RANGE, 0.05, 12);
    let kink = |mode| {
        let f = econometrics::nls_kink(&rows, "ro", "log_rho", "s", KinkForm::Log, &KinkOptions { mode, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        buf
    };
    same.push(("kink fit", kink(ExecMode::Parallel) == kink(ExecMode::Sequential)));

    let m = MarketPrimitives::fixed(&[10.0, 5.0, 2.0], &[2.0, 2.0, 1.0], 30.0).unwrap();
    let thick = |mode| format!("{:?}", comparative_thickness(&m, &[1.0, 10.0, 100.0], ThickeningMode::TwoSided, mode).unwrap());
    same.push(("thickening", thick(ExecMode::Parallel) == thick(ExecMode::Sequential)));

    let mut panel_a = Vec::new();
    let mut panel_b = Vec::new();
    densityeq::panel::write_panel_csv(&synth::turnoff_panel(300, [-1.0, 0.01, 0.0, 0.0], 13), &mut panel_a).unwrap();
    densityeq::panel::write_panel_csv(&synth::turnoff_panel(300, [-1.0, 0.01, 0.0, 0.0], 13), &mut panel_b).unwrap();
    same.push(("synthetic panel", panel_a == panel_b));

    let bad: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(n, _)| *n).collect();
    let summary: BTreeMap<&str, bool> = same.into_iter().collect();
    outcome(bad.is_empty(), format!("byte-identical reruns: {summary:?}"))
}

fn main() {
    let criteria: [Check; 11] = [
        (1, criterion_1, Some(Duration::from_secs(5))),
        (2, criterion_2, Some(Duration::from_secs(30))),
        (3, criterion_3, None),
        (4, criterion_4, None),
        (5, criterion_5, Some(Duration::from_secs(10))),
        (6, criterion_6, None),
        (7, criterion_7, None),
        (8, criterion_8, Some(Duration::from_secs(60))),
        (9, criterion_9, None),
        (10, criterion_10, Some(Duration::from_secs(120))),
        (11, criterion_11, None),
    ];
    let mut unexpected = Vec::new();
    for (id, check, limit) in criteria {
        let clock = Instant::now();
        let mut o = check();
        let elapsed = clock.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                o.pass = false;
                o.detail += &format!("; runtime {elapsed:.2?} exceeds {limit:.0?}");
            }
        }
        let expected = EXPECTED_FAILURES.iter().find(|(e, _)| *e == id);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {status} [{elapsed:.2?}] {}", o.detail);
        match (o.pass, expected) {
            (false, Some((_, why))) => println!("              expected failure: {why}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => println!("              listed as an expected failure but now passes"),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
