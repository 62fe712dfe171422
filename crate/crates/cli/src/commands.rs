use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::Serialize;

use densityeq::econometrics::{
    self, synth, EconError, FeMethod, FitResult, KinkForm, KinkOptions, LogitOptions, OlsOptions,
};
use densityeq::equilibrium::{
    comparative_thickness, enumerate_equilibria, solve_all_regions, EquilibriumError, EquilibriumResult, ThickeningMode,
};
use densityeq::flows::{self, FlowError, FlowOptions, OdMatrix, WindowSpec, ZoneMeta, TIMESTAMP_FORMAT};
use densityeq::market::MarketPrimitives;
use densityeq::panel::{self, PanelError, PanelRow};
use densityeq::platform::{density_sweep, PlatformError, SERVICE_THRESHOLD};
use densityeq::sim::{self, SimConfig, SimError};
use densityeq::ExecMode;

use crate::args::*;
use crate::error::CliError;

/// Buffers the whole output so a failed run never leaves a partial file.
fn emit(out: &Option<PathBuf>, f: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    match out {
        Some(path) => std::fs::write(path, &buf).map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(&buf).map_err(CliError::from),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_rows<T: Serialize>(rows: &[T], buf: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn eq_error(e: EquilibriumError) -> CliError {
    match e {
        EquilibriumError::Market(_)
        | EquilibriumError::Domain(_)
        | EquilibriumError::EndogenousSupply
        | EquilibriumError::TooManyRegions { .. }
        | EquilibriumError::NotMultiple { .. } => CliError::Usage(e.to_string()),
        _ => CliError::Model(e.to_string()),
    }
}

fn platform_error(e: PlatformError) -> CliError {
    match e {
        PlatformError::Market(_) | PlatformError::Domain(_) => CliError::Usage(e.to_string()),
        _ => CliError::Model(e.to_string()),
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Config(m) => CliError::Usage(m),
        SimError::Io(m) => CliError::Data(m),
    }
}

fn flow_error(e: FlowError) -> CliError {
    CliError::Data(e.to_string())
}

fn panel_error(e: PanelError) -> CliError {
    CliError::Data(e.to_string())
}

fn econ_error(e: EconError) -> CliError {
    match e {
        EconError::Panel(_) | EconError::Input(_) | EconError::Io(_) => CliError::Data(e.to_string()),
        _ => CliError::Model(e.to_string()),
    }
}

fn market(args: &MarketArgs) -> Result<(MarketPrimitives, Vec<usize>), CliError> {
    let prims = MarketPrimitives::fixed(&args.lambda, &args.t, args.total).map_err(|e| CliError::Usage(e.to_string()))?;
    // The primitives hold regions by decreasing density; `order[k]` is the
    // input position of the k-th stored region.
    let density = |i: usize| if args.t[i] == 0.0 { f64::INFINITY } else { args.lambda[i] / args.t[i] };
    let mut order: Vec<usize> = (0..args.lambda.len()).collect();
    order.sort_by(|&a, &b| density(b).total_cmp(&density(a)));
    Ok((prims, order))
}

#[derive(Serialize)]
struct EqRow {
    region: usize,
    lambda: f64,
    t: f64,
    n: f64,
    wait: f64,
    rides: f64,
    access: f64,
    /// Undersupply relative to the densest region.
    kappa: f64,
    served: bool,
}

fn eq_rows(eq: &EquilibriumResult, prims: &MarketPrimitives, order: &[usize]) -> Vec<EqRow> {
    let lambdas = prims.lambdas();
    let mut rows: Vec<EqRow> = order
        .iter()
        .enumerate()
        .map(|(k, &input)| {
            let o = &eq.outcomes[k];
            let n = eq.allocation.drivers[k];
            EqRow {
                region: input + 1,
                lambda: lambdas[k],
                t: prims.regions()[k].size_t,
                n,
                wait: o.wait,
                rides: o.ride_rate,
                access: o.access,
                kappa: if n > 0.0 { eq.undersupply(&lambdas, 0, k) } else { f64::INFINITY },
                served: n > 0.0,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.region);
    rows
}

pub fn eq(args: &EqArgs, mode: ExecMode) -> Result<(), CliError> {
    let (prims, order) = market(&args.market)?;
    match solve_all_regions(&prims) {
        Ok(eq) => emit(&args.out, |buf| write_rows(&eq_rows(&eq, &prims, &order), buf)),
        Err(EquilibriumError::NoAllRegionsEquilibrium { required, available, .. }) => {
            let all = enumerate_equilibria(&prims, mode).map_err(eq_error)?;
            let eq = all.selected();
            let rows = eq_rows(eq, &prims, &order);
            let served: Vec<String> = rows.iter().filter(|r| r.served).map(|r| r.region.to_string()).collect();
            emit(&args.out, |buf| write_rows(&rows, buf))?;
            Err(CliError::Model(format!(
                "no all-regions equilibrium ({required} drivers needed, {available} available); \
                 wrote the partial equilibrium serving regions {}",
                served.join(",")
            )))
        }
        Err(e) => Err(eq_error(e)),
    }
}

#[derive(Serialize)]
struct SweepRow {
    lambda_tilde: f64,
    served: bool,
    price: f64,
    wage: f64,
    access: f64,
    margin: f64,
    drivers: f64,
    profit: f64,
    error: String,
}

pub fn sweep(args: &SweepArgs, mode: ExecMode) -> Result<(), CliError> {
    let (grid, dropped): (Vec<f64>, Vec<f64>) = args.grid.iter().partition(|&&x| x >= SERVICE_THRESHOLD);
    if !dropped.is_empty() {
        eprintln!("warning: dropped densities below {SERVICE_THRESHOLD} (never served): {dropped:?}");
    }
    if grid.is_empty() {
        return Err(CliError::Usage("density grid has no values at or above 27".into()));
    }
    let table = density_sweep(&grid, mode).map_err(platform_error)?;
    let rows: Vec<SweepRow> = table
        .points
        .iter()
        .map(|p| match p.optimum {
            Some(o) => SweepRow {
                lambda_tilde: p.lambda_tilde,
                served: o.served,
                price: o.price,
                wage: o.wage,
                access: o.access,
                margin: o.margin,
                drivers: o.drivers,
                profit: o.profit,
                error: String::new(),
            },
            None => SweepRow {
                lambda_tilde: p.lambda_tilde,
                served: false,
                price: f64::NAN,
                wage: f64::NAN,
                access: f64::NAN,
                margin: f64::NAN,
                drivers: f64::NAN,
                profit: f64::NAN,
                error: p.error.clone().unwrap_or_default(),
            },
        })
        .collect();
    emit(&args.out, |buf| write_rows(&rows, buf))?;
    let d = &table.diagnostics;
    let checks = [
        ("all_pass", d.all_pass()),
        ("wage_nonincreasing", d.wage_nonincreasing),
        ("price_nonincreasing", d.price_nonincreasing),
        ("margin_nondecreasing", d.margin_nondecreasing),
        ("access_nondecreasing", d.access_nondecreasing),
        ("log_access_concave", d.log_access_concave),
    ];
    let line: Vec<String> = checks.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("diagnostics {} failures={}", line.join(" "), d.failures);
    if let Some(path) = &args.diagnostics {
        let mut text = String::from("check,value\n");
        for (k, v) in checks {
            text += &format!("{k},{v}\n");
        }
        text += &format!("failures,{}\n", d.failures);
        for (i, r) in d.concavity_residuals.iter().enumerate() {
            text += &format!("concavity_residual_{},{r}\n", i + 1);
        }
        std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    if d.failures > 0 {
        return Err(CliError::Model(format!("{} grid points had no optimum", d.failures)));
    }
    Ok(())
}

#[derive(Serialize)]
struct ThickenRow {
    gamma: f64,
    i: usize,
    j: usize,
    access_i: f64,
    access_j: f64,
    access_ratio: f64,
    undersupply: f64,
    common_wait: f64,
}

pub fn thicken(args: &ThickenArgs, mode: ExecMode) -> Result<(), CliError> {
    let (prims, order) = market(&args.market)?;
    let tmode = match args.mode {
        ThickenMode::OneSided => ThickeningMode::OneSided,
        ThickenMode::TwoSided => ThickeningMode::TwoSided,
    };
    let report = comparative_thickness(&prims, &args.gamma, tmode, mode).map_err(eq_error)?;
    let order = &order;
    let rows: Vec<ThickenRow> = report
        .points
        .iter()
        .flat_map(|p| {
            p.pairs.iter().map(move |r| ThickenRow {
                gamma: p.gamma,
                i: order[r.i] + 1,
                j: order[r.j] + 1,
                access_i: p.access[r.i],
                access_j: p.access[r.j],
                access_ratio: r.access_ratio,
                undersupply: r.undersupply,
                common_wait: p.common_wait,
            })
        })
        .collect();
    emit(&args.out, |buf| write_rows(&rows, buf))
}

pub fn simulate(args: &SimulateArgs, mode: ExecMode) -> Result<(), CliError> {
    let config = SimConfig::new(args.n, args.lambda, args.tprime, args.arrivals, args.seed).map_err(sim_error)?;
    let reports = sim::replicate(&config, args.replications.max(1), mode).map_err(sim_error)?;
    emit(&args.out, |buf| sim::write_reports_csv(&reports, buf).map_err(sim_error))?;
    if args.out.is_some() {
        eprintln!("{}", reports[0]);
    }
    Ok(())
}

pub fn flows(args: &FlowsArgs) -> Result<(), CliError> {
    let (trips, mut rejected) = flows::read_trips(open(&args.trips)?).map_err(flow_error)?;
    let zones = flows::read_zones(open(&args.zones)?).map_err(flow_error)?;
    let window = match args.window {
        Window::Month => WindowSpec::Month,
        Window::Day => WindowSpec::Day,
        Window::Hour => WindowSpec::Hour,
        Window::All => WindowSpec::All,
    };
    let summary = flows::compute_flows(&trips, &zones, FlowOptions { window, exclude_intra: args.exclude_intra })
        .map_err(flow_error)?;
    rejected.extend(summary.rejected.iter().cloned());
    if !rejected.is_empty() {
        eprintln!("warning: rejected {} trip records", rejected.len());
    }
    emit(&args.out, |buf| flows::write_flows(&summary.stats, buf).map_err(flow_error))?;
    if let Some(path) = &args.rejected {
        emit(&Some(path.clone()), |buf| write_rows(&rejected, buf))?;
    }
    if let Some(path) = &args.panel {
        let known: std::collections::BTreeSet<&str> = zones.iter().map(|z| z.zone.as_str()).collect();
        let mut sizes: BTreeMap<(String, String), f64> = BTreeMap::new();
        for trip in &trips {
            if known.contains(trip.pickup_zone.as_str()) && known.contains(trip.dropoff_zone.as_str()) {
                *sizes.entry((trip.platform.clone(), window.key(&trip.timestamp))).or_default() += 1.0;
            }
        }
        let build = flows::build_panel(&summary.stats, &zones, &sizes).map_err(flow_error)?;
        if build.skipped_missing_density + build.skipped_undefined_ro > 0 {
            eprintln!(
                "warning: panel skipped {} cells without population density and {} with undefined outflow ratio",
                build.skipped_missing_density, build.skipped_undefined_ro
            );
        }
        emit(&Some(path.clone()), |buf| panel::write_panel_csv(&build.rows, buf).map_err(panel_error))?;
    }
    Ok(())
}

fn add_interactions(rows: &mut [PanelRow], specs: &[String]) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for spec in specs {
        let (a, b) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--interact expects `a:b`, got `{spec}`")))?;
        let name = format!("{a}_x_{b}");
        for (i, row) in rows.iter_mut().enumerate() {
            let product = row.value(i, a).and_then(|x| row.value(i, b).map(|y| x * y)).map_err(panel_error)?;
            row.values.insert(name.clone(), product);
        }
        names.push(name);
    }
    Ok(names)
}

pub fn regress(args: &RegressArgs, mode: ExecMode) -> Result<(), CliError> {
    let mut rows = panel::read_panel_csv(open(&args.panel)?).map_err(panel_error)?;
    let mut regressors = args.regressors.clone();
    for name in add_interactions(&mut rows, &args.interact)? {
        if !regressors.contains(&name) {
            regressors.push(name);
        }
    }
    let regs: Vec<&str> = regressors.iter().map(String::as_str).collect();
    let fe: Vec<&str> = args.fe.iter().map(String::as_str).collect();
    let fit: FitResult = match args.model {
        Model::Ols => {
            let method = match args.method {
                FeMethodArg::Demean => FeMethod::Demean,
                FeMethodArg::Dummies => FeMethod::Dummies,
            };
            let response = args.response.as_deref().unwrap_or("log_ro");
            econometrics::ols_fe(&rows, response, &regs, &fe, &OlsOptions { method, ..Default::default() })
        }
        Model::Logit => {
            let response = args.response.as_deref().unwrap_or("off");
            econometrics::logit_mle(&rows, response, &regs, &fe, &LogitOptions::default())
        }
        Model::NlsKink => {
            let response = args.response.as_deref().unwrap_or("ro");
            let form = match args.form {
                KinkFormArg::Log => KinkForm::Log,
                KinkFormArg::Linear => KinkForm::Linear,
            };
            econometrics::nls_kink(&rows, response, &args.log_rho, &args.size, form, &KinkOptions { mode, ..Default::default() })
        }
    }
    .map_err(econ_error)?;
    emit(&args.out, |buf| fit.write_csv(buf).map_err(econ_error))?;
    match &args.summary {
        Some(path) => std::fs::write(path, fit.summary()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None if args.out.is_some() => eprint!("{}", fit.summary()),
        None => {}
    }
    if let (Some(path), Some(k)) = (&args.profile, &fit.kink) {
        emit(&Some(path.clone()), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["a_max", "ssr"])?;
            for (a, s) in &k.profile {
                w.serialize((a, s))?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

pub fn synth_trips(args: &SynthTripsArgs) -> Result<(), CliError> {
    let k = args.zones.len();
    if args.demand.len() != k * k {
        return Err(CliError::Usage(format!("--demand needs {} values for {k} zones, got {}", k * k, args.demand.len())));
    }
    let demand: Vec<Vec<f64>> = args.demand.chunks(k).map(<[f64]>::to_vec).collect();
    let od = OdMatrix::new(args.zones.clone(), demand, args.access.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(args.hours.is_finite() && args.hours > 0.0) {
        return Err(CliError::Usage(format!("--hours must be positive, got {}", args.hours)));
    }
    let start = NaiveDateTime::parse_from_str(&args.start, TIMESTAMP_FORMAT)
        .map_err(|e| CliError::Usage(format!("--start `{}`: {e}", args.start)))?;
    let trips = flows::synth_market(&od, &args.platform, start, args.hours, args.seed);
    emit(&args.out, |buf| flows::write_trips(&trips, buf).map_err(flow_error))?;
    if !args.pop_density.is_empty() && args.pop_density.len() != k {
        return Err(CliError::Usage(format!("--pop-density needs {k} values, got {}", args.pop_density.len())));
    }
    if let Some(path) = &args.zones_out {
        let zones: Vec<ZoneMeta> = args
            .zones
            .iter()
            .enumerate()
            .map(|(i, z)| ZoneMeta {
                zone: z.clone(),
                area_sqmi: 1.0,
                group: z.clone(),
                zone_type: "synthetic".into(),
                pop_density: args.pop_density.get(i).copied(),
            })
            .collect();
        emit(&Some(path.clone()), |buf| flows::write_zones(&zones, buf).map_err(flow_error))?;
    }
    Ok(())
}

pub fn synth_panel(args: &SynthPanelArgs) -> Result<(), CliError> {
    let rows = match args.kind {
        PanelKind::Ro => synth::ro_panel(args.rows, args.groups, &synth::RoTruth::default(), args.seed),
        PanelKind::Turnoff => synth::turnoff_panel(args.rows, [-1.5, 0.007, 0.001, -0.05], args.seed),
        PanelKind::Kink => {
            if !(args.a_max > 0.0 && args.a_max.is_finite()) {
                return Err(CliError::Usage(format!("--a-max must be positive, got {}", args.a_max)));
            }
            let form = match args.form {
                KinkFormArg::Log => KinkForm::Log,
                KinkFormArg::Linear => KinkForm::Linear,
            };
            synth::kink_panel(args.rows, args.a_max, form, synth::KINK_SIZE_RANGE, 0.05, args.seed)
        }
    };
    emit(&args.out, |buf| panel::write_panel_csv(&rows, buf).map_err(panel_error))
}
