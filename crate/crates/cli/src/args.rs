use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "densityeq", version, about = "Spatial ride-hailing equilibria, platform optima, simulation and flow regressions")]
pub struct Cli {
    /// Flat `key = value` file supplying flags of the chosen subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel loops (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Driver equilibrium for a fixed number of drivers.
    Eq(EqArgs),
    /// Joint price/wage optimum over a normalized density grid.
    Sweep(SweepArgs),
    /// Access ratios as the market is scaled up.
    Thicken(ThickenArgs),
    /// Event simulation of one circular region.
    Simulate(SimulateArgs),
    /// Relative outflows from trip records.
    Flows(FlowsArgs),
    /// OLS with fixed effects, logit, or kinked least squares on a panel.
    Regress(RegressArgs),
    /// Synthetic trips from an origin-destination demand matrix.
    SynthTrips(SynthTripsArgs),
    /// Synthetic regression panel with planted coefficients.
    SynthPanel(SynthPanelArgs),
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    /// Demand rate of each region.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub lambda: Vec<f64>,
    /// Pickup-time constant of each region.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub t: Vec<f64>,
    /// Total number of drivers.
    #[arg(long = "N", value_name = "N", required = true)]
    pub total: f64,
}

#[derive(Debug, Args)]
pub struct EqArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Normalized densities; values below 27 are dropped with a warning.
    #[arg(long, value_delimiter = ',', default_values_t = [27.0, 30.0, 50.0, 100.0, 1e3, 1e4, 1e5, 1e6])]
    pub grid: Vec<f64>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the diagnostics as `key,value` rows.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThickenMode {
    OneSided,
    TwoSided,
}

#[derive(Debug, Args)]
pub struct ThickenArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Scale factors, increasing and at least 1.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 100.0, 1e4])]
    pub gamma: Vec<f64>,
    /// Scale drivers only, or drivers and demand together.
    #[arg(long, value_enum, default_value_t = ThickenMode::TwoSided)]
    pub mode: ThickenMode,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Drivers on the circle.
    #[arg(long)]
    pub n: u32,
    /// Passenger arrival rate.
    #[arg(long)]
    pub lambda: f64,
    /// Time to travel the full circumference.
    #[arg(long)]
    pub tprime: f64,
    /// Passenger arrivals to simulate.
    #[arg(long, default_value_t = 1_000_000)]
    pub arrivals: u64,
    /// Random seed.
    #[arg(long, env = "DENSITYEQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Independent replications, one random stream each.
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Window {
    Month,
    Day,
    Hour,
    All,
}

#[derive(Debug, Args)]
pub struct FlowsArgs {
    /// Trip CSV: timestamp, pickup_zone, dropoff_zone, platform.
    #[arg(long)]
    pub trips: PathBuf,
    /// Zone CSV: zone, area_sqmi, group, zone_type, pop_density.
    #[arg(long)]
    pub zones: PathBuf,
    /// Aggregation window for the flow counts.
    #[arg(long, value_enum, default_value_t = Window::Month)]
    pub window: Window,
    /// Drop rides that start and end in the same zone.
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    pub exclude_intra: bool,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Regression panel built from the flows, with platform size taken as
    /// rides per platform and window.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Rejected trip rows with reasons.
    #[arg(long)]
    pub rejected: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Ols,
    Logit,
    NlsKink,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeMethodArg {
    Demean,
    Dummies,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KinkFormArg {
    Log,
    Linear,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Panel CSV; key columns carry an `fe_` prefix.
    #[arg(long)]
    pub panel: PathBuf,
    /// Estimator.
    #[arg(long, value_enum)]
    pub model: Model,
    /// Response column (default `log_ro`, `off` for logit, `ro` for nls-kink).
    #[arg(long)]
    pub response: Option<String>,
    /// Regressor columns.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub regressors: Vec<String>,
    /// Fixed-effect key columns.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub fe: Vec<String>,
    /// Adds the product of two columns as a regressor named `a_x_b`.
    #[arg(long, value_name = "A:B")]
    pub interact: Vec<String>,
    /// How OLS absorbs fixed effects.
    #[arg(long, value_enum, default_value_t = FeMethodArg::Demean)]
    pub method: FeMethodArg,
    /// Size transform for nls-kink.
    #[arg(long, value_enum, default_value_t = KinkFormArg::Log)]
    pub form: KinkFormArg,
    /// Log population density column for nls-kink.
    #[arg(long, default_value = "log_rho")]
    pub log_rho: String,
    /// Platform size column for nls-kink.
    #[arg(long, default_value = "s")]
    pub size: String,
    /// Coefficient CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit summary as `key value` lines.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// nls-kink profile trace as `a_max,ssr` rows.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthTripsArgs {
    /// Zone ids.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub zones: Vec<String>,
    /// Row-major potential rides per hour between zones.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub demand: Vec<f64>,
    /// Access of each origin zone.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub access: Vec<f64>,
    /// Length of the simulated period.
    #[arg(long, default_value_t = 1000.0)]
    pub hours: f64,
    /// Platform label on every trip.
    #[arg(long, default_value = "synthetic")]
    pub platform: String,
    /// First timestamp, `YYYY-MM-DDTHH:MM:SS`.
    #[arg(long, default_value = "2024-01-01T00:00:00")]
    pub start: String,
    /// Random seed.
    #[arg(long, env = "DENSITYEQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Population density of each zone, written to the zone table.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub pop_density: Vec<f64>,
    /// Also write a zone table (unit areas, one group per zone).
    #[arg(long)]
    pub zones_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PanelKind {
    /// Relative outflow on drop-off density, size and population density.
    Ro,
    /// Driver turnoff decisions.
    Turnoff,
    /// Relative outflow that saturates in platform size.
    Kink,
}

#[derive(Debug, Args)]
pub struct SynthPanelArgs {
    /// Panel shape.
    #[arg(long, value_enum)]
    pub kind: PanelKind,
    /// Number of rows.
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    /// Fixed-effect groups for `ro` panels.
    #[arg(long, default_value_t = 50)]
    pub groups: usize,
    /// Planted satiation size for `kink` panels.
    #[arg(long, default_value_t = 3.0e6)]
    pub a_max: f64,
    #[arg(long, value_enum, default_value_t = KinkFormArg::Log)]
    pub form: KinkFormArg,
    /// Random seed.
    #[arg(long, env = "DENSITYEQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
