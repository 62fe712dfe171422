//! Spatial ride-hailing markets with economies of density.
//!
//! * [`market`]: primitive types and per-region closed forms.
//! * [`equilibrium`]: driver location game with a fixed driver pool.
//! * [`platform`]: free-entry supply and platform-optimal prices and wages.
//! * [`sim`]: Monte Carlo check of the wait-time decomposition.
//! * [`flows`]: trip ingestion, relative outflows and synthetic markets.
//! * [`econometrics`]: OLS with fixed effects, logit, kinked least squares.

pub mod econometrics;
pub mod equilibrium;
pub mod exec;
pub mod flows;
pub mod market;
pub mod panel;
pub mod platform;
pub mod roots;
pub mod sim;

pub use exec::ExecMode;
