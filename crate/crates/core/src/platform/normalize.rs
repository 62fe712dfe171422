use serde::Serialize;

use super::{check_economy, PlatformError};

/// One region's free-entry economy: potential demand, size, reservation
/// wage and price sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionEconomy {
    pub lambda_bar: f64,
    pub t: f64,
    pub cbar: f64,
    pub alpha: f64,
}

impl RegionEconomy {
    pub fn new(lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<Self, PlatformError> {
        check_economy(lambda_bar, t, cbar, alpha)?;
        Ok(Self { lambda_bar, t, cbar, alpha })
    }

    /// `(gamma² lambda_bar, t, gamma cbar, alpha)`: drivers scale by `gamma`,
    /// prices, wages and access are unchanged.
    pub fn scale_demand_wage(self, gamma: f64) -> Self {
        Self { lambda_bar: gamma * gamma * self.lambda_bar, cbar: gamma * self.cbar, ..self }
    }

    /// `(lambda_bar, t, gamma cbar, alpha / gamma)`: prices and wages scale
    /// by `gamma`, drivers and access are unchanged.
    pub fn change_currency(self, gamma: f64) -> Self {
        Self { cbar: gamma * self.cbar, alpha: self.alpha / gamma, ..self }
    }

    /// `(gamma lambda_bar, gamma t, cbar, alpha)`: drivers scale by `gamma`.
    pub fn scale_demand_size(self, gamma: f64) -> Self {
        Self { lambda_bar: gamma * self.lambda_bar, t: gamma * self.t, ..self }
    }

    pub fn normalized(&self) -> NormalizedDensity {
        NormalizedDensity {
            lambda_tilde: self.lambda_bar / ((self.cbar * self.alpha).powi(2) * self.t),
            alpha: self.alpha,
            driver_scale: self.cbar * self.alpha * self.t,
        }
    }
}

/// Position of a region in the normalized family `(lambda_tilde, 1, 1, 1)`
/// and the maps back to original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedDensity {
    pub lambda_tilde: f64,
    alpha: f64,
    driver_scale: f64,
}

impl NormalizedDensity {
    pub fn price(&self, p_tilde: f64) -> f64 {
        p_tilde / self.alpha
    }

    pub fn wage(&self, c_tilde: f64) -> f64 {
        c_tilde / self.alpha
    }

    pub fn drivers(&self, n_tilde: f64) -> f64 {
        n_tilde * self.driver_scale
    }

    pub fn price_tilde(&self, p: f64) -> f64 {
        p * self.alpha
    }

    pub fn wage_tilde(&self, c: f64) -> f64 {
        c * self.alpha
    }

    pub fn drivers_tilde(&self, n: f64) -> f64 {
        n / self.driver_scale
    }
}

/// `lambda_tilde = lambda_bar / ((cbar alpha)² t)`.
pub fn normalize(lambda_bar: f64, t: f64, cbar: f64, alpha: f64) -> Result<NormalizedDensity, PlatformError> {
    Ok(RegionEconomy::new(lambda_bar, t, cbar, alpha)?.normalized())
}
