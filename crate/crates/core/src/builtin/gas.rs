use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Molar gas constant in J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314462618;

/// Monatomic ideal gas,
/// `U(S, V, N) = U₀ (N/N₀)^{5/3} (V/V₀)^{−2/3} exp(2(S/N − S₀/N₀)/(3R))`
/// with `U₀ = (3/2) N₀ R T₀`, so that `(V₀, S₀, N₀)` is at temperature `T₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealGas {
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(rename = "S0", default)]
    pub s0: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
}

impl IdealGas {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (key, value) in [("N0", self.n0), ("V0", self.v0), ("T0", self.t0)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::param(format!("{prefix}{key}"), "must be positive"));
            }
        }
        if !self.s0.is_finite() {
            return Err(Error::param(format!("{prefix}S0"), "must be finite"));
        }
        Ok(())
    }

    pub fn energy(&self, volume: f64, entropy: f64, moles: f64) -> f64 {
        let u0 = 1.5 * self.n0 * GAS_CONSTANT * self.t0;
        let x = 2.0 / (3.0 * GAS_CONSTANT) * (entropy / moles - self.s0 / self.n0);
        u0 * (moles / self.n0).powf(5.0 / 3.0) * (volume / self.v0).powf(-2.0 / 3.0) * x.exp()
    }

    /// `T = ∂U/∂S = 2U/(3NR)`.
    pub fn temperature(&self, volume: f64, entropy: f64, moles: f64) -> f64 {
        2.0 * self.energy(volume, entropy, moles) / (3.0 * moles * GAS_CONSTANT)
    }

    /// `𝗉 = −∂U/∂V = 2U/(3V)`.
    pub fn pressure(&self, volume: f64, entropy: f64, moles: f64) -> f64 {
        2.0 * self.energy(volume, entropy, moles) / (3.0 * volume)
    }

    /// `∂U/∂N`.
    pub fn du_dn(&self, volume: f64, entropy: f64, moles: f64) -> f64 {
        let u = self.energy(volume, entropy, moles);
        u * (5.0 / (3.0 * moles) - 2.0 * entropy / (3.0 * GAS_CONSTANT * moles * moles))
    }

    /// Entropy at which the gas has temperature `temperature`.
    pub fn entropy_at(&self, volume: f64, moles: f64, temperature: f64) -> f64 {
        let x = (temperature / self.t0).ln() - (2.0 / 3.0) * (moles / self.n0).ln()
            + (2.0 / 3.0) * (volume / self.v0).ln();
        moles * (self.s0 / self.n0 + 1.5 * GAS_CONSTANT * x)
    }
}
