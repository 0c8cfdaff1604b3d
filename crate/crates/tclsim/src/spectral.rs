//! Bath spectral densities.
//!
//! A bath is characterized by its spectral density J(ω): the
//! frequency-resolved system–bath coupling strength. Only two shapes ship:
//! a normalized Lorentzian of half-width κ centered on ω₀ with total area
//! 𝒩, and a flat (delta-correlated) density used symbolically by the
//! Markovian mode. The normalization is tied to the Markovian rate the
//! induced transition rate must saturate to: 𝒩 = γ_M·κ makes the
//! on-resonance rate γ(t) → γ_M as t → ∞.

use crate::error::{Error, Result};

/// Shape of the spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    /// 𝒩/(πκ) · 1/(1 + ((ω−ω₀)/κ)²). Unit area for 𝒩 = 1.
    Lorentzian,
    /// Frequency-independent density of a memory-less bath. Markovian mode
    /// bypasses evaluation; the constant is 𝒩 per unit bandwidth 2πκ only
    /// in a symbolic sense.
    FlatMarkovian,
}

/// A bath spectral density J(ω). Angular frequencies in rad/fs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    /// Peak position ω₀ (rad/fs).
    pub center_omega0: f64,
    /// Half-width at half-maximum κ (rad/fs). The memory time of the bath
    /// correlation function is 1/κ.
    pub width_kappa: f64,
    /// Normalization constant 𝒩 = ∫ J(ω) dω (rad²/fs²).
    pub norm_n: f64,
}

impl SpectralDensity {
    /// A Lorentzian bath. Errors if κ ≤ 0 or 𝒩 ≤ 0.
    pub fn lorentzian(center_omega0: f64, width_kappa: f64, norm_n: f64) -> Result<Self> {
        if !(width_kappa > 0.0) || !width_kappa.is_finite() {
            return Err(Error::config(format!(
                "Lorentzian width_kappa must be positive and finite, got {width_kappa}"
            )));
        }
        if !(norm_n > 0.0) || !norm_n.is_finite() {
            return Err(Error::config(format!(
                "norm_n must be positive and finite, got {norm_n}"
            )));
        }
        if !center_omega0.is_finite() {
            return Err(Error::config("center_omega0 must be finite"));
        }
        Ok(SpectralDensity {
            kind: SpectralKind::Lorentzian,
            center_omega0,
            width_kappa,
            norm_n,
        })
    }

    /// A Lorentzian bath resonant with a transition at `omega` whose induced
    /// rate saturates to `gamma_markov`.
    pub fn resonant_for_rate(omega: f64, gamma_markov: f64, width_kappa: f64) -> Result<Self> {
        let n = normalization_for_target_rate(gamma_markov, width_kappa)?;
        SpectralDensity::lorentzian(omega, width_kappa, n)
    }

    /// Evaluate J(ω). Rejects non-finite ω.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::config(format!("non-finite frequency {omega}")));
        }
        match self.kind {
            SpectralKind::Lorentzian => {
                let x = (omega - self.center_omega0) / self.width_kappa;
                Ok(self.norm_n / (std::f64::consts::PI * self.width_kappa) / (1.0 + x * x))
            }
            // Delta-correlated bath: flat density. The value is the white
            // level consistent with total weight 𝒩 spread over 2πκ.
            SpectralKind::FlatMarkovian => {
                Ok(self.norm_n / (2.0 * std::f64::consts::PI * self.width_kappa))
            }
        }
    }
}

/// Normalization 𝒩 such that the on-resonance induced rate saturates to
/// `gamma_markov`: 𝒩 = γ_M · κ. With κ = γ_M this reproduces the rate law
/// γ(t) = γ_M (1 − e^{−γ_M t}).
pub fn normalization_for_target_rate(gamma_markov: f64, width_kappa: f64) -> Result<f64> {
    if !(gamma_markov > 0.0) || !gamma_markov.is_finite() {
        return Err(Error::config(format!(
            "gamma_markov must be positive, got {gamma_markov}"
        )));
    }
    if !(width_kappa > 0.0) || !width_kappa.is_finite() {
        return Err(Error::config(format!(
            "width_kappa must be positive, got {width_kappa}"
        )));
    }
    Ok(gamma_markov * width_kappa)
}
