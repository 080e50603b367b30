//! Closed-form transmission for two- and three-spike systems.
//!
//! These evaluate the expanded real and imaginary parts of `M₁₁` directly in
//! real arithmetic. They share no code with [`crate::scattering`], so the two
//! routes can be checked against each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::{check_k, Transmission};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Transmission of strengths `alpha1`, `alpha2` separated by `dx`:
///
/// ```text
/// 1 / ( [1 + α₁α₂/k² (cos 2kΔx − 1)]² + [(α₁+α₂)/k − α₁α₂/k² sin 2kΔx]² )
/// ```
pub fn transmission_closed_2delta(alpha1: f64, alpha2: f64, dx: f64, k: f64) -> Result<f64> {
    check_k(k)?;
    check_positive("dx", dx)?;
    check_finite("alpha1", alpha1)?;
    check_finite("alpha2", alpha2)?;
    Ok(two_delta_unchecked(alpha1, alpha2, dx, k))
}

pub(crate) fn two_delta_unchecked(alpha1: f64, alpha2: f64, dx: f64, k: f64) -> f64 {
    let (s, c) = (2.0 * k * dx).sin_cos();
    let p = alpha1 * alpha2 / (k * k);
    let re = 1.0 + p * (c - 1.0);
    let im = (alpha1 + alpha2) / k - p * s;
    1.0 / (re * re + im * im)
}

/// Real and imaginary parts of `M₁₁` for three spikes with gaps `dx12`, `dx23`.
///
/// With `Δx₁₃ = Δx₁₂ + Δx₂₃`, `θᵢⱼ = 2kΔxᵢⱼ` and `P = β₁β₂β₃`:
///
/// ```text
/// Re = 1 − (β₁β₂ + β₁β₃ + β₂β₃)/k²
///        + (β₁β₂ cos θ₁₂ + β₂β₃ cos θ₂₃ + β₁β₃ cos θ₁₃)/k²
///        + P/k³ (sin θ₁₂ + sin θ₂₃ − sin θ₁₃)
/// Im = (β₁ + β₂ + β₃)/k − P/k³
///        − (β₁β₂ sin θ₁₂ + β₂β₃ sin θ₂₃ + β₁β₃ sin θ₁₃)/k²
///        + P/k³ (cos θ₁₂ + cos θ₂₃ − cos θ₁₃)
/// ```
pub fn m11_closed_3delta(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    dx12: f64,
    dx23: f64,
    k: f64,
) -> (f64, f64) {
    let dx13 = dx12 + dx23;
    let (s12, c12) = (2.0 * k * dx12).sin_cos();
    let (s23, c23) = (2.0 * k * dx23).sin_cos();
    let (s13, c13) = (2.0 * k * dx13).sin_cos();
    let k2 = k * k;
    let k3 = k2 * k;
    let (b12, b23, b13) = (beta1 * beta2, beta2 * beta3, beta1 * beta3);
    let triple = beta1 * beta2 * beta3;

    let re = 1.0 - (b12 + b13 + b23) / k2
        + (b12 * c12 + b23 * c23 + b13 * c13) / k2
        + triple / k3 * (s12 + s23 - s13);
    let im = (beta1 + beta2 + beta3) / k - triple / k3 - (b12 * s12 + b23 * s23 + b13 * s13) / k2
        + triple / k3 * (c12 + c23 - c13);
    (re, im)
}

pub fn transmission_closed_3delta(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    dx12: f64,
    dx23: f64,
    k: f64,
) -> Result<f64> {
    check_k(k)?;
    check_positive("dx12", dx12)?;
    check_positive("dx23", dx23)?;
    for (name, b) in [("beta1", beta1), ("beta2", beta2), ("beta3", beta3)] {
        check_finite(name, b)?;
    }
    Ok(three_delta_unchecked(beta1, beta2, beta3, dx12, dx23, k))
}

pub(crate) fn three_delta_unchecked(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    dx12: f64,
    dx23: f64,
    k: f64,
) -> f64 {
    let (re, im) = m11_closed_3delta(beta1, beta2, beta3, dx12, dx23, k);
    1.0 / (re * re + im * im)
}

/// Parameters of a two-spike system for closed-form evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoDelta {
    pub alpha1: f64,
    pub alpha2: f64,
    pub dx: f64,
}

impl Transmission for TwoDelta {
    fn transmission(&self, k: f64) -> Result<f64> {
        transmission_closed_2delta(self.alpha1, self.alpha2, self.dx, k)
    }
}

/// Parameters of a three-spike system, in the optimizer's vector order
/// `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeDelta {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub dx12: f64,
    pub dx23: f64,
}

impl ThreeDelta {
    pub fn from_vector(v: [f64; 5]) -> Self {
        ThreeDelta {
            beta1: v[0],
            beta2: v[1],
            beta3: v[2],
            dx12: v[3],
            dx23: v[4],
        }
    }

    pub fn to_vector(self) -> [f64; 5] {
        [self.beta1, self.beta2, self.beta3, self.dx12, self.dx23]
    }

    pub fn strengths(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }

    pub fn dx13(&self) -> f64 {
        self.dx12 + self.dx23
    }
}

impl Transmission for ThreeDelta {
    fn transmission(&self, k: f64) -> Result<f64> {
        transmission_closed_3delta(self.beta1, self.beta2, self.beta3, self.dx12, self.dx23, k)
    }
}
