//! Transfer matrices for systems of delta-function scatterers.
//!
//! Units are natural throughout (ħ = 1, m = 1/2), so energy is `k²` and a
//! strength `α` enters every formula through the dimensionless ratio `α/k`.
//! A single spike of strength `α` at `x₀` relates the plane-wave amplitudes
//! on its left to those on its right through
//!
//! ```text
//!     ⎡ 1 + iα/k            (iα/k)·e^{-2ikx₀} ⎤
//! M = ⎢                                        ⎥
//!     ⎣ -(iα/k)·e^{2ikx₀}   1 - iα/k          ⎦
//! ```
//!
//! and a system of spikes composes as `M_N ⋯ M₂ M₁`, the leftmost spike being
//! the rightmost factor. Transmission is `1/|M₁₁|²`.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest wavenumber any public operation accepts.
pub const MIN_K: f64 = 1e-6;

pub(crate) fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= MIN_K {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "wavenumber must be finite and >= {MIN_K}, got {k}"
        )))
    }
}

/// 2×2 complex matrix mapping amplitudes `(A, B)` left of a scatterer to
/// `(C, D)` right of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        m11: Complex64::new(1.0, 0.0),
        m12: Complex64::new(0.0, 0.0),
        m21: Complex64::new(0.0, 0.0),
        m22: Complex64::new(1.0, 0.0),
    };

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Transmission probability `1/|M₁₁|²` for a unit wave incident from the left.
    pub fn transmission(&self) -> f64 {
        1.0 / self.m11.norm_sqr()
    }

    /// Reflection probability `|M₂₁/M₁₁|²`.
    pub fn reflection(&self) -> f64 {
        (self.m21 / self.m11).norm_sqr()
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }
}

/// Transfer matrix of a single spike of `strength` at `position`.
pub fn delta_transfer_matrix(strength: f64, position: f64, k: f64) -> Result<TransferMatrix> {
    check_k(k)?;
    if !strength.is_finite() || !position.is_finite() {
        return Err(Error::domain("strength and position must be finite"));
    }
    Ok(spike_matrix(strength, position, k))
}

fn spike_matrix(strength: f64, position: f64, k: f64) -> TransferMatrix {
    let g = Complex64::new(0.0, strength / k);
    let phase = Complex64::from_polar(1.0, 2.0 * k * position);
    TransferMatrix {
        m11: 1.0 + g,
        m12: g * phase.conj(),
        m21: -g * phase,
        m22: 1.0 - g,
    }
}

/// A point scatterer `strength · δ(x − position)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSpike {
    pub strength: f64,
    pub position: f64,
}

impl DeltaSpike {
    pub fn new(strength: f64, position: f64) -> Self {
        DeltaSpike { strength, position }
    }
}

/// An ordered, non-empty collection of spikes with strictly increasing positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSystem {
    spikes: Vec<DeltaSpike>,
}

impl DeltaSystem {
    pub fn new(spikes: Vec<DeltaSpike>) -> Result<Self> {
        if spikes.is_empty() {
            return Err(Error::Invariant(
                "a delta system needs at least one spike".into(),
            ));
        }
        if let Some(s) = spikes
            .iter()
            .find(|s| !s.strength.is_finite() || !s.position.is_finite())
        {
            return Err(Error::Invariant(format!("non-finite spike {s:?}")));
        }
        if let Some(w) = spikes.windows(2).find(|w| w[0].position >= w[1].position) {
            return Err(Error::Invariant(format!(
                "positions must be strictly increasing, got {} then {}",
                w[0].position, w[1].position
            )));
        }
        Ok(DeltaSystem { spikes })
    }

    /// Builds a system from strengths, the first position, and the gaps between
    /// consecutive spikes. `gaps.len()` must be `strengths.len() - 1`.
    pub fn from_gaps(origin: f64, strengths: &[f64], gaps: &[f64]) -> Result<Self> {
        if gaps.len() + 1 != strengths.len() {
            return Err(Error::domain(format!(
                "{} strengths need {} gaps, got {}",
                strengths.len(),
                strengths.len().saturating_sub(1),
                gaps.len()
            )));
        }
        let mut position = origin;
        let mut spikes = Vec::with_capacity(strengths.len());
        for (i, &strength) in strengths.iter().enumerate() {
            if i > 0 {
                position += gaps[i - 1];
            }
            spikes.push(DeltaSpike { strength, position });
        }
        DeltaSystem::new(spikes)
    }

    /// A system with no scattering at all, used for free-particle checks.
    pub fn free() -> Self {
        DeltaSystem {
            spikes: vec![DeltaSpike::new(0.0, 0.0)],
        }
    }

    pub fn spikes(&self) -> &[DeltaSpike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_strength(&self) -> f64 {
        self.spikes.iter().map(|s| s.strength.abs()).sum()
    }

    /// The same system translated by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        DeltaSystem::new(
            self.spikes
                .iter()
                .map(|s| DeltaSpike::new(s.strength, s.position + offset))
                .collect(),
        )
    }

    /// Mirror image about the origin: order reversed and positions negated.
    pub fn mirrored(&self) -> Self {
        DeltaSystem {
            spikes: self
                .spikes
                .iter()
                .rev()
                .map(|s| DeltaSpike::new(s.strength, -s.position))
                .collect(),
        }
    }
}

impl<'de> Deserialize<'de> for DeltaSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            spikes: Vec<DeltaSpike>,
        }
        let raw = Raw::deserialize(deserializer)?;
        DeltaSystem::new(raw.spikes).map_err(serde::de::Error::custom)
    }
}

/// Ordered product `M_N ⋯ M₁` over all spikes of `system`.
pub fn system_transfer_matrix(system: &DeltaSystem, k: f64) -> Result<TransferMatrix> {
    check_k(k)?;
    Ok(system
        .spikes
        .iter()
        .fold(TransferMatrix::IDENTITY, |acc, s| {
            spike_matrix(s.strength, s.position, k) * acc
        }))
}

pub fn transmission_at(system: &DeltaSystem, k: f64) -> Result<f64> {
    Ok(system_transfer_matrix(system, k)?.transmission())
}

pub fn reflection_at(system: &DeltaSystem, k: f64) -> Result<f64> {
    Ok(system_transfer_matrix(system, k)?.reflection())
}

/// Anything that can report a transmission probability at a wavenumber.
pub trait Transmission {
    fn transmission(&self, k: f64) -> Result<f64>;
}

impl Transmission for DeltaSystem {
    fn transmission(&self, k: f64) -> Result<f64> {
        transmission_at(self, k)
    }
}

/// `n_points` uniformly spaced values from `k_min` to `k_max`, both included.
pub fn uniform_grid(k_min: f64, k_max: f64, n_points: usize) -> Result<Vec<f64>> {
    check_k(k_min)?;
    if !(k_max.is_finite() && k_max > k_min) {
        return Err(Error::domain(format!(
            "grid needs k_min < k_max, got [{k_min}, {k_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 points, got {n_points}"
        )));
    }
    let step = (k_max - k_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                k_max
            } else {
                k_min + step * i as f64
            }
        })
        .collect())
}

/// A sampled transmission curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    k_values: Vec<f64>,
    t_values: Vec<f64>,
}

impl Spectrum {
    pub fn new(k_values: Vec<f64>, t_values: Vec<f64>) -> Result<Self> {
        if k_values.len() != t_values.len() {
            return Err(Error::Invariant(format!(
                "{} wavenumbers but {} transmission values",
                k_values.len(),
                t_values.len()
            )));
        }
        if k_values.first().is_some_and(|&k| k <= 0.0) || k_values.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Invariant(
                "wavenumbers must be positive and strictly increasing".into(),
            ));
        }
        Ok(Spectrum { k_values, t_values })
    }

    pub fn k_values(&self) -> &[f64] {
        &self.k_values
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.k_values
            .iter()
            .copied()
            .zip(self.t_values.iter().copied())
    }
}

pub fn spectrum_over_grid<S: Transmission + ?Sized>(
    source: &S,
    k_min: f64,
    k_max: f64,
    n_points: usize,
) -> Result<Spectrum> {
    let k_values = uniform_grid(k_min, k_max, n_points)?;
    let t_values = k_values
        .iter()
        .map(|&k| source.transmission(k))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(k_values, t_values)
}
