//! Resonances of the opposite-sign two-spike target and the optimization
//! windows built around them.
//!
//! With `α₂ = −α₁` the two-spike transmission reaches exactly 1 wherever
//! `cos 2kΔx = 1`, i.e. at `kₙ = πn/Δx`. Each resonance gets a window
//! `[kₙ − w, kₙ + w]` with `w` half the mean resonance spacing, or `k₁/2`
//! when there is only one resonance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closed_form::transmission_closed_2delta;
use crate::error::{Error, Result};
use crate::scattering::{check_k, DeltaSystem, Spectrum, Transmission};

/// Two spikes `+alpha1` at the origin and `−alpha1` at `dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTwoDelta {
    pub alpha1: f64,
    pub dx: f64,
}

impl TargetTwoDelta {
    pub fn new(alpha1: f64, dx: f64) -> Result<Self> {
        let t = TargetTwoDelta { alpha1, dx };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1.is_finite() && self.alpha1 > 0.0) {
            return Err(Error::domain(format!(
                "target alpha1 must be positive, got {}",
                self.alpha1
            )));
        }
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return Err(Error::domain(format!(
                "target separation must be positive, got {}",
                self.dx
            )));
        }
        Ok(())
    }

    pub fn alpha2(&self) -> f64 {
        -self.alpha1
    }

    /// The target as an explicit system with its first spike at `origin`.
    pub fn system(&self, origin: f64) -> Result<DeltaSystem> {
        DeltaSystem::from_gaps(origin, &[self.alpha1, self.alpha2()], &[self.dx])
    }
}

impl Transmission for TargetTwoDelta {
    fn transmission(&self, k: f64) -> Result<f64> {
        transmission_closed_2delta(self.alpha1, self.alpha2(), self.dx, k)
    }
}

fn check_range(k_min: f64, k_max: f64) -> Result<()> {
    check_k(k_min)?;
    if !(k_max.is_finite() && k_max > k_min) {
        return Err(Error::domain(format!(
            "need k_min < k_max, got [{k_min}, {k_max}]"
        )));
    }
    Ok(())
}

/// All `kₙ = πn/Δx` (n ≥ 1) inside `[k_min, k_max]`, ascending.
pub fn predict_resonances(target: &TargetTwoDelta, k_min: f64, k_max: f64) -> Result<Vec<f64>> {
    target.validate()?;
    check_range(k_min, k_max)?;
    let spacing = PI / target.dx;
    Ok((1u64..)
        .map(|n| spacing * n as f64)
        .take_while(|&k| k <= k_max)
        .filter(|&k| k >= k_min)
        .collect())
}

/// Locations of interior local maxima whose height above the lower of the two
/// flanking minima exceeds `prominence_floor`.
pub fn detect_peaks(spectrum: &Spectrum, prominence_floor: f64) -> Vec<f64> {
    let t = spectrum.t_values();
    let k = spectrum.k_values();
    let mut peaks = Vec::new();
    for i in 1..t.len().saturating_sub(1) {
        if !(t[i] > t[i - 1] && t[i] >= t[i + 1]) {
            continue;
        }
        let mut l = i;
        while l > 0 && t[l - 1] <= t[l] {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < t.len() && t[r + 1] <= t[r] {
            r += 1;
        }
        let base = t[l].min(t[r]);
        if t[i] - base > prominence_floor {
            peaks.push(k[i]);
        }
    }
    peaks
}

/// A symmetric interval around one resonance, possibly clipped to the
/// overall wavenumber range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Resonance order `n`, starting at 1.
    pub index: usize,
    pub center: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    /// `[center − half_width, center + half_width]` before any clipping.
    pub fn unclipped(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn is_clipped(&self) -> bool {
        let (lo, hi) = self.unclipped();
        lo != self.lo || hi != self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn build_windows(resonances: &[f64], k_min: f64, k_max: f64) -> Result<Vec<Window>> {
    check_range(k_min, k_max)?;
    let (&first, &last) = match (resonances.first(), resonances.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::domain("cannot build windows without resonances")),
    };
    if resonances.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("resonances must be strictly ascending"));
    }
    if first < k_min || last > k_max {
        return Err(Error::domain(format!(
            "resonances must lie in [{k_min}, {k_max}]"
        )));
    }

    let half_width = if resonances.len() > 1 {
        0.5 * (last - first) / (resonances.len() - 1) as f64
    } else {
        first / 2.0
    };

    Ok(resonances
        .iter()
        .enumerate()
        .map(|(i, &center)| Window {
            index: i + 1,
            center,
            half_width,
            lo: (center - half_width).max(k_min),
            hi: (center + half_width).min(k_max),
        })
        .collect())
}
