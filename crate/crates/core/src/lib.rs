//! Transmission through one-dimensional delta-function potentials, and
//! windowed fitting of positive-only three-spike systems to the resonance
//! spectrum of an opposite-sign two-spike system.
//!
//! Units are natural throughout (`ħ = 1`, `m = 1/2`), so a particle of energy
//! `E` has wavenumber `k = √E` and a spike `α·δ(x − x₀)` enters only through
//! `α/k`.
//!
//! ```
//! use delta_scatter::{transmission_at, DeltaSystem};
//!
//! let pair = DeltaSystem::from_gaps(0.0, &[2.0, -2.0], &[2.65]).unwrap();
//! let k1 = std::f64::consts::PI / 2.65;
//! assert!((transmission_at(&pair, k1).unwrap() - 1.0).abs() < 1e-10);
//! ```
//!
//! The modules, from the bottom up:
//!
//! - [`scattering`]: transfer matrices, systems, spectra.
//! - [`closed_form`]: expanded two- and three-spike transmission formulas.
//! - [`resonance`]: resonance prediction, peak detection, windows.
//! - [`evolve`]: a deterministic differential-evolution minimizer.
//! - [`matching`]: the per-window fitting objective and driver.
//! - [`isospectral`]: necessary conditions for exact spectral equality.
//! - [`report`]: run configuration, commands and output files.

pub mod closed_form;
pub mod error;
pub mod evolve;
pub mod isospectral;
pub mod matching;
pub mod plot;
pub mod report;
pub mod resonance;
pub mod scattering;

pub use closed_form::{
    transmission_closed_2delta, transmission_closed_3delta, ThreeDelta, TwoDelta,
};
pub use error::{Error, Result};
pub use evolve::{minimize, DeConfig, DeOutcome, SearchBounds};
pub use isospectral::{asymptotic_mismatch_scan, check_exact_conditions, IsospectralityVerdict};
pub use matching::{match_all, match_window, mse_objective, MatchResult};
pub use report::{MatchReport, RunConfig};
pub use resonance::{build_windows, detect_peaks, predict_resonances, TargetTwoDelta, Window};
pub use scattering::{
    delta_transfer_matrix, reflection_at, spectrum_over_grid, system_transfer_matrix,
    transmission_at, DeltaSpike, DeltaSystem, Spectrum, TransferMatrix, Transmission,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transfer-matrices.md")]
    mod transfer_matrices {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/resonances.md")]
    mod resonances {}
    #[doc = include_str!("../../../book/src/differential-evolution.md")]
    mod differential_evolution {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/isospectrality.md")]
    mod isospectrality {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
