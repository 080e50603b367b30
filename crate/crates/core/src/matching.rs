//! Fitting positive-only three-spike systems to the two-spike target, one
//! resonance window at a time.
//!
//! For each window the target curve is sampled once on `n_samples` uniform
//! points, and differential evolution minimizes the mean squared difference
//! to the three-spike curve over `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`. The first spike
//! of the fitted system sits where the target's first spike does.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{three_delta_unchecked, ThreeDelta};
use crate::error::{Error, Result};
use crate::evolve::{minimize, DeConfig, SearchBounds};
use crate::resonance::{build_windows, predict_resonances, TargetTwoDelta, Window};
use crate::scattering::{uniform_grid, DeltaSystem, Transmission};

/// Sample count per window used throughout the fitting procedure.
pub const DEFAULT_SAMPLES: usize = 200;

/// Target transmission sampled on a window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowObjective {
    ks: Vec<f64>,
    target: Vec<f64>,
}

impl WindowObjective {
    pub fn from_samples(ks: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if ks.len() != target.len() || ks.len() < 2 {
            return Err(Error::domain(
                "objective needs at least two samples and one target value per sample",
            ));
        }
        Ok(WindowObjective { ks, target })
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Mean squared difference between the stored target and `model`.
    pub fn mse_of(&self, model: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .ks
            .iter()
            .zip(&self.target)
            .map(|(&k, &t)| (t - model(k)).powi(2))
            .sum();
        sum / self.ks.len() as f64
    }

    /// MSE of the three-spike system `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        match *v {
            [b1, b2, b3, d12, d23] => {
                self.mse_of(|k| three_delta_unchecked(b1, b2, b3, d12, d23, k))
            }
            _ => f64::INFINITY,
        }
    }
}

/// Samples `target` on `n_samples` uniform points spanning `window`.
pub fn mse_objective(
    target: &TargetTwoDelta,
    window: &Window,
    n_samples: usize,
) -> Result<WindowObjective> {
    target.validate()?;
    if !(window.lo > 0.0) {
        return Err(Error::domain(format!(
            "window {} reaches k = {} <= 0",
            window.index, window.lo
        )));
    }
    let ks = uniform_grid(window.lo, window.hi, n_samples)?;
    let values = ks
        .iter()
        .map(|&k| target.transmission(k))
        .collect::<Result<Vec<_>>>()?;
    WindowObjective::from_samples(ks, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub window: Window,
    /// `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`.
    pub best_vector: [f64; 5],
    pub mse: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub objective_evaluations: usize,
}

impl MatchResult {
    pub fn fitted(&self) -> ThreeDelta {
        ThreeDelta::from_vector(self.best_vector)
    }

    /// The fitted system with its first spike at `origin`.
    pub fn fitted_system(&self, origin: f64) -> Result<DeltaSystem> {
        let v = self.best_vector;
        DeltaSystem::from_gaps(origin, &v[..3], &v[3..])
    }
}

/// Per-window seed: the global seed mixed with the window index.
pub fn window_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = (index as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed ^ z ^ (z >> 31)
}

pub fn match_window(
    target: &TargetTwoDelta,
    window: &Window,
    bounds: &SearchBounds,
    config: &DeConfig,
) -> Result<MatchResult> {
    match_window_sampled(target, window, bounds, config, DEFAULT_SAMPLES)
}

pub fn match_window_sampled(
    target: &TargetTwoDelta,
    window: &Window,
    bounds: &SearchBounds,
    config: &DeConfig,
    n_samples: usize,
) -> Result<MatchResult> {
    if bounds.dims() != 5 {
        return Err(Error::domain(format!(
            "three-spike fits need 5 search dimensions, got {}",
            bounds.dims()
        )));
    }
    let objective = mse_objective(target, window, n_samples)?;
    let outcome = minimize(&|v: &[f64]| objective.eval(v), bounds, config)?;
    let mut best_vector = [0.0; 5];
    best_vector.copy_from_slice(&outcome.best);
    Ok(MatchResult {
        window: *window,
        best_vector,
        mse: outcome.best_value,
        iterations_used: outcome.iterations,
        converged: outcome.converged,
        objective_evaluations: outcome.evaluations,
    })
}

/// Windows for every resonance of `target` in `[k_min, k_max]`.
pub fn target_windows(target: &TargetTwoDelta, k_min: f64, k_max: f64) -> Result<Vec<Window>> {
    let resonances = predict_resonances(target, k_min, k_max)?;
    if resonances.is_empty() {
        return Err(Error::NoResonances { k_min, k_max });
    }
    build_windows(&resonances, k_min, k_max)
}

pub fn match_all(
    target: &TargetTwoDelta,
    k_min: f64,
    k_max: f64,
    bounds: &SearchBounds,
    config: &DeConfig,
) -> Result<Vec<MatchResult>> {
    match_all_sampled(target, k_min, k_max, bounds, config, DEFAULT_SAMPLES)
}

/// Fits every window independently; results come back in window order.
pub fn match_all_sampled(
    target: &TargetTwoDelta,
    k_min: f64,
    k_max: f64,
    bounds: &SearchBounds,
    config: &DeConfig,
    n_samples: usize,
) -> Result<Vec<MatchResult>> {
    let windows = target_windows(target, k_min, k_max)?;
    windows
        .par_iter()
        .map(|w| {
            let cfg = DeConfig {
                seed: window_seed(config.seed, w.index),
                ..config.clone()
            };
            match_window_sampled(target, w, bounds, &cfg, n_samples)
        })
        .collect()
}

/// One window spanning the whole range with no resonance centring. Used to
/// show how much worse a single global fit is than the windowed fits.
pub fn global_window(k_min: f64, k_max: f64) -> Window {
    let half_width = (k_max - k_min) / 2.0;
    Window {
        index: 0,
        center: k_min + half_width,
        half_width,
        lo: k_min,
        hi: k_max,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::closed_form::transmission_closed_3delta;
    use crate::evolve::DEFAULT_STRENGTH_FACTOR;
    use crate::isospectral::{asymptotic_mismatch_scan, default_scan};

    fn narrow() -> TargetTwoDelta {
        TargetTwoDelta::new(2.0, 2.65).unwrap()
    }

    #[test]
    fn identical_curves_have_zero_mse() {
        let ks = uniform_grid(0.5, 1.5, 50).unwrap();
        let model = |k: f64| transmission_closed_3delta(1.0, 2.0, 0.7, 0.9, 1.3, k).unwrap();
        let target: Vec<f64> = ks.iter().map(|&k| model(k)).collect();
        let obj = WindowObjective::from_samples(ks, target).unwrap();
        assert_eq!(obj.eval(&[1.0, 2.0, 0.7, 0.9, 1.3]), 0.0);
        assert_eq!(obj.mse_of(model), 0.0);
    }

    #[test]
    fn constant_offset_gives_its_square() {
        let ks = uniform_grid(0.5, 1.5, 37).unwrap();
        let target: Vec<f64> = ks.iter().map(|k| k.sin()).collect();
        let obj = WindowObjective::from_samples(ks, target).unwrap();
        assert_abs_diff_eq!(obj.mse_of(|k| k.sin() + 0.25), 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn objective_grid_spans_window() {
        let w = target_windows(&narrow(), 0.01, 3.0).unwrap()[0];
        let obj = mse_objective(&narrow(), &w, DEFAULT_SAMPLES).unwrap();
        assert_eq!(obj.ks().len(), 200);
        assert_eq!(obj.ks()[0], w.lo);
        assert_eq!(obj.ks()[199], w.hi);
        assert_eq!(obj.target()[0], narrow().transmission(w.lo).unwrap());
    }

    #[test]
    fn objective_rejects_bad_windows() {
        let mut w = global_window(0.01, 3.0);
        w.lo = 0.0;
        assert!(mse_objective(&narrow(), &w, 200).is_err());
        assert!(mse_objective(&narrow(), &global_window(0.01, 3.0), 1).is_err());
        let obj = mse_objective(&narrow(), &global_window(0.01, 3.0), 10).unwrap();
        assert_eq!(obj.eval(&[1.0, 2.0]), f64::INFINITY);
    }

    #[test]
    fn reference_first_window_optimum_is_close() {
        // reference β = (2.00, 3.32, 0.84) with Δx₁₃ = 3.36; the split of
        // Δx₁₃ is unknown, so scan it and refine locally
        let target = narrow();
        let w = target_windows(&target, 0.01, 3.0).unwrap()[0];
        let obj = mse_objective(&target, &w, DEFAULT_SAMPLES).unwrap();
        let best_split = (1..336)
            .map(|i| i as f64 * 0.01)
            .filter(|&d12| d12 >= 0.3 && 3.36 - d12 >= 0.3)
            .map(|d12| (d12, obj.eval(&[2.0, 3.32, 0.84, d12, 3.36 - d12])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let bounds = SearchBounds::new(vec![
            (1.995, 2.005),
            (3.315, 3.325),
            (0.835, 0.845),
            (best_split.0 - 0.02, best_split.0 + 0.02),
            (3.355 - best_split.0 - 0.02, 3.365 - best_split.0 + 0.02),
        ])
        .unwrap();
        let refined = minimize(&|v: &[f64]| obj.eval(v), &bounds, &DeConfig::default()).unwrap();
        assert!(refined.best_value < 1e-8, "{}", refined.best_value);
    }

    #[test]
    fn seeds_differ_per_window() {
        let seeds: Vec<u64> = (0..6).map(|i| window_seed(42, i)).collect();
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert_eq!(window_seed(42, 3), window_seed(42, 3));
    }

    #[test]
    fn no_resonances_is_an_error() {
        let target = TargetTwoDelta::new(2.0, 0.5).unwrap();
        let bounds = SearchBounds::three_delta(2.0, DEFAULT_STRENGTH_FACTOR).unwrap();
        let err = match_all(&target, 0.01, 3.0, &bounds, &DeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoResonances { .. }));
    }

    #[test]
    fn wrong_dimension_bounds_rejected() {
        let w = global_window(0.5, 1.0);
        let bounds = SearchBounds::new(vec![(0.5, 1.0); 3]).unwrap();
        assert!(match_window(&narrow(), &w, &bounds, &DeConfig::default()).is_err());
    }

    #[test]
    fn planted_vector_recovered_spectrally() {
        let planted = [2.0, 1.0, 3.0, 0.7, 1.9];
        let ks = uniform_grid(0.5, 2.5, DEFAULT_SAMPLES).unwrap();
        let target: Vec<f64> = ks
            .iter()
            .map(|&k| transmission_closed_3delta(2.0, 1.0, 3.0, 0.7, 1.9, k).unwrap())
            .collect();
        let obj = WindowObjective::from_samples(ks, target).unwrap();
        assert_eq!(obj.eval(&planted), 0.0);
        let bounds = SearchBounds::three_delta(2.0, DEFAULT_STRENGTH_FACTOR).unwrap();
        for seed in [42, 0, 1, 2] {
            let cfg = DeConfig {
                seed,
                ..Default::default()
            };
            let out = minimize(&|v: &[f64]| obj.eval(v), &bounds, &cfg).unwrap();
            assert!(out.best_value < 1e-8, "seed {seed}: {}", out.best_value);
        }
    }

    #[test]
    fn narrow_target_windows_match_and_stay_positive() {
        let target = narrow();
        let bounds = SearchBounds::three_delta(2.0, DEFAULT_STRENGTH_FACTOR).unwrap();
        let results = match_all(&target, 0.01, 3.0, &bounds, &DeConfig::default()).unwrap();
        assert_eq!(results.len(), 2);
        for r in &results {
            assert!(r.mse < 1e-3, "window {} mse {}", r.window.index, r.mse);
            assert!(bounds.contains(&r.best_vector));
            assert!(r.best_vector[..3].iter().all(|&b| b >= 0.5));
            let sys = r.fitted_system(0.0).unwrap();
            assert_eq!(sys.len(), 3);
            assert_abs_diff_eq!(sys.spikes()[2].position, r.fitted().dx13(), epsilon = 1e-15);
            let v = r.best_vector;
            let sup = asymptotic_mismatch_scan(
                [2.0, -2.0],
                2.65,
                [v[0], v[1], v[2]],
                [v[3], v[4]],
                &default_scan(),
            )
            .unwrap();
            // frozen regression floor; fitted sups observed so far start near 18
            assert!(sup > 10.0, "window {} sup {sup}", r.window.index);
        }
        // the objective agrees with a recomputation from the returned vector
        let obj = mse_objective(&target, &results[0].window, DEFAULT_SAMPLES).unwrap();
        assert_eq!(obj.eval(&results[0].best_vector), results[0].mse);
    }

    #[test]
    fn match_all_is_deterministic() {
        let target = narrow();
        let bounds = SearchBounds::three_delta(2.0, DEFAULT_STRENGTH_FACTOR).unwrap();
        let cfg = DeConfig {
            max_iterations: 60,
            ..Default::default()
        };
        let a = match_all(&target, 0.01, 3.0, &bounds, &cfg).unwrap();
        let b = match_all(&target, 0.01, 3.0, &bounds, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
