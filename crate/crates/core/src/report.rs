//! Run configuration, the four batch commands, and their file outputs.
//!
//! Every command reads one [`RunConfig`] and writes into its `out_dir`:
//!
//! | command      | files                                                     |
//! |--------------|-----------------------------------------------------------|
//! | `spectrum`   | `spectrum.csv`, `spectrum.svg` with plots                  |
//! | `resonances` | `resonances.json`                                          |
//! | `match`      | `match_report.json`, `overview.svg` and `window_<n>.svg`   |
//! | `verify`     | `verify.json`                                              |

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::closed_form::ThreeDelta;
use crate::error::{Error, Result};
use crate::evolve::{
    DeConfig, SearchBounds, DEFAULT_STRENGTH_FACTOR, MAX_SPACING, MIN_SPACING, STRENGTH_FLOOR,
};
use crate::isospectral::{
    asymptotic_mismatch_scan, check_exact_conditions, default_tolerance, IsospectralityVerdict,
};
use crate::matching::{
    global_window, match_window_sampled, mse_objective, target_windows, window_seed,
    DEFAULT_SAMPLES,
};
use crate::plot::{mse_note, Chart, Series};
use crate::resonance::{build_windows, predict_resonances, TargetTwoDelta, Window};
use crate::scattering::{spectrum_over_grid, uniform_grid, DeltaSystem, Spectrum, Transmission};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_k_min() -> f64 {
    0.01
}
fn default_k_max() -> f64 {
    3.0
}
fn default_n_points() -> usize {
    3000
}
fn default_n_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_dense_factor() -> usize {
    10
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Limits of the `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)` search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub strength_min: f64,
    /// Strength ceiling as a multiple of the target's `|α₁|`.
    pub strength_factor: f64,
    pub spacing_min: f64,
    pub spacing_max: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            strength_min: STRENGTH_FLOOR,
            strength_factor: DEFAULT_STRENGTH_FACTOR,
            spacing_min: MIN_SPACING,
            spacing_max: MAX_SPACING,
        }
    }
}

impl BoundsConfig {
    pub fn search_bounds(&self, alpha1: f64) -> Result<SearchBounds> {
        let s = (self.strength_min, self.strength_factor * alpha1.abs());
        let d = (self.spacing_min, self.spacing_max);
        if !(self.strength_min > 0.0) {
            return Err(Error::domain("strength_min must be positive"));
        }
        if !(self.spacing_min > 0.0) {
            return Err(Error::domain("spacing_min must be positive"));
        }
        SearchBounds::new(vec![s, s, s, d, d])
    }
}

/// The wavenumbers scanned by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub n_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            k_min: 50.0,
            k_max: 500.0,
            n_points: 45_001,
        }
    }
}

/// A two-spike system and a three-spike system to compare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemPair {
    pub alphas: [f64; 2],
    pub dx: f64,
    pub betas: [f64; 3],
    pub spacings: [f64; 2],
}

/// Input of `verify`: an explicit pair, or a match report whose every window
/// is checked against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<SystemPair>,
    /// Relative paths are taken from the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Defaults to `10⁻¹²·max|strength|²` per pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetTwoDelta>,
    /// Explicit system for `spectrum`; takes precedence over `target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<DeltaSystem>,
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    #[serde(default = "default_k_max")]
    pub k_max: f64,
    /// Grid size for `spectrum` and for plots.
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub de: DeConfig,
    /// Samples per window in the fitting objective.
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Reported MSEs are also evaluated on `n_samples × dense_factor` points.
    #[serde(default = "default_dense_factor")]
    pub dense_factor: usize,
    /// One fit over all of `[k_min, k_max]` instead of one per resonance.
    #[serde(default)]
    pub global: bool,
    #[serde(default)]
    pub plots: bool,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: None,
            system: None,
            k_min: default_k_min(),
            k_max: default_k_max(),
            n_points: default_n_points(),
            bounds: BoundsConfig::default(),
            de: DeConfig::default(),
            n_samples: default_n_samples(),
            dense_factor: default_dense_factor(),
            global: false,
            plots: false,
            out_dir: default_out_dir(),
            verify: None,
        }
    }
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    pub strength_bound_factor: Option<f64>,
    pub seed: Option<u64>,
    pub global: bool,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: impl Into<PathBuf>) -> Result<Self> {
        let origin = origin.into();
        let mut config: RunConfig = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: origin.clone(),
            source,
        })?;
        if let Some(report) = config.verify.as_mut().and_then(|v| v.report.as_mut()) {
            if report.is_relative() {
                if let Some(dir) = origin.parent() {
                    *report = dir.join(&*report);
                }
            }
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text, path)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(dir) = &overrides.out_dir {
            self.out_dir = dir.clone();
        }
        if overrides.plots {
            self.plots = true;
        }
        if let Some(f) = overrides.strength_bound_factor {
            self.bounds.strength_factor = f;
        }
        if let Some(seed) = overrides.seed {
            self.de.seed = seed;
        }
        if overrides.global {
            self.global = true;
        }
    }

    /// Checks everything that does not depend on which command runs.
    pub fn validate(&self) -> Result<()> {
        uniform_grid(self.k_min, self.k_max, self.n_points)?;
        if let Some(t) = &self.target {
            t.validate()?;
            self.bounds.search_bounds(t.alpha1)?;
        }
        self.de.validate()?;
        if self.n_samples < 2 {
            return Err(Error::domain("n_samples must be at least 2"));
        }
        if self.dense_factor < 1 {
            return Err(Error::domain("dense_factor must be at least 1"));
        }
        if let Some(v) = &self.verify {
            uniform_grid(v.scan.k_min, v.scan.k_max, v.scan.n_points)?;
            if let Some(tol) = v.tolerance {
                if !(tol.is_finite() && tol > 0.0) {
                    return Err(Error::domain("verify tolerance must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn require_target(&self) -> Result<TargetTwoDelta> {
        self.target
            .ok_or_else(|| Error::domain("this command needs a `target` entry"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

/// The transmission curve `spectrum` writes: the explicit system if given,
/// otherwise the target.
pub fn compute_spectrum(config: &RunConfig) -> Result<Spectrum> {
    match (&config.system, &config.target) {
        (Some(s), _) => spectrum_over_grid(s, config.k_min, config.k_max, config.n_points),
        (None, Some(t)) => spectrum_over_grid(t, config.k_min, config.k_max, config.n_points),
        (None, None) => Err(Error::domain(
            "spectrum needs a `system` or a `target` entry",
        )),
    }
}

/// One `k,T` row per grid point, each value with 17 significant digits.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::with_capacity(40 * (spectrum.len() + 1));
    out.push_str("k,T\n");
    for (k, t) in spectrum.iter() {
        out.push_str(&format!("{k:.16e},{t:.16e}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEntry {
    pub n: usize,
    pub k_n: f64,
    pub window_lo: f64,
    pub window_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub target: TargetTwoDelta,
    pub k_min: f64,
    pub k_max: f64,
    pub resonances: Vec<ResonanceEntry>,
}

pub fn compute_resonances(config: &RunConfig) -> Result<ResonanceReport> {
    let target = config.require_target()?;
    let ks = predict_resonances(&target, config.k_min, config.k_max)?;
    let resonances = if ks.is_empty() {
        Vec::new()
    } else {
        build_windows(&ks, config.k_min, config.k_max)?
            .into_iter()
            .map(|w| ResonanceEntry {
                n: w.index,
                k_n: w.center,
                window_lo: w.lo,
                window_hi: w.hi,
            })
            .collect()
    };
    Ok(ResonanceReport {
        target,
        k_min: config.k_min,
        k_max: config.k_max,
        resonances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Windowed,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: Window,
    pub clipped: bool,
    /// `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`.
    pub best_vector: [f64; 5],
    /// On the `n_samples` grid the optimizer saw.
    pub mse: f64,
    pub mse_dense: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_evaluations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub window_count: usize,
    /// Arithmetic mean of the per-window `mse` values.
    pub mean_mse: f64,
    pub mean_mse_dense: f64,
    pub max_mse: f64,
    pub all_converged: bool,
}

impl Summary {
    pub fn of(records: &[WindowRecord]) -> Self {
        let n = records.len();
        let mean = |f: fn(&WindowRecord) -> f64| records.iter().map(f).sum::<f64>() / n as f64;
        Summary {
            window_count: n,
            mean_mse: mean(|r| r.mse),
            mean_mse_dense: mean(|r| r.mse_dense),
            max_mse: records.iter().map(|r| r.mse).fold(0.0, f64::max),
            all_converged: records.iter().all(|r| r.converged),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tool: ToolInfo,
    pub mode: FitMode,
    pub target: TargetTwoDelta,
    pub seed: u64,
    pub bounds: SearchBounds,
    pub windows: Vec<WindowRecord>,
    pub summary: Summary,
    /// The configuration the run used, after command-line overrides.
    pub config: RunConfig,
}

impl MatchReport {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.into(),
            source,
        })
    }
}

/// Runs the fit for every window (or the single global window) and
/// assembles the report in window order.
pub fn compute_match(config: &RunConfig) -> Result<MatchReport> {
    use rayon::prelude::*;

    config.validate()?;
    let target = config.require_target()?;
    let bounds = config.bounds.search_bounds(target.alpha1)?;
    let (mode, windows) = if config.global {
        (
            FitMode::Global,
            vec![global_window(config.k_min, config.k_max)],
        )
    } else {
        (
            FitMode::Windowed,
            target_windows(&target, config.k_min, config.k_max)?,
        )
    };
    let dense = config.n_samples * config.dense_factor;

    let windows = windows
        .par_iter()
        .map(|w| {
            let seed = window_seed(config.de.seed, w.index);
            let de = DeConfig {
                seed,
                ..config.de.clone()
            };
            let r = match_window_sampled(&target, w, &bounds, &de, config.n_samples)?;
            let mse_dense = mse_objective(&target, w, dense)?.eval(&r.best_vector);
            Ok(WindowRecord {
                window: r.window,
                clipped: r.window.is_clipped(),
                best_vector: r.best_vector,
                mse: r.mse,
                mse_dense,
                iterations: r.iterations_used,
                converged: r.converged,
                objective_evaluations: r.objective_evaluations,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MatchReport {
        tool: ToolInfo::current(),
        mode,
        target,
        seed: config.de.seed,
        bounds,
        summary: Summary::of(&windows),
        windows,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub label: String,
    pub pair: SystemPair,
    pub tolerance: f64,
    pub verdict: IsospectralityVerdict,
    /// `sup k²·|T₂δ − T₃δ|` over the scan.
    pub mismatch_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: ToolInfo,
    pub scan: ScanConfig,
    pub entries: Vec<VerifyEntry>,
}

pub fn verify_pair(
    label: impl Into<String>,
    pair: SystemPair,
    tolerance: Option<f64>,
    scan: &[f64],
) -> Result<VerifyEntry> {
    let [a1, a2] = pair.alphas;
    let [b1, b2, b3] = pair.betas;
    let tolerance = tolerance.unwrap_or_else(|| default_tolerance(pair.alphas, pair.betas));
    Ok(VerifyEntry {
        label: label.into(),
        pair,
        tolerance,
        verdict: check_exact_conditions(a1, a2, b1, b2, b3, tolerance)?,
        mismatch_sup: asymptotic_mismatch_scan(
            pair.alphas,
            pair.dx,
            pair.betas,
            pair.spacings,
            scan,
        )?,
    })
}

pub fn compute_verify(config: &RunConfig) -> Result<VerifyReport> {
    let verify = config
        .verify
        .as_ref()
        .ok_or_else(|| Error::domain("verify needs a `verify` entry"))?;
    let scan_cfg = verify.scan;
    let scan = uniform_grid(scan_cfg.k_min, scan_cfg.k_max, scan_cfg.n_points)?;

    let mut entries = Vec::new();
    match (&verify.pair, &verify.report) {
        (Some(pair), None) => entries.push(verify_pair("pair", *pair, verify.tolerance, &scan)?),
        (None, Some(path)) => {
            let report = MatchReport::load(path)?;
            let t = report.target;
            for w in &report.windows {
                let v = w.best_vector;
                let pair = SystemPair {
                    alphas: [t.alpha1, t.alpha2()],
                    dx: t.dx,
                    betas: [v[0], v[1], v[2]],
                    spacings: [v[3], v[4]],
                };
                let label = format!("window {}", w.window.index);
                entries.push(verify_pair(label, pair, verify.tolerance, &scan)?);
            }
        }
        _ => {
            return Err(Error::domain(
                "`verify` needs exactly one of `pair` and `report`",
            ))
        }
    }
    Ok(VerifyReport {
        tool: ToolInfo::current(),
        scan: scan_cfg,
        entries,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn prepare_out_dir(config: &RunConfig) -> Result<&Path> {
    let dir = config.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &to_json(value))
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let spectrum = compute_spectrum(config)?;
    let dir = prepare_out_dir(config)?;
    let csv = dir.join("spectrum.csv");
    write_file(&csv, &spectrum_csv(&spectrum))?;
    let mut written = vec![csv];
    if config.plots {
        let mut chart = Chart::new(
            "Transmission spectrum",
            (config.k_min, config.k_max),
            (0.0, 1.05),
        );
        chart
            .series
            .push(Series::new("T(k)", "#1f4e9c", spectrum.iter().collect()));
        let svg = dir.join("spectrum.svg");
        write_file(&svg, &chart.render())?;
        written.push(svg);
    }
    Ok(written)
}

pub fn cmd_resonances(config: &RunConfig) -> Result<(ResonanceReport, Vec<PathBuf>)> {
    config.validate()?;
    let report = compute_resonances(config)?;
    let path = prepare_out_dir(config)?.join("resonances.json");
    write_json(&path, &report)?;
    Ok((report, vec![path]))
}

pub fn cmd_match(config: &RunConfig) -> Result<(MatchReport, Vec<PathBuf>)> {
    let report = compute_match(config)?;
    let dir = prepare_out_dir(config)?;
    let path = dir.join("match_report.json");
    write_json(&path, &report)?;
    let mut written = vec![path];
    if config.plots {
        written.extend(write_match_plots(config, &report, dir)?);
    }
    Ok((report, written))
}

pub fn cmd_verify(config: &RunConfig) -> Result<(VerifyReport, Vec<PathBuf>)> {
    config.validate()?;
    let report = compute_verify(config)?;
    let path = prepare_out_dir(config)?.join("verify.json");
    write_json(&path, &report)?;
    Ok((report, vec![path]))
}

fn curve<S: Transmission>(s: &S, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    Ok(spectrum_over_grid(s, lo, hi, n)?.iter().collect())
}

fn write_match_plots(config: &RunConfig, report: &MatchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let target = report.target;
    let mut written = Vec::new();
    let per_window = config.n_samples * config.dense_factor;

    let mut overview = Chart::new(
        format!(
            "Target (α₁ = {}, Δx = {}) and window fits",
            target.alpha1, target.dx
        ),
        (config.k_min, config.k_max),
        (0.0, 1.05),
    );
    overview.series.push(Series::new(
        "2δ target",
        "black",
        curve(&target, config.k_min, config.k_max, config.n_points)?,
    ));
    for r in &report.windows {
        let w = r.window;
        let fitted = ThreeDelta::from_vector(r.best_vector);
        let points = curve(&fitted, w.lo, w.hi, per_window)?;

        let mut chart = Chart::new(
            format!("Window {} around k = {:.4}", w.index, w.center),
            (w.lo, w.hi),
            (0.0, 1.05),
        );
        chart.series.push(Series::new(
            "2δ target",
            "black",
            curve(&target, w.lo, w.hi, per_window)?,
        ));
        chart
            .series
            .push(Series::new("3δ fit", "#c0392b", points.clone()).dashed());
        chart.markers = vec![w.lo, w.hi];
        chart.notes.push(mse_note(r.mse));
        chart.notes.push(format!(
            "β = ({:.3}, {:.3}, {:.3}), Δx = ({:.3}, {:.3})",
            r.best_vector[0],
            r.best_vector[1],
            r.best_vector[2],
            r.best_vector[3],
            r.best_vector[4]
        ));
        let path = dir.join(format!("window_{}.svg", w.index));
        write_file(&path, &chart.render())?;
        written.push(path);

        overview
            .series
            .push(Series::new(format!("W{} fit", w.index), "#c0392b", points).dashed());
        overview.markers.extend([w.lo, w.hi]);
        overview
            .notes
            .push(format!("W{}: {}", w.index, mse_note(r.mse)));
    }
    overview.markers.dedup();
    let path = dir.join("overview.svg");
    write_file(&path, &overview.render())?;
    written.push(path);
    Ok(written)
}
