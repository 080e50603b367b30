//! Bound-constrained differential evolution.
//!
//! The population is `population_size × dims` members drawn uniformly in the
//! search box. Each generation builds one trial per member (mutation, binomial
//! crossover, then bringing out-of-box components back inside), evaluates all
//! trials, and keeps a trial only where it is no worse than the member it
//! challenges. All random draws for a generation happen on one ChaCha stream
//! before any evaluation, so the objective can be evaluated in parallel
//! without affecting the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension `[lo, hi]` limits of the search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    limits: Vec<(f64, f64)>,
}

/// Lower strength limit of the positive-only approximant.
pub const STRENGTH_FLOOR: f64 = 0.5;
/// Minimum and maximum gap between consecutive spikes.
pub const MIN_SPACING: f64 = 0.3;
pub const MAX_SPACING: f64 = 5.0;
/// Default ceiling on strengths, as a multiple of the target's `|α₁|`.
pub const DEFAULT_STRENGTH_FACTOR: f64 = 2.0;

impl SearchBounds {
    pub fn new(limits: Vec<(f64, f64)>) -> Result<Self> {
        if limits.is_empty() {
            return Err(Error::domain("search bounds need at least one dimension"));
        }
        for (i, &(lo, hi)) in limits.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain(format!(
                    "dimension {i}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(SearchBounds { limits })
    }

    /// Box for `(β₁, β₂, β₃, Δx₁₂, Δx₂₃)`: strengths in
    /// `[0.5, factor·|α₁|]`, gaps in `[0.3, 5]`.
    pub fn three_delta(alpha1: f64, strength_factor: f64) -> Result<Self> {
        let s_hi = strength_factor * alpha1.abs();
        SearchBounds::new(vec![
            (STRENGTH_FLOOR, s_hi),
            (STRENGTH_FLOOR, s_hi),
            (STRENGTH_FLOOR, s_hi),
            (MIN_SPACING, MAX_SPACING),
            (MIN_SPACING, MAX_SPACING),
        ])
    }

    pub fn dims(&self) -> usize {
        self.limits.len()
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(&self.limits)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.limits) {
            *v = v.clamp(lo, hi);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// `best + F·(r₁ − r₂)` with binomial crossover.
    Best1Bin,
    /// `r₀ + F·(r₁ − r₂)` with binomial crossover.
    Rand1Bin,
}

/// What happens to trial components that land outside the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundHandling {
    /// Redraw the component uniformly within its limits.
    Resample,
    /// Clamp the component to the nearest limit.
    Clip,
}

/// Differential weight `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Constant(f64),
    /// Redrawn uniformly from `[lo, hi)` once per generation.
    Dither(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    /// Members per search dimension; the population holds
    /// `population_size × dims` vectors.
    pub population_size: usize,
    pub max_iterations: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub seed: u64,
    pub mutation: Mutation,
    pub crossover_rate: f64,
    pub strategy: Strategy,
    pub bound_handling: BoundHandling,
    /// Refine the best member with a bounded Nelder–Mead pass after evolution.
    pub polish: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: 20,
            max_iterations: 800,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            seed: 42,
            mutation: Mutation::Dither(0.5, 1.0),
            crossover_rate: 0.7,
            strategy: Strategy::Best1Bin,
            bound_handling: BoundHandling::Resample,
            polish: false,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 5 {
            return Err(Error::domain(format!(
                "population_size must be at least 5, got {}",
                self.population_size
            )));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if !(self.crossover_rate > 0.0 && self.crossover_rate <= 1.0) {
            return Err(Error::domain(format!(
                "crossover_rate must lie in (0, 1], got {}",
                self.crossover_rate
            )));
        }
        match self.mutation {
            Mutation::Constant(f) if !(f > 0.0 && f <= 2.0) => {
                Err(Error::domain(format!("mutation factor {f} outside (0, 2]")))
            }
            Mutation::Dither(lo, hi) if !(lo > 0.0 && lo < hi && hi <= 2.0) => {
                Err(Error::domain(format!("dither range [{lo}, {hi}) invalid")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Generations run.
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
    /// Best objective value after initialization and after each generation.
    pub history: Vec<f64>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < values[best] { i } else { best })
}

fn spread_converged(energies: &[f64], abs_tol: f64, rel_tol: f64) -> bool {
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return false;
    }
    let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() <= abs_tol + rel_tol * mean.abs()
}

/// Distinct indices in `0..n`, none equal to `exclude`.
fn pick_distinct<const K: usize>(rng: &mut ChaCha8Rng, n: usize, exclude: usize) -> [usize; K] {
    let mut out = [0; K];
    let mut filled = 0;
    while filled < K {
        let c = rng.gen_range(0..n);
        if c != exclude && !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
    out
}

/// Replaces a member by its trial only when the trial is no worse.
fn greedy_select(
    population: &mut [Vec<f64>],
    energies: &mut [f64],
    trials: Vec<Vec<f64>>,
    trial_energies: Vec<f64>,
) {
    for (i, (trial, e)) in trials.into_iter().zip(trial_energies).enumerate() {
        if e <= energies[i] {
            population[i] = trial;
            energies[i] = e;
        }
    }
}

/// Minimizes `objective` over `bounds`. Non-finite objective values count as
/// `+∞`; the run fails only if every initial member is non-finite.
pub fn minimize<F>(objective: &F, bounds: &SearchBounds, config: &DeConfig) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dims = bounds.dims();
    let n = config.population_size * dims;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            bounds
                .limits
                .iter()
                .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    let mut energies: Vec<f64> = population
        .par_iter()
        .map(|x| sanitize(objective(x)))
        .collect();
    let mut evaluations = n;
    if energies.iter().all(|e| e.is_infinite()) {
        return Err(Error::Optimizer(
            "objective is non-finite on the whole initial population".into(),
        ));
    }

    let mut best = argmin(&energies);
    let mut history = vec![energies[best]];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let f = match config.mutation {
            Mutation::Constant(f) => f,
            Mutation::Dither(lo, hi) => rng.gen_range(lo..hi),
        };

        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut mutant: Vec<f64> = match config.strategy {
                    Strategy::Best1Bin => {
                        let [r1, r2] = pick_distinct::<2>(&mut rng, n, i);
                        (0..dims)
                            .map(|d| {
                                population[best][d] + f * (population[r1][d] - population[r2][d])
                            })
                            .collect()
                    }
                    Strategy::Rand1Bin => {
                        let [r0, r1, r2] = pick_distinct::<3>(&mut rng, n, i);
                        (0..dims)
                            .map(|d| {
                                population[r0][d] + f * (population[r1][d] - population[r2][d])
                            })
                            .collect()
                    }
                };
                let forced = rng.gen_range(0..dims);
                for (d, m) in mutant.iter_mut().enumerate() {
                    if d != forced && rng.gen::<f64>() >= config.crossover_rate {
                        *m = population[i][d];
                    }
                }
                match config.bound_handling {
                    BoundHandling::Clip => bounds.clip(&mut mutant),
                    BoundHandling::Resample => {
                        for (m, &(lo, hi)) in mutant.iter_mut().zip(&bounds.limits) {
                            if *m < lo || *m > hi {
                                *m = lo + rng.gen::<f64>() * (hi - lo);
                            }
                        }
                    }
                }
                mutant
            })
            .collect();

        let trial_energies: Vec<f64> = trials.par_iter().map(|x| sanitize(objective(x))).collect();
        evaluations += n;

        greedy_select(&mut population, &mut energies, trials, trial_energies);
        best = argmin(&energies);
        history.push(energies[best]);

        if spread_converged(&energies, config.abs_tol, config.rel_tol) {
            converged = true;
            break;
        }
    }

    let mut best_x = population[best].clone();
    let mut best_value = energies[best];
    if config.polish {
        let (x, v, used) = nelder_mead(objective, bounds, &best_x, best_value);
        evaluations += used;
        if v < best_value {
            best_x = x;
            best_value = v;
        }
    }

    Ok(DeOutcome {
        best: best_x,
        best_value,
        iterations,
        converged,
        evaluations,
        history,
    })
}

/// Nelder–Mead restricted to the box by clipping every vertex.
fn nelder_mead<F>(
    objective: &F,
    bounds: &SearchBounds,
    start: &[f64],
    start_value: f64,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dims = start.len();
    let max_evals = 400 * dims;
    let used = std::cell::Cell::new(0usize);
    let eval = |x: &mut Vec<f64>| {
        bounds.clip(x);
        used.set(used.get() + 1);
        sanitize(objective(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), start_value)];
    for d in 0..dims {
        let (lo, hi) = bounds.limits[d];
        let step = 0.05 * (hi - lo);
        let mut x = start.to_vec();
        x[d] = if x[d] + step <= hi {
            x[d] + step
        } else {
            x[d] - step
        };
        let v = eval(&mut x);
        simplex.push((x, v));
    }

    while used.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_v, worst_v) = (simplex[0].1, simplex[dims].1);
        if (worst_v - best_v).abs() <= 1e-16 * (1.0 + best_v.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..dims)
            .map(|d| simplex[..dims].iter().map(|p| p.0[d]).sum::<f64>() / dims as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dims].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let mut reflected = along(-1.0);
        let rv = eval(&mut reflected);
        if rv < best_v {
            let mut expanded = along(-2.0);
            let ev = eval(&mut expanded);
            simplex[dims] = if ev < rv {
                (expanded, ev)
            } else {
                (reflected, rv)
            };
        } else if rv < simplex[dims - 1].1 {
            simplex[dims] = (reflected, rv);
        } else {
            let mut contracted = if rv < worst_v {
                along(-0.5)
            } else {
                along(0.5)
            };
            let cv = eval(&mut contracted);
            if cv < worst_v.min(rv) {
                simplex[dims] = (contracted, cv);
            } else {
                let anchor = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = anchor
                        .iter()
                        .zip(&p.0)
                        .map(|(a, v)| a + 0.5 * (v - a))
                        .collect();
                    p.1 = eval(&mut x);
                    p.0 = x;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v, used.get())
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn unit_box(d: usize) -> SearchBounds {
        SearchBounds::new(vec![(-1.0, 1.0); d]).unwrap()
    }

    #[test]
    fn bounds_validation() {
        assert!(SearchBounds::new(vec![]).is_err());
        assert!(SearchBounds::new(vec![(1.0, 1.0)]).is_err());
        assert!(SearchBounds::new(vec![(0.0, f64::INFINITY)]).is_err());
        let b = SearchBounds::three_delta(-2.0, 2.0).unwrap();
        assert_eq!(b.limits()[0], (0.5, 4.0));
        assert_eq!(b.limits()[4], (0.3, 5.0));
        // a ceiling below the floor cannot form a box
        assert!(SearchBounds::three_delta(0.2, 2.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DeConfig::default().validate().is_ok());
        let bad = [
            DeConfig {
                population_size: 4,
                ..Default::default()
            },
            DeConfig {
                abs_tol: 0.0,
                ..Default::default()
            },
            DeConfig {
                crossover_rate: 0.0,
                ..Default::default()
            },
            DeConfig {
                crossover_rate: 1.5,
                ..Default::default()
            },
            DeConfig {
                mutation: Mutation::Dither(1.0, 0.5),
                ..Default::default()
            },
            DeConfig {
                mutation: Mutation::Constant(0.0),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(minimize(&sphere, &unit_box(2), &c).is_err(), "{c:?}");
        }
    }

    #[test]
    fn sphere_converges_to_origin() {
        // the default 1e-10 spread test stops near |x| ~ 1e-6, so tighten it
        let cfg = DeConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let out = minimize(&sphere, &unit_box(5), &cfg).unwrap();
        assert!(out.best_value < 1e-10, "{}", out.best_value);
        assert!(out.best.iter().all(|v| v.abs() < 1e-6), "{:?}", out.best);
        assert!(out.converged);
        assert_eq!(out.evaluations, 100 * (out.iterations + 1));
    }

    #[test]
    fn rand1bin_also_works() {
        let cfg = DeConfig {
            strategy: Strategy::Rand1Bin,
            ..Default::default()
        };
        let out = minimize(&sphere, &unit_box(3), &cfg).unwrap();
        assert!(out.best_value < 1e-8);
    }

    #[test]
    fn history_is_monotone() {
        let rastrigin = |x: &[f64]| {
            x.iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
                .sum::<f64>()
        };
        let b = SearchBounds::new(vec![(-5.12, 5.12); 4]).unwrap();
        let out = minimize(&rastrigin, &b, &DeConfig::default()).unwrap();
        assert_eq!(out.history.len(), out.iterations + 1);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn every_candidate_inside_bounds() {
        let b = SearchBounds::new(vec![(0.5, 4.0), (0.5, 4.0), (0.3, 5.0)]).unwrap();
        let seen = Mutex::new(Vec::new());
        // minimum sits outside the box, so mutants are pushed against the walls
        let objective = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            x.iter().map(|v| (v + 1.0).powi(2)).sum::<f64>()
        };
        for handling in [BoundHandling::Resample, BoundHandling::Clip] {
            seen.lock().unwrap().clear();
            let cfg = DeConfig {
                max_iterations: 60,
                bound_handling: handling,
                ..Default::default()
            };
            let out = minimize(&objective, &b, &cfg).unwrap();
            let seen = seen.lock().unwrap();
            assert_eq!(seen.len(), out.evaluations);
            assert!(seen.iter().all(|x| b.contains(x)), "{handling:?}");
            assert!(b.contains(&out.best));
        }
    }

    #[test]
    fn polish_stays_in_bounds_and_never_hurts() {
        let b = SearchBounds::new(vec![(0.5, 4.0); 3]).unwrap();
        let seen = Mutex::new(Vec::new());
        let objective = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            x.iter().map(|v| (v - 0.2).powi(2)).sum::<f64>()
        };
        let plain = DeConfig {
            max_iterations: 5,
            ..Default::default()
        };
        let polished = DeConfig {
            polish: true,
            ..plain.clone()
        };
        let a = minimize(&objective, &b, &plain).unwrap();
        let p = minimize(&objective, &b, &polished).unwrap();
        assert!(p.best_value <= a.best_value);
        assert!(p.evaluations > a.evaluations);
        assert!(seen.into_inner().unwrap().iter().all(|x| b.contains(x)));
    }

    #[test]
    fn nan_regions_are_rejected() {
        let b = unit_box(2);
        let objective = |x: &[f64]| {
            if x[0] > 0.0 {
                f64::NAN
            } else {
                sphere(&[x[0] + 0.5, x[1]])
            }
        };
        let out = minimize(&objective, &b, &DeConfig::default()).unwrap();
        assert!(out.best_value.is_finite());
        assert!(out.best[0] <= 0.0);
        assert!((out.best[0] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn all_nan_population_fails() {
        let objective = |_: &[f64]| f64::NAN;
        let err = minimize(&objective, &unit_box(2), &DeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Optimizer(_)));
    }

    #[test]
    fn identical_seed_identical_result() {
        let cfg = DeConfig {
            max_iterations: 50,
            seed: 7,
            ..Default::default()
        };
        let a = minimize(&sphere, &unit_box(5), &cfg).unwrap();
        let b = minimize(&sphere, &unit_box(5), &cfg).unwrap();
        assert_eq!(a, b);
        let c = minimize(&sphere, &unit_box(5), &DeConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.best, c.best);
    }

    #[test]
    fn result_independent_of_thread_count() {
        let cfg = DeConfig {
            max_iterations: 40,
            ..Default::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| minimize(&sphere, &unit_box(5), &cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(7));
    }

    #[test]
    fn selection_never_worsens_a_member() {
        let mut pop = vec![vec![0.0], vec![1.0], vec![2.0]];
        let mut e = vec![1.0, 5.0, f64::INFINITY];
        let trials = vec![vec![9.0], vec![8.0], vec![7.0]];
        greedy_select(&mut pop, &mut e, trials, vec![2.0, 5.0, f64::INFINITY]);
        assert_eq!(pop, vec![vec![0.0], vec![8.0], vec![7.0]]);
        assert_eq!(e, vec![1.0, 5.0, f64::INFINITY]);
    }

    #[test]
    fn max_iterations_respected() {
        let cfg = DeConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let out = minimize(&sphere, &unit_box(5), &cfg).unwrap();
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
    }
}
