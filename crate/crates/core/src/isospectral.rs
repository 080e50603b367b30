//! Checks on whether a two-spike and a three-spike system can share their
//! whole transmission spectrum.
//!
//! Writing `u = 1/k`, both `|M₁₁|²` expand as `1 + c(k)·u² + O(u³)`, where the
//! oscillating coefficient `c` is `|Σ sⱼ e^{2ikxⱼ}|²`. Equal spectra at large
//! `k` force the constant parts of `c` to agree (equal sums of squared
//! strengths) and every oscillating part to vanish (all pairwise products
//! zero). Only systems that reduce to a single spike survive both.

use serde::{Deserialize, Serialize};

use crate::closed_form::{three_delta_unchecked, two_delta_unchecked};
use crate::error::{Error, Result};
use crate::scattering::{check_k, uniform_grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|α₁² + α₂² − (β₁² + β₂² + β₃²)|`.
    pub strength_sum_residual: f64,
    pub max_pairwise_product: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsospectralityVerdict {
    pub strength_sum_ok: bool,
    pub pairwise_products_ok: bool,
    /// At most one of `α₁, α₂` is nonzero.
    pub trivial_2delta: bool,
    /// At most one of `β₁, β₂, β₃` is nonzero.
    pub trivial_3delta: bool,
    pub residuals: Residuals,
}

impl IsospectralityVerdict {
    /// Both necessary conditions hold.
    pub fn conditions_hold(&self) -> bool {
        self.strength_sum_ok && self.pairwise_products_ok
    }
}

/// `10⁻¹²` times the largest squared strength, or the smallest positive
/// double when every strength is zero.
pub fn default_tolerance(alphas: [f64; 2], betas: [f64; 3]) -> f64 {
    let max = alphas
        .iter()
        .chain(&betas)
        .fold(0.0f64, |m, s| m.max(s.abs()));
    (1e-12 * max * max).max(f64::MIN_POSITIVE)
}

/// Evaluates the necessary conditions for exact isospectrality.
///
/// Strength products and squared sums are compared against `tolerance`, so
/// it carries units of strength squared. A strength counts as nonzero when
/// its square exceeds `tolerance`.
pub fn check_exact_conditions(
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    tolerance: f64,
) -> Result<IsospectralityVerdict> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be finite and positive, got {tolerance}"
        )));
    }
    let all = [alpha1, alpha2, beta1, beta2, beta3];
    if let Some(s) = all.iter().find(|s| !s.is_finite()) {
        return Err(Error::domain(format!("strengths must be finite, got {s}")));
    }

    let strength_sum_residual =
        (alpha1 * alpha1 + alpha2 * alpha2 - (beta1 * beta1 + beta2 * beta2 + beta3 * beta3)).abs();
    let max_pairwise_product = [alpha1 * alpha2, beta1 * beta2, beta2 * beta3, beta1 * beta3]
        .iter()
        .fold(0.0f64, |m, p| m.max(p.abs()));

    let nonzero = |xs: &[f64]| xs.iter().filter(|s| *s * *s > tolerance).count();
    Ok(IsospectralityVerdict {
        strength_sum_ok: strength_sum_residual <= tolerance,
        pairwise_products_ok: max_pairwise_product <= tolerance,
        trivial_2delta: nonzero(&[alpha1, alpha2]) <= 1,
        trivial_3delta: nonzero(&[beta1, beta2, beta3]) <= 1,
        residuals: Residuals {
            strength_sum_residual,
            max_pairwise_product,
        },
    })
}

/// `(α₁+α₂)² + 2α₁α₂(cos 2kΔx − 1)`.
pub fn u2_coefficient_2delta(alpha1: f64, alpha2: f64, dx: f64, k: f64) -> f64 {
    (alpha1 + alpha2).powi(2) + 2.0 * alpha1 * alpha2 * ((2.0 * k * dx).cos() - 1.0)
}

/// `(Σβ)² − 2(β₁β₂ + β₁β₃ + β₂β₃) + 2(β₁β₂ cos θ₁₂ + β₂β₃ cos θ₂₃ + β₁β₃ cos θ₁₃)`
/// with `θᵢⱼ = 2kΔxᵢⱼ`.
pub fn u2_coefficient_3delta(
    beta1: f64,
    beta2: f64,
    beta3: f64,
    dx12: f64,
    dx23: f64,
    k: f64,
) -> f64 {
    let (b12, b23, b13) = (beta1 * beta2, beta2 * beta3, beta1 * beta3);
    let c12 = (2.0 * k * dx12).cos();
    let c23 = (2.0 * k * dx23).cos();
    let c13 = (2.0 * k * (dx12 + dx23)).cos();
    (beta1 + beta2 + beta3).powi(2) - 2.0 * (b12 + b13 + b23)
        + 2.0 * (b12 * c12 + b23 * c23 + b13 * c13)
}

/// The uniform grid on `[50, 500]` with a step of `0.01`.
pub fn default_scan() -> Vec<f64> {
    uniform_grid(50.0, 500.0, 45_001).expect("static grid is valid")
}

/// `sup k²·|T₂δ(k) − T₃δ(k)|` over `k_scan`.
///
/// The two-spike system has strengths `alphas` separated by `dx`; the
/// three-spike one has strengths `betas` with gaps `spacings`. The scan is
/// only informative where `k` is large against every strength.
pub fn asymptotic_mismatch_scan(
    alphas: [f64; 2],
    dx: f64,
    betas: [f64; 3],
    spacings: [f64; 2],
    k_scan: &[f64],
) -> Result<f64> {
    if k_scan.is_empty() {
        return Err(Error::domain("empty scan"));
    }
    for &k in k_scan {
        check_k(k)?;
    }
    let mut finite = alphas.iter().chain(&betas).chain(&spacings).chain([&dx]);
    if let Some(v) = finite.find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite parameter {v}")));
    }
    if !(dx > 0.0 && spacings.iter().all(|&s| s > 0.0)) {
        return Err(Error::domain("separations must be positive"));
    }
    let [a1, a2] = alphas;
    let [b1, b2, b3] = betas;
    let [d12, d23] = spacings;
    Ok(k_scan
        .iter()
        .map(|&k| {
            let diff =
                two_delta_unchecked(a1, a2, dx, k) - three_delta_unchecked(b1, b2, b3, d12, d23, k);
            k * k * diff.abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    use super::*;
    use crate::scattering::{system_transfer_matrix, DeltaSystem};

    // |Σ sⱼ e^{2ikxⱼ}|², evaluated with complex phases.
    fn phasor_coefficient(strengths: &[f64], positions: &[f64], k: f64) -> f64 {
        strengths
            .iter()
            .zip(positions)
            .map(|(&s, &x)| s * Complex64::from_polar(1.0, 2.0 * k * x))
            .sum::<Complex64>()
            .norm_sqr()
    }

    #[test]
    fn exact_condition_examples() {
        let v = check_exact_conditions(2.0, -2.0, 1.0, 1.0, 1.0, 1e-12).unwrap();
        assert!(!v.strength_sum_ok && !v.pairwise_products_ok);
        assert_eq!(v.residuals.max_pairwise_product, 4.0);
        assert_eq!(v.residuals.strength_sum_residual, 5.0);

        for (a, b) in [([3.0, 0.0], [0.0, 3.0, 0.0]), ([2.0, 0.0], [0.0, 0.0, 2.0])] {
            let v = check_exact_conditions(a[0], a[1], b[0], b[1], b[2], 1e-12).unwrap();
            assert!(v.conditions_hold());
            assert!(v.trivial_2delta && v.trivial_3delta);
        }
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(check_exact_conditions(1.0, 0.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(check_exact_conditions(1.0, 0.0, 1.0, 0.0, 0.0, f64::NAN).is_err());
        assert!(check_exact_conditions(f64::INFINITY, 0.0, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn default_tolerance_scales_with_strength() {
        assert_abs_diff_eq!(
            default_tolerance([2.0, -3.0], [1.0, 0.0, 0.5]),
            9e-12,
            epsilon = 1e-26
        );
        assert!(default_tolerance([0.0; 2], [0.0; 3]) > 0.0);
    }

    #[test]
    fn u2_2delta_examples() {
        for n in 1..4 {
            let k = PI * n as f64 / 2.65;
            assert_abs_diff_eq!(
                u2_coefficient_2delta(2.0, -2.0, 2.65, k),
                0.0,
                epsilon = 1e-12
            );
        }
        let expected = -8.0 * ((5.3f64).cos() - 1.0);
        assert_abs_diff_eq!(
            u2_coefficient_2delta(2.0, -2.0, 2.65, 1.0),
            expected,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(expected, 3.574, epsilon = 1e-2);
        assert_eq!(u2_coefficient_2delta(1.0, 0.0, 1.0, 0.7), 1.0);
    }

    #[test]
    fn u2_3delta_examples() {
        for k in [0.2, 1.0, 7.0] {
            assert_abs_diff_eq!(
                u2_coefficient_3delta(2.5, 0.0, 0.0, 0.4, 1.3, k),
                6.25,
                epsilon = 1e-14
            );
        }
        // all phases multiples of 2π
        assert_abs_diff_eq!(
            u2_coefficient_3delta(1.0, 1.0, 1.0, 1.0, 1.0, PI),
            9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn u2_3delta_tracks_full_product() {
        let sys = DeltaSystem::from_gaps(0.0, &[1.0, 2.0, 3.0], &[0.8, 1.1]).unwrap();
        let mut last = f64::INFINITY;
        for k in [600.0, 6000.0, 60000.0] {
            let m = system_transfer_matrix(&sys, k).unwrap();
            let err = (k * k * (m.m11.norm_sqr() - 1.0)
                - u2_coefficient_3delta(1.0, 2.0, 3.0, 0.8, 1.1, k))
            .abs();
            assert!(err * k < 3.0 * 216.0, "k = {k}: {err}");
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn scan_examples() {
        let scan = default_scan();
        assert_eq!(scan.len(), 45_001);
        assert_abs_diff_eq!(scan[1] - scan[0], 0.01, epsilon = 1e-12);
        let m =
            asymptotic_mismatch_scan([3.0, 0.0], 2.0, [3.0, 0.0, 0.0], [0.7, 1.9], &scan).unwrap();
        assert!(m < 1e-10);
        let m =
            asymptotic_mismatch_scan([3.0, 0.0], 1.0, [0.0, 0.0, 3.0], [1.0, 1.0], &scan).unwrap();
        assert!(m < 1e-10);
        let m = asymptotic_mismatch_scan([2.0, -2.0], 2.65, [1.0, 1.0, 1.0], [1.0, 1.0], &scan)
            .unwrap();
        assert!(m > 1.0);
    }

    #[test]
    fn scan_rejects_bad_input() {
        assert!(asymptotic_mismatch_scan([1.0, 1.0], 1.0, [1.0; 3], [1.0; 2], &[]).is_err());
        assert!(asymptotic_mismatch_scan([1.0, 1.0], 1.0, [1.0; 3], [1.0; 2], &[0.0]).is_err());
        assert!(asymptotic_mismatch_scan([1.0, 1.0], 0.0, [1.0; 3], [1.0; 2], &[50.0]).is_err());
        assert!(asymptotic_mismatch_scan([1.0, 1.0], 1.0, [1.0; 3], [1.0, -1.0], &[50.0]).is_err());
    }

    proptest! {
        #[test]
        fn coefficients_equal_phasor_sum(
            s in prop::array::uniform3(-6.0f64..6.0),
            d12 in 0.3f64..6.0, d23 in 0.3f64..6.0, k in 0.01f64..100.0,
        ) {
            let c2 = u2_coefficient_2delta(s[0], s[1], d12, k);
            prop_assert!((c2 - phasor_coefficient(&s[..2], &[0.0, d12], k)).abs() < 1e-9);
            let c3 = u2_coefficient_3delta(s[0], s[1], s[2], d12, d23, k);
            prop_assert!((c3 - phasor_coefficient(&s, &[0.0, d12, d12 + d23], k)).abs() < 1e-9);
        }

        // The remainder after the u² term is bounded by C/k with C = 3·(Σ|s|)³.
        #[test]
        fn expansion_remainder_decays_as_one_over_k(
            s in prop::array::uniform3(-6.0f64..6.0),
            d12 in 0.3f64..6.0, d23 in 0.3f64..6.0, scale in 100.0f64..1000.0,
        ) {
            let total2 = s[0].abs() + s[1].abs();
            prop_assume!(total2 > 1e-3);
            let k = scale * total2;
            let sys = DeltaSystem::from_gaps(0.0, &s[..2], &[d12]).unwrap();
            let m = system_transfer_matrix(&sys, k).unwrap();
            let rem = (k * k * (m.m11.norm_sqr() - 1.0) - u2_coefficient_2delta(s[0], s[1], d12, k)).abs();
            prop_assert!(rem <= 3.0 * total2.powi(3) / k + 1e-6, "{rem}");

            let total3: f64 = s.iter().map(|v| v.abs()).sum();
            let k = scale * total3;
            let sys = DeltaSystem::from_gaps(0.0, &s, &[d12, d23]).unwrap();
            let m = system_transfer_matrix(&sys, k).unwrap();
            let rem = (k * k * (m.m11.norm_sqr() - 1.0) - u2_coefficient_3delta(s[0], s[1], s[2], d12, d23, k)).abs();
            prop_assert!(rem <= 3.0 * total3.powi(3) / k + 1e-6, "{rem}");
        }

        #[test]
        fn verdict_is_scale_consistent(
            s in prop::array::uniform5(prop_oneof![Just(0.0), -6.0f64..6.0]),
            lambda in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0],
            tol in 1e-6f64..1.0,
        ) {
            let v = check_exact_conditions(s[0], s[1], s[2], s[3], s[4], tol).unwrap();
            let l = lambda;
            let w = check_exact_conditions(l * s[0], l * s[1], l * s[2], l * s[3], l * s[4], l * l * tol).unwrap();
            prop_assert_eq!(v.strength_sum_ok, w.strength_sum_ok);
            prop_assert_eq!(v.pairwise_products_ok, w.pairwise_products_ok);
            prop_assert_eq!(v.trivial_2delta, w.trivial_2delta);
            prop_assert_eq!(v.trivial_3delta, w.trivial_3delta);
        }
    }
}
