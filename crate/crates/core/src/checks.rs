//! Numerical verification routines behind the `verify-*` commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::BidDistribution;
use crate::error::Result;
use crate::kernels::{heaviside_distance, GaussianKernel, SmoothingKernel};
use crate::surrogate::{
    convolved_expected_gradient, convolved_gradient, convolved_payoff, gradient_second_moment, gradient_sign_changes,
    surrogate_bias,
};

/// Central-difference step for the payoff derivative check.
pub const FD_STEP: f64 = 1e-6;

/// Reserves at which the second moment is maximised, per unit of `b̄`.
pub const SECOND_MOMENT_GRID: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDifferenceReport {
    pub triples: usize,
    pub max_error: f64,
    pub worst_r: f64,
    pub worst_b: f64,
    pub worst_sigma: f64,
}

/// Compares the closed-form gradient with central differences of the payoff
/// at random `(r, b, σ)` with `r ∈ [-0.5, 1.5]`, `b ∈ [0, 1]`,
/// `log₁₀ σ ∈ [-1.5, 0]`.
pub fn finite_difference_check(triples: usize, seed: u64) -> Result<FiniteDifferenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = FiniteDifferenceReport { triples, max_error: 0.0, worst_r: 0.0, worst_b: 0.0, worst_sigma: 0.0 };
    for _ in 0..triples {
        let sigma = 10f64.powf(rng.random_range(-1.5..0.0));
        let r = rng.random_range(-0.5..1.5);
        let b = rng.random_range(0.0..1.0);
        let k = GaussianKernel::new(sigma)?;
        let fd = (convolved_payoff(&k, r + FD_STEP, b)? - convolved_payoff(&k, r - FD_STEP, b)?) / (2.0 * FD_STEP);
        let err = (fd - convolved_gradient(&k, r, b)).abs();
        if err > rep.max_error {
            rep = FiniteDifferenceReport { max_error: err, worst_r: r, worst_b: b, worst_sigma: sigma, ..rep };
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnbiasednessRow {
    pub reserve: f64,
    pub mc_mean: f64,
    pub std_error: f64,
    pub quadrature: f64,
    /// `|mc_mean − quadrature| / std_error`.
    pub z: f64,
}

/// Monte Carlo mean of `∇p_k(r, b)` over `samples` bids against the
/// quadrature gradient of `Π_k`, at each reserve.
pub fn unbiasedness_check(
    dist: &BidDistribution,
    kernel: &GaussianKernel,
    reserves: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<UnbiasednessRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bids: Vec<f64> = (0..samples).map(|_| dist.sample(&mut rng)).collect();
    let n = samples as f64;
    reserves
        .iter()
        .map(|&r| {
            let (mut sum, mut sq) = (0.0, 0.0);
            for &b in &bids {
                let g = convolved_gradient(kernel, r, b);
                sum += g;
                sq += g * g;
            }
            let mean = sum / n;
            let var = (sq / n - mean * mean) * n / (n - 1.0);
            let se = (var.max(0.0) / n).sqrt();
            let quad = convolved_expected_gradient(dist, kernel, r)?;
            Ok(UnbiasednessRow { reserve: r, mc_mean: mean, std_error: se, quadrature: quad, z: (mean - quad).abs() / se })
        })
        .collect()
}

/// One row of the bias/second-moment report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub sigma: f64,
    #[serde(rename = "B_k")]
    pub bias: f64,
    #[serde(rename = "bound_B")]
    pub bound_b: f64,
    #[serde(rename = "V_k")]
    pub second_moment: f64,
    #[serde(rename = "bound_V")]
    pub bound_v: f64,
    pub pass: bool,
}

pub fn bound_check(dist: &BidDistribution, sigma: f64) -> Result<BoundRow> {
    let k = GaussianKernel::new(sigma)?;
    let top = dist.support_max();
    let grid: Vec<f64> =
        (0..SECOND_MOMENT_GRID).map(|i| top * i as f64 / (SECOND_MOMENT_GRID - 1) as f64).collect();
    let bias = surrogate_bias(dist, &k)?;
    let m = gradient_second_moment(dist, &k, &grid)?;
    Ok(BoundRow {
        sigma,
        bias: bias.bias,
        bound_b: bias.bound,
        second_moment: m.value,
        bound_v: m.bound,
        pass: bias.holds() && m.holds(),
    })
}

/// Closed-form Gaussian norms against their numerical counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelNormRow {
    pub sigma: f64,
    pub l1_closed: f64,
    pub l1_cdf_quadrature: f64,
    pub l1_moment_quadrature: f64,
    pub sup_closed: f64,
    pub sup_grid: f64,
    pub max_error: f64,
    pub pass: bool,
}

pub fn kernel_norm_check(sigma: f64, tol: f64) -> Result<KernelNormRow> {
    let k = GaussianKernel::new(sigma)?;
    let h = heaviside_distance(&k)?;
    let w = k.effective_radius();
    let n = 100_001;
    let sup_grid = (0..n).map(|i| k.density(-w + 2.0 * w * i as f64 / (n - 1) as f64)).fold(0.0, f64::max);
    let l1 = k.l1_to_heaviside();
    let max_error = [(h.cdf_form.value - l1).abs(), (h.moment_form.value - l1).abs(), (sup_grid - k.sup_norm()).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(KernelNormRow {
        sigma,
        l1_closed: l1,
        l1_cdf_quadrature: h.cdf_form.value,
        l1_moment_quadrature: h.moment_form.value,
        sup_closed: k.sup_norm(),
        sup_grid,
        max_error,
        pass: max_error <= tol,
    })
}

/// Sign changes of `∇Π_k` on `n` reserves spanning `[-b̄/2, 3b̄/2]`.
pub fn concavity_check(dist: &BidDistribution, sigma: f64, n: usize) -> Result<usize> {
    let top = dist.support_max();
    gradient_sign_changes(dist, &GaussianKernel::new(sigma)?, -0.5 * top, 1.5 * top, n)
}
