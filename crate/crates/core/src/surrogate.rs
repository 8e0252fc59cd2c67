//! Convolution-smoothed payoff and revenue.
//!
//! The learners only ever call [`convolved_gradient`], which is closed form.
//! Everything that integrates over the bid law (`Π_k`, its gradient, the bias
//! and second-moment estimates) is an oracle for tests and reports.

use serde::Serialize;

use crate::distributions::BidDistribution;
use crate::error::Result;
use crate::kernels::SmoothingKernel;
use crate::quadrature::integrate_with_breaks;
use crate::search::grid_golden_max;

/// Absolute tolerance for the `Π_k` quadratures.
pub const REVENUE_QUAD_TOL: f64 = 1e-11;

/// Interior points used for the `‖∇Π‖_∞` grid estimate.
pub const GRADIENT_SUP_GRID: usize = 100_000;

/// Payoff of posting reserve `r` to a bid `b` in a lazy second-price auction.
pub fn instantaneous_revenue(r: f64, b: f64) -> f64 {
    if r <= b {
        r
    } else {
        0.0
    }
}

/// Smoothed payoff and its gradient at one `(r, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateEval {
    pub value: f64,
    pub gradient: f64,
}

pub fn evaluate<K: SmoothingKernel + ?Sized>(kernel: &K, r: f64, b: f64) -> Result<SurrogateEval> {
    Ok(SurrogateEval {
        value: kernel.convolved_payoff(r, b)?,
        gradient: kernel.convolved_gradient(r, b),
    })
}

/// `∇p_k(r, b) = K(r) - K(r - b) - b k(r - b)`; constant cost.
pub fn convolved_gradient<K: SmoothingKernel + ?Sized>(kernel: &K, r: f64, b: f64) -> f64 {
    kernel.convolved_gradient(r, b)
}

/// `p_k(r, b) = ∫₀ᵇ τ k(r - τ) dτ`.
pub fn convolved_payoff<K: SmoothingKernel + ?Sized>(kernel: &K, r: f64, b: f64) -> Result<f64> {
    kernel.convolved_payoff(r, b)
}

fn revenue_breaks<K: SmoothingKernel + ?Sized>(dist: &BidDistribution, kernel: &K, r: f64) -> Vec<f64> {
    let top = dist.support_max();
    let w = kernel.effective_radius();
    let mut breaks = vec![0.0, top];
    for x in [r - w, r - 0.1 * w, r, r + 0.1 * w, r + w] {
        if x > 0.0 && x < top {
            breaks.push(x);
        }
    }
    breaks
}

/// `Π_k(r) = ∫₀^b̄ Π(τ) k(r - τ) dτ` by adaptive quadrature.
pub fn convolved_expected_revenue<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
    r: f64,
) -> Result<f64> {
    let breaks = revenue_breaks(dist, kernel, r);
    let f = |t: f64| t * dist.survival(t) * kernel.density(r - t);
    Ok(integrate_with_breaks(f, &breaks, REVENUE_QUAD_TOL)?.value)
}

/// `∇Π_k(r) = ∫₀^b̄ Π(τ) k'(r - τ) dτ` by adaptive quadrature.
///
/// Outside the support every term of the integrand has the same sign, so the
/// sign of the result is exact even where its magnitude is negligible.
pub fn convolved_expected_gradient<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
    r: f64,
) -> Result<f64> {
    let breaks = revenue_breaks(dist, kernel, r);
    let f = |t: f64| t * dist.survival(t) * kernel.density_derivative(r - t);
    Ok(integrate_with_breaks(f, &breaks, REVENUE_QUAD_TOL)?.value)
}

/// `E_b[(∇p_k(r, b))²]`, integrated in quantile space so densities that blow
/// up at the support edge cause no trouble.
pub fn expected_squared_gradient<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
    r: f64,
) -> Result<f64> {
    let w = kernel.effective_radius();
    let mut breaks = vec![0.0, 1.0];
    for x in [r - w, r - 0.1 * w, r, r + 0.1 * w, r + w] {
        let u = dist.cdf(x);
        if u > 0.0 && u < 1.0 {
            breaks.push(u);
        }
    }
    let f = |u: f64| {
        let g = kernel.convolved_gradient(r, dist.quantile(u));
        g * g
    };
    Ok(integrate_with_breaks(f, &breaks, 1e-10)?.value)
}

/// `‖∇Π‖_∞` estimated as a max over an interior grid.
pub fn gradient_sup_norm(dist: &BidDistribution) -> Result<f64> {
    let mut sup = 0.0f64;
    for r in dist.interior_grid(GRADIENT_SUP_GRID) {
        sup = sup.max(dist.grad_monopoly_revenue(r)?.abs());
    }
    Ok(sup)
}

/// Outcome of a surrogate-bias measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurrogateBias {
    pub r_star: f64,
    pub r_k_star: f64,
    /// `|Π(r*) - Π(r_k*)|`.
    pub bias: f64,
    /// `2 ‖∇Π‖_∞ ‖K - 1_{ℝ⁺}‖₁`.
    pub bound: f64,
}

impl SurrogateBias {
    pub fn holds(&self) -> bool {
        self.bias <= self.bound
    }
}

/// Maximiser of `Π_k` by grid plus golden-section search over `[0, b̄]`.
pub fn surrogate_maximizer<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
) -> Result<f64> {
    let mut failure = None;
    let m = grid_golden_max(
        |r| match convolved_expected_revenue(dist, kernel, r) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        0.0,
        dist.support_max(),
        2001,
        1e-9,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(m.x),
    }
}

pub fn surrogate_bias<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
) -> Result<SurrogateBias> {
    let star = dist.monopoly_price_oracle(1e-7);
    let r_k_star = surrogate_maximizer(dist, kernel)?;
    let bias = (star.revenue - dist.monopoly_revenue(r_k_star)?).abs();
    let bound = 2.0 * gradient_sup_norm(dist)? * kernel.l1_to_heaviside();
    Ok(SurrogateBias { r_star: star.reserve, r_k_star, bias, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMoment {
    /// Grid max of `E_b[|∇p_k(r, b)|²]`.
    pub value: f64,
    pub argmax: f64,
    /// `1 + b̄ (1 + ‖∇Π‖_∞) ‖k‖_∞`.
    pub bound: f64,
}

impl SecondMoment {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

pub fn gradient_second_moment<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
    r_grid: &[f64],
) -> Result<SecondMoment> {
    let mut value = 0.0;
    let mut argmax = f64::NAN;
    for &r in r_grid {
        let v = expected_squared_gradient(dist, kernel, r)?;
        if v > value || argmax.is_nan() {
            value = v;
            argmax = r;
        }
    }
    let bound = 1.0 + dist.support_max() * (1.0 + gradient_sup_norm(dist)?) * kernel.sup_norm();
    Ok(SecondMoment { value, argmax, bound })
}

/// Number of sign changes of `∇Π_k` over `n` equispaced reserves in
/// `[lo, hi]`; exact zeros carry no sign and are skipped.
pub fn gradient_sign_changes<K: SmoothingKernel + ?Sized>(
    dist: &BidDistribution,
    kernel: &K,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<usize> {
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for i in 0..n {
        let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let g = convolved_expected_gradient(dist, kernel, r)?;
        if g == 0.0 {
            continue;
        }
        let positive = g > 0.0;
        if last.is_some_and(|p| p != positive) {
            changes += 1;
        }
        last = Some(positive);
    }
    Ok(changes)
}
