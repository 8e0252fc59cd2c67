//! Smoothing kernels and their decay schedules.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, Integral};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Absolute tolerance of the kernel quadratures.
pub const KERNEL_QUAD_TOL: f64 = 1e-10;

/// Standard normal cdf, accurate to a few ulps in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `Φ(hi) - Φ(lo)` without cancellation when both arguments sit in the same tail.
pub fn std_normal_mass(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    }
}

/// A normalised, strictly positive, log-concave, C¹ density on ℝ used to
/// smooth the instantaneous revenue.
pub trait SmoothingKernel {
    /// `k(x)`.
    fn density(&self, x: f64) -> f64;

    /// `k'(x)`.
    fn density_derivative(&self, x: f64) -> f64;

    /// `K(x) = ∫_{-∞}^x k`.
    fn cdf(&self, x: f64) -> f64;

    /// `K(hi) - K(lo)`. Override when the kernel can avoid tail cancellation.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.cdf(hi) - self.cdf(lo)
    }

    /// `‖k‖_∞`.
    fn sup_norm(&self) -> f64;

    /// Closed form of `‖K - 1_{ℝ⁺}‖₁`.
    fn l1_to_heaviside(&self) -> f64;

    /// Half-width outside which the kernel's mass is negligible (below 1e-20).
    fn effective_radius(&self) -> f64;

    /// Smoothed payoff `∫₀ᵇ τ k(r - τ) dτ`. The default integrates numerically.
    fn convolved_payoff(&self, r: f64, b: f64) -> Result<f64> {
        if b <= 0.0 {
            return Ok(0.0);
        }
        let w = self.effective_radius();
        let lo = (r - w).max(0.0);
        let hi = (r + w).min(b);
        if lo >= hi {
            return Ok(0.0);
        }
        let breaks = [lo, r.clamp(lo, hi), hi];
        Ok(integrate_with_breaks(|t| t * self.density(r - t), &breaks, 1e-12)?.value)
    }

    /// Gradient in `r` of the smoothed payoff: `K(r) - K(r - b) - b k(r - b)`.
    fn convolved_gradient(&self, r: f64, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        self.mass(r - b, r) - b * self.density(r - b)
    }
}

/// Zero-mean Gaussian kernel with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    sigma: f64,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(GaussianKernel { sigma })
        } else {
            Err(Error::InvalidParameter(format!("kernel width must be finite and > 0, got {sigma}")))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl SmoothingKernel for GaussianKernel {
    fn density(&self, x: f64) -> f64 {
        std_normal_pdf(x / self.sigma) / self.sigma
    }

    fn density_derivative(&self, x: f64) -> f64 {
        -x / (self.sigma * self.sigma) * self.density(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf(x / self.sigma)
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        std_normal_mass(lo / self.sigma, hi / self.sigma)
    }

    fn sup_norm(&self) -> f64 {
        INV_SQRT_2PI / self.sigma
    }

    fn l1_to_heaviside(&self) -> f64 {
        self.sigma * (2.0 / PI).sqrt()
    }

    fn effective_radius(&self) -> f64 {
        10.0 * self.sigma
    }

    /// With `z = τ - r`:
    /// `∫₀ᵇ τ k(r-τ) dτ = r [Φ((b-r)/σ) - Φ(-r/σ)] + σ [φ(r/σ) - φ((b-r)/σ)]`.
    fn convolved_payoff(&self, r: f64, b: f64) -> Result<f64> {
        if b <= 0.0 {
            return Ok(0.0);
        }
        let s = self.sigma;
        let (lo, hi) = (-r / s, (b - r) / s);
        Ok(r * std_normal_mass(lo, hi) + s * (std_normal_pdf(lo) - std_normal_pdf(hi)))
    }
}

/// Both integral forms of the kernel's distance to the Heaviside step.
#[derive(Debug, Clone, Copy)]
pub struct HeavisideDistance {
    /// `∫ |K(r) - 1_{r ≥ 0}| dr`.
    pub cdf_form: Integral,
    /// `∫ |r| k(r) dr`.
    pub moment_form: Integral,
}

/// Computes `‖K - 1_{ℝ⁺}‖₁` two ways by adaptive quadrature over the
/// kernel's effective support.
pub fn heaviside_distance<K: SmoothingKernel + ?Sized>(kernel: &K) -> Result<HeavisideDistance> {
    let w = kernel.effective_radius();
    let breaks = [-w, 0.0, w];
    let cdf_form = integrate_with_breaks(
        |r| {
            let step = if r >= 0.0 { 1.0 } else { 0.0 };
            (kernel.cdf(r) - step).abs()
        },
        &breaks,
        KERNEL_QUAD_TOL,
    )?;
    let moment_form =
        integrate_with_breaks(|r| r.abs() * kernel.density(r), &breaks, KERNEL_QUAD_TOL)?;
    Ok(HeavisideDistance { cdf_form, moment_form })
}

/// `‖K - 1_{ℝ⁺}‖₁` by quadrature of the cdf form.
pub fn l1_distance_to_heaviside<K: SmoothingKernel + ?Sized>(kernel: &K) -> Result<f64> {
    Ok(heaviside_distance(kernel)?.cdf_form.value)
}

/// `∫ k` over the effective support.
pub fn total_mass<K: SmoothingKernel + ?Sized>(kernel: &K) -> Result<f64> {
    let w = kernel.effective_radius();
    Ok(integrate_with_breaks(|r| kernel.density(r), &[-w, 0.0, w], KERNEL_QUAD_TOL)?.value)
}

/// Gaussian widths `σ_t = sigma0 · t^{-alpha_sigma}`; `alpha_sigma = 0`
/// keeps the kernel fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSchedule {
    pub sigma0: f64,
    #[serde(default)]
    pub alpha_sigma: f64,
}

impl KernelSchedule {
    pub fn new(sigma0: f64, alpha_sigma: f64) -> Result<Self> {
        let s = KernelSchedule { sigma0, alpha_sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn fixed(sigma: f64) -> Result<Self> {
        Self::new(sigma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        GaussianKernel::new(self.sigma0)?;
        if !(self.alpha_sigma.is_finite() && self.alpha_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel decay exponent must be >= 0, got {}",
                self.alpha_sigma
            )));
        }
        Ok(())
    }

    pub fn sigma_at(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        self.sigma0 * (t.max(1) as f64).powf(-self.alpha_sigma)
    }

    pub fn kernel_at(&self, t: u64) -> GaussianKernel {
        GaussianKernel { sigma: self.sigma_at(t) }
    }

    pub fn is_decaying(&self) -> bool {
        self.alpha_sigma > 0.0
    }

    /// `(ν₁, α₁)` with `‖K_t - 1_{ℝ⁺}‖₁ = ν₁ t^{-α₁}`.
    pub fn l1_decay(&self) -> (f64, f64) {
        (self.sigma0 * (2.0 / PI).sqrt(), self.alpha_sigma)
    }

    /// `(ν_∞, α_∞)` with `‖k_t‖_∞ = ν_∞ t^{α_∞}`.
    pub fn sup_growth(&self) -> (f64, f64) {
        (INV_SQRT_2PI / self.sigma0, self.alpha_sigma)
    }

    /// Whether steps `γ_t ∝ t^{-step_alpha}` meet the almost-sure convergence
    /// conditions: `Σγ_t = ∞`, `Σγ_t ‖K_t - 1‖₁ < ∞`, `Σγ_t² ‖k_t‖_∞ < ∞`.
    pub fn admits_convergence(&self, step_alpha: f64) -> bool {
        let (_, a1) = self.l1_decay();
        let (_, a_inf) = self.sup_growth();
        step_alpha <= 1.0 && step_alpha + a1 > 1.0 && 2.0 * step_alpha - a_inf > 1.0
    }
}
