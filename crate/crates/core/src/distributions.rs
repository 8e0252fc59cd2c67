//! Parametric bid laws on a bounded support `[0, b̄]`.
//!
//! Every family here has a closed-form cdf, density and inverse cdf, so
//! sampling never touches quadrature. The auction functionals (monopoly
//! revenue, virtual value, hazard rate) and the assumption checks used by the
//! learners and the simulator live alongside them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{grid_golden_max, Maximum};

/// Number of points used by the assumption validators.
pub const VALIDATION_GRID: usize = 10_000;

/// Grid size used by [`BidDistribution::monopoly_price_oracle`] before the
/// golden-section refinement.
pub const ORACLE_GRID: usize = 100_000;

/// The family and parameters of a bid law, as written in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// cdf `1 - (1 - x^a)^b` on `[0, 1]`.
    Kumaraswamy { a: f64, b: f64 },
    /// Exponential with `rate`, conditioned on `[0, upper]`.
    TruncatedExponential { rate: f64, upper: f64 },
    Uniform { upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct BidDistribution {
    family: Family,
}

impl TryFrom<Family> for BidDistribution {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        BidDistribution::new(family)
    }
}

impl From<BidDistribution> for Family {
    fn from(d: BidDistribution) -> Family {
        d.family
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl BidDistribution {
    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::Kumaraswamy { a, b } => {
                positive("kumaraswamy a", a)?;
                positive("kumaraswamy b", b)?;
            }
            Family::TruncatedExponential { rate, upper } => {
                positive("exponential rate", rate)?;
                positive("exponential upper", upper)?;
            }
            Family::Uniform { upper } => positive("uniform upper", upper)?,
        }
        Ok(BidDistribution { family })
    }

    pub fn kumaraswamy(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Kumaraswamy { a, b })
    }

    pub fn uniform(upper: f64) -> Result<Self> {
        Self::new(Family::Uniform { upper })
    }

    pub fn truncated_exponential(rate: f64, upper: f64) -> Result<Self> {
        Self::new(Family::TruncatedExponential { rate, upper })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Upper end `b̄` of the support.
    pub fn support_max(&self) -> f64 {
        match self.family {
            Family::Kumaraswamy { .. } => 1.0,
            Family::TruncatedExponential { upper, .. } | Family::Uniform { upper } => upper,
        }
    }

    /// `1 - F(x)`, computed directly so the upper tail keeps its precision.
    pub fn survival(&self, x: f64) -> f64 {
        let top = self.support_max();
        if x <= 0.0 {
            return 1.0;
        }
        if x >= top {
            return 0.0;
        }
        match self.family {
            Family::Kumaraswamy { a, b } => (b * (-x.powf(a)).ln_1p()).exp(),
            Family::TruncatedExponential { rate, upper } => {
                // (e^{-rx} - e^{-ru}) / (1 - e^{-ru})
                -(-rate * (upper - x)).exp_m1() * (-rate * x).exp() / -(-rate * upper).exp_m1()
            }
            Family::Uniform { upper } => 1.0 - x / upper,
        }
    }

    /// Cumulative distribution function, clamped to 0 below the support and 1 above.
    pub fn cdf(&self, x: f64) -> f64 {
        let top = self.support_max();
        if x <= 0.0 {
            return 0.0;
        }
        if x >= top {
            return 1.0;
        }
        match self.family {
            Family::Kumaraswamy { a, b } => -(b * (-x.powf(a)).ln_1p()).exp_m1(),
            Family::TruncatedExponential { rate, upper } => {
                (-rate * x).exp_m1() / (-rate * upper).exp_m1()
            }
            Family::Uniform { upper } => x / upper,
        }
    }

    /// Density. Zero outside the closed support; a domain error where the
    /// density is unbounded (Kumaraswamy edges with a shape below one).
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let top = self.support_max();
        if x < 0.0 || x > top {
            return Ok(0.0);
        }
        let v = match self.family {
            Family::Kumaraswamy { a, b } => {
                let xa = x.powf(a);
                a * b * x.powf(a - 1.0) * (1.0 - xa).powf(b - 1.0)
            }
            Family::TruncatedExponential { rate, upper } => {
                rate * (-rate * x).exp() / -(-rate * upper).exp_m1()
            }
            Family::Uniform { upper } => 1.0 / upper,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { what: "density", value: x })
        }
    }

    /// Inverse cdf for `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.family {
            Family::Kumaraswamy { a, b } => {
                // x = (1 - (1-u)^{1/b})^{1/a}
                let inner = -((-u).ln_1p() / b).exp_m1();
                inner.powf(1.0 / a).min(1.0)
            }
            Family::TruncatedExponential { rate, upper } => {
                let mass = -(-rate * upper).exp_m1();
                (-(-u * mass).ln_1p() / rate).min(upper)
            }
            Family::Uniform { upper } => u * upper,
        }
    }

    /// Draws one bid by inverse-cdf sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    fn check_in_support(&self, what: &'static str, r: f64) -> Result<()> {
        if r.is_finite() && (0.0..=self.support_max()).contains(&r) {
            Ok(())
        } else {
            Err(Error::Domain { what, value: r })
        }
    }

    /// Expected revenue `r (1 - F(r))` of reserve `r` against one bidder.
    pub fn monopoly_revenue(&self, r: f64) -> Result<f64> {
        self.check_in_support("monopoly revenue", r)?;
        Ok(r * self.survival(r))
    }

    /// `1 - F(r) - r f(r)`.
    pub fn grad_monopoly_revenue(&self, r: f64) -> Result<f64> {
        self.check_in_support("monopoly revenue gradient", r)?;
        Ok(self.survival(r) - r * self.pdf(r)?)
    }

    /// `ψ(x) = x - (1 - F(x)) / f(x)`.
    pub fn virtual_value(&self, x: f64) -> Result<f64> {
        self.check_in_support("virtual value", x)?;
        let f = self.pdf(x)?;
        if f <= 0.0 {
            return Err(Error::Domain { what: "virtual value", value: x });
        }
        Ok(x - self.survival(x) / f)
    }

    /// `λ(x) = f(x) / (1 - F(x))`.
    pub fn hazard_rate(&self, x: f64) -> Result<f64> {
        self.check_in_support("hazard rate", x)?;
        let s = self.survival(x);
        if s <= 0.0 {
            return Err(Error::Domain { what: "hazard rate", value: x });
        }
        Ok(self.pdf(x)? / s)
    }

    /// Maximiser of the monopoly revenue, located to within `tol`.
    ///
    /// A grid pass (at spacing `tol / 10`, capped at [`ORACLE_GRID`] points)
    /// brackets the peak, golden-section search refines it.
    pub fn monopoly_price_oracle(&self, tol: f64) -> MonopolyPrice {
        assert!(tol > 0.0, "oracle tolerance must be positive");
        let top = self.support_max();
        let points = ((top * 10.0 / tol).ceil() as usize).clamp(101, ORACLE_GRID + 1);
        let Maximum { x, value } = grid_golden_max(
            |r| r * self.survival(r),
            0.0,
            top,
            points,
            (tol * 1e-3).max(1e-12),
        );
        MonopolyPrice { reserve: x, revenue: value }
    }

    /// Interior grid of `n` points strictly inside `(0, b̄)`.
    pub fn interior_grid(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let top = self.support_max();
        (1..=n).map(move |i| top * i as f64 / (n + 1) as f64)
    }

    /// Smallest observed slope of the hazard rate between consecutive grid
    /// points; a numerical estimate of the strong-MHR modulus.
    pub fn hazard_growth_estimate(&self) -> Result<f64> {
        let grid: Vec<f64> = self.interior_grid(VALIDATION_GRID).collect();
        let mut min_slope = f64::INFINITY;
        let mut prev = (grid[0], self.hazard_rate(grid[0])?);
        for &x in &grid[1..] {
            let h = self.hazard_rate(x)?;
            min_slope = min_slope.min((h - prev.1) / (x - prev.0));
            prev = (x, h);
        }
        Ok(min_slope)
    }

    /// Checks positivity of the density on the open support.
    pub fn check_positive_density(&self) -> Result<()> {
        for x in self.interior_grid(VALIDATION_GRID) {
            if self.pdf(x)? <= 0.0 {
                return Err(Error::Assumption(format!("density vanishes at {x}")));
            }
        }
        Ok(())
    }

    /// Checks that the virtual value is increasing (regularity).
    pub fn check_regular(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for x in self.interior_grid(VALIDATION_GRID) {
            let v = self.virtual_value(x)?;
            if v < prev - 1e-12 * prev.abs().max(1.0) {
                return Err(Error::Assumption(format!("virtual value decreases at {x}")));
            }
            prev = v;
        }
        Ok(())
    }

    /// Checks `λ(x₂) - λ(x₁) ≥ μ (x₂ - x₁)` between consecutive grid points,
    /// which implies it for every ordered pair.
    pub fn check_hazard_growth(&self, mu: f64) -> Result<()> {
        let slope = self.hazard_growth_estimate()?;
        if slope < mu * (1.0 - 1e-9) {
            return Err(Error::Assumption(format!(
                "hazard rate grows with slope {slope}, below the claimed modulus {mu}"
            )));
        }
        Ok(())
    }

    /// Runs the density, regularity and hazard-growth checks.
    pub fn validate(&self, mu: f64) -> Result<()> {
        self.check_positive_density()?;
        self.check_regular()?;
        self.check_hazard_growth(mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonopolyPrice {
    pub reserve: f64,
    pub revenue: f64,
}

/// Seller-side prior knowledge: hazard-growth modulus, revenue floor and the
/// compact reserve set `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConstants {
    pub mu: f64,
    pub c: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ProblemConstants {
    pub fn validate(&self, dist: &BidDistribution) -> Result<()> {
        let top = dist.support_max();
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= top) {
            return Err(Error::Assumption(format!(
                "reserve set [{}, {}] must satisfy 0 <= lo < hi <= {top}",
                self.lo, self.hi
            )));
        }
        if self.mu < 0.0 {
            return Err(Error::Assumption(format!("mu must be >= 0, got {}", self.mu)));
        }
        let span = self.hi - self.lo;
        for i in 0..VALIDATION_GRID {
            let r = self.lo + span * i as f64 / (VALIDATION_GRID - 1) as f64;
            let rev = dist.monopoly_revenue(r)?;
            if rev < self.c {
                return Err(Error::Assumption(format!(
                    "revenue {rev} at reserve {r} is below the floor {}",
                    self.c
                )));
            }
        }
        let star = dist.monopoly_price_oracle(1e-7).reserve;
        if star < self.lo || star > self.hi {
            return Err(Error::Assumption(format!(
                "monopoly price {star} lies outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        dist.check_hazard_growth(self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k(a: f64, b: f64) -> BidDistribution {
        BidDistribution::kumaraswamy(a, b).unwrap()
    }

    fn all_families() -> Vec<BidDistribution> {
        vec![
            k(1.0, 0.4),
            k(1.0, 1.0),
            k(1.0, 4.0),
            k(2.0, 3.0),
            BidDistribution::uniform(2.0).unwrap(),
            BidDistribution::truncated_exponential(1.5, 1.0).unwrap(),
        ]
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BidDistribution::kumaraswamy(0.0, 1.0).is_err());
        assert!(BidDistribution::kumaraswamy(1.0, -2.0).is_err());
        assert!(BidDistribution::uniform(f64::NAN).is_err());
        assert!(BidDistribution::truncated_exponential(1.0, 0.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(k(1.0, 0.4).cdf(0.0), 0.0);
        assert!((k(1.0, 1.0).cdf(0.3) - 0.3).abs() < 1e-15);
        // 1 - 0.5^0.4
        assert!((k(1.0, 0.4).cdf(0.5) - 0.242_141_716_744_801_4).abs() < 1e-12);
        assert_eq!(k(1.0, 0.4).cdf(-3.0), 0.0);
        assert_eq!(k(1.0, 0.4).cdf(7.0), 1.0);
    }

    #[test]
    fn cdf_matches_integrated_density() {
        for d in all_families() {
            let top = d.support_max();
            for &frac in &[0.1, 0.37, 0.5, 0.9] {
                let x = frac * top;
                let pdf = |t: f64| d.pdf(t).unwrap();
                let mass = integrate(pdf, 0.0, x, 1e-12).unwrap().value;
                assert!((mass - d.cdf(x)).abs() < 1e-8, "{d:?} at {x}");
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // (1 - x)^{-0.6} is integrable but singular at 1: stop just short and
        // add the analytic tail mass.
        for d in all_families() {
            let top = d.support_max();
            let cut = top * (1.0 - 1e-6);
            let mass = integrate(|t| d.pdf(t).unwrap(), 0.0, cut, 1e-12).unwrap().value
                + d.survival(cut);
            assert!((mass - 1.0).abs() < 1e-8, "{d:?}: {mass}");
        }
    }

    #[test]
    fn cdf_monotone_with_edges() {
        for d in all_families() {
            assert_eq!(d.cdf(0.0), 0.0);
            assert_eq!(d.cdf(d.support_max()), 1.0);
            let mut prev = 0.0;
            for x in d.interior_grid(1000) {
                let c = d.cdf(x);
                assert!(c >= prev);
                assert!((c + d.survival(x) - 1.0).abs() < 1e-14);
                prev = c;
            }
        }
    }

    #[test]
    fn quantile_examples() {
        assert!((k(1.0, 1.0).quantile(0.42) - 0.42).abs() < 1e-15);
        assert!((k(1.0, 0.4).quantile(0.242_141_716_744_801_4) - 0.5).abs() < 1e-12);
        for d in all_families() {
            assert_eq!(d.quantile(0.0), 0.0);
            for x in d.interior_grid(50) {
                assert!((d.quantile(d.cdf(x)) - x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampling_matches_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in all_families() {
            let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let c = d.cdf(x);
                    (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "{d:?}: KS {ks}");
            assert!(xs[0] >= 0.0 && xs[xs.len() - 1] <= d.support_max());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = k(1.0, 0.4);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn monopoly_revenue_examples() {
        for d in all_families() {
            assert_eq!(d.monopoly_revenue(0.0).unwrap(), 0.0);
            assert_eq!(d.monopoly_revenue(d.support_max()).unwrap(), 0.0);
            for x in d.interior_grid(100) {
                assert!(d.monopoly_revenue(x).unwrap() > 0.0);
            }
        }
        // 0.5 * 0.5^0.4
        let v = k(1.0, 0.4).monopoly_revenue(0.5).unwrap();
        assert!((v - 0.378_929_141_627_599_6).abs() < 1e-12);
        assert!(k(1.0, 0.4).monopoly_revenue(-0.1).is_err());
        assert!(k(1.0, 0.4).monopoly_revenue(1.1).is_err());
    }

    #[test]
    fn gradient_examples() {
        assert!(k(1.0, 1.0).grad_monopoly_revenue(0.5).unwrap().abs() < 1e-15);
        assert!(k(1.0, 0.4).grad_monopoly_revenue(1.0 / 1.4).unwrap().abs() < 1e-12);
        // b < 1 has an unbounded density at 1
        assert!(k(1.0, 0.4).grad_monopoly_revenue(1.0).is_err());
        assert!(k(0.5, 2.0).grad_monopoly_revenue(0.0).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for d in all_families() {
            let top = d.support_max();
            for _ in 0..100 {
                let r = top * rng.random_range(0.01..0.99);
                let fd = (d.monopoly_revenue(r + h).unwrap() - d.monopoly_revenue(r - h).unwrap())
                    / (2.0 * h);
                let g = d.grad_monopoly_revenue(r).unwrap();
                assert!((g - fd).abs() < 1e-6, "{d:?} at {r}: {g} vs {fd}");
                let psi = d.virtual_value(r).unwrap();
                assert!((g + psi * d.pdf(r).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn virtual_value_examples() {
        assert!((k(1.0, 1.0).virtual_value(0.4).unwrap() + 0.2).abs() < 1e-15);
        for &b in &[0.4, 1.0, 4.0] {
            let d = k(1.0, b);
            for x in d.interior_grid(100) {
                let closed = x - (1.0 - x) / b;
                assert!((d.virtual_value(x).unwrap() - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hazard_rate_examples() {
        assert!((k(1.0, 1.0).hazard_rate(0.0).unwrap() - 1.0).abs() < 1e-15);
        for &b in &[0.4, 1.0, 4.0] {
            let d = k(1.0, b);
            for x in d.interior_grid(100) {
                assert!((d.hazard_rate(x).unwrap() - b / (1.0 - x)).abs() < 1e-9 * b / (1.0 - x));
            }
        }
        assert!(k(1.0, 1.0).hazard_rate(1.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let m = k(1.0, 1.0).monopoly_price_oracle(1e-7);
        assert!((m.reserve - 0.5).abs() < 1e-7);
        assert!((m.revenue - 0.25).abs() < 1e-12);

        let m = k(1.0, 0.4).monopoly_price_oracle(1e-7);
        assert!((m.reserve - 1.0 / 1.4).abs() < 1e-7);
        // (1/1.4) * (0.4/1.4)^0.4 evaluated at 30 digits
        assert!((m.revenue - 0.432_757_642_824_759_2).abs() < 1e-12);

        let m = k(1.0, 4.0).monopoly_price_oracle(1e-7);
        assert!((m.reserve - 0.2).abs() < 1e-7);
        assert!((m.revenue - 0.08192).abs() < 1e-12);
    }

    fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn three_routes_to_the_monopoly_price_agree() {
        for d in all_families() {
            let top = d.support_max();
            let (lo, hi) = (top * 1e-6, top * (1.0 - 1e-6));
            let psi_root = bisect_root(|x| d.virtual_value(x).unwrap(), lo, hi);
            let grad_root = bisect_root(|x| -d.grad_monopoly_revenue(x).unwrap(), lo, hi);
            let oracle = d.monopoly_price_oracle(1e-7).reserve;
            assert!((psi_root - oracle).abs() < 1e-6, "{d:?}");
            assert!((grad_root - oracle).abs() < 1e-6, "{d:?}");
        }
    }

    #[test]
    fn gradient_changes_sign_once() {
        for d in all_families() {
            let signs: Vec<bool> = d
                .interior_grid(VALIDATION_GRID)
                .map(|r| d.grad_monopoly_revenue(r).unwrap() > 0.0)
                .collect();
            let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
            assert_eq!(changes, 1, "{d:?}");
        }
    }

    #[test]
    fn log_revenue_strongly_concave_for_kumaraswamy() {
        for &b in &[0.4, 1.0, 4.0] {
            let d = k(1.0, b);
            let h = 1e-3;
            let max_second = d
                .interior_grid(999)
                .filter(|&r| r > 2.0 * h && r < 1.0 - 2.0 * h)
                .map(|r| {
                    let l = |x: f64| d.monopoly_revenue(x).unwrap().ln();
                    (l(r + h) - 2.0 * l(r) + l(r - h)) / (h * h)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max_second < -0.1, "b = {b}: {max_second}");
        }
    }

    #[test]
    fn assumption_validators() {
        let d = k(1.0, 0.4);
        d.validate(0.4).unwrap();
        assert!(d.check_hazard_growth(0.5).is_err());
        let est = d.hazard_growth_estimate().unwrap();
        assert!((est - 0.4).abs() < 1e-3, "{est}");
        for d in all_families() {
            d.check_positive_density().unwrap();
            d.check_regular().unwrap();
        }
    }

    #[test]
    fn problem_constants_validation() {
        let d = k(1.0, 0.4);
        let ok = ProblemConstants { mu: 0.4, c: 0.25, lo: 0.3, hi: 0.95 };
        ok.validate(&d).unwrap();
        let low_floor = ProblemConstants { c: 0.3, ..ok };
        assert!(low_floor.validate(&d).is_err());
        let misses_star = ProblemConstants { lo: 0.1, hi: 0.6, c: 0.0, ..ok };
        assert!(misses_star.validate(&d).is_err());
        let inverted = ProblemConstants { lo: 0.9, hi: 0.2, ..ok };
        assert!(inverted.validate(&d).is_err());
    }

    #[test]
    fn config_round_trip() {
        let d: BidDistribution = toml::from_str("family = \"kumaraswamy\"\na = 1.0\nb = 0.4\n").unwrap();
        assert_eq!(d, k(1.0, 0.4));
        let text = toml::to_string(&d).unwrap();
        assert_eq!(toml::from_str::<BidDistribution>(&text).unwrap(), d);
        assert!(toml::from_str::<BidDistribution>("family = \"kumaraswamy\"\na = 1.0\nb = -1.0\n").is_err());
        assert!(toml::from_str::<BidDistribution>("family = \"kumaraswamy\"\na = 1.0\nb = 1.0\nc = 2\n").is_err());
    }
}
