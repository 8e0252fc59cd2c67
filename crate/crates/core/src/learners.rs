//! Online reserve-price learners.
//!
//! All learners share the same protocol: [`ReserveLearner::reserve`] is the
//! price posted for the next auction, [`ReserveLearner::observe`] feeds the
//! bid that auction revealed. The two gradient learners keep a fixed-size
//! state; the ERM baselines keep the bid history (or a histogram of it).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GaussianKernel, KernelSchedule, SmoothingKernel};

/// Clamps `r` into `[lo, hi]`.
pub fn project(r: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    r.max(lo).min(hi)
}

/// Compact set of admissible reserves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidParameter(format!("invalid projection interval [{lo}, {hi}]")))
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn project(&self, r: f64) -> f64 {
        project(r, self.lo, self.hi)
    }

    pub fn contains(&self, r: f64) -> bool {
        (self.lo..=self.hi).contains(&r)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> [f64; 2] {
        [i.lo, i.hi]
    }
}

/// Step sizes `γ_t = nu · t^{-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub nu: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl StepSchedule {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        let s = StepSchedule { nu, alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("step prefactor must be >= 0, got {}", self.nu)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "step exponent must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn at(&self, t: u64) -> f64 {
        if self.alpha == 0.0 {
            self.nu
        } else {
            self.nu * (t as f64).powf(-self.alpha)
        }
    }

    /// Largest prefactor covered by the finite-time rate guarantee, `(2cμ)⁻¹`.
    pub fn rate_prefactor_limit(mu: f64, c: f64) -> f64 {
        1.0 / (2.0 * c * mu)
    }

    /// Warning text when `nu` exceeds `(2cμ)⁻¹`; the learner still runs.
    pub fn rate_condition_warning(&self, mu: f64, c: f64) -> Option<String> {
        let limit = Self::rate_prefactor_limit(mu, c);
        (self.nu > limit).then(|| {
            format!("step prefactor {} exceeds (2 c mu)^-1 = {limit}; the rate guarantee does not apply", self.nu)
        })
    }
}

pub trait ReserveLearner {
    /// Reserve posted for the next auction.
    fn reserve(&self) -> f64;

    /// Number of bids observed so far.
    fn steps(&self) -> u64;

    /// Updates the state with the bid revealed by the last auction.
    fn observe(&mut self, bid: f64);

    /// Feeds a batch of bids; equivalent to calling `observe` for each.
    fn warm_start(&mut self, bids: &[f64]) {
        for &b in bids {
            self.observe(b);
        }
    }
}

/// Projected online gradient ascent on a fixed-kernel surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvOga<K = GaussianKernel> {
    kernel: K,
    step: StepSchedule,
    projection: Interval,
    reserve: f64,
    t: u64,
}

impl<K: SmoothingKernel> ConvOga<K> {
    /// Starts at `r0` (projected), or at the midpoint of `projection`.
    pub fn new(kernel: K, step: StepSchedule, projection: Interval, r0: Option<f64>) -> Self {
        let reserve = projection.project(r0.unwrap_or_else(|| projection.midpoint()));
        ConvOga { kernel, step, projection, reserve, t: 0 }
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }
}

impl<K: SmoothingKernel> ReserveLearner for ConvOga<K> {
    fn reserve(&self) -> f64 {
        self.reserve
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn observe(&mut self, bid: f64) {
        self.t += 1;
        let gamma = self.step.at(self.t);
        let grad = self.kernel.convolved_gradient(self.reserve, bid);
        self.reserve = self.projection.project(self.reserve + gamma * grad);
    }
}

/// Projected online gradient ascent with a Gaussian kernel that narrows over
/// time. Each step builds `k_t` from the schedule; nothing else is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VConvOga {
    kernels: KernelSchedule,
    step: StepSchedule,
    projection: Interval,
    reserve: f64,
    t: u64,
}

impl VConvOga {
    pub fn new(kernels: KernelSchedule, step: StepSchedule, projection: Interval, r0: Option<f64>) -> Self {
        let reserve = projection.project(r0.unwrap_or_else(|| projection.midpoint()));
        VConvOga { kernels, step, projection, reserve, t: 0 }
    }

    /// Kernel that will be used by the next update.
    pub fn next_kernel(&self) -> GaussianKernel {
        self.kernels.kernel_at(self.t + 1)
    }
}

impl ReserveLearner for VConvOga {
    fn reserve(&self) -> f64 {
        self.reserve
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn observe(&mut self, bid: f64) {
        self.t += 1;
        let kernel = self.kernels.kernel_at(self.t);
        let gamma = self.step.at(self.t);
        let grad = kernel.convolved_gradient(self.reserve, bid);
        self.reserve = self.projection.project(self.reserve + gamma * grad);
    }
}

/// Full empirical-revenue maximisation over the sorted bid history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Erm {
    bids: Vec<f64>,
    projection: Interval,
    reserve: f64,
}

impl Erm {
    pub fn new(projection: Interval, r0: Option<f64>) -> Self {
        let reserve = projection.project(r0.unwrap_or_else(|| projection.midpoint()));
        Erm { bids: Vec::new(), projection, reserve }
    }

    /// Empirical revenue of the current reserve.
    pub fn empirical_revenue(&self) -> f64 {
        empirical_revenue(&self.bids, self.reserve)
    }

    /// One ascending sweep over the sorted bids. Candidates are the bids inside
    /// the projection set plus its upper end; ties go to the smaller reserve.
    fn refit(&mut self) {
        let n = self.bids.len();
        if n == 0 {
            return;
        }
        let (lo, hi) = (self.projection.lo(), self.projection.hi());
        let mut best_r = f64::NAN;
        let mut best_v = f64::NEG_INFINITY;
        let mut first_equal = 0;
        for i in 0..n {
            let b = self.bids[i];
            if i > 0 && self.bids[i - 1] < b {
                first_equal = i;
            }
            if b < lo {
                continue;
            }
            if b > hi {
                break;
            }
            // bids at or above b: everything from the first copy of b on
            let v = b * (n - first_equal) as f64;
            if v > best_v {
                best_v = v;
                best_r = b;
            }
        }
        let above_hi = n - self.bids.partition_point(|&b| b < hi);
        let v_hi = hi * above_hi as f64;
        if v_hi > best_v {
            best_r = hi;
        }
        self.reserve = best_r;
    }
}

/// `(1/t) Σ r 1{r ≤ b_i}`.
pub fn empirical_revenue(bids: &[f64], r: f64) -> f64 {
    if bids.is_empty() {
        return 0.0;
    }
    r * bids.iter().filter(|&&b| r <= b).count() as f64 / bids.len() as f64
}

impl ReserveLearner for Erm {
    fn reserve(&self) -> f64 {
        self.reserve
    }

    fn steps(&self) -> u64 {
        self.bids.len() as u64
    }

    fn observe(&mut self, bid: f64) {
        let at = self.bids.partition_point(|&b| b <= bid);
        self.bids.insert(at, bid);
        self.refit();
    }

    fn warm_start(&mut self, bids: &[f64]) {
        self.bids.extend_from_slice(bids);
        self.bids.sort_by(f64::total_cmp);
        self.refit();
    }
}

/// How the discrete-ERM histogram is refined as bids arrive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    /// Re-bin to `⌈√t⌉` cells whenever `t` reaches a power of two.
    Doubling,
    /// Keep this many cells forever.
    Fixed(usize),
}

/// ERM restricted to a regular grid over `[0, b̄]`, fed by a histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteErm {
    upper: f64,
    policy: GridPolicy,
    /// Bid mass per cell; fractional after re-binning.
    counts: Vec<f64>,
    projection: Interval,
    reserve: f64,
    t: u64,
}

impl DiscreteErm {
    pub fn new(upper: f64, policy: GridPolicy, projection: Interval, r0: Option<f64>) -> Result<Self> {
        if !(upper.is_finite() && upper > 0.0) {
            return Err(Error::InvalidParameter(format!("grid upper end must be > 0, got {upper}")));
        }
        let cells = match policy {
            GridPolicy::Doubling => 1,
            GridPolicy::Fixed(0) => {
                return Err(Error::InvalidParameter("discrete ERM needs at least one cell".into()))
            }
            GridPolicy::Fixed(n) => n,
        };
        let reserve = projection.project(r0.unwrap_or_else(|| projection.midpoint()));
        Ok(DiscreteErm { upper, policy, counts: vec![0.0; cells], projection, reserve, t: 0 })
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.upper / self.counts.len() as f64
    }

    pub fn grid_point(&self, j: usize) -> f64 {
        if j == self.counts.len() {
            self.upper
        } else {
            self.upper * j as f64 / self.counts.len() as f64
        }
    }

    fn cell_of(&self, bid: f64) -> usize {
        let n = self.counts.len();
        ((bid / self.upper * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    /// Spreads each old cell's mass over the new cells in proportion to overlap.
    fn rebin(&mut self, cells: usize) {
        let old_w = self.cell_width();
        let new_w = self.upper / cells as f64;
        let mut fresh = vec![0.0; cells];
        for (i, &mass) in self.counts.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let (a, b) = (i as f64 * old_w, (i + 1) as f64 * old_w);
            let first = ((a / new_w).floor() as usize).min(cells - 1);
            let last = (((b / new_w).ceil() as usize).max(first + 1)).min(cells);
            for (j, slot) in fresh.iter_mut().enumerate().take(last).skip(first) {
                let overlap = (b.min((j + 1) as f64 * new_w) - a.max(j as f64 * new_w)).max(0.0);
                *slot += mass * overlap / old_w;
            }
        }
        self.counts = fresh;
    }

    fn refit(&mut self) {
        let n = self.counts.len();
        let mut best_r = f64::NAN;
        let mut best_v = f64::NEG_INFINITY;
        // suffix mass of cells j.. = mass of bids at or above grid point j
        let mut above = 0.0;
        let mut values = vec![0.0; n + 1];
        for j in (0..=n).rev() {
            if j < n {
                above += self.counts[j];
            }
            values[j] = self.grid_point(j) * above;
        }
        for (j, &v) in values.iter().enumerate() {
            let g = self.grid_point(j);
            if self.projection.contains(g) && v > best_v {
                best_v = v;
                best_r = g;
            }
        }
        self.reserve = if best_r.is_nan() { self.projection.project(self.reserve) } else { best_r };
    }
}

impl ReserveLearner for DiscreteErm {
    fn reserve(&self) -> f64 {
        self.reserve
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn observe(&mut self, bid: f64) {
        self.t += 1;
        if self.policy == GridPolicy::Doubling && self.t.is_power_of_two() {
            let target = (self.t as f64).sqrt().ceil() as usize;
            if target > self.counts.len() {
                self.rebin(target);
            }
        }
        let cell = self.cell_of(bid);
        self.counts[cell] += 1.0;
        self.refit();
    }
}

/// Any of the supported learners behind one type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learner {
    ConvOga(ConvOga<GaussianKernel>),
    VConvOga(VConvOga),
    Erm(Erm),
    DiscreteErm(DiscreteErm),
}

impl Learner {
    /// Size in bytes of the binary-serialised state.
    pub fn state_bytes(&self) -> u64 {
        bincode::serialized_size(self).expect("learner state is serialisable")
    }

    pub fn name(&self) -> &'static str {
        match self {
            Learner::ConvOga(_) => "conv_oga",
            Learner::VConvOga(_) => "v_conv_oga",
            Learner::Erm(_) => "erm",
            Learner::DiscreteErm(_) => "discrete_erm",
        }
    }
}

impl ReserveLearner for Learner {
    fn reserve(&self) -> f64 {
        match self {
            Learner::ConvOga(l) => l.reserve(),
            Learner::VConvOga(l) => l.reserve(),
            Learner::Erm(l) => l.reserve(),
            Learner::DiscreteErm(l) => l.reserve(),
        }
    }

    fn steps(&self) -> u64 {
        match self {
            Learner::ConvOga(l) => l.steps(),
            Learner::VConvOga(l) => l.steps(),
            Learner::Erm(l) => l.steps(),
            Learner::DiscreteErm(l) => l.steps(),
        }
    }

    fn observe(&mut self, bid: f64) {
        match self {
            Learner::ConvOga(l) => l.observe(bid),
            Learner::VConvOga(l) => l.observe(bid),
            Learner::Erm(l) => l.observe(bid),
            Learner::DiscreteErm(l) => l.observe(bid),
        }
    }

    fn warm_start(&mut self, bids: &[f64]) {
        match self {
            Learner::ConvOga(l) => l.warm_start(bids),
            Learner::VConvOga(l) => l.warm_start(bids),
            Learner::Erm(l) => l.warm_start(bids),
            Learner::DiscreteErm(l) => l.warm_start(bids),
        }
    }
}

/// Learner family plus hyper-parameters; builds fresh [`Learner`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerSpec {
    ConvOga { kernel: KernelSchedule, step: StepSchedule },
    VConvOga { kernel: KernelSchedule, step: StepSchedule },
    Erm,
    DiscreteErm { grid: GridPolicy },
}

impl LearnerSpec {
    /// `upper` is the grid end for discrete ERM (the support maximum).
    pub fn build(&self, projection: Interval, r0: Option<f64>, upper: f64) -> Result<Learner> {
        Ok(match self {
            LearnerSpec::ConvOga { kernel, step } => {
                kernel.validate()?;
                step.validate()?;
                Learner::ConvOga(ConvOga::new(GaussianKernel::new(kernel.sigma0)?, *step, projection, r0))
            }
            LearnerSpec::VConvOga { kernel, step } => {
                kernel.validate()?;
                step.validate()?;
                Learner::VConvOga(VConvOga::new(*kernel, *step, projection, r0))
            }
            LearnerSpec::Erm => Learner::Erm(Erm::new(projection, r0)),
            LearnerSpec::DiscreteErm { grid } => {
                Learner::DiscreteErm(DiscreteErm::new(upper, *grid, projection, r0)?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::ConvOga { .. } => "conv_oga",
            LearnerSpec::VConvOga { .. } => "v_conv_oga",
            LearnerSpec::Erm => "erm",
            LearnerSpec::DiscreteErm { .. } => "discrete_erm",
        }
    }
}
