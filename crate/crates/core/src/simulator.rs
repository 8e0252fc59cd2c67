//! Bid-stream simulation, regret metrics, aggregation across seeds and the
//! update-cost benchmark.

use std::collections::BTreeSet;
use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{BidDistribution, MonopolyPrice};
use crate::error::{Error, Result};
use crate::learners::{Interval, LearnerSpec, ReserveLearner};

/// Accuracy of the per-phase monopoly price.
pub const ORACLE_TOL: f64 = 1e-9;

/// Steps up to which the automatic schedule records every step.
pub const DENSE_RECORD_STEPS: u64 = 1_000;

/// Recorded points per decade beyond [`DENSE_RECORD_STEPS`].
pub const RECORDS_PER_DECADE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub distribution: BidDistribution,
    pub length: u64,
}

/// Piecewise-stationary stream: each phase draws i.i.d. bids from its law.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    phases: Vec<Phase>,
}

impl StreamSpec {
    /// Checks every phase law against the regularity assumptions with hazard
    /// modulus `mu` (0 only asks for a nondecreasing hazard rate).
    pub fn new(phases: Vec<Phase>, mu: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::Config("a stream needs at least one phase".into()));
        }
        for (i, p) in phases.iter().enumerate() {
            if p.length == 0 {
                return Err(Error::Config(format!("phase {i} has zero length")));
            }
            p.distribution.validate(mu)?;
        }
        Ok(StreamSpec { phases })
    }

    pub fn stationary(distribution: BidDistribution, steps: u64) -> Result<Self> {
        Self::new(vec![Phase { distribution, length: steps }], 0.0)
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn total_steps(&self) -> u64 {
        self.phases.iter().map(|p| p.length).sum()
    }

    pub fn switches(&self) -> usize {
        self.phases.len() - 1
    }

    /// Smallest support maximum over the phases.
    pub fn common_support_max(&self) -> f64 {
        self.phases.iter().map(|p| p.distribution.support_max()).fold(f64::INFINITY, f64::min)
    }

    pub fn monopoly_prices(&self) -> Vec<MonopolyPrice> {
        self.phases.iter().map(|p| p.distribution.monopoly_price_oracle(ORACLE_TOL)).collect()
    }
}

/// Which steps end up in the per-seed output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSchedule {
    /// Every step up to 10³, then about 100 log-spaced steps per decade.
    Auto,
    /// Multiples of the stride, plus the first and last step.
    Stride(u64),
}

impl RecordSchedule {
    /// Recorded steps in increasing order, always including 1 and `total`.
    pub fn steps(&self, total: u64) -> Vec<u64> {
        let mut set = BTreeSet::new();
        match *self {
            RecordSchedule::Auto => {
                set.extend(1..=total.min(DENSE_RECORD_STEPS));
                let base = DENSE_RECORD_STEPS as f64;
                for k in 1.. {
                    let t = (base * 10f64.powf(k as f64 / RECORDS_PER_DECADE as f64)).round() as u64;
                    if t > total {
                        break;
                    }
                    set.insert(t);
                }
            }
            RecordSchedule::Stride(s) => {
                let s = s.max(1);
                set.extend((s..=total).step_by(s as usize));
            }
        }
        if total > 0 {
            set.insert(1);
            set.insert(total);
        }
        set.into_iter().collect()
    }
}

/// Metrics at one step, taken before the learner sees that step's bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub phase_id: usize,
    pub reserve: f64,
    pub bid: f64,
    pub instant_revenue: f64,
    /// `Π(r*) − Π(r_t)` under the active law.
    pub expected_gap: f64,
    pub sq_error: f64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub stream: StreamSpec,
    pub learner: LearnerSpec,
    pub projection: Interval,
    pub r0: Option<f64>,
    pub seeds: Vec<u64>,
    pub record: RecordSchedule,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        let top = self.stream.common_support_max();
        if self.projection.lo() < 0.0 || self.projection.hi() > top {
            return Err(Error::Config(format!(
                "projection [{}, {}] must lie inside [0, {top}]",
                self.projection.lo(),
                self.projection.hi()
            )));
        }
        if let Some(r0) = self.r0 {
            if !r0.is_finite() {
                return Err(Error::Config(format!("r0 must be finite, got {r0}")));
            }
        }
        self.learner.build(self.projection, self.r0, top)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<TrajectoryRecord>,
    /// Dynamic regret over all steps, recorded or not.
    pub regret: f64,
    pub phase_regret: Vec<f64>,
}

/// Runs every seed on a pool of `jobs` threads; results are sorted by seed.
pub fn run_experiment(exp: &Experiment, jobs: usize) -> Result<Vec<SeedRun>> {
    exp.validate()?;
    let optima = exp.stream.monopoly_prices();
    let schedule = exp.record.steps(exp.stream.total_steps());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut runs = pool.install(|| {
        exp.seeds
            .par_iter()
            .map(|&seed| run_seed(exp, seed, &optima, &schedule))
            .collect::<Result<Vec<_>>>()
    })?;
    runs.sort_by_key(|r| r.seed);
    Ok(runs)
}

fn run_seed(exp: &Experiment, seed: u64, optima: &[MonopolyPrice], schedule: &[u64]) -> Result<SeedRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = exp.learner.build(exp.projection, exp.r0, exp.stream.common_support_max())?;
    let mut records = Vec::with_capacity(schedule.len());
    let mut next = schedule.iter().copied().peekable();
    let mut phase_regret = vec![0.0; exp.stream.phases.len()];
    let mut t = 0u64;
    for (phase_id, phase) in exp.stream.phases.iter().enumerate() {
        let dist = &phase.distribution;
        let opt = optima[phase_id];
        for _ in 0..phase.length {
            t += 1;
            let r = learner.reserve();
            let b = dist.sample(&mut rng);
            let gap = opt.revenue - dist.monopoly_revenue(r)?;
            phase_regret[phase_id] += gap;
            if next.peek() == Some(&t) {
                next.next();
                records.push(TrajectoryRecord {
                    t,
                    phase_id,
                    reserve: r,
                    bid: b,
                    instant_revenue: if r <= b { r } else { 0.0 },
                    expected_gap: gap,
                    sq_error: (r - opt.reserve).powi(2),
                });
            }
            learner.observe(b);
        }
    }
    Ok(SeedRun { seed, records, regret: phase_regret.iter().sum(), phase_regret })
}

/// `Σ_t expected_gap` over a complete trajectory.
pub fn dynamic_regret(records: &[TrajectoryRecord], stream: &StreamSpec) -> Result<f64> {
    let expected = stream.total_steps();
    let complete = records.len() as u64 == expected && records.iter().zip(1..).all(|(r, t)| r.t == t);
    if !complete {
        let found = records.iter().zip(1..).take_while(|(r, t)| r.t == *t).count() as u64;
        return Err(Error::MissingSteps { expected, found });
    }
    Ok(records.iter().map(|r| r.expected_gap).sum())
}

/// Mean dynamic regret across seeds and its standard error.
pub fn mean_regret(runs: &[SeedRun]) -> (f64, f64) {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.regret).sum::<f64>() / n;
    if runs.len() < 2 {
        return (mean, 0.0);
    }
    let var = runs.iter().map(|r| (r.regret - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Reserve,
    InstantRevenue,
    ExpectedGap,
    SqError,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Reserve, Metric::InstantRevenue, Metric::ExpectedGap, Metric::SqError];

    pub fn of(&self, r: &TrajectoryRecord) -> f64 {
        match self {
            Metric::Reserve => r.reserve,
            Metric::InstantRevenue => r.instant_revenue,
            Metric::ExpectedGap => r.expected_gap,
            Metric::SqError => r.sq_error,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Reserve => "reserve",
            Metric::InstantRevenue => "instant_revenue",
            Metric::ExpectedGap => "expected_gap",
            Metric::SqError => "sq_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: u64,
    pub metric: Metric,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Pointwise cross-seed summaries, ordered by step then metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
}

impl Aggregate {
    /// `(t, mean)` pairs for one metric.
    pub fn mean_curve(&self, metric: Metric) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| (r.t as f64, r.mean)).collect()
    }

    /// Log-log slope of the mean curve over `t ∈ [t_lo, t_hi]`.
    pub fn slope(&self, metric: Metric, t_lo: f64, t_hi: f64) -> Result<f64> {
        let pts: Vec<_> =
            self.mean_curve(metric).into_iter().filter(|&(t, _)| (t_lo..=t_hi).contains(&t)).collect();
        loglog_slope(&pts)
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn aggregate(runs: &[SeedRun]) -> Result<Aggregate> {
    let first = runs.first().ok_or_else(|| Error::Config("nothing to aggregate".into()))?;
    for other in &runs[1..] {
        let same = other.records.len() == first.records.len()
            && other.records.iter().zip(&first.records).all(|(a, b)| a.t == b.t);
        if !same {
            let stride = |rs: &[TrajectoryRecord]| rs.get(1).map_or(0, |r| r.t) - rs.first().map_or(0, |r| r.t);
            return Err(Error::InconsistentStrides {
                first: stride(&first.records),
                other: stride(&other.records),
            });
        }
    }
    let mut rows = Vec::with_capacity(first.records.len() * Metric::ALL.len());
    let mut buf = Vec::with_capacity(runs.len());
    for (i, rec) in first.records.iter().enumerate() {
        for metric in Metric::ALL {
            buf.clear();
            buf.extend(runs.iter().map(|r| metric.of(&r.records[i])));
            let mean = buf.iter().sum::<f64>() / buf.len() as f64;
            buf.sort_by(f64::total_cmp);
            rows.push(AggregateRow { t: rec.t, metric, mean, q10: quantile(&buf, 0.1), q90: quantile(&buf, 0.9) });
        }
    }
    Ok(Aggregate { rows })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs two positive points, got {}",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub learner: String,
    pub t: u64,
    pub ns_per_update: f64,
    pub state_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    /// Updates timed per measurement.
    pub batch: u64,
    /// Measurements per checkpoint; the fastest one is reported.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { batch: 10_000, repeats: 5, seed: 0 }
    }
}

/// Warms a learner on uniform bids over `[0, upper]` up to each checkpoint,
/// records its state size, then times a batch of updates on a copy.
pub fn update_cost_bench(
    spec: &LearnerSpec,
    projection: Interval,
    upper: f64,
    checkpoints: &[u64],
    settings: BenchSettings,
) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut learner = spec.build(projection, None, upper)?;
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    let mut rows = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let missing = t.saturating_sub(learner.steps());
        let warm: Vec<f64> = (0..missing).map(|_| rng.random::<f64>() * upper).collect();
        learner.warm_start(&warm);
        let state_bytes = learner.state_bytes();
        let batch: Vec<f64> = (0..settings.batch).map(|_| rng.random::<f64>() * upper).collect();
        let mut best = f64::INFINITY;
        for _ in 0..settings.repeats.max(1) {
            let mut probe = learner.clone();
            let start = Instant::now();
            for &b in &batch {
                probe.observe(black_box(b));
            }
            black_box(probe.reserve());
            best = best.min(start.elapsed().as_nanos() as f64);
        }
        rows.push(BenchRow {
            learner: spec.name().to_string(),
            t,
            ns_per_update: best / settings.batch.max(1) as f64,
            state_bytes,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSchedule;
    use crate::learners::{GridPolicy, StepSchedule};

    fn kumaraswamy(b: f64) -> BidDistribution {
        BidDistribution::kumaraswamy(1.0, b).unwrap()
    }

    fn frozen() -> LearnerSpec {
        LearnerSpec::ConvOga { kernel: KernelSchedule::fixed(0.1).unwrap(), step: StepSchedule::constant(0.0).unwrap() }
    }

    fn experiment(stream: StreamSpec, learner: LearnerSpec, r0: Option<f64>, seeds: Vec<u64>) -> Experiment {
        Experiment {
            stream,
            learner,
            projection: Interval::new(0.0, 1.0).unwrap(),
            r0,
            seeds,
            record: RecordSchedule::Stride(1),
        }
    }

    fn record(t: u64, gap: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            phase_id: 0,
            reserve: 0.0,
            bid: 0.0,
            instant_revenue: 0.0,
            expected_gap: gap,
            sq_error: 0.0,
        }
    }

    #[test]
    fn auto_schedule_is_dense_then_log_spaced() {
        let steps = RecordSchedule::Auto.steps(100_000);
        assert_eq!(&steps[..1000], &(1..=1000).collect::<Vec<_>>()[..]);
        assert_eq!(*steps.last().unwrap(), 100_000);
        let tail = steps.len() - 1000;
        assert!((195..=205).contains(&tail), "{tail}");
        assert_eq!(RecordSchedule::Auto.steps(10), (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn stride_schedule_includes_ends() {
        assert_eq!(RecordSchedule::Stride(4).steps(10), vec![1, 4, 8, 10]);
        assert_eq!(RecordSchedule::Stride(1).steps(3), vec![1, 2, 3]);
    }

    #[test]
    fn frozen_learner_keeps_initial_reserve() {
        let stream = StreamSpec::stationary(kumaraswamy(0.4), 500).unwrap();
        let runs = run_experiment(&experiment(stream, frozen(), Some(0.3), vec![1, 2]), 2).unwrap();
        for run in &runs {
            assert!(run.records.iter().all(|r| r.reserve == 0.3));
        }
    }

    #[test]
    fn oracle_play_has_zero_regret_and_zero_play_loses_everything() {
        let d = kumaraswamy(0.4);
        let opt = d.monopoly_price_oracle(ORACLE_TOL);
        let stream = StreamSpec::stationary(d, 200).unwrap();
        let pinned = run_experiment(&experiment(stream.clone(), frozen(), Some(opt.reserve), vec![5]), 1).unwrap();
        assert_eq!(dynamic_regret(&pinned[0].records, &stream).unwrap(), 0.0);

        let zero = run_experiment(&experiment(stream.clone(), frozen(), Some(0.0), vec![5]), 1).unwrap();
        let r = dynamic_regret(&zero[0].records, &stream).unwrap();
        assert!((r - 200.0 * opt.revenue).abs() < 1e-9);
    }

    #[test]
    fn missing_steps_are_rejected() {
        let stream = StreamSpec::stationary(kumaraswamy(1.0), 3).unwrap();
        let recs = vec![record(1, 0.1), record(3, 0.1)];
        assert!(matches!(
            dynamic_regret(&recs, &stream),
            Err(Error::MissingSteps { expected: 3, found: 1 })
        ));
        let full = vec![record(1, 0.1), record(2, 0.2), record(3, 0.3)];
        assert!((dynamic_regret(&full, &stream).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn regret_is_additive_over_phases() {
        let stream = StreamSpec::new(
            vec![
                Phase { distribution: kumaraswamy(4.0), length: 300 },
                Phase { distribution: kumaraswamy(0.4), length: 300 },
                Phase { distribution: kumaraswamy(1.0), length: 300 },
            ],
            0.0,
        )
        .unwrap();
        let spec = LearnerSpec::ConvOga {
            kernel: KernelSchedule::fixed(0.05).unwrap(),
            step: StepSchedule::constant(0.02).unwrap(),
        };
        let runs = run_experiment(&experiment(stream.clone(), spec, None, vec![11]), 1).unwrap();
        let run = &runs[0];
        let total = dynamic_regret(&run.records, &stream).unwrap();
        let by_phase: f64 = run.phase_regret.iter().sum();
        assert!((total - by_phase).abs() < 1e-9);
        assert!((total - run.regret).abs() < 1e-9);
        for (p, &pr) in run.phase_regret.iter().enumerate() {
            let direct: f64 = run.records.iter().filter(|r| r.phase_id == p).map(|r| r.expected_gap).sum();
            assert!((direct - pr).abs() < 1e-9);
        }
    }

    #[test]
    fn gaps_and_errors_are_nonnegative() {
        let stream = StreamSpec::stationary(kumaraswamy(0.4), 2_000).unwrap();
        let spec = LearnerSpec::VConvOga {
            kernel: KernelSchedule::new(1.0, 0.5).unwrap(),
            step: StepSchedule::new(1.0, 1.0).unwrap(),
        };
        for run in run_experiment(&experiment(stream, spec, None, vec![1, 2, 3]), 3).unwrap() {
            for r in &run.records {
                assert!(r.expected_gap >= -1e-9, "{r:?}");
                assert!(r.sq_error >= 0.0);
            }
        }
    }

    #[test]
    fn reserve_never_depends_on_current_bid() {
        // Replaying with the bid sequence changed from some step on must leave
        // the reserves up to and including that step untouched.
        let spec = LearnerSpec::VConvOga {
            kernel: KernelSchedule::new(1.0, 0.5).unwrap(),
            step: StepSchedule::new(1.0, 1.0).unwrap(),
        };
        let proj = Interval::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bids: Vec<f64> = (0..400).map(|_| rng.random()).collect();
        let reserves = |bids: &[f64]| {
            let mut l = spec.build(proj, None, 1.0).unwrap();
            bids.iter()
                .map(|&b| {
                    let r = l.reserve();
                    l.observe(b);
                    r
                })
                .collect::<Vec<_>>()
        };
        let base = reserves(&bids);
        let cut = 200;
        let mut permuted = bids.clone();
        permuted[cut..].reverse();
        let other = reserves(&permuted);
        assert_eq!(&base[..=cut], &other[..=cut]);
        assert_ne!(base[cut + 1..], other[cut + 1..]);
    }

    #[test]
    fn seed_runs_are_deterministic_and_sorted() {
        let stream = StreamSpec::stationary(kumaraswamy(0.4), 1_000).unwrap();
        let spec = LearnerSpec::Erm;
        let exp = experiment(stream, spec, None, vec![9, 3, 7, 1]);
        let a = run_experiment(&exp, 1).unwrap();
        let b = run_experiment(&exp, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 3, 7, 9]);
    }

    #[test]
    fn invalid_experiments_are_rejected_upfront() {
        let stream = StreamSpec::stationary(kumaraswamy(0.4), 10).unwrap();
        assert!(run_experiment(&experiment(stream.clone(), LearnerSpec::Erm, None, vec![]), 1).is_err());
        assert!(run_experiment(&experiment(stream.clone(), LearnerSpec::Erm, None, vec![1, 1]), 1).is_err());
        let mut exp = experiment(stream, LearnerSpec::Erm, None, vec![1]);
        exp.projection = Interval::new(0.0, 2.0).unwrap();
        assert!(run_experiment(&exp, 1).is_err());
        assert!(StreamSpec::new(vec![], 0.0).is_err());
        assert!(StreamSpec::new(vec![Phase { distribution: kumaraswamy(1.0), length: 0 }], 0.0).is_err());
    }

    fn constant_run(seed: u64, value: f64, ts: &[u64]) -> SeedRun {
        let records = ts
            .iter()
            .map(|&t| TrajectoryRecord { reserve: value, sq_error: value, ..record(t, value) })
            .collect();
        SeedRun { seed, records, regret: 0.0, phase_regret: vec![0.0] }
    }

    #[test]
    fn aggregation_of_one_seed_is_identity() {
        let run = constant_run(1, 0.25, &[1, 2, 3]);
        let agg = aggregate(std::slice::from_ref(&run)).unwrap();
        for row in agg.rows.iter().filter(|r| r.metric == Metric::Reserve) {
            assert_eq!((row.mean, row.q10, row.q90), (0.25, 0.25, 0.25));
        }
    }

    #[test]
    fn aggregation_averages_pointwise() {
        let runs = [constant_run(1, 0.2, &[1, 2]), constant_run(2, 0.4, &[1, 2])];
        let agg = aggregate(&runs).unwrap();
        for (_, m) in agg.mean_curve(Metric::Reserve) {
            assert!((m - 0.3).abs() < 1e-15);
        }
        let runs = [constant_run(1, 0.2, &[1, 2]), constant_run(2, 0.4, &[1, 3])];
        assert!(matches!(aggregate(&runs), Err(Error::InconsistentStrides { .. })));
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(quantile(&xs, 0.1), 1.0);
        assert_eq!(quantile(&xs, 0.9), 9.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.25), 0.25);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<_> = (0..100)
            .map(|i| {
                let t = 10f64.powf(1.0 + 4.0 * i as f64 / 99.0);
                (t, 3.0 * t.powf(-0.5))
            })
            .collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-10);
        assert!(loglog_slope(&pts[..1]).is_err());
    }

    #[test]
    fn bench_shows_constant_and_growing_state() {
        let proj = Interval::new(0.0, 1.0).unwrap();
        let settings = BenchSettings { batch: 100, repeats: 1, seed: 0 };
        let oga = LearnerSpec::ConvOga {
            kernel: KernelSchedule::fixed(0.1).unwrap(),
            step: StepSchedule::constant(0.01).unwrap(),
        };
        let rows = update_cost_bench(&oga, proj, 1.0, &[1_000, 10_000], settings).unwrap();
        assert_eq!(rows[0].state_bytes, rows[1].state_bytes);
        assert_eq!(rows[1].learner, "conv_oga");

        let rows = update_cost_bench(&LearnerSpec::Erm, proj, 1.0, &[1_000, 10_000], settings).unwrap();
        let ratio = rows[1].state_bytes as f64 / rows[0].state_bytes as f64;
        assert!((9.0..=10.5).contains(&ratio), "{ratio}");

        let spec = LearnerSpec::DiscreteErm { grid: GridPolicy::Doubling };
        let rows = update_cost_bench(&spec, proj, 1.0, &[1_000, 1_000_000], settings).unwrap();
        let ratio = rows[1].state_bytes as f64 / rows[0].state_bytes as f64;
        let target = (1_000_000f64 / 1_000.0).sqrt();
        assert!(ratio > target / 2.0 && ratio < target * 2.0, "{ratio}");
    }
}
