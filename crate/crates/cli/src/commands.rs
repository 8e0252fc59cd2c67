//! Subcommand implementations. Each returns whether every requested check
//! passed; errors are reserved for bad input and I/O failures.

use std::path::PathBuf;

use anyhow::{bail, Context};
use convoga_core::checks::{
    bound_check, concavity_check, finite_difference_check, kernel_norm_check, unbiasedness_check,
};
use convoga_core::simulator::{
    aggregate, mean_regret, run_experiment, update_cost_bench, BenchRow, BenchSettings, Metric, SeedRun,
    TrajectoryRecord,
};
use convoga_core::{GaussianKernel, GridPolicy, KernelSchedule, LearnerSpec, StepSchedule};
use serde::Serialize;

use crate::config::{ExperimentConfig, LearnerKind};
use crate::output::{write_csv, write_text};

/// Tolerance for the closed-form kernel norms against quadrature.
pub const NORM_TOL: f64 = 1e-8;

/// Largest allowed finite-difference gap.
pub const FD_TOL: f64 = 1e-6;

/// Monte Carlo means must land within this many standard errors.
pub const MC_Z: f64 = 3.0;

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seeds: Option<u64>,
    pub seed_base: Option<u64>,
    pub jobs: usize,
    pub overrides: Vec<String>,
}

impl RunOptions {
    /// Loads the config with `--seeds`/`--seed-base` folded in as overrides
    /// and every default written out.
    pub fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(n) = self.seeds {
            overrides.push(format!("seeds={n}"));
        }
        if let Some(b) = self.seed_base {
            overrides.push(format!("seed_base={b}"));
        }
        ExperimentConfig::load(&self.config, &overrides)?.resolved()
    }
}

#[derive(Serialize)]
struct TrajectoryRow {
    seed: u64,
    t: u64,
    phase_id: usize,
    reserve: f64,
    bid: f64,
    instant_revenue: f64,
    expected_gap: f64,
    sq_error: f64,
}

impl TrajectoryRow {
    fn new(seed: u64, r: &TrajectoryRecord) -> Self {
        TrajectoryRow {
            seed,
            t: r.t,
            phase_id: r.phase_id,
            reserve: r.reserve,
            bid: r.bid,
            instant_revenue: r.instant_revenue,
            expected_gap: r.expected_gap,
            sq_error: r.sq_error,
        }
    }
}

#[derive(Serialize)]
struct AggregateCsvRow {
    t: u64,
    metric: &'static str,
    mean: f64,
    q10: f64,
    q90: f64,
}

fn simulate(config: &ExperimentConfig, opts: &RunOptions) -> anyhow::Result<Vec<SeedRun>> {
    let (exp, warnings) = config.experiment()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    write_text(&opts.out_dir.join("config.toml"), &config.to_toml()?)?;
    let runs = run_experiment(&exp, opts.jobs)?;
    for run in &runs {
        let path = opts.out_dir.join("trajectories").join(format!("seed_{}.csv", run.seed));
        write_csv(&path, run.records.iter().map(|r| TrajectoryRow::new(run.seed, r)))?;
    }
    let agg = aggregate(&runs)?;
    write_csv(
        &opts.out_dir.join("aggregate.csv"),
        agg.rows.iter().map(|r| AggregateCsvRow { t: r.t, metric: r.metric.name(), mean: r.mean, q10: r.q10, q90: r.q90 }),
    )?;
    Ok(runs)
}

fn slope_window(config: &ExperimentConfig, total: u64) -> (f64, f64) {
    config.slope_window.map_or(((total as f64 / 100.0).max(1.0), total as f64), |[lo, hi]| (lo, hi))
}

pub fn run_stationary(opts: &RunOptions) -> anyhow::Result<bool> {
    let config = opts.load()?;
    if config.phase.len() != 1 {
        bail!("run-stationary takes exactly one phase, found {}; use run-tracking", config.phase.len());
    }
    let runs = simulate(&config, opts)?;
    let agg = aggregate(&runs)?;
    let total = config.phase[0].length;
    let (lo, hi) = slope_window(&config, total);
    for metric in [Metric::SqError, Metric::ExpectedGap] {
        match agg.slope(metric, lo, hi) {
            Ok(s) => println!("{} log-log slope over [{lo}, {hi}]: {s:.4}", metric.name()),
            Err(e) => println!("{} log-log slope over [{lo}, {hi}]: n/a ({e})", metric.name()),
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct RegretRow {
    seed: u64,
    regret: f64,
}

#[derive(Serialize)]
struct PhaseRegretRow {
    seed: u64,
    phase_id: usize,
    regret: f64,
}

pub fn run_tracking(opts: &RunOptions) -> anyhow::Result<bool> {
    let config = opts.load()?;
    if config.phase.len() < 2 {
        bail!("run-tracking needs at least two phases; use run-stationary for one");
    }
    if config.learner == LearnerKind::VConvOga && config.kernel.is_some_and(|k| k.is_decaying()) {
        if !config.allow_decaying_kernel {
            bail!(
                "tracking keeps the smoothing fixed; v_conv_oga with a decaying kernel is rejected \
                 (set kernel.alpha_sigma = 0 or allow_decaying_kernel = true)"
            );
        }
        eprintln!("warning: running v_conv_oga with a decaying kernel in tracking mode");
    }
    let runs = simulate(&config, opts)?;
    write_csv(&opts.out_dir.join("regret.csv"), runs.iter().map(|r| RegretRow { seed: r.seed, regret: r.regret }))?;
    write_csv(
        &opts.out_dir.join("phase_regret.csv"),
        runs.iter().flat_map(|r| {
            r.phase_regret.iter().enumerate().map(|(phase_id, &regret)| PhaseRegretRow { seed: r.seed, phase_id, regret })
        }),
    )?;
    let (mean, se) = mean_regret(&runs);
    println!("dynamic regret R(T): {mean:.6} (std. error {se:.6}, {} seeds)", runs.len());
    Ok(true)
}

pub fn verify_bounds(opts: &RunOptions) -> anyhow::Result<bool> {
    let config = opts.load()?;
    let stream = config.stream()?;
    let mut ok = true;
    for (i, phase) in stream.phases().iter().enumerate() {
        let rows = config
            .verify
            .sigmas
            .iter()
            .map(|&s| bound_check(&phase.distribution, s))
            .collect::<convoga_core::Result<Vec<_>>>()?;
        for r in &rows {
            println!(
                "phase {i} sigma {}: B_k {:.3e} <= {:.3e}, V_k {:.4} <= {:.4}: {}",
                r.sigma,
                r.bias,
                r.bound_b,
                r.second_moment,
                r.bound_v,
                verdict(r.pass)
            );
            ok &= r.pass;
        }
        write_csv(&opts.out_dir.join(format!("bounds_phase{i}.csv")), &rows)?;
    }
    let norms =
        config.verify.sigmas.iter().map(|&s| kernel_norm_check(s, NORM_TOL)).collect::<convoga_core::Result<Vec<_>>>()?;
    for n in &norms {
        println!("kernel sigma {}: closed-form norms vs numerics, max error {:.2e}: {}", n.sigma, n.max_error, verdict(n.pass));
        ok &= n.pass;
    }
    write_csv(&opts.out_dir.join("kernel_norms.csv"), &norms)?;
    Ok(ok)
}

#[derive(Serialize)]
struct ConcavityRow {
    phase_id: usize,
    sigma: f64,
    sign_changes: usize,
    pass: bool,
}

#[derive(Serialize)]
struct UnbiasedCsvRow {
    phase_id: usize,
    sigma: f64,
    reserve: f64,
    mc_mean: f64,
    std_error: f64,
    quadrature: f64,
    z: f64,
    pass: bool,
}

pub fn verify_gradients(opts: &RunOptions) -> anyhow::Result<bool> {
    let config = opts.load()?;
    let v = &config.verify;
    let stream = config.stream()?;
    let seed = config.seed_list().first().copied().unwrap_or(0);
    let mut ok = true;

    let fd = finite_difference_check(v.fd_triples, seed)?;
    let fd_pass = fd.max_error < FD_TOL;
    println!("finite differences over {} triples: max error {:.2e}: {}", fd.triples, fd.max_error, verdict(fd_pass));
    ok &= fd_pass;
    write_csv(&opts.out_dir.join("finite_difference.csv"), [fd])?;

    let kernel = GaussianKernel::new(v.mc_sigma)?;
    let mut unbiased = Vec::new();
    let mut concavity = Vec::new();
    for (i, phase) in stream.phases().iter().enumerate() {
        let d = &phase.distribution;
        let top = d.support_max();
        let reserves: Vec<f64> =
            (0..v.mc_reserves).map(|j| top * (j as f64 + 0.5) / v.mc_reserves as f64).collect();
        let rows = unbiasedness_check(d, &kernel, &reserves, v.mc_samples, seed)?;
        let worst = rows.iter().map(|r| r.z).fold(0.0, f64::max);
        let pass = worst <= MC_Z;
        println!(
            "phase {i}: Monte Carlo gradient vs quadrature at {} reserves, worst |z| {worst:.2}: {}",
            rows.len(),
            verdict(pass)
        );
        ok &= pass;
        unbiased.extend(rows.iter().map(|r| UnbiasedCsvRow {
            phase_id: i,
            sigma: v.mc_sigma,
            reserve: r.reserve,
            mc_mean: r.mc_mean,
            std_error: r.std_error,
            quadrature: r.quadrature,
            z: r.z,
            pass: r.z <= MC_Z,
        }));
        for &s in &v.sigmas {
            let n = concavity_check(d, s, v.sign_grid)?;
            println!("phase {i} sigma {s}: gradient sign changes {n}: {}", verdict(n == 1));
            ok &= n == 1;
            concavity.push(ConcavityRow { phase_id: i, sigma: s, sign_changes: n, pass: n == 1 });
        }
    }
    write_csv(&opts.out_dir.join("unbiasedness.csv"), unbiased)?;
    write_csv(&opts.out_dir.join("concavity.csv"), concavity)?;
    Ok(ok)
}

#[derive(Serialize)]
struct OracleRow {
    phase_id: usize,
    reserve: f64,
    revenue: f64,
    hazard_growth: f64,
    mu: f64,
    pass: bool,
}

pub fn oracle(opts: &RunOptions, tol: f64) -> anyhow::Result<bool> {
    let config = ExperimentConfig::load(&opts.config, &opts.overrides)?;
    let mu = config.constants.map_or(0.0, |c| c.mu);
    let mut rows = Vec::new();
    for (i, phase) in config.phase.iter().enumerate() {
        let d = &phase.distribution;
        let star = d.monopoly_price_oracle(tol);
        let growth = d.hazard_growth_estimate()?;
        let valid = d.validate(mu);
        println!(
            "phase {i} {:?}: r* = {:.9}, revenue = {:.12}, hazard slope >= {growth:.6} (mu = {mu}): {}",
            d.family(),
            star.reserve,
            star.revenue,
            match &valid {
                Ok(()) => "PASS".to_string(),
                Err(e) => format!("FAIL ({e})"),
            }
        );
        rows.push(OracleRow { phase_id: i, reserve: star.reserve, revenue: star.revenue, hazard_growth: growth, mu, pass: valid.is_ok() });
    }
    write_csv(&opts.out_dir.join("oracle.csv"), &rows)?;
    Ok(rows.iter().all(|r| r.pass))
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub checkpoints: Vec<u64>,
    pub batch: u64,
    /// Batch for the history-keeping baselines, whose updates cost O(t).
    pub baseline_batch: u64,
    pub repeats: usize,
    pub all: bool,
}

/// Ratio limit on per-update time between the last and first checkpoint.
pub const TIME_RATIO_LIMIT: f64 = 2.0;

pub fn bench_update(opts: &RunOptions, bench: &BenchOptions) -> anyhow::Result<bool> {
    let config = opts.load()?;
    let projection = config.projection.context("config is not resolved")?;
    let upper = config.stream()?.common_support_max();
    let specs = if bench.all {
        vec![
            LearnerSpec::ConvOga { kernel: KernelSchedule::fixed(0.05)?, step: StepSchedule::constant(0.01)? },
            LearnerSpec::VConvOga { kernel: KernelSchedule::new(1.0, 0.5)?, step: StepSchedule::new(1.0, 1.0)? },
            LearnerSpec::Erm,
            LearnerSpec::DiscreteErm { grid: GridPolicy::Doubling },
        ]
    } else {
        vec![config.learner_spec()?]
    };
    let seed = config.seed_list().first().copied().unwrap_or(0);
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut ok = true;
    for spec in &specs {
        let constant_memory = matches!(spec, LearnerSpec::ConvOga { .. } | LearnerSpec::VConvOga { .. });
        let batch = if constant_memory { bench.batch } else { bench.baseline_batch };
        let settings = BenchSettings { batch, repeats: bench.repeats, seed };
        let r = update_cost_bench(spec, projection, upper, &bench.checkpoints, settings)?;
        if let (Some(first), Some(last)) = (r.first(), r.last()) {
            let size_ratio = last.state_bytes as f64 / first.state_bytes as f64;
            let time_ratio = last.ns_per_update / first.ns_per_update;
            let line = format!(
                "{}: state {} -> {} bytes (x{size_ratio:.2}), {:.1} -> {:.1} ns/update (x{time_ratio:.2})",
                spec.name(),
                first.state_bytes,
                last.state_bytes,
                first.ns_per_update,
                last.ns_per_update
            );
            if constant_memory {
                let pass = first.state_bytes == last.state_bytes && time_ratio <= TIME_RATIO_LIMIT;
                println!("{line}: {}", verdict(pass));
                ok &= pass;
            } else {
                println!("{line}");
            }
        }
        rows.extend(r);
    }
    write_csv(&opts.out_dir.join("bench.csv"), &rows)?;
    Ok(ok)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

