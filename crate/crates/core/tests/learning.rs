use convoga_core::simulator::{aggregate, dynamic_regret, run_experiment, Metric};
use convoga_core::{
    BidDistribution, Experiment, Interval, KernelSchedule, LearnerSpec, Phase, RecordSchedule, StepSchedule,
    StreamSpec,
};

fn conv_oga(sigma: f64, gamma: f64) -> LearnerSpec {
    LearnerSpec::ConvOga {
        kernel: KernelSchedule::fixed(sigma).unwrap(),
        step: StepSchedule::constant(gamma).unwrap(),
    }
}

fn experiment(stream: StreamSpec, learner: LearnerSpec, seeds: std::ops::Range<u64>, record: RecordSchedule) -> Experiment {
    let top = stream.common_support_max();
    Experiment {
        stream,
        learner,
        projection: Interval::new(0.0, top).unwrap(),
        r0: None,
        seeds: seeds.collect(),
        record,
    }
}

#[test]
fn symmetric_law_centres_iterates_on_midpoint() {
    let stream = StreamSpec::stationary(BidDistribution::uniform(1.0).unwrap(), 30_000).unwrap();
    let exp = experiment(stream, conv_oga(0.1, 0.01), 0..4, RecordSchedule::Stride(1));
    for run in run_experiment(&exp, 1).unwrap() {
        let tail = &run.records[run.records.len() - 10_000..];
        let mean = tail.iter().map(|r| r.reserve).sum::<f64>() / tail.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "seed {}: tail mean {mean}", run.seed);
    }
}

#[test]
fn v_conv_oga_error_shrinks_on_uniform_kumaraswamy() {
    let stream = StreamSpec::stationary(BidDistribution::kumaraswamy(1.0, 1.0).unwrap(), 100_000).unwrap();
    let learner = LearnerSpec::VConvOga {
        kernel: KernelSchedule::new(1.0, 0.5).unwrap(),
        step: StepSchedule::new(1.0, 1.0).unwrap(),
    };
    let exp = experiment(stream, learner, 0..20, RecordSchedule::Auto);
    let agg = aggregate(&run_experiment(&exp, 1).unwrap()).unwrap();
    let curve = agg.mean_curve(Metric::SqError);
    let at = |t: f64| curve.iter().find(|p| p.0 == t).unwrap().1;
    assert!(at(1e5) < at(1e3), "mse {} at 1e5 vs {} at 1e3", at(1e5), at(1e3));
}

#[test]
fn tracks_each_phase_optimum() {
    let laws = [(4.0, 0.2), (0.4, 1.0 / 1.4), (1.0, 0.5)];
    let phases = laws
        .iter()
        .map(|&(b, _)| Phase { distribution: BidDistribution::kumaraswamy(1.0, b).unwrap(), length: 10_000 })
        .collect();
    let stream = StreamSpec::new(phases, 0.0).unwrap();
    let exp = experiment(stream, conv_oga(0.05, 0.003), 0..10, RecordSchedule::Stride(1));
    let runs = run_experiment(&exp, 1).unwrap();
    for (p, &(_, r_star)) in laws.iter().enumerate() {
        let end = (p as u64 + 1) * 10_000;
        let tail: Vec<f64> = runs
            .iter()
            .flat_map(|run| run.records.iter().filter(|r| r.t > end - 2_000 && r.t <= end).map(|r| r.reserve))
            .collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - r_star).abs() < 0.03, "phase {p}: mean {mean} vs {r_star}");
    }
}

#[test]
fn regret_is_sum_of_phase_regrets() {
    let phases = vec![
        Phase { distribution: BidDistribution::kumaraswamy(1.0, 4.0).unwrap(), length: 3_000 },
        Phase { distribution: BidDistribution::uniform(1.0).unwrap(), length: 2_000 },
    ];
    let stream = StreamSpec::new(phases, 0.0).unwrap();
    let exp = experiment(stream.clone(), conv_oga(0.05, 0.01), 7..10, RecordSchedule::Stride(1));
    for run in run_experiment(&exp, 1).unwrap() {
        let total: f64 = run.phase_regret.iter().sum();
        assert!((total - run.regret).abs() < 1e-9 * run.regret.abs().max(1.0));
        let recomputed = dynamic_regret(&run.records, &stream).unwrap();
        assert!((recomputed - run.regret).abs() < 1e-9 * run.regret.abs().max(1.0));
    }
}

#[test]
fn sparse_records_cannot_give_regret() {
    let stream = StreamSpec::stationary(BidDistribution::uniform(1.0).unwrap(), 500).unwrap();
    let exp = experiment(stream.clone(), conv_oga(0.1, 0.01), 0..1, RecordSchedule::Stride(10));
    let run = &run_experiment(&exp, 1).unwrap()[0];
    assert!(run.regret.is_finite());
    assert!(dynamic_regret(&run.records, &stream).is_err());
}
