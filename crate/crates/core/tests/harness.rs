use tdrc::fiber::run_link;
use tdrc::harness::{
    run_pipeline, sample_bits, sampled_inputs, sweep, ExperimentConfig, PipelineMode, Stream, SweepAxis,
};
use tdrc::readout::{aligned_targets, assemble_features, decide_and_ber, train, Threshold};
use tdrc::signal::generate_bits;

fn small(mode: PipelineMode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::short_reservoir_fig5();
    cfg.mode = mode;
    cfg.n_bits = 2048;
    cfg.train.cv_reps = 3;
    cfg.repetitions = 1;
    cfg.n_mask_trials = 1;
    cfg
}

#[test]
fn bypass_is_the_readout_on_the_raw_link_output() {
    let cfg = small(PipelineMode::Bypass);
    let score = run_pipeline(&cfg).unwrap();

    let seeds = cfg.seeds;
    let rate = cfg.link.bit_rate_bps();
    let j = cfg.geometry.j_samples;
    let stream = |s: Stream| {
        let bits = generate_bits(cfg.n_bits, rate, &mut seeds.bits_rng(s));
        let wave = run_link(&bits, &cfg.link, &mut seeds.link_rng(s)).unwrap();
        let resp = sample_bits(&wave, rate as f64, cfg.n_bits, j, 0.0).unwrap();
        (assemble_features(&resp, cfg.window).unwrap(), aligned_targets(&bits, cfg.window))
    };
    let (f, y) = stream(Stream::Train);
    let (ft, yt) = stream(Stream::Test);
    let model = train(&f, &y, &cfg.train, &seeds.readout_rng()).unwrap();
    let d = decide_and_ber(&model.predict(&ft).unwrap(), &yt, Threshold::Fixed(model.threshold)).unwrap();
    assert_eq!(score.ber, d.ber);
    assert_eq!(score.threshold, model.threshold);
    assert_eq!(score.train_ber, model.train_ber());
}

#[test]
fn single_point_sweep_is_run_pipeline() {
    for mode in [PipelineMode::Direct, PipelineMode::Bypass, PipelineMode::Rc] {
        let mut cfg = small(mode);
        cfg.sweep = vec![SweepAxis::new("injection.delta_f_ghz", [cfg.injection.delta_f_ghz])];
        let r = sweep(&cfg, None, Some(1)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].ber(), Some(run_pipeline(&cfg).unwrap().ber), "{mode}");
    }
}

#[test]
fn back_to_back_noiseless_bypass_is_error_free() {
    let mut cfg = small(PipelineMode::Bypass);
    cfg.link = cfg.link.noiseless();
    cfg.link.total_ssmf_km = 0.0;
    let s = run_pipeline(&cfg).unwrap();
    assert_eq!(s.errors, 0);
    assert_eq!(s.ber, 0.0);
}

#[test]
fn test_stream_is_independent_of_training() {
    let cfg = small(PipelineMode::Bypass);
    let inputs = sampled_inputs(&cfg, &cfg.seeds).unwrap();
    assert_eq!(inputs.train.bits.len(), cfg.n_bits);
    assert_eq!(inputs.test.bits.len(), cfg.n_bits);
    assert_eq!(
        inputs.test.bits,
        generate_bits(cfg.n_bits, cfg.link.bit_rate_bps(), &mut cfg.seeds.bits_rng(Stream::Test))
    );
    let agree = inputs.train.bits.bits.iter().zip(&inputs.test.bits.bits).filter(|(a, b)| a == b).count();
    // independent streams agree on about half the bits
    assert!((agree as f64 / cfg.n_bits as f64 - 0.5).abs() < 0.05, "{agree}");
    let mut other = cfg.clone();
    other.seeds.bits_test ^= 1;
    let changed = sampled_inputs(&other, &other.seeds).unwrap();
    assert_eq!(changed.train, inputs.train);
    assert_ne!(changed.test.bits, inputs.test.bits);
}

#[test]
fn direct_ber_does_not_improve_with_distance() {
    let mut cfg = ExperimentConfig::short_reach_45km();
    cfg.mode = PipelineMode::Direct;
    cfg.n_bits = 8192;
    cfg.repetitions = 5;
    cfg.n_mask_trials = 1;
    let zs = [20.0, 30.0, 40.0, 50.0, 60.0];
    cfg.sweep = vec![SweepAxis::new("link.total_ssmf_km", zs)];
    let r = sweep(&cfg, None, None).unwrap();
    let medians: Vec<f64> = r
        .rows
        .chunks(5)
        .map(|c| {
            let mut b: Vec<f64> = c.iter().map(|r| r.ber().unwrap()).collect();
            b.sort_by(f64::total_cmp);
            b[2]
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{zs:?} -> {medians:?}");
}
