use std::collections::VecDeque;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::config::{DirectPhase, ExperimentConfig, PipelineMode, Seeds, DIRECT_PHASES};
use super::sample_bits;
use super::HarnessError;
use crate::fiber::run_link;
use crate::readout::{
    aligned_targets, assemble_features, decide_and_ber, min_resolvable_ber, optimal_threshold, train, Threshold,
    TrainOptions, WindowSpec,
};
use crate::reservoir::{make_mask, run_reservoir, Mask, ReservoirResponse};
use crate::signal::{generate_bits, BitStream, ElectricalWaveform, Rng};

/// Training stream A or the independent test stream B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Train,
    Test,
}

impl std::fmt::Display for Stream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Test => "test",
        })
    }
}

impl Seeds {
    pub fn bits_rng(&self, stream: Stream) -> Rng {
        Rng::new(match stream {
            Stream::Train => self.bits_train,
            Stream::Test => self.bits_test,
        })
    }

    /// Transmitter, amplifier and receiver noise of one stream.
    pub fn link_rng(&self, stream: Stream) -> Rng {
        Rng::new(self.noise).derive(&format!("link-{stream}"))
    }

    /// Laser Langevin noise while one stream passes the reservoir.
    pub fn reservoir_rng(&self, stream: Stream) -> Rng {
        Rng::new(self.noise).derive(&format!("reservoir-{stream}"))
    }

    /// Monte-Carlo split draws of the readout training.
    pub fn readout_rng(&self) -> Rng {
        Rng::new(self.noise).derive("readout")
    }

    pub fn mask(&self, k: usize, mask_id: usize) -> Mask {
        make_mask(k, &mut Rng::new(self.mask).derive(&format!("mask-{mask_id}")))
    }
}

/// One transmitted stream and its normalized received photocurrent.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutput {
    pub bits: BitStream,
    pub wave: ElectricalWaveform,
}

pub fn link_output(cfg: &ExperimentConfig, seeds: &Seeds, stream: Stream) -> Result<LinkOutput, HarnessError> {
    let bits = generate_bits(cfg.n_bits, cfg.link.bit_rate_bps(), &mut seeds.bits_rng(stream));
    let wave = run_link(&bits, &cfg.link, &mut seeds.link_rng(stream)).map_err(|source| HarnessError::Link { stream, source })?;
    Ok(LinkOutput { bits, wave })
}

/// Received streams of one repetition plus, for classifier pipelines, the
/// `j` samples per bit fed to the reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub train: LinkOutput,
    pub test: LinkOutput,
    pub samples: Option<[ReservoirResponse; 2]>,
}

pub fn sampled_inputs(cfg: &ExperimentConfig, seeds: &Seeds) -> Result<Inputs, HarnessError> {
    let train = link_output(cfg, seeds, Stream::Train)?;
    let test = link_output(cfg, seeds, Stream::Test)?;
    let samples = if cfg.mode == PipelineMode::Direct {
        None
    } else {
        let rate = cfg.link.bit_rate_bps() as f64;
        let j = cfg.geometry.j_samples;
        let sample = |out: &LinkOutput, stream| {
            sample_bits(&out.wave, rate, cfg.n_bits, j, cfg.sampling_phase)
                .map_err(|source| HarnessError::Sampling { stream, source })
        };
        Some([sample(&train, Stream::Train)?, sample(&test, Stream::Test)?])
    };
    Ok(Inputs { train, test, samples })
}

/// Small most-recently-used cache of [`Inputs`], so sweeps over reservoir
/// and readout parameters transmit each stream once. Safe to share between
/// workers; concurrent requests for one key compute it once.
pub struct LinkCache {
    capacity: usize,
    entries: Mutex<VecDeque<(String, Arc<OnceLock<Option<Arc<Inputs>>>>)>>,
}

impl LinkCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: Mutex::new(VecDeque::new()),
        }
    }

    fn key(cfg: &ExperimentConfig, seeds: &Seeds) -> String {
        let direct = cfg.mode == PipelineMode::Direct;
        serde_json::to_string(&(
            &cfg.link,
            cfg.n_bits,
            seeds.bits_train,
            seeds.bits_test,
            seeds.noise,
            direct,
            (!direct).then_some((cfg.geometry.j_samples, cfg.sampling_phase)),
        ))
        .expect("cache key serializes")
    }

    pub fn get(&self, cfg: &ExperimentConfig, seeds: &Seeds) -> Result<Arc<Inputs>, HarnessError> {
        let key = Self::key(cfg, seeds);
        let cell = {
            let mut entries = self.entries.lock().expect("cache lock");
            match entries.iter().position(|(k, _)| *k == key) {
                Some(i) => {
                    let entry = entries.remove(i).expect("index in range");
                    let cell = entry.1.clone();
                    entries.push_front(entry);
                    cell
                }
                None => {
                    let cell = Arc::new(OnceLock::new());
                    entries.push_front((key, cell.clone()));
                    entries.truncate(self.capacity);
                    cell
                }
            }
        };
        let mut failure = None;
        let hit = cell.get_or_init(|| match sampled_inputs(cfg, seeds) {
            Ok(inputs) => Some(Arc::new(inputs)),
            Err(e) => {
                failure = Some(e);
                None
            }
        });
        match (hit, failure) {
            (Some(inputs), _) => Ok(inputs.clone()),
            (None, Some(e)) => Err(e),
            // another worker failed on this key: reproduce its error here
            (None, None) => sampled_inputs(cfg, seeds).map(Arc::new),
        }
    }
}

impl Default for LinkCache {
    fn default() -> Self {
        Self::new(4)
    }
}

/// Test-stream outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub ber: f64,
    pub errors: usize,
    pub test_bits: usize,
    pub threshold: f64,
    pub train_ber: f64,
    /// Held-out BER of the kept Monte-Carlo split; equals `train_ber` for
    /// direct detection, which has no split.
    pub validation_ber: f64,
    /// One error in `test_bits`.
    pub ber_floor: f64,
    /// Sampling phase used by direct detection.
    pub phase: Option<f64>,
}

/// Train a ridge readout on `train` responses and score it on `test`.
pub fn score_readout(
    train_resp: &ReservoirResponse,
    train_bits: &BitStream,
    test_resp: &ReservoirResponse,
    test_bits: &BitStream,
    window: WindowSpec,
    opts: &TrainOptions,
    rng: &Rng,
) -> Result<Score, HarnessError> {
    let readout = |stage| move |source| HarnessError::Readout { stage, source };
    let features = assemble_features(train_resp, window).map_err(readout("features, train stream"))?;
    let targets = aligned_targets(train_bits, window);
    let model = train(&features, &targets, opts, rng).map_err(readout("training"))?;
    let test_features = assemble_features(test_resp, window).map_err(readout("features, test stream"))?;
    let test_targets = aligned_targets(test_bits, window);
    let soft = model.predict(&test_features).map_err(readout("prediction"))?;
    let d = decide_and_ber(&soft, &test_targets, Threshold::Fixed(model.threshold)).map_err(readout("decision"))?;
    Ok(Score {
        ber: d.ber,
        errors: d.errors,
        test_bits: test_targets.len(),
        threshold: model.threshold,
        train_ber: model.train_ber(),
        validation_ber: model.validation_ber(),
        ber_floor: min_resolvable_ber(test_targets.len()),
        phase: None,
    })
}

fn score_direct(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<Score, HarnessError> {
    let rate = cfg.link.bit_rate_bps() as f64;
    let n = cfg.n_bits;
    let phases: Vec<f64> = match cfg.direct_phase {
        DirectPhase::Fixed(p) => vec![p],
        DirectPhase::Optimal => (0..DIRECT_PHASES).map(|i| i as f64 / DIRECT_PHASES as f64).collect(),
    };
    let sampling = |stream| move |source| HarnessError::Sampling { stream, source };
    let readout = |stage| move |source| HarnessError::Readout { stage, source };
    let mut best: Option<(f64, f64, usize)> = None;
    for p in phases {
        let s = sample_bits(&inputs.train.wave, rate, n, 1, p).map_err(sampling(Stream::Train))?;
        let (t, errors) = optimal_threshold(s.values(), &inputs.train.bits.bits).map_err(readout("threshold fit"))?;
        if best.is_none_or(|(_, _, e)| errors < e) {
            best = Some((p, t, errors));
        }
    }
    let (phase, threshold, train_errors) = best.ok_or_else(|| HarnessError::Config("no direct sampling phase".into()))?;
    let s = sample_bits(&inputs.test.wave, rate, n, 1, phase).map_err(sampling(Stream::Test))?;
    let d = decide_and_ber(s.values(), &inputs.test.bits.bits, Threshold::Fixed(threshold)).map_err(readout("decision"))?;
    let train_ber = train_errors as f64 / n as f64;
    Ok(Score {
        ber: d.ber,
        errors: d.errors,
        test_bits: n,
        threshold,
        train_ber,
        validation_ber: train_ber,
        ber_floor: min_resolvable_ber(n),
        phase: Some(phase),
    })
}

/// Reservoir responses to both streams for one mask draw.
pub(crate) fn responses(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    seeds: &Seeds,
    mask_id: usize,
) -> Result<[ReservoirResponse; 2], HarnessError> {
    let [train_in, test_in] = inputs
        .samples
        .as_ref()
        .ok_or_else(|| HarnessError::Config("direct detection has no reservoir stage".into()))?;
    let mode = cfg
        .mode
        .reservoir_mode()
        .ok_or_else(|| HarnessError::Config("direct detection has no reservoir stage".into()))?;
    let res = cfg.reservoir();
    let mask = if cfg.mode.uses_mask() {
        seeds.mask(cfg.geometry.k_nodes, mask_id)
    } else {
        Mask::ones(cfg.geometry.k_nodes)
    };
    let run = |input, stream| {
        run_reservoir(input, mode, &res, &mask, &mut seeds.reservoir_rng(stream))
            .map_err(|source| HarnessError::Reservoir { stream, source })
    };
    Ok([run(train_in, Stream::Train)?, run(test_in, Stream::Test)?])
}

/// One pipeline run for `repetition` and `mask_id`, reading the link
/// through `cache`.
pub fn run_pipeline_with(
    cfg: &ExperimentConfig,
    repetition: usize,
    mask_id: usize,
    cache: &LinkCache,
) -> Result<Score, HarnessError> {
    let seeds = cfg.seeds.for_repetition(repetition);
    let inputs = cache.get(cfg, &seeds)?;
    if cfg.mode == PipelineMode::Direct {
        return score_direct(cfg, &inputs);
    }
    let [train_resp, test_resp] = responses(cfg, &inputs, &seeds, mask_id)?;
    score_readout(
        &train_resp,
        &inputs.train.bits,
        &test_resp,
        &inputs.test.bits,
        cfg.window,
        &cfg.train,
        &seeds.readout_rng(),
    )
}

/// bits → link → per-bit sampling → reservoir → features → readout trained
/// on stream A, scored on stream B. Uses repetition 0 and mask 0.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Score, HarnessError> {
    cfg.validate()?;
    run_pipeline_with(cfg, 0, 0, &LinkCache::new(1))
}
