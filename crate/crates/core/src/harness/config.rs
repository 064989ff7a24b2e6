use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::fiber::LinkConfig;
use crate::readout::{TrainOptions, WindowSpec};
use crate::reservoir::{InjectionParams, LaserParams, NodeGeometry, ReservoirConfig, ReservoirMode, RunControl};
use crate::signal::sub_seed;

/// End-to-end processing chain behind one BER figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// One sample per bit against a fitted threshold, no classifier.
    Direct,
    Bypass,
    NoMask,
    Elm,
    Rc,
}

impl PipelineMode {
    /// The four classifier pipelines compared by `benchmark`.
    pub const BENCHMARK: [PipelineMode; 4] = [Self::Bypass, Self::NoMask, Self::Elm, Self::Rc];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Bypass => "bypass",
            Self::NoMask => "no_mask",
            Self::Elm => "elm",
            Self::Rc => "rc",
        }
    }

    pub fn reservoir_mode(&self) -> Option<ReservoirMode> {
        match self {
            Self::Direct => None,
            Self::Bypass => Some(ReservoirMode::Bypass),
            Self::NoMask => Some(ReservoirMode::NoMask),
            Self::Elm => Some(ReservoirMode::Elm),
            Self::Rc => Some(ReservoirMode::Rc),
        }
    }

    /// Whether the mask changes the outcome.
    pub fn uses_mask(&self) -> bool {
        matches!(self, Self::Elm | Self::Rc)
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::Direct, Self::Bypass, Self::NoMask, Self::Elm, Self::Rc]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (direct, bypass, no_mask, elm, rc)"))
    }
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seeds {
    pub bits_train: u64,
    pub bits_test: u64,
    pub mask: u64,
    /// Link and laser noise.
    pub noise: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            bits_train: sub_seed(master, "bits-train"),
            bits_test: sub_seed(master, "bits-test"),
            mask: sub_seed(master, "mask"),
            noise: sub_seed(master, "noise"),
        }
    }

    /// Seeds of repetition `r`; repetition 0 is `self`.
    pub fn for_repetition(&self, r: usize) -> Self {
        if r == 0 {
            return *self;
        }
        let label = format!("rep-{r}");
        Self {
            bits_train: sub_seed(self.bits_train, &label),
            bits_test: sub_seed(self.bits_test, &label),
            mask: sub_seed(self.mask, &label),
            noise: sub_seed(self.noise, &label),
        }
    }

    pub fn all_distinct(&self) -> bool {
        let s = [self.bits_train, self.bits_test, self.mask, self.noise];
        (0..4).all(|i| (i + 1..4).all(|j| s[i] != s[j]))
    }
}

/// Per-bit sampling phase of the direct-detection baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectPhase {
    /// Phase fitted on the training stream over a grid of `DIRECT_PHASES`.
    #[default]
    Optimal,
    /// Fixed fraction of the bit period (the eye diagrams use 0.6).
    Fixed(f64),
}

/// Phase grid searched by [`DirectPhase::Optimal`].
pub const DIRECT_PHASES: usize = 16;

/// One named sweep dimension. `name` is a dotted path into the config
/// (`injection.delta_f_ghz`, `link.total_ssmf_km`, ...); `window_bits`
/// sets a centered window of that many bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            name: name.to_string(),
            values: values.into_iter().collect(),
        }
    }

    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        Self::new(name, (0..n).map(|i| lo + step * i as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSearch {
    pub ber_target: f64,
    pub z_min_km: f64,
    pub z_max_km: f64,
    pub tolerance_km: f64,
    pub modes: Vec<PipelineMode>,
}

impl Default for DistanceSearch {
    fn default() -> Self {
        Self {
            ber_target: 1e-3,
            z_min_km: 5.0,
            z_max_km: 80.0,
            tolerance_km: 1.0,
            modes: vec![PipelineMode::Direct, PipelineMode::Bypass, PipelineMode::Rc],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeOptions {
    /// Bits overlaid in the eye diagram.
    pub traces: usize,
    /// Histogram sampling point as a fraction of the bit period.
    pub phase: f64,
    pub bins: usize,
}

impl Default for EyeOptions {
    fn default() -> Self {
        Self {
            traces: 512,
            phase: 0.6,
            bins: 64,
        }
    }
}

fn default_benchmark_windows() -> Vec<usize> {
    vec![1, 3, 5, 7, 9]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub link: LinkConfig,
    pub geometry: NodeGeometry,
    pub laser: LaserParams,
    pub injection: InjectionParams,
    #[serde(default)]
    pub control: RunControl,
    #[serde(default)]
    pub avg_factor: Option<usize>,
    pub window: WindowSpec,
    pub mode: PipelineMode,
    pub n_bits: usize,
    pub seeds: Seeds,
    /// Start of the j-sample grid within each bit, as a fraction of the bit.
    #[serde(default)]
    pub sampling_phase: f64,
    #[serde(default)]
    pub direct_phase: DirectPhase,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    pub n_mask_trials: usize,
    pub repetitions: usize,
    #[serde(default = "default_benchmark_windows")]
    pub benchmark_windows: Vec<usize>,
    #[serde(default)]
    pub distance: DistanceSearch,
    #[serde(default)]
    pub eye: EyeOptions,
}

pub const PRESETS: [&str; 4] = ["short-reach-45km", "long-haul-4000km", "short-reservoir-fig5", "experimental-66ns"];

const DEFAULT_MASTER_SEED: u64 = 2019;

impl ExperimentConfig {
    /// 66 ns reservoir with j = k = 66 behind the 45 km short-reach link.
    pub fn experimental_66ns() -> Self {
        let res = ReservoirConfig::experimental();
        Self {
            link: LinkConfig::short_reach(45.0),
            geometry: res.geometry,
            laser: res.laser,
            injection: res.injection,
            control: res.control,
            avg_factor: res.avg_factor,
            window: WindowSpec::centered(9),
            mode: PipelineMode::Rc,
            n_bits: 40960,
            seeds: Seeds::from_master(DEFAULT_MASTER_SEED),
            sampling_phase: 0.0,
            direct_phase: DirectPhase::Optimal,
            train: TrainOptions::default(),
            sweep: Vec::new(),
            n_mask_trials: 1,
            repetitions: 5,
            benchmark_windows: default_benchmark_windows(),
            distance: DistanceSearch::default(),
            eye: EyeOptions::default(),
        }
    }

    /// 45 km short-reach link benchmarked on the experimental reservoir.
    pub fn short_reach_45km() -> Self {
        let mut cfg = Self::experimental_66ns();
        cfg.sweep = vec![
            SweepAxis::linspace("injection.delta_f_ghz", -30.0, 30.0, 13),
            SweepAxis::linspace("injection.k_f", 0.0, 0.2, 11),
        ];
        cfg
    }

    /// 4000 km dispersion-managed 10 Gb/s link, experimental reservoir.
    pub fn long_haul_4000km() -> Self {
        let mut cfg = Self::experimental_66ns();
        cfg.link = LinkConfig::long_haul(4000.0);
        cfg.distance = DistanceSearch {
            z_min_km: 100.0,
            z_max_km: 8000.0,
            tolerance_km: 100.0,
            ..DistanceSearch::default()
        };
        cfg
    }

    /// 1.6 ns, 32-node reservoir fed 4 samples per bit after 50 km, with
    /// the Δf × k_f map as sweep.
    pub fn short_reservoir_fig5() -> Self {
        let res = ReservoirConfig::short();
        Self {
            link: LinkConfig::short_reach(50.0),
            geometry: res.geometry,
            laser: res.laser,
            injection: res.injection,
            control: res.control,
            avg_factor: res.avg_factor,
            n_mask_trials: 10,
            sweep: vec![
                SweepAxis::linspace("injection.delta_f_ghz", -30.0, 30.0, 13),
                SweepAxis::linspace("injection.k_f", 0.0, 0.2, 11),
            ],
            ..Self::experimental_66ns()
        }
    }

    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        match name {
            "short-reach-45km" => Ok(Self::short_reach_45km()),
            "long-haul-4000km" => Ok(Self::long_haul_4000km()),
            "short-reservoir-fig5" => Ok(Self::short_reservoir_fig5()),
            "experimental-66ns" => Ok(Self::experimental_66ns()),
            _ => Err(HarnessError::Config(format!(
                "unknown preset {name:?} (one of {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parse a JSON config. A top-level `preset` key selects the base, and
    /// every other key is merged over it recursively.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let mut overlay: Value = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config JSON: {e}")))?;
        let preset = match overlay.as_object_mut().and_then(|o| o.remove("preset")) {
            Some(Value::String(p)) => Some(p),
            Some(other) => return Err(HarnessError::Config(format!("preset must be a string, got {other}"))),
            None => None,
        };
        let value = match preset {
            Some(p) => {
                let mut base = Self::preset(&p)?.to_value();
                merge(&mut base, overlay);
                base
            }
            None => overlay,
        };
        let cfg: Self = serde_json::from_value(value).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn reservoir(&self) -> ReservoirConfig {
        ReservoirConfig {
            geometry: self.geometry,
            laser: self.laser,
            injection: self.injection,
            control: self.control,
            avg_factor: self.avg_factor,
        }
    }

    /// Samples per bit handed to the classifier: one for direct detection,
    /// `j` otherwise.
    pub fn samples_per_bit(&self) -> usize {
        match self.mode {
            PipelineMode::Direct => 1,
            _ => self.geometry.j_samples,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.link.validate().map_err(|e| HarnessError::Config(format!("link: {e}")))?;
        if self.mode != PipelineMode::Direct && self.mode != PipelineMode::Bypass {
            self.geometry
                .validate()
                .map_err(|e| HarnessError::Config(format!("reservoir: {e}")))?;
        }
        if !self.seeds.all_distinct() {
            return bad("seeds must be distinct".into());
        }
        if self.n_bits <= self.window.bits() + 16 {
            return bad(format!("{} bits is too short for a {}-bit window", self.n_bits, self.window.bits()));
        }
        if self.repetitions == 0 || self.n_mask_trials == 0 {
            return bad("repetitions and n_mask_trials must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.injection.b_bias) || self.injection.k_f < 0.0 {
            return bad("b_bias must lie in [0, 1] and k_f must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.sampling_phase) {
            return bad(format!("sampling phase {} outside [0, 1)", self.sampling_phase));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return bad(format!("sweep axis {} has no values", axis.name));
            }
            self.with_axis(&axis.name, axis.values[0])?;
        }
        Ok(())
    }

    /// Copy with the field at `path` set to `value`.
    pub fn with_axis(&self, path: &str, value: f64) -> Result<Self, HarnessError> {
        if path == "window_bits" {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(HarnessError::Config(format!("window_bits must be a positive integer, got {value}")));
            }
            let mut cfg = self.clone();
            cfg.window = WindowSpec::centered(value as usize);
            return Ok(cfg);
        }
        let mut v = self.to_value();
        let mut slot = &mut v;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| HarnessError::Config(format!("sweep axis {path:?} names no config field")))?;
        }
        *slot = match slot {
            Value::Number(n) if n.is_u64() || n.is_i64() => {
                if value.fract() != 0.0 {
                    return Err(HarnessError::Config(format!("{path} takes integers, got {value}")));
                }
                if n.is_u64() {
                    if value < 0.0 {
                        return Err(HarnessError::Config(format!("{path} must be non-negative, got {value}")));
                    }
                    Value::from(value as u64)
                } else {
                    Value::from(value as i64)
                }
            }
            Value::Number(_) => Value::from(value),
            // optional numeric fields and extended floats
            Value::Null | Value::String(_) => Value::from(value),
            _ => return Err(HarnessError::Config(format!("sweep axis {path:?} is not a numeric field"))),
        };
        serde_json::from_value(v).map_err(|e| HarnessError::Config(format!("sweep axis {path}: {e}")))
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn preset_key_merges_overrides() {
        let cfg = ExperimentConfig::from_json(
            r#"{"preset": "short-reservoir-fig5", "n_bits": 10240, "injection": {"k_f": 0.07}, "mode": "elm"}"#,
        )
        .unwrap();
        let base = ExperimentConfig::short_reservoir_fig5();
        assert_eq!(cfg.n_bits, 10240);
        assert_eq!(cfg.injection.k_f, 0.07);
        assert_eq!(cfg.injection.delta_f_ghz, base.injection.delta_f_ghz);
        assert_eq!(cfg.mode, PipelineMode::Elm);
        assert_eq!(cfg.geometry, base.geometry);
    }

    #[test]
    fn unknown_preset_and_axis_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"preset": "fig9"}"#).is_err());
        let cfg = ExperimentConfig::short_reservoir_fig5();
        assert!(cfg.with_axis("injection.no_such_field", 1.0).is_err());
        assert!(cfg.with_axis("geometry.k_nodes", 2.5).is_err());
        assert!(cfg.with_axis("mode", 1.0).is_err());
    }

    #[test]
    fn axes_set_floats_integers_options_and_windows() {
        let cfg = ExperimentConfig::short_reservoir_fig5();
        assert_eq!(cfg.with_axis("injection.delta_f_ghz", -7.5).unwrap().injection.delta_f_ghz, -7.5);
        assert_eq!(cfg.with_axis("geometry.j_samples", 2.0).unwrap().geometry.j_samples, 2);
        assert_eq!(cfg.with_axis("link.total_ssmf_km", 41.0).unwrap().link.total_ssmf_km, 41.0);
        assert_eq!(
            cfg.with_axis("link.added_osnr_db", 20.0).unwrap().link.added_osnr_db,
            Some(20.0)
        );
        assert_eq!(cfg.with_axis("window_bits", 5.0).unwrap().window, WindowSpec::centered(5));
    }

    #[test]
    fn noiseless_link_survives_json() {
        let mut cfg = ExperimentConfig::short_reservoir_fig5();
        cfg.link = cfg.link.noiseless();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.with_axis("injection.k_f", 0.1).unwrap().link, cfg.link);
    }

    #[test]
    fn repetition_seeds() {
        let s = Seeds::from_master(1);
        assert!(s.all_distinct());
        assert_eq!(s.for_repetition(0), s);
        assert_ne!(s.for_repetition(1), s);
        assert_ne!(s.for_repetition(1), s.for_repetition(2));
        assert!(!Seeds {
            bits_train: 1,
            bits_test: 1,
            mask: 2,
            noise: 3
        }
        .all_distinct());
    }

    #[test]
    fn mode_names() {
        for m in ["direct", "bypass", "no_mask", "elm", "rc"] {
            assert_eq!(m.parse::<PipelineMode>().unwrap().name(), m);
        }
        assert!(PipelineMode::Rc.uses_mask() && !PipelineMode::NoMask.uses_mask());
    }
}
