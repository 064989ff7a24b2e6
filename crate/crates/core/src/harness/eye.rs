use std::io::Write;
use std::path::Path;

use super::config::ExperimentConfig;
use super::pipeline::{link_output, Stream};
use super::{sample_bits, HarnessError};

/// Overlaid two-bit traces of the received training stream and the
/// per-class histogram of the single sample taken at `eye.phase`.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeDiagram {
    pub samples_per_bit: usize,
    /// Trace `i` covers bits `i` and `i + 1`.
    pub traces: Vec<Vec<f64>>,
    pub bin_edges: Vec<f64>,
    pub counts_zero: Vec<usize>,
    pub counts_one: Vec<usize>,
}

pub fn eye_diagram(cfg: &ExperimentConfig) -> Result<EyeDiagram, HarnessError> {
    cfg.link.validate().map_err(|e| HarnessError::Config(format!("link: {e}")))?;
    let opts = &cfg.eye;
    if opts.bins == 0 || !(0.0..1.0).contains(&opts.phase) {
        return Err(HarnessError::Config("eye needs at least one bin and a phase in [0, 1)".into()));
    }
    let out = link_output(cfg, &cfg.seeds, Stream::Train)?;
    let spb = cfg.link.samples_per_bit();
    let n = cfg.n_bits;
    let traces = (0..opts.traces.min(n.saturating_sub(1)))
        .map(|i| out.wave.samples[i * spb..(i + 2) * spb].to_vec())
        .collect();
    let s = sample_bits(&out.wave, cfg.link.bit_rate_bps() as f64, n, 1, opts.phase)
        .map_err(|source| HarnessError::Sampling { stream: Stream::Train, source })?;
    let (lo, hi) = s
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let width = if hi > lo { (hi - lo) / opts.bins as f64 } else { 1.0 };
    let bin_edges = (0..=opts.bins).map(|i| lo + width * i as f64).collect();
    let mut counts_zero = vec![0; opts.bins];
    let mut counts_one = vec![0; opts.bins];
    for (&v, &b) in s.values().iter().zip(&out.bits.bits) {
        let i = (((v - lo) / width) as usize).min(opts.bins - 1);
        if b == 1 {
            counts_one[i] += 1;
        } else {
            counts_zero[i] += 1;
        }
    }
    Ok(EyeDiagram {
        samples_per_bit: spb,
        traces,
        bin_edges,
        counts_zero,
        counts_one,
    })
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| HarnessError::io(path, e))
}

/// Long format `trace,t_bits,value`, time in bit periods from the trace start.
pub fn write_eye_csv(path: &Path, eye: &EyeDiagram) -> Result<(), HarnessError> {
    let mut text = format!("# tdrc eye schema {}\ntrace,t_bits,value\n", super::SCHEMA_VERSION);
    for (i, tr) in eye.traces.iter().enumerate() {
        for (s, v) in tr.iter().enumerate() {
            text.push_str(&format!("{i},{},{v}\n", s as f64 / eye.samples_per_bit as f64));
        }
    }
    write(path, &text)
}

pub fn write_histogram_csv(path: &Path, eye: &EyeDiagram) -> Result<(), HarnessError> {
    let mut text = format!("# tdrc histogram schema {}\nbin_lo,bin_hi,count_zero,count_one\n", super::SCHEMA_VERSION);
    for i in 0..eye.counts_zero.len() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            eye.bin_edges[i],
            eye.bin_edges[i + 1],
            eye.counts_zero[i],
            eye.counts_one[i]
        ));
    }
    write(path, &text)
}
