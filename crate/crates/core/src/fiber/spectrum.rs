use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair for one length. Inverse is normalized by `1/n`.
pub(crate) struct Spectrum {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    n: usize,
}

impl Spectrum {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            n,
        }
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Multiply the spectrum of `buf` by `response[k]` (bin order as rustfft).
    pub(crate) fn filter(&mut self, buf: &mut [Complex64], response: &[Complex64]) {
        self.forward(buf);
        buf.iter_mut().zip(response).for_each(|(v, h)| *v *= h);
        self.inverse(buf);
    }
}

/// Signed frequency of each FFT bin in Hz.
pub(crate) fn bin_frequencies(n: usize, sample_rate_hz: f64) -> Vec<f64> {
    let df = sample_rate_hz / n as f64;
    (0..n)
        .map(|k| {
            if k <= (n - 1) / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}

/// Apply a real frequency response to a real signal.
pub(crate) fn filter_real(x: &[f64], response: &[Complex64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Spectrum::new(x.len()).filter(&mut buf, response);
    buf.into_iter().map(|c| c.re).collect()
}
