//! Lang-Kobayashi response laser with delayed feedback and detuned injection:
//!
//! ```text
//! dE/dt = ½(1 + iα)(G − 1/t_ph) E + (k_f/t_in) E(t − τ) e^{iω₀τ}
//!         + (k_inj/t_in) E_inj(t) e^{−iΔω t} + √D ξ(t)
//! dN/dt = I/e − N/t_s − G |E|²
//! G     = g_n (N − N₀) / (1 + s|E|²)
//! ```
//!
//! Time is in ns; `|E|²` is a photon number. The field is integrated as
//! `F = E e^{iΔω t}`, in which injection is slowly varying and the detuning
//! becomes the linear term `iΔω F`. That term is propagated exactly by an
//! integrating-factor RK4 step; `|F| = |E|`, and the delayed term picks up the
//! extra phase `Δω τ`.
//!
//! The drive is constant within a step and jumps only on node boundaries, so
//! each step is smooth inside. Every step also yields a Hermite midpoint from
//! its end values and one-sided end derivatives: it feeds the half-step delay
//! lookups and the Simpson power average, both fourth order. Noise is added
//! after the deterministic step as `√(D dt)` times a unit complex normal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::NodeGeometry;
use super::ReservoirError;
use crate::signal::{ElectricalWaveform, Rng, PLANCK_J_S, SPEED_OF_LIGHT_M_PER_S};

const FINITE_CHECK_EVERY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    pub alpha: f64,
    pub sat: f64,
    pub n0_carriers: f64,
    pub gn_per_ns: f64,
    pub ts_ns: f64,
    pub tin_ns: f64,
    pub tph_ns: f64,
    pub e_charge_a_ns: f64,
    pub bias_current_a: f64,
    /// Field noise strength D (ns⁻¹).
    pub noise_d_per_ns: f64,
    pub wavelength_nm: f64,
}

impl Default for LaserParams {
    /// Transparency density and elementary charge with the exponents that
    /// reproduce the 15.37 mA solitary threshold.
    fn default() -> Self {
        Self {
            alpha: 3.0,
            sat: 5e-7,
            n0_carriers: 1.5e8,
            gn_per_ns: 1.2e-5,
            ts_ns: 2.0,
            tin_ns: 0.01,
            tph_ns: 0.002,
            e_charge_a_ns: 1.602e-10,
            bias_current_a: 15.3e-3,
            noise_d_per_ns: 30.0,
            wavelength_nm: 1550.0,
        }
    }
}

impl LaserParams {
    /// The constants exactly as printed (`N₀ = 1.5e-8`, `e = 1.602e10 A·ns`);
    /// kept for auditing, not physically meaningful.
    pub fn printed() -> Self {
        Self {
            n0_carriers: 1.5e-8,
            e_charge_a_ns: 1.602e10,
            ..Self::default()
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_d_per_ns = 0.0;
        self
    }

    /// Carrier number at threshold, `N₀ + 1/(g_n t_ph)`.
    pub fn threshold_carriers(&self) -> f64 {
        self.n0_carriers + 1.0 / (self.gn_per_ns * self.tph_ns)
    }

    /// Solitary threshold current `e · N_th / t_s` in A.
    pub fn threshold_current_a(&self) -> f64 {
        self.e_charge_a_ns * self.threshold_carriers() / self.ts_ns
    }

    pub fn omega0_rad_per_ns(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_M_PER_S / (self.wavelength_nm * 1e-9) * 1e-9
    }

    /// Optical power in mW of a field of `|E|² = photons` leaving through the
    /// photon lifetime: `hν · |E|² / t_ph`.
    pub fn photons_to_mw(&self, photons: f64) -> f64 {
        let nu = SPEED_OF_LIGHT_M_PER_S / (self.wavelength_nm * 1e-9);
        PLANCK_J_S * nu * photons / (self.tph_ns * 1e-9) * 1e3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionParams {
    pub k_inj: f64,
    pub e_inj0: f64,
    pub b_bias: f64,
    /// Injection minus response-laser frequency.
    pub delta_f_ghz: f64,
    pub k_f: f64,
    /// ω₀τ mod 2π.
    pub feedback_phase_rad: f64,
}

impl Default for InjectionParams {
    fn default() -> Self {
        Self {
            k_inj: 0.15,
            e_inj0: 100.0,
            b_bias: 0.5,
            delta_f_ghz: 5.0,
            k_f: 0.05,
            feedback_phase_rad: 0.0,
        }
    }
}

impl InjectionParams {
    /// Injection envelope `E_inj0 · (b_bias + masked)`.
    pub fn envelope(&self, masked: f64) -> f64 {
        self.e_inj0 * (self.b_bias + masked)
    }

    /// Injected power in mW for a field amplitude of `E_inj0`.
    pub fn full_scale_power_mw(&self, laser: &LaserParams) -> f64 {
        laser.photons_to_mw(self.e_inj0 * self.e_inj0)
    }

    pub fn delta_omega_rad_per_ns(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.delta_f_ghz
    }
}

/// Real envelope `E_inj0 · (b_bias + masked(t))` at the node rate.
pub fn build_injection(masked: &ElectricalWaveform, inj: &InjectionParams) -> Vec<f64> {
    masked.samples.iter().map(|&m| inj.envelope(m)).collect()
}

/// State handed to an observer after every step.
#[derive(Debug, Clone, Copy)]
pub struct StepState {
    /// Step index counted from the end of the wash-out.
    pub step: usize,
    /// Mean power over the step (Simpson on the ends and the Hermite midpoint).
    pub power: f64,
    pub field: Complex64,
    pub carriers: f64,
    /// `F(t − τ)` used at the start of the step.
    pub delayed: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// One value per integration step: mean `|E|²` over the step.
    pub power: Vec<f64>,
    pub dt_ns: f64,
}

/// Integration settings beyond the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunControl {
    /// Bias-only drive time before the first bit.
    pub washout_ns: f64,
    pub initial_field: f64,
}

impl Default for RunControl {
    fn default() -> Self {
        Self {
            washout_ns: 50.0,
            initial_field: 1.0,
        }
    }
}

/// Integrate over the node-rate drive, calling `observe` once per step
/// after the wash-out.
pub fn integrate_with<F: FnMut(&StepState)>(
    drive: &ElectricalWaveform,
    laser: &LaserParams,
    inj: &InjectionParams,
    geom: &NodeGeometry,
    control: &RunControl,
    rng: &mut Rng,
    mut observe: F,
) -> Result<(), ReservoirError> {
    geom.validate()?;
    let node_rate = 1e12 / geom.theta_ps;
    if (drive.sample_rate_hz / node_rate - 1.0).abs() > 1e-9 {
        return Err(ReservoirError::Geometry(format!(
            "drive sampled at {} Hz, node rate is {node_rate} Hz",
            drive.sample_rate_hz
        )));
    }
    if let Some(i) = drive.samples.iter().position(|v| !v.is_finite()) {
        return Err(ReservoirError::Diverged { step: i, t_ns: 0.0 });
    }
    let h = geom.dt_ns();
    let spn = geom.steps_per_node();
    let delay = geom.steps_per_tau();
    let washout_nodes = (control.washout_ns * 1e3 / geom.theta_ps).ceil() as usize;
    let washout = washout_nodes * spn;
    let total = washout + drive.len() * spn;

    let dw = inj.delta_omega_rad_per_ns();
    let rot = Complex64::new(0.0, dw);
    let half_turn = Complex64::from_polar(1.0, 0.5 * dw * h);
    let full_turn = half_turn * half_turn;
    let half_gain = Complex64::new(0.5, 0.5 * laser.alpha);
    let inv_tph = 1.0 / laser.tph_ns;
    let fb = Complex64::from_polar(
        inj.k_f / laser.tin_ns,
        inj.feedback_phase_rad + (dw * geom.tau_ns).rem_euclid(2.0 * std::f64::consts::PI),
    );
    let k_inj = inj.k_inj / laser.tin_ns;
    let pump = laser.bias_current_a / laser.e_charge_a_ns;
    let noise_sigma = (laser.noise_d_per_ns * h).sqrt();
    let mut noise = rng.derive("laser-noise");

    let gain = |f: Complex64, n: f64| laser.gn_per_ns * (n - laser.n0_carriers) / (1.0 + laser.sat * f.norm_sqr());
    // everything but the iΔω F term
    let field_rate = |f: Complex64, n: f64, fd: Complex64, j: f64| half_gain * (gain(f, n) - inv_tph) * f + fb * fd + k_inj * j;
    let carrier_rate = |f: Complex64, n: f64| pump - n / laser.ts_ns - gain(f, n) * f.norm_sqr();

    // F at steps s-M..=s and the midpoints of steps s-M..s, indexed mod M+1
    let hist = Complex64::new(control.initial_field, 0.0);
    let mut ring = vec![hist; delay + 1];
    let mut mids = vec![hist; delay + 1];
    let mut f = hist;
    let mut n = pump * laser.ts_ns;
    let bias_drive = inj.envelope(0.0);
    let drive_at = |step: usize| {
        if step < washout {
            bias_drive
        } else {
            inj.envelope(drive.samples[(step - washout) / spn])
        }
    };
    let mut j = drive_at(0);
    let mut k1 = field_rate(f, n, ring[1 % (delay + 1)], j);
    for step in 0..total {
        let fd0 = ring[(step + 1) % (delay + 1)];
        let fd1 = ring[(step + 2) % (delay + 1)];
        let fdm = mids[(step + 1) % (delay + 1)];
        let c1 = carrier_rate(f, n);
        let fa = half_turn * (f + 0.5 * h * k1);
        let na = n + 0.5 * h * c1;
        let k2 = field_rate(fa, na, fdm, j);
        let c2 = carrier_rate(fa, na);
        let fb_ = half_turn * f + 0.5 * h * k2;
        let nb = n + 0.5 * h * c2;
        let k3 = field_rate(fb_, nb, fdm, j);
        let c3 = carrier_rate(fb_, nb);
        let fc = full_turn * f + h * half_turn * k3;
        let nc = n + h * c3;
        let k4 = field_rate(fc, nc, fd1, j);
        let c4 = carrier_rate(fc, nc);
        let mut f_next = full_turn * f + h / 6.0 * (full_turn * k1 + 2.0 * half_turn * (k2 + k3) + k4);
        let n_next = n + h / 6.0 * (c1 + 2.0 * (c2 + c3) + c4);
        if noise_sigma > 0.0 {
            f_next += noise.complex_normal() * noise_sigma;
        }
        let k_end = field_rate(f_next, n_next, fd1, j);
        let mid = 0.5 * (f + f_next) + h / 8.0 * ((rot * f + k1) - (rot * f_next + k_end));
        if step % FINITE_CHECK_EVERY == 0 && !(f_next.re.is_finite() && f_next.im.is_finite() && n_next.is_finite()) {
            return Err(ReservoirError::Diverged {
                step,
                t_ns: step as f64 * h,
            });
        }
        if step >= washout {
            observe(&StepState {
                step: step - washout,
                power: (f.norm_sqr() + 4.0 * mid.norm_sqr() + f_next.norm_sqr()) / 6.0,
                field: f_next,
                carriers: n_next,
                delayed: fd0,
            });
        }
        ring[(step + 1) % (delay + 1)] = f_next;
        mids[step % (delay + 1)] = mid;
        f = f_next;
        n = n_next;
        if step + 1 < total {
            let j_next = drive_at(step + 1);
            k1 = if j_next == j {
                k_end
            } else {
                field_rate(f, n, fd1, j_next)
            };
            j = j_next;
        }
    }
    if !(f.re.is_finite() && f.im.is_finite() && n.is_finite()) {
        return Err(ReservoirError::Diverged {
            step: total,
            t_ns: total as f64 * h,
        });
    }
    Ok(())
}

/// Per-step power trajectory over the whole drive.
pub fn integrate(
    drive: &ElectricalWaveform,
    laser: &LaserParams,
    inj: &InjectionParams,
    geom: &NodeGeometry,
    rng: &mut Rng,
) -> Result<Trajectory, ReservoirError> {
    let mut power = Vec::with_capacity(drive.len() * geom.steps_per_node());
    integrate_with(drive, laser, inj, geom, &RunControl::default(), rng, |s| power.push(s.power))?;
    Ok(Trajectory {
        power,
        dt_ns: geom.dt_ns(),
    })
}

/// Steady photon number of the free-running laser at `current_a`.
pub fn solitary_steady_photons(laser: &LaserParams, current_a: f64, settle_ns: f64) -> Result<f64, ReservoirError> {
    let laser = LaserParams {
        bias_current_a: current_a,
        noise_d_per_ns: 0.0,
        ..*laser
    };
    let inj = InjectionParams {
        k_inj: 0.0,
        k_f: 0.0,
        delta_f_ghz: 0.0,
        ..InjectionParams::default()
    };
    let geom = NodeGeometry::short();
    let control = RunControl {
        washout_ns: settle_ns,
        initial_field: 1.0,
    };
    let drive = ElectricalWaveform::new(vec![0.0; geom.n_total()], 1e12 / geom.theta_ps);
    let mut last = 0.0;
    integrate_with(&drive, &laser, &inj, &geom, &control, &mut Rng::new(0), |s| last = s.field.norm_sqr())?;
    Ok(last)
}

/// Threshold current (A) from a straight-line fit of simulated steady
/// photon number against bias current above threshold, extrapolated to zero.
pub fn simulated_threshold_a(laser: &LaserParams, currents_a: &[f64]) -> Result<f64, ReservoirError> {
    let points: Vec<(f64, f64)> = currents_a
        .iter()
        .map(|&i| solitary_steady_photons(laser, i, 200.0).map(|p| (i, p)))
        .collect::<Result<_, _>>()?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(mx - my / slope)
}
