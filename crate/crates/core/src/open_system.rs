//! Relaxation, thermal initial states and detuned drives.
//!
//! Pulses are integrated from the rotating-frame master equation
//! `dρ/dt = -i[H, ρ] + Γ₁₀ D[|0><1|]ρ + Γ₂₁ D[|1><2|]ρ` with fixed-step RK4.
//! Rates are given in MHz and read as inverse microseconds; time is
//! integrated in microseconds. Pulses are back to back, and an empty B-slot
//! still lasts one B duration, during which only relaxation acts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gates::{PulseSlot, SequenceConfig};
use crate::linalg::{DensityMatrix3, Operator3, C64};
use crate::protocol::{projective_record, ProtocolKind, ProtocolTrace};
use crate::{IfmError, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;

pub const DEFAULT_BS_DURATION: f64 = 56e-9;
pub const DEFAULT_B_DURATION: f64 = 112e-9;
pub const DEFAULT_STEPS_PER_PULSE: usize = 200;
pub const MIN_STEPS_PER_PULSE: usize = 10;

const MICRO: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    /// Constant Rabi frequency `Ω = angle / duration`.
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gamma10_mhz: f64,
    pub gamma21_mhz: f64,
    pub bs_duration_s: f64,
    pub b_duration_s: f64,
    pub envelope: Envelope,
    pub steps_per_pulse: usize,
}

impl NoiseModel {
    pub fn new(gamma10_mhz: f64, gamma21_mhz: f64) -> Self {
        NoiseModel {
            gamma10_mhz,
            gamma21_mhz,
            bs_duration_s: DEFAULT_BS_DURATION,
            b_duration_s: DEFAULT_B_DURATION,
            envelope: Envelope::Rectangular,
            steps_per_pulse: DEFAULT_STEPS_PER_PULSE,
        }
    }

    pub fn noiseless() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Transmon-like line `Γ₂₁ = 2Γ₁₀`.
    pub fn transmon(gamma10_mhz: f64) -> Self {
        Self::new(gamma10_mhz, 2.0 * gamma10_mhz)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("gamma10_mhz", self.gamma10_mhz), ("gamma21_mhz", self.gamma21_mhz)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(IfmError::invalid(
                    name,
                    format!("rate {g} must be finite and non-negative"),
                ));
            }
        }
        for (name, t) in [
            ("bs_duration_s", self.bs_duration_s),
            ("b_duration_s", self.b_duration_s),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(IfmError::invalid(name, format!("duration {t} must be positive")));
            }
        }
        if self.steps_per_pulse < MIN_STEPS_PER_PULSE {
            return Err(IfmError::invalid(
                "steps_per_pulse",
                format!("{} is below the minimum of {MIN_STEPS_PER_PULSE}", self.steps_per_pulse),
            ));
        }
        Ok(())
    }
}

/// Thermal equilibrium of the detector before the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub temperature_k: f64,
    /// Angular frequency of the 0–1 transition, rad/s.
    pub omega01: f64,
    /// Angular frequency of the 1–2 transition, rad/s.
    pub omega12: f64,
}

impl ThermalSpec {
    pub fn from_ghz(temperature_k: f64, f01_ghz: f64, f12_ghz: f64) -> Result<Self> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let spec = ThermalSpec {
            temperature_k,
            omega01: two_pi * f01_ghz * 1e9,
            omega12: two_pi * f12_ghz * 1e9,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k >= 0.0 && self.temperature_k.is_finite()) {
            return Err(IfmError::invalid("temperature", format!("{} K", self.temperature_k)));
        }
        if !(self.omega01 > 0.0 && self.omega12 > 0.0) {
            return Err(IfmError::invalid("omega", "transition frequencies must be positive"));
        }
        Ok(())
    }

    /// Boltzmann populations of `|0>, |1>, |2>`.
    pub fn populations(&self) -> [f64; 3] {
        if self.temperature_k == 0.0 {
            return [1.0, 0.0, 0.0];
        }
        let kt = BOLTZMANN * self.temperature_k;
        let w1 = (-HBAR * self.omega01 / kt).exp();
        let w2 = (-HBAR * (self.omega01 + self.omega12) / kt).exp();
        let z = 1.0 + w1 + w2;
        [1.0 / z, w1 / z, w2 / z]
    }
}

pub fn thermal_state(spec: &ThermalSpec) -> Result<DensityMatrix3> {
    spec.validate()?;
    Ok(DensityMatrix3::diagonal(spec.populations()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    ZeroOne,
    OneTwo,
}

/// A rectangular drive on one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub transition: Transition,
    /// Integrated Rabi angle.
    pub angle: f64,
    pub phase: f64,
    /// Detuning of the drive, rad/s; only used on the 1–2 transition.
    pub detuning: f64,
}

impl Drive {
    pub fn beam_splitter(phi: f64) -> Self {
        Drive {
            transition: Transition::ZeroOne,
            angle: phi,
            phase: 0.0,
            detuning: 0.0,
        }
    }

    /// Drive realizing `slot` over `duration` seconds, or `None` for an
    /// empty slot.
    pub fn from_slot(slot: &PulseSlot, duration: f64) -> Option<Self> {
        slot.occupied.then(|| Drive {
            transition: Transition::OneTwo,
            angle: slot.theta,
            phase: slot.phase,
            detuning: slot.chi / duration,
        })
    }

    /// Rotating-frame Hamiltonian in rad/μs.
    fn hamiltonian(&self, duration_us: f64) -> Operator3 {
        let half = 0.5 * self.angle / duration_us;
        let mut h = Operator3::zeros();
        match self.transition {
            Transition::ZeroOne => {
                h.m[0][1] = C64::new(0.0, -half);
                h.m[1][0] = C64::new(0.0, half);
            }
            Transition::OneTwo => {
                h.m[1][2] = C64::from_polar(half, -self.phase);
                h.m[2][1] = C64::from_polar(half, self.phase);
                h.m[2][2] = C64::new(-self.detuning / MICRO, 0.0);
            }
        }
        h
    }
}

/// `-i[H, ρ] + Σ dissipators`, rates in 1/μs.
fn lindblad_rhs(h: &Operator3, rho: &Operator3, g10: f64, g21: f64) -> Operator3 {
    let comm = h.matmul(rho) - rho.matmul(h);
    let mut out = comm.scale(C64::new(0.0, -1.0));
    for (upper, lower, g) in [(1usize, 0usize, g10), (2, 1, g21)] {
        if g == 0.0 {
            continue;
        }
        out.m[lower][lower] += rho.m[upper][upper] * g;
        for i in 0..3 {
            for j in 0..3 {
                let hits = (i == upper) as u8 + (j == upper) as u8;
                if hits > 0 {
                    out.m[i][j] -= rho.m[i][j] * (0.5 * g * hits as f64);
                }
            }
        }
    }
    out
}

/// Integrates one pulse, or free relaxation when `drive` is `None`.
pub fn lindblad_propagate(
    rho: &DensityMatrix3,
    drive: Option<&Drive>,
    noise: &NoiseModel,
    duration_s: f64,
) -> Result<DensityMatrix3> {
    noise.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(IfmError::invalid(
            "duration",
            format!("{duration_s} s must be positive"),
        ));
    }
    let duration_us = duration_s * MICRO;
    let h = drive.map_or_else(Operator3::zeros, |d| d.hamiltonian(duration_us));
    let (g10, g21) = (noise.gamma10_mhz, noise.gamma21_mhz);
    let dt = duration_us / noise.steps_per_pulse as f64;
    let c = |x: f64| C64::new(x, 0.0);
    let mut r = rho.elements;
    for _ in 0..noise.steps_per_pulse {
        let k1 = lindblad_rhs(&h, &r, g10, g21);
        let k2 = lindblad_rhs(&h, &(r + k1.scale(c(0.5 * dt))), g10, g21);
        let k3 = lindblad_rhs(&h, &(r + k2.scale(c(0.5 * dt))), g10, g21);
        let k4 = lindblad_rhs(&h, &(r + k3.scale(c(dt))), g10, g21);
        let incr = (k1 + k2.scale(c(2.0)) + k3.scale(c(2.0)) + k4).scale(c(dt / 6.0));
        r = DensityMatrix3::from_operator(r + incr).symmetrize().elements;
    }
    Ok(DensityMatrix3::from_operator(r))
}

/// Noisy counterpart of [`crate::protocol::run`].
pub fn run_noisy(
    kind: ProtocolKind,
    cfg: &SequenceConfig,
    noise: &NoiseModel,
    init: &DensityMatrix3,
) -> Result<ProtocolTrace> {
    match kind {
        ProtocolKind::Coherent => run_coherent_noisy(cfg, noise, init),
        ProtocolKind::Projective => run_projective_noisy(cfg, noise, init),
    }
}

fn b_step(rho: &DensityMatrix3, slot: &PulseSlot, noise: &NoiseModel) -> Result<DensityMatrix3> {
    let drive = Drive::from_slot(slot, noise.b_duration_s);
    lindblad_propagate(rho, drive.as_ref(), noise, noise.b_duration_s)
}

pub fn run_coherent_noisy(cfg: &SequenceConfig, noise: &NoiseModel, init: &DensityMatrix3) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let split = Drive::beam_splitter(cfg.phi);
    let s_step = |rho: &DensityMatrix3| lindblad_propagate(rho, Some(&split), noise, noise.bs_duration_s);
    let mut rho = s_step(init)?;
    let mut per_step = Vec::with_capacity(cfg.n);
    for slot in &cfg.slots {
        rho = s_step(&b_step(&rho, slot, noise)?)?;
        per_step.push(rho.probabilities());
    }
    Ok(ProtocolTrace {
        kind: ProtocolKind::Coherent,
        final_probs: *per_step.last().expect("n >= 1"),
        per_step,
    })
}

pub fn run_projective_noisy(cfg: &SequenceConfig, noise: &NoiseModel, init: &DensityMatrix3) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let split = Drive::beam_splitter(cfg.phi);
    let keep = crate::gates::projector_nonabs();
    let s_step = |rho: &DensityMatrix3| lindblad_propagate(rho, Some(&split), noise, noise.bs_duration_s);
    let mut rho = s_step(init)?;
    let mut absorbed = 0.0;
    let mut per_step = Vec::with_capacity(cfg.n);
    for slot in &cfg.slots {
        rho = b_step(&rho, slot, noise)?;
        absorbed += rho.populations()[2].max(0.0);
        rho = s_step(&rho.project(&keep))?;
        per_step.push(projective_record(rho.populations()[0], absorbed));
    }
    Ok(ProtocolTrace {
        kind: ProtocolKind::Projective,
        final_probs: *per_step.last().expect("n >= 1"),
        per_step,
    })
}

/// One point of a relaxation-rate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub gamma10_mhz: f64,
    pub gamma21_mhz: f64,
    pub trace: ProtocolTrace,
}

/// Noisy runs of `cfg` over every `(Γ₁₀, Γ₂₁)` pair, `Γ₁₀` major, in input
/// order. Durations and step count come from `base`.
pub fn noise_grid(
    kind: ProtocolKind,
    cfg: &SequenceConfig,
    gamma10s: &[f64],
    gamma21s: &[f64],
    base: &NoiseModel,
    init: &DensityMatrix3,
) -> Result<Vec<NoisePoint>> {
    let pairs: Vec<(f64, f64)> = gamma10s
        .iter()
        .flat_map(|&a| gamma21s.iter().map(move |&b| (a, b)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(g10, g21)| {
            let noise = NoiseModel {
                gamma10_mhz: g10,
                gamma21_mhz: g21,
                ..*base
            };
            Ok(NoisePoint {
                gamma10_mhz: g10,
                gamma21_mhz: g21,
                trace: run_noisy(kind, cfg, &noise, init)?,
            })
        })
        .collect()
}

/// Slot for a pulse of strength `theta` detuned by `delta` (rad/s) for
/// `tau` seconds: `χ = δτ`.
pub fn detuned_schedule(theta: f64, phase: f64, delta: f64, tau: f64) -> Result<PulseSlot> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(IfmError::invalid("tau", format!("{tau} s must be positive")));
    }
    Ok(PulseSlot::detuned(theta, phase, delta * tau))
}

/// Excitation probability of a two-level system after `n` detuned pulses:
/// `θ²/(θ²+χ²) sin²(n√(θ²+χ²)/2)`.
pub fn two_level_signal(n: usize, theta: f64, chi: f64) -> f64 {
    let r2 = theta * theta + chi * chi;
    if r2 == 0.0 {
        return 0.0;
    }
    theta * theta / r2 * (n as f64 * r2.sqrt() / 2.0).sin().powi(2)
}

/// Full width at half maximum of a peak sampled on an increasing grid,
/// measured outward from the sample closest to `center`. Returns `None` if
/// the signal does not drop below half the peak on both sides.
pub fn half_max_bandwidth(xs: &[f64], ys: &[f64], center: f64) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let i0 = (0..xs.len()).min_by(|&a, &b| (xs[a] - center).abs().total_cmp(&(xs[b] - center).abs()))?;
    let half = ys[i0] / 2.0;
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize + step) as usize;
            if ys[j] < half {
                let t = (ys[i] - half) / (ys[i] - ys[j]);
                return Some(xs[i] + t * (xs[j] - xs[i]));
            }
        }
        None
    };
    let right = crossing(&mut (i0..xs.len() - 1), 1)?;
    let left = crossing(&mut (1..=i0).rev(), -1)?;
    Some(right - left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{b_pulse, b_pulse_detuned, beam_splitter};
    use crate::protocol::run;
    use std::f64::consts::PI;

    fn free(rho: &DensityMatrix3, noise: &NoiseModel, t: f64) -> DensityMatrix3 {
        lindblad_propagate(rho, None, noise, t).unwrap()
    }

    #[test]
    fn closed_system_limit_matches_gates() {
        let noise = NoiseModel::noiseless();
        let rho = DensityMatrix3::diagonal([0.6, 0.3, 0.1]).conjugate_by(&beam_splitter(0.9));
        let s = lindblad_propagate(&rho, Some(&Drive::beam_splitter(0.7)), &noise, 56e-9).unwrap();
        assert!(s.elements.max_abs_diff(&rho.conjugate_by(&beam_splitter(0.7)).elements) < 1e-8);
        let slot = PulseSlot::resonant(2.3, 0.4);
        let b = lindblad_propagate(&rho, Drive::from_slot(&slot, 112e-9).as_ref(), &noise, 112e-9).unwrap();
        assert!(b.elements.max_abs_diff(&rho.conjugate_by(&b_pulse(2.3, 0.4)).elements) < 1e-8);
        let slot = detuned_schedule(1.1, 0.2, 3e6, 112e-9).unwrap();
        let b = lindblad_propagate(&rho, Drive::from_slot(&slot, 112e-9).as_ref(), &noise, 112e-9).unwrap();
        let expected = rho.conjugate_by(&b_pulse_detuned(1.1, 0.2, slot.chi));
        assert!(b.elements.max_abs_diff(&expected.elements) < 1e-8);
    }

    #[test]
    fn single_level_decay() {
        let noise = NoiseModel::new(0.7, 5.0);
        let t = 1.3e-6;
        let p = free(&DensityMatrix3::diagonal([0.0, 1.0, 0.0]), &noise, t).populations();
        assert!((p[1] - (-0.7f64 * 1.3).exp()).abs() < 1e-6);
        assert!(p[2].abs() < 1e-15);
    }

    #[test]
    fn cascade_decay() {
        let (g10, g21) = (0.4, 3.0);
        let noise = NoiseModel::new(g10, g21);
        for t_us in [0.1, 0.5, 2.0] {
            let p = free(&DensityMatrix3::diagonal([0.0, 0.0, 1.0]), &noise, t_us * 1e-6).populations();
            let p2 = (-g21 * t_us).exp();
            let p1 = g21 / (g21 - g10) * ((-g10 * t_us).exp() - (-g21 * t_us).exp());
            assert!((p[2] - p2).abs() < 1e-6 && (p[1] - p1).abs() < 1e-6);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_step_halving() {
        let cfg = SequenceConfig::optimal(8, PI, PI / 2.0);
        let coarse = NoiseModel::new(0.1, 10.0);
        let fine = NoiseModel {
            steps_per_pulse: 2 * coarse.steps_per_pulse,
            ..coarse
        };
        let init = DensityMatrix3::ground();
        for kind in ProtocolKind::ALL {
            let a = run_noisy(kind, &cfg, &coarse, &init).unwrap();
            let b = run_noisy(kind, &cfg, &fine, &init).unwrap();
            for k in 0..3 {
                assert!((a.final_probs[k] - b.final_probs[k]).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn noiseless_runs_match_unitary_chain() {
        let cfg = SequenceConfig::optimal(6, 2.2, 0.3);
        let init = DensityMatrix3::diagonal([0.9, 0.08, 0.02]);
        for kind in ProtocolKind::ALL {
            let a = run_noisy(kind, &cfg, &NoiseModel::noiseless(), &init).unwrap();
            let b = run(kind, &cfg, &init).unwrap();
            for (x, y) in a.per_step.iter().flatten().zip(b.per_step.iter().flatten()) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn trace_and_positivity_preserved() {
        let noise = NoiseModel::new(0.2, 4.0);
        let mut rho = DensityMatrix3::diagonal([0.5, 0.3, 0.2]);
        for k in 0..10 {
            let slot = PulseSlot::resonant(0.8 * k as f64, 0.3 * k as f64);
            rho = lindblad_propagate(&rho, Drive::from_slot(&slot, 112e-9).as_ref(), &noise, 112e-9).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-9 * (k + 1) as f64);
            assert!(rho.eigenvalues()[0] > -1e-8);
        }
    }

    #[test]
    fn projective_conditional_trace_nonincreasing() {
        let cfg = SequenceConfig::optimal(10, 1.7, 0.0);
        let t = run_projective_noisy(&cfg, &NoiseModel::new(0.3, 1.0), &DensityMatrix3::ground()).unwrap();
        for w in t.per_step.windows(2) {
            assert!(w[1][1] >= w[0][1]);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let mut noise = NoiseModel::noiseless();
        noise.steps_per_pulse = 5;
        assert!(lindblad_propagate(&DensityMatrix3::ground(), None, &noise, 1e-7).is_err());
        assert!(NoiseModel::new(-1.0, 0.0).validate().is_err());
        assert!(lindblad_propagate(&DensityMatrix3::ground(), None, &NoiseModel::noiseless(), 0.0).is_err());
    }

    #[test]
    fn thermal_states() {
        let zero = thermal_state(&ThermalSpec::from_ghz(0.0, 7.2, 6.85).unwrap()).unwrap();
        assert_eq!(zero, DensityMatrix3::ground());
        let warm = ThermalSpec::from_ghz(0.1, 7.2, 6.85).unwrap();
        let p = warm.populations();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p[0] > p[1] && p[1] > p[2]);
        assert!(ThermalSpec::from_ghz(-1.0, 7.2, 6.85).is_err());
    }

    #[test]
    fn schedules_and_signals() {
        assert_eq!(detuned_schedule(1.0, 0.0, 0.0, 1e-7).unwrap().chi, 0.0);
        assert!(detuned_schedule(1.0, 0.0, 1.0, 0.0).is_err());
        for n in [1, 5, 50] {
            for chi in [0.0, 0.5, 3.0] {
                assert!(two_level_signal(n, 0.5, chi) <= 0.25 / (0.25 + chi * chi) + 1e-15);
            }
        }
        let xs: Vec<f64> = (-100..=100).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        assert!((half_max_bandwidth(&xs, &ys, 0.0).unwrap() - 2.0).abs() < 1e-2);
    }
}
