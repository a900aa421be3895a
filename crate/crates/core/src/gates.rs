//! Beam splitters, B-pulses and the absorption projectors.
//!
//! Conventions: the beam splitter `S(φ)` rotates the 0–1 subspace by
//! `exp(-iφσ^y_01/2)`; the B-pulse `B(θ, ϕ)` rotates the 1–2 subspace about
//! the axis `(cos ϕ, sin ϕ, 0)` and never touches `|0>`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{Operator3, C64};
use crate::{IfmError, Result};

/// Period of the B-pulse in its strength.
pub const THETA_PERIOD: f64 = 4.0 * PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Beam-splitter angle `π/(N+1)` that sends `|0>` to `|1>` after `N+1`
/// splitters when no pulse is present.
pub fn optimal_phi(n: usize) -> f64 {
    PI / (n as f64 + 1.0)
}

pub fn beam_splitter(phi: f64) -> Operator3 {
    let (s, c) = (phi / 2.0).sin_cos();
    let c = C64::new(c, 0.0);
    let s = C64::new(s, 0.0);
    Operator3::from_rows([[c, -s, ZERO], [s, c, ZERO], [ZERO, ZERO, ONE]])
}

/// Resonant B-pulse. `theta` is reduced modulo 4π first.
pub fn b_pulse(theta: f64, phase: f64) -> Operator3 {
    let theta = theta.rem_euclid(THETA_PERIOD);
    let (s, c) = (theta / 2.0).sin_cos();
    let minus_i = C64::new(0.0, -1.0);
    let upper = minus_i * C64::from_polar(s, -phase);
    let lower = minus_i * C64::from_polar(s, phase);
    let c = C64::new(c, 0.0);
    Operator3::from_rows([[ONE, ZERO, ZERO], [ZERO, c, upper], [ZERO, lower, c]])
}

/// `sin(r/2)/r`, finite at `r = 0`.
fn half_sinc(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        0.5 - r * r / 48.0
    } else {
        (r / 2.0).sin() / r
    }
}

/// B-pulse detuned by `chi = δτ` from the 1–2 transition.
///
/// The 1–2 block is `e^{iχ/2} [[b11, b12], [-b12*, b11*]]` with
/// `b11 = cos(r/2) - iχ sin(r/2)/r`, `b12 = -iθ e^{-iϕ} sin(r/2)/r` and
/// `r = √(θ²+χ²)`. The lower-left entry is taken as `-b12*`, the choice that
/// makes the block unitary. Unlike the resonant pulse this gate is not
/// periodic in `theta`, so no reduction is applied when `chi != 0`.
pub fn b_pulse_detuned(theta: f64, phase: f64, chi: f64) -> Operator3 {
    if chi == 0.0 {
        return b_pulse(theta, phase);
    }
    let r = theta.hypot(chi);
    let sinc = half_sinc(r);
    let b11 = C64::new((r / 2.0).cos(), -chi * sinc);
    let b12 = C64::new(0.0, -theta * sinc) * C64::from_polar(1.0, -phase);
    let b21 = -b12.conj();
    let b22 = b11.conj();
    let g = C64::from_polar(1.0, chi / 2.0);
    Operator3::from_rows([[ONE, ZERO, ZERO], [ZERO, g * b11, g * b12], [ZERO, g * b21, g * b22]])
}

/// `|2><2|`
pub fn projector_abs() -> Operator3 {
    Operator3::ket_bra(2, 2)
}

/// `|0><0| + |1><1|`
pub fn projector_nonabs() -> Operator3 {
    Operator3::diag([ONE, ONE, ZERO])
}

/// One Ramsey B-slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSlot {
    pub theta: f64,
    pub phase: f64,
    pub occupied: bool,
    /// Accumulated detuning phase `δτ`; zero for a resonant pulse.
    pub chi: f64,
}

impl PulseSlot {
    pub fn resonant(theta: f64, phase: f64) -> Self {
        PulseSlot {
            theta,
            phase,
            occupied: true,
            chi: 0.0,
        }
    }

    pub fn detuned(theta: f64, phase: f64, chi: f64) -> Self {
        PulseSlot {
            theta,
            phase,
            occupied: true,
            chi,
        }
    }

    /// A slot with no pulse in it.
    pub fn empty() -> Self {
        PulseSlot {
            theta: 0.0,
            phase: 0.0,
            occupied: false,
            chi: 0.0,
        }
    }

    pub fn effective_theta(&self) -> f64 {
        if self.occupied {
            self.theta
        } else {
            0.0
        }
    }

    pub fn gate(&self) -> Operator3 {
        if !self.occupied {
            Operator3::identity()
        } else {
            b_pulse_detuned(self.theta, self.phase, self.chi)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.phase.is_finite() && self.chi.is_finite()) {
            return Err(IfmError::invalid("slot", format!("non-finite pulse {self:?}")));
        }
        Ok(())
    }
}

/// `N` Ramsey sequences sharing one beam-splitter angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub n: usize,
    pub phi: f64,
    pub slots: Vec<PulseSlot>,
}

impl SequenceConfig {
    pub fn new(n: usize, phi: f64, slots: Vec<PulseSlot>) -> Result<Self> {
        let cfg = SequenceConfig { n, phi, slots };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Identical resonant pulses in every slot.
    pub fn uniform(n: usize, phi: f64, theta: f64, phase: f64) -> Self {
        SequenceConfig {
            n,
            phi,
            slots: vec![PulseSlot::resonant(theta, phase); n],
        }
    }

    /// Identical resonant pulses at the optimal angle `φ_N`.
    pub fn optimal(n: usize, theta: f64, phase: f64) -> Self {
        Self::uniform(n, optimal_phi(n), theta, phase)
    }

    /// Copy of `self` with every occupied slot's strength set to zero.
    pub fn dark(&self) -> Self {
        let mut out = self.clone();
        for slot in &mut out.slots {
            slot.theta = 0.0;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
        }
        if self.slots.len() != self.n {
            return Err(IfmError::SlotCountMismatch {
                expected: self.n,
                got: self.slots.len(),
            });
        }
        if !(self.phi > 0.0 && self.phi <= PI + 1e-12) {
            return Err(IfmError::invalid(
                "phi",
                format!("beam-splitter angle {} not in (0, π]", self.phi),
            ));
        }
        self.slots.iter().try_for_each(PulseSlot::validate)
    }
}
