//! Simulation of interaction-free pulse detection with a three-level
//! detector.
//!
//! A qutrit starts in `|0>` and goes through `N` Ramsey sequences on the 0–1
//! transition; the pulse to be detected, if present, drives the 1–2
//! transition between beam splitters. The coherent protocol keeps the whole
//! evolution unitary; the projective protocol measures absorption into `|2>`
//! after every pulse. Modules:
//!
//! - [`linalg`]: qutrit states and operators
//! - [`gates`]: beam splitters, pulses, projectors, sequence configuration
//! - [`protocol`]: both interrogation chains and their figures of merit
//! - [`asymptotics`]: large-`N` approximations and the amplitude recursions
//! - [`metrology`]: Fisher information, thresholds and scaling fits
//! - [`open_system`]: relaxation, thermal initial states and detuning
//! - [`ensembles`]: seeded Monte Carlo over pulse strengths, phases and placement

pub mod asymptotics;
pub mod ensembles;
mod error;
pub mod gates;
pub mod linalg;
pub mod metrology;
pub mod open_system;
pub mod protocol;

pub use error::{IfmError, Result};
pub use gates::{optimal_phi, PulseSlot, SequenceConfig};
pub use linalg::{DensityMatrix3, Operator3, PureState3, C64};
pub use protocol::{MeritReport, ProtocolKind, ProtocolTrace};
