//! Coherent and projective interrogation chains.
//!
//! Both chains apply `S`, then `N` repetitions of `(B_j, S)`. The projective
//! chain additionally projects onto the non-absorbing subspace right after
//! every `B_j`, carrying the conditional state unnormalized so that its
//! trace is the survival probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gates::{beam_splitter, optimal_phi, projector_nonabs, SequenceConfig};
use crate::linalg::{clamp_probability, DensityMatrix3, PureState3, C64};
use crate::{IfmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Coherent,
    Projective,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 2] = [ProtocolKind::Coherent, ProtocolKind::Projective];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Coherent => "coherent",
            ProtocolKind::Projective => "projective",
        }
    }
}

/// Probabilities recorded after each Ramsey step.
///
/// Coherent records are `(p0, p1, p2)`. Projective records are
/// `(p_det, p_abs, p_other)` where `p_abs` is cumulative up to that step and
/// `p_other = 1 - p_det - p_abs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub kind: ProtocolKind,
    pub per_step: Vec<[f64; 3]>,
    pub final_probs: [f64; 3],
}

impl ProtocolTrace {
    fn from_steps(kind: ProtocolKind, per_step: Vec<[f64; 3]>) -> Self {
        let final_probs = *per_step.last().expect("at least one Ramsey step");
        ProtocolTrace {
            kind,
            per_step,
            final_probs,
        }
    }

    pub fn n(&self) -> usize {
        self.per_step.len()
    }

    /// `p0` or `p_det`.
    pub fn success(&self) -> f64 {
        self.final_probs[0]
    }

    /// `p2` or `p_abs`.
    pub fn absorption(&self) -> f64 {
        match self.kind {
            ProtocolKind::Coherent => self.final_probs[2],
            ProtocolKind::Projective => self.final_probs[1],
        }
    }

    /// `p1` or `1 - p_det - p_abs`.
    pub fn miss(&self) -> f64 {
        match self.kind {
            ProtocolKind::Coherent => self.final_probs[1],
            ProtocolKind::Projective => self.final_probs[2],
        }
    }

    /// Interaction-free efficiency `success / (success + absorption)`.
    pub fn efficiency(&self) -> Option<f64> {
        ratio(self.success(), self.success() + self.absorption())
    }

    pub fn positive_ratio(&self) -> Option<f64> {
        ratio(self.success(), self.success() + self.miss())
    }

    pub fn negative_ratio(&self) -> Option<f64> {
        ratio(self.miss(), self.success() + self.miss())
    }
}

/// Denominators below this are rounding residue of an exact zero: the
/// density-matrix chains resolve probabilities only to a few ulp of one.
pub const RATIO_FLOOR: f64 = 1e-14;

/// `num / den`, or `None` when the denominator vanishes.
pub(crate) fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > RATIO_FLOOR {
        Some((num / den).clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Confusion-matrix figures of merit. `None` marks an undefined ratio
/// (zero denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub efficiency: Option<f64>,
    pub positive_ratio: Option<f64>,
    pub negative_ratio: Option<f64>,
    pub fpr: Option<f64>,
}

pub fn merits(trace: &ProtocolTrace, dark_trace: &ProtocolTrace) -> Result<MeritReport> {
    if trace.kind != dark_trace.kind {
        return Err(IfmError::invalid(
            "dark_trace",
            "dark trace must come from the same protocol",
        ));
    }
    Ok(MeritReport {
        efficiency: trace.efficiency(),
        positive_ratio: trace.positive_ratio(),
        negative_ratio: trace.negative_ratio(),
        fpr: dark_trace.positive_ratio(),
    })
}

pub fn run(kind: ProtocolKind, cfg: &SequenceConfig, init: &DensityMatrix3) -> Result<ProtocolTrace> {
    match kind {
        ProtocolKind::Coherent => run_coherent(cfg, init),
        ProtocolKind::Projective => run_projective(cfg, init),
    }
}

pub fn run_coherent(cfg: &SequenceConfig, init: &DensityMatrix3) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let s = beam_splitter(cfg.phi);
    let mut rho = init.conjugate_by(&s);
    let mut per_step = Vec::with_capacity(cfg.n);
    for slot in &cfg.slots {
        rho = rho.conjugate_by(&slot.gate()).conjugate_by(&s);
        per_step.push(rho.probabilities());
    }
    Ok(ProtocolTrace::from_steps(ProtocolKind::Coherent, per_step))
}

pub fn run_projective(cfg: &SequenceConfig, init: &DensityMatrix3) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let s = beam_splitter(cfg.phi);
    let keep = projector_nonabs();
    let mut rho = init.conjugate_by(&s);
    let mut absorbed = 0.0;
    let mut per_step = Vec::with_capacity(cfg.n);
    for slot in &cfg.slots {
        rho = rho.conjugate_by(&slot.gate());
        absorbed += rho.populations()[2].max(0.0);
        rho = rho.project(&keep).conjugate_by(&s);
        per_step.push(projective_record(rho.populations()[0], absorbed));
    }
    Ok(ProtocolTrace::from_steps(ProtocolKind::Projective, per_step))
}

pub(crate) fn projective_record(detected: f64, absorbed: f64) -> [f64; 3] {
    let det = clamp_probability(detected);
    let abs = clamp_probability(absorbed);
    [det, abs, clamp_probability(1.0 - det - abs)]
}

/// Final coherent state `U_N ψ`.
pub fn coherent_state(cfg: &SequenceConfig, psi: &PureState3) -> PureState3 {
    let s = beam_splitter(cfg.phi);
    cfg.slots
        .iter()
        .fold(s.apply(psi), |state, slot| s.apply(&slot.gate().apply(&state)))
}

/// Final probabilities of the pure-state chain started in `|0>`.
///
/// Same numbers as [`run`] with a ground-state density matrix, at a third of
/// the cost; the metrology sweeps use this path.
pub fn final_probabilities(kind: ProtocolKind, cfg: &SequenceConfig) -> [f64; 3] {
    let ground = PureState3::ground();
    match kind {
        ProtocolKind::Coherent => coherent_state(cfg, &ground).populations().map(clamp_probability),
        ProtocolKind::Projective => {
            let s = beam_splitter(cfg.phi);
            let mut psi = s.apply(&ground);
            let mut absorbed = 0.0;
            for slot in &cfg.slots {
                psi = slot.gate().apply(&psi);
                absorbed += psi.amps[2].norm_sqr();
                psi.amps[2] = C64::new(0.0, 0.0);
                psi = s.apply(&psi);
            }
            projective_record(psi.amps[0].norm_sqr(), absorbed)
        }
    }
}

/// Detection and absorption probabilities of the projective chain for
/// `θ = π`, where every step restarts from `|0>`.
///
/// `p_det = cos²(φ/2)^(N+1)`, `p_abs = sin²(φ/2) Σ_{j<N} cos²(φ/2)^j`.
pub fn closed_form_projective(n: usize, phi: f64) -> (f64, f64) {
    let stay = (phi / 2.0).cos().powi(2);
    let leak = (phi / 2.0).sin().powi(2);
    let p_det = stay.powi(n as i32 + 1);
    let geometric: f64 = (0..n).map(|j| stay.powi(j as i32)).sum();
    (p_det, leak * geometric)
}

/// How the beam-splitter angle is chosen at each `N` of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiRule {
    Optimal,
    /// `φ_N + offset`
    OptimalOffset(f64),
    Fixed(f64),
}

impl PhiRule {
    pub fn phi(self, n: usize) -> f64 {
        match self {
            PhiRule::Optimal => optimal_phi(n),
            PhiRule::OptimalOffset(d) => optimal_phi(n) + d,
            PhiRule::Fixed(phi) => phi,
        }
    }
}

/// Row-major `(n, θ)` grid of traces: `traces[i * thetas.len() + k]` holds
/// `ns[i]`, `thetas[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub kind: ProtocolKind,
    pub ns: Vec<usize>,
    pub thetas: Vec<f64>,
    pub traces: Vec<ProtocolTrace>,
}

impl SurfaceGrid {
    pub fn at(&self, i_n: usize, i_theta: usize) -> &ProtocolTrace {
        &self.traces[i_n * self.thetas.len() + i_theta]
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, &ProtocolTrace)> + '_ {
        self.ns.iter().enumerate().flat_map(move |(i, &n)| {
            self.thetas
                .iter()
                .enumerate()
                .map(move |(k, &theta)| (n, theta, self.at(i, k)))
        })
    }
}

/// Uniform-pulse traces over a grid of `N` and `θ`, all pulses at `phase`.
pub fn surface_sweep(
    ns: &[usize],
    phi_rule: PhiRule,
    thetas: &[f64],
    phase: f64,
    kind: ProtocolKind,
    init: &DensityMatrix3,
) -> Result<SurfaceGrid> {
    if ns.windows(2).any(|w| w[0] >= w[1]) || thetas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IfmError::invalid("sweep", "axes must be strictly increasing"));
    }
    let points: Vec<(usize, f64)> = ns.iter().flat_map(|&n| thetas.iter().map(move |&t| (n, t))).collect();
    let traces = points
        .par_iter()
        .map(|&(n, theta)| {
            let cfg = SequenceConfig::uniform(n, phi_rule.phi(n), theta, phase);
            run(kind, &cfg, init)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceGrid {
        kind,
        ns: ns.to_vec(),
        thetas: thetas.to_vec(),
        traces,
    })
}
