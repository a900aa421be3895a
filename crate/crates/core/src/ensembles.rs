//! Seeded Monte Carlo over random pulse parameters and random pulse
//! placement.
//!
//! Every repetition draws from its own ChaCha8 stream, `seed` selecting the
//! key and the repetition index the stream, so results do not depend on
//! thread count or scheduling. Slot parameters are drawn in slot order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gates::{optimal_phi, PulseSlot, SequenceConfig, THETA_PERIOD};
use crate::linalg::DensityMatrix3;
use crate::protocol::{run, ProtocolKind, ProtocolTrace};
use crate::{IfmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn fixed(value: f64) -> Self {
        Interval { lo: value, hi: value }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.is_fixed() {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo <= self.hi
            && self.lo >= 0.0
            && self.hi <= THETA_PERIOD;
        if ok {
            Ok(())
        } else {
            Err(IfmError::invalid(
                name,
                format!("[{}, {}] not an interval in [0, 4π]", self.lo, self.hi),
            ))
        }
    }
}

/// Which B-slots carry a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Occupancy {
    /// Each slot independently occupied with this probability.
    Bernoulli(f64),
    /// Exactly this many slots occupied, positions uniformly at random.
    FixedCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub reps: usize,
    pub theta: Interval,
    pub phase: Interval,
    pub occupancy: Occupancy,
    pub seed: u64,
    pub kind: ProtocolKind,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
        }
        if self.reps == 0 {
            return Err(IfmError::invalid("reps", "need at least one repetition"));
        }
        self.theta.validate("theta")?;
        self.phase.validate("phase")?;
        match self.occupancy {
            Occupancy::Bernoulli(p) if !(0.0..=1.0).contains(&p) => {
                Err(IfmError::invalid("occupancy", format!("probability {p} not in [0, 1]")))
            }
            Occupancy::FixedCount(k) if k > self.n => Err(IfmError::invalid(
                "occupancy",
                format!("{k} pulses do not fit in {} slots", self.n),
            )),
            _ => Ok(()),
        }
    }

    fn draw(&self, rep: usize) -> SequenceConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        let occupied: Vec<bool> = match self.occupancy {
            Occupancy::Bernoulli(p) => (0..self.n).map(|_| p >= 1.0 || rng.random::<f64>() < p).collect(),
            Occupancy::FixedCount(k) => {
                let picks = rand::seq::index::sample(&mut rng, self.n, k);
                let mut occ = vec![false; self.n];
                picks.iter().for_each(|i| occ[i] = true);
                occ
            }
        };
        let slots = occupied
            .into_iter()
            .map(|occ| {
                if occ {
                    let theta = self.theta.sample(&mut rng);
                    PulseSlot::resonant(theta, self.phase.sample(&mut rng))
                } else {
                    PulseSlot::empty()
                }
            })
            .collect();
        SequenceConfig {
            n: self.n,
            phi: optimal_phi(self.n),
            slots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean_efficiency: Option<f64>,
    pub mean_pr: Option<f64>,
    pub mean_nr: Option<f64>,
    pub mean_absorption: f64,
    pub std_err_efficiency: Option<f64>,
    pub std_err_pr: Option<f64>,
    /// Repetitions with a defined efficiency.
    pub reps_used: usize,
    /// Repetitions whose efficiency was undefined (no success and no
    /// absorption).
    pub reps_excluded: usize,
    /// Repetitions whose positive ratio was undefined.
    pub pr_excluded: usize,
}

/// Sum by recursive halving; deterministic for a given input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of the mean.
fn mean_and_error(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let m = xs.len() as f64;
    let mean = pairwise_sum(xs) / m;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - 1.0);
    (Some(mean), Some((var / m).sqrt()))
}

fn aggregate(traces: &[ProtocolTrace]) -> EnsembleStats {
    let eff: Vec<f64> = traces.iter().filter_map(ProtocolTrace::efficiency).collect();
    let pr: Vec<f64> = traces.iter().filter_map(ProtocolTrace::positive_ratio).collect();
    let nr: Vec<f64> = traces.iter().filter_map(ProtocolTrace::negative_ratio).collect();
    let abs: Vec<f64> = traces.iter().map(ProtocolTrace::absorption).collect();
    let (mean_efficiency, std_err_efficiency) = mean_and_error(&eff);
    let (mean_pr, std_err_pr) = mean_and_error(&pr);
    EnsembleStats {
        mean_efficiency,
        mean_pr,
        mean_nr: mean_and_error(&nr).0,
        mean_absorption: pairwise_sum(&abs) / traces.len() as f64,
        std_err_efficiency,
        std_err_pr,
        reps_used: eff.len(),
        reps_excluded: traces.len() - eff.len(),
        pr_excluded: traces.len() - pr.len(),
    }
}

fn simulate(spec: &EnsembleSpec) -> Result<Vec<ProtocolTrace>> {
    spec.validate()?;
    let ground = DensityMatrix3::ground();
    (0..spec.reps)
        .into_par_iter()
        .map(|rep| run(spec.kind, &spec.draw(rep), &ground))
        .collect()
}

/// Every slot carries a pulse with strength and phase drawn uniformly from
/// the ensemble's intervals. Its occupancy is ignored.
pub fn random_pulse_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    let full = EnsembleSpec {
        occupancy: Occupancy::Bernoulli(1.0),
        ..*spec
    };
    Ok(aggregate(&simulate(&full)?))
}

/// Pulses placed in random slots according to the ensemble's occupancy.
pub fn random_placement_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    Ok(aggregate(&simulate(spec)?))
}

/// The sequence configuration drawn for repetition `rep`.
pub fn realization(spec: &EnsembleSpec, rep: usize) -> Result<SequenceConfig> {
    spec.validate()?;
    Ok(spec.draw(rep))
}
