//! Fisher information of the measured outcome distributions with respect to
//! the pulse strength, threshold strengths and scaling fits.
//!
//! "QFI" here follows common usage in the detection literature: it is the
//! classical Fisher information `Σ_k (∂p_k/∂θ)² / p_k` of the outcome
//! probabilities, not the symmetric-logarithmic-derivative quantity.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gates::SequenceConfig;
use crate::protocol::{final_probabilities, ProtocolKind, RATIO_FLOOR};
use crate::{IfmError, Result};

pub const DEFAULT_STEP: f64 = 1e-4;
/// Offsets `ε, 2ε, 3ε` of the local fit used where a probability vanishes.
pub const LIMIT_FIT_EPS: f64 = 1e-3;
/// Probabilities below this are treated as vanishing.
pub const VANISHING: f64 = 1e-14;
/// Grid step of [`threshold_theta`].
pub const THRESHOLD_STEP: f64 = PI / 2000.0;

const PHASE: f64 = PI / 2.0;

/// Fisher information of one distribution, with a flag for points where the
/// vanishing-probability limit could not be taken cleanly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherEstimate {
    pub value: f64,
    pub unreliable: bool,
}

/// Fisher information of `probs` at `theta`.
///
/// Derivatives are central differences at `step` and `step/2` combined by
/// one Richardson level. If the distribution is undefined at `theta` or any
/// component vanishes there, every term is taken from a local fit instead:
/// the even part `a + b t² + d t⁴` and odd slope of `p(θ ± t)` at
/// `t = ε, 2ε, 3ε`. A vanishing component (`p ≈ b t²`) contributes its limit
/// `4b`; the others contribute `slope² / a`. A component counts as vanishing
/// when it is below [`VANISHING`] at `theta`, or, where the distribution is
/// undefined at `theta`, when the fitted `a` is negligible next to `p(θ ± ε)`.
pub fn fisher_information<const K: usize>(
    probs: impl Fn(f64) -> Option<[f64; K]>,
    theta: f64,
    step: f64,
) -> Result<FisherEstimate> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(IfmError::invalid("step", format!("{step} must be positive")));
    }
    let center = probs(theta);
    if let Some(center) = center.filter(|p| p.iter().all(|&x| x >= VANISHING)) {
        let diff = |h: f64| -> Option<[f64; K]> {
            let (hi, lo) = (probs(theta + h)?, probs(theta - h)?);
            Some(std::array::from_fn(|k| (hi[k] - lo[k]) / (2.0 * h)))
        };
        if let (Some(coarse), Some(fine)) = (diff(step), diff(step / 2.0)) {
            let value = (0..K)
                .map(|k| {
                    let d = (4.0 * fine[k] - coarse[k]) / 3.0;
                    d * d / center[k]
                })
                .sum();
            return Ok(FisherEstimate {
                value,
                unreliable: false,
            });
        }
    }
    Ok(limit_fisher(&probs, theta, center))
}

/// `|a| / p(θ ± ε)` below this marks a component vanishing at an undefined
/// center.
const VANISHING_RATIO: f64 = 1e-3;

fn limit_fisher<const K: usize>(
    probs: &impl Fn(f64) -> Option<[f64; K]>,
    theta: f64,
    center: Option<[f64; K]>,
) -> FisherEstimate {
    let eps = LIMIT_FIT_EPS;
    let mut samples = [[[0.0; K]; 2]; 3];
    for (i, row) in samples.iter_mut().enumerate() {
        let t = eps * (i + 1) as f64;
        match (probs(theta + t), probs(theta - t)) {
            (Some(hi), Some(lo)) => *row = [hi, lo],
            _ => {
                return FisherEstimate {
                    value: f64::NAN,
                    unreliable: true,
                }
            }
        }
    }
    let mut value = 0.0;
    let mut unreliable = false;
    for k in 0..K {
        let even: [f64; 3] = std::array::from_fn(|i| 0.5 * (samples[i][0][k] + samples[i][1][k]));
        let odd: [f64; 3] = std::array::from_fn(|i| 0.5 * (samples[i][0][k] - samples[i][1][k]));
        // Even part e(t) = a + b t² + d t⁴ through the three samples.
        let (u1, u2, u3) = (eps * eps, 4.0 * eps * eps, 9.0 * eps * eps);
        let d = ((even[2] - even[0]) / (u3 - u1) - (even[1] - even[0]) / (u2 - u1)) / (u3 - u2);
        let b = (even[1] - even[0]) / (u2 - u1) - d * (u1 + u2);
        let a = even[0] - b * u1 - d * u1 * u1;
        // Odd part o(t) = g t + h t³ through the first two samples.
        let g = (8.0 * odd[0] - odd[1]) / (6.0 * eps);
        let vanishing = match center {
            Some(c) => c[k] < VANISHING,
            None => a.abs() <= VANISHING_RATIO * even[0].abs(),
        };
        if vanishing {
            if b < 0.0 && 4.0 * b.abs() > 1e-9 {
                unreliable = true;
            }
            value += 4.0 * b.max(0.0);
        } else if a > 0.0 {
            value += g * g / a;
        } else {
            unreliable = true;
        }
    }
    FisherEstimate { value, unreliable }
}

/// Outcome distributions of both protocols at `φ = φ_N`, all pulses at
/// phase `π/2`. Efficiency distributions are `(η, 1 - η)`.
pub fn coherent_distribution(n: usize, theta: f64) -> [f64; 3] {
    final_probabilities(ProtocolKind::Coherent, &SequenceConfig::optimal(n, theta, PHASE))
}

pub fn projective_distribution(n: usize, theta: f64) -> [f64; 3] {
    final_probabilities(ProtocolKind::Projective, &SequenceConfig::optimal(n, theta, PHASE))
}

fn efficiency_of(kind: ProtocolKind, p: [f64; 3]) -> Option<f64> {
    let (success, absorbed) = match kind {
        ProtocolKind::Coherent => (p[0], p[2]),
        ProtocolKind::Projective => (p[0], p[1]),
    };
    let den = success + absorbed;
    (den > RATIO_FLOOR).then(|| success / den)
}

pub fn efficiency_distribution(kind: ProtocolKind, n: usize, theta: f64) -> Option<[f64; 2]> {
    let p = match kind {
        ProtocolKind::Coherent => coherent_distribution(n, theta),
        ProtocolKind::Projective => projective_distribution(n, theta),
    };
    efficiency_of(kind, p).map(|eta| [eta, 1.0 - eta])
}

/// Fisher information of all four outcome distributions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub theta: f64,
    pub n: usize,
    pub qfi_coherent: f64,
    pub qfi_projective: f64,
    pub qfi_eta_c: f64,
    pub qfi_eta: f64,
    pub derivative_step: f64,
    pub unreliable: bool,
}

impl QfiReport {
    pub fn of(&self, kind: ProtocolKind) -> f64 {
        match kind {
            ProtocolKind::Coherent => self.qfi_coherent,
            ProtocolKind::Projective => self.qfi_projective,
        }
    }

    pub fn of_efficiency(&self, kind: ProtocolKind) -> f64 {
        match kind {
            ProtocolKind::Coherent => self.qfi_eta_c,
            ProtocolKind::Projective => self.qfi_eta,
        }
    }
}

/// Values this far below zero are rounding; anything lower is reported.
const NEGATIVE_TOL: f64 = 1e-9;

fn clamp_fisher(est: FisherEstimate) -> (f64, bool) {
    let bad = !est.value.is_finite() || est.value < -NEGATIVE_TOL;
    (est.value.max(0.0), est.unreliable || bad)
}

/// Fisher information at `theta`, or its `θ → 0` limit when `theta` is 0.
pub fn qfi(n: usize, theta: f64, step: f64) -> Result<QfiReport> {
    if n == 0 {
        return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
    }
    let full = |kind| {
        let f = move |t: f64| {
            Some(match kind {
                ProtocolKind::Coherent => coherent_distribution(n, t),
                ProtocolKind::Projective => projective_distribution(n, t),
            })
        };
        fisher_information(f, theta, step).map(clamp_fisher)
    };
    let eff = |kind| fisher_information(|t| efficiency_distribution(kind, n, t), theta, step).map(clamp_fisher);
    let (qc, uc) = full(ProtocolKind::Coherent)?;
    let (qp, up) = full(ProtocolKind::Projective)?;
    let (qec, uec) = eff(ProtocolKind::Coherent)?;
    let (qe, ue) = eff(ProtocolKind::Projective)?;
    Ok(QfiReport {
        theta,
        n,
        qfi_coherent: qc,
        qfi_projective: qp,
        qfi_eta_c: qec,
        qfi_eta: qe,
        derivative_step: step,
        unreliable: uc || up || uec || ue,
    })
}

/// Efficiency Fisher information in the compact form
/// `(∂η/∂θ)² / (η (1 - η))`. `None` where `η` is undefined or saturated.
pub fn efficiency_qfi_compact(kind: ProtocolKind, n: usize, theta: f64, step: f64) -> Option<f64> {
    let eta = |t: f64| efficiency_distribution(kind, n, t).map(|d| d[0]);
    let center = eta(theta)?;
    let diff = |h: f64| Some((eta(theta + h)? - eta(theta - h)?) / (2.0 * h));
    let d = (4.0 * diff(step / 2.0)? - diff(step)?) / 3.0;
    let var = center * (1.0 - center);
    (var > VANISHING).then(|| d * d / var)
}

/// Large-`N` closed form of the coherent efficiency Fisher information at
/// fixed `x = θ/φ_N`:
/// `4N²/(π x²) · c² / (x² - c²)` with `c = 1 - cos(Nπ/2 + π/4)`.
pub fn qfi_eta_c_closed_form(n: usize, theta_over_phi: f64) -> Result<f64> {
    let nf = n as f64;
    let c = 1.0 - (nf * PI / 2.0 + PI / 4.0).cos();
    let x2 = theta_over_phi * theta_over_phi;
    let den = x2 - c * c;
    if den.is_nan() || den <= 0.0 || n == 0 {
        return Err(IfmError::Domain {
            what: "efficiency Fisher closed form",
            reason: format!("θ/φ_N = {theta_over_phi} must exceed {c} at N = {n}"),
        });
    }
    Ok(4.0 * nf * nf / (PI * x2) * c * c / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitLaw {
    /// `y = a N^k`, fitted in log-log space.
    PowerLaw,
    /// `y = a N^k` with `k` held fixed; only `a` is fitted.
    FixedExponent(f64),
    /// `y = a N + c`.
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficient: f64,
    pub exponent: f64,
    /// Zero for the power laws.
    pub intercept: f64,
    /// RMS residual, in log space for the power laws.
    pub residual: f64,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn scaling_fit(series: &[(f64, f64)], law: FitLaw) -> Result<FitResult> {
    if series.len() < MIN_FIT_POINTS {
        return Err(IfmError::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: series.len(),
        });
    }
    if series[0].0 <= 0.0 || series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(IfmError::invalid(
            "series",
            "abscissae must be positive and strictly increasing",
        ));
    }
    let logs = || -> Result<Vec<(f64, f64)>> {
        series
            .iter()
            .map(|&(x, y)| {
                if y > 0.0 {
                    Ok((x.ln(), y.ln()))
                } else {
                    Err(IfmError::invalid(
                        "series",
                        format!("power-law fit needs positive values, got {y}"),
                    ))
                }
            })
            .collect()
    };
    let m = series.len() as f64;
    let rms = |r: &mut dyn Iterator<Item = f64>| (r.map(|e| e * e).sum::<f64>() / m).sqrt();
    match law {
        FitLaw::PowerLaw => {
            let pts = logs()?;
            let (slope, icpt) = least_squares(&pts);
            let residual = rms(&mut pts.iter().map(|&(x, y)| y - icpt - slope * x));
            Ok(FitResult {
                coefficient: icpt.exp(),
                exponent: slope,
                intercept: 0.0,
                residual,
            })
        }
        FitLaw::FixedExponent(k) => {
            let pts = logs()?;
            let ln_a = pts.iter().map(|&(x, y)| y - k * x).sum::<f64>() / m;
            let residual = rms(&mut pts.iter().map(|&(x, y)| y - ln_a - k * x));
            Ok(FitResult {
                coefficient: ln_a.exp(),
                exponent: k,
                intercept: 0.0,
                residual,
            })
        }
        FitLaw::Affine => {
            let (slope, icpt) = least_squares(series);
            let residual = rms(&mut series.iter().map(|&(x, y)| y - icpt - slope * x));
            Ok(FitResult {
                coefficient: slope,
                exponent: 1.0,
                intercept: icpt,
                residual,
            })
        }
    }
}

/// Ordinary least squares `y = slope x + intercept`.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Smallest strength on the grid `k·π/2000`, `θ ∈ [0, 4π]`, at which the
/// success probability (`p0` or `p_det`) reaches `p_target`; `None` if it
/// never does.
pub fn threshold_theta(n: usize, p_target: f64, kind: ProtocolKind) -> Result<Option<f64>> {
    if n == 0 {
        return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(IfmError::invalid("p_target", format!("{p_target} not in (0, 1)")));
    }
    let steps = (4.0 * PI / THRESHOLD_STEP).round() as usize;
    Ok((0..=steps)
        .map(|k| k as f64 * THRESHOLD_STEP)
        .find(|&theta| final_probabilities(kind, &SequenceConfig::optimal(n, theta, PHASE))[0] >= p_target))
}

/// Thresholds for several `N` in parallel, in input order.
pub fn threshold_series(ns: &[usize], p_target: f64, kind: ProtocolKind) -> Result<Vec<(usize, Option<f64>)>> {
    ns.par_iter()
        .map(|&n| threshold_theta(n, p_target, kind).map(|t| (n, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_limit_is_half_n() {
        for n in [2, 5, 25] {
            let r = qfi(n, 0.0, DEFAULT_STEP).unwrap();
            assert!((r.qfi_projective - n as f64 / 2.0).abs() < 1e-4, "{r:?}");
            assert!(!r.unreliable);
        }
    }

    #[test]
    fn symmetric_about_two_pi() {
        for n in [4, 11] {
            for theta in [0.7, 2.0, 5.1] {
                let a = qfi(n, theta, DEFAULT_STEP).unwrap();
                let b = qfi(n, 4.0 * PI - theta, DEFAULT_STEP).unwrap();
                assert!((a.qfi_coherent - b.qfi_coherent).abs() < 1e-6);
                assert!((a.qfi_projective - b.qfi_projective).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn efficiency_forms_agree() {
        for kind in ProtocolKind::ALL {
            for (n, theta) in [(5, 1.0), (20, PI), (40, 2.5)] {
                let r = qfi(n, theta, DEFAULT_STEP).unwrap();
                let compact = efficiency_qfi_compact(kind, n, theta, DEFAULT_STEP).unwrap();
                assert!((compact - r.of_efficiency(kind)).abs() < 1e-10 * compact.max(1.0));
            }
        }
    }

    #[test]
    fn step_halving_converges() {
        let f = |t: f64| Some(coherent_distribution(10, t));
        let a = fisher_information(f, 1.3, 1e-3).unwrap().value;
        let b = fisher_information(f, 1.3, 5e-4).unwrap().value;
        let c = fisher_information(f, 1.3, 2.5e-4).unwrap().value;
        assert!((b - c).abs() <= (a - b).abs().max(1e-9));
    }

    #[test]
    fn vanishing_quadratic_probability_limit() {
        // p = (θ²/4, 1 - θ²/4): Fisher information tends to 1.
        let f = |t: f64| Some([t * t / 4.0, 1.0 - t * t / 4.0]);
        let est = fisher_information(f, 0.0, DEFAULT_STEP).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9 && !est.unreliable);
        assert!(fisher_information(f, 0.0, 0.0).is_err());
    }

    #[test]
    fn cramer_rao_bound_tightens_with_n() {
        let mut last = (f64::INFINITY, f64::INFINITY);
        for n in [5, 10, 20, 40] {
            let r = qfi(n, 0.0, DEFAULT_STEP).unwrap();
            let bound = (1.0 / r.qfi_coherent, 1.0 / r.qfi_projective);
            assert!(bound.0 < last.0 && bound.1 < last.1);
            last = bound;
        }
    }

    #[test]
    fn fits() {
        let series: Vec<_> = (1..=6)
            .map(|k| (k as f64 * 10.0, 0.3 * (k as f64 * 10.0).powi(2)))
            .collect();
        let fit = scaling_fit(&series, FitLaw::PowerLaw).unwrap();
        assert!((fit.coefficient - 0.3).abs() < 1e-10 && (fit.exponent - 2.0).abs() < 1e-10);
        let affine: Vec<_> = (1..=5).map(|k| (k as f64, 0.1 * k as f64 + 0.05)).collect();
        let fit = scaling_fit(&affine, FitLaw::Affine).unwrap();
        assert!((fit.coefficient - 0.1).abs() < 1e-12 && (fit.intercept - 0.05).abs() < 1e-12);
        assert_eq!(
            scaling_fit(&affine[..3], FitLaw::Affine),
            Err(IfmError::TooFewPoints { needed: 4, got: 3 })
        );
        let fixed: Vec<_> = (1..=5).map(|k| (k as f64, 2.0 / k as f64)).collect();
        let fit = scaling_fit(&fixed, FitLaw::FixedExponent(-1.0)).unwrap();
        assert!((fit.coefficient - 2.0).abs() < 1e-12 && fit.residual < 1e-12);
    }

    #[test]
    fn closed_form_domain_and_period() {
        assert!(qfi_eta_c_closed_form(40, 0.1).is_err());
        let a = qfi_eta_c_closed_form(40, 8.0).unwrap();
        let b = qfi_eta_c_closed_form(44, 8.0).unwrap();
        assert!((a / 40f64.powi(2) - b / 44f64.powi(2)).abs() < 1e-12);
        assert!(qfi_eta_c_closed_form(40, 1e6).unwrap() < 1e-6);
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_theta(2, 0.85, ProtocolKind::Projective).unwrap(), None);
        let t = threshold_theta(25, 0.85, ProtocolKind::Coherent).unwrap().unwrap();
        assert!(t > 0.0 && t < PI);
        let tiny = threshold_theta(25, 1e-9, ProtocolKind::Coherent).unwrap().unwrap();
        assert!(tiny <= 2.0 * THRESHOLD_STEP);
        assert!(threshold_theta(25, 1.5, ProtocolKind::Coherent).is_err());
    }

    #[test]
    fn large_n_reference_values() {
        // reference values from a 40-digit evaluation of the same distributions
        let r = qfi(1000, PI, 2e-5).unwrap();
        assert!((r.qfi_coherent - 1.2312336).abs() < 1e-3, "{}", r.qfi_coherent);
        assert!((r.qfi_eta_c - 0.6163766).abs() < 1e-3, "{}", r.qfi_eta_c);
        assert!(!r.unreliable);
    }
}
