//! Large-`N` approximations of the coherent chain and the explicit amplitude
//! recursions of both chains.
//!
//! For small `φ` the step `S B` has eigenvalues close to
//! `(1, e^{-iθ/2}, e^{iθ/2})`; diagonalizing it as `M D M⁻¹` with approximate
//! eigenvectors gives the final amplitudes in closed form, since
//! `(S B)^{N+1}|0> = S (B S)^N |0>`. Two eigenvector
//! normalizations are available: a first-order one (`Leading`) and a refined
//! one that keeps `cos(φ/2)` and `tan(φ/4)` factors (`Refined`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::gates::{b_pulse, beam_splitter, optimal_phi, SequenceConfig};
use crate::linalg::{Operator3, PureState3, C64};
use crate::protocol::ProtocolKind;
use crate::{IfmError, Result};

/// Determinants of the eigenvector matrix below this are treated as singular.
pub const MIN_DET: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Leading,
    Refined,
}

/// `M D^k M⁻¹` factorization of the step `S B` at `φ = φ_N`.
#[derive(Debug, Clone)]
pub struct SpectralApprox {
    pub n: usize,
    pub theta: f64,
    pub variant: Variant,
    pub eigenvalues: [C64; 3],
    /// Columns are the eigenvectors for `1`, `e^{-iθ/2}`, `e^{iθ/2}`.
    pub eigenvectors: Operator3,
    /// `cos(θ/2)cos(φ/2) - 1`
    pub a: f64,
    /// `sin(θ/2)cos(φ/2)`
    pub b: f64,
    /// Normalization of the refined coefficients.
    pub norm: f64,
}

impl SpectralApprox {
    pub fn new(n: usize, theta: f64, variant: Variant) -> Result<Self> {
        check_inputs(n, theta)?;
        let phi = optimal_phi(n);
        let q = theta / 4.0;
        let s4 = q.sin();
        let i = C64::new(0.0, 1.0);
        let re = |x: f64| C64::new(x, 0.0);
        let eigenvectors = match variant {
            Variant::Leading => {
                let h = phi / 2.0;
                Operator3::from_rows([
                    [re(1.0), re(h), re(h)],
                    [
                        re(phi / 4.0),
                        i * 2.0 * s4 * C64::from_polar(1.0, q),
                        -i * 2.0 * s4 * C64::from_polar(1.0, -q),
                    ],
                    [
                        re(phi / 4.0 / q.tan()),
                        -C64::from_polar(2.0 * s4, q),
                        -C64::from_polar(2.0 * s4, -q),
                    ],
                ])
            }
            Variant::Refined => {
                let (a, b, t, s) = refined_parts(phi, theta);
                let w_plus = C64::new(a, b);
                let w_minus = C64::new(a, -b);
                Operator3::from_rows([
                    [re(1.0), re(s), re(s)],
                    [re(t), w_plus, w_minus],
                    [re(t / q.tan()), C64::new(-b, a), C64::new(-b, -a)],
                ])
            }
        };
        let (a, b, t, s) = refined_parts(phi, theta);
        Ok(SpectralApprox {
            n,
            theta,
            variant,
            a,
            b,
            norm: refined_norm(a, b, t, s, q),
            eigenvalues: [
                re(1.0),
                C64::from_polar(1.0, -theta / 2.0),
                C64::from_polar(1.0, theta / 2.0),
            ],
            eigenvectors,
        })
    }

    /// Approximation of `(S B)^k`.
    pub fn step_power(&self, k: u32) -> Result<Operator3> {
        let d = Operator3::diag(self.eigenvalues.map(|l| l.powu(k)));
        let inv = self.eigenvectors.inverse(MIN_DET)?;
        Ok(self.eigenvectors * d * inv)
    }

    /// Approximate final coherent state from `|0>`.
    pub fn final_state(&self) -> Result<PureState3> {
        Ok(self.step_power(self.n as u32 + 1)?.apply(&PureState3::ground()))
    }
}

/// The step `S(φ) B(θ, π/2)` whose powers [`SpectralApprox`] approximates.
pub fn exact_step(phi: f64, theta: f64) -> Operator3 {
    beam_splitter(phi) * b_pulse(theta, PI / 2.0)
}

fn refined_norm(a: f64, b: f64, t: f64, s: f64, q: f64) -> f64 {
    let r = a * a + b * b;
    r * q.sin() - t * s * (a * q.sin() - b * q.cos())
}

fn check_inputs(n: usize, theta: f64) -> Result<()> {
    if n == 0 {
        return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
    }
    let reduced = theta.rem_euclid(4.0 * PI);
    if !theta.is_finite() || reduced.abs() < 1e-12 || (4.0 * PI - reduced).abs() < 1e-12 {
        return Err(IfmError::Domain {
            what: "spectral approximation",
            reason: format!("theta = {theta} makes sin(θ/4) vanish"),
        });
    }
    Ok(())
}

/// `(a, b, tan(φ/4), sin(φ/2))` with `a = cos(θ/2)cos(φ/2) - 1`,
/// `b = sin(θ/2)cos(φ/2)`.
fn refined_parts(phi: f64, theta: f64) -> (f64, f64, f64, f64) {
    let cp = (phi / 2.0).cos();
    let (st, ct) = (theta / 2.0).sin_cos();
    (ct * cp - 1.0, st * cp, (phi / 4.0).tan(), (phi / 2.0).sin())
}

/// Approximate final amplitudes of the coherent chain at `φ = φ_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub variant: Variant,
    /// `θ < 4φ_N`: the small-`φ` expansion is not controlled here.
    pub outside_validated_regime: bool,
}

impl ApproxCoefficients {
    pub fn probabilities(&self) -> [f64; 3] {
        [self.c0 * self.c0, self.c1 * self.c1, self.c2 * self.c2]
    }

    /// `|c0|² + |c1|² + |c2|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.probabilities().iter().sum()
    }
}

pub fn approx_coefficients(n: usize, theta: f64, variant: Variant) -> Result<ApproxCoefficients> {
    check_inputs(n, theta)?;
    let phi = optimal_phi(n);
    let nf = n as f64;
    let q = theta / 4.0;
    let s4 = q.sin();
    let grow = ((nf + 1.0) * q).sin();
    let (c0, c1, c2) = match variant {
        Variant::Leading => {
            let h = phi / 2.0;
            let amp = h / s4 * grow;
            (1.0 - 0.5 * amp * amp, amp * (nf * q).cos(), amp * (nf * q).sin())
        }
        Variant::Refined => {
            let (a, b, t, s) = refined_parts(phi, theta);
            let r = a * a + b * b;
            let norm = refined_norm(a, b, t, s, q);
            let wide = (2.0 * nf + 1.0) * q;
            let c0 = (r * s4 + t * s * (a * wide.sin() + b * wide.cos())) / norm;
            let k = 2.0 * r / norm * t * grow;
            (c0, k * (nf * q).cos(), k * (nf * q).sin())
        }
    };
    Ok(ApproxCoefficients {
        c0,
        c1,
        c2,
        variant,
        outside_validated_regime: theta < 4.0 * phi,
    })
}

/// Approximate coherent efficiency at `φ = φ_N`:
/// `1 - φ²/(16 sin²(θ/4)) [cos(θ/4) - cos((2N+1)θ/4)]²`.
pub fn approx_efficiency(n: usize, theta: f64) -> Result<f64> {
    check_inputs(n, theta)?;
    let phi = optimal_phi(n);
    let q = theta / 4.0;
    let bracket = q.cos() - ((2.0 * n as f64 + 1.0) * q).cos();
    Ok(1.0 - phi * phi / (16.0 * q.sin().powi(2)) * bracket * bracket)
}

/// [`approx_efficiency`] at `θ = π`: `1 - φ²/16 [1 - √2 cos(Nπ/2 + π/4)]²`.
pub fn approx_efficiency_at_pi(n: usize) -> f64 {
    let phi = optimal_phi(n);
    let bracket = 1.0 - 2f64.sqrt() * (n as f64 * PI / 2.0 + PI / 4.0).cos();
    1.0 - phi * phi / 16.0 * bracket * bracket
}

/// `N → ∞` limit of the coherent unitary: `|0>` decouples and the 1–2
/// subspace sees a single pulse of strength `Nθ` with phase `π/2`.
pub fn asymptotic_unitary(n: usize, theta: f64) -> Operator3 {
    b_pulse(n as f64 * theta, PI / 2.0)
}

/// Strength window `[4φ_N, 4Nφ_N]` over which `p0` stays high. Its width is
/// `4π - 8φ_N`; for `N = 1` it collapses to the single point `2π`.
pub fn plateau_bounds(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(IfmError::invalid("n", "need at least one Ramsey sequence"));
    }
    let phi = optimal_phi(n);
    Ok((4.0 * phi, 4.0 * n as f64 * phi))
}

/// Amplitudes produced by [`recursion_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory {
    pub kind: ProtocolKind,
    /// The input `|0>`.
    pub initial: PureState3,
    /// `after_step[0]` is after the first beam splitter; `after_step[j]`
    /// after the `j`-th Ramsey step. The projective amplitudes are the
    /// unnormalized non-absorbed branch.
    pub after_step: Vec<PureState3>,
}

impl AmplitudeTrajectory {
    pub fn final_state(&self) -> &PureState3 {
        self.after_step.last().expect("trajectory is never empty")
    }
}

/// Step-by-step amplitudes from explicit scalar recursions, independent of
/// the matrix code path.
pub fn recursion_chain(cfg: &SequenceConfig, kind: ProtocolKind) -> Result<AmplitudeTrajectory> {
    cfg.validate()?;
    let (sp, cp) = (cfg.phi / 2.0).sin_cos();
    let i = C64::new(0.0, 1.0);
    let initial = PureState3::ground();
    let mut c = [C64::new(cp, 0.0), C64::new(sp, 0.0), C64::new(0.0, 0.0)];
    let mut after_step = Vec::with_capacity(cfg.n + 1);
    after_step.push(PureState3 { amps: c });
    for slot in &cfg.slots {
        let half = slot.effective_theta() / 2.0;
        let (st, ct) = if slot.occupied && slot.chi == 0.0 {
            half.sin_cos()
        } else if slot.occupied {
            return Err(IfmError::invalid(
                "slot",
                "the amplitude recursion covers resonant pulses only",
            ));
        } else {
            (0.0, 1.0)
        };
        let down = -i * C64::from_polar(st, -slot.phase);
        let up = -i * C64::from_polar(st, slot.phase);
        // Amplitudes after the pulse, then after the beam splitter.
        let b1 = ct * c[1] + down * c[2];
        let b2 = match kind {
            ProtocolKind::Coherent => up * c[1] + ct * c[2],
            ProtocolKind::Projective => C64::new(0.0, 0.0),
        };
        c = [cp * c[0] - sp * b1, sp * c[0] + cp * b1, b2];
        after_step.push(PureState3 { amps: c });
    }
    Ok(AmplitudeTrajectory {
        kind,
        initial,
        after_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::coherent_state;

    fn exact(n: usize, theta: f64) -> [f64; 3] {
        let cfg = SequenceConfig::optimal(n, theta, PI / 2.0);
        coherent_state(&cfg, &PureState3::ground()).populations()
    }

    #[test]
    fn coefficients_at_pi() {
        let r = approx_coefficients(5, PI, Variant::Refined).unwrap();
        assert!((r.c0 - 0.93301).abs() < 1e-5);
        assert!((r.c1 - 0.25449).abs() < 1e-5);
        assert!((r.c2 - 0.25449).abs() < 1e-5);
        assert!(!r.outside_validated_regime);
        let l = approx_coefficients(25, PI, Variant::Leading).unwrap();
        assert!((l.c0 - 0.99635).abs() < 1e-5);
        assert!((l.c1 - 0.060415).abs() < 1e-6);
        let r = approx_coefficients(25, PI, Variant::Refined).unwrap();
        assert!((r.c1 - 0.060323).abs() < 1e-6);
    }

    #[test]
    fn regime_flag_and_domain() {
        let n = 10;
        assert!(
            approx_coefficients(n, 2.0 * optimal_phi(n), Variant::Leading)
                .unwrap()
                .outside_validated_regime
        );
        assert!(approx_coefficients(n, 0.0, Variant::Leading).is_err());
        assert!(approx_coefficients(n, 4.0 * PI, Variant::Refined).is_err());
        assert!(approx_coefficients(0, 1.0, Variant::Refined).is_err());
    }

    #[test]
    fn approximate_probabilities_track_exact_ones() {
        for n in [50, 100] {
            let (lo, hi) = plateau_bounds(n).unwrap();
            for k in 0..=40 {
                let theta = lo + (hi - lo) * k as f64 / 40.0;
                let ex = exact(n, theta);
                for variant in [Variant::Leading, Variant::Refined] {
                    let ap = approx_coefficients(n, theta, variant).unwrap();
                    assert!((ap.probabilities()[0] - ex[0]).abs() < 0.02);
                }
            }
        }
    }

    #[test]
    fn normalization_defect_is_fourth_order() {
        for n in [20, 50, 200] {
            let phi = optimal_phi(n);
            for theta in [PI / 2.0, PI, 3.0 * PI / 2.0, 2.0 * PI] {
                let ap = approx_coefficients(n, theta, Variant::Leading).unwrap();
                assert!((ap.norm_sqr() - 1.0).abs() <= 10.0 * phi.powi(4));
            }
        }
    }

    #[test]
    fn efficiency_forms_agree_at_pi() {
        for n in 1..40 {
            let general = approx_efficiency(n, PI).unwrap();
            assert!((general - approx_efficiency_at_pi(n)).abs() < 1e-12);
        }
        assert!(approx_efficiency(10, 0.0).is_err());
    }

    #[test]
    fn approximate_efficiency_tracks_exact() {
        for n in [50, 100] {
            let ex = exact(n, PI);
            let eta = ex[0] / (ex[0] + ex[2]);
            assert!((approx_efficiency(n, PI).unwrap() - eta).abs() < 1e-3);
        }
    }

    #[test]
    fn spectral_structure() {
        for variant in [Variant::Leading, Variant::Refined] {
            let sa = SpectralApprox::new(30, 2.0, variant).unwrap();
            assert_eq!(sa.eigenvalues[0], C64::new(1.0, 0.0));
            for l in &sa.eigenvalues[1..] {
                assert!((l.norm() - 1.0).abs() < 1e-12);
            }
            for row in 0..3 {
                let plus = sa.eigenvectors.get(row, 1);
                let minus = sa.eigenvectors.get(row, 2);
                assert!((plus - minus.conj()).norm() < 1e-15);
            }
        }
        assert!(SpectralApprox::new(30, 0.0, Variant::Leading).is_err());
    }

    #[test]
    fn spectral_factorization_ground_column() {
        for n in [50, 100] {
            let phi = optimal_phi(n);
            let exact = exact_step(phi, PI).pow(n as u64 + 1);
            for variant in [Variant::Leading, Variant::Refined] {
                let sa = SpectralApprox::new(n, PI, variant).unwrap();
                let approx = sa.step_power(n as u32 + 1).unwrap();
                for row in 0..3 {
                    let err = (approx.get(row, 0) - exact.get(row, 0)).norm();
                    assert!(err < phi * phi, "{variant:?} N={n} row {row}: {err}");
                }
                let psi = sa.final_state().unwrap();
                let ex = coherent_state(&SequenceConfig::optimal(n, PI, PI / 2.0), &PureState3::ground());
                assert!((psi.amps[0] - ex.amps[0]).norm() < phi * phi);
            }
        }
    }

    #[test]
    fn coefficients_vanish_at_plateau_edge() {
        for n in [3, 25, 80] {
            let theta = 4.0 * optimal_phi(n);
            for variant in [Variant::Leading, Variant::Refined] {
                let ap = approx_coefficients(n, theta, variant).unwrap();
                assert!(ap.c1.abs() < 1e-14 && ap.c2.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn plateau_bounds_and_width() {
        let (lo, hi) = plateau_bounds(25).unwrap();
        assert!((lo - 4.0 * PI / 26.0).abs() < 1e-15);
        assert!((hi - 100.0 * PI / 26.0).abs() < 1e-14);
        assert!(exact(25, lo)[0] >= 0.95);
        for n in [2, 5, 25, 100] {
            let (lo, hi) = plateau_bounds(n).unwrap();
            assert!((hi - lo - (4.0 * PI - 8.0 * optimal_phi(n))).abs() < 1e-12);
        }
        let (lo, hi) = plateau_bounds(1).unwrap();
        assert!((hi - lo).abs() < 1e-15 && (lo - 2.0 * PI).abs() < 1e-15);
        assert!(plateau_bounds(0).is_err());
    }

    #[test]
    fn asymptotic_unitary_structure() {
        let u = asymptotic_unitary(100, PI);
        assert_eq!(u.get(0, 0), C64::new(1.0, 0.0));
        let expected = b_pulse((100.0 * PI).rem_euclid(4.0 * PI), PI / 2.0);
        assert!(u.max_abs_diff(&expected) < 1e-12);
        let ex = exact(100, PI);
        let asym = u.apply(&PureState3::ground()).populations();
        assert!((ex[0] - asym[0]).abs() < 1e-3);
    }

    #[test]
    fn recursion_reproduces_tables() {
        let cfg = SequenceConfig::uniform(1, PI / 2.0, PI, PI / 2.0);
        let t = recursion_chain(&cfg, ProtocolKind::Coherent).unwrap();
        let p = t.final_state().populations();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
        assert_eq!(t.after_step.len(), 2);
        assert_eq!(t.initial, PureState3::ground());
        let t = recursion_chain(&cfg, ProtocolKind::Projective).unwrap();
        assert!((t.final_state().populations()[0] - 0.25).abs() < 1e-15);
    }
}
