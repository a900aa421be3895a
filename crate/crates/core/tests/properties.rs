use std::f64::consts::PI;

use proptest::prelude::*;

use ifm_core::asymptotics::recursion_chain;
use ifm_core::ensembles::{random_pulse_ensemble, EnsembleSpec, Interval, Occupancy};
use ifm_core::gates::{b_pulse, b_pulse_detuned, beam_splitter, projector_abs, projector_nonabs, THETA_PERIOD};
use ifm_core::metrology::{qfi, DEFAULT_STEP};
use ifm_core::open_system::{run_noisy, NoiseModel};
use ifm_core::protocol::{coherent_state, final_probabilities, run};
use ifm_core::{DensityMatrix3, Operator3, ProtocolKind, PulseSlot, PureState3, SequenceConfig, C64};

fn slot() -> impl Strategy<Value = PulseSlot> {
    (0.0..THETA_PERIOD, 0.0..2.0 * PI, any::<bool>()).prop_map(|(theta, phase, occupied)| {
        if occupied {
            PulseSlot::resonant(theta, phase)
        } else {
            PulseSlot::empty()
        }
    })
}

fn config(max_n: usize) -> impl Strategy<Value = SequenceConfig> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), 0.01..PI, prop::collection::vec(slot(), n)))
        .prop_map(|(n, phi, slots)| SequenceConfig::new(n, phi, slots).unwrap())
}

fn state() -> impl Strategy<Value = PureState3> {
    prop::array::uniform6(-1.0..1.0f64)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            PureState3::new(
                C64::new(v[0], v[1]) / norm,
                C64::new(v[2], v[3]) / norm,
                C64::new(v[4], v[5]) / norm,
            )
        })
}

fn density() -> impl Strategy<Value = DensityMatrix3> {
    (
        prop::array::uniform3(0.0..1.0f64),
        0.0..PI,
        0.0..4.0 * PI,
        0.0..2.0 * PI,
    )
        .prop_filter("positive weight", |(w, ..)| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|(w, phi, theta, phase)| {
            let total: f64 = w.iter().sum();
            DensityMatrix3::diagonal(w.map(|x| x / total)).conjugate_by(&(beam_splitter(phi) * b_pulse(theta, phase)))
        })
}

fn unitary() -> impl Strategy<Value = Operator3> {
    (0.0..PI, 0.0..4.0 * PI, 0.0..2.0 * PI, -3.0..3.0f64).prop_map(|(phi, theta, phase, chi)| {
        beam_splitter(phi) * b_pulse_detuned(theta, phase, chi) * beam_splitter(phi / 3.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unitaries_preserve_norm(u in unitary(), psi in state()) {
        prop_assert!((u.apply(&psi).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matmul_associative(a in unitary(), b in unitary(), c in unitary()) {
        let left = (a * b) * c;
        let right = a * (b * c);
        prop_assert!(left.max_abs_diff(&right) <= 1e-10 * left.frobenius_norm());
    }

    #[test]
    fn conjugation_preserves_density_matrices(rho in density(), u in unitary()) {
        let out = rho.conjugate_by(&u);
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-10);
        prop_assert!(out.is_hermitian());
        prop_assert!(out.eigenvalues()[0] > -1e-10);
    }

    #[test]
    fn gates_are_unitary_and_periodic(theta in 0.0..4.0 * PI, phase in 0.0..2.0 * PI, chi in -5.0..5.0f64, phi in 0.0..PI) {
        prop_assert!(beam_splitter(phi).is_unitary(1e-12));
        prop_assert!(b_pulse(theta, phase).is_unitary(1e-12));
        prop_assert!(b_pulse_detuned(theta, phase, chi).is_unitary(1e-12));
        prop_assert!(b_pulse(theta + THETA_PERIOD, phase).max_abs_diff(&b_pulse(theta, phase)) < 1e-12);
        prop_assert_eq!(b_pulse(theta, phase).get(0, 0), C64::new(1.0, 0.0));
        prop_assert_eq!(b_pulse_detuned(theta, phase, chi).get(0, 0), C64::new(1.0, 0.0));
    }

    #[test]
    fn recursion_matches_matrix_chain(cfg in config(25)) {
        let traj = recursion_chain(&cfg, ProtocolKind::Coherent).unwrap();
        let exact = coherent_state(&cfg, &PureState3::ground());
        for k in 0..3 {
            prop_assert!((traj.final_state().amps[k] - exact.amps[k]).norm() < 1e-12);
        }
        let proj = recursion_chain(&cfg, ProtocolKind::Projective).unwrap();
        prop_assert!(proj.after_step.iter().all(|s| s.amps[2] == C64::new(0.0, 0.0)));
        let p = final_probabilities(ProtocolKind::Projective, &cfg);
        prop_assert!((proj.final_state().populations()[0] - p[0]).abs() < 1e-12);
    }

    #[test]
    fn coherent_traces_are_normalized(cfg in config(30), rho in density()) {
        let t = run(ProtocolKind::Coherent, &cfg, &rho).unwrap();
        for rec in &t.per_step {
            prop_assert!((rec.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn projective_traces_are_consistent(cfg in config(30), rho in density()) {
        let t = run(ProtocolKind::Projective, &cfg, &rho).unwrap();
        for rec in &t.per_step {
            prop_assert!(rec[2] >= -1e-10 && rec[2] <= 1.0 + 1e-10);
        }
        for w in t.per_step.windows(2) {
            prop_assert!(w[1][1] >= w[0][1]);
        }
    }

    #[test]
    fn last_splitter_leaves_absorbed_population(cfg in config(20)) {
        let s = beam_splitter(cfg.phi);
        let before_last = cfg
            .slots
            .iter()
            .fold(PureState3::ground(), |psi, slot| slot.gate().apply(&s.apply(&psi)));
        let after_last = s.apply(&before_last);
        prop_assert!((after_last.amps[2] - coherent_state(&cfg, &PureState3::ground()).amps[2]).norm() < 1e-12);
        prop_assert!((before_last.amps[2].norm_sqr() - after_last.amps[2].norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn phase_invariances(cfg in config(20), offset in 0.0..2.0 * PI, seed in any::<u64>()) {
        let mut rephased = cfg.clone();
        let mut shifted = cfg.clone();
        for (k, slot) in rephased.slots.iter_mut().enumerate() {
            slot.phase = (seed.rotate_left(k as u32) % 6283) as f64 / 1000.0;
        }
        for slot in shifted.slots.iter_mut() {
            slot.phase += offset;
        }
        let a = final_probabilities(ProtocolKind::Projective, &cfg);
        let b = final_probabilities(ProtocolKind::Projective, &rephased);
        let c = final_probabilities(ProtocolKind::Coherent, &cfg);
        let d = final_probabilities(ProtocolKind::Coherent, &shifted);
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-12);
            prop_assert!((c[k] - d[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn povm_completeness(theta in 0.0..4.0 * PI, phase in 0.0..2.0 * PI) {
        let b = b_pulse(theta, phase);
        let (m_abs, m_non) = (projector_abs() * b, projector_nonabs() * b);
        let sum = m_abs.adjoint() * m_abs + m_non.adjoint() * m_non;
        prop_assert!(sum.max_abs_diff(&Operator3::identity()) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lindblad_runs_stay_physical(cfg in config(6), g10 in 0.0..0.5f64, g21 in 0.0..12.0f64) {
        let noise = NoiseModel::new(g10, g21);
        let init = DensityMatrix3::ground();
        let c = run_noisy(ProtocolKind::Coherent, &cfg, &noise, &init).unwrap();
        for rec in &c.per_step {
            prop_assert!((rec.iter().sum::<f64>() - 1.0).abs() < 1e-9 * cfg.n as f64);
        }
        let p = run_noisy(ProtocolKind::Projective, &cfg, &noise, &init).unwrap();
        for w in p.per_step.windows(2) {
            prop_assert!(w[1][1] >= w[0][1]);
        }
    }

    #[test]
    fn fisher_symmetric_about_two_pi(n in 2usize..30, theta in 0.1..(2.0 * PI - 0.1)) {
        let a = qfi(n, theta, DEFAULT_STEP).unwrap();
        let b = qfi(n, 4.0 * PI - theta, DEFAULT_STEP).unwrap();
        prop_assert!((a.qfi_coherent - b.qfi_coherent).abs() < 1e-6 * a.qfi_coherent.max(1.0));
        prop_assert!((a.qfi_projective - b.qfi_projective).abs() < 1e-6 * a.qfi_projective.max(1.0));
    }

    #[test]
    fn ensembles_reproducible(seed in any::<u64>(), n in 1usize..12) {
        let spec = EnsembleSpec {
            n,
            reps: 64,
            theta: Interval::new(0.0, PI),
            phase: Interval::new(0.0, PI),
            occupancy: Occupancy::Bernoulli(0.5),
            seed,
            kind: ProtocolKind::Projective,
        };
        prop_assert_eq!(random_pulse_ensemble(&spec).unwrap(), random_pulse_ensemble(&spec).unwrap());
    }
}
