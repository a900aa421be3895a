//! One function per subcommand. Each returns its primary table first,
//! followed by any companion tables (fits, traces, summaries).

use std::f64::consts::PI;

use rayon::prelude::*;

use ifm_core::asymptotics::{approx_coefficients, approx_efficiency, Variant};
use ifm_core::ensembles::{random_placement_ensemble, random_pulse_ensemble, EnsembleSpec, Interval, Occupancy};
use ifm_core::metrology::{qfi, scaling_fit, threshold_series, FitLaw, FitResult};
use ifm_core::open_system::{
    half_max_bandwidth, noise_grid, run_noisy, thermal_state, two_level_signal, NoiseModel, ThermalSpec,
};
use ifm_core::protocol::{run, surface_sweep, PhiRule};
use ifm_core::{optimal_phi, DensityMatrix3, ProtocolKind, PulseSlot, SequenceConfig};

use crate::params::{
    Decoherence, Detuning, LargeN, PhaseScan, PhiScan, Qfi, RandomPlacement, Successive, Tables, Thermal, Threshold,
};
use crate::row;
use crate::table::{Cell, Table};
use crate::CliError;

type Output = Result<Vec<Table>, CliError>;

/// Quantity name, law name, law, data points.
type FitSpec = (&'static str, &'static str, FitLaw, Vec<(f64, f64)>);

fn invalid(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid(format!("`{name}`: {}", reason.into()))
}

fn at_least(name: &str, value: usize, min: usize) -> Result<(), CliError> {
    if value < min {
        return Err(invalid(name, format!("{value} is below the minimum of {min}")));
    }
    Ok(())
}

fn positive(name: &str, value: f64) -> Result<(), CliError> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(invalid(name, format!("{value} must be positive and finite")));
    }
    Ok(())
}

fn nonempty<T>(name: &str, items: &[T]) -> Result<(), CliError> {
    if items.is_empty() {
        return Err(invalid(name, "list is empty"));
    }
    Ok(())
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn axis(name: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    at_least(name, points, 2)?;
    positive(name, hi - lo)?;
    Ok(linspace(lo, hi, points))
}

fn fit_cells(fit: Option<FitResult>) -> Vec<Cell> {
    match fit {
        Some(f) => row![f.coefficient, f.exponent, f.intercept, f.residual],
        None => vec![Cell::Missing; 4],
    }
}

/// Absorption column of a per-step record.
fn absorbed(kind: ProtocolKind, rec: &[f64; 3]) -> f64 {
    match kind {
        ProtocolKind::Coherent => rec[2],
        ProtocolKind::Projective => rec[1],
    }
}

pub fn tables(p: &Tables) -> Output {
    at_least("n_max", p.n_max, 1)?;
    let ground = DensityMatrix3::ground();
    let mut t = Table::new("", &["protocol", "n", "success", "absorption", "miss", "efficiency"]);
    for kind in ProtocolKind::ALL {
        for n in 1..=p.n_max {
            let cfg = SequenceConfig::optimal(n, p.theta_pi * PI, p.phase_pi * PI);
            let tr = run(kind, &cfg, &ground)?;
            t.push(row![
                kind.name(),
                n,
                tr.success(),
                tr.absorption(),
                tr.miss(),
                tr.efficiency()
            ]);
        }
    }
    Ok(vec![t])
}

pub fn large_n(p: &LargeN) -> Output {
    at_least("n", p.n, 1)?;
    let ratios = axis("ratio_max", 0.0, p.ratio_max, p.points)?;
    let phi = optimal_phi(p.n);
    let ground = DensityMatrix3::ground();
    let rows = ratios
        .par_iter()
        .map(|&ratio| {
            let theta = ratio * phi;
            let tr = run(
                ProtocolKind::Coherent,
                &SequenceConfig::optimal(p.n, theta, p.phase_pi * PI),
                &ground,
            )?;
            let mut row = row![
                ratio,
                tr.final_probs[0],
                tr.final_probs[1],
                tr.final_probs[2],
                tr.efficiency()
            ];
            let mut validated = Cell::Missing;
            for variant in [Variant::Leading, Variant::Refined] {
                match approx_coefficients(p.n, theta, variant) {
                    Ok(c) => {
                        row.extend(c.probabilities().map(Cell::Num));
                        validated = Cell::from(!c.outside_validated_regime);
                    }
                    Err(_) => row.extend([Cell::Missing, Cell::Missing, Cell::Missing]),
                }
            }
            row.push(approx_efficiency(p.n, theta).ok().into());
            row.push(validated);
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(
        "",
        &[
            "theta_over_phi",
            "p0",
            "p1",
            "p2",
            "efficiency",
            "leading_p0",
            "leading_p1",
            "leading_p2",
            "refined_p0",
            "refined_p1",
            "refined_p2",
            "approx_efficiency",
            "validated",
        ],
    );
    rows.into_iter().for_each(|r| t.push(r));
    Ok(vec![t])
}

pub fn threshold(p: &Threshold) -> Output {
    at_least("n_max", p.n_max, 1)?;
    nonempty("targets", &p.targets)?;
    at_least("fit_n_min", p.fit_n_min, 1)?;
    if p.fit_n_min >= p.fit_n_max || p.fit_n_max > p.threshold_n_max {
        return Err(invalid(
            "fit_n_max",
            format!(
                "fit range [{}, {}] must be increasing and within threshold_n_max = {}",
                p.fit_n_min, p.fit_n_max, p.threshold_n_max
            ),
        ));
    }
    let thetas = axis("theta_max_pi", 0.0, p.theta_max_pi * PI, p.theta_points)?;
    let ns: Vec<usize> = (1..=p.n_max).collect();
    let ground = DensityMatrix3::ground();

    let mut surface = Table::new("", &["protocol", "n", "theta_pi", "success"]);
    for kind in ProtocolKind::ALL {
        let grid = surface_sweep(&ns, PhiRule::Optimal, &thetas, p.phase_pi * PI, kind, &ground)?;
        for (n, theta, tr) in grid.rows() {
            surface.push(row![kind.name(), n, theta / PI, tr.success()]);
        }
    }

    let mut found = Table::new("thresholds", &["protocol", "target", "n", "theta_pi", "four_phi_pi"]);
    let mut fits = Table::new("fits", &["protocol", "target", "coefficient", "residual", "points"]);
    let all: Vec<usize> = (1..=p.threshold_n_max).collect();
    for kind in ProtocolKind::ALL {
        for &target in p.targets.iter() {
            let series = threshold_series(&all, target, kind)?;
            let mut fit_points = Vec::new();
            for (n, theta) in series {
                found.push(row![
                    kind.name(),
                    target,
                    n,
                    theta.map(|t| t / PI),
                    4.0 / (n as f64 + 1.0)
                ]);
                if let Some(t) = theta.filter(|_| (p.fit_n_min..=p.fit_n_max).contains(&n)) {
                    fit_points.push((n as f64, t / PI));
                }
            }
            let fit = scaling_fit(&fit_points, FitLaw::FixedExponent(-1.0)).ok();
            fits.push(row![
                kind.name(),
                target,
                fit.map(|f| f.coefficient),
                fit.map(|f| f.residual),
                fit_points.len()
            ]);
        }
    }
    Ok(vec![surface, found, fits])
}

pub fn successive(p: &Successive) -> Output {
    at_least("n_max", p.n_max, 1)?;
    let ground = DensityMatrix3::ground();
    let mut t = Table::new("", &["protocol", "n", "j", "success", "absorption"]);
    for kind in ProtocolKind::ALL {
        for n in 1..=p.n_max {
            let tr = run(
                kind,
                &SequenceConfig::optimal(n, p.theta_pi * PI, p.phase_pi * PI),
                &ground,
            )?;
            for (j, rec) in tr.per_step.iter().enumerate() {
                t.push(row![kind.name(), n, j + 1, rec[0], absorbed(kind, rec)]);
            }
        }
    }
    Ok(vec![t])
}

pub fn qfi_cmd(p: &Qfi) -> Output {
    nonempty("ns", &p.ns)?;
    for &n in p.ns.iter() {
        at_least("ns", n, 1)?;
    }
    positive("derivative_step_rad", p.derivative_step_rad)?;
    at_least("fit_n_min", p.fit_n_min, 1)?;
    if p.fit_n_max < p.fit_n_min + 3 {
        return Err(invalid("fit_n_max", "fit range needs at least four values of N"));
    }
    let thetas = axis("theta_max_pi", 0.0, p.theta_max_pi * PI, p.theta_points)?;
    let step = p.derivative_step_rad;

    let points: Vec<(usize, f64)> = p.ns.iter().flat_map(|&n| thetas.iter().map(move |&t| (n, t))).collect();
    let reports = points
        .par_iter()
        .map(|&(n, theta)| qfi(n, theta, step))
        .collect::<Result<Vec<_>, _>>()?;
    let mut panels = Table::new(
        "",
        &[
            "n",
            "theta_pi",
            "qfi_coherent",
            "qfi_projective",
            "qfi_eta_c",
            "qfi_eta",
            "unreliable",
        ],
    );
    for r in &reports {
        panels.push(row![
            r.n,
            r.theta / PI,
            r.qfi_coherent,
            r.qfi_projective,
            r.qfi_eta_c,
            r.qfi_eta,
            r.unreliable
        ]);
    }

    let ns: Vec<usize> = (p.fit_n_min..=p.fit_n_max).collect();
    let scaling_rows = ns
        .par_iter()
        .map(|&n| Ok((n, qfi(n, 0.0, step)?, qfi(n, 4.0 * optimal_phi(n), step)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut scaling = Table::new(
        "scaling",
        &[
            "n",
            "qfi_coherent_zero",
            "qfi_coherent_four_phi",
            "qfi_projective_zero",
            "qfi_eta_c_zero",
            "qfi_eta_zero",
        ],
    );
    for (n, zero, four) in &scaling_rows {
        scaling.push(row![
            *n,
            zero.qfi_coherent,
            four.qfi_coherent,
            zero.qfi_projective,
            zero.qfi_eta_c,
            zero.qfi_eta
        ]);
    }

    let series = |pick: &dyn Fn(usize) -> Option<f64>| -> Vec<(f64, f64)> {
        (0..scaling_rows.len())
            .filter_map(|i| pick(i).map(|y| (scaling_rows[i].0 as f64, y)))
            .collect()
    };
    let min_eta_c = p.fit_eta_c_n_min;
    let fit_specs: [FitSpec; 5] = [
        (
            "qfi_coherent_zero",
            "power",
            FitLaw::PowerLaw,
            series(&|i| Some(scaling_rows[i].1.qfi_coherent)),
        ),
        (
            "qfi_coherent_four_phi",
            "power",
            FitLaw::PowerLaw,
            series(&|i| Some(scaling_rows[i].2.qfi_coherent)),
        ),
        (
            "qfi_eta_c_zero",
            "power",
            FitLaw::PowerLaw,
            series(&|i| (scaling_rows[i].0 >= min_eta_c).then_some(scaling_rows[i].1.qfi_eta_c)),
        ),
        (
            "qfi_eta_zero",
            "affine",
            FitLaw::Affine,
            series(&|i| Some(scaling_rows[i].1.qfi_eta)),
        ),
        (
            "qfi_projective_zero",
            "affine",
            FitLaw::Affine,
            series(&|i| Some(scaling_rows[i].1.qfi_projective)),
        ),
    ];
    let mut fits = Table::new(
        "fits",
        &["quantity", "law", "coefficient", "exponent", "intercept", "residual"],
    );
    for (name, law_name, law, data) in fit_specs {
        let mut r = row![name, law_name];
        r.extend(fit_cells(scaling_fit(&data, law).ok()));
        fits.push(r);
    }
    Ok(vec![panels, scaling, fits])
}

pub fn phi_scan(p: &PhiScan) -> Output {
    at_least("n_max", p.n_max, 1)?;
    at_least("phi_points", p.phi_points, 1)?;
    positive("phi_max_pi", p.phi_max_pi)?;
    nonempty("sensitivity_ns", &p.sensitivity_ns)?;
    let phis: Vec<f64> = (1..=p.phi_points)
        .map(|k| p.phi_max_pi * PI * k as f64 / p.phi_points as f64)
        .collect();
    let (theta, phase) = (p.theta_pi * PI, p.phase_pi * PI);
    let ground = DensityMatrix3::ground();

    let points: Vec<(usize, f64)> = (1..=p.n_max)
        .flat_map(|n| phis.iter().map(move |&phi| (n, phi)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(n, phi)| {
            let lit = SequenceConfig::uniform(n, phi, theta, phase);
            let dark = run(ProtocolKind::Coherent, &lit.dark(), &ground)?;
            let c = run(ProtocolKind::Coherent, &lit, &ground)?;
            let q = run(ProtocolKind::Projective, &lit, &ground)?;
            Ok(row![
                n,
                phi / PI,
                dark.miss(),
                dark.positive_ratio(),
                c.efficiency(),
                q.efficiency()
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut surface = Table::new(
        "",
        &[
            "n",
            "phi_pi",
            "dark_p1",
            "fpr",
            "efficiency_coherent",
            "efficiency_projective",
        ],
    );
    rows.into_iter().for_each(|r| surface.push(r));

    let deltas = axis(
        "delta_max_pi",
        -p.delta_max_pi * PI,
        p.delta_max_pi * PI,
        p.delta_points,
    )?;
    let mut sensitivity = Table::new("sensitivity", &["n", "delta_phi_pi", "dark_p1"]);
    for &n in p.sensitivity_ns.iter() {
        at_least("sensitivity_ns", n, 1)?;
        for &d in &deltas {
            let cfg = SequenceConfig::uniform(n, optimal_phi(n) + d, 0.0, phase);
            let dark = run(ProtocolKind::Coherent, &cfg, &ground)?;
            sensitivity.push(row![n, d / PI, dark.miss()]);
        }
    }
    Ok(vec![surface, sensitivity])
}

/// Ensemble curves of the mean-efficiency panel: label, strength interval,
/// phase interval, protocols.
fn mean_curves() -> Vec<(&'static str, Interval, Interval, &'static [ProtocolKind])> {
    let both: &'static [ProtocolKind] = &ProtocolKind::ALL;
    let coherent: &'static [ProtocolKind] = &[ProtocolKind::Coherent];
    let random_theta = Interval::new(0.0, PI);
    vec![
        ("fixed", Interval::fixed(PI), Interval::fixed(0.0), both),
        (
            "random_phase_quarter",
            Interval::fixed(PI),
            Interval::new(0.0, PI / 4.0),
            coherent,
        ),
        (
            "random_phase_full",
            Interval::fixed(PI),
            Interval::new(0.0, PI),
            coherent,
        ),
        ("random_theta", random_theta, Interval::fixed(0.0), both),
        (
            "random_theta_phase_quarter",
            random_theta,
            Interval::new(0.0, PI / 4.0),
            coherent,
        ),
        (
            "random_theta_phase_full",
            random_theta,
            Interval::new(0.0, PI),
            coherent,
        ),
    ]
}

pub fn phase_scan(p: &PhaseScan, seed: u64) -> Output {
    nonempty("ns", &p.ns)?;
    at_least("mean_n_max", p.mean_n_max, 1)?;
    at_least("reps", p.reps, 1)?;
    let thetas = axis("theta_max_pi", 0.0, p.theta_max_pi * PI, p.theta_points)?;
    let deltas = axis("delta_max_pi", 0.0, p.delta_max_pi * PI, p.delta_points)?;
    let ground = DensityMatrix3::ground();

    let mut points = Vec::new();
    for &n in p.ns.iter() {
        at_least("ns", n, 1)?;
        for &d in &deltas {
            points.extend(thetas.iter().map(|&t| (n, d, t)));
        }
    }
    let rows = points
        .par_iter()
        .map(|&(n, delta, theta)| {
            let slots = (0..n).map(|j| PulseSlot::resonant(theta, j as f64 * delta)).collect();
            let cfg = SequenceConfig::new(n, optimal_phi(n), slots)?;
            let tr = run(ProtocolKind::Coherent, &cfg, &ground)?;
            Ok(row![n, delta / PI, theta / PI, tr.efficiency()])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut surface = Table::new("", &["n", "delta_phase_pi", "theta_pi", "efficiency_coherent"]);
    rows.into_iter().for_each(|r| surface.push(r));

    let mut traces = Table::new(
        "traces",
        &["n", "theta_pi", "efficiency_coherent", "efficiency_projective"],
    );
    for &n in p.ns.iter() {
        for &theta in &thetas {
            let cfg = SequenceConfig::optimal(n, theta, 0.0);
            let c = run(ProtocolKind::Coherent, &cfg, &ground)?;
            let q = run(ProtocolKind::Projective, &cfg, &ground)?;
            traces.push(row![n, theta / PI, c.efficiency(), q.efficiency()]);
        }
    }

    let mut means = Table::new(
        "means",
        &["curve", "protocol", "n", "mean_efficiency", "std_err", "reps_used"],
    );
    for (label, theta, phase, kinds) in mean_curves() {
        for &kind in kinds {
            for n in 1..=p.mean_n_max {
                let reps = if theta.is_fixed() && phase.is_fixed() {
                    1
                } else {
                    p.reps
                };
                let spec = EnsembleSpec {
                    n,
                    reps,
                    theta,
                    phase,
                    occupancy: Occupancy::Bernoulli(1.0),
                    seed,
                    kind,
                };
                let s = random_pulse_ensemble(&spec)?;
                means.push(row![
                    label,
                    kind.name(),
                    n,
                    s.mean_efficiency,
                    s.std_err_efficiency,
                    s.reps_used
                ]);
            }
        }
    }
    Ok(vec![surface, traces, means])
}

pub fn random_placement(p: &RandomPlacement, seed: u64) -> Output {
    at_least("n_max", p.n_max, 1)?;
    nonempty("occupancies", &p.occupancies)?;
    let mut t = Table::new(
        "",
        &[
            "protocol",
            "occupancy",
            "n",
            "mean_pr",
            "mean_nr",
            "std_err_pr",
            "pr_excluded",
        ],
    );
    for kind in ProtocolKind::ALL {
        for &occupancy in p.occupancies.iter() {
            for n in 1..=p.n_max {
                let spec = EnsembleSpec {
                    n,
                    reps: p.reps,
                    theta: Interval::fixed(p.theta_pi * PI),
                    phase: Interval::fixed(p.phase_pi * PI),
                    occupancy: Occupancy::Bernoulli(occupancy),
                    seed,
                    kind,
                };
                let s = random_placement_ensemble(&spec)?;
                t.push(row![
                    kind.name(),
                    occupancy,
                    n,
                    s.mean_pr,
                    s.mean_nr,
                    s.std_err_pr,
                    s.pr_excluded
                ]);
            }
        }
    }
    Ok(vec![t])
}

pub fn thermal(p: &Thermal) -> Output {
    nonempty("ns", &p.ns)?;
    let temps = axis("temperature_max_mk", 0.0, p.temperature_max_mk, p.temperature_points)?;
    let mut points = Vec::new();
    for kind in ProtocolKind::ALL {
        for &n in p.ns.iter() {
            at_least("ns", n, 1)?;
            points.extend(temps.iter().map(|&mk| (kind, n, mk)));
        }
    }
    let rows = points
        .par_iter()
        .map(|&(kind, n, mk)| {
            let init = thermal_state(&ThermalSpec::from_ghz(mk * 1e-3, p.f01_ghz, p.f12_ghz)?)?;
            let cfg = SequenceConfig::optimal(n, p.theta_pi * PI, p.phase_pi * PI);
            let lit = run(kind, &cfg, &init)?;
            let dark = run(kind, &cfg.dark(), &init)?;
            Ok(row![kind.name(), n, mk, lit.efficiency(), dark.success()])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new("", &["protocol", "n", "temperature_mk", "efficiency", "dark_count"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(vec![t])
}

pub fn decoherence(p: &Decoherence) -> Output {
    at_least("n", p.n, 1)?;
    at_least("trace_n_max", p.trace_n_max, 1)?;
    let gammas = axis("gamma_max_mhz", 0.0, p.gamma_max_mhz, p.gamma_points)?;
    let base = NoiseModel {
        bs_duration_s: p.bs_duration_ns * 1e-9,
        b_duration_s: p.b_duration_ns * 1e-9,
        steps_per_pulse: p.steps_per_pulse,
        ..NoiseModel::noiseless()
    };
    base.validate()?;
    let ground = DensityMatrix3::ground();
    let (theta, phase) = (p.theta_pi * PI, p.phase_pi * PI);
    let cfg = SequenceConfig::optimal(p.n, theta, phase);

    let coherent = noise_grid(ProtocolKind::Coherent, &cfg, &gammas, &gammas, &base, &ground)?;
    let projective = noise_grid(ProtocolKind::Projective, &cfg, &gammas, &gammas, &base, &ground)?;
    let mut grid = Table::new(
        "",
        &[
            "gamma10_mhz",
            "gamma21_mhz",
            "efficiency_coherent",
            "efficiency_projective",
        ],
    );
    for (c, q) in coherent.iter().zip(&projective) {
        grid.push(row![
            c.gamma10_mhz,
            c.gamma21_mhz,
            c.trace.efficiency(),
            q.trace.efficiency()
        ]);
    }

    let line = gammas
        .par_iter()
        .map(|&g| {
            let noise = NoiseModel {
                gamma10_mhz: g,
                gamma21_mhz: 2.0 * g,
                ..base
            };
            let mut r = row![g, 2.0 * g];
            for kind in ProtocolKind::ALL {
                r.push(run_noisy(kind, &cfg.dark(), &noise, &ground)?.positive_ratio().into());
            }
            for kind in ProtocolKind::ALL {
                r.push(run_noisy(kind, &cfg, &noise, &ground)?.efficiency().into());
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut transmon = Table::new(
        "transmon",
        &[
            "gamma10_mhz",
            "gamma21_mhz",
            "fpr_coherent",
            "fpr_projective",
            "efficiency_coherent",
            "efficiency_projective",
        ],
    );
    line.into_iter().for_each(|r| transmon.push(r));

    let noise = NoiseModel {
        gamma10_mhz: p.trace_gamma10_mhz,
        gamma21_mhz: p.trace_gamma21_mhz,
        ..base
    };
    noise.validate()?;
    let ns: Vec<usize> = (1..=p.trace_n_max).collect();
    let trace_rows = ns
        .par_iter()
        .map(|&n| {
            let cfg = SequenceConfig::optimal(n, theta, phase);
            let c = run_noisy(ProtocolKind::Coherent, &cfg, &noise, &ground)?;
            let q = run_noisy(ProtocolKind::Projective, &cfg, &noise, &ground)?;
            let dc = run_noisy(ProtocolKind::Coherent, &cfg.dark(), &noise, &ground)?;
            let dq = run_noisy(ProtocolKind::Projective, &cfg.dark(), &noise, &ground)?;
            Ok(row![n, c.success(), q.success(), dc.miss(), dq.success()])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut traces = Table::new("traces", &["n", "p0", "p_det", "dark_p1", "dark_p_det"]);
    trace_rows.into_iter().for_each(|r| traces.push(r));
    Ok(vec![grid, transmon, traces])
}

pub fn detuning(p: &Detuning) -> Output {
    at_least("n_max", p.n_max, 1)?;
    let chis = axis("chi_max_rad", -p.chi_max_rad, p.chi_max_rad, p.chi_points)?;
    let (theta, phase) = (p.theta_pi * PI, p.phase_pi * PI);
    let ground = DensityMatrix3::ground();
    let points: Vec<(usize, f64)> = (1..=p.n_max).flat_map(|n| chis.iter().map(move |&c| (n, c))).collect();
    let values = points
        .par_iter()
        .map(|&(n, chi)| {
            let cfg = SequenceConfig::new(n, optimal_phi(n), vec![PulseSlot::detuned(theta, phase, chi); n])?;
            let c = run(ProtocolKind::Coherent, &cfg, &ground)?.success();
            let q = run(ProtocolKind::Projective, &cfg, &ground)?.success();
            Ok([c, q, two_level_signal(n, theta, chi)])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(
        "",
        &["n", "chi_rad", "success_coherent", "success_projective", "two_level"],
    );
    for (&(n, chi), v) in points.iter().zip(&values) {
        t.push(row![n, chi, v[0], v[1], v[2]]);
    }

    let mut widths = Table::new(
        "bandwidth",
        &["n", "width_coherent", "width_projective", "width_two_level"],
    );
    for (i, n) in (1..=p.n_max).enumerate() {
        let block = &values[i * chis.len()..(i + 1) * chis.len()];
        let mut r = row![n];
        for k in 0..3 {
            let ys: Vec<f64> = block.iter().map(|v| v[k]).collect();
            r.push(half_max_bandwidth(&chis, &ys, 0.0).into());
        }
        widths.push(r);
    }
    Ok(vec![t, widths])
}
