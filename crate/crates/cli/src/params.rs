//! Parameter blocks shared by the config file and the command line.
//!
//! Every block exists twice: a sparse form where each field is optional
//! (what the user wrote) and a resolved form with defaults filled in (what
//! the run used, recorded in the output header). Angles ending in `_pi` are
//! in units of π.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use ifm_core::metrology::DEFAULT_STEP;
use ifm_core::open_system::{DEFAULT_BS_DURATION, DEFAULT_B_DURATION, DEFAULT_STEPS_PER_PULSE};

use crate::table::Format;
use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Comma-separated list on the command line, array in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|item| item.trim().parse::<T>().map_err(|e| format!("`{item}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

impl<T> std::ops::Deref for List<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

fn list<T: Clone>(items: &[T]) -> List<T> {
    List(items.to_vec())
}

macro_rules! params {
    ($(#[$meta:meta])* $name:ident => $resolved:ident {
        $($(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr,)*
    }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[doc = $doc])* #[arg(long)] pub $field: Option<$ty>,)*
        }

        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct $resolved {
            $(pub $field: $ty,)*
        }

        impl $name {
            /// Flags win over the file; anything unset takes its default.
            pub fn resolve(self, file: Option<Self>) -> $resolved {
                let file = file.unwrap_or_default();
                $resolved {
                    $($field: self.$field.or(file.$field).unwrap_or_else(|| $default),)*
                }
            }
        }
    };
}

params! {
    TablesParams => Tables {
        /// Largest number of Ramsey sequences
        n_max: usize = 4,
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
    }
}

params! {
    LargeNParams => LargeN {
        n: usize = 25,
        /// Upper end of the θ/φ_N axis
        ratio_max: f64 = 110.0,
        points: usize = 1101,
        phase_pi: f64 = 0.5,
    }
}

params! {
    ThresholdParams => Threshold {
        /// Largest N of the probability surfaces
        n_max: usize = 25,
        theta_max_pi: f64 = 2.0,
        theta_points: usize = 201,
        /// Largest N for which thresholds are searched
        threshold_n_max: usize = 100,
        targets: List<f64> = list(&[0.25, 0.5, 0.85, 0.95]),
        fit_n_min: usize = 25,
        fit_n_max: usize = 100,
        phase_pi: f64 = 0.5,
    }
}

params! {
    SuccessiveParams => Successive {
        n_max: usize = 25,
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
    }
}

params! {
    QfiParams => Qfi {
        ns: List<usize> = list(&[2, 5, 25]),
        theta_max_pi: f64 = 4.0,
        theta_points: usize = 401,
        derivative_step_rad: f64 = DEFAULT_STEP,
        fit_n_min: usize = 25,
        fit_n_max: usize = 100,
        /// Smallest N in the efficiency power-law fit
        fit_eta_c_n_min: usize = 36,
    }
}

params! {
    PhiScanParams => PhiScan {
        n_max: usize = 25,
        phi_max_pi: f64 = 1.0,
        phi_points: usize = 100,
        /// Pulse strength for the efficiency surfaces
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
        sensitivity_ns: List<usize> = list(&[2, 5, 10, 25]),
        /// Half-width of the beam-splitter offset scan
        delta_max_pi: f64 = 0.02,
        delta_points: usize = 41,
    }
}

params! {
    PhaseScanParams => PhaseScan {
        ns: List<usize> = list(&[2, 5, 25]),
        theta_max_pi: f64 = 4.0,
        theta_points: usize = 201,
        /// Largest phase step between consecutive pulses
        delta_max_pi: f64 = 2.0,
        delta_points: usize = 101,
        mean_n_max: usize = 25,
        reps: usize = 10_000,
    }
}

params! {
    RandomPlacementParams => RandomPlacement {
        n_max: usize = 25,
        reps: usize = 400,
        occupancies: List<f64> = list(&[1.0, 0.5, 0.25, 0.125]),
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
    }
}

params! {
    ThermalParams => Thermal {
        ns: List<usize> = list(&[25, 250]),
        temperature_max_mk: f64 = 100.0,
        temperature_points: usize = 101,
        f01_ghz: f64 = 7.20,
        f12_ghz: f64 = 6.85,
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
    }
}

params! {
    DecoherenceParams => Decoherence {
        n: usize = 25,
        gamma_max_mhz: f64 = 0.2,
        gamma_points: usize = 21,
        bs_duration_ns: f64 = DEFAULT_BS_DURATION * 1e9,
        b_duration_ns: f64 = DEFAULT_B_DURATION * 1e9,
        steps_per_pulse: usize = DEFAULT_STEPS_PER_PULSE,
        trace_n_max: usize = 50,
        trace_gamma10_mhz: f64 = 0.1,
        trace_gamma21_mhz: f64 = 10.0,
        theta_pi: f64 = 1.0,
        phase_pi: f64 = 0.5,
    }
}

params! {
    DetuningParams => Detuning {
        n_max: usize = 25,
        chi_max_rad: f64 = 10.0,
        chi_points: usize = 201,
        theta_pi: f64 = 0.5,
        phase_pi: f64 = 0.5,
    }
}

/// Contents of a `--config` file. One optional block per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_path: Option<PathBuf>,
    pub output_format: Option<Format>,
    pub seed: Option<u64>,
    pub tables: Option<TablesParams>,
    pub large_n: Option<LargeNParams>,
    pub threshold: Option<ThresholdParams>,
    pub successive: Option<SuccessiveParams>,
    pub qfi: Option<QfiParams>,
    pub phi_scan: Option<PhiScanParams>,
    pub phase_scan: Option<PhaseScanParams>,
    pub random_placement: Option<RandomPlacementParams>,
    pub thermal: Option<ThermalParams>,
    pub decoherence: Option<DecoherenceParams>,
    pub detuning: Option<DetuningParams>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file = TablesParams {
            n_max: Some(3),
            theta_pi: Some(0.5),
            phase_pi: None,
        };
        let flags = TablesParams {
            n_max: Some(2),
            ..Default::default()
        };
        let r = flags.resolve(Some(file));
        assert_eq!(
            r,
            Tables {
                n_max: 2,
                theta_pi: 0.5,
                phase_pi: 0.5
            }
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[tables]\nn_max = 3\n").is_ok());
        assert!(toml::from_str::<RunConfig>("[tables]\nnmax = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("gamma10 = 0.1\n").is_err());
    }

    #[test]
    fn lists_parse_from_both_sources() {
        assert_eq!("2, 5,25".parse::<List<usize>>().unwrap(), List(vec![2, 5, 25]));
        assert!("2,x".parse::<List<usize>>().is_err());
        let cfg: RunConfig = toml::from_str("[qfi]\nns = [3, 4]\n").unwrap();
        assert_eq!(cfg.qfi.unwrap().ns, Some(List(vec![3, 4])));
    }
}
