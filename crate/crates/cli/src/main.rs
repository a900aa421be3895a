//! `ifm`: regenerate the interaction-free detection data sets.
//!
//! Each subcommand writes one primary file plus companion files named
//! `<stem>_<suffix>`. With `--check` the results are also compared against
//! committed golden files. Exit codes: 0 success, 1 invalid input or I/O
//! failure, 2 golden mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod golden;
mod params;
mod table;

use params::*;
use table::{Format, Header, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameter {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ifm_core::IfmError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "ifm",
    version,
    about = "Coherent and projective interaction-free detection data sets"
)]
struct Cli {
    /// TOML file with `output_path`, `output_format`, `seed` and per-command blocks
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Primary output file; companions are written next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Compare the results against the golden files
    #[arg(long, global = true)]
    check: bool,
    #[arg(long, global = true, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/goldens"))]
    golden_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Final probabilities and efficiencies for small N
    Tables(TablesParams),
    /// Exact and approximate probabilities against θ/φ_N
    LargeN(LargeNParams),
    /// Success surfaces over (N, θ), thresholds and their 1/N fits
    Threshold(ThresholdParams),
    /// Success and absorption after every Ramsey step
    Successive(SuccessiveParams),
    /// Fisher information panels and large-N scaling fits
    Qfi(QfiParams),
    /// Dark-state leakage, false positives and efficiencies over (N, φ)
    PhiScan(PhiScanParams),
    /// Efficiency against pulse strength and phase step, plus ensemble means
    PhaseScan(PhaseScanParams),
    /// Positive and negative ratios with randomly occupied slots
    RandomPlacement(RandomPlacementParams),
    /// Efficiency and dark counts from a thermal initial state
    Thermal(ThermalParams),
    /// Efficiencies under relaxation, transmon line and traces in N
    Decoherence(DecoherenceParams),
    /// Success probability against pulse detuning
    Detuning(DetuningParams),
}

/// Resolved parameters serialized for the header, and the computed tables.
type Outcome = (serde_json::Value, Vec<Table>);

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tables(_) => "tables",
            Command::LargeN(_) => "large-n",
            Command::Threshold(_) => "threshold",
            Command::Successive(_) => "successive",
            Command::Qfi(_) => "qfi",
            Command::PhiScan(_) => "phi-scan",
            Command::PhaseScan(_) => "phase-scan",
            Command::RandomPlacement(_) => "random-placement",
            Command::Thermal(_) => "thermal",
            Command::Decoherence(_) => "decoherence",
            Command::Detuning(_) => "detuning",
        }
    }

    fn execute(self, file: RunConfig, seed: u64) -> Result<Outcome, CliError> {
        fn done<P: serde::Serialize>(p: &P, tables: Vec<Table>) -> Result<Outcome, CliError> {
            Ok((serde_json::to_value(p)?, tables))
        }
        match self {
            Command::Tables(a) => {
                let p = a.resolve(file.tables);
                done(&p, commands::tables(&p)?)
            }
            Command::LargeN(a) => {
                let p = a.resolve(file.large_n);
                done(&p, commands::large_n(&p)?)
            }
            Command::Threshold(a) => {
                let p = a.resolve(file.threshold);
                done(&p, commands::threshold(&p)?)
            }
            Command::Successive(a) => {
                let p = a.resolve(file.successive);
                done(&p, commands::successive(&p)?)
            }
            Command::Qfi(a) => {
                let p = a.resolve(file.qfi);
                done(&p, commands::qfi_cmd(&p)?)
            }
            Command::PhiScan(a) => {
                let p = a.resolve(file.phi_scan);
                done(&p, commands::phi_scan(&p)?)
            }
            Command::PhaseScan(a) => {
                let p = a.resolve(file.phase_scan);
                done(&p, commands::phase_scan(&p, seed)?)
            }
            Command::RandomPlacement(a) => {
                let p = a.resolve(file.random_placement);
                done(&p, commands::random_placement(&p, seed)?)
            }
            Command::Thermal(a) => {
                let p = a.resolve(file.thermal);
                done(&p, commands::thermal(&p)?)
            }
            Command::Decoherence(a) => {
                let p = a.resolve(file.decoherence);
                done(&p, commands::decoherence(&p)?)
            }
            Command::Detuning(a) => {
                let p = a.resolve(file.detuning);
                done(&p, commands::detuning(&p)?)
            }
        }
    }
}

/// Companion files share the primary file's directory and stem.
fn output_path(primary: &Path, table: &Table, format: Format) -> PathBuf {
    let stem = primary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    primary.with_file_name(table.file_name(stem, format))
}

enum Status {
    Ok,
    Mismatch(Vec<String>),
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let format = cli.format.or(file.output_format).unwrap_or(Format::Csv);
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let name = cli.command.name();
    let primary = cli
        .out
        .clone()
        .or_else(|| file.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.{}", name.replace('-', "_"), format.extension())));

    let (config, tables) = cli.command.execute(file, seed)?;
    let header = Header {
        command: name.to_string(),
        config,
        seed,
    };
    for table in &tables {
        let bytes = match format {
            Format::Csv => table::render_csv(&header, table)?,
            Format::Json => table::render_json(&header, table)?,
        };
        let path = output_path(&primary, table, format);
        table::write_atomic(&path, &bytes)?;
        eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
    }

    if !cli.check {
        return Ok(Status::Ok);
    }
    let manifest = golden::Manifest::load(&cli.golden_dir)?;
    let mut diffs = Vec::new();
    for table in &tables {
        let golden_name = table.file_name(&name.replace('-', "_"), Format::Csv);
        let path = cli.golden_dir.join(&golden_name);
        diffs.extend(golden::compare(&path, &header, table, manifest.for_file(&golden_name))?);
    }
    Ok(if diffs.is_empty() {
        Status::Ok
    } else {
        Status::Mismatch(diffs)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Mismatch(diffs)) => {
            for d in &diffs {
                eprintln!("mismatch: {d}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
