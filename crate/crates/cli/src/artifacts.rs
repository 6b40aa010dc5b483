//! On-disk report formats shared by the subcommands and `diagnose`.
//!
//! Every float is printed with the shortest representation that parses back
//! to the identical bits, so re-running a seeded command yields byte-identical
//! files and `diagnose` can reconstruct reports without rounding slack.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use hypervisc::checkpoint::{read_snapshot, write_ledger_csv, write_snapshot};
use hypervisc::{OperatorSpec, RatioReport, RunOutput, Snapshot, SolverSettings};

use crate::config::ConfigFile;

/// Description of one finished integration, written as `run_config.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub equation: String,
    pub grid: [usize; 3],
    pub operator: OperatorSpec,
    pub t_final: f64,
    pub record_every: usize,
    pub nonlinearity: bool,
    /// Snapshot stems in time order; each stem has a JSON manifest and one
    /// binary file per component next to it.
    pub snapshots: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_override: Option<u64>,
    /// Echo of the configuration the run was resolved from.
    pub config: ConfigFile,
}

/// Serialize a value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Shortest float representation that round-trips bitwise.
pub fn fmt_float(v: f64) -> String {
    format!("{v:e}")
}

/// Write snapshots, the thinned ledger, and the run manifest into `dir`.
pub fn persist_run<const N: usize>(
    dir: &Path,
    equation: &str,
    settings: &SolverSettings,
    config: &ConfigFile,
    seed_override: Option<u64>,
    output: &RunOutput<N>,
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut stems = Vec::with_capacity(output.snapshots.len());
    for (i, snap) in output.snapshots.iter().enumerate() {
        let stem = format!("snap_{i:04}");
        write_snapshot(dir, &stem, &snap.field, &settings.operator, equation, snap.time)?;
        stems.push(stem);
    }
    write_ledger_csv(
        &dir.join("ledger.csv"),
        &output.ledger.thinned(settings.record_every),
    )?;
    let grid = output.snapshots[0].field.grid();
    let manifest = RunManifest {
        equation: equation.to_string(),
        grid: grid.n(),
        operator: settings.operator,
        t_final: settings.t_final,
        record_every: settings.record_every,
        nonlinearity: settings.nonlinearity,
        snapshots: stems,
        seed_override,
        config: config.clone(),
    };
    write_json(&dir.join("run_config.json"), &manifest)
}

/// Load the snapshots listed in a run manifest back into memory.
pub fn load_snapshots<const N: usize>(dir: &Path, manifest: &RunManifest) -> Result<Vec<Snapshot<N>>> {
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for stem in &manifest.snapshots {
        let (snap_manifest, field) = read_snapshot::<N>(dir, stem)?;
        ensure!(
            snap_manifest.equation == manifest.equation,
            "snapshot {stem} belongs to equation {}, run manifest says {}",
            snap_manifest.equation,
            manifest.equation
        );
        snapshots.push(Snapshot {
            time: snap_manifest.time,
            field,
        });
    }
    Ok(snapshots)
}

/// One row per ensemble member: both sides of the inequality and their ratio
/// (empty when the denominator vanished and the member was skipped).
pub fn write_ratio_csv(path: &Path, report: &RatioReport) -> Result<()> {
    let mut text = String::from("member,lhs,rhs,ratio\n");
    for row in &report.rows {
        let ratio = row.ratio.map(fmt_float).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{}\n",
            row.member,
            fmt_float(row.lhs),
            fmt_float(row.rhs),
            ratio
        ));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Rows of `sweep_report.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub error: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut text = String::from("epsilon,delta,error\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_float(row.epsilon),
            fmt_float(row.delta),
            fmt_float(row.error)
        ));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            ensure!(
                line == "epsilon,delta,error",
                "unexpected header in {}: {line}",
                path.display()
            );
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        ensure!(
            fields.len() == 3,
            "malformed row {i} in {}: {line}",
            path.display()
        );
        rows.push(SweepRow {
            epsilon: fields[0].parse()?,
            delta: fields[1].parse()?,
            error: fields[2].parse()?,
        });
    }
    Ok(rows)
}

/// Index of the epsilon-sweep artifact tree, written as `sweep_manifest.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepManifest {
    pub equation: String,
    pub grid: [usize; 3],
    /// Base operator; each run replaces its perturbation strength.
    pub operator: OperatorSpec,
    /// Strictly decreasing ladder of perturbation strengths.
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Directory of the `epsilon = 0` reference run, relative to this file.
    pub reference_dir: PathBuf,
    /// Directories of the ladder runs, aligned with `epsilons`.
    pub run_dirs: Vec<PathBuf>,
}

/// Summary statistics for a ratio report, kept apart from the bulky member
/// rows that live in the CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioStats {
    pub members: usize,
    pub skipped: usize,
    pub max: f64,
    pub mean: f64,
    pub rescale_max_rel_dev: f64,
    pub histogram: Vec<usize>,
}

impl RatioStats {
    pub fn from_report(report: &RatioReport) -> Self {
        RatioStats {
            members: report.rows.len(),
            skipped: report.skipped,
            max: report.max,
            mean: report.mean,
            rescale_max_rel_dev: report.rescale_max_rel_dev,
            histogram: report.histogram.clone(),
        }
    }
}

/// Trapezoid-consistency and manifest checks recomputed from artifacts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub target: String,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(name: &str, max_deviation: f64, tolerance: f64) -> Self {
        CheckRow {
            name: name.to_string(),
            max_deviation,
            tolerance,
            pass: max_deviation.is_finite() && max_deviation <= tolerance,
        }
    }
}
