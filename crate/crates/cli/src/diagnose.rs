//! `diagnose`: re-derive reports from stored artifacts and cross-check them.
//!
//! A run directory is checked for internal consistency: every snapshot's
//! sidecar manifest must agree with the run manifest, the kinetic energy
//! recomputed from stored coefficients must match the ledger row at the same
//! time, and the stored residual column must satisfy its defining identity.
//! A sweep directory additionally gets every reported error recomputed from
//! the stored snapshot pairs. All floats are stored with round-tripping
//! precision, so the tolerances are rounding-level, not modelling-level.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};

use hypervisc::checkpoint::{read_ledger_csv, LedgerRows};
use hypervisc::{difference_trajectory_norm, Grid, NormSpec, Snapshot};

use crate::artifacts::{
    load_snapshots, read_json, read_sweep_csv, write_json, CheckRow, DiagnoseReport, RunManifest,
    SweepManifest,
};

/// Relative slack for values that are recomputed bitwise from stored bits.
const RECOMPUTE_RTOL: f64 = 1e-12;
/// Relative slack when matching a snapshot time to a ledger row.
const TIME_MATCH_RTOL: f64 = 1e-9;

pub fn execute(dir: &Path, out: Option<&Path>) -> Result<()> {
    let report = if dir.join("sweep_manifest.json").is_file() {
        diagnose_sweep(dir)?
    } else if dir.join("run_config.json").is_file() {
        DiagnoseReport {
            target: dir.display().to_string(),
            checks: diagnose_run(dir, "")?,
            pass: true,
        }
        .finalized()
    } else {
        bail!(
            "{} holds neither run_config.json nor sweep_manifest.json",
            dir.display()
        );
    };

    let out_dir = out.unwrap_or(dir);
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_json(&out_dir.join("diagnose_report.json"), &report)?;

    for check in &report.checks {
        println!(
            "{:<44} max dev {:9.3e}  tol {:8.1e}  {}",
            check.name,
            check.max_deviation,
            check.tolerance,
            if check.pass { "ok" } else { "FAIL" }
        );
    }
    ensure!(report.pass, "diagnosis failed for {}", report.target);
    Ok(())
}

impl DiagnoseReport {
    fn finalized(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass);
        self
    }
}

/// Consistency checks for one run directory; `prefix` namespaces the check
/// names when a sweep folds several run directories into one report.
fn diagnose_run(dir: &Path, prefix: &str) -> Result<Vec<CheckRow>> {
    let manifest: RunManifest = read_json(&dir.join("run_config.json"))?;
    match manifest.equation.as_str() {
        "ns" => diagnose_run_typed::<3>(dir, &manifest, prefix),
        "pe" => diagnose_run_typed::<2>(dir, &manifest, prefix),
        other => bail!("unknown equation tag '{other}' in {}", dir.display()),
    }
}

fn diagnose_run_typed<const N: usize>(
    dir: &Path,
    manifest: &RunManifest,
    prefix: &str,
) -> Result<Vec<CheckRow>> {
    let grid = Grid::new(manifest.grid[0], manifest.grid[1], manifest.grid[2])?;
    let ledger = read_ledger_csv(&dir.join("ledger.csv"))?;
    ensure!(
        !ledger.times.is_empty(),
        "{} has an empty ledger",
        dir.display()
    );

    let mut snapshots: Vec<Snapshot<N>> = Vec::with_capacity(manifest.snapshots.len());
    for stem in &manifest.snapshots {
        let (snap_manifest, field) = hypervisc::checkpoint::read_snapshot::<N>(dir, stem)?;
        ensure!(
            snap_manifest.equation == manifest.equation,
            "snapshot {stem} in {} carries equation '{}', run manifest says '{}'",
            dir.display(),
            snap_manifest.equation,
            manifest.equation
        );
        ensure!(
            snap_manifest.grid == grid,
            "snapshot {stem} in {} was written on grid {:?}, run manifest says {:?}",
            dir.display(),
            snap_manifest.grid.n(),
            manifest.grid
        );
        ensure!(
            snap_manifest.operator == manifest.operator,
            "snapshot {stem} in {} carries a different operator than the run manifest",
            dir.display()
        );
        snapshots.push(Snapshot {
            time: snap_manifest.time,
            field,
        });
    }
    ensure!(
        !snapshots.is_empty(),
        "{} lists no snapshots",
        dir.display()
    );

    let mut checks = Vec::new();
    checks.push(CheckRow::new(
        &format!("{prefix}kinetic-vs-ledger"),
        kinetic_deviation(&snapshots, &ledger)?,
        RECOMPUTE_RTOL,
    ));
    checks.push(CheckRow::new(
        &format!("{prefix}residual-identity"),
        residual_deviation(&ledger),
        RECOMPUTE_RTOL,
    ));
    Ok(checks)
}

/// Largest relative gap between a snapshot's kinetic energy, recomputed from
/// its stored coefficients, and the ledger row recorded at the same time.
fn kinetic_deviation<const N: usize>(
    snapshots: &[Snapshot<N>],
    ledger: &LedgerRows,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for snap in snapshots {
        let row = ledger
            .times
            .iter()
            .position(|&t| (t - snap.time).abs() <= TIME_MATCH_RTOL * snap.time.abs().max(1.0))
            .with_context(|| format!("no ledger row at time {}", snap.time))?;
        let recomputed = snap.field.l2_norm_sq();
        let dev = (recomputed - ledger.kinetic[row]).abs() / ledger.kinetic[row].abs().max(1.0);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Largest relative violation of the stored identity
/// `residual = kinetic - kinetic_0 + 2 dissipation_cum - 2 work_cum`.
fn residual_deviation(ledger: &LedgerRows) -> f64 {
    let kin0 = ledger.kinetic[0];
    let mut worst = 0.0f64;
    for i in 0..ledger.times.len() {
        let expected =
            ledger.kinetic[i] - kin0 + 2.0 * ledger.dissipation_cum[i] - 2.0 * ledger.work_cum[i];
        let dev = (expected - ledger.residual[i]).abs() / expected.abs().max(1.0);
        worst = worst.max(dev);
    }
    worst
}

fn diagnose_sweep(dir: &Path) -> Result<DiagnoseReport> {
    let manifest: SweepManifest = read_json(&dir.join("sweep_manifest.json"))?;
    let checks = match manifest.equation.as_str() {
        "ns" => diagnose_sweep_typed::<3>(dir, &manifest)?,
        "pe" => diagnose_sweep_typed::<2>(dir, &manifest)?,
        other => bail!("unknown equation tag '{other}' in {}", dir.display()),
    };
    Ok(DiagnoseReport {
        target: dir.display().to_string(),
        checks,
        pass: true,
    }
    .finalized())
}

fn diagnose_sweep_typed<const N: usize>(
    dir: &Path,
    manifest: &SweepManifest,
) -> Result<Vec<CheckRow>> {
    ensure!(
        manifest.run_dirs.len() == manifest.epsilons.len(),
        "sweep manifest lists {} run dirs for {} epsilons",
        manifest.run_dirs.len(),
        manifest.epsilons.len()
    );
    let rows = read_sweep_csv(&dir.join("sweep_report.csv"))?;
    ensure!(
        rows.len() == manifest.epsilons.len() * manifest.deltas.len(),
        "sweep report has {} rows, manifest implies {}",
        rows.len(),
        manifest.epsilons.len() * manifest.deltas.len()
    );

    let mut checks = diagnose_run(&dir.join(&manifest.reference_dir), "runs/ref ")?;

    let ref_manifest: RunManifest =
        read_json(&dir.join(&manifest.reference_dir).join("run_config.json"))?;
    let reference = load_snapshots::<N>(&dir.join(&manifest.reference_dir), &ref_manifest)?;

    let mut worst_error_dev = 0.0f64;
    for (i, run_dir) in manifest.run_dirs.iter().enumerate() {
        let label = run_dir.display().to_string();
        checks.extend(diagnose_run(&dir.join(run_dir), &format!("{label} "))?);

        let run_manifest: RunManifest = read_json(&dir.join(run_dir).join("run_config.json"))?;
        let snapshots = load_snapshots::<N>(&dir.join(run_dir), &run_manifest)?;
        for (j, &delta) in manifest.deltas.iter().enumerate() {
            let row = rows[i * manifest.deltas.len() + j];
            ensure!(
                row.epsilon == manifest.epsilons[i] && row.delta == delta,
                "sweep report row {} does not match manifest order",
                i * manifest.deltas.len() + j
            );
            let space = NormSpec::Sobolev { s: 1.0 - delta };
            let recomputed = difference_trajectory_norm(&snapshots, &reference, &space)?;
            let dev = (recomputed - row.error).abs() / row.error.abs().max(1.0);
            worst_error_dev = worst_error_dev.max(dev);
        }
    }
    checks.push(CheckRow::new(
        "sweep-errors-from-snapshots",
        worst_error_dev,
        RECOMPUTE_RTOL,
    ));
    Ok(checks)
}
