//! `sweep-eps`: ladder of runs with shrinking perturbation strength, compared
//! against the strength-zero reference in weakened Sobolev norms.
//!
//! Every run reuses the same initial data, forcing, and step schedule; only
//! the operator's perturbation strength changes, so the trajectory difference
//! isolates the effect of the extra dissipation. The report also records the
//! dual-norm size of each run's time derivative, whose boundedness across the
//! ladder is what makes the limit passage compact.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use hypervisc::{
    difference_trajectory_norm, run, time_derivative_norm, NavierStokes, NormSpec,
    PrimitiveEquations, TimeStep, TIME_DERIVATIVE_DUAL_ORDER,
};

use crate::artifacts::{fmt_float, persist_run, write_json, write_sweep_csv, SweepManifest, SweepRow};
use crate::config::{BranchKind, ConfigFile, RunSetup};
use crate::fields::{build_forcing, BranchExt};

pub fn execute(cfg: &ConfigFile, out: &Path, seed: Option<u64>) -> Result<()> {
    let setup = cfg.run_setup()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .context("a [sweep] section is required for sweep-eps")?;
    ensure!(
        setup.operator.nu() > 0.0,
        "sweep-eps requires operator.nu > 0: the reference run keeps only the \
         fixed viscosity once the perturbation strength is removed"
    );
    if !matches!(setup.settings.time_step, TimeStep::Fixed { .. }) {
        bail!("sweep-eps requires time.dt: adaptive steps would put the runs on different time grids");
    }

    let mut epsilons = sweep.epsilons.clone();
    ensure!(!epsilons.is_empty(), "sweep.epsilons must be non-empty");
    for &e in &epsilons {
        ensure!(
            e.is_finite() && e >= 0.0,
            "sweep.epsilons entries must be finite and non-negative, got {e}"
        );
    }
    epsilons.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    epsilons.dedup();

    let deltas = sweep.deltas.clone().unwrap_or_else(|| vec![1.0]);
    for &d in &deltas {
        ensure!(
            d > 0.0 && d <= 1.0,
            "sweep.deltas entries must lie in (0, 1], got {d}"
        );
    }

    match setup.branch {
        BranchKind::Ns => drive::<3, NavierStokes>(&setup, cfg, out, seed, &epsilons, &deltas),
        BranchKind::Pe => drive::<2, PrimitiveEquations>(&setup, cfg, out, seed, &epsilons, &deltas),
    }
}

fn drive<const N: usize, B: BranchExt<N>>(
    setup: &RunSetup,
    cfg: &ConfigFile,
    out: &Path,
    seed: Option<u64>,
    epsilons: &[f64],
    deltas: &[f64],
) -> Result<()> {
    let initial = B::build_field(setup.grid, &setup.initial, seed)?;
    let forcing = build_forcing::<N, B>(setup.grid, setup.forcing.as_ref(), seed)?;

    let mut ref_settings = setup.settings.clone();
    ref_settings.operator = setup.operator.with_eps(0.0)?;
    let reference = run::<N, B>(&ref_settings, &forcing, &initial)?;
    let reference_dir = PathBuf::from("runs").join("ref");
    persist_run(&out.join(&reference_dir), B::NAME, &ref_settings, cfg, seed, &reference)?;

    let mut sweep_rows = Vec::new();
    let mut derivative_rows = Vec::new();
    let mut run_dirs = Vec::new();
    for (i, &eps) in epsilons.iter().enumerate() {
        let mut settings = setup.settings.clone();
        settings.operator = setup.operator.with_eps(eps)?;
        let output = run::<N, B>(&settings, &forcing, &initial)?;
        let dir = PathBuf::from("runs").join(format!("eps{i:02}"));
        persist_run(&out.join(&dir), B::NAME, &settings, cfg, seed, &output)?;

        for &delta in deltas {
            let space = NormSpec::Sobolev { s: 1.0 - delta };
            let error =
                difference_trajectory_norm(&output.snapshots, &reference.snapshots, &space)?;
            sweep_rows.push(SweepRow {
                epsilon: eps,
                delta,
                error,
            });
        }
        let derivative = time_derivative_norm::<N, B>(
            &output.snapshots,
            &settings.operator,
            &forcing,
            settings.nonlinearity,
            TIME_DERIVATIVE_DUAL_ORDER,
        )?;
        derivative_rows.push((eps, derivative));
        run_dirs.push(dir);
    }

    write_sweep_csv(&out.join("sweep_report.csv"), &sweep_rows)?;

    let mut derivative_csv = String::from("epsilon,derivative_norm\n");
    for (eps, derivative) in &derivative_rows {
        derivative_csv.push_str(&format!("{},{}\n", fmt_float(*eps), fmt_float(*derivative)));
    }
    fs::write(out.join("derivative_report.csv"), derivative_csv)?;

    let manifest = SweepManifest {
        equation: B::NAME.to_string(),
        grid: setup.grid.n(),
        operator: setup.operator,
        epsilons: epsilons.to_vec(),
        deltas: deltas.to_vec(),
        reference_dir,
        run_dirs,
    };
    write_json(&out.join("sweep_manifest.json"), &manifest)?;

    for row in &sweep_rows {
        println!(
            "epsilon {:9.3e}  delta {:4.2}  error {:.6e}",
            row.epsilon, row.delta, row.error
        );
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
