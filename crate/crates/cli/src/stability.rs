//! `stability`: grow a family of perturbed runs off one base trajectory and
//! fit the difference against its integral envelope.
//!
//! All perturbed runs share a single seeded unit direction, scaled by the
//! configured sizes, so the reported amplification factors are comparable
//! across sizes and, on linear dynamics, scale exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use hypervisc::{
    difference_study, gronwall_fit, run, GronwallOutcome, NavierStokes, OperatorSpec,
    PrimitiveEquations, TimeStep,
};

use crate::artifacts::{fmt_float, persist_run, write_json};
use crate::config::{BranchKind, ConfigFile, RunSetup};
use crate::fields::{build_forcing, BranchExt};

/// Per-size outcome collected into `stability_report.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub size: f64,
    /// `sup_t ||delta(t)||_{L2}` over the recorded snapshots.
    pub sup_delta: f64,
    /// `sup_delta / size`; absent for the zero-size determinism row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplification: Option<f64>,
    pub envelope: GronwallOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub equation: String,
    pub grid: [usize; 3],
    pub operator: OperatorSpec,
    pub perturbation_seed: u64,
    pub entries: Vec<StabilityEntry>,
}

pub fn execute(cfg: &ConfigFile, out: &Path, seed: Option<u64>) -> Result<()> {
    let setup = cfg.run_setup()?;
    let section = cfg
        .stability
        .as_ref()
        .context("a [stability] section is required for stability")?;
    if !matches!(setup.settings.time_step, TimeStep::Fixed { .. }) {
        bail!("stability requires time.dt: adaptive steps would put base and perturbed runs on different time grids");
    }
    ensure!(
        !section.perturbation_sizes.is_empty(),
        "stability.perturbation_sizes must be non-empty"
    );
    for &size in &section.perturbation_sizes {
        ensure!(
            size.is_finite() && size >= 0.0,
            "stability.perturbation_sizes entries must be finite and non-negative, got {size}"
        );
    }
    let direction_seed = seed.unwrap_or(section.seed);
    let profile = section.spectrum_profile.unwrap_or(1.5);
    match setup.branch {
        BranchKind::Ns => drive::<3, NavierStokes>(
            &setup,
            cfg,
            out,
            seed,
            direction_seed,
            profile,
            &section.perturbation_sizes,
        ),
        BranchKind::Pe => drive::<2, PrimitiveEquations>(
            &setup,
            cfg,
            out,
            seed,
            direction_seed,
            profile,
            &section.perturbation_sizes,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn drive<const N: usize, B: BranchExt<N>>(
    setup: &RunSetup,
    cfg: &ConfigFile,
    out: &Path,
    seed: Option<u64>,
    direction_seed: u64,
    profile: f64,
    sizes: &[f64],
) -> Result<()> {
    let initial = B::build_field(setup.grid, &setup.initial, seed)?;
    let forcing = build_forcing::<N, B>(setup.grid, setup.forcing.as_ref(), seed)?;

    let base = run::<N, B>(&setup.settings, &forcing, &initial)?;
    persist_run(&out.join("base"), B::NAME, &setup.settings, cfg, seed, &base)?;

    let direction = B::sample_unit(setup.grid, direction_seed, profile)?;

    let mut entries = Vec::with_capacity(sizes.len());
    for (i, &size) in sizes.iter().enumerate() {
        let mut perturbed_initial = initial.clone();
        perturbed_initial.add_scaled(size, &direction)?;
        let perturbed = run::<N, B>(&setup.settings, &forcing, &perturbed_initial)?;
        persist_run(
            &out.join(format!("pert{i:02}")),
            B::NAME,
            &setup.settings,
            cfg,
            seed,
            &perturbed,
        )?;

        let study = difference_study(&perturbed.snapshots, &base.snapshots, &setup.operator)?;
        let envelope = gronwall_fit(&study, &base.snapshots, &setup.operator)?;

        let mut csv = String::from("time,delta_l2_sq,dissipation,dissipation_cum\n");
        for j in 0..study.times.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_float(study.times[j]),
                fmt_float(study.delta_l2_sq[j]),
                fmt_float(study.dissipation[j]),
                fmt_float(study.dissipation_cum[j]),
            ));
        }
        fs::write(out.join(format!("difference_pert{i:02}.csv")), csv)?;

        let sup_delta = study.sup_delta();
        entries.push(StabilityEntry {
            size,
            sup_delta,
            amplification: (size > 0.0).then(|| sup_delta / size),
            envelope,
        });
    }

    let report = StabilityReport {
        equation: B::NAME.to_string(),
        grid: setup.grid.n(),
        operator: setup.operator,
        perturbation_seed: direction_seed,
        entries,
    };
    write_json(&out.join("stability_report.json"), &report)?;

    for entry in &report.entries {
        match (&entry.envelope, entry.amplification) {
            (GronwallOutcome::Fit(fit), Some(amp)) => println!(
                "size {:9.3e}  sup |delta| {:.6e}  amplification {:.4}  envelope c_hat {:.4} feasible {}",
                entry.size, entry.sup_delta, amp, fit.c_hat, fit.feasible
            ),
            (GronwallOutcome::DeterminismCheck { max_delta, pass }, _) => println!(
                "size 0  integrator determinism: max |delta| {:.3e}  pass {}",
                max_delta, pass
            ),
            (GronwallOutcome::Fit(fit), None) => println!(
                "size {:9.3e}  sup |delta| {:.6e}  envelope c_hat {:.4} feasible {}",
                entry.size, entry.sup_delta, fit.c_hat, fit.feasible
            ),
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
