//! `run`: integrate one configured trajectory and persist its artifacts.

use std::path::Path;

use anyhow::Result;

use hypervisc::{run, NavierStokes, PrimitiveEquations, RunOutput};

use crate::artifacts::persist_run;
use crate::config::{BranchKind, ConfigFile, RunSetup};
use crate::fields::{build_forcing, BranchExt};

pub fn execute(cfg: &ConfigFile, out: &Path, seed: Option<u64>) -> Result<()> {
    let setup = cfg.run_setup()?;
    match setup.branch {
        BranchKind::Ns => drive::<3, NavierStokes>(&setup, cfg, out, seed),
        BranchKind::Pe => drive::<2, PrimitiveEquations>(&setup, cfg, out, seed),
    }
}

/// Integrate under one equation branch and write the run directory.
fn drive<const N: usize, B: BranchExt<N>>(
    setup: &RunSetup,
    cfg: &ConfigFile,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let output = integrate::<N, B>(setup, seed)?;
    persist_run(out, B::NAME, &setup.settings, cfg, seed, &output)?;
    let ledger = &output.ledger;
    let last = ledger.len() - 1;
    println!(
        "run: {} steps to t = {}, kinetic {} -> {}, max energy residual {:.3e}",
        ledger.len() - 1,
        ledger.times[last],
        ledger.kinetic[0],
        ledger.kinetic[last],
        ledger.max_abs_residual()
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

/// Build the data and integrate; shared with the sweep and stability drivers.
pub fn integrate<const N: usize, B: BranchExt<N>>(
    setup: &RunSetup,
    seed: Option<u64>,
) -> Result<RunOutput<N>> {
    let initial = B::build_field(setup.grid, &setup.initial, seed)?;
    let forcing = build_forcing::<N, B>(setup.grid, setup.forcing.as_ref(), seed)?;
    Ok(run::<N, B>(&setup.settings, &forcing, &initial)?)
}
