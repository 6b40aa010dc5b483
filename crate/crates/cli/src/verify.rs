//! `verify`: randomized and exhaustive checks of the inequalities the
//! integrator's a-priori bounds lean on.
//!
//! Each configured operator section produces a per-member CSV of both sides
//! of the nonlinearity bound plus their ratio, an interpolation margin check
//! on the same ensemble, and summary statistics. An interpolation violation
//! or a mixed-derivative violation is an arithmetic bug by construction, so
//! either one fails the process. A hidden fault-injection flag corrupts one
//! norm weight to demonstrate that the canary actually trips.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use hypervisc::{
    verify_interpolation, verify_interpolation_distorted, verify_mixed_derivative,
    verify_ns_estimate, verify_pe_estimate, EnsembleSpec, FieldConstraint, Grid,
    InterpolationReport, MixedDerivativeReport, OperatorSpec,
};

use crate::artifacts::{write_json, write_ratio_csv, RatioStats};
use crate::config::{ConfigFile, VerifySection};

/// The distortion applied by `--corrupt-norm-weights`; anything beyond the
/// interpolation slack trips the canary, this is comfortably beyond.
const FAULT_DISTORTION: f64 = 10.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateBlock {
    pub operator: OperatorSpec,
    pub ratios: RatioStats,
    pub interpolation: InterpolationReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifySummary {
    pub grid: [usize; 3],
    pub members: usize,
    pub seed: u64,
    pub spectrum_profile: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<EstimateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe: Option<EstimateBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixed: Option<MixedDerivativeReport>,
}

pub fn execute(cfg: &ConfigFile, out: &Path, seed: Option<u64>, corrupt: bool) -> Result<()> {
    let grid = cfg.grid.build()?;
    let section = cfg
        .verify
        .as_ref()
        .context("a [verify] section is required for verify")?;
    ensure!(
        section.ns_operator.is_some()
            || section.pe_operator.is_some()
            || section.mixed_operator.is_some(),
        "the [verify] section must configure at least one of ns_operator, pe_operator, mixed_operator"
    );
    if corrupt && section.ns_operator.is_none() && section.pe_operator.is_none() {
        bail!("--corrupt-norm-weights needs verify.ns_operator or verify.pe_operator");
    }
    let profile = section.spectrum_profile.unwrap_or(1.5);
    let seed_value = seed.unwrap_or(section.seed);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut summary = VerifySummary {
        grid: grid.n(),
        members: section.count,
        seed: seed_value,
        spectrum_profile: profile,
        ns: None,
        pe: None,
        mixed: None,
    };

    if let Some(op_section) = &section.ns_operator {
        let op = op_section.build().context("verify.ns_operator")?;
        let ens = EnsembleSpec::new(
            section.count,
            seed_value,
            profile,
            FieldConstraint::Solenoidal3d,
        )?;
        let report = verify_ns_estimate(grid, &op, &ens)?;
        write_ratio_csv(&out.join("ns_ratios.csv"), &report)?;
        let interpolation = run_interpolation(grid, &op, &ens, corrupt)?;
        println!(
            "ns estimate: {} members, max ratio {:.6e}, mean {:.6e}, min interpolation margin {:.3e}",
            report.rows.len(),
            report.max,
            report.mean,
            interpolation
                .min_margin_quarter
                .min(interpolation.min_margin_eighth)
        );
        summary.ns = Some(EstimateBlock {
            operator: op,
            ratios: RatioStats::from_report(&report),
            interpolation,
        });
    }

    if let Some(op_section) = &section.pe_operator {
        let op = op_section.build().context("verify.pe_operator")?;
        let ens = EnsembleSpec::new(
            section.count,
            seed_value,
            profile,
            FieldConstraint::Hydrostatic2d,
        )?;
        let report = verify_pe_estimate(grid, &op, &ens)?;
        write_ratio_csv(&out.join("pe_ratios.csv"), &report)?;
        let interpolation = run_interpolation(grid, &op, &ens, corrupt)?;
        println!(
            "pe estimate: {} members, max ratio {:.6e}, mean {:.6e}, min interpolation margin {:.3e}",
            report.rows.len(),
            report.max,
            report.mean,
            interpolation
                .min_margin_quarter
                .min(interpolation.min_margin_eighth)
        );
        summary.pe = Some(EstimateBlock {
            operator: op,
            ratios: RatioStats::from_report(&report),
            interpolation,
        });
    }

    if let Some(op_section) = &section.mixed_operator {
        let op = op_section.build().context("verify.mixed_operator")?;
        let mixed_grid = mixed_grid(section, grid)?;
        let report = verify_mixed_derivative(&op, mixed_grid)?;
        ensure!(
            report.violations == 0,
            "mixed-derivative inequality violated on {} of {} modes",
            report.violations,
            report.modes_checked
        );
        println!(
            "mixed derivative: {} modes checked, 0 violations, min slack {:.3e}",
            report.modes_checked, report.min_slack
        );
        summary.mixed = Some(report);
    }

    write_json(&out.join("summary.json"), &summary)?;
    println!("artifacts in {}", out.display());
    Ok(())
}

fn run_interpolation(
    grid: Grid,
    op: &OperatorSpec,
    ens: &EnsembleSpec,
    corrupt: bool,
) -> Result<InterpolationReport> {
    if corrupt {
        Ok(verify_interpolation_distorted(grid, op, ens, FAULT_DISTORTION)?)
    } else {
        Ok(verify_interpolation(grid, op, ens)?)
    }
}

fn mixed_grid(section: &VerifySection, fallback: Grid) -> Result<Grid> {
    match section.mixed_grid {
        Some(n) => Grid::new(n[0], n[1], n[2]).context("verify.mixed_grid"),
        None => Ok(fallback),
    }
}
