//! Construction of initial data and forcing shapes from config sections.
//!
//! Closed-form fields are assembled directly in coefficient space; the
//! cellular flow is sampled on the grid and transformed, exercising the same
//! path a measured field would take. Random fields reuse the seeded ensemble
//! sampler so a run, a stability study, and a verification report driven by
//! the same seed see the same data.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use ndarray::Array3;
use num_complex::Complex64;

use hypervisc::checkpoint::read_snapshot;
use hypervisc::{
    forward_transform, random_hydrostatic, random_solenoidal, Branch, EnsembleSpec,
    FieldConstraint, Forcing, Grid, NavierStokes, PrimitiveEquations, SpectralField, VectorField,
    WaveIndex,
};

use crate::config::{FieldSection, ForcingSection};

/// Branch-specific construction hooks layered on top of the solver traits.
pub trait BranchExt<const N: usize>: Branch<N> {
    /// Admissibility class used when sampling random fields for this branch.
    const CONSTRAINT: FieldConstraint;

    /// Build a field from a config section on the given grid.
    fn build_field(grid: Grid, section: &FieldSection, seed: Option<u64>)
        -> Result<VectorField<N>>;

    /// Unit-norm random direction in the branch's admissible class.
    fn sample_unit(grid: Grid, seed: u64, profile: f64) -> Result<VectorField<N>> {
        let ens = EnsembleSpec::new(1, seed, profile, Self::CONSTRAINT)?;
        let field = Self::sample(grid, &ens)?;
        let norm = field.l2_norm();
        ensure!(norm > 0.0, "sampled perturbation direction is zero");
        Ok(field.scaled(1.0 / norm))
    }

    fn sample(grid: Grid, ens: &EnsembleSpec) -> Result<VectorField<N>>;
}

impl BranchExt<3> for NavierStokes {
    const CONSTRAINT: FieldConstraint = FieldConstraint::Solenoidal3d;

    fn build_field(
        grid: Grid,
        section: &FieldSection,
        seed: Option<u64>,
    ) -> Result<VectorField<3>> {
        match section {
            FieldSection::Beltrami { mode, amplitude } => beltrami(grid, *mode, *amplitude),
            FieldSection::TaylorGreen { amplitude } => {
                let (v1, v2) = taylor_green_components(grid, *amplitude)?;
                Ok(VectorField::new([v1, v2, SpectralField::zeros(grid)])?)
            }
            FieldSection::SingleMode {
                component,
                mode,
                re,
                im,
            } => single_mode::<3>(grid, *component, *mode, *re, *im),
            FieldSection::Random {
                seed: cfg_seed,
                spectrum_profile,
                amplitude,
            } => {
                let ens = EnsembleSpec::new(
                    1,
                    seed.unwrap_or(*cfg_seed),
                    *spectrum_profile,
                    Self::CONSTRAINT,
                )?;
                Ok(Self::sample(grid, &ens)?.scaled(*amplitude))
            }
            FieldSection::Checkpoint { path, stem } => checkpoint::<3>(grid, path, stem, "ns"),
        }
    }

    fn sample(grid: Grid, ens: &EnsembleSpec) -> Result<VectorField<3>> {
        Ok(random_solenoidal(grid, ens, 0)?)
    }
}

impl BranchExt<2> for PrimitiveEquations {
    const CONSTRAINT: FieldConstraint = FieldConstraint::Hydrostatic2d;

    fn build_field(
        grid: Grid,
        section: &FieldSection,
        seed: Option<u64>,
    ) -> Result<VectorField<2>> {
        match section {
            FieldSection::Beltrami { .. } => {
                bail!("a beltrami field has three components; use it with the ns branch")
            }
            FieldSection::TaylorGreen { amplitude } => {
                let (v1, v2) = taylor_green_components(grid, *amplitude)?;
                Ok(VectorField::new([v1, v2])?)
            }
            FieldSection::SingleMode {
                component,
                mode,
                re,
                im,
            } => single_mode::<2>(grid, *component, *mode, *re, *im),
            FieldSection::Random {
                seed: cfg_seed,
                spectrum_profile,
                amplitude,
            } => {
                let ens = EnsembleSpec::new(
                    1,
                    seed.unwrap_or(*cfg_seed),
                    *spectrum_profile,
                    Self::CONSTRAINT,
                )?;
                Ok(Self::sample(grid, &ens)?.scaled(*amplitude))
            }
            FieldSection::Checkpoint { path, stem } => checkpoint::<2>(grid, path, stem, "pe"),
        }
    }

    fn sample(grid: Grid, ens: &EnsembleSpec) -> Result<VectorField<2>> {
        Ok(random_hydrostatic(grid, ens, 0)?)
    }
}

/// Build the forcing term, if the config declares one.
pub fn build_forcing<const N: usize, B: BranchExt<N>>(
    grid: Grid,
    section: Option<&ForcingSection>,
    seed: Option<u64>,
) -> Result<Forcing<N>> {
    match section {
        None => Ok(Forcing::none()),
        Some(forcing) => {
            let shape = B::build_field(grid, &forcing.field, seed)?;
            match &forcing.envelope {
                None => Ok(Forcing::steady(shape)),
                Some(envelope) => Ok(Forcing::Applied {
                    field: shape,
                    envelope: *envelope,
                }),
            }
        }
    }
}

/// Curl eigenfield `u(k) = a/2 (e1 + i e2)` on the pair `{k, -k}`, where
/// `e1 = kappa_perp / |kappa_H|` and `e2 = kappa x e1 / |kappa|`; its
/// coefficient-space norm equals `a` and the advective term vanishes.
fn beltrami(grid: Grid, mode: [i64; 3], amplitude: f64) -> Result<VectorField<3>> {
    let k = WaveIndex::new(mode[0], mode[1], mode[2]);
    ensure!(
        grid.is_retained(&k),
        "beltrami mode {mode:?} is not retained on this grid"
    );
    let kappa = k.kappa();
    let kh = k.kappa_h_sq().sqrt();
    ensure!(
        kh > 0.0,
        "beltrami mode needs a nonzero horizontal wavevector"
    );
    let lambda = k.kappa_sq().sqrt();
    let e1 = [kappa[1] / kh, -kappa[0] / kh, 0.0];
    let e2 = [
        (kappa[1] * e1[2] - kappa[2] * e1[1]) / lambda,
        (kappa[2] * e1[0] - kappa[0] * e1[2]) / lambda,
        (kappa[0] * e1[1] - kappa[1] * e1[0]) / lambda,
    ];
    let mut field = VectorField::<3>::zeros(grid);
    for i in 0..3 {
        let c = 0.5 * amplitude * Complex64::new(e1[i], e2[i]);
        field.component_mut(i).set_mode_pair(k, c)?;
    }
    Ok(field)
}

/// Horizontal components of the depth-independent cellular flow
/// `(a sin(2 pi x) cos(2 pi y), -a cos(2 pi x) sin(2 pi y))`.
fn taylor_green_components(grid: Grid, amplitude: f64) -> Result<(SpectralField, SpectralField)> {
    let [n1, n2, n3] = grid.n();
    let mut s1 = Array3::zeros((n1, n2, n3));
    let mut s2 = Array3::zeros((n1, n2, n3));
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            for j3 in 0..n3 {
                let [x, y, _] = grid.point(j1, j2, j3);
                let (sx, cx) = (std::f64::consts::TAU * x).sin_cos();
                let (sy, cy) = (std::f64::consts::TAU * y).sin_cos();
                s1[(j1, j2, j3)] = amplitude * sx * cy;
                s2[(j1, j2, j3)] = -amplitude * cx * sy;
            }
        }
    }
    Ok((forward_transform(grid, &s1)?, forward_transform(grid, &s2)?))
}

fn single_mode<const N: usize>(
    grid: Grid,
    component: usize,
    mode: [i64; 3],
    re: f64,
    im: f64,
) -> Result<VectorField<N>> {
    ensure!(
        component < N,
        "component {component} out of range for a {N}-component field"
    );
    let k = WaveIndex::new(mode[0], mode[1], mode[2]);
    ensure!(
        grid.is_retained(&k),
        "mode {mode:?} is not retained on this grid"
    );
    let mut field = VectorField::<N>::zeros(grid);
    field
        .component_mut(component)
        .set_mode_pair(k, Complex64::new(re, im))?;
    Ok(field)
}

fn checkpoint<const N: usize>(
    grid: Grid,
    path: &str,
    stem: &str,
    equation: &str,
) -> Result<VectorField<N>> {
    let (manifest, field) = read_snapshot::<N>(Path::new(path), stem)
        .with_context(|| format!("loading checkpoint {stem} from {path}"))?;
    ensure!(
        manifest.equation == equation,
        "checkpoint {stem} holds a {} state, expected {equation}",
        manifest.equation
    );
    ensure!(
        manifest.grid == grid,
        "checkpoint grid {:?} does not match configured grid {:?}",
        manifest.grid.n(),
        grid.n()
    );
    Ok(field)
}
