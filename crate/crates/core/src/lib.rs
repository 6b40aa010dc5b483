//! Pseudo-spectral solver and estimate checks for hyper-viscous
//! incompressible flow on the anisotropic periodic box
//! `(0, 1) x (0, 1) x (-1, 1)`.
//!
//! Two equation families share one integrating-factor time stepper:
//!
//! * a three-component divergence-free velocity (incompressible flow), and
//! * a two-component horizontal velocity, even in the vertical coordinate
//!   with a column-balanced vertical average, whose vertical velocity is
//!   diagnosed from incompressibility (hydrostatic flow).
//!
//! Dissipation comes from a two-parameter operator family combining ordinary
//! viscosity with a fractional hyper-viscous term built on either the full
//! or the horizontal wavevector. The crate provides:
//!
//! * spectral transforms, constraint projections, fractional operator powers
//!   and a family of weighted norms ([`field`], [`operators`]);
//! * advective nonlinearities in dealiased divergence form, pressure
//!   recovery and the diagnosed vertical velocity ([`dynamics`]);
//! * time integration with a per-step energy ledger, blow-up guards and an
//!   a-priori local existence window ([`timestep`]);
//! * trajectory diagnostics: norms in time, difference studies between
//!   paired runs, stability-envelope fitting, the dual-norm time derivative
//!   and the energy-bound shape constant ([`diagnostics`]);
//! * randomized verification of the nonlinear estimates behind the existence
//!   and stability arguments ([`estimates`]);
//! * reproducible on-disk formats for snapshots and ledgers ([`checkpoint`]).
//!
//! All spatial frequencies enter through the physical wavevector
//! `kappa(k) = (2 pi k1, 2 pi k2, pi k3)`; the halved vertical factor
//! reflects the doubled box height.

// Mode loops index several parallel wavenumber tables by position; the
// iterator form obscures that.
#![allow(clippy::needless_range_loop)]

pub mod checkpoint;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod operators;
pub mod timestep;

pub mod estimates;

pub use error::{Error, Result};
pub use field::{
    forward_transform, inverse_transform, l2_inner, l2_inner_vec, Parity, SpectralField,
    VectorField,
};
pub use grid::{Grid, WaveIndex};
pub use operators::{
    apply_graph_power, apply_operator, apply_operator_vec, divergence, divergence_h,
    hydrostatic_project, leray_project, NormSpec, OperatorSpec, OperatorVariant,
};

pub use dynamics::{
    nonlinearity_ns, nonlinearity_pe, recover_pressure_ns, recover_pressure_pe,
    vertical_velocity, AmplitudeEnvelope, Branch, Forcing, NavierStokes, NsState, PeState,
    PrimitiveEquations,
};
pub use timestep::{
    existence_window, run, step, EnergyLedger, ExistenceWindowReport, RunOutput, Snapshot,
    SolverSettings, TimeStep,
};

pub use diagnostics::{
    difference_study, difference_trajectory_norm, energy_bound_constant, forcing_dual_load,
    gronwall_fit, time_derivative_norm, trajectory_norm, DifferenceStudy, EnergyBoundReport,
    GronwallFit, GronwallOutcome, TimeAggregation, TIME_DERIVATIVE_DUAL_ORDER,
};
pub use estimates::{
    interpolation_margins, ns_ratio_terms, pe_ratio_terms, random_hydrostatic, random_solenoidal,
    verify_interpolation, verify_interpolation_distorted, verify_mixed_derivative,
    verify_ns_estimate, verify_pe_estimate, EnsembleSpec, FieldConstraint, InterpolationReport,
    MixedDerivativeReport, RatioReport, RatioRow,
};
