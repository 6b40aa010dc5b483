//! Shared fixtures for the solver benchmarks.

use hypervisc::{
    EnsembleSpec, FieldConstraint, Grid, OperatorSpec, OperatorVariant, VectorField,
};

/// Standard benchmark resolution.
pub const BENCH_SIZE: usize = 32;

pub fn bench_grid() -> Grid {
    Grid::new(BENCH_SIZE, BENCH_SIZE, BENCH_SIZE).expect("valid grid")
}

pub fn bench_operator() -> OperatorSpec {
    OperatorSpec::new(OperatorVariant::FullHyper, 0.05, 0.1, 1.25).expect("valid operator")
}

/// Seeded divergence-free field with a decaying spectrum.
pub fn bench_velocity(grid: Grid) -> VectorField<3> {
    let ens = EnsembleSpec::new(1, 2024, 1.5, FieldConstraint::Solenoidal3d).expect("valid spec");
    hypervisc::random_solenoidal(grid, &ens, 0).expect("sampling succeeds")
}
