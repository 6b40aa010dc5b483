//! The diagnosed vertical velocity against the defining column integral.
//!
//! `w(x, y, z) = -int_{-1}^{z} div_H v(x, y, s) ds` is evaluated directly:
//! the horizontal divergence coefficients are integrated analytically in the
//! vertical basis, and the resulting series is summed at off-grid points.
//! The spectral reconstruction must agree pointwise, vanish at `z = +/-1`,
//! and be odd in `z` for even input.

use hypervisc::{
    divergence_h, random_hydrostatic, vertical_velocity, EnsembleSpec, FieldConstraint, Grid,
    Parity, SpectralField,
};
use num_complex::Complex64;
use std::f64::consts::PI;

fn series_at(f: &SpectralField, x: f64, y: f64, z: f64) -> f64 {
    let mut acc = Complex64::ZERO;
    for (_, k) in f.grid().indexed_modes() {
        let phase = 2.0 * PI * (k.k1 as f64 * x + k.k2 as f64 * y) + PI * k.k3 as f64 * z;
        acc += f.coeff(k).unwrap() * Complex64::cis(phase);
    }
    assert!(acc.im.abs() < 1e-11, "series not real");
    acc.re
}

/// `-int_{-1}^{z} d(x, y, s) ds` from the coefficients of `d`, using the
/// analytic antiderivative of each vertical basis function.
fn column_integral_at(d: &SpectralField, x: f64, y: f64, z: f64) -> f64 {
    let mut acc = Complex64::ZERO;
    for (_, k) in d.grid().indexed_modes() {
        let c = d.coeff(k).unwrap();
        if c == Complex64::ZERO {
            continue;
        }
        let horizontal = Complex64::cis(2.0 * PI * (k.k1 as f64 * x + k.k2 as f64 * y));
        let vertical = if k.k3 == 0 {
            Complex64::new(z + 1.0, 0.0)
        } else {
            let ik = Complex64::new(0.0, PI * k.k3 as f64);
            (Complex64::cis(PI * k.k3 as f64 * z) - Complex64::cis(-PI * k.k3 as f64)) / ik
        };
        acc -= c * horizontal * vertical;
    }
    assert!(acc.im.abs() < 1e-11, "series not real");
    acc.re
}

#[test]
fn reconstruction_matches_column_integral_off_grid() {
    let grid = Grid::new(8, 8, 8).unwrap();
    let ens = EnsembleSpec::new(1, 23, 1.0, FieldConstraint::Hydrostatic2d).unwrap();
    let v = random_hydrostatic(grid, &ens, 0).unwrap();
    let d = divergence_h(&v);
    let w = vertical_velocity(&v).unwrap();

    // off-grid sample points, including both boundaries
    let points = [
        (0.13, 0.71, -1.0),
        (0.13, 0.71, -0.637),
        (0.55, 0.02, -0.25),
        (0.83, 0.40, 0.111),
        (0.29, 0.95, 0.5),
        (0.47, 0.18, 0.999),
        (0.47, 0.18, 1.0),
    ];
    let mut worst = 0.0f64;
    for (x, y, z) in points {
        let direct = column_integral_at(&d, x, y, z);
        let reconstructed = series_at(&w, x, y, z);
        worst = worst.max((reconstructed - direct).abs());
    }
    assert!(worst <= 1e-10, "max pointwise deviation {worst:.3e}");

    // boundary values vanish identically in the column integral; check the
    // reconstruction directly at several horizontal positions
    for (x, y) in [(0.0, 0.0), (0.31, 0.62), (0.77, 0.12)] {
        for z in [-1.0, 1.0] {
            let val = series_at(&w, x, y, z);
            assert!(val.abs() <= 1e-10, "w({x}, {y}, {z}) = {val:.3e}");
        }
    }

    // even input produces odd output
    assert!(w.parity_deviation(Parity::Odd) <= 1e-12 * (1.0 + v.l2_norm()));
}

#[test]
fn single_mode_coefficients_solve_the_balance() {
    // for each populated divergence mode, i pi k3 w(k) + d(k) = 0 away from
    // the slab; this is the spectral statement of dz w = -d
    let grid = Grid::new(8, 8, 8).unwrap();
    let ens = EnsembleSpec::new(1, 29, 1.0, FieldConstraint::Hydrostatic2d).unwrap();
    let v = random_hydrostatic(grid, &ens, 0).unwrap();
    let d = divergence_h(&v);
    let w = vertical_velocity(&v).unwrap();
    let mut worst = 0.0f64;
    for (_, k) in grid.indexed_modes() {
        if k.k3 == 0 {
            continue;
        }
        let balance = Complex64::new(0.0, PI * k.k3 as f64) * w.coeff(k).unwrap()
            + d.coeff(k).unwrap();
        worst = worst.max(balance.norm());
    }
    assert!(worst <= 1e-13, "max balance residual {worst:.3e}");
    // and the vertical average of w vanishes together with the boundary
    // values only through the slab coefficients; they must reproduce the
    // boundary sum
    for i1 in 0..8 {
        for i2 in 0..8 {
            let mut boundary = Complex64::ZERO;
            for (_, k) in grid.indexed_modes() {
                if k.k3 == 0 {
                    continue;
                }
                if Grid::storage_offset(k.k1, 8) == Some(i1)
                    && Grid::storage_offset(k.k2, 8) == Some(i2)
                {
                    let sign = if k.k3.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                    boundary -= w.coeff(k).unwrap() * sign;
                }
            }
            let k_slab = grid.wave_index(i1, i2, 0);
            let got = w.coeff(k_slab).unwrap();
            assert!(
                (got - boundary).norm() <= 1e-12,
                "slab coefficient mismatch at ({i1}, {i2})"
            );
        }
    }
}
