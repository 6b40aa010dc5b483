//! Transform pipeline against brute-force summation.
//!
//! The forward transform must agree with the direct O(N^2) projection
//! `c(k) = (1/N) sum_j u(x_j) conj(e_k(x_j))` on the collocation points, and
//! the inverse with direct evaluation of the basis series. This pins the
//! axis ordering, the normalization and the vertical phase convention all at
//! once, independently of any FFT library behavior.

use hypervisc::{forward_transform, inverse_transform, Grid, SpectralField, WaveIndex};
use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn basis_at(k: WaveIndex, x: f64, y: f64, z: f64) -> Complex64 {
    let phase = 2.0 * PI * k.k1 as f64 * x + 2.0 * PI * k.k2 as f64 * y + PI * k.k3 as f64 * z;
    Complex64::cis(phase)
}

fn random_samples(grid: Grid, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [n1, n2, n3] = grid.n();
    Array3::from_shape_fn((n1, n2, n3), |_| rng.gen_range(-1.0..1.0))
}

fn direct_analysis(grid: Grid, samples: &Array3<f64>) -> Vec<(WaveIndex, Complex64)> {
    let [n1, n2, n3] = grid.n();
    let scale = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(grid.len());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let k = grid.wave_index(i1, i2, i3);
                let mut acc = Complex64::ZERO;
                for j1 in 0..n1 {
                    for j2 in 0..n2 {
                        for j3 in 0..n3 {
                            let [x, y, z] = grid.point(j1, j2, j3);
                            acc += samples[(j1, j2, j3)] * basis_at(k, x, y, z).conj();
                        }
                    }
                }
                out.push((k, acc * scale));
            }
        }
    }
    out
}

#[test]
fn forward_matches_direct_projection() {
    let grid = Grid::new(8, 8, 8).unwrap();
    let samples = random_samples(grid, 11);
    let fast = forward_transform(grid, &samples).unwrap();
    let mut worst = 0.0f64;
    for (k, direct) in direct_analysis(grid, &samples) {
        let got = fast.coeff(k).unwrap();
        worst = worst.max((got - direct).norm());
    }
    assert!(worst <= 1e-10, "max coefficient deviation {worst:.3e}");
}

#[test]
fn inverse_matches_direct_series_evaluation() {
    let grid = Grid::new(8, 8, 8).unwrap();
    // random Hermitian coefficients on conjugate-canonical modes: the mode
    // set includes unpaired planes, which direct evaluation must also honor
    let mut field = SpectralField::zeros(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (_, k) in grid.indexed_modes() {
        if k.is_conjugate_canonical() && grid.is_retained(&k) {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            field.set_mode_pair(k, v).unwrap();
        }
    }
    field
        .set_coeff(WaveIndex::new(0, 0, 0), Complex64::new(0.4, 0.0))
        .unwrap();
    let fast = inverse_transform(&field).unwrap();
    let [n1, n2, n3] = grid.n();
    let mut worst = 0.0f64;
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            for j3 in 0..n3 {
                let [x, y, z] = grid.point(j1, j2, j3);
                let mut acc = Complex64::ZERO;
                for (_, k) in grid.indexed_modes() {
                    if let Some(c) = field.coeff(k) {
                        acc += c * basis_at(k, x, y, z);
                    }
                }
                assert!(acc.im.abs() < 1e-11, "series not real at a grid point");
                worst = worst.max((fast[(j1, j2, j3)] - acc.re).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "max sample deviation {worst:.3e}");
}

#[test]
fn anisotropic_axes_are_not_interchangeable() {
    // the same index along x and along z carries different frequencies;
    // transforming a z-cosine must not excite the x pair and vice versa
    let grid = Grid::new(8, 8, 8).unwrap();
    let [n1, n2, n3] = grid.n();
    let z_wave = Array3::from_shape_fn((n1, n2, n3), |(j1, j2, j3)| {
        let [_, _, z] = grid.point(j1, j2, j3);
        (2.0 * PI * z).cos()
    });
    let f = forward_transform(grid, &z_wave).unwrap();
    // cos(2 pi z) = cos(pi * 2 * z): vertical index k3 = +/-2
    assert!((f.coeff(WaveIndex::new(0, 0, 2)).unwrap().re - 0.5).abs() < 1e-12);
    assert!(f.coeff(WaveIndex::new(2, 0, 0)).unwrap().norm() < 1e-13);
    assert!(f.coeff(WaveIndex::new(0, 0, 1)).unwrap().norm() < 1e-13);
}

#[test]
fn gradient_energy_matches_analytic_integral() {
    // f = cos(2 pi x) cos(pi z): mean square of |grad f| over the box is
    // (4 pi^2 + pi^2) / 4, and spectrally sum_k |kappa|^2 |c(k)|^2
    let grid = Grid::new(16, 16, 16).unwrap();
    let [n1, n2, n3] = grid.n();
    let samples = Array3::from_shape_fn((n1, n2, n3), |(j1, j2, j3)| {
        let [x, _, z] = grid.point(j1, j2, j3);
        (2.0 * PI * x).cos() * (PI * z).cos()
    });
    let f = forward_transform(grid, &samples).unwrap();
    let mut grad_energy = 0.0;
    for (_, k) in grid.indexed_modes() {
        grad_energy += k.kappa_sq() * f.coeff(k).unwrap().norm_sqr();
    }
    let analytic = (4.0 * PI * PI + PI * PI) / 4.0;
    assert!(
        (grad_energy - analytic).abs() < 1e-10 * analytic,
        "spectral {grad_energy} vs analytic {analytic}"
    );
    // mean square of f itself is 1/4
    assert!((f.l2_norm_sq() - 0.25).abs() < 1e-13);
}
