//! Spectral fields on the anisotropic box.
//!
//! A [`SpectralField`] stores the coefficients `c(k)` of the expansion
//!
//! ```text
//! f(x, y, z) = sum_k c(k) e^{2 pi i k1 x} e^{2 pi i k2 y} e^{pi i k3 z}
//! ```
//!
//! in FFT storage order. The vertical basis has period 2, matching the box
//! height; evaluation on the collocation grid `z_j = -1 + 2 j / n3` relates
//! these coefficients to plain DFT coefficients through the phase
//! `(-1)^{k3}`, which the transforms apply internally.
//!
//! Transform normalization: `forward_transform` divides by the number of
//! sample points, so a unit-amplitude cosine has coefficients of modulus 1/2
//! and Parseval reads `sum_k |c(k)|^2 = (1/N) sum_x |f(x)|^2`. Norms computed
//! from coefficients therefore use the normalized counting measure and no
//! extra volume factor.

use ndarray::Array3;
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft::transform_all_axes;
use crate::grid::{Grid, WaveIndex};

/// Relative tolerance for the conjugate-symmetry precondition of
/// [`inverse_transform`].
const SYMMETRY_RTOL: f64 = 1e-8;

/// Parity in the vertical coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Scalar field stored as spectral coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    data: Array3<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let [n1, n2, n3] = grid.n();
        Self {
            grid,
            data: Array3::zeros((n1, n2, n3)),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.data
    }

    pub(crate) fn from_parts(grid: Grid, data: Array3<Complex64>) -> Self {
        debug_assert_eq!(data.dim(), (grid.n()[0], grid.n()[1], grid.n()[2]));
        Self { grid, data }
    }

    /// Coefficient of mode `k`, or `None` when `k` lies outside the stored box.
    pub fn coeff(&self, k: WaveIndex) -> Option<Complex64> {
        self.grid.storage_index(k).map(|idx| self.data[idx])
    }

    pub fn set_coeff(&mut self, k: WaveIndex, value: Complex64) -> Result<()> {
        let idx = self.grid.storage_index(k).ok_or_else(|| {
            Error::InvalidParameter(format!("mode ({}, {}, {}) outside the stored box", k.k1, k.k2, k.k3))
        })?;
        self.data[idx] = value;
        Ok(())
    }

    /// Set `c(k) = value` and `c(-k) = conj(value)` so the represented field
    /// stays real. For `k = 0` the value must already be real.
    pub fn set_mode_pair(&mut self, k: WaveIndex, value: Complex64) -> Result<()> {
        if k.is_zero() {
            if value.im != 0.0 {
                return Err(Error::InvalidParameter(
                    "zero-mode coefficient must be real".into(),
                ));
            }
            return self.set_coeff(k, value);
        }
        self.set_coeff(k, value)?;
        self.set_coeff(-k, value.conj())
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.data[(0, 0, 0)]
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest deviation from conjugate symmetry `c(-k) = conj(c(k))`.
    pub fn symmetry_deviation(&self) -> f64 {
        let [n1, n2, n3] = self.grid.n();
        let mut worst = 0.0f64;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let j = self.grid.conjugate_index(i1, i2, i3);
                    let d = (self.data[j] - self.data[(i1, i2, i3)].conj()).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Project onto the even or odd part in the vertical coordinate.
    pub fn parity_projection(&self, parity: Parity) -> Self {
        let [n1, n2, n3] = self.grid.n();
        let mut out = Array3::zeros((n1, n2, n3));
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let mirror = (n3 - i3) % n3;
                    let a = self.data[(i1, i2, i3)];
                    let b = self.data[(i1, i2, mirror)];
                    out[(i1, i2, i3)] = match parity {
                        Parity::Even => (a + b) * 0.5,
                        Parity::Odd => (a - b) * 0.5,
                    };
                }
            }
        }
        Self::from_parts(self.grid, out)
    }

    /// L2 norm of the content with parity opposite to `parity`.
    pub fn parity_deviation(&self, parity: Parity) -> f64 {
        let opposite = match parity {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        };
        self.parity_projection(opposite).l2_norm()
    }

    /// Zero every mode outside the retained band.
    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub(crate) fn dealias_in_place(&mut self) {
        let grid = self.grid;
        let [n1, n2, n3] = grid.n();
        let k1s = grid.signed_axis(0);
        let k2s = grid.signed_axis(1);
        let k3s = grid.signed_axis(2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let k = WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]);
                    if !grid.is_retained(&k) {
                        self.data[(i1, i2, i3)] = Complex64::ZERO;
                    }
                }
            }
        }
    }

    /// New field with coefficients `f(k, c(k))`.
    pub fn map_modes(&self, mut f: impl FnMut(WaveIndex, Complex64) -> Complex64) -> Self {
        let grid = self.grid;
        let [n1, n2, n3] = grid.n();
        let k1s = grid.signed_axis(0);
        let k2s = grid.signed_axis(1);
        let k3s = grid.signed_axis(2);
        let mut out = Array3::zeros((n1, n2, n3));
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let k = WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]);
                    out[(i1, i2, i3)] = f(k, self.data[(i1, i2, i3)]);
                }
            }
        }
        Self::from_parts(grid, out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(factor);
        out
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for c in self.data.iter_mut() {
            *c *= factor;
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<()> {
        check_same_grid(self.grid, other.grid)?;
        for (c, o) in self.data.iter_mut().zip(other.data.iter()) {
            *c += factor * o;
        }
        Ok(())
    }
}

fn check_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            a.n(),
            b.n()
        )))
    }
}

/// Analyze real samples into spectral coefficients.
pub fn forward_transform(grid: Grid, samples: &Array3<f64>) -> Result<SpectralField> {
    let [n1, n2, n3] = grid.n();
    if samples.dim() != (n1, n2, n3) {
        return Err(Error::GridMismatch(format!(
            "samples shaped {:?}, grid is {:?}",
            samples.dim(),
            grid.n()
        )));
    }
    let mut data = samples.mapv(|v| Complex64::new(v, 0.0));
    transform_all_axes(&mut data, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    // The collocation grid starts at z = -1, one half-period before the
    // origin of the vertical basis; undo that shift mode by mode.
    for ((_, _, i3), c) in data.indexed_iter_mut() {
        let sign = if i3 % 2 == 1 { -scale } else { scale };
        *c *= sign;
    }
    Ok(SpectralField::from_parts(grid, data))
}

/// Synthesize real samples from spectral coefficients.
///
/// The coefficients must satisfy conjugate symmetry (within a small relative
/// tolerance); otherwise the represented field is not real and the call fails.
pub fn inverse_transform(field: &SpectralField) -> Result<Array3<f64>> {
    let deviation = field.symmetry_deviation();
    let tolerance = SYMMETRY_RTOL * (1.0 + field.max_abs());
    if deviation > tolerance {
        return Err(Error::SymmetryViolation {
            deviation,
            tolerance,
        });
    }
    let mut data = field.data.clone();
    for ((_, _, i3), c) in data.indexed_iter_mut() {
        if i3 % 2 == 1 {
            *c = -*c;
        }
    }
    transform_all_axes(&mut data, FftDirection::Inverse);
    Ok(data.mapv(|c| c.re))
}

/// Real L2 pairing `Re sum_k a(k) conj(b(k))`, which equals the normalized
/// physical-space inner product for real fields.
pub fn l2_inner(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    check_same_grid(a.grid, b.grid)?;
    Ok(a.data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum())
}

/// Velocity-like field with `N` spectral components on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorField<const N: usize> {
    components: [SpectralField; N],
}

impl<const N: usize> VectorField<N> {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: std::array::from_fn(|_| SpectralField::zeros(grid)),
        }
    }

    pub fn new(components: [SpectralField; N]) -> Result<Self> {
        let grid = components[0].grid();
        for c in &components[1..] {
            check_same_grid(grid, c.grid())?;
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut SpectralField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[SpectralField; N] {
        &self.components
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            components: std::array::from_fn(|i| f(&self.components[i])),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm_sq()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn symmetry_deviation(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, c| m.max(c.symmetry_deviation()))
    }

    pub fn parity_deviation(&self, parity: Parity) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let d = c.parity_deviation(parity);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn parity_projection(&self, parity: Parity) -> Self {
        self.map(|c| c.parity_projection(parity))
    }

    pub fn dealiased(&self) -> Self {
        self.map(|c| c.dealiased())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|c| c.scaled(factor))
    }

    pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<()> {
        for (c, o) in self.components.iter_mut().zip(other.components.iter()) {
            c.add_scaled(factor, o)?;
        }
        Ok(())
    }

    /// Synthesize every component to physical samples.
    pub fn to_samples(&self) -> Result<Vec<Array3<f64>>> {
        self.components.iter().map(inverse_transform).collect()
    }
}

/// Real L2 pairing of two vector fields.
pub fn l2_inner_vec<const N: usize>(a: &VectorField<N>, b: &VectorField<N>) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..N {
        acc += l2_inner(a.component(i), b.component(i))?;
    }
    Ok(acc)
}
