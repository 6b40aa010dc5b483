//! Equation-specific structure: admissible states, forcing, the diagnostic
//! vertical velocity, advective nonlinearities and pressure recovery.
//!
//! Two families share one stepper:
//!
//! * the three-component branch evolves a divergence-free velocity `u`;
//! * the two-component branch evolves a horizontal velocity `v(x, y, z)`
//!   that is even in `z` and whose vertical average is horizontally
//!   divergence-free; the vertical velocity `w(v)` is reconstructed from the
//!   incompressibility column integral and vanishes at `z = +/-1`.
//!
//! Both nonlinearities are assembled in divergence form from dealiased
//! physical-space products, so they are energy-neutral against the
//! constraint projection to rounding accuracy.

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{forward_transform, inverse_transform, Parity, SpectralField, VectorField};
use crate::grid::{Grid, WaveIndex};
use crate::operators::{divergence, divergence_h, hydrostatic_project, leray_project};

/// Relative tolerance on `div u` for three-component states.
const DIVERGENCE_RTOL: f64 = 1e-12;

/// Relative tolerance on odd content for two-component states.
const PARITY_RTOL: f64 = 1e-10;

/// Relative tolerance on the vertical average of the horizontal divergence.
const COLUMN_BALANCE_RTOL: f64 = 1e-10;

/// Time-dependent scalar amplitude multiplying a fixed forcing shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmplitudeEnvelope {
    Constant { value: f64 },
    Cosine { mean: f64, amplitude: f64, omega: f64 },
}

impl AmplitudeEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            AmplitudeEnvelope::Constant { value } => *value,
            AmplitudeEnvelope::Cosine {
                mean,
                amplitude,
                omega,
            } => mean + amplitude * (omega * t).cos(),
        }
    }

    /// Closed form of `int_0^T g(t)^2 dt`.
    pub fn squared_integral(&self, t_final: f64) -> f64 {
        match self {
            AmplitudeEnvelope::Constant { value } => value * value * t_final,
            AmplitudeEnvelope::Cosine {
                mean,
                amplitude,
                omega,
            } => {
                let (m, a, w) = (*mean, *amplitude, *omega);
                if w == 0.0 {
                    return (m + a) * (m + a) * t_final;
                }
                m * m * t_final
                    + 2.0 * m * a * (w * t_final).sin() / w
                    + a * a * (0.5 * t_final + (2.0 * w * t_final).sin() / (4.0 * w))
            }
        }
    }
}

/// Forcing term `g(t) * F` with a fixed admissible shape `F`.
#[derive(Clone, Debug)]
pub enum Forcing<const N: usize> {
    None,
    Applied {
        field: VectorField<N>,
        envelope: AmplitudeEnvelope,
    },
}

impl<const N: usize> Forcing<N> {
    pub fn none() -> Self {
        Forcing::None
    }

    pub fn steady(field: VectorField<N>) -> Self {
        Forcing::Applied {
            field,
            envelope: AmplitudeEnvelope::Constant { value: 1.0 },
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }

    /// Shape and scalar amplitude at time `t`, if any.
    pub fn terms(&self, t: f64) -> Option<(&VectorField<N>, f64)> {
        match self {
            Forcing::None => None,
            Forcing::Applied { field, envelope } => Some((field, envelope.eval(t))),
        }
    }
}

/// Validated divergence-free three-component state.
#[derive(Clone, Debug)]
pub struct NsState {
    u: VectorField<3>,
    time: f64,
}

impl NsState {
    pub fn new(u: VectorField<3>, time: f64) -> Result<Self> {
        NavierStokes::validate(&u)?;
        Ok(Self { u, time })
    }

    pub fn u(&self) -> &VectorField<3> {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_field(self) -> VectorField<3> {
        self.u
    }
}

/// Validated even, column-balanced two-component state.
#[derive(Clone, Debug)]
pub struct PeState {
    v: VectorField<2>,
    time: f64,
}

impl PeState {
    pub fn new(v: VectorField<2>, time: f64) -> Result<Self> {
        PrimitiveEquations::validate(&v)?;
        Ok(Self { v, time })
    }

    pub fn v(&self) -> &VectorField<2> {
        &self.v
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_field(self) -> VectorField<2> {
        self.v
    }
}

/// L2 norm of the vertical average (the `k3 = 0` slab) of a scalar field.
fn vertical_average_norm(f: &SpectralField) -> f64 {
    let [n1, n2, _] = f.grid().n();
    let mut acc = 0.0;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            acc += f.data()[(i1, i2, 0)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Reconstruct the vertical velocity from a two-component state.
///
/// With `d = div_H v`, the coefficients are
///
/// ```text
/// w(kH, k3) = -d(kH, k3) / (i pi k3)                       for k3 != 0,
/// w(kH, 0)  = sum_{k3 != 0} d(kH, k3) (-1)^{k3} / (i pi k3),
/// ```
///
/// which realizes `w(x, y, z) = -int_{-1}^{z} d` with `w = 0` on both
/// horizontal boundaries. The vertical average of `d` must vanish (else no
/// such `w` exists); for even `v` the result is odd in `z`.
pub fn vertical_velocity(v: &VectorField<2>) -> Result<SpectralField> {
    let d = divergence_h(v);
    let deviation = vertical_average_norm(&d);
    let tolerance = COLUMN_BALANCE_RTOL * (1.0 + v.l2_norm());
    if deviation > tolerance {
        return Err(Error::ColumnBalanceViolation {
            deviation,
            tolerance,
        });
    }
    let grid = v.grid();
    let [n1, n2, n3] = grid.n();
    let k3s = grid.signed_axis(2);
    let mut w = SpectralField::zeros(grid);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let mut boundary = Complex64::ZERO;
            for i3 in 1..n3 {
                let k3 = k3s[i3];
                debug_assert_ne!(k3, 0);
                let dk = d.data()[(i1, i2, i3)];
                // -1/(i pi k3) = i/(pi k3)
                let inv = Complex64::new(0.0, 1.0 / (PI * k3 as f64));
                w.data_mut()[(i1, i2, i3)] = dk * inv;
                let sign = if k3.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                boundary -= dk * inv * sign;
            }
            w.data_mut()[(i1, i2, 0)] = boundary;
        }
    }
    Ok(w)
}

/// Assemble `sum_j i kappa_j P_j` for per-pair product coefficients `P_j`.
fn divergence_form(grid: Grid, products: [&SpectralField; 3]) -> SpectralField {
    let [n1, n2, n3] = grid.n();
    let k1s = grid.signed_axis(0);
    let k2s = grid.signed_axis(1);
    let k3s = grid.signed_axis(2);
    let mut out = Array3::zeros((n1, n2, n3));
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let k = WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]);
                let kap = k.kappa();
                let mut acc = Complex64::ZERO;
                for (j, p) in products.iter().enumerate() {
                    acc += Complex64::new(0.0, kap[j]) * p.data()[(i1, i2, i3)];
                }
                out[(i1, i2, i3)] = acc;
            }
        }
    }
    SpectralField::from_parts(grid, out)
}

fn product_transform(grid: Grid, a: &Array3<f64>, b: &Array3<f64>) -> Result<SpectralField> {
    let prod = a * b;
    let mut hat = forward_transform(grid, &prod)?;
    hat.dealias_in_place();
    Ok(hat)
}

/// Advective term of the three-component branch:
/// `P_sigma( sum_j i kappa_j (u_j u_i)^ )` with dealiased products.
pub fn nonlinearity_ns(u: &VectorField<3>) -> Result<VectorField<3>> {
    let raw = advective_divergence_ns(u)?;
    Ok(leray_project(&raw))
}

/// Unprojected divergence-form advective term of the three-component branch.
fn advective_divergence_ns(u: &VectorField<3>) -> Result<VectorField<3>> {
    let grid = u.grid();
    let phys: Vec<Array3<f64>> = u.to_samples()?;
    // symmetric product table, upper triangle
    let mut products: Vec<Option<SpectralField>> = vec![None; 9];
    for i in 0..3 {
        for j in i..3 {
            let p = product_transform(grid, &phys[i], &phys[j])?;
            products[3 * i + j] = Some(p);
        }
    }
    let pick = |i: usize, j: usize| -> &SpectralField {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        products[3 * a + b].as_ref().expect("filled above")
    };
    let components: [SpectralField; 3] = std::array::from_fn(|i| {
        divergence_form(grid, [pick(0, i), pick(1, i), pick(2, i)])
    });
    VectorField::new(components)
}

/// Advective term of the two-component branch:
/// `P_bar( sum_j i kappa_j (U_j v_i)^ )` where `U = (v1, v2, w(v))` and the
/// products are dealiased; the result is even in `z`.
pub fn nonlinearity_pe(v: &VectorField<2>) -> Result<VectorField<2>> {
    let raw = advective_divergence_pe(v)?;
    let even = raw.parity_projection(Parity::Even);
    hydrostatic_project(&even)
}

/// Unprojected divergence-form advective term of the two-component branch.
fn advective_divergence_pe(v: &VectorField<2>) -> Result<VectorField<2>> {
    let grid = v.grid();
    let w = vertical_velocity(v)?;
    let v1 = inverse_transform(v.component(0))?;
    let v2 = inverse_transform(v.component(1))?;
    let wp = inverse_transform(&w)?;
    let advecting = [&v1, &v2, &wp];
    let advected = [&v1, &v2];
    let mut components: Vec<SpectralField> = Vec::with_capacity(2);
    for vi in advected {
        let mut prods: Vec<SpectralField> = Vec::with_capacity(3);
        for uj in advecting {
            prods.push(product_transform(grid, uj, vi)?);
        }
        components.push(divergence_form(grid, [&prods[0], &prods[1], &prods[2]]));
    }
    let c1 = components.pop().expect("two components");
    let c0 = components.pop().expect("two components");
    VectorField::new([c0, c1])
}

/// Pressure of the three-component branch: the scalar whose gradient removes
/// the compressible part of the advective term,
/// `p(k) = i kappa . N(k) / |kappa|^2` with zero mean.
pub fn recover_pressure_ns(u: &VectorField<3>) -> Result<SpectralField> {
    let n = advective_divergence_ns(u)?;
    let grid = u.grid();
    let mut p = SpectralField::zeros(grid);
    let [n1, n2, n3] = grid.n();
    let k1s = grid.signed_axis(0);
    let k2s = grid.signed_axis(1);
    let k3s = grid.signed_axis(2);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let k = WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]);
                if k.is_zero() {
                    continue;
                }
                let kap = k.kappa();
                let mut dot = Complex64::ZERO;
                for (j, comp) in n.components().iter().enumerate() {
                    dot += comp.data()[(i1, i2, i3)] * kap[j];
                }
                p.data_mut()[(i1, i2, i3)] = Complex64::new(0.0, 1.0) * dot / k.kappa_sq();
            }
        }
    }
    Ok(p)
}

/// Surface pressure of the two-component branch: a `z`-independent scalar
/// computed from the vertical average of the advective term,
/// `p_s(kH) = i kappa_H . Nbar(kH) / |kappa_H|^2` with zero mean.
pub fn recover_pressure_pe(v: &VectorField<2>) -> Result<SpectralField> {
    let n = advective_divergence_pe(v)?;
    let grid = v.grid();
    let mut p = SpectralField::zeros(grid);
    let [n1, n2, _] = grid.n();
    let k1s = grid.signed_axis(0);
    let k2s = grid.signed_axis(1);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let k = WaveIndex::new(k1s[i1], k2s[i2], 0);
            if k.k1 == 0 && k.k2 == 0 {
                continue;
            }
            let kap = k.kappa();
            let mut dot = Complex64::ZERO;
            for (j, comp) in n.components().iter().enumerate().take(2) {
                dot += comp.data()[(i1, i2, 0)] * kap[j];
            }
            p.data_mut()[(i1, i2, 0)] = Complex64::new(0.0, 1.0) * dot / k.kappa_h_sq();
        }
    }
    Ok(p)
}

/// One equation family, as seen by the shared time stepper.
pub trait Branch<const N: usize> {
    /// Short name used in manifests and reports.
    const NAME: &'static str;

    /// Advective term, already constraint-projected.
    fn nonlinearity(u: &VectorField<N>) -> Result<VectorField<N>>;

    /// Constraint projection used to admissibilize data.
    fn project(u: &VectorField<N>) -> Result<VectorField<N>>;

    /// Admissibility check for states and forcing shapes.
    fn validate(u: &VectorField<N>) -> Result<()>;
}

/// Three-component incompressible branch.
pub struct NavierStokes;

impl Branch<3> for NavierStokes {
    const NAME: &'static str = "ns";

    fn nonlinearity(u: &VectorField<3>) -> Result<VectorField<3>> {
        nonlinearity_ns(u)
    }

    fn project(u: &VectorField<3>) -> Result<VectorField<3>> {
        Ok(leray_project(u))
    }

    fn validate(u: &VectorField<3>) -> Result<()> {
        let deviation = divergence(u).l2_norm();
        let tolerance = DIVERGENCE_RTOL * (1.0 + u.l2_norm());
        if deviation > tolerance {
            return Err(Error::DivergenceViolation {
                deviation,
                tolerance,
            });
        }
        Ok(())
    }
}

/// Two-component hydrostatic branch.
pub struct PrimitiveEquations;

impl Branch<2> for PrimitiveEquations {
    const NAME: &'static str = "pe";

    fn nonlinearity(v: &VectorField<2>) -> Result<VectorField<2>> {
        nonlinearity_pe(v)
    }

    fn project(v: &VectorField<2>) -> Result<VectorField<2>> {
        hydrostatic_project(&v.parity_projection(Parity::Even))
    }

    fn validate(v: &VectorField<2>) -> Result<()> {
        let deviation = v.parity_deviation(Parity::Even);
        let tolerance = PARITY_RTOL * (1.0 + v.l2_norm());
        if deviation > tolerance {
            return Err(Error::ParityViolation {
                deviation,
                tolerance,
            });
        }
        let bar = vertical_average_norm(&divergence_h(v));
        let bar_tol = COLUMN_BALANCE_RTOL * (1.0 + v.l2_norm());
        if bar > bar_tol {
            return Err(Error::ColumnBalanceViolation {
                deviation: bar,
                tolerance: bar_tol,
            });
        }
        Ok(())
    }
}
