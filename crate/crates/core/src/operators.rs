//! The dissipative operator family, its fractional powers and graph norms,
//! and the two constraint projections.
//!
//! An operator is the Fourier multiplier
//!
//! ```text
//! full-hyper:        a(k) = nu |kappa|^2 + eps |kappa|^{2 l}
//! horizontal-hyper:  a(k) = nu |kappa|^2 + eps |kappa_H|^{2 l}
//! ```
//!
//! acting mode by mode. Fractional powers act through `a(k)^p`. Norms are
//! weighted coefficient sums; the graph norm of order `s` uses the weight
//! `(1 + a_1(k))^{2s}` where `a_1` is the symbol with every nonzero
//! coefficient replaced by 1 (so the weight's shape does not drift with the
//! sizes of `nu` and `eps`, and vanishing terms contribute nothing).

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField, VectorField};
use crate::grid::{Grid, WaveIndex};

/// Relative tolerance below which a coefficient counts as zero when a
/// negative operator power meets a vanishing symbol.
const INVERTIBILITY_RTOL: f64 = 1e-12;

/// Relative tolerance on odd-parity content for the hydrostatic projection.
const HYDROSTATIC_PARITY_RTOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorVariant {
    /// `nu |kappa|^2 + eps |kappa|^{2l}`
    FullHyper,
    /// `nu |kappa|^2 + eps |kappa_H|^{2l}`
    HorizontalHyper,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    variant: OperatorVariant,
    nu: f64,
    eps: f64,
    l: f64,
}

/// A member of the operator family; validated at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct OperatorSpec {
    variant: OperatorVariant,
    nu: f64,
    eps: f64,
    l: f64,
}

impl TryFrom<OperatorRepr> for OperatorSpec {
    type Error = Error;
    fn try_from(r: OperatorRepr) -> Result<Self> {
        OperatorSpec::new(r.variant, r.nu, r.eps, r.l)
    }
}

impl From<OperatorSpec> for OperatorRepr {
    fn from(o: OperatorSpec) -> Self {
        OperatorRepr {
            variant: o.variant,
            nu: o.nu,
            eps: o.eps,
            l: o.l,
        }
    }
}

impl OperatorSpec {
    pub fn new(variant: OperatorVariant, nu: f64, eps: f64, l: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::InvalidParameter(format!("nu = {nu} must be >= 0")));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
        }
        if !l.is_finite() || l <= 1.0 {
            return Err(Error::InvalidParameter(format!("l = {l} must exceed 1")));
        }
        if nu == 0.0 && eps == 0.0 {
            return Err(Error::InvalidParameter(
                "nu and eps cannot both vanish".into(),
            ));
        }
        Ok(Self {
            variant,
            nu,
            eps,
            l,
        })
    }

    pub fn variant(&self) -> OperatorVariant {
        self.variant
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.variant, self.nu, eps, self.l)
    }

    /// Multiplier value at mode `k`.
    pub fn symbol(&self, k: &WaveIndex) -> f64 {
        let base = match self.variant {
            OperatorVariant::FullHyper => k.kappa_sq(),
            OperatorVariant::HorizontalHyper => k.kappa_h_sq(),
        };
        self.nu * k.kappa_sq() + self.eps * base.powf(self.l)
    }

    /// Symbol with unit coefficients; terms whose coefficient is zero in
    /// `self` are dropped. Used by graph-norm weights.
    pub fn unit_symbol(&self, k: &WaveIndex) -> f64 {
        let base = match self.variant {
            OperatorVariant::FullHyper => k.kappa_sq(),
            OperatorVariant::HorizontalHyper => k.kappa_h_sq(),
        };
        let mut a = 0.0;
        if self.nu > 0.0 {
            a += k.kappa_sq();
        }
        if self.eps > 0.0 {
            a += base.powf(self.l);
        }
        a
    }

    /// Table of symbol values in storage order.
    pub fn symbol_table(&self, grid: Grid) -> Array3<f64> {
        let [n1, n2, n3] = grid.n();
        let k1s = grid.signed_axis(0);
        let k2s = grid.signed_axis(1);
        let k3s = grid.signed_axis(2);
        Array3::from_shape_fn((n1, n2, n3), |(i1, i2, i3)| {
            self.symbol(&WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]))
        })
    }

    /// Smallest symbol value over retained nonzero modes.
    pub fn min_symbol_retained(&self, grid: Grid) -> f64 {
        let mut min = f64::INFINITY;
        for (_, k) in grid.indexed_modes() {
            if !k.is_zero() && grid.is_retained(&k) {
                min = min.min(self.symbol(&k));
            }
        }
        min
    }
}

/// Apply `A^power` as a Fourier multiplier.
///
/// `power = 0` is the identity. For `power > 0` modes with vanishing symbol
/// (the zero mode, always) are annihilated. For `power < 0` the operator is
/// undefined on such modes; the call fails if the field carries coefficients
/// there beyond a small relative tolerance, and otherwise maps them to zero.
pub fn apply_operator(op: &OperatorSpec, f: &SpectralField, power: f64) -> Result<SpectralField> {
    if !power.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "operator power {power} must be finite"
        )));
    }
    if power == 0.0 {
        return Ok(f.clone());
    }
    let tol = INVERTIBILITY_RTOL * (1.0 + f.max_abs());
    let mut blocked: f64 = 0.0;
    let out = f.map_modes(|k, c| {
        let a = op.symbol(&k);
        if a == 0.0 {
            if power < 0.0 {
                blocked = blocked.max(c.norm());
            }
            Complex64::ZERO
        } else {
            c * a.powf(power)
        }
    });
    if power < 0.0 && blocked > tol {
        return Err(Error::NotInvertible { magnitude: blocked });
    }
    Ok(out)
}

/// Componentwise [`apply_operator`].
pub fn apply_operator_vec<const N: usize>(
    op: &OperatorSpec,
    u: &VectorField<N>,
    power: f64,
) -> Result<VectorField<N>> {
    let mut out = u.clone();
    for i in 0..N {
        *out.component_mut(i) = apply_operator(op, u.component(i), power)?;
    }
    Ok(out)
}

/// Apply `(I + A_1)^s`, the shifted unit-coefficient operator whose L2 norm
/// realizes the graph norm of order `s`.
pub fn apply_graph_power(op: &OperatorSpec, f: &SpectralField, s: f64) -> SpectralField {
    f.map_modes(|k, c| c * (1.0 + op.unit_symbol(&k)).powf(s))
}

/// Norm specification: a per-mode weight applied to squared coefficients,
/// `||f||^2 = sum_k w(k) |c(k)|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormSpec {
    /// `w(k) = (1 + |kappa|^2)^s`
    Sobolev { s: f64 },
    /// `w(k) = (1 + a_1(k))^{2s}`, the domain norm of `A^s`
    GraphPower { operator: OperatorSpec, s: f64 },
    /// `w(k) = (1 + |kappa_3|^2)^r (1 + |kappa_H|^2)^s`
    Anisotropic { r: f64, s: f64 },
}

impl NormSpec {
    pub fn weight(&self, k: &WaveIndex) -> f64 {
        match self {
            NormSpec::Sobolev { s } => (1.0 + k.kappa_sq()).powf(*s),
            NormSpec::GraphPower { operator, s } => {
                (1.0 + operator.unit_symbol(k)).powf(2.0 * s)
            }
            NormSpec::Anisotropic { r, s } => {
                let k3 = k.kappa3();
                (1.0 + k3 * k3).powf(*r) * (1.0 + k.kappa_h_sq()).powf(*s)
            }
        }
    }

    pub fn weight_table(&self, grid: Grid) -> Array3<f64> {
        let [n1, n2, n3] = grid.n();
        let k1s = grid.signed_axis(0);
        let k2s = grid.signed_axis(1);
        let k3s = grid.signed_axis(2);
        Array3::from_shape_fn((n1, n2, n3), |(i1, i2, i3)| {
            self.weight(&WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]))
        })
    }

    pub fn norm_sq(&self, f: &SpectralField) -> f64 {
        let table = self.weight_table(f.grid());
        weighted_sum(&table, f)
    }

    pub fn norm(&self, f: &SpectralField) -> f64 {
        self.norm_sq(f).sqrt()
    }

    pub fn norm_sq_vec<const N: usize>(&self, u: &VectorField<N>) -> f64 {
        let table = self.weight_table(u.grid());
        u.components()
            .iter()
            .map(|c| weighted_sum(&table, c))
            .sum()
    }

    pub fn norm_vec<const N: usize>(&self, u: &VectorField<N>) -> f64 {
        self.norm_sq_vec(u).sqrt()
    }
}

pub(crate) fn weighted_sum(table: &Array3<f64>, f: &SpectralField) -> f64 {
    table
        .iter()
        .zip(f.data().iter())
        .map(|(w, c)| w * c.norm_sqr())
        .sum()
}

pub(crate) fn weighted_sum_vec<const N: usize>(table: &Array3<f64>, u: &VectorField<N>) -> f64 {
    u.components().iter().map(|c| weighted_sum(table, c)).sum()
}

/// Spectral divergence `i kappa . u` of a three-component field.
pub fn divergence(u: &VectorField<3>) -> SpectralField {
    let mut out = SpectralField::zeros(u.grid());
    for (axis, comp) in u.components().iter().enumerate() {
        let d = comp.map_modes(|k, c| Complex64::new(0.0, k.kappa()[axis]) * c);
        out.add_scaled(1.0, &d).expect("components share a grid");
    }
    out
}

/// Horizontal spectral divergence `i kappa_H . v` of a two-component field.
pub fn divergence_h(v: &VectorField<2>) -> SpectralField {
    let mut out = SpectralField::zeros(v.grid());
    for (axis, comp) in v.components().iter().enumerate() {
        let d = comp.map_modes(|k, c| Complex64::new(0.0, k.kappa()[axis]) * c);
        out.add_scaled(1.0, &d).expect("components share a grid");
    }
    out
}

/// Projection onto divergence-free three-component fields:
/// `u - kappa (kappa . u) / |kappa|^2` mode by mode; the zero mode passes
/// through unchanged.
pub fn leray_project(u: &VectorField<3>) -> VectorField<3> {
    let grid = u.grid();
    let mut out = u.clone();
    let k1s = grid.signed_axis(0);
    let k2s = grid.signed_axis(1);
    let k3s = grid.signed_axis(2);
    let [n1, n2, n3] = grid.n();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let k = WaveIndex::new(k1s[i1], k2s[i2], k3s[i3]);
                if k.is_zero() {
                    continue;
                }
                let kap = k.kappa();
                let ksq = k.kappa_sq();
                let dot = (0..3)
                    .map(|i| out.component(i).data()[(i1, i2, i3)] * kap[i])
                    .sum::<Complex64>();
                let scale = dot / ksq;
                for i in 0..3 {
                    out.component_mut(i).data_mut()[(i1, i2, i3)] -= kap[i] * scale;
                }
            }
        }
    }
    out
}

/// Projection onto admissible two-component horizontal velocities: the
/// vertical average (the `k3 = 0` slab) is made horizontally divergence-free;
/// the oscillating remainder passes through. The input must be even in the
/// vertical coordinate.
pub fn hydrostatic_project(v: &VectorField<2>) -> Result<VectorField<2>> {
    let deviation = v.parity_deviation(Parity::Even);
    let tolerance = HYDROSTATIC_PARITY_RTOL * (1.0 + v.l2_norm());
    if deviation > tolerance {
        return Err(Error::ParityViolation {
            deviation,
            tolerance,
        });
    }
    let grid = v.grid();
    let mut out = v.clone();
    let k1s = grid.signed_axis(0);
    let k2s = grid.signed_axis(1);
    let [n1, n2, _] = grid.n();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let k = WaveIndex::new(k1s[i1], k2s[i2], 0);
            if k.k1 == 0 && k.k2 == 0 {
                continue;
            }
            let kap = k.kappa();
            let ksq = k.kappa_h_sq();
            let dot = (0..2)
                .map(|i| out.component(i).data()[(i1, i2, 0)] * kap[i])
                .sum::<Complex64>();
            let scale = dot / ksq;
            for i in 0..2 {
                out.component_mut(i).data_mut()[(i1, i2, 0)] -= kap[i] * scale;
            }
        }
    }
    Ok(out)
}
