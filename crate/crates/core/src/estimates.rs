//! Randomized verification of the nonlinear estimates that drive the
//! existence and stability arguments.
//!
//! Each check draws an ensemble of admissible random fields and evaluates a
//! claimed inequality on every member:
//!
//! * three-component bound: `||F(u)||_{D(A^{-1/2})} <= C ||u||^2_{D(A^{1/4})}`;
//! * two-component bound: `||F(v)||_{D(A^{-1/2})} <= C ||v||_{D(A^{s1})} ||v||_{D(A^{s2})}`
//!   with `(s1, s2) = (13/32, 3/32)` for the full symbol at `l = 8/5` and
//!   `(3/8, 1/8)` for the horizontal symbol at `l = 2`;
//! * graph-norm interpolation: `||g||^2_{D(A^{1/4})} <= ||g|| ||g||_{D(A^{1/2})}`
//!   and `||g||_{D(A^{1/8})} <= ||g||^{3/4} ||g||^{1/4}_{D(A^{1/2})}`;
//! * the pointwise symbol inequality `|kappa_H|^2 |kappa_3| <= (|kappa_H|^4 + kappa_3^2) / 2`,
//!   which lets the horizontal `l = 2` symbol absorb one vertical derivative.
//!
//! No sharp constants are asserted for the bilinear bounds; the reports record
//! both sides and the ratio per member so boundedness can be judged over the
//! ensemble. Ratios of quadratic terms are invariant under `u -> 2 u`, and
//! because the whole pipeline is linear or bilinear, doubling scales every
//! intermediate by an exact power of two; the reports record the worst
//! observed deviation of the rescaled ratio as a self-test of that invariance.
//!
//! Sampling is reproducible: member `m` of an ensemble draws from stream `m`
//! of a counter-based generator seeded once per ensemble, so reports do not
//! depend on thread count or evaluation order.

use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{nonlinearity_ns, nonlinearity_pe};
use crate::error::{Error, Result};
use crate::field::{Parity, VectorField};
use crate::grid::Grid;
use crate::operators::{
    hydrostatic_project, leray_project, weighted_sum_vec, NormSpec, OperatorSpec, OperatorVariant,
};

/// Tolerance on the `l` exponent when matching an operator to an estimate
/// regime.
const REGIME_LTOL: f64 = 1e-12;

/// Violation slack: an inequality `lhs <= rhs` counts as satisfied when
/// `rhs - lhs >= -RELATIVE_SLACK * rhs`.
const RELATIVE_SLACK: f64 = 1e-12;

const HISTOGRAM_BINS: usize = 10;

/// Constraint class a random ensemble is projected onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldConstraint {
    /// Mean-free, divergence-free three-component fields.
    #[serde(rename = "solenoidal-3d")]
    Solenoidal3d,
    /// Mean-free, even, column-balanced two-component fields.
    #[serde(rename = "hydrostatic-2d")]
    Hydrostatic2d,
}

/// Shape of a random ensemble: member count, base seed, the spectral decay
/// exponent of the sampled fields (`|c(k)| ~ (1 + |kappa|^2)^{-p/2}`) and the
/// constraint class the draws are projected onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    pub spectrum_profile: f64,
    pub constraint: FieldConstraint,
}

impl EnsembleSpec {
    pub fn new(
        count: usize,
        seed: u64,
        spectrum_profile: f64,
        constraint: FieldConstraint,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("ensemble count must be > 0".into()));
        }
        if !(spectrum_profile.is_finite() && spectrum_profile >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectrum profile {spectrum_profile} must be finite and >= 0"
            )));
        }
        Ok(Self {
            count,
            seed,
            spectrum_profile,
            constraint,
        })
    }

    fn require(&self, constraint: FieldConstraint, what: &str) -> Result<()> {
        if self.constraint == constraint {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{what} needs a {constraint:?} ensemble, got {:?}",
                self.constraint
            )))
        }
    }
}

fn member_rng(spec: &EnsembleSpec, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(member as u64);
    rng
}

/// Fill `N` components with decaying complex Gaussians on retained
/// conjugate-canonical modes; the zero mode stays empty so the field is
/// mean-free, and conjugate mirrors keep it real.
fn draw_components<const N: usize>(
    grid: Grid,
    spec: &EnsembleSpec,
    member: usize,
) -> VectorField<N> {
    let mut rng = member_rng(spec, member);
    let mut u = VectorField::<N>::zeros(grid);
    for i in 0..N {
        for (_, k) in grid.indexed_modes() {
            if !k.is_conjugate_canonical() || !grid.is_retained(&k) {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let scale = (1.0 + k.kappa_sq()).powf(-0.5 * spec.spectrum_profile);
            u.component_mut(i)
                .set_mode_pair(k, Complex64::new(re, im) * scale)
                .expect("canonical retained modes are stored");
        }
    }
    u
}

fn normalized<const N: usize>(u: VectorField<N>) -> Result<VectorField<N>> {
    let norm = u.l2_norm();
    if norm <= 0.0 || norm.is_nan() {
        return Err(Error::InvalidParameter(
            "random field vanished after projection; enlarge the grid".into(),
        ));
    }
    Ok(u.scaled(1.0 / norm))
}

/// Unit-norm, mean-free, divergence-free random three-component field.
pub fn random_solenoidal(grid: Grid, spec: &EnsembleSpec, member: usize) -> Result<VectorField<3>> {
    spec.require(FieldConstraint::Solenoidal3d, "random_solenoidal")?;
    normalized(leray_project(&draw_components::<3>(grid, spec, member)))
}

/// Unit-norm, mean-free, even, column-balanced random two-component field.
pub fn random_hydrostatic(grid: Grid, spec: &EnsembleSpec, member: usize) -> Result<VectorField<2>> {
    spec.require(FieldConstraint::Hydrostatic2d, "random_hydrostatic")?;
    let drawn = draw_components::<2>(grid, spec, member);
    normalized(hydrostatic_project(&drawn.parity_projection(Parity::Even))?)
}

fn require_ns_regime(op: &OperatorSpec) -> Result<()> {
    let ok = match op.variant() {
        OperatorVariant::FullHyper => (op.l() - 1.25).abs() <= REGIME_LTOL && op.eps() > 0.0,
        OperatorVariant::HorizontalHyper => {
            (op.l() - 2.0).abs() <= REGIME_LTOL && op.eps() > 0.0 && op.nu() > 0.0
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "operator {:?} with nu = {}, eps = {}, l = {} is outside the three-component \
             estimate regimes (full symbol: l = 5/4, eps > 0; horizontal symbol: l = 2, \
             nu > 0, eps > 0)",
            op.variant(),
            op.nu(),
            op.eps(),
            op.l()
        )))
    }
}

fn require_pe_regime(op: &OperatorSpec) -> Result<()> {
    let ok = match op.variant() {
        OperatorVariant::FullHyper => (op.l() - 1.6).abs() <= REGIME_LTOL && op.eps() > 0.0,
        OperatorVariant::HorizontalHyper => (op.l() - 2.0).abs() <= REGIME_LTOL && op.eps() > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "operator {:?} with nu = {}, eps = {}, l = {} is outside the two-component \
             estimate regimes (full symbol: l = 8/5, eps > 0; horizontal symbol: l = 2, \
             eps > 0)",
            op.variant(),
            op.nu(),
            op.eps(),
            op.l()
        )))
    }
}

/// Both sides of an inequality for one ensemble member.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub member: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; absent when the right-hand side vanishes (zero field).
    pub ratio: Option<f64>,
}

/// Per-ensemble summary of an inequality ratio `lhs / rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    /// One row per member, in member order.
    pub rows: Vec<RatioRow>,
    pub max: f64,
    pub mean: f64,
    /// Members whose right-hand side vanished (excluded from the statistics).
    pub skipped: usize,
    /// Counts over [`HISTOGRAM_BINS`] equal bins spanning `[0, max]`.
    pub histogram: Vec<usize>,
    /// Worst relative change of any member's ratio under `u -> 2 u`.
    pub rescale_max_rel_dev: f64,
}

impl RatioReport {
    fn from_members(members: Vec<(RatioRow, f64)>) -> Self {
        let mut rows = Vec::with_capacity(members.len());
        let mut skipped = 0usize;
        let mut rescale: f64 = 0.0;
        for (row, dev) in members {
            if row.ratio.is_none() {
                skipped += 1;
            }
            rescale = rescale.max(dev);
            rows.push(row);
        }
        let samples: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        let max = samples.iter().fold(0.0f64, |m, v| m.max(*v));
        let mean = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<f64>() / samples.len() as f64
        };
        let mut histogram = vec![0usize; HISTOGRAM_BINS];
        for &r in &samples {
            let bin = if max > 0.0 {
                (((r / max) * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            histogram[bin] += 1;
        }
        Self {
            rows,
            max,
            mean,
            skipped,
            histogram,
            rescale_max_rel_dev: rescale,
        }
    }
}

fn member_row(member: usize, lhs: f64, rhs: f64, lhs2: f64, rhs2: f64) -> (RatioRow, f64) {
    if rhs <= 0.0 || rhs2 <= 0.0 {
        return (
            RatioRow {
                member,
                lhs,
                rhs,
                ratio: None,
            },
            0.0,
        );
    }
    let r = lhs / rhs;
    let r2 = lhs2 / rhs2;
    let dev = if r > 0.0 {
        (r2 - r).abs() / r
    } else {
        (r2 - r).abs()
    };
    (
        RatioRow {
            member,
            lhs,
            rhs,
            ratio: Some(r),
        },
        dev,
    )
}

fn ns_terms_with(
    dual: &Array3<f64>,
    quarter: &Array3<f64>,
    u: &VectorField<3>,
) -> Result<(f64, f64)> {
    let f = nonlinearity_ns(u)?;
    Ok((
        weighted_sum_vec(dual, &f).sqrt(),
        weighted_sum_vec(quarter, u),
    ))
}

fn pe_terms_with(
    dual: &Array3<f64>,
    high: &Array3<f64>,
    low: &Array3<f64>,
    v: &VectorField<2>,
) -> Result<(f64, f64)> {
    let f = nonlinearity_pe(v)?;
    Ok((
        weighted_sum_vec(dual, &f).sqrt(),
        (weighted_sum_vec(high, v) * weighted_sum_vec(low, v)).sqrt(),
    ))
}

fn ns_tables(grid: Grid, op: &OperatorSpec) -> (Array3<f64>, Array3<f64>) {
    let dual = NormSpec::GraphPower {
        operator: *op,
        s: -0.5,
    }
    .weight_table(grid);
    let quarter = NormSpec::GraphPower {
        operator: *op,
        s: 0.25,
    }
    .weight_table(grid);
    (dual, quarter)
}

fn pe_tables(grid: Grid, op: &OperatorSpec) -> (Array3<f64>, Array3<f64>, Array3<f64>) {
    let (s1, s2) = match op.variant() {
        OperatorVariant::FullHyper => (13.0 / 32.0, 3.0 / 32.0),
        OperatorVariant::HorizontalHyper => (3.0 / 8.0, 1.0 / 8.0),
    };
    let dual = NormSpec::GraphPower {
        operator: *op,
        s: -0.5,
    }
    .weight_table(grid);
    let high = NormSpec::GraphPower {
        operator: *op,
        s: s1,
    }
    .weight_table(grid);
    let low = NormSpec::GraphPower {
        operator: *op,
        s: s2,
    }
    .weight_table(grid);
    (dual, high, low)
}

/// Both sides of the three-component bound for a single field:
/// `(||F(u)||_{D(A^{-1/2})}, ||u||^2_{D(A^{1/4})})`.
pub fn ns_ratio_terms(u: &VectorField<3>, op: &OperatorSpec) -> Result<(f64, f64)> {
    require_ns_regime(op)?;
    let (dual, quarter) = ns_tables(u.grid(), op);
    ns_terms_with(&dual, &quarter, u)
}

/// Both sides of the two-component bound for a single field:
/// `(||F(v)||_{D(A^{-1/2})}, ||v||_{D(A^{s1})} ||v||_{D(A^{s2})})`.
pub fn pe_ratio_terms(v: &VectorField<2>, op: &OperatorSpec) -> Result<(f64, f64)> {
    require_pe_regime(op)?;
    let (dual, high, low) = pe_tables(v.grid(), op);
    pe_terms_with(&dual, &high, &low, v)
}

/// Sample `||F(u)||_{D(A^{-1/2})} / ||u||^2_{D(A^{1/4})}` over a random
/// solenoidal ensemble.
pub fn verify_ns_estimate(
    grid: Grid,
    op: &OperatorSpec,
    ens: &EnsembleSpec,
) -> Result<RatioReport> {
    require_ns_regime(op)?;
    ens.require(FieldConstraint::Solenoidal3d, "verify_ns_estimate")?;
    let (dual, quarter) = ns_tables(grid, op);
    let members: Vec<(RatioRow, f64)> = (0..ens.count)
        .into_par_iter()
        .map(|m| -> Result<(RatioRow, f64)> {
            let u = random_solenoidal(grid, ens, m)?;
            let (lhs, rhs) = ns_terms_with(&dual, &quarter, &u)?;
            let (lhs2, rhs2) = ns_terms_with(&dual, &quarter, &u.scaled(2.0))?;
            Ok(member_row(m, lhs, rhs, lhs2, rhs2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from_members(members))
}

/// Sample `||F(v)||_{D(A^{-1/2})} / (||v||_{D(A^{s1})} ||v||_{D(A^{s2})})`
/// over a random hydrostatic ensemble, with `(s1, s2)` fixed by the regime.
pub fn verify_pe_estimate(
    grid: Grid,
    op: &OperatorSpec,
    ens: &EnsembleSpec,
) -> Result<RatioReport> {
    require_pe_regime(op)?;
    ens.require(FieldConstraint::Hydrostatic2d, "verify_pe_estimate")?;
    let (dual, high, low) = pe_tables(grid, op);
    let members: Vec<(RatioRow, f64)> = (0..ens.count)
        .into_par_iter()
        .map(|m| -> Result<(RatioRow, f64)> {
            let v = random_hydrostatic(grid, ens, m)?;
            let (lhs, rhs) = pe_terms_with(&dual, &high, &low, &v)?;
            let (lhs2, rhs2) = pe_terms_with(&dual, &high, &low, &v.scaled(2.0))?;
            Ok(member_row(m, lhs, rhs, lhs2, rhs2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from_members(members))
}

/// Worst margins of the two graph-norm interpolation inequalities over an
/// ensemble; margins are relative, `(rhs - lhs) / rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub count: usize,
    /// Worst margin of `||g||^2_{D(A^{1/4})} <= ||g|| ||g||_{D(A^{1/2})}`.
    pub min_margin_quarter: f64,
    /// Worst margin of `||g||_{D(A^{1/8})} <= ||g||^{3/4} ||g||^{1/4}_{D(A^{1/2})}`.
    pub min_margin_eighth: f64,
}

/// Relative margins `(rhs - lhs) / rhs` of the two interpolation inequalities
/// for a single field, without the pass/fail policy.
pub fn interpolation_margins<const N: usize>(g: &VectorField<N>, op: &OperatorSpec) -> (f64, f64) {
    let grid = g.grid();
    let quarter = NormSpec::GraphPower {
        operator: *op,
        s: 0.25,
    }
    .weight_table(grid);
    let eighth = NormSpec::GraphPower {
        operator: *op,
        s: 0.125,
    }
    .weight_table(grid);
    let half = NormSpec::GraphPower {
        operator: *op,
        s: 0.5,
    }
    .weight_table(grid);
    field_margins(g, &quarter, &eighth, &half, 1.0)
}

fn field_margins<const N: usize>(
    g: &VectorField<N>,
    quarter: &Array3<f64>,
    eighth: &Array3<f64>,
    half: &Array3<f64>,
    boost: f64,
) -> (f64, f64) {
    let l2 = g.l2_norm();
    let half_norm = weighted_sum_vec(half, g).sqrt();
    let lhs_q = boost * weighted_sum_vec(quarter, g);
    let rhs_q = l2 * half_norm;
    let lhs_e = weighted_sum_vec(eighth, g).sqrt();
    let rhs_e = l2.powf(0.75) * half_norm.powf(0.25);
    let margin = |lhs: f64, rhs: f64| if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
    (margin(lhs_q, rhs_q), margin(lhs_e, rhs_e))
}

/// Check both interpolation inequalities on every member of an ensemble of
/// the declared constraint class; any violation is an error, because the
/// inequalities are identities of the norm weights and can only fail when
/// the weights themselves are wrong.
pub fn verify_interpolation(
    grid: Grid,
    op: &OperatorSpec,
    ens: &EnsembleSpec,
) -> Result<InterpolationReport> {
    verify_interpolation_distorted(grid, op, ens, 1.0)
}

/// [`verify_interpolation`] with a fault-injection knob: `distortion`
/// multiplies the left-hand `D(A^{1/4})` weight, so values above 1 emulate a
/// corrupted norm table and must trip the violation error.
pub fn verify_interpolation_distorted(
    grid: Grid,
    op: &OperatorSpec,
    ens: &EnsembleSpec,
    distortion: f64,
) -> Result<InterpolationReport> {
    if !(distortion.is_finite() && distortion > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weight distortion {distortion} must be finite and > 0"
        )));
    }
    let quarter = NormSpec::GraphPower {
        operator: *op,
        s: 0.25,
    }
    .weight_table(grid);
    let eighth = NormSpec::GraphPower {
        operator: *op,
        s: 0.125,
    }
    .weight_table(grid);
    let half = NormSpec::GraphPower {
        operator: *op,
        s: 0.5,
    }
    .weight_table(grid);
    let margins: Vec<(f64, f64)> = (0..ens.count)
        .into_par_iter()
        .map(|m| -> Result<(f64, f64)> {
            match ens.constraint {
                FieldConstraint::Solenoidal3d => {
                    let g = random_solenoidal(grid, ens, m)?;
                    Ok(field_margins(&g, &quarter, &eighth, &half, distortion))
                }
                FieldConstraint::Hydrostatic2d => {
                    let g = random_hydrostatic(grid, ens, m)?;
                    Ok(field_margins(&g, &quarter, &eighth, &half, distortion))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut min_q = f64::INFINITY;
    let mut min_e = f64::INFINITY;
    for (mq, me) in &margins {
        min_q = min_q.min(*mq);
        min_e = min_e.min(*me);
    }
    if min_q < -RELATIVE_SLACK {
        return Err(Error::EstimateViolation {
            inequality: "quarter-power graph interpolation",
            margin: min_q,
        });
    }
    if min_e < -RELATIVE_SLACK {
        return Err(Error::EstimateViolation {
            inequality: "eighth-power graph interpolation",
            margin: min_e,
        });
    }
    Ok(InterpolationReport {
        count: ens.count,
        min_margin_quarter: min_q,
        min_margin_eighth: min_e,
    })
}

/// Exhaustive check of `|kappa_H|^2 |kappa_3| <= (|kappa_H|^4 + kappa_3^2) / 2`
/// over every stored mode of a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedDerivativeReport {
    pub modes_checked: usize,
    /// Smallest value of `rhs - lhs` over all modes.
    pub min_slack: f64,
    pub violations: usize,
}

/// Sweep the mixed-derivative symbol inequality over all stored modes.
///
/// The bound is what lets the horizontal symbol at `l = 2` control one
/// vertical derivative of a horizontal Laplacian, so the operator argument
/// must be a `HorizontalHyper` spec with `l = 2`; the check itself is an
/// exact per-mode comparison independent of the coefficients.
pub fn verify_mixed_derivative(op: &OperatorSpec, grid: Grid) -> Result<MixedDerivativeReport> {
    if op.variant() != OperatorVariant::HorizontalHyper || (op.l() - 2.0).abs() > REGIME_LTOL {
        return Err(Error::InvalidParameter(format!(
            "mixed-derivative check applies to the horizontal symbol at l = 2, got {:?} with l = {}",
            op.variant(),
            op.l()
        )));
    }
    let mut modes_checked = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut violations = 0usize;
    for (_, k) in grid.indexed_modes() {
        let kh2 = k.kappa_h_sq();
        let k3 = k.kappa3().abs();
        let lhs = kh2 * k3;
        let rhs = 0.5 * (kh2 * kh2 + k3 * k3);
        let slack = rhs - lhs;
        modes_checked += 1;
        min_slack = min_slack.min(slack);
        if slack < -RELATIVE_SLACK * rhs.max(1.0) {
            violations += 1;
        }
    }
    Ok(MixedDerivativeReport {
        modes_checked,
        min_slack,
        violations,
    })
}

/// Weight table of a graph norm, exposed for report generation.
pub fn graph_weight_table(grid: Grid, op: &OperatorSpec, s: f64) -> Array3<f64> {
    NormSpec::GraphPower { operator: *op, s }.weight_table(grid)
}
