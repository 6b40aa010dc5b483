//! Trajectory-level diagnostics: norms in time, difference studies between
//! paired runs, Gronwall envelope fitting, the dual-norm time-derivative
//! bound and the energy-estimate shape constant.
//!
//! Time integrals over snapshots use the trapezoid rule on the recorded
//! times, so paired comparisons must be recorded on identical schedules.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Branch, Forcing};
use crate::error::{Error, Result};
use crate::operators::{apply_operator_vec, weighted_sum_vec, NormSpec, OperatorSpec};
use crate::timestep::Snapshot;

/// Dual Sobolev order used for the time-derivative diagnostic: the norm is
/// taken in `H^{-ORDER}` with this fixed order.
pub const TIME_DERIVATIVE_DUAL_ORDER: f64 = 2.6;

/// How a spatial norm is aggregated over the recorded times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeAggregation {
    /// `( int ||.||^2 dt )^{1/2}` by the trapezoid rule.
    SquaredIntegral,
    /// `max_t ||.||` over snapshots.
    Sup,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::TrajectoryMismatch("no snapshots".into()));
    }
    for pair in times.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::TrajectoryMismatch(format!(
                "snapshot times not increasing: {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

/// Aggregate a spatial norm over a recorded trajectory.
pub fn trajectory_norm<const N: usize>(
    snapshots: &[Snapshot<N>],
    space: &NormSpec,
    aggregation: TimeAggregation,
) -> Result<f64> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    check_times(&times)?;
    let grid = snapshots[0].field.grid();
    for s in snapshots {
        if s.field.grid() != grid {
            return Err(Error::GridMismatch("snapshots on different grids".into()));
        }
    }
    let table = space.weight_table(grid);
    let norms_sq: Vec<f64> = snapshots
        .iter()
        .map(|s| weighted_sum_vec(&table, &s.field))
        .collect();
    match aggregation {
        TimeAggregation::Sup => Ok(norms_sq.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt()),
        TimeAggregation::SquaredIntegral => {
            if snapshots.len() < 2 {
                return Err(Error::TrajectoryMismatch(
                    "time integral needs at least two snapshots".into(),
                ));
            }
            Ok(trapezoid(&times, &norms_sq).sqrt())
        }
    }
}

/// Pointwise-in-time record of the gap between two paired trajectories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DifferenceStudy {
    pub times: Vec<f64>,
    /// `||delta(t)||_{L2}^2`
    pub delta_l2_sq: Vec<f64>,
    /// dissipation integrand `sum_k a(k) |delta(k)|^2`
    pub dissipation: Vec<f64>,
    /// trapezoid cumulation of the dissipation integrand
    pub dissipation_cum: Vec<f64>,
}

impl DifferenceStudy {
    pub fn sup_delta(&self) -> f64 {
        self.delta_l2_sq.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt()
    }
}

/// Compare two trajectories recorded on the same schedule and grid.
pub fn difference_study<const N: usize>(
    a: &[Snapshot<N>],
    b: &[Snapshot<N>],
    op: &OperatorSpec,
) -> Result<DifferenceStudy> {
    if a.len() != b.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "{} vs {} snapshots",
            a.len(),
            b.len()
        )));
    }
    let times: Vec<f64> = a.iter().map(|s| s.time).collect();
    check_times(&times)?;
    let grid = a[0].field.grid();
    let symbols = op.symbol_table(grid);
    let mut delta_l2_sq = Vec::with_capacity(a.len());
    let mut dissipation = Vec::with_capacity(a.len());
    for (sa, sb) in a.iter().zip(b.iter()) {
        if (sa.time - sb.time).abs() > 1e-12 * sa.time.abs().max(1.0) {
            return Err(Error::TrajectoryMismatch(format!(
                "snapshot times differ: {} vs {}",
                sa.time, sb.time
            )));
        }
        if sa.field.grid() != grid || sb.field.grid() != grid {
            return Err(Error::GridMismatch("snapshots on different grids".into()));
        }
        let mut delta = sa.field.clone();
        delta.add_scaled(-1.0, &sb.field)?;
        delta_l2_sq.push(delta.l2_norm_sq());
        dissipation.push(weighted_sum_vec(&symbols, &delta));
    }
    let dissipation_cum = cumulative_trapezoid(&times, &dissipation);
    Ok(DifferenceStudy {
        times,
        delta_l2_sq,
        dissipation,
        dissipation_cum,
    })
}

/// `( int ||a(t) - b(t)||^2 dt )^{1/2}` in the given spatial norm, over two
/// trajectories recorded on the same schedule and grid.
pub fn difference_trajectory_norm<const N: usize>(
    a: &[Snapshot<N>],
    b: &[Snapshot<N>],
    space: &NormSpec,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "{} vs {} snapshots",
            a.len(),
            b.len()
        )));
    }
    let times: Vec<f64> = a.iter().map(|s| s.time).collect();
    check_times(&times)?;
    if a.len() < 2 {
        return Err(Error::TrajectoryMismatch(
            "time integral needs at least two snapshots".into(),
        ));
    }
    let grid = a[0].field.grid();
    let table = space.weight_table(grid);
    let mut norms_sq = Vec::with_capacity(a.len());
    for (sa, sb) in a.iter().zip(b.iter()) {
        if (sa.time - sb.time).abs() > 1e-12 * sa.time.abs().max(1.0) {
            return Err(Error::TrajectoryMismatch(format!(
                "snapshot times differ: {} vs {}",
                sa.time, sb.time
            )));
        }
        if sa.field.grid() != grid || sb.field.grid() != grid {
            return Err(Error::GridMismatch("snapshots on different grids".into()));
        }
        let mut delta = sa.field.clone();
        delta.add_scaled(-1.0, &sb.field)?;
        norms_sq.push(weighted_sum_vec(&table, &delta));
    }
    Ok(trapezoid(&times, &norms_sq).sqrt())
}

/// Result of fitting the stability envelope
/// `||delta(t)||^2 <= ||delta(0)||^2 exp(C int_0^t (||u||^2_{D(A^{1/2})} + 1))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GronwallFit {
    /// Smallest feasible envelope constant (up to bisection resolution).
    pub c_hat: f64,
    /// Whether the envelope holds at every snapshot with `c_hat`.
    pub feasible: bool,
    /// `G(t_i) = int_0^{t_i} (||u||^2_{D(A^{1/2})} + 1) dt` along the base run.
    pub growth: Vec<f64>,
}

/// Outcome of [`gronwall_fit`]: either a fitted envelope, or, when the
/// initial gap vanishes, a determinism check on the whole difference.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum GronwallOutcome {
    Fit(GronwallFit),
    DeterminismCheck { max_delta: f64, pass: bool },
}

/// Fit the Gronwall envelope constant by bisection on the monotone
/// feasibility predicate, using the base trajectory for the growth integral.
pub fn gronwall_fit<const N: usize>(
    study: &DifferenceStudy,
    base: &[Snapshot<N>],
    op: &OperatorSpec,
) -> Result<GronwallOutcome> {
    if base.len() != study.times.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "base has {} snapshots, study has {}",
            base.len(),
            study.times.len()
        )));
    }
    for (s, t) in base.iter().zip(study.times.iter()) {
        if (s.time - t).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(Error::TrajectoryMismatch(
                "base snapshots not on the study schedule".into(),
            ));
        }
    }
    let grid = base[0].field.grid();
    let spec = NormSpec::GraphPower {
        operator: *op,
        s: 0.5,
    };
    let table = spec.weight_table(grid);
    let integrand: Vec<f64> = base
        .iter()
        .map(|s| 1.0 + weighted_sum_vec(&table, &s.field))
        .collect();
    let growth = cumulative_trapezoid(&study.times, &integrand);

    let scale: f64 = base
        .iter()
        .map(|s| s.field.l2_norm_sq())
        .fold(0.0, f64::max)
        .sqrt();
    let delta0 = study.delta_l2_sq[0].sqrt();
    if delta0 <= 1e-14 * (1.0 + scale) {
        let max_delta = study.sup_delta();
        return Ok(GronwallOutcome::DeterminismCheck {
            max_delta,
            pass: max_delta <= 1e-10 * (1.0 + scale),
        });
    }

    // log form: ln d_i <= ln d_0 + C G_i (+ slack for rounding)
    let log_d0 = study.delta_l2_sq[0].ln();
    let feasible = |c: f64| -> bool {
        study
            .delta_l2_sq
            .iter()
            .zip(growth.iter())
            .all(|(&d, &g)| d == 0.0 || d.ln() <= log_d0 + c * g + 1e-12)
    };
    let c_hat = if feasible(0.0) {
        0.0
    } else {
        let mut hi = 1.0f64;
        let mut guard = 0;
        while !feasible(hi) {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Ok(GronwallOutcome::Fit(GronwallFit {
                    c_hat: f64::INFINITY,
                    feasible: false,
                    growth,
                }));
            }
        }
        let mut lo = hi / 2.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let ok = feasible(c_hat);
    Ok(GronwallOutcome::Fit(GronwallFit {
        c_hat,
        feasible: ok,
        growth,
    }))
}

/// `|| d/dt u ||_{L2(0,T; H^{-order})}` reconstructed from the right-hand
/// side `-A u - F(u) + f` at every snapshot.
pub fn time_derivative_norm<const N: usize, B: Branch<N>>(
    snapshots: &[Snapshot<N>],
    op: &OperatorSpec,
    forcing: &Forcing<N>,
    nonlinearity: bool,
    dual_order: f64,
) -> Result<f64> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    check_times(&times)?;
    if snapshots.len() < 2 {
        return Err(Error::TrajectoryMismatch(
            "time integral needs at least two snapshots".into(),
        ));
    }
    let grid = snapshots[0].field.grid();
    let table = NormSpec::Sobolev { s: -dual_order }.weight_table(grid);
    let mut norms_sq = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let mut rhs = apply_operator_vec(op, &s.field, 1.0)?.scaled(-1.0);
        if nonlinearity {
            rhs.add_scaled(-1.0, &B::nonlinearity(&s.field)?)?;
        }
        if let Some((shape, amp)) = forcing.terms(s.time) {
            rhs.add_scaled(amp, shape)?;
        }
        norms_sq.push(weighted_sum_vec(&table, &rhs));
    }
    Ok(trapezoid(&times, &norms_sq).sqrt())
}

/// Shape constant of the a-priori energy bound
/// `max( sup_t ||u||^2, 2 int_0^T sum_k a |u|^2 ) <= C (||u(0)||^2 + L_f)`
/// where `L_f` is the dual-norm forcing load; for unforced dissipative runs
/// the constant is exactly 1 (the supremum is attained at `t = 0`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub sup_ratio: f64,
    pub dissipation_ratio: f64,
    pub constant: f64,
}

/// Dual-norm forcing load `int_0^T g(t)^2 ||F||^2_{D(A^{-1/2})} dt`.
pub fn forcing_dual_load<const N: usize>(
    forcing: &Forcing<N>,
    op: &OperatorSpec,
    t_final: f64,
) -> f64 {
    match forcing {
        Forcing::None => 0.0,
        Forcing::Applied { field, envelope } => {
            let spec = NormSpec::GraphPower {
                operator: *op,
                s: -0.5,
            };
            spec.norm_sq_vec(field) * envelope.squared_integral(t_final)
        }
    }
}

pub fn energy_bound_constant<const N: usize>(
    snapshots: &[Snapshot<N>],
    op: &OperatorSpec,
    forcing_load: f64,
) -> Result<EnergyBoundReport> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    check_times(&times)?;
    let grid = snapshots[0].field.grid();
    let symbols = op.symbol_table(grid);
    let kinetic: Vec<f64> = snapshots.iter().map(|s| s.field.l2_norm_sq()).collect();
    let dissipation: Vec<f64> = snapshots
        .iter()
        .map(|s| weighted_sum_vec(&symbols, &s.field))
        .collect();
    let load = kinetic[0] + forcing_load;
    if load <= 0.0 {
        return Err(Error::InvalidParameter(
            "energy bound needs nonzero data or forcing".into(),
        ));
    }
    let sup = kinetic.iter().fold(0.0f64, |m, v| m.max(*v));
    let dissipation_integral = if snapshots.len() >= 2 {
        2.0 * trapezoid(&times, &dissipation)
    } else {
        0.0
    };
    let sup_ratio = sup / load;
    let dissipation_ratio = dissipation_integral / load;
    Ok(EnergyBoundReport {
        sup_ratio,
        dissipation_ratio,
        constant: sup_ratio.max(dissipation_ratio),
    })
}
