//! Time integration with an exact integrating factor for the linear part,
//! the per-step energy ledger, and the a-priori existence window.
//!
//! One step of size `dt` from `(u, t)` performs Heun's method on the
//! integrating-factor form of the equation: with `E = e^{-a(k) dt}` and
//! `G(u, t) = -F(u) + f(t)`,
//!
//! ```text
//! u*      = E (u + dt G(u, t))
//! u^{n+1} = E u + (dt/2) (E G(u, t) + G(u*, t + dt))
//! ```
//!
//! The linear flow is reproduced through the exponential itself, so runs
//! with the nonlinearity disabled and no forcing decay exactly (up to
//! rounding) at every mode, for every operator variant.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Branch, Forcing};
use crate::error::{Error, Result};
use crate::field::{l2_inner_vec, VectorField};
use crate::grid::Grid;
use crate::operators::{weighted_sum, OperatorSpec};

/// Step-size selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TimeStep {
    /// Fixed step size.
    Fixed { dt: f64 },
    /// Advective CFL condition: `dt = min(dt_max, number * dx_min / max|u|)`,
    /// re-evaluated from the physical-space maximum every step.
    Cfl { number: f64, dt_max: f64 },
}

impl TimeStep {
    fn validate(&self) -> Result<()> {
        match self {
            TimeStep::Fixed { dt } => {
                if !(dt.is_finite() && *dt > 0.0) {
                    return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
                }
            }
            TimeStep::Cfl { number, dt_max } => {
                if !(number.is_finite() && *number > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "cfl number = {number} must be > 0"
                    )));
                }
                if !(dt_max.is_finite() && *dt_max > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "dt_max = {dt_max} must be > 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything the stepper needs besides forcing and data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub operator: OperatorSpec,
    pub time_step: TimeStep,
    pub t_final: f64,
    /// Field snapshots are kept every this many steps (the initial and final
    /// states are always kept). The scalar ledger is recorded every step.
    pub record_every: usize,
    /// Whether the advective term enters the right-hand side.
    pub nonlinearity: bool,
    /// Unforced runs abort when kinetic energy exceeds this multiple of its
    /// initial value.
    pub blow_up_factor: f64,
}

impl SolverSettings {
    pub fn new(operator: OperatorSpec, dt: f64, t_final: f64) -> Self {
        Self {
            operator,
            time_step: TimeStep::Fixed { dt },
            t_final,
            record_every: 1,
            nonlinearity: true,
            blow_up_factor: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.time_step.validate()?;
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final = {} must be > 0",
                self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "record_every must be at least 1".into(),
            ));
        }
        if !(self.blow_up_factor.is_finite() && self.blow_up_factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "blow_up_factor = {} must exceed 1",
                self.blow_up_factor
            )));
        }
        Ok(())
    }
}

/// Scalar energy accounting sampled every step.
///
/// The residual of row `i` is
/// `kinetic(t_i) - kinetic(0) + 2 D(t_i) - 2 W(t_i)` where `D` and `W` are
/// trapezoid cumulations of the dissipation integrand `sum_k a(k) |u(k)|^2`
/// and the forcing power `<f(t), u(t)>`; it vanishes for the exact flow.
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub work: Vec<f64>,
    pub dissipation_cum: Vec<f64>,
    pub work_cum: Vec<f64>,
    pub residual: Vec<f64>,
}

impl EnergyLedger {
    pub fn push(&mut self, time: f64, kinetic: f64, dissipation: f64, work: f64) {
        let (d_cum, w_cum) = match self.times.last() {
            None => (0.0, 0.0),
            Some(&t_prev) => {
                let h = time - t_prev;
                let i = self.times.len() - 1;
                (
                    self.dissipation_cum[i] + 0.5 * h * (self.dissipation[i] + dissipation),
                    self.work_cum[i] + 0.5 * h * (self.work[i] + work),
                )
            }
        };
        let kin0 = *self.kinetic.first().unwrap_or(&kinetic);
        self.times.push(time);
        self.kinetic.push(kinetic);
        self.dissipation.push(dissipation);
        self.work.push(work);
        self.dissipation_cum.push(d_cum);
        self.work_cum.push(w_cum);
        self.residual.push(kinetic - kin0 + 2.0 * d_cum - 2.0 * w_cum);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Rows at indices `0, every, 2 every, ...` plus the final row, matching
    /// the snapshot cadence. Cumulative columns keep the full-resolution
    /// values accumulated over every step.
    pub fn thinned(&self, every: usize) -> EnergyLedger {
        let every = every.max(1);
        let mut out = EnergyLedger::default();
        if self.is_empty() {
            return out;
        }
        let last = self.times.len() - 1;
        for i in 0..self.times.len() {
            if i % every == 0 || i == last {
                out.times.push(self.times[i]);
                out.kinetic.push(self.kinetic[i]);
                out.dissipation.push(self.dissipation[i]);
                out.work.push(self.work[i]);
                out.dissipation_cum.push(self.dissipation_cum[i]);
                out.work_cum.push(self.work_cum[i]);
                out.residual.push(self.residual[i]);
            }
        }
        out
    }
}

/// Stored state at one recorded time.
#[derive(Clone, Debug)]
pub struct Snapshot<const N: usize> {
    pub time: f64,
    pub field: VectorField<N>,
}

/// Trajectory snapshots plus the per-step energy ledger.
#[derive(Clone, Debug)]
pub struct RunOutput<const N: usize> {
    pub snapshots: Vec<Snapshot<N>>,
    pub ledger: EnergyLedger,
}

impl<const N: usize> RunOutput<N> {
    pub fn final_state(&self) -> &Snapshot<N> {
        self.snapshots.last().expect("runs record at least t = 0")
    }
}

fn exp_table(op: &OperatorSpec, grid: Grid, dt: f64) -> Array3<f64> {
    op.symbol_table(grid).mapv(|a| (-a * dt).exp())
}

fn apply_table<const N: usize>(u: &mut VectorField<N>, table: &Array3<f64>) {
    for i in 0..N {
        for (c, w) in u
            .component_mut(i)
            .data_mut()
            .iter_mut()
            .zip(table.iter())
        {
            *c *= *w;
        }
    }
}

fn rhs<const N: usize, B: Branch<N>>(
    u: &VectorField<N>,
    t: f64,
    forcing: &Forcing<N>,
    nonlinearity: bool,
) -> Result<VectorField<N>> {
    let mut g = if nonlinearity {
        let mut n = B::nonlinearity(u)?;
        n = n.scaled(-1.0);
        n
    } else {
        VectorField::zeros(u.grid())
    };
    if let Some((shape, amp)) = forcing.terms(t) {
        g.add_scaled(amp, shape)?;
    }
    Ok(g)
}

fn heun_step<const N: usize, B: Branch<N>>(
    u: &VectorField<N>,
    t: f64,
    dt: f64,
    table: &Array3<f64>,
    forcing: &Forcing<N>,
    nonlinearity: bool,
) -> Result<VectorField<N>> {
    let g1 = rhs::<N, B>(u, t, forcing, nonlinearity)?;
    let mut predictor = u.clone();
    predictor.add_scaled(dt, &g1)?;
    apply_table(&mut predictor, table);
    let g2 = rhs::<N, B>(&predictor, t + dt, forcing, nonlinearity)?;
    let mut next = u.clone();
    apply_table(&mut next, table);
    let mut g1e = g1;
    apply_table(&mut g1e, table);
    next.add_scaled(0.5 * dt, &g1e)?;
    next.add_scaled(0.5 * dt, &g2)?;
    Ok(next)
}

/// One integrating-factor Heun step; the multiplier table is rebuilt per
/// call, so prefer [`run`] for whole trajectories.
pub fn step<const N: usize, B: Branch<N>>(
    op: &OperatorSpec,
    forcing: &Forcing<N>,
    u: &VectorField<N>,
    t: f64,
    dt: f64,
    nonlinearity: bool,
) -> Result<VectorField<N>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    let table = exp_table(op, u.grid(), dt);
    heun_step::<N, B>(u, t, dt, &table, forcing, nonlinearity)
}

fn max_physical_speed<const N: usize>(u: &VectorField<N>) -> Result<f64> {
    let samples = u.to_samples()?;
    let mut m = 0.0f64;
    for s in &samples {
        for v in s.iter() {
            m = m.max(v.abs());
        }
    }
    Ok(m)
}

/// Integrate from `t = 0` to `t_final`.
///
/// The initial field is dealiased, then checked for admissibility; forcing
/// shapes are checked the same way. Unforced runs abort when kinetic energy
/// exceeds `blow_up_factor` times its initial value, and any non-finite
/// value aborts immediately.
pub fn run<const N: usize, B: Branch<N>>(
    settings: &SolverSettings,
    forcing: &Forcing<N>,
    initial: &VectorField<N>,
) -> Result<RunOutput<N>> {
    settings.validate()?;
    let grid = initial.grid();
    if let Forcing::Applied { field, .. } = forcing {
        if field.grid() != grid {
            return Err(Error::GridMismatch(
                "forcing shape and initial data live on different grids".into(),
            ));
        }
        B::validate(&field.dealiased())?;
    }
    let mut u = initial.dealiased();
    B::validate(&u)?;

    let symbols = settings.operator.symbol_table(grid);
    let dissipation_of = |u: &VectorField<N>| -> f64 {
        u.components()
            .iter()
            .map(|c| weighted_sum(&symbols, c))
            .sum()
    };
    let work_of = |u: &VectorField<N>, t: f64| -> Result<f64> {
        match forcing.terms(t) {
            None => Ok(0.0),
            Some((shape, amp)) => Ok(amp * l2_inner_vec(shape, u)?),
        }
    };

    let mut ledger = EnergyLedger::default();
    let kin0 = u.l2_norm_sq();
    ledger.push(0.0, kin0, dissipation_of(&u), work_of(&u, 0.0)?);
    let mut snapshots = vec![Snapshot {
        time: 0.0,
        field: u.clone(),
    }];

    let dx_min = {
        let [n1, n2, n3] = grid.n();
        (1.0 / n1 as f64).min(1.0 / n2 as f64).min(2.0 / n3 as f64)
    };

    // Fixed mode: plan the step count up front so snapshot times are exact
    // multiples of dt and agree bitwise across runs with equal settings.
    let fixed_plan = match settings.time_step {
        TimeStep::Fixed { dt } => {
            let ratio = settings.t_final / dt;
            let rounded = ratio.round();
            if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
                Some((rounded as usize, dt, false))
            } else {
                Some((ratio.ceil() as usize, dt, true))
            }
        }
        TimeStep::Cfl { .. } => None,
    };

    let mut table_cache: Option<(u64, Array3<f64>)> = None;
    let mut table_for = |dt: f64, op: &OperatorSpec| -> Array3<f64> {
        let bits = dt.to_bits();
        if let Some((cached_bits, table)) = &table_cache {
            if *cached_bits == bits {
                return table.clone();
            }
        }
        let table = exp_table(op, grid, dt);
        table_cache = Some((bits, table.clone()));
        table
    };

    let mut t = 0.0;
    let mut step_index = 0usize;
    loop {
        let (dt_step, t_next) = match (fixed_plan, settings.time_step) {
            (Some((n_steps, dt, clipped)), _) => {
                if step_index >= n_steps {
                    break;
                }
                let last = step_index + 1 == n_steps;
                if last && clipped {
                    (settings.t_final - t, settings.t_final)
                } else {
                    (dt, (step_index + 1) as f64 * dt)
                }
            }
            (None, TimeStep::Cfl { number, dt_max }) => {
                if t >= settings.t_final - 1e-12 * settings.t_final {
                    break;
                }
                let speed = max_physical_speed(&u)?;
                let dt = if speed > 0.0 {
                    dt_max.min(number * dx_min / speed)
                } else {
                    dt_max
                };
                let dt = dt.min(settings.t_final - t);
                (dt, t + dt)
            }
            (None, TimeStep::Fixed { .. }) => unreachable!(),
        };
        if dt_step <= 0.0 || dt_step.is_nan() {
            break;
        }

        let table = table_for(dt_step, &settings.operator);
        u = heun_step::<N, B>(&u, t, dt_step, &table, forcing, settings.nonlinearity)?;
        step_index += 1;
        t = t_next;

        let kinetic = u.l2_norm_sq();
        if !kinetic.is_finite() {
            return Err(Error::NonFinite { time: t });
        }
        if forcing.is_none() && kin0 > 0.0 && kinetic > settings.blow_up_factor * kin0 {
            return Err(Error::BlowUp {
                time: t,
                kinetic,
                factor: settings.blow_up_factor,
            });
        }
        ledger.push(t, kinetic, dissipation_of(&u), work_of(&u, t)?);

        let is_last = match fixed_plan {
            Some((n_steps, _, _)) => step_index == n_steps,
            None => t >= settings.t_final - 1e-12 * settings.t_final,
        };
        if step_index.is_multiple_of(settings.record_every) || is_last {
            snapshots.push(Snapshot {
                time: t,
                field: u.clone(),
            });
        }
        if is_last {
            break;
        }
    }

    Ok(RunOutput { snapshots, ledger })
}

/// Ingredients and result of the a-priori local existence window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExistenceWindowReport {
    /// `B = min{ r/(4C), (r/(4C))^2, (1/(4C))^2 }`.
    pub smallness_cap: f64,
    /// Smallest symbol value over retained nonzero modes.
    pub min_symbol: f64,
    /// `max_k (a(k) + 1) / (2 a(k)) e^{-2 a(k) T}` over retained nonzero modes.
    pub damping_constant: f64,
    /// `C1 = C max{1, 2 * damping_constant * min_symbol}`.
    pub effective_constant: f64,
    /// Guaranteed window `min{ B / (4 C1 (d + f)), 1 / (2 min_symbol) }`.
    pub window: f64,
    pub data_norm_sq: f64,
    pub forcing_norm_sq: f64,
}

/// Evaluate the a-priori existence window for data of squared norm
/// `data_norm_sq`, forcing of squared norm `forcing_norm_sq`, smallness
/// radius `r` and estimate constant `c`, over modes retained on `grid`.
///
/// Requires `r <= 1/(4c)` and a symbol bounded away from zero on retained
/// nonzero modes.
pub fn existence_window(
    op: &OperatorSpec,
    grid: Grid,
    horizon: f64,
    r: f64,
    c: f64,
    data_norm_sq: f64,
    forcing_norm_sq: f64,
) -> Result<ExistenceWindowReport> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon = {horizon} must be > 0"
        )));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be > 0")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!("c = {c} must be > 0")));
    }
    if r > 1.0 / (4.0 * c) {
        return Err(Error::InvalidParameter(format!(
            "r = {r} exceeds 1/(4c) = {}",
            1.0 / (4.0 * c)
        )));
    }
    for (name, v) in [
        ("data_norm_sq", data_norm_sq),
        ("forcing_norm_sq", forcing_norm_sq),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be >= 0")));
        }
    }

    let mut min_symbol = f64::INFINITY;
    let mut damping: f64 = 0.0;
    for (_, k) in grid.indexed_modes() {
        if k.is_zero() || !grid.is_retained(&k) {
            continue;
        }
        let a = op.symbol(&k);
        min_symbol = min_symbol.min(a);
        if a > 0.0 {
            damping = damping.max((a + 1.0) / (2.0 * a) * (-2.0 * a * horizon).exp());
        }
    }
    if min_symbol <= 0.0 || min_symbol.is_nan() {
        return Err(Error::InvalidParameter(
            "operator symbol vanishes on a retained nonzero mode; no window exists".into(),
        ));
    }

    let quarter = r / (4.0 * c);
    let cap = quarter.min(quarter * quarter).min(1.0 / (16.0 * c * c));
    let effective = c * f64::max(1.0, 2.0 * damping * min_symbol);
    let load = data_norm_sq + forcing_norm_sq;
    let data_window = if load > 0.0 {
        cap / (4.0 * effective * load)
    } else {
        f64::INFINITY
    };
    let window = data_window.min(1.0 / (2.0 * min_symbol));

    Ok(ExistenceWindowReport {
        smallness_cap: cap,
        min_symbol,
        damping_constant: damping,
        effective_constant: effective,
        window,
        data_norm_sq,
        forcing_norm_sq,
    })
}
