//! Conservative finite-difference discretization of the regularized
//! equation and its backward-Euler/Newton time integration.
//!
//! Face `j` sits between nodes `j` and `j + 1`. The face flux is
//!
//! `J_j = F_j (a0 D3_j + a1 D1_j + a2 W_j) + a3 A_j`
//!
//! with `D1_j = (h_{j+1} - h_j)/dx`, `D3_j = (L_{j+1} - L_j)/dx` where `L` is
//! the centered nodal second difference, `W_j = (w_{j+1} - w_j)/dx`, `F_j`
//! the face mobility and `A_j` the face value of `h` for the advection term.
//! The semi-discrete equation is `h_t = -(J_j - J_{j-1})/dx`.

pub mod banded;
pub mod face;

use serde::{Deserialize, Serialize};

pub use banded::{BandLu, CyclicBanded};
pub use face::{face_mobility, FaceMobility, FaceRule};

use crate::diagnostics::{self, DiagnosticsSeries};
use crate::error::{invalid, Error, Result};
use crate::mobility::MobilitySpec;
use crate::model::{FilmState, Forcing, Params, PeriodicGrid};

/// Face value of `h` used by the linear advection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    #[default]
    Centered,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeOptions {
    pub face_mobility_rule: FaceRule,
    pub advection: Advection,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_grow: f64,
    pub dt_shrink: f64,
    pub positivity_floor: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            face_mobility_rule: FaceRule::ArithmeticMean,
            advection: Advection::Centered,
            newton_tol: 1e-10,
            newton_max_iter: 12,
            dt_init: 1e-7,
            dt_min: 1e-13,
            dt_max: 1e-2,
            dt_grow: 1.2,
            dt_shrink: 0.5,
            positivity_floor: 0.0,
        }
    }
}

impl SchemeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(invalid(
                "dt_init",
                format!(
                    "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                    self.dt_min, self.dt_init, self.dt_max
                ),
            ));
        }
        if !self.dt_max.is_finite() {
            return Err(invalid("dt_max", "must be finite"));
        }
        if !(self.dt_shrink > 0.0 && self.dt_shrink < 1.0) {
            return Err(invalid(
                "dt_shrink",
                format!("must lie in (0, 1), got {}", self.dt_shrink),
            ));
        }
        if !(self.dt_grow > 1.0 && self.dt_grow.is_finite()) {
            return Err(invalid("dt_grow", format!("must exceed 1, got {}", self.dt_grow)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(invalid(
                "newton_tol",
                format!("must be positive, got {}", self.newton_tol),
            ));
        }
        if self.newton_max_iter == 0 {
            return Err(invalid("newton_max_iter", "must be at least 1"));
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor.is_finite()) {
            return Err(invalid(
                "positivity_floor",
                format!("must be nonnegative, got {}", self.positivity_floor),
            ));
        }
        Ok(())
    }
}

/// Why a backward-Euler step was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRejection {
    DtOutOfRange { dt: f64 },
    NewtonDiverged { iterations: usize, residual: f64 },
    NonFinite,
    Singular,
    Positivity { index: usize, value: f64 },
}

impl std::fmt::Display for StepRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepRejection::DtOutOfRange { dt } => write!(f, "dt = {dt:e} outside [dt_min, dt_max]"),
            StepRejection::NewtonDiverged { iterations, residual } => {
                write!(
                    f,
                    "Newton stalled after {iterations} iterations (residual {residual:e})"
                )
            }
            StepRejection::NonFinite => write!(f, "non-finite iterate"),
            StepRejection::Singular => write!(f, "singular Jacobian"),
            StepRejection::Positivity { index, value } => {
                write!(f, "sample {index} fell to {value:e}, below the positivity floor")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSuccess {
    pub state: FilmState,
    /// Residual evaluations, so a state already solving the system reports 1.
    pub newton_iterations: usize,
    pub residual: f64,
}

/// The discrete operator for one problem instance.
struct Operator<'a> {
    params: &'a Params,
    forcing: &'a Forcing,
    grid: &'a PeriodicGrid,
    rule: FaceRule,
    advection: Advection,
    spec: MobilitySpec,
}

impl<'a> Operator<'a> {
    fn new(params: &'a Params, forcing: &'a Forcing, grid: &'a PeriodicGrid, opts: &SchemeOptions) -> Self {
        Operator {
            params,
            forcing,
            grid,
            rule: opts.face_mobility_rule,
            advection: opts.advection,
            spec: MobilitySpec::new(params.delta, params.epsilon),
        }
    }

    fn check_len(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.grid.n() || self.forcing.w().len() != self.grid.n() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n(),
                got: if h.len() != self.grid.n() {
                    h.len()
                } else {
                    self.forcing.w().len()
                },
            });
        }
        Ok(())
    }

    /// Face value used by advection and its weights on (left, right).
    #[inline]
    fn advected(&self, left: f64, right: f64) -> (f64, f64, f64) {
        match self.advection {
            Advection::Centered => (0.5 * (left + right), 0.5, 0.5),
            Advection::Upwind if self.params.a3 >= 0.0 => (left, 1.0, 0.0),
            Advection::Upwind => (right, 0.0, 1.0),
        }
    }

    /// Face mobilities and the bracket `a0 D3 + a1 D1 + a2 W` at every face.
    fn faces(&self, h: &[f64]) -> (Vec<FaceMobility>, Vec<f64>) {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let p = self.params;
        let w = self.forcing.w();
        let at = |i: usize, o: isize| h[self.grid.wrap(i, o)];
        let mut mob = Vec::with_capacity(n);
        let mut bracket = Vec::with_capacity(n);
        for j in 0..n {
            let (hm, h0, h1, h2) = (at(j, -1), h[j], at(j, 1), at(j, 2));
            let d1 = (h1 - h0) / dx;
            // grouped so that reflecting h negates d3 exactly
            let d3 = ((h2 - hm) - 3.0 * (h1 - h0)) / (dx * dx * dx);
            let wf = (w[self.grid.wrap(j, 1)] - w[j]) / dx;
            bracket.push(p.a0 * d3 + p.a1 * d1 + p.a2 * wf);
            mob.push(face_mobility(self.rule, h0, h1, self.spec));
        }
        (mob, bracket)
    }

    fn flux(&self, h: &[f64]) -> Vec<f64> {
        let (mob, bracket) = self.faces(h);
        let a3 = self.params.a3;
        (0..h.len())
            .map(|j| {
                let (a, _, _) = self.advected(h[j], h[self.grid.wrap(j, 1)]);
                mob[j].value * bracket[j] + a3 * a
            })
            .collect()
    }

    fn time_derivative(&self, h: &[f64]) -> Vec<f64> {
        let j = self.flux(h);
        let dx = self.grid.dx();
        (0..h.len()).map(|i| -(j[i] - j[self.grid.wrap(i, -1)]) / dx).collect()
    }

    /// Backward-Euler residual `h - h_old + dt/dx (J_i - J_{i-1})`, and
    /// when `jac` is given, its exact Jacobian.
    fn residual(&self, h: &[f64], h_old: &[f64], dt: f64, jac: Option<&mut CyclicBanded>) -> Vec<f64> {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let p = self.params;
        let c = dt / dx;
        let (mob, bracket) = self.faces(h);
        let mut flux = Vec::with_capacity(n);
        let mut dflux = Vec::with_capacity(n);
        let e3 = p.a0 / (dx * dx * dx);
        let e1 = p.a1 / dx;
        for j in 0..n {
            let (a, wl, wr) = self.advected(h[j], h[self.grid.wrap(j, 1)]);
            let f = mob[j];
            let q = bracket[j];
            flux.push(f.value * q + p.a3 * a);
            // dJ_j / dh_{j-1}, dh_j, dh_{j+1}, dh_{j+2}
            dflux.push([
                -f.value * e3,
                f.value * (3.0 * e3 - e1) + q * f.d_left + p.a3 * wl,
                f.value * (-3.0 * e3 + e1) + q * f.d_right + p.a3 * wr,
                f.value * e3,
            ]);
        }
        let r = (0..n)
            .map(|i| h[i] - h_old[i] + c * (flux[i] - flux[self.grid.wrap(i, -1)]))
            .collect();
        if let Some(jac) = jac {
            jac.clear();
            for i in 0..n {
                jac.add(i, 0, 1.0);
                let right = &dflux[i];
                let left = &dflux[self.grid.wrap(i, -1)];
                for k in 0..4 {
                    jac.add(i, k as isize - 1, c * right[k]);
                    jac.add(i, k as isize - 2, -c * left[k]);
                }
            }
        }
        r
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Face fluxes `J_{i+1/2}` of `state`.
pub fn flux(
    state: &FilmState,
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<Vec<f64>> {
    let op = Operator::new(params, forcing, grid, opts);
    op.check_len(&state.h)?;
    Ok(op.flux(&state.h))
}

/// Semi-discrete right-hand side `h_t = -(J_{i+1/2} - J_{i-1/2})/dx`.
pub fn time_derivative(
    state: &FilmState,
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<Vec<f64>> {
    let op = Operator::new(params, forcing, grid, opts);
    op.check_len(&state.h)?;
    Ok(op.time_derivative(&state.h))
}

/// The Newton matrix of one backward-Euler step at `state`, for testing
/// and benchmarking.
pub fn step_jacobian(
    state: &FilmState,
    dt: f64,
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<CyclicBanded> {
    let op = Operator::new(params, forcing, grid, opts);
    op.check_len(&state.h)?;
    let mut jac = CyclicBanded::zeros(grid.n(), 2);
    op.residual(&state.h, &state.h, dt, Some(&mut jac));
    Ok(jac)
}

/// One backward-Euler step of size `dt`, solved by Newton's method.
///
/// Returns an error only for malformed input; numerical failure is a
/// [`StepRejection`].
pub fn step(
    state: &FilmState,
    dt: f64,
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<std::result::Result<StepSuccess, StepRejection>> {
    let op = Operator::new(params, forcing, grid, opts);
    op.check_len(&state.h)?;
    if !(dt >= opts.dt_min && dt <= opts.dt_max) {
        return Ok(Err(StepRejection::DtOutOfRange { dt }));
    }
    Ok(newton(&op, state, dt, opts))
}

fn newton(
    op: &Operator,
    state: &FilmState,
    dt: f64,
    opts: &SchemeOptions,
) -> std::result::Result<StepSuccess, StepRejection> {
    let n = op.grid.n();
    let h_old = &state.h;
    let mut h = h_old.clone();
    let mut jac = CyclicBanded::zeros(n, 2);
    let mut rnorm = f64::INFINITY;
    for it in 0..=opts.newton_max_iter {
        let last = it == opts.newton_max_iter;
        let r = op.residual(&h, h_old, dt, if last { None } else { Some(&mut jac) });
        rnorm = sup(&r);
        if !rnorm.is_finite() {
            return Err(StepRejection::NonFinite);
        }
        if rnorm < opts.newton_tol {
            if op.params.is_regularized() || opts.positivity_floor > 0.0 {
                if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| **v < opts.positivity_floor) {
                    return Err(StepRejection::Positivity { index, value });
                }
            }
            return Ok(StepSuccess {
                state: FilmState { h, t: state.t + dt },
                newton_iterations: it + 1,
                residual: rnorm,
            });
        }
        if last {
            break;
        }
        let delta = jac.solve(&r).map_err(|_| StepRejection::Singular)?;
        for (hi, d) in h.iter_mut().zip(&delta) {
            *hi -= d;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(StepRejection::NonFinite);
        }
    }
    Err(StepRejection::NewtonDiverged {
        iterations: opts.newton_max_iter,
        residual: rnorm,
    })
}

/// Counts and per-step history of an adaptive run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
    pub rejected_newton: usize,
    pub rejected_positivity: usize,
    pub rejected_singular: usize,
    pub rejected_nonfinite: usize,
    /// dt of every accepted step, in order.
    pub dt: Vec<f64>,
}

impl StepLog {
    fn record_rejection(&mut self, why: &StepRejection) {
        self.rejected += 1;
        match why {
            StepRejection::NewtonDiverged { .. } | StepRejection::DtOutOfRange { .. } => self.rejected_newton += 1,
            StepRejection::Positivity { .. } => self.rejected_positivity += 1,
            StepRejection::Singular => self.rejected_singular += 1,
            StepRejection::NonFinite => self.rejected_nonfinite += 1,
        }
    }

    pub fn min_dt(&self) -> Option<f64> {
        self.dt.iter().copied().reduce(f64::min)
    }

    pub fn max_dt(&self) -> Option<f64> {
        self.dt.iter().copied().reduce(f64::max)
    }
}

/// Numerical event that ended a run early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunEvent {
    DtUnderflow {
        t: f64,
        dt: f64,
        last_rejection: StepRejection,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub params: Params,
    pub options: SchemeOptions,
    pub n: usize,
    pub half_length: f64,
    pub forcing: String,
    /// False when δ = ε = 0: the degenerate equation is integrated as is
    /// and positivity is not enforced.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Initial state followed by the state at each output time reached.
    pub snapshots: Vec<FilmState>,
    /// Initial row plus one row per accepted step.
    pub diagnostics: DiagnosticsSeries,
    pub step_log: StepLog,
    pub metadata: RunMetadata,
    pub event: Option<RunEvent>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FilmState {
        self.snapshots
            .last()
            .expect("trajectory always holds the initial state")
    }

    pub fn completed(&self) -> bool {
        self.event.is_none()
    }
}

/// Adaptive backward-Euler integration from `state.t` to `t_end`, landing
/// exactly on each of `output_times` inside `(state.t, t_end]` and on
/// `t_end`.
pub fn evolve(
    state: &FilmState,
    t_end: f64,
    output_times: &[f64],
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<Trajectory> {
    params.validate()?;
    opts.validate()?;
    let op = Operator::new(params, forcing, grid, opts);
    op.check_len(&state.h)?;
    if !(t_end >= state.t && t_end.is_finite()) {
        return Err(invalid(
            "t_end",
            format!("must be finite and at least the start time {}, got {t_end}", state.t),
        ));
    }
    if !params.is_regularized() {
        log::warn!("delta = epsilon = 0: integrating the degenerate equation, positivity is not guaranteed");
    }

    let mut targets: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > state.t && t < t_end)
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    if t_end > state.t {
        targets.push(t_end);
    }

    let mut series = DiagnosticsSeries::default();
    series.push(diagnostics::sample(state, params, forcing, grid));
    let mut traj = Trajectory {
        snapshots: vec![state.clone()],
        diagnostics: series,
        step_log: StepLog::default(),
        metadata: RunMetadata {
            params: *params,
            options: *opts,
            n: grid.n(),
            half_length: grid.half_length(),
            forcing: forcing.description().to_string(),
            regularized: params.is_regularized(),
        },
        event: None,
    };

    let mut current = state.clone();
    let mut dt = opts.dt_init;
    for &target in &targets {
        while current.t < target {
            let remaining = target - current.t;
            // land on the target instead of leaving a sliver behind
            let landing = dt >= remaining * (1.0 - 1e-12);
            let dt_try = if landing { remaining } else { dt };
            match newton(&op, &current, dt_try, opts) {
                Ok(ok) => {
                    let mut next = ok.state;
                    next.t = if landing { target } else { current.t + dt_try };
                    current = next;
                    traj.step_log.accepted += 1;
                    traj.step_log.newton_iterations += ok.newton_iterations;
                    traj.step_log.dt.push(dt_try);
                    traj.diagnostics
                        .push(diagnostics::sample(&current, params, forcing, grid));
                    dt = (dt * opts.dt_grow).min(opts.dt_max);
                }
                Err(why) => {
                    traj.step_log.record_rejection(&why);
                    dt = dt_try * opts.dt_shrink;
                    log::debug!("t = {}: step {dt_try:e} rejected ({why})", current.t);
                    if dt < opts.dt_min {
                        log::warn!("dt underflow at t = {} after: {why}", current.t);
                        traj.event = Some(RunEvent::DtUnderflow {
                            t: current.t,
                            dt,
                            last_rejection: why,
                        });
                        traj.snapshots.push(current);
                        return Ok(traj);
                    }
                }
            }
        }
        traj.snapshots.push(current.clone());
    }
    Ok(traj)
}

/// Linear growth rate `σ(k) = h̄³ k² (a1 - a0 k²)` of mode `k` about the
/// flat film `h̄` for the cubic mobility without forcing.
pub fn dispersion_growth_rate(k: u32, hbar: f64, params: &Params) -> f64 {
    let k2 = (k as f64) * (k as f64);
    hbar.powi(3) * k2 * (params.a1 - params.a0 * k2)
}
