//! Functionals tracked along a run (mass, energy, entropies, norms), the
//! constant chain of the existence analysis and checks of the bounds it
//! predicts.
//!
//! Gradients use the face differences `(h_{i+1} - h_i)/dx` of the solver so
//! energy is measured in the scheme's own metric.

mod bounds;
mod constants;

use serde::{Deserialize, Serialize};

pub use bounds::{
    energy_bound_check, interpolation_bound_check, interpolation_rhs, BoundVerdict, EnergyVerdicts, VERDICT_ABS_TOL,
    VERDICT_REL_TOL,
};
pub use constants::{apriori_constants, b_chain, continuation_times, AprioriConstants, BChain, Provenance, CHAIN_P};

use crate::error::{Error, Result};
use crate::mobility::{entropy_g_alpha, entropy_value, EntropyRef, MobilitySpec};
use crate::model::{FilmState, Forcing, Params, PeriodicGrid};
use crate::solver::{self, SchemeOptions};

/// Parallel time series of the tracked functionals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy_e0: Vec<f64>,
    pub entropy_g: Vec<f64>,
    pub h1_sq: Vec<f64>,
    pub l2_sq: Vec<f64>,
    pub min_h: Vec<f64>,
    pub max_h: Vec<f64>,
}

/// One row of [`DiagnosticsSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub energy_e0: f64,
    /// `+inf` when the entropy is undefined (a nonpositive sample with δ = 0).
    pub entropy_g: f64,
    pub h1_sq: f64,
    pub l2_sq: f64,
    pub min_h: f64,
    pub max_h: f64,
}

impl DiagnosticsSeries {
    pub fn push(&mut self, row: DiagnosticsRow) {
        self.t.push(row.t);
        self.mass.push(row.mass);
        self.energy_e0.push(row.energy_e0);
        self.entropy_g.push(row.entropy_g);
        self.h1_sq.push(row.h1_sq);
        self.l2_sq.push(row.l2_sq);
        self.min_h.push(row.min_h);
        self.max_h.push(row.max_h);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn row(&self, i: usize) -> DiagnosticsRow {
        DiagnosticsRow {
            t: self.t[i],
            mass: self.mass[i],
            energy_e0: self.energy_e0[i],
            entropy_g: self.entropy_g[i],
            h1_sq: self.h1_sq[i],
            l2_sq: self.l2_sq[i],
            min_h: self.min_h[i],
            max_h: self.max_h[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = DiagnosticsRow> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    /// Largest relative deviation of the mass from its first value.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let Some(&m0) = self.mass.first() else { return 0.0 };
        self.mass.iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max)
    }
}

/// Face differences `(h_{i+1} - h_i)/dx`.
pub fn face_gradient(h: &[f64], grid: &PeriodicGrid) -> Vec<f64> {
    let dx = grid.dx();
    (0..h.len()).map(|i| (h[grid.wrap(i, 1)] - h[i]) / dx).collect()
}

/// `dx Σ h_i`.
pub fn mass(state: &FilmState, grid: &PeriodicGrid) -> f64 {
    grid.dx() * state.h.iter().sum::<f64>()
}

/// `∫ h_x²` with the face differences.
pub fn h1_sq(state: &FilmState, grid: &PeriodicGrid) -> f64 {
    grid.dx() * face_gradient(&state.h, grid).iter().map(|d| d * d).sum::<f64>()
}

/// `∫ h²`.
pub fn l2_sq(state: &FilmState, grid: &PeriodicGrid) -> f64 {
    grid.dx() * state.h.iter().map(|v| v * v).sum::<f64>()
}

/// `ℰ₀ = ½ ∫ (a0 h_x² - a1 h² - 2 a2 w h)`.
pub fn energy_e0(state: &FilmState, params: &Params, forcing: &Forcing, grid: &PeriodicGrid) -> f64 {
    let dx = grid.dx();
    let grad: f64 = face_gradient(&state.h, grid).iter().map(|d| d * d).sum();
    let bulk: f64 = state
        .h
        .iter()
        .zip(forcing.w())
        .map(|(h, w)| params.a1 * h * h + 2.0 * params.a2 * w * h)
        .sum();
    0.5 * dx * (params.a0 * grad - bulk)
}

/// `∫ G_{δε}(h)`, closed form for δ = 0 and anchored at `c = 1` otherwise.
pub fn entropy_integral(state: &FilmState, spec: MobilitySpec, grid: &PeriodicGrid) -> Result<f64> {
    let mut sum = 0.0;
    for (index, &value) in state.h.iter().enumerate() {
        if value <= 0.0 {
            return Err(Error::NonpositiveSample { index, value });
        }
        sum += entropy_value(value, spec, EntropyRef::default())?;
    }
    Ok(grid.dx() * sum)
}

/// `∫ G^{(α)}_ε(h)`.
pub fn alpha_entropy_integral(state: &FilmState, alpha: f64, epsilon: f64, grid: &PeriodicGrid) -> Result<f64> {
    let mut sum = 0.0;
    for (index, &value) in state.h.iter().enumerate() {
        if value <= 0.0 {
            return Err(Error::NonpositiveSample { index, value });
        }
        sum += entropy_g_alpha(value, alpha, epsilon)?;
    }
    Ok(grid.dx() * sum)
}

/// `sup |h_t|` of the semi-discrete operator; zero at exact discrete steady states.
pub fn steadiness_residual(
    state: &FilmState,
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    opts: &SchemeOptions,
) -> Result<f64> {
    let ht = solver::time_derivative(state, params, forcing, grid, opts)?;
    Ok(ht.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Largest `|h(x) - h(-x)|` over the nodes.
pub fn even_asymmetry(state: &FilmState, grid: &PeriodicGrid) -> f64 {
    (0..grid.n())
        .map(|i| (state.h[i] - state.h[grid.mirror(i)]).abs())
        .fold(0.0, f64::max)
}

/// All tracked functionals of one state.
pub fn sample(state: &FilmState, params: &Params, forcing: &Forcing, grid: &PeriodicGrid) -> DiagnosticsRow {
    let spec = MobilitySpec::new(params.delta, params.epsilon);
    DiagnosticsRow {
        t: state.t,
        mass: mass(state, grid),
        energy_e0: energy_e0(state, params, forcing, grid),
        entropy_g: entropy_integral(state, spec, grid).unwrap_or(f64::INFINITY),
        h1_sq: h1_sq(state, grid),
        l2_sq: l2_sq(state, grid),
        min_h: state.min(),
        max_h: state.max(),
    }
}
