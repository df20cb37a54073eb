use serde::{Deserialize, Serialize};

use super::{h1_sq, l2_sq, mass, AprioriConstants, DiagnosticsSeries};
use crate::model::{FilmState, PeriodicGrid};

pub const VERDICT_ABS_TOL: f64 = 1e-9;
pub const VERDICT_REL_TOL: f64 = 1e-8;

/// Outcome of checking `lhs <= rhs` over one or more samples; the margin
/// is `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub bound_name: String,
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_time: f64,
    /// Tolerance the worst margin was compared against.
    pub tolerance: f64,
}

impl BoundVerdict {
    fn new(name: &str) -> Self {
        BoundVerdict {
            bound_name: name.to_string(),
            holds: true,
            worst_margin: f64::INFINITY,
            worst_time: f64::NAN,
            tolerance: 0.0,
        }
    }

    /// Keeps the sample with the least slack `margin + tolerance`, so that
    /// `holds == (worst_margin >= -tolerance)`.
    fn observe(&mut self, t: f64, lhs: f64, rhs: f64) {
        let margin = rhs - lhs;
        let tol = VERDICT_ABS_TOL + VERDICT_REL_TOL * lhs.abs().max(rhs.abs());
        let slack = margin + tol;
        let worst_slack = self.worst_margin + self.tolerance;
        if self.worst_time.is_nan() || !(slack >= worst_slack) {
            self.worst_margin = margin;
            self.worst_time = t;
            self.tolerance = tol;
        }
        self.holds = self.worst_margin >= -self.tolerance;
    }
}

/// Right-hand side `6^{2/3} M^{4/3} (∫h_x²)^{1/3} + M²/|Ω|`.
pub fn interpolation_rhs(m: f64, hx_sq: f64, omega: f64) -> f64 {
    6f64.powf(2.0 / 3.0) * m.powf(4.0 / 3.0) * hx_sq.cbrt() + m * m / omega
}

/// `‖h‖² <= 6^{2/3} M^{4/3} (∫h_x²)^{1/3} + M²/|Ω|` for nonnegative `h`.
pub fn interpolation_bound_check(state: &FilmState, grid: &PeriodicGrid) -> BoundVerdict {
    let mut v = BoundVerdict::new("interpolation");
    let m = mass(state, grid);
    v.observe(
        state.t,
        l2_sq(state, grid),
        interpolation_rhs(m, h1_sq(state, grid), grid.length()),
    );
    v
}

/// Both energy verdicts of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyVerdicts {
    /// `ℰ₀(t) <= ℰ₀(0) + K t`.
    pub energy_growth: BoundVerdict,
    /// `(a0/4)(‖h‖² + ‖h_x‖²) <= ℰ₀(0) + K t + K3`.
    pub h1_bound: BoundVerdict,
}

pub fn energy_bound_check(series: &DiagnosticsSeries, constants: &AprioriConstants) -> EnergyVerdicts {
    let mut energy = BoundVerdict::new("energy_growth");
    let mut h1 = BoundVerdict::new("h1_bound");
    if series.is_empty() {
        return EnergyVerdicts {
            energy_growth: energy,
            h1_bound: h1,
        };
    }
    let t0 = series.t[0];
    let e0 = series.energy_e0[0];
    let k = constants.k_uniform;
    for r in series.rows() {
        let lin = e0 + k * (r.t - t0);
        energy.observe(r.t, r.energy_e0, lin);
        h1.observe(
            r.t,
            0.25 * constants.a0 * (r.l2_sq + r.h1_sq),
            lin + constants.k3_uniform,
        );
    }
    EnergyVerdicts {
        energy_growth: energy,
        h1_bound: h1,
    }
}
