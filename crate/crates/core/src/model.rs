//! Domain types: PDE coefficients, the periodic grid, forcing and film states.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral;

/// Default lift exponent, the midpoint of the admissible interval (0, 2/5).
pub const DEFAULT_THETA: f64 = 1.0 / 3.0;
/// Upper end (exclusive) of the admissible lift exponent interval.
pub const THETA_MAX: f64 = 0.4;

/// Coefficients of
/// `h_t + (f(h)(a0 h_xxx + a1 h_x + a2 w'(x)))_x + a3 h_x = 0`
/// together with the regularization `f_{δε}(z) = |z|^4/(|z|+ε) + δ` and the
/// exponent θ of the initial lift `h0 + ε^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub theta: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            a0: 1.0,
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            theta: DEFAULT_THETA,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("a0", self.a0),
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("theta", self.theta),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.a0 <= 0.0 {
            return Err(invalid("a0", format!("must be positive, got {}", self.a0)));
        }
        if self.delta < 0.0 {
            return Err(invalid("delta", format!("must be nonnegative, got {}", self.delta)));
        }
        if self.epsilon < 0.0 {
            return Err(invalid("epsilon", format!("must be nonnegative, got {}", self.epsilon)));
        }
        check_theta(self.theta)?;
        Ok(())
    }

    /// True when δ or ε is positive. With both zero the solver integrates
    /// the degenerate equation itself and positivity is not guaranteed.
    pub fn is_regularized(&self) -> bool {
        self.delta > 0.0 || self.epsilon > 0.0
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < THETA_MAX) {
        return Err(invalid(
            "theta",
            format!("must lie strictly inside (0, 2/5), got {theta}"),
        ));
    }
    Ok(())
}

/// Uniform periodic mesh on (-a, a) with `n` nodes `x_i = -a + i dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    half_length: f64,
    dx: f64,
    nodes: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n must be even and at least 8, got {n}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let dx = 2.0 * half_length / n as f64;
        // (2i - n)/n keeps the nodes exactly symmetric about x = 0
        let nodes = (0..n)
            .map(|i| half_length * (2.0 * i as f64 - n as f64) / n as f64)
            .collect();
        Ok(PeriodicGrid {
            n,
            half_length,
            dx,
            nodes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// |Ω| = 2a.
    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    /// Periodic index `i + offset` wrapped into `0..n`.
    #[inline]
    pub fn wrap(&self, i: usize, offset: isize) -> usize {
        (i as isize + offset).rem_euclid(self.n as isize) as usize
    }

    /// Index of the node mirrored through x = 0.
    pub fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    pub fn face_midpoints(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| x + 0.5 * self.dx).collect()
    }

    /// Whether trigonometric data in `x` (period 2π) is periodic on this domain.
    pub fn supports_unit_wavenumbers(&self) -> bool {
        let periods = self.length() / (2.0 * PI);
        (periods - periods.round()).abs() < 1e-12 && periods.round() >= 1.0
    }
}

/// Build the default-domain grid check used by the CLI and tests.
pub fn build_grid(n: usize, half_length: f64) -> Result<PeriodicGrid> {
    PeriodicGrid::new(n, half_length)
}

/// The forcing potential `w` with its first two derivatives sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    w: Vec<f64>,
    w_prime: Vec<f64>,
    w_double_prime: Vec<f64>,
    sup_norm_w: f64,
    sup_norm_w_prime: f64,
    sup_norm_w_double_prime: f64,
    description: String,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

impl Forcing {
    fn from_parts(w: Vec<f64>, w_prime: Vec<f64>, w_double_prime: Vec<f64>, description: String) -> Self {
        Forcing {
            sup_norm_w: sup_norm(&w),
            sup_norm_w_prime: sup_norm(&w_prime),
            sup_norm_w_double_prime: sup_norm(&w_double_prime),
            w,
            w_prime,
            w_double_prime,
            description,
        }
    }

    pub fn none(grid: &PeriodicGrid) -> Self {
        let z = vec![0.0; grid.n()];
        Self::from_parts(z.clone(), z.clone(), z, "w = 0".into())
    }

    /// `w = sign * amplitude * sin(x)` with analytic derivatives.
    pub fn sine(grid: &PeriodicGrid, amplitude: f64, sign: f64) -> Self {
        if !grid.supports_unit_wavenumbers() {
            log::warn!("sin(x) forcing is not periodic on a domain of length {}", grid.length());
        }
        let s = sign.signum() * amplitude;
        let x = grid.nodes();
        Self::from_parts(
            x.iter().map(|x| s * x.sin()).collect(),
            x.iter().map(|x| s * x.cos()).collect(),
            x.iter().map(|x| -s * x.sin()).collect(),
            format!("w = {s} sin(x), w' = {s} cos(x)"),
        )
    }

    /// `w = mean + Σ cos_k cos(kx) + sin_k sin(kx)`, k starting at 1.
    pub fn fourier(grid: &PeriodicGrid, mean: f64, cos: &[f64], sin: &[f64]) -> Self {
        let x = grid.nodes();
        let eval = |deriv: u32| -> Vec<f64> {
            x.iter()
                .map(|&x| {
                    let mut v = if deriv == 0 { mean } else { 0.0 };
                    for (j, c) in cos.iter().enumerate() {
                        let k = (j + 1) as f64;
                        v += c * trig_derivative(true, k, x, deriv);
                    }
                    for (j, s) in sin.iter().enumerate() {
                        let k = (j + 1) as f64;
                        v += s * trig_derivative(false, k, x, deriv);
                    }
                    v
                })
                .collect()
        };
        Self::from_parts(
            eval(0),
            eval(1),
            eval(2),
            format!("w = fourier(mean={mean}, cos={cos:?}, sin={sin:?})"),
        )
    }

    /// Tabulated `w`; derivatives come from spectral differentiation.
    pub fn from_samples(grid: &PeriodicGrid, w: Vec<f64>) -> Result<Self> {
        if w.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: w.len(),
            });
        }
        let wp = spectral::derivative(&w, 1, grid.length());
        let wpp = spectral::derivative(&w, 2, grid.length());
        Ok(Self::from_parts(
            w,
            wp,
            wpp,
            "w = tabulated (spectral derivatives)".into(),
        ))
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn w_prime(&self) -> &[f64] {
        &self.w_prime
    }
    pub fn w_double_prime(&self) -> &[f64] {
        &self.w_double_prime
    }
    pub fn sup_norm_w(&self) -> f64 {
        self.sup_norm_w
    }
    pub fn sup_norm_w_prime(&self) -> f64 {
        self.sup_norm_w_prime
    }
    pub fn sup_norm_w_double_prime(&self) -> f64 {
        self.sup_norm_w_double_prime
    }
    pub fn description(&self) -> &str {
        &self.description
    }

    /// ‖w'‖_{L²(Ω)} by the rectangle rule.
    pub fn l2_norm_w_prime(&self, grid: &PeriodicGrid) -> f64 {
        (grid.dx() * self.w_prime.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Derivative of order `d` of cos(kx) (`is_cos`) or sin(kx).
fn trig_derivative(is_cos: bool, k: f64, x: f64, d: u32) -> f64 {
    let phase = k * x + if is_cos { 0.5 * PI } else { 0.0 } + d as f64 * 0.5 * PI;
    k.powi(d as i32) * phase.sin()
}

/// `w = sign * amplitude * sin(x)`.
pub fn make_forcing_sine(grid: &PeriodicGrid, amplitude: f64, sign: f64) -> Forcing {
    Forcing::sine(grid, amplitude, sign)
}

/// Film thickness samples at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmState {
    pub h: Vec<f64>,
    pub t: f64,
}

impl FilmState {
    pub fn new(grid: &PeriodicGrid, h: Vec<f64>, t: f64) -> Result<Self> {
        if h.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: h.len(),
            });
        }
        if let Some((i, v)) = h.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(invalid("h", format!("sample {i} is not finite ({v})")));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("must be nonnegative and finite, got {t}")));
        }
        Ok(FilmState { h, t })
    }

    pub fn constant(grid: &PeriodicGrid, value: f64) -> Self {
        FilmState {
            h: vec![value; grid.n()],
            t: 0.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Initial-data specification: a named preset or an explicit description.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// 0.3 + 0.02 cos x + 0.02 cos 2x
    Fig2,
    /// constant 0.3
    Fig3,
    /// constant 0.3
    Fig4,
    Constant(f64),
    Fourier {
        mean: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Table(Vec<f64>),
}

impl InitialData {
    pub fn fig2_coefficients() -> (f64, Vec<f64>, Vec<f64>) {
        (0.3, vec![0.02, 0.02], vec![])
    }
}

/// Sample initial data on the grid at t = 0.
pub fn sample_initial_data(spec: &InitialData, grid: &PeriodicGrid) -> Result<FilmState> {
    let x = grid.nodes();
    let fourier = |mean: f64, cos: &[f64], sin: &[f64]| -> Vec<f64> {
        x.iter()
            .map(|&x| {
                let mut v = mean;
                for (j, c) in cos.iter().enumerate() {
                    v += c * ((j + 1) as f64 * x).cos();
                }
                for (j, s) in sin.iter().enumerate() {
                    v += s * ((j + 1) as f64 * x).sin();
                }
                v
            })
            .collect::<Vec<f64>>()
    };
    let h = match spec {
        InitialData::Fig2 => {
            let (m, c, s) = InitialData::fig2_coefficients();
            fourier(m, &c, &s)
        }
        InitialData::Fig3 | InitialData::Fig4 => vec![0.3; grid.n()],
        InitialData::Constant(c) => vec![*c; grid.n()],
        InitialData::Fourier { mean, cos, sin } => {
            if (!cos.is_empty() || !sin.is_empty()) && !grid.supports_unit_wavenumbers() {
                log::warn!(
                    "cos(kx)/sin(kx) data is not periodic on a domain of length {}",
                    grid.length()
                );
            }
            fourier(*mean, cos, sin)
        }
        InitialData::Table(values) => {
            log::warn!("tabulated initial data is used as given, without smoothing");
            values.clone()
        }
    };
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeSample { index, value });
    }
    FilmState::new(grid, h, 0.0)
}

/// Add the constant lift ε^θ to every sample.
pub fn lift_initial_data(h0: &FilmState, epsilon: f64, theta: f64) -> Result<FilmState> {
    check_theta(theta)?;
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("must be nonnegative, got {epsilon}")));
    }
    let lift = if epsilon == 0.0 { 0.0 } else { epsilon.powf(theta) };
    Ok(FilmState {
        h: h0.h.iter().map(|v| v + lift).collect(),
        t: h0.t,
    })
}
