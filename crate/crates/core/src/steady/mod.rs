//! Steady coating flows on a rotating cylinder.
//!
//! Without surface tension the steady film solves the cubic
//! `h - (μ/3) h³ cos x = q` pointwise. With surface tension, `y = h/q`
//! solves `γ(y''' + y') = β cos x - 1/y² + 1/y³` with `γ = χq³/3` and
//! `β = q²μ/3`, discretized here by trigonometric collocation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Forcing, Params, PeriodicGrid};
use crate::spectral;

/// Converged when the collocation residual sup-norm drops below this.
pub const STEADY_TOL: f64 = 1e-10;
/// First flux of the continuation when no initial guess is supplied.
pub const Q_START: f64 = 0.05;
pub const DQ_MAX: f64 = 0.02;
pub const DQ_MIN: f64 = 1e-4;
const NEWTON_MAX_ITER: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyProfile {
    pub grid: PeriodicGrid,
    pub h: Vec<f64>,
    pub q: f64,
    pub mu: f64,
    pub chi: f64,
    pub gamma: f64,
    pub beta: f64,
    pub converged: bool,
    pub residual_sup: f64,
    pub newton_iterations: usize,
}

impl SteadyProfile {
    /// A profile from given samples, not yet checked against any equation.
    pub fn from_samples(grid: &PeriodicGrid, h: Vec<f64>, q: f64, mu: f64, chi: f64) -> Result<Self> {
        if h.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: h.len(),
            });
        }
        Ok(SteadyProfile {
            grid: grid.clone(),
            h,
            q,
            mu,
            chi,
            gamma: gamma(q, chi),
            beta: beta(q, mu),
            converged: false,
            residual_sup: f64::NAN,
            newton_iterations: 0,
        })
    }

    pub fn min_h(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `y = h/q`.
    pub fn y(&self) -> Vec<f64> {
        self.h.iter().map(|h| h / self.q).collect()
    }
}

/// `γ = χq³/3`.
pub fn gamma(q: f64, chi: f64) -> f64 {
    chi * q * q * q / 3.0
}

/// `β = q²μ/3`.
pub fn beta(q: f64, mu: f64) -> f64 {
    q * q * mu / 3.0
}

/// Flux above which no strictly positive steady state exists:
/// `(2/3) sqrt(2/μ)`.
pub fn nonexistence_bound(mu: f64) -> f64 {
    2.0 / 3.0 * (2.0 / mu).sqrt()
}

/// `q²μ/3 <= 8/27`, up to a few ulps so the equality case is admitted.
pub fn beta_admissible(q: f64, mu: f64) -> bool {
    beta(q, mu) <= 8.0 / 27.0 * (1.0 + 4.0 * f64::EPSILON)
}

/// Existence threshold `2/(3 sqrt(μ))` of the zero-surface-tension profile.
pub fn moffatt_threshold(mu: f64) -> f64 {
    2.0 / (3.0 * mu.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoffattOutcome {
    Profile(SteadyProfile),
    /// The smooth branch is lost at the node with the largest `cos x`.
    Nonexistent {
        threshold: f64,
        node: usize,
    },
}

impl MoffattOutcome {
    pub fn exists(&self) -> bool {
        matches!(self, MoffattOutcome::Profile(_))
    }

    pub fn profile(&self) -> Option<&SteadyProfile> {
        match self {
            MoffattOutcome::Profile(p) => Some(p),
            MoffattOutcome::Nonexistent { .. } => None,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// Root of `g(h) = h - k h³ - q` on the increasing part of `g`.
fn cubic_branch_root(q: f64, k: f64) -> Option<f64> {
    let (mut lo, mut hi) = if k <= 0.0 {
        (0.0, q)
    } else {
        let peak = (1.0 / (3.0 * k)).sqrt();
        // g(peak) = 2 peak/3 - q
        if 2.0 * peak / 3.0 <= q {
            return None;
        }
        (q, peak)
    };
    let g = |h: f64| h - k * h * h * h - q;
    let mut h = 0.5 * (lo + hi);
    if k <= 0.0 || g(q) == 0.0 {
        h = q;
    }
    for _ in 0..200 {
        let gh = g(h);
        if gh == 0.0 {
            return Some(h);
        }
        if gh < 0.0 {
            lo = h;
        } else {
            hi = h;
        }
        let dg = 1.0 - 3.0 * k * h * h;
        let newton = h - gh / dg;
        h = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 * hi.max(1e-300) || (gh / dg).abs() <= 1e-16 * h {
            break;
        }
    }
    Some(h)
}

/// Zero-surface-tension steady profile `h - (μ/3) h³ cos x = q`, node by
/// node on the branch through `h = q` at `cos x = 0`.
pub fn moffatt_profile(q: f64, mu: f64, grid: &PeriodicGrid) -> Result<MoffattOutcome> {
    check_positive("q", q)?;
    check_positive("mu", mu)?;
    let mut h = Vec::with_capacity(grid.n());
    let mut residual = 0.0f64;
    for (i, &x) in grid.nodes().iter().enumerate() {
        let k = mu * x.cos() / 3.0;
        match cubic_branch_root(q, k) {
            Some(r) => {
                residual = residual.max((r - k * r * r * r - q).abs());
                h.push(r);
            }
            None => {
                return Ok(MoffattOutcome::Nonexistent {
                    threshold: moffatt_threshold(mu),
                    node: i,
                })
            }
        }
    }
    let mut p = SteadyProfile::from_samples(grid, h, q, mu, 0.0)?;
    p.converged = true;
    p.residual_sup = residual;
    Ok(MoffattOutcome::Profile(p))
}

/// Collocation matrix of `D³ + D` built from trigonometric differentiation
/// of unit vectors.
pub fn collocation_operator(grid: &PeriodicGrid) -> DMatrix<f64> {
    let n = grid.n();
    let period = grid.length();
    let mut l = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[col] = 1.0;
        let d1 = spectral::derivative(&e, 1, period);
        let d3 = spectral::derivative(&e, 3, period);
        for row in 0..n {
            l[(row, col)] = d1[row] + d3[row];
        }
    }
    l
}

struct Collocation {
    l: DMatrix<f64>,
    cos: Vec<f64>,
}

impl Collocation {
    fn new(grid: &PeriodicGrid) -> Result<Self> {
        if !grid.supports_unit_wavenumbers() {
            return Err(Error::InvalidGrid(format!(
                "steady problems need a domain length that is a multiple of 2π, got {}",
                grid.length()
            )));
        }
        Ok(Collocation {
            l: collocation_operator(grid),
            cos: grid.nodes().iter().map(|x| x.cos()).collect(),
        })
    }

    fn residual(&self, y: &[f64], gamma: f64, beta: f64) -> Vec<f64> {
        let yv = DVector::from_column_slice(y);
        let ly = &self.l * &yv;
        (0..y.len())
            .map(|i| {
                let yi = y[i];
                gamma * ly[i] - beta * self.cos[i] + 1.0 / (yi * yi) - 1.0 / (yi * yi * yi)
            })
            .collect()
    }

    /// Damped Newton keeping `y > 0`. Returns `(y, residual, iterations)`.
    fn solve(&self, mut y: Vec<f64>, gamma: f64, beta: f64) -> Option<(Vec<f64>, f64, usize)> {
        let n = y.len();
        let mut r = self.residual(&y, gamma, beta);
        let mut rn = sup(&r);
        for it in 0..NEWTON_MAX_ITER {
            if !rn.is_finite() {
                return None;
            }
            if rn < STEADY_TOL {
                return Some((y, rn, it + 1));
            }
            let mut j = &self.l * gamma;
            for i in 0..n {
                let yi = y[i];
                j[(i, i)] += -2.0 / (yi * yi * yi) + 3.0 / (yi * yi * yi * yi);
            }
            let delta = j.lu().solve(&DVector::from_vec(r.clone()))?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = y.iter().zip(delta.iter()).map(|(a, d)| a - lambda * d).collect();
                if trial.iter().all(|v| *v > 0.0) {
                    let rt = self.residual(&trial, gamma, beta);
                    let rtn = sup(&rt);
                    if rtn.is_finite() && (rtn < rn || lambda == 1.0 && rtn < 10.0 * rn) {
                        y = trial;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        (rn < STEADY_TOL).then_some((y, rn, NEWTON_MAX_ITER + 1))
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn asymptotic_guess(col: &Collocation, q: f64, mu: f64) -> Vec<f64> {
    let b = beta(q, mu);
    col.cos.iter().map(|c| 1.0 + b * c).collect()
}

fn check_steady_args(q: f64, mu: f64, chi: f64) -> Result<()> {
    check_positive("q", q)?;
    check_positive("mu", mu)?;
    check_positive("chi", chi)
}

fn make_profile(grid: &PeriodicGrid, y: &[f64], q: f64, mu: f64, chi: f64, res: f64, its: usize) -> SteadyProfile {
    SteadyProfile {
        grid: grid.clone(),
        h: y.iter().map(|v| v * q).collect(),
        q,
        mu,
        chi,
        gamma: gamma(q, chi),
        beta: beta(q, mu),
        converged: true,
        residual_sup: res,
        newton_iterations: its,
    }
}

/// Natural continuation in `q` along one `(μ, χ)` branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Every converged continuation point, in increasing `q`.
    pub profiles: Vec<SteadyProfile>,
    /// The flux whose solve failed with the step already at its floor.
    pub failed_at: Option<f64>,
}

impl Branch {
    pub fn last_converged_q(&self) -> Option<f64> {
        self.profiles.last().map(|p| p.q)
    }

    pub fn reached(&self, q: f64) -> bool {
        self.profiles.iter().any(|p| p.q == q)
    }
}

/// Continues from `Q_START` through each of `stops` (sorted ascending) with
/// steps of at most `DQ_MAX`, halving on failure down to `DQ_MIN`, using a
/// secant predictor. Stops at the first unrecoverable failure.
pub fn continue_branch(mu: f64, chi: f64, grid: &PeriodicGrid, stops: &[f64]) -> Result<Branch> {
    check_positive("mu", mu)?;
    check_positive("chi", chi)?;
    let col = Collocation::new(grid)?;
    let mut stops: Vec<f64> = stops.to_vec();
    stops.sort_by(f64::total_cmp);
    let mut branch = Branch {
        profiles: Vec::new(),
        failed_at: None,
    };
    if stops.is_empty() {
        return Ok(branch);
    }
    let q0 = stops[0].min(Q_START);
    check_positive("q", q0)?;
    let Some((y0, res, its)) = col.solve(asymptotic_guess(&col, q0, mu), gamma(q0, chi), beta(q0, mu)) else {
        branch.failed_at = Some(q0);
        return Ok(branch);
    };
    branch.profiles.push(make_profile(grid, &y0, q0, mu, chi, res, its));

    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut cur = (q0, y0);
    let mut dq = DQ_MAX;
    for &target in &stops {
        while cur.0 < target {
            let q_next = (cur.0 + dq).min(target);
            let guess = match &prev {
                Some((qp, yp)) => {
                    let s = (q_next - cur.0) / (cur.0 - qp);
                    let g: Vec<f64> = cur.1.iter().zip(yp).map(|(c, p)| c + s * (c - p)).collect();
                    if g.iter().all(|v| *v > 0.0) {
                        g
                    } else {
                        cur.1.clone()
                    }
                }
                None => cur.1.clone(),
            };
            match col.solve(guess, gamma(q_next, chi), beta(q_next, mu)) {
                Some((y, res, its)) => {
                    branch.profiles.push(make_profile(grid, &y, q_next, mu, chi, res, its));
                    prev = Some(std::mem::replace(&mut cur, (q_next, y)));
                    dq = (2.0 * dq).min(DQ_MAX);
                }
                None => {
                    dq *= 0.5;
                    if dq < DQ_MIN {
                        log::info!("continuation (mu = {mu}, chi = {chi}) stalled at q = {q_next}");
                        branch.failed_at = Some(q_next);
                        return Ok(branch);
                    }
                }
            }
        }
    }
    Ok(branch)
}

/// Steady state with surface tension at flux `q`.
///
/// With `initial_guess` (thickness samples `h`) a single Newton solve is
/// made; otherwise the branch is continued from `Q_START`.
pub fn pukhnachov_steady(
    q: f64,
    mu: f64,
    chi: f64,
    grid: &PeriodicGrid,
    initial_guess: Option<&[f64]>,
) -> Result<SteadyProfile> {
    check_steady_args(q, mu, chi)?;
    if let Some(h) = initial_guess {
        if h.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: h.len(),
            });
        }
        let col = Collocation::new(grid)?;
        let y: Vec<f64> = h.iter().map(|v| v / q).collect();
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NonpositiveSample { index, value });
        }
        return match col.solve(y, gamma(q, chi), beta(q, mu)) {
            Some((y, res, its)) => Ok(make_profile(grid, &y, q, mu, chi, res, its)),
            None => Err(Error::ContinuationFailed {
                attempted_q: q,
                last_converged_q: None,
            }),
        };
    }
    let branch = continue_branch(mu, chi, grid, &[q])?;
    match branch.profiles.last() {
        Some(p) if p.q == q => Ok(p.clone()),
        _ => Err(Error::ContinuationFailed {
            attempted_q: branch.failed_at.unwrap_or(q),
            last_converged_q: branch.last_converged_q(),
        }),
    }
}

/// Projections of `1/y² - 1/y³` onto `1`, `cos x`, `sin x`, minus what the
/// steady equation requires (`0`, `β|Ω|/2`, `0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityResiduals {
    pub r_mean: f64,
    pub r_cos: f64,
    pub r_sin: f64,
}

impl SolvabilityResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r_mean.abs().max(self.r_cos.abs()).max(self.r_sin.abs())
    }
}

pub fn solvability_residuals(profile: &SteadyProfile) -> Result<SolvabilityResiduals> {
    let grid = &profile.grid;
    let dx = grid.dx();
    let mut out = SolvabilityResiduals {
        r_mean: 0.0,
        r_cos: 0.0,
        r_sin: 0.0,
    };
    for (index, (&h, &x)) in profile.h.iter().zip(grid.nodes()).enumerate() {
        let y = h / profile.q;
        if !(y > 0.0) {
            return Err(Error::NonpositiveSample { index, value: y });
        }
        let g = 1.0 / (y * y) - 1.0 / (y * y * y);
        out.r_mean += g * dx;
        out.r_cos += g * x.cos() * dx;
        out.r_sin += g * x.sin() * dx;
    }
    out.r_cos -= profile.beta * grid.length() / 2.0;
    Ok(out)
}

/// Coefficients of the time-dependent equation whose steady states are
/// the surface-tension profiles: `a0 = a1 = χ/3`, `a2 = -μ/3`, `a3 = 1`,
/// with forcing `w = sin x` (see [`pukhnachov_forcing`]).
pub fn pukhnachov_params(mu: f64, chi: f64) -> Params {
    Params {
        a0: chi / 3.0,
        a1: chi / 3.0,
        a2: -mu / 3.0,
        a3: 1.0,
        ..Params::default()
    }
}

pub fn pukhnachov_forcing(grid: &PeriodicGrid) -> Forcing {
    Forcing::sine(grid, 1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n, PI).unwrap()
    }

    #[test]
    fn thresholds() {
        assert!((nonexistence_bound(1.0) - 0.942_809_041_582_063_4).abs() < 1e-15);
        assert!((nonexistence_bound(4.0) - 0.471_404_520_791_031_7).abs() < 1e-15);
        let q = 2.0 / 3.0 * 2f64.sqrt();
        assert!((beta(q, 1.0) - 8.0 / 27.0).abs() < 1e-15);
        assert!(beta_admissible(q, 1.0));
        assert!(!beta_admissible(q * 1.001, 1.0));
    }

    #[test]
    fn moffatt_small_flux_matches_asymptotics() {
        let g = grid(128);
        let out = moffatt_profile(0.1, 1.0, &g).unwrap();
        let p = out.profile().unwrap();
        for (h, x) in p.h.iter().zip(g.nodes()) {
            assert!((h - (0.1 + 0.001 / 3.0 * x.cos())).abs() < 1e-4);
        }
        assert!(p.residual_sup < 1e-15);
    }

    #[test]
    fn moffatt_existence_threshold() {
        let g = grid(128);
        assert!(!moffatt_profile(0.67, 1.0, &g).unwrap().exists());
        let p = moffatt_profile(0.66, 1.0, &g).unwrap();
        assert!(p.exists() && p.profile().unwrap().min_h() > 0.0);
        assert!(moffatt_profile(0.0, 1.0, &g).is_err());
    }

    #[test]
    fn moffatt_root_is_the_smooth_branch() {
        // on cos x < 0 the root is below q, above q where cos x > 0
        let g = grid(64);
        let p = moffatt_profile(0.5, 1.0, &g).unwrap();
        let p = p.profile().unwrap();
        for (h, x) in p.h.iter().zip(g.nodes()) {
            if x.cos() > 1e-12 {
                assert!(*h > 0.5);
            } else if x.cos() < -1e-12 {
                assert!(*h < 0.5);
            }
        }
    }

    #[test]
    fn operator_annihilates_first_harmonic_and_is_skew() {
        let g = grid(32);
        let l = collocation_operator(&g);
        let c: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let lc = &l * DVector::from_vec(c);
        assert!(lc.amax() < 1e-12);
        assert!((&l + l.transpose()).amax() < 1e-10);
        let s2: Vec<f64> = g.nodes().iter().map(|x| (2.0 * x).sin()).collect();
        let ls = &l * DVector::from_vec(s2);
        for (v, x) in ls.iter().zip(g.nodes()) {
            // (D³ + D) sin 2x = -8 cos 2x + 2 cos 2x
            assert!((v + 6.0 * (2.0 * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn small_flux_steady_state() {
        let g = grid(64);
        let p = pukhnachov_steady(0.1, 1.0, 1.0, &g, None).unwrap();
        assert!(p.converged && p.residual_sup < STEADY_TOL);
        for (h, x) in p.h.iter().zip(g.nodes()) {
            assert!((h - (0.1 + 0.001 * x.cos() / 3.0)).abs() < 1e-3);
        }
        let r = solvability_residuals(&p).unwrap();
        assert!(r.max_abs() < 1e-7);
        // a supplied guess reproduces the same state
        let again = pukhnachov_steady(0.1, 1.0, 1.0, &g, Some(&p.h)).unwrap();
        assert_eq!(again.newton_iterations, 1);
    }

    #[test]
    fn strong_surface_tension_flattens_the_film() {
        let g = grid(64);
        let p = pukhnachov_steady(0.1, 1.0, 1e4, &g, None).unwrap();
        assert!(p.residual_sup < STEADY_TOL);
        let spread = p.h.iter().copied().fold(f64::NEG_INFINITY, f64::max) - p.min_h();
        let weak = pukhnachov_steady(0.1, 1.0, 1.0, &g, None).unwrap();
        let weak_spread = weak.h.iter().copied().fold(f64::NEG_INFINITY, f64::max) - weak.min_h();
        assert!(spread < weak_spread);
    }

    #[test]
    fn solvability_of_constants() {
        let g = grid(32);
        let p = SteadyProfile::from_samples(&g, vec![0.2; 32], 0.2, 0.0, 1.0).unwrap();
        let r = solvability_residuals(&p).unwrap();
        assert_eq!((r.r_mean, r.r_cos, r.r_sin), (0.0, 0.0, 0.0));
        let p = SteadyProfile::from_samples(&g, vec![0.4; 32], 0.2, 0.0, 1.0).unwrap();
        let r = solvability_residuals(&p).unwrap();
        assert!((r.r_mean - PI / 4.0).abs() < 1e-14);
        assert!(r.r_cos.abs() < 1e-14 && r.r_sin.abs() < 1e-14);
        let p = SteadyProfile::from_samples(&g, vec![0.0; 32], 0.2, 0.0, 1.0).unwrap();
        assert!(solvability_residuals(&p).is_err());
    }

    #[test]
    fn steady_grid_must_hold_whole_periods() {
        let g = PeriodicGrid::new(32, 1.0).unwrap();
        assert!(pukhnachov_steady(0.1, 1.0, 1.0, &g, None).is_err());
    }
}
