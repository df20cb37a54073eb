//! Running a validated configuration and writing its outputs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thinfilm::diagnostics::{
    apriori_constants, continuation_times, energy_bound_check, interpolation_bound_check, steadiness_residual,
    BoundVerdict, DiagnosticsSeries,
};
use thinfilm::solver::{evolve, RunEvent, Trajectory};
use thinfilm::spectral::resample;
use thinfilm::steady::{
    beta, beta_admissible, continue_branch, moffatt_profile, nonexistence_bound, pukhnachov_forcing, pukhnachov_params,
    pukhnachov_steady, solvability_residuals, MoffattOutcome, SteadyProfile,
};
use thinfilm::{FilmState, Forcing, PeriodicGrid};

use crate::config::{ConfigError, Mode, RunConfig, SteadyKind};
use crate::output::{fmt_f64, profile_path, Csv, Report};

/// Exit status for numerical events (dt underflow, failed continuation).
pub const EXIT_NUMERICAL: i32 = 2;
/// Exit status for configuration and I/O errors.
pub const EXIT_CONFIG: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerics(#[from] thinfilm::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Writer {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Writer {
    fn csv(&mut self, name: &Path, csv: &Csv) -> Result<(), ExecError> {
        csv.write(name).map_err(|source| ExecError::Io {
            path: name.to_path_buf(),
            source,
        })?;
        self.files.push(name.to_path_buf());
        Ok(())
    }

    fn report(&mut self, report: &Report) -> Result<(), ExecError> {
        let path = self.dir.join("report.txt");
        report.write(&path).map_err(|source| ExecError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs `cfg` in its configured mode, writing into `cfg.output_dir`.
pub fn execute(cfg: &RunConfig) -> Result<Execution, ExecError> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|source| ExecError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut w = Writer {
        dir,
        hash: cfg.hash(),
        files: Vec::new(),
    };
    let (exit_code, summary) = match cfg.mode {
        Mode::Run => run_mode(cfg, &mut w)?,
        Mode::Bounds => bounds_mode(cfg, &mut w)?,
        Mode::Steady => steady_mode(cfg, &mut w)?,
        Mode::Sweep => sweep_mode(cfg, &mut w)?,
    };
    Ok(Execution {
        exit_code,
        files: w.files,
        summary,
    })
}

const SERIES_HEADER: [&str; 8] = [
    "t",
    "mass",
    "energy_E0",
    "entropy_G",
    "h1_sq",
    "l2_sq",
    "min_h",
    "max_h",
];

/// One row per accepted step (every `stride`-th); the initial state is
/// not a step and is left out.
fn write_series(w: &mut Writer, series: &DiagnosticsSeries, stride: usize) -> Result<(), ExecError> {
    let mut csv = Csv::new("series", &w.hash, &SERIES_HEADER);
    for (step, r) in series.rows().enumerate().skip(1) {
        if step % stride == 0 {
            csv.floats(&[
                r.t,
                r.mass,
                r.energy_e0,
                r.entropy_g,
                r.h1_sq,
                r.l2_sq,
                r.min_h,
                r.max_h,
            ]);
        }
    }
    let path = w.dir.join("series.csv");
    w.csv(&path, &csv)
}

fn write_profile(w: &mut Writer, path: PathBuf, grid: &PeriodicGrid, h: &[f64]) -> Result<(), ExecError> {
    let mut csv = Csv::new("profile", &w.hash, &["x", "h"]);
    for (x, h) in grid.nodes().iter().zip(h) {
        csv.floats(&[*x, *h]);
    }
    w.csv(&path, &csv)
}

fn verdict_lines(report: &mut Report, v: &BoundVerdict) {
    let k = &v.bound_name;
    report.line(&format!("{k}.holds"), v.holds);
    report.float(&format!("{k}.worst_margin"), v.worst_margin);
    report.float(&format!("{k}.worst_time"), v.worst_time);
    report.float(&format!("{k}.tolerance"), v.tolerance);
}

fn config_lines(report: &mut Report, cfg: &RunConfig) {
    report.section("config");
    for (k, v) in cfg.flattened() {
        report.line(&k, v);
    }
}

fn trajectory_lines(report: &mut Report, traj: &Trajectory) {
    let log = &traj.step_log;
    report.section("run");
    report.line("status", if traj.completed() { "completed" } else { "dt_underflow" });
    if let Some(RunEvent::DtUnderflow { t, dt, last_rejection }) = &traj.event {
        report.float("event.t", *t);
        report.float("event.dt", *dt);
        report.line("event.last_rejection", last_rejection);
    }
    report.line("grid.n", traj.metadata.n);
    report.float("grid.half_length", traj.metadata.half_length);
    report.line("forcing", &traj.metadata.forcing);
    report.line("regularized", traj.metadata.regularized);
    report.line("steps.accepted", log.accepted);
    report.line("steps.rejected", log.rejected);
    report.line("steps.rejected_newton", log.rejected_newton);
    report.line("steps.rejected_positivity", log.rejected_positivity);
    report.line("steps.rejected_singular", log.rejected_singular);
    report.line("steps.rejected_nonfinite", log.rejected_nonfinite);
    report.line("newton.iterations", log.newton_iterations);
    if let (Some(lo), Some(hi)) = (log.min_dt(), log.max_dt()) {
        report.float("dt.min", lo);
        report.float("dt.max", hi);
    }
    let last = traj.final_state();
    report.float("final.t", last.t);
    report.float("final.min_h", last.min());
    report.float("final.max_h", last.max());
    report.float("mass.max_relative_drift", traj.diagnostics.max_relative_mass_drift());
}

/// Constants, the bound verdicts along `series` and `snapshots`, and the
/// continuation times.
fn bounds_lines(
    report: &mut Report,
    cfg: &RunConfig,
    grid: &PeriodicGrid,
    forcing: &Forcing,
    h0: &FilmState,
    series: &DiagnosticsSeries,
    snapshots: &[FilmState],
) -> bool {
    report.section("constants");
    let constants = match apriori_constants(&cfg.params, forcing, grid, h0, cfg.alpha) {
        Ok(c) => c,
        Err(e) => {
            report.line("error", e);
            return false;
        }
    };
    for p in &constants.provenance {
        report.derived(&p.name, p.value, &p.formula);
    }

    report.section("verdicts");
    let energy = energy_bound_check(series, &constants);
    verdict_lines(report, &energy.energy_growth);
    verdict_lines(report, &energy.h1_bound);
    // holds is decided by the least slack, so the worst snapshot speaks for all
    let interp = snapshots
        .iter()
        .map(|s| interpolation_bound_check(s, grid))
        .min_by(|a, b| (a.worst_margin + a.tolerance).total_cmp(&(b.worst_margin + b.tolerance)));
    let mut all = energy.energy_growth.holds && energy.h1_bound.holds;
    if let Some(v) = interp {
        verdict_lines(report, &v);
        all &= v.holds;
    }
    report.line("all_hold", all);

    report.section("continuation");
    let times: Vec<String> = continuation_times(series, &constants, 8)
        .iter()
        .map(|t| fmt_f64(*t))
        .collect();
    report.line("times", format!("[{}]", times.join(", ")));
    all
}

fn run_mode(cfg: &RunConfig, w: &mut Writer) -> Result<(i32, String), ExecError> {
    let grid = cfg.build_grid()?;
    let forcing = cfg.build_forcing()?;
    let h0 = cfg.start_state()?;
    let t_end = cfg.t_end.ok_or(ConfigError::Missing("t_end"))?;
    let traj = evolve(&h0, t_end, &cfg.output_times, &cfg.params, &forcing, &grid, &cfg.scheme)?;

    write_series(w, &traj.diagnostics, cfg.output_stride)?;
    for s in &traj.snapshots {
        write_profile(w, profile_path(&w.dir, s.t), &grid, &s.h)?;
    }
    let mut report = Report::new(&w.hash);
    report.line("mode", "run");
    trajectory_lines(&mut report, &traj);
    report.float(
        "final.steadiness_residual",
        steadiness_residual(traj.final_state(), &cfg.params, &forcing, &grid, &cfg.scheme)?,
    );
    bounds_lines(
        &mut report,
        cfg,
        &grid,
        &forcing,
        &h0,
        &traj.diagnostics,
        &traj.snapshots,
    );
    config_lines(&mut report, cfg);
    w.report(&report)?;

    let code = if traj.completed() { 0 } else { EXIT_NUMERICAL };
    let summary = format!(
        "run: {} accepted / {} rejected steps to t = {}{}",
        traj.step_log.accepted,
        traj.step_log.rejected,
        traj.final_state().t,
        if traj.completed() { "" } else { " (dt underflow)" }
    );
    Ok((code, summary))
}

fn bounds_mode(cfg: &RunConfig, w: &mut Writer) -> Result<(i32, String), ExecError> {
    let grid = cfg.build_grid()?;
    let forcing = cfg.build_forcing()?;
    let h0 = cfg.start_state()?;
    let t_end = cfg.t_end.unwrap_or(h0.t);
    let traj = evolve(&h0, t_end, &cfg.output_times, &cfg.params, &forcing, &grid, &cfg.scheme)?;
    let mut report = Report::new(&w.hash);
    report.line("mode", "bounds");
    trajectory_lines(&mut report, &traj);
    let all = bounds_lines(
        &mut report,
        cfg,
        &grid,
        &forcing,
        &h0,
        &traj.diagnostics,
        &traj.snapshots,
    );
    config_lines(&mut report, cfg);
    w.report(&report)?;
    let code = if traj.completed() { 0 } else { EXIT_NUMERICAL };
    Ok((code, format!("bounds: all verdicts hold = {all}")))
}

fn steady_profile_lines(report: &mut Report, p: &SteadyProfile) -> Result<(), ExecError> {
    report.float("q", p.q);
    report.float("mu", p.mu);
    report.float("chi", p.chi);
    report.derived("beta", p.beta, "q^2 mu / 3");
    report.derived("gamma", p.gamma, "chi q^3 / 3");
    report.line("converged", p.converged);
    report.float("residual_sup", p.residual_sup);
    report.line("newton_iterations", p.newton_iterations);
    report.float("min_h", p.min_h());
    report.line("beta_admissible", beta_admissible(p.q, p.mu));
    report.derived("nonexistence_bound", nonexistence_bound(p.mu), "(2/3) sqrt(2/mu)");
    let r = solvability_residuals(p)?;
    report.float("solvability.r_mean", r.r_mean);
    report.float("solvability.r_cos", r.r_cos);
    report.float("solvability.r_sin", r.r_sin);
    Ok(())
}

fn steady_mode(cfg: &RunConfig, w: &mut Writer) -> Result<(i32, String), ExecError> {
    let grid = cfg.build_grid()?;
    let s = &cfg.steady;
    let mut report = Report::new(&w.hash);
    report.line("mode", "steady");
    report.section("steady");
    let (code, summary) = match s.kind {
        SteadyKind::Moffatt => {
            report.line("kind", "moffatt");
            match moffatt_profile(s.q, s.mu, &grid)? {
                MoffattOutcome::Profile(p) => {
                    report.line("exists", true);
                    report.derived(
                        "threshold",
                        thinfilm::steady::moffatt_threshold(s.mu),
                        "2 / (3 sqrt(mu))",
                    );
                    report.float("q", p.q);
                    report.float("mu", p.mu);
                    report.float("residual_sup", p.residual_sup);
                    report.float("min_h", p.min_h());
                    write_profile(w, w.dir.join("steady_profile.csv"), &grid, &p.h)?;
                    (0, format!("steady: Moffatt profile at q = {}", s.q))
                }
                MoffattOutcome::Nonexistent { threshold, node } => {
                    report.line("exists", false);
                    report.derived("threshold", threshold, "2 / (3 sqrt(mu))");
                    report.float("lost_at_x", grid.nodes()[node]);
                    (
                        0,
                        format!("steady: no Moffatt profile at q = {} (threshold {threshold})", s.q),
                    )
                }
            }
        }
        SteadyKind::Pukhnachov => {
            report.line("kind", "pukhnachov");
            match pukhnachov_steady(s.q, s.mu, s.chi, &grid, None) {
                Ok(p) => {
                    steady_profile_lines(&mut report, &p)?;
                    let fine = PeriodicGrid::new(s.cross_check_n, grid.half_length())?;
                    let state = FilmState::new(&fine, resample(&p.h, s.cross_check_n), 0.0)?;
                    let r = steadiness_residual(
                        &state,
                        &pukhnachov_params(s.mu, s.chi),
                        &pukhnachov_forcing(&fine),
                        &fine,
                        &cfg.scheme,
                    )?;
                    report.line("cross_check.n", s.cross_check_n);
                    report.float("cross_check.steadiness_residual", r);
                    write_profile(w, w.dir.join("steady_profile.csv"), &grid, &p.h)?;
                    (0, format!("steady: converged at q = {}", s.q))
                }
                Err(thinfilm::Error::ContinuationFailed {
                    attempted_q,
                    last_converged_q,
                }) => {
                    report.line("converged", false);
                    report.float("failed_at_q", attempted_q);
                    report.line("last_converged_q", last_converged_q.map_or("none".to_string(), fmt_f64));
                    (
                        EXIT_NUMERICAL,
                        format!("steady: continuation failed at q = {attempted_q}"),
                    )
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    config_lines(&mut report, cfg);
    w.report(&report)?;
    Ok((code, summary))
}

struct SweepRow {
    q: f64,
    mu: f64,
    chi: f64,
    profile: Option<SteadyProfile>,
}

struct PairResult {
    mu: f64,
    chi: f64,
    rows: Vec<SweepRow>,
    failed_at: Option<f64>,
    last_converged: Option<f64>,
}

fn sweep_pair(mu: f64, chi: f64, qs: &[f64], grid: &PeriodicGrid) -> Result<PairResult, thinfilm::Error> {
    if chi == 0.0 {
        let rows = qs
            .iter()
            .map(|&q| {
                let profile = match moffatt_profile(q, mu, grid)? {
                    MoffattOutcome::Profile(p) => Some(p),
                    MoffattOutcome::Nonexistent { .. } => None,
                };
                Ok(SweepRow { q, mu, chi, profile })
            })
            .collect::<Result<Vec<_>, thinfilm::Error>>()?;
        return Ok(PairResult {
            mu,
            chi,
            rows,
            failed_at: None,
            last_converged: None,
        });
    }
    let branch = continue_branch(mu, chi, grid, qs)?;
    let rows = qs
        .iter()
        .map(|&q| SweepRow {
            q,
            mu,
            chi,
            profile: branch.profiles.iter().find(|p| p.q == q).cloned(),
        })
        .collect();
    Ok(PairResult {
        mu,
        chi,
        rows,
        failed_at: branch.failed_at,
        last_converged: branch.last_converged_q(),
    })
}

fn sweep_mode(cfg: &RunConfig, w: &mut Writer) -> Result<(i32, String), ExecError> {
    let grid = cfg.build_grid()?;
    let s = &cfg.sweep;
    let pairs: Vec<(f64, f64)> = s.mu.iter().flat_map(|&m| s.chi.iter().map(move |&c| (m, c))).collect();
    let results = pairs
        .par_iter()
        .map(|&(mu, chi)| sweep_pair(mu, chi, &s.q, &grid))
        .collect::<Result<Vec<_>, _>>()?;

    let header = [
        "q",
        "mu",
        "chi",
        "converged",
        "min_h",
        "r_mean",
        "r_cos",
        "r_sin",
        "beta",
    ];
    let mut csv = Csv::new("steady_sweep", &w.hash, &header);
    let mut report = Report::new(&w.hash);
    report.line("mode", "sweep");
    report.section("sweep");
    let (mut converged, mut failures) = (0usize, 0usize);
    for pair in &results {
        for r in &pair.rows {
            let (ok, min_h, res) = match &r.profile {
                Some(p) => (true, p.min_h(), Some(solvability_residuals(p)?)),
                None => (false, f64::NAN, None),
            };
            converged += usize::from(ok);
            let nan = f64::NAN;
            let (rm, rc, rs) = res.map_or((nan, nan, nan), |r| (r.r_mean, r.r_cos, r.r_sin));
            csv.row(&[
                fmt_f64(r.q),
                fmt_f64(r.mu),
                fmt_f64(r.chi),
                ok.to_string(),
                fmt_f64(min_h),
                fmt_f64(rm),
                fmt_f64(rc),
                fmt_f64(rs),
                fmt_f64(beta(r.q, r.mu)),
            ]);
        }
        let key = format!("pair.mu={}.chi={}", pair.mu, pair.chi);
        if let Some(q) = pair.failed_at {
            failures += 1;
            report.float(&format!("{key}.failed_at_q"), q);
            report.line(
                &format!("{key}.last_converged_q"),
                pair.last_converged.map_or("none".to_string(), fmt_f64),
            );
        } else {
            report.line(&format!("{key}.failed_at_q"), "none");
        }
    }
    report.line("rows", results.iter().map(|p| p.rows.len()).sum::<usize>());
    report.line("rows.converged", converged);
    report.line("continuation_failures", failures);
    config_lines(&mut report, cfg);
    let path = w.dir.join("steady_sweep.csv");
    w.csv(&path, &csv)?;
    w.report(&report)?;
    let code = if failures == 0 { 0 } else { EXIT_NUMERICAL };
    Ok((
        code,
        format!("sweep: {converged} converged rows, {failures} continuation failures"),
    ))
}
