//! End-to-end acceptance suite. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinfilm::diagnostics::{
    apriori_constants, b_chain, energy_bound_check, even_asymmetry, interpolation_bound_check, steadiness_residual,
};
use thinfilm::mobility::{entropy_g, entropy_g_alpha, entropy_g_prime, mobility, mobility_derivative, MobilitySpec};
use thinfilm::model::{lift_initial_data, sample_initial_data, FilmState, Forcing, InitialData, Params, PeriodicGrid};
use thinfilm::solver::{dispersion_growth_rate, evolve, FaceRule, SchemeOptions, Trajectory};
use thinfilm::spectral::real_coefficients;
use thinfilm::steady::{beta, continue_branch, moffatt_profile, nonexistence_bound, solvability_residuals};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid(n: usize) -> PeriodicGrid {
    PeriodicGrid::new(n, PI).unwrap()
}

struct Fig2Run {
    grid: PeriodicGrid,
    params: Params,
    forcing: Forcing,
    traj: Trajectory,
    seconds: f64,
}

/// Options of the fig2 preset: entropic faces keep the draining film off zero.
fn fig2_options() -> SchemeOptions {
    SchemeOptions {
        face_mobility_rule: FaceRule::EntropicMean,
        ..SchemeOptions::default()
    }
}

fn fig2_run() -> &'static Fig2Run {
    static RUN: OnceLock<Fig2Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let g = grid(256);
        let params = Params {
            a0: 1.0,
            a1: 16.0,
            epsilon: 1e-6,
            ..Params::default()
        };
        let forcing = Forcing::none(&g);
        let h0 = sample_initial_data(&InitialData::Fig2, &g).unwrap();
        let h0 = lift_initial_data(&h0, params.epsilon, params.theta).unwrap();
        let start = std::time::Instant::now();
        let traj = evolve(
            &h0,
            140.0,
            &[12.0, 12.5, 13.0, 15.0],
            &params,
            &forcing,
            &g,
            &fig2_options(),
        )
        .unwrap();
        Fig2Run {
            grid: g,
            params,
            forcing,
            traj,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn mass_conservation() -> Outcome {
    let run = fig2_run();
    let drift = run.traj.diagnostics.max_relative_mass_drift();
    let done = run.traj.completed();
    outcome(
        done && drift < 1e-8,
        format!(
            "fig2 to t=140: {} accepted steps in {:.1}s, max |M(t)-M(0)|/M(0) = {drift:.2e} (< 1e-8), completed = {done}",
            run.traj.step_log.accepted, run.seconds
        ),
    )
}

fn energy_dissipation() -> Outcome {
    let run = fig2_run();
    let e = &run.traj.diagnostics.energy_e0;
    let worst_increase = e
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = run.traj.final_state();
    let steady = steadiness_residual(last, &run.params, &run.forcing, &run.grid, &fig2_options()).unwrap();
    let asym = even_asymmetry(last, &run.grid);
    outcome(
        run.traj.completed() && worst_increase <= 1e-8 && steady < 1e-6 && asym < 1e-6,
        format!(
            "max relative per-step energy increase {worst_increase:.2e} (<= 1e-8), final steadiness {steady:.2e} (< 1e-6), even asymmetry {asym:.2e} (< 1e-6)"
        ),
    )
}

fn dispersion_relation() -> Outcome {
    let g = grid(256);
    let params = Params {
        a0: 1.0,
        a1: 16.0,
        epsilon: 0.0,
        delta: 0.0,
        ..Params::default()
    };
    let opts = SchemeOptions {
        dt_init: 1e-3,
        dt_max: 1e-3,
        ..SchemeOptions::default()
    };
    let times: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, expected) in [(1u32, 0.405), (2, 1.296), (3, 1.701)] {
        let sigma = dispersion_growth_rate(k, 0.3, &params);
        let h: Vec<f64> = g.nodes().iter().map(|x| 0.3 + 1e-6 * (k as f64 * x).cos()).collect();
        let traj = evolve(
            &FilmState::new(&g, h, 0.0).unwrap(),
            2.0,
            &times,
            &params,
            &Forcing::none(&g),
            &g,
            &opts,
        )
        .unwrap();
        // least-squares slope of ln(amplitude) against t
        let pts: Vec<(f64, f64)> = traj
            .snapshots
            .iter()
            .map(|s| {
                let (_, c, sn) = real_coefficients(&s.h, g.length());
                let i = k as usize - 1;
                (s.t, c[i].hypot(sn[i]).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ma = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - ma)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        let rel = (slope - expected).abs() / expected;
        pass &= traj.completed() && rel < 0.05 && (sigma - expected).abs() < 1e-3;
        parts.push(format!("k={k}: {slope:.4} vs {expected} ({:.2}%)", 100.0 * rel));
    }
    outcome(pass, parts.join(", "))
}

fn constancy() -> Outcome {
    let g = grid(128);
    let params = Params {
        a0: 1.0,
        a1: 0.1,
        epsilon: 1e-6,
        ..Params::default()
    };
    let traj = evolve(
        &FilmState::constant(&g, 0.3),
        10.0,
        &[],
        &params,
        &Forcing::none(&g),
        &g,
        &SchemeOptions::default(),
    )
    .unwrap();
    let d = &traj.diagnostics;
    let dev = d
        .min_h
        .iter()
        .chain(&d.max_h)
        .map(|v| (v - 0.3).abs())
        .fold(0.0, f64::max);
    outcome(
        traj.completed() && dev < 1e-12,
        format!(
            "|Ω| = 2π, h0 = 0.3 over {} steps: max deviation {dev:.2e} (< 1e-12)",
            traj.step_log.accepted
        ),
    )
}

fn forced_params(a3: f64) -> Params {
    Params {
        a0: 1.0,
        a1: 16.0,
        a2: 8.0,
        a3,
        epsilon: 1e-4,
        ..Params::default()
    }
}

fn forced_run(params: &Params, t_end: f64) -> (PeriodicGrid, Forcing, FilmState, Trajectory) {
    let g = grid(256);
    // w = -sin x so that w' = -cos x
    let forcing = Forcing::sine(&g, 1.0, -1.0);
    let h0 = lift_initial_data(&FilmState::constant(&g, 0.3), params.epsilon, params.theta).unwrap();
    let opts = SchemeOptions {
        face_mobility_rule: FaceRule::EntropicMean,
        ..SchemeOptions::default()
    };
    let traj = evolve(&h0, t_end, &[], params, &forcing, &g, &opts).unwrap();
    (g, forcing, h0, traj)
}

fn positivity() -> Outcome {
    let (_, _, _, traj) = forced_run(&forced_params(0.0), 50.0);
    let min = traj.diagnostics.min_h.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        traj.completed() && min > 0.0,
        format!(
            "fig3 with entropic faces to t=50: {} steps, min h over all steps {min:.4e} (> 0)",
            traj.step_log.accepted
        ),
    )
}

fn h1_bound() -> Outcome {
    let params = forced_params(3.0);
    let (g, forcing, h0, traj) = forced_run(&params, 20.0);
    let c = apriori_constants(&params, &forcing, &g, &h0, None).unwrap();
    let v = energy_bound_check(&traj.diagnostics, &c);
    let d = &traj.diagnostics;
    let bounded = d.l2_sq.iter().chain(&d.h1_sq).all(|v| v.is_finite());
    outcome(
        traj.completed() && v.h1_bound.holds && bounded,
        format!(
            "fig4 to t=20: H¹ bound worst margin {:.4e} at t = {:.3}, K = {:.4e}, K3 = {:.4e}, norms finite = {bounded}",
            v.h1_bound.worst_margin, v.h1_bound.worst_time, c.k_uniform, c.k3_uniform
        ),
    )
}

fn moffatt_threshold() -> Outcome {
    let g = grid(128);
    let mut pass = true;
    let mut parts = Vec::new();
    for mu in [0.5, 1.0, 2.0, 4.0] {
        let exists = |q: f64| moffatt_profile(q, mu, &g).unwrap().exists();
        let (mut lo, mut hi) = (1e-3, 2.0 / mu.sqrt());
        assert!(exists(lo) && !exists(hi));
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if exists(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let err = (0.5 * (lo + hi) - 2.0 / (3.0 * mu.sqrt())).abs();
        pass &= err < 1e-6;
        parts.push(format!("μ={mu}: {err:.1e}"));
    }
    let p = moffatt_profile(0.1, 1.0, &g).unwrap();
    let asym = p
        .profile()
        .map(|p| {
            p.h.iter()
                .zip(g.nodes())
                .map(|(h, x)| (h - (0.1 + 1e-3 * x.cos() / 3.0)).abs())
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::INFINITY);
    pass &= asym < 1e-4;
    outcome(
        pass,
        format!(
            "transition error {} (< 1e-6); q=0.1 asymptotic gap {asym:.2e} (< 1e-4)",
            parts.join(", ")
        ),
    )
}

fn nonexistence() -> Outcome {
    let bound = nonexistence_bound(1.0);
    let g = grid(128);
    let branch = continue_branch(1.0, 1.0, &g, &[0.943]).unwrap();
    let failed = branch.failed_at.is_some() && !branch.reached(0.943);
    let last = branch.last_converged_q().unwrap_or(f64::NAN);
    let max_beta = branch.profiles.iter().map(|p| beta(p.q, p.mu)).fold(0.0, f64::max);
    let max_res = branch
        .profiles
        .iter()
        .map(|p| solvability_residuals(p).map(|r| r.max_abs()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    outcome(
        (bound - 0.942_809_041_582_063).abs() < 1e-12
            && failed
            && max_beta <= 8.0 / 27.0 + 1e-12
            && max_res < 1e-7
            && !branch.profiles.is_empty(),
        format!(
            "bound(1) = {bound:.6}; continuation lost at q = {:?} after {} points, last converged q = {last:.5}, max β = {max_beta:.6} (<= 8/27), max solvability residual {max_res:.1e} (< 1e-7)",
            branch.failed_at,
            branch.profiles.len()
        ),
    )
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

fn second_difference(g: impl Fn(f64) -> f64, z: f64) -> f64 {
    let h = 1e-4 * z;
    (g(z + h) - 2.0 * g(z) + g(z - h)) / (h * h)
}

fn entropy_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for eps in [0.0, 1e-4, 1e-2] {
        let spec = MobilitySpec::new(0.0, eps);
        for z in log_grid(0.1, 10.0, 200) {
            let d2 = second_difference(|s| entropy_g(s, spec).unwrap(), z);
            worst = worst.max((d2 * mobility(z, spec) - 1.0).abs());
            for alpha in [-0.25, 0.5] {
                let d2 = second_difference(|s| entropy_g_alpha(s, alpha, eps).unwrap(), z);
                worst = worst.max((d2 * mobility(z, spec) / z.powf(alpha) - 1.0).abs());
            }
        }
    }
    // pointwise bounds, and the integral bound by composite Simpson
    let mut bounds_ok = true;
    let eps_max = (33f64.sqrt() - 3.0) / 4.0;
    for eps in [1e-6, 1e-4, 1e-2, 0.3, 0.99 * eps_max] {
        let spec = MobilitySpec::new(0.0, eps);
        let fg = |s: f64| mobility(s, spec) * entropy_g_prime(s, spec).unwrap();
        for z in log_grid(1e-6, 1e3, 400) {
            let gp = entropy_g_prime(z, spec).unwrap();
            bounds_ok &= fg(z).abs() <= 0.5 * z * (1.0 + 1e-14);
            bounds_ok &= (mobility_derivative(z, spec) * gp).abs() <= 2.0 * (1.0 + 1e-14);
            let m = 2000;
            let h = z / m as f64;
            let simpson: f64 = (0..m)
                .map(|i| {
                    let a = i as f64 * h;
                    let fa = if a == 0.0 { 0.0 } else { fg(a) };
                    (fa + 4.0 * fg(a + 0.5 * h) + fg(a + h)) * h / 6.0
                })
                .sum();
            bounds_ok &= simpson.abs() <= 0.5 * z * z + 0.6;
        }
    }
    outcome(
        worst < 1e-5 && bounds_ok,
        format!("max relative error of G'' f and G_α'' f / z^α: {worst:.2e} (< 1e-5); pointwise entropy bounds hold = {bounds_ok}"),
    )
}

fn interpolation_inequality() -> Outcome {
    let g = grid(128);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0041);
    let mut worst = f64::INFINITY;
    let mut all = true;
    for _ in 0..1000 {
        let modes = rng.random_range(1..=12usize);
        let cos: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sin: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| {
                (0..modes)
                    .map(|k| {
                        let kx = (k + 1) as f64 * x;
                        cos[k] * kx.cos() + sin[k] * kx.sin()
                    })
                    .sum()
            })
            .collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let lift = rng.random_range(0.0..2.0);
        let h: Vec<f64> = raw.iter().map(|v| v - lo + lift).collect();
        let v = interpolation_bound_check(&FilmState::new(&g, h, 0.0).unwrap(), &g);
        all &= v.holds;
        worst = worst.min(v.worst_margin);
    }
    let mut sharp: f64 = 0.0;
    for c in [1e-3, 0.3, 1.0, 7.5] {
        sharp = sharp.max(
            interpolation_bound_check(&FilmState::constant(&g, c), &g)
                .worst_margin
                .abs(),
        );
    }
    outcome(
        all && sharp < 1e-12,
        format!("1000 seeded polynomials hold = {all} (least margin {worst:.3e}); constants gap {sharp:.1e} (< 1e-12)"),
    )
}

fn constants_calculator() -> Outcome {
    let b1 = b_chain(2.0, 2.0 * PI).b1;
    let g = grid(256);
    let params = Params {
        a0: 1.0,
        a1: 16.0,
        epsilon: 1e-6,
        ..Params::default()
    };
    let f = Forcing::none(&g);
    let h0 = sample_initial_data(&InitialData::Fig2, &g).unwrap();
    let t_loc: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|s| {
            // scale the perturbation about the mean 0.3, so only ∫h0_x² grows
            let scaled = FilmState::new(&g, h0.h.iter().map(|v| 0.3 + (v - 0.3) * s).collect(), 0.0).unwrap();
            let lifted = lift_initial_data(&scaled, params.epsilon, params.theta).unwrap();
            apriori_constants(&params, &f, &g, &lifted, None).unwrap().t_loc
        })
        .collect();
    let lifted = lift_initial_data(&h0, params.epsilon, params.theta).unwrap();
    let c3 = apriori_constants(&params, &f, &g, &lifted, None).unwrap().c3;
    let pass = (b1 - PI * PI).abs() < 1e-12
        && (c3 - 16.0 * 16.0 / 2.0).abs() < 1e-12
        && t_loc[0] > 0.0
        && t_loc.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        pass,
        format!("b1(2, 2π) = {b1:.12}, c3 = {c3}, T_loc at scale 1, 2, 4 = {t_loc:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("mass conservation", mass_conservation),
        ("energy dissipation", energy_dissipation),
        ("dispersion relation", dispersion_relation),
        ("constancy of small-domain flat films", constancy),
        ("positivity under regularization", positivity),
        ("H1 linear-in-time bound", h1_bound),
        ("Moffatt threshold", moffatt_threshold),
        ("steady-state nonexistence bound", nonexistence),
        ("entropy identities", entropy_identities),
        ("interpolation inequality", interpolation_inequality),
        ("constants calculator", constants_calculator),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(name, f)| {
                s.spawn(move || {
                    let start = std::time::Instant::now();
                    let r = f();
                    eprintln!("  finished {name} in {:.1}s", start.elapsed().as_secs_f64());
                    r
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| outcome(false, "panicked".to_string())))
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        let tag = if r.pass { "[PASS]" } else { "[FAIL]" };
        failed += usize::from(!r.pass);
        println!("{tag} {:>2} {name}: {}", i + 1, r.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
