use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use thinfilm_cli::{execute, parse_config, RunConfig, EXIT_NUMERICAL};

fn config(text: &str, out: &Path) -> RunConfig {
    let mut cfg = parse_config(text).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// Data lines of a csv, without the hash comment and the header.
fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn report_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("report.txt")).unwrap();
    let prefix = format!("{key} = ");
    let line = text
        .lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("{key} not in report"));
    line[prefix.len()..].split("  #").next().unwrap().trim().to_string()
}

fn profiles(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("profile_"))
        .collect();
    v.sort();
    v
}

const SHORT_FIG2: &str = "preset = \"fig2\"\nt_end = 0.2\noutput_times = [0.1]\n[grid]\nn = 64\n";

#[test]
fn zero_horizon_writes_one_profile_and_an_empty_series() {
    let dir = TempDir::new().unwrap();
    let run = execute(&config("preset = \"fig2\"\nt_end = 0.0\noutput_times = []", dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    assert_eq!(profiles(dir.path()), vec!["profile_0.csv"]);
    assert!(data_rows(&dir.path().join("series.csv")).is_empty());
    assert_eq!(data_rows(&dir.path().join("profile_0.csv")).len(), 256);
}

#[test]
fn series_has_one_row_per_accepted_step() {
    let dir = TempDir::new().unwrap();
    let run = execute(&config(SHORT_FIG2, dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    let accepted: usize = report_value(dir.path(), "steps.accepted").parse().unwrap();
    let rows = data_rows(&dir.path().join("series.csv"));
    assert_eq!(rows.len(), accepted);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(rows.last().unwrap()[0], 0.2);
    assert_eq!(
        profiles(dir.path()),
        vec!["profile_0.1.csv", "profile_0.2.csv", "profile_0.csv"]
    );
    let m0 = rows[0][1];
    assert!(rows.iter().all(|r| ((r[1] - m0) / m0).abs() < 1e-12));
}

#[test]
fn stride_thins_the_series() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    execute(&config(SHORT_FIG2, a.path())).unwrap();
    execute(&config(&format!("output_stride = 3\n{SHORT_FIG2}"), b.path())).unwrap();
    let full = data_rows(&a.path().join("series.csv"));
    let thin = data_rows(&b.path().join("series.csv"));
    assert_eq!(thin.len(), full.len() / 3);
    for (k, row) in thin.iter().enumerate() {
        assert_eq!(row, &full[3 * (k + 1) - 1]);
    }
}

#[test]
fn reruns_are_bit_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ra = execute(&config(SHORT_FIG2, a.path())).unwrap();
    let rb = execute(&config(SHORT_FIG2, b.path())).unwrap();
    assert_eq!(ra.files.len(), rb.files.len());
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        assert_eq!(fa.file_name(), fb.file_name());
        assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
    }
}

#[test]
fn every_output_carries_the_config_hash() {
    let dir = TempDir::new().unwrap();
    let cfg = config(SHORT_FIG2, dir.path());
    let run = execute(&cfg).unwrap();
    let tag = format!("config_sha256={}", cfg.hash());
    for f in &run.files {
        let first = fs::read_to_string(f).unwrap().lines().next().unwrap().to_string();
        assert!(first.starts_with("# thinfilm") && first.ends_with(&tag), "{first}");
    }
}

#[test]
fn bounds_on_fig2_hold_with_a_positive_local_time() {
    let dir = TempDir::new().unwrap();
    let run = execute(&config(&format!("mode = \"bounds\"\n{SHORT_FIG2}"), dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    let t_loc: f64 = report_value(dir.path(), "T_loc").parse().unwrap();
    assert!(t_loc > 0.0 && t_loc.is_finite());
    for k in [
        "energy_growth.holds",
        "h1_bound.holds",
        "interpolation.holds",
        "all_hold",
    ] {
        assert_eq!(report_value(dir.path(), k), "true", "{k}");
    }
}

#[test]
fn bounds_without_horizon_checks_the_initial_data() {
    let dir = TempDir::new().unwrap();
    let run = execute(&config("mode = \"bounds\"\npreset = \"fig4\"\nt_end = 0.0", dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    assert_eq!(report_value(dir.path(), "interpolation.holds"), "true");
    assert_eq!(report_value(dir.path(), "steps.accepted"), "0");
}

#[test]
fn small_sweep_reports_the_fold() {
    let dir = TempDir::new().unwrap();
    let text = "mode = \"sweep\"\n[grid]\nn = 32\n[sweep]\nq = [0.2, 0.4, 0.95]\nmu = [1.0]\nchi = [0.0, 1.0]";
    let run = execute(&config(text, dir.path())).unwrap();
    assert_eq!(run.exit_code, EXIT_NUMERICAL);
    let rows = data_rows(&dir.path().join("steady_sweep.csv"));
    assert_eq!(rows.len(), 6);
    let (mo, pu) = rows.split_at(3);
    assert!(mo.iter().all(|r| r[2] == 0.0) && pu.iter().all(|r| r[2] == 1.0));
    // q = 0.95 is past 2/3 (Moffatt) and past (2/3) sqrt(2) (coating)
    for r in [&mo[2], &pu[2]] {
        assert!(r[4].is_nan());
    }
    for r in [&mo[0], &mo[1], &pu[0], &pu[1]] {
        assert!(r[4] > 0.0);
        assert!(r[5].abs() < 1e-8 && r[6].abs() < 1e-8 && r[7].abs() < 1e-8, "{r:?}");
        assert!((r[8] - r[0] * r[0] / 3.0).abs() < 1e-15);
    }
}

#[test]
fn moffatt_nonexistence_is_reported_not_failed() {
    let dir = TempDir::new().unwrap();
    let text = "mode = \"steady\"\n[grid]\nn = 32\n[steady]\nkind = \"moffatt\"\nq = 0.7";
    let run = execute(&config(text, dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    assert_eq!(report_value(dir.path(), "exists"), "false");
    let threshold: f64 = report_value(dir.path(), "threshold").parse().unwrap();
    assert!((threshold - 2.0 / 3.0).abs() < 1e-15);
    assert!(!dir.path().join("steady_profile.csv").exists());
}

#[test]
fn pukhnachov_steady_report_cross_checks_the_profile() {
    let dir = TempDir::new().unwrap();
    let text = "mode = \"steady\"\n[grid]\nn = 64\n[steady]\nq = 0.4\ncross_check_n = 512";
    let run = execute(&config(text, dir.path())).unwrap();
    assert_eq!(run.exit_code, 0);
    assert_eq!(report_value(dir.path(), "converged"), "true");
    let r: f64 = report_value(dir.path(), "cross_check.steadiness_residual")
        .parse()
        .unwrap();
    assert!(r < 1e-5, "{r}");
    assert_eq!(data_rows(&dir.path().join("steady_profile.csv")).len(), 64);
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_thinfilm"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let ok = write("ok.toml", SHORT_FIG2);
    assert_eq!(binary(&["run", "--config", &ok, "--out", out, "--quiet"]).0, 0);
    assert!(dir.path().join("out/series.csv").exists());

    let missing = write("missing.toml", "[grid]\nn = 64");
    let (code, err) = binary(&["run", "--config", &missing, "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("t_end"), "{err}");
    // the subcommand picks the mode, so the same file is fine for steady
    assert_eq!(binary(&["steady", "--config", &missing, "--out", out, "--quiet"]).0, 0);

    let unknown = write("unknown.toml", "t_end = 1.0\nfoo = 1\n[grid]\nbar = 2");
    let (code, err) = binary(&["run", "--config", &unknown, "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("foo") && err.contains("grid.bar"), "{err}");

    let (code, _) = binary(&[
        "run",
        "--config",
        &dir.path().join("nope.toml").to_string_lossy(),
        "--out",
        out,
    ]);
    assert_eq!(code, 1);

    let (code, err) = binary(&["run", "--config", &ok, "--preset", "fig7", "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("fig7"), "{err}");
}

#[test]
fn dt_underflow_exits_two_and_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("u.toml");
    fs::write(
        &cfg,
        "preset = \"fig2\"\nt_end = 5.0\n[grid]\nn = 64\n[scheme]\npositivity_floor = 0.26\ndt_min = 1e-6\ndt_init = 1e-6\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (code, _) = binary(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 2);
    assert_eq!(report_value(&out, "status"), "dt_underflow");
    let t: f64 = report_value(&out, "final.t").parse().unwrap();
    assert!(t > 0.0 && t < 5.0);
    let rows = data_rows(&out.join("series.csv"));
    assert!(!rows.is_empty());
    assert_eq!(rows.last().unwrap()[0], t);
    assert_eq!(profiles(&out).len(), 2);
}
