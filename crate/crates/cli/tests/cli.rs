use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use viana_cli::report::{parse_summary, PLOT_HEIGHT, PLOT_WIDTH, TAILS_HEADER};

const SMALL: &str = "\
[map]
kind = f1
a = 1.5436890126920764
alpha = 0.01
beta = 2

[run]
seed = 11
ensemble_size = 500
burn_in = 1000
horizon = 60
n_list = 0:60:5

[stats]
c = 0.2223
delta = 0.00628
";

fn viana(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viana")).args(args).output().expect("spawn viana")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(command: &str, config: &str, out: &Path) {
    let o = viana(&[command, "--config", config, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

fn summary(path: &Path) -> Vec<(String, String)> {
    parse_summary(&fs::read_to_string(path).unwrap())
}

fn lookup(pairs: &[(String, String)], key: &str) -> f64 {
    let v = &pairs.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1;
    v.parse().unwrap()
}

#[test]
fn config_errors_exit_with_code_2_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("beta = 2", "beta = 0.5"));
    let o = viana(&["tails", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("beta > 1"), "{err}");

    let cfg = write_config(dir.path(), &format!("{SMALL}kappa = 0.3\n"));
    let o = viana(&["tails", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < kappa < 1/4"));

    let cfg = write_config(dir.path(), &format!("{SMALL}colour = blue\n"));
    assert_eq!(viana(&["tails", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn tails_writes_the_documented_schema_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    run_ok("tails", &cfg, &out);

    let csv = fs::read_to_string(out.join("tails.csv")).unwrap();
    let mut lines = csv.lines();
    let hash_line = lines.next().unwrap();
    assert!(hash_line.starts_with("# config_sha256="));
    assert_eq!(lines.next(), Some(TAILS_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 * 13);
    for r in &rows {
        assert_eq!(r.len(), 5);
        let p: f64 = r[2].parse().unwrap();
        let count: u64 = r[3].parse().unwrap();
        let size: u64 = r[4].parse().unwrap();
        assert!((p - count as f64 / size as f64).abs() < 1e-15);
    }

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let hash = hash_line.trim_start_matches("# config_sha256=");
    for key in ["command=tails", "seed=11", "status=ok", &format!("config_sha256={hash}")] {
        assert!(manifest.lines().any(|l| l == key), "missing {key}");
    }
    assert!(manifest.contains(&format!("schema.tails.csv=v1:{TAILS_HEADER}")));
    assert!(manifest.lines().any(|l| l.starts_with("wall_time_ms=")));
    assert!(out.join("tails.svg").exists());
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok("tails", &cfg, out);
        run_ok("correlation", &cfg, out);
    }
    for file in ["tails.csv", "tails.svg", "correlation.csv", "tails_summary.txt"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let c = dir.path().join("c");
    let o = viana(&["tails", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(fs::read(a.join("tails.csv")).unwrap(), fs::read(c.join("tails.csv")).unwrap());
}

/// `p_n = exp(-2 n^{1/3})` exactly, written in the tails.csv schema.
fn synthetic_tails(out: &Path) {
    fs::create_dir_all(out).unwrap();
    let size = 1_000_000u64;
    let mut text = format!("{TAILS_HEADER}\n");
    for n in (0..=2000).step_by(10) {
        let p = (-2.0 * (n as f64).cbrt()).exp();
        text += &format!("joint,{n},{p},{},{size}\n", (p * size as f64).round() as u64);
    }
    fs::write(out.join("tails.csv"), text).unwrap();
}

#[test]
fn fit_recovers_the_exact_cube_root_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("fit");
    synthetic_tails(&out);
    run_ok("fit", &cfg, &out);
    let s = summary(&out.join("fit.txt"));
    assert!((lookup(&s, "zeta_hat") - 1.0 / 3.0).abs() < 1e-6);
    assert!((lookup(&s, "tau_hat") - 2.0).abs() < 1e-5);
    assert!((lookup(&s, "c_hat") - 1.0).abs() < 1e-5);
}

#[test]
fn report_envelopes_match_their_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("rep");
    synthetic_tails(&out);
    run_ok("report", &cfg, &out);
    let s = summary(&out.join("report_summary.txt"));
    let (c, tau) = (lookup(&s, "tails_envelope_1_3_c"), lookup(&s, "tails_envelope_1_3_tau"));
    let envelope = |n: f64| c * (-tau * n.cbrt()).exp();
    // the data are an exact cube-root law, so the fixed-exponent fit is too
    assert!((c - 1.0).abs() < 1e-6 && (tau - 2.0).abs() < 1e-6);

    let csv = fs::read_to_string(out.join("tails_envelopes.csv")).unwrap();
    for line in csv.lines().skip_while(|l| !l.starts_with("n,")).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: f64 = cols[0].parse().unwrap();
        let v: f64 = cols[2].parse().unwrap();
        assert!((v - envelope(n)).abs() <= 1e-12 * envelope(n).max(1e-300), "n={n}");
    }

    let svg = fs::read_to_string(out.join("tails.svg")).unwrap();
    assert!(svg.contains(&format!("viewBox=\"0 0 {PLOT_WIDTH} {PLOT_HEIGHT}\"")));
    let axes = svg.lines().find(|l| l.starts_with("<!-- x_range=")).unwrap();
    let nums: Vec<f64> = axes
        .trim_start_matches("<!-- x_range=")
        .trim_end_matches(" -->")
        .replace(" y_decades=", ":")
        .split(':')
        .map(|v| v.parse().unwrap())
        .collect();
    let (x0, x1, lo, hi) = (nums[0], nums[1], nums[2], nums[3]);
    let poly = svg
        .lines()
        .find(|l| l.starts_with("<polyline") && l.contains("n^(1/3)"))
        .expect("cube-root envelope drawn");
    let points = poly.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
    let drawn: Vec<(f64, f64)> = points
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    // plot area: 80 px left margin, 180 right, 40 top, 60 bottom
    let (w, h) = (PLOT_WIDTH - 260.0, PLOT_HEIGHT - 100.0);
    let expected: Vec<(f64, f64)> = (0..=2000)
        .step_by(10)
        .map(|n| (n as f64, envelope(n as f64)))
        .filter(|&(_, y)| y >= 10f64.powf(lo) && y <= 10f64.powf(hi))
        .map(|(n, y)| (80.0 + w * (n - x0) / (x1 - x0), 40.0 + h * (hi - y.log10()) / (hi - lo)))
        .collect();
    assert_eq!(drawn.len(), expected.len());
    for (d, e) in drawn.iter().zip(&expected) {
        assert!((d.0 - e.0).abs() <= 5e-4 + 1e-9 && (d.1 - e.1).abs() <= 5e-4 + 1e-9, "{d:?} vs {e:?}");
    }
}

#[test]
fn report_without_results_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = viana(&["report", "--config", &cfg, "--out", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let manifest = fs::read_to_string(dir.path().join("empty/manifest.txt")).unwrap();
    assert!(manifest.contains("status=error"));
}
