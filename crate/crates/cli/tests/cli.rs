use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppd_cli::io::read_table;
use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn ppd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = ppd(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

const CLEAN: &str = r#"
grid_points = 60
[simulate]
n = 5
[noise]
sigma_a = 0.0
sigma_eps_relative = 0.0
warp_strength = 0.0
[ppd]
lambda_grid = [0.0, 0.05, 0.1]
"#;

#[test]
fn align_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir();
    ok(&[
        "align",
        "--input",
        s(&data.join("scenario1_sample.csv")),
        "--lambda",
        "0.05",
        "--config",
        s(&data.join("small.toml")),
        "--output-dir",
        s(dir.path()),
    ]);
    for name in ["aligned.csv", "warps.csv", "mean.csv"] {
        let want = fs::read(data.join("golden_align").join(name)).unwrap();
        let got = fs::read(dir.path().join(name)).unwrap();
        assert!(want == got, "{name} differs from the golden file");
    }
}

#[test]
fn identical_columns_align_to_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let mut text = String::from("t,a,b,c\n");
    for j in 0..30 {
        let t = j as f64 / 29.0;
        let v = (-(t - 0.4) * (t - 0.4) / 0.02).exp();
        text.push_str(&format!("{t},{v},{v},{v}\n"));
    }
    fs::write(&input, text).unwrap();
    let cfg = write_config(dir.path(), "grid_points = 30\n");
    ok(&[
        "align",
        "--input",
        s(&input),
        "--lambda",
        "0",
        "--config",
        s(&cfg),
        "--output-dir",
        s(dir.path()),
    ]);
    let original = read_table(&input).unwrap();
    let mean = read_table(&dir.path().join("mean.csv")).unwrap();
    for (a, b) in original.columns[0].iter().zip(&mean.columns[0]) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn huge_lambda_gives_the_pointwise_average() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir();
    let input = data.join("scenario1_sample.csv");
    ok(&[
        "align",
        "--input",
        s(&input),
        "--lambda",
        "1e9",
        "--config",
        s(&data.join("small.toml")),
        "--output-dir",
        s(dir.path()),
    ]);
    let table = read_table(&input).unwrap();
    let mean = read_table(&dir.path().join("mean.csv")).unwrap();
    for (j, m) in mean.columns[0].iter().enumerate() {
        let avg: f64 = table.columns.iter().map(|c| c[j]).sum::<f64>() / table.columns.len() as f64;
        assert!((avg - m).abs() < 1e-3, "row {j}: {avg} vs {m}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = data_dir().join("small.toml");
    for dir in [&a, &b] {
        ok(&[
            "simulate",
            "--scenario",
            "1",
            "--seed",
            "7",
            "--config",
            s(&cfg),
            "--output-dir",
            s(dir.path()),
        ]);
    }
    for name in ["data.csv", "gtrue.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    // The checked-in sample came from the same invocation.
    assert_eq!(
        fs::read(a.path().join("data.csv")).unwrap(),
        fs::read(data_dir().join("scenario1_sample.csv")).unwrap()
    );
}

#[test]
fn clean_pipeline_recovers_the_signal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLEAN);
    let sim = dir.path().join("sim");
    let est = dir.path().join("est");
    ok(&[
        "simulate",
        "--scenario",
        "1",
        "--config",
        s(&cfg),
        "--output-dir",
        s(&sim),
    ]);
    ok(&[
        "ppd",
        "--input",
        s(&sim.join("data.csv")),
        "--config",
        s(&cfg),
        "--output-dir",
        s(&est),
    ]);
    let selection: Value =
        serde_json::from_str(&fs::read_to_string(est.join("selection.json")).unwrap()).unwrap();
    assert_eq!(selection["m"], 2);
    assert_eq!(selection["lambda_star"], 0.0);
    assert!(est.join("ppd_barchart.csv").exists());
    assert!(est.join("ppd_surface.json").exists());

    ok(&[
        "estimate",
        "--input",
        s(&sim.join("data.csv")),
        "--selection",
        s(&est.join("selection.json")),
        "--config",
        s(&cfg),
        "--output-dir",
        s(&est),
    ]);
    let ghat = read_table(&est.join("ghat.csv")).unwrap();
    let gtrue = read_table(&sim.join("gtrue.csv")).unwrap();
    let n = ghat.t.len() as f64;
    let rmse = (ghat.columns[0]
        .iter()
        .zip(&gtrue.columns[0])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
        .sqrt();
    assert!(rmse < 1e-2, "rmse {rmse}");
    assert!(est.join("ginit.csv").exists());
}

#[test]
fn bootstrap_writes_an_ordered_band() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_dir();
    ok(&[
        "bootstrap",
        "--input",
        s(&data.join("scenario1_sample.csv")),
        "--config",
        s(&data.join("small.toml")),
        "--bootstrap-B",
        "6",
        "--alpha",
        "0.2",
        "--seed",
        "3",
        "--output-dir",
        s(dir.path()),
    ]);
    let band = fs::read_to_string(dir.path().join("band.csv")).unwrap();
    let mut lines = band.lines();
    assert_eq!(lines.next(), Some("t,lower,upper"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2]);
        rows += 1;
    }
    assert_eq!(rows, 40);
}

#[test]
fn compare_reports_one_row_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid_points = 40\n[simulate]\nn = 8\n[ppd]\nlambda_grid = [0.0, 0.1]\n[compare]\nkappa_grid = [0.0]\n",
    );
    ok(&[
        "compare",
        "--scenario",
        "1",
        "--reps",
        "3",
        "--seed",
        "5",
        "--config",
        s(&cfg),
        "--output-dir",
        s(dir.path()),
    ]);
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        [
            "rep",
            "seed",
            "rmse_cross_sectional",
            "rmse_srvf_zero",
            "rmse_l2_kappa_0",
            "rmse_estimate",
            "m",
            "lambda_star",
            "status"
        ]
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[8], "ok");
        for c in &cells[2..6] {
            let v: f64 = c.parse().unwrap();
            assert!(v >= 0.0 && v.is_finite());
        }
    }
    assert!(dir.path().join("timings.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());

    // Usage error.
    assert_eq!(ppd(&["align", "--bogus"]).status.code(), Some(1));

    // Configuration error: empty weight grid.
    let cfg = write_config(dir.path(), "[ppd]\nlambda_grid = []\n");
    let input = data_dir().join("scenario1_sample.csv");
    let res = ppd(&[
        "ppd",
        "--input",
        s(&input),
        "--config",
        s(&cfg),
        "--output-dir",
        out,
    ]);
    assert_eq!(res.status.code(), Some(1));

    // Data error with a row/column diagnostic.
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,a,b\n0,1,2\n1,3,oops\n").unwrap();
    let res = ppd(&["align", "--input", s(&bad), "--output-dir", out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("row 3, column 3"));

    // Missing upstream artifact.
    let res = ppd(&[
        "estimate",
        "--input",
        s(&input),
        "--selection",
        s(&dir.path().join("missing.json")),
        "--output-dir",
        out,
    ]);
    assert_ne!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.json"));

    // Unknown scenario.
    let res = ppd(&["simulate", "--scenario", "9", "--output-dir", out]);
    assert_eq!(res.status.code(), Some(1));
}
