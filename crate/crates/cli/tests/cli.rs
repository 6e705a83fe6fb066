use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kinlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn kinlab")
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest")).unwrap()
}

#[test]
fn scan_exit_code_tracks_the_lambda_assertion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kinlab(tmp.path(), &["subelliptic-scan", "--k-scan", "6", "--out", "a"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(manifest(&tmp.path().join("a")).contains("assert.lambda_bounded_by_one=fail"));
    let o = kinlab(tmp.path(), &["subelliptic-scan", "--k-scan", "6", "--skip-lambda-check", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(tmp.path().join("b/results.csv")).unwrap();
    assert!(csv.starts_with("k,admissible_c,plateau_margin\n"));
    assert_eq!(csv.lines().count(), 1 + 13);
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "# test\ns = 0.25\nK = 6\nseed = 4\n").unwrap();
    let o = kinlab(
        tmp.path(),
        &["--config", "run.cfg", "--s", "0.75", "subelliptic-scan", "--k-scan", "4", "--skip-lambda-check", "--out", "o"],
    );
    assert!(o.status.success());
    let m = manifest(&tmp.path().join("o"));
    assert!(m.contains("\ns=0.75\n") && m.contains("\nK=6\n") && m.contains("\nseed=4\n"), "{m}");
    assert!(m.starts_with("command=subelliptic-scan\n"));
}

#[test]
fn bad_input_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "s = 0.5\nnot a pair\n").unwrap();
    let o = kinlab(tmp.path(), &["--config", "bad.cfg", "inequality-suite"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kinlab(tmp.path(), &["--s", "1.5", "inequality-suite"]);
    assert_eq!(o.status.code(), Some(2));
    // explicit step above the stability limit
    let o = kinlab(tmp.path(), &["--gamma", "1", "--dt", "0.5", "ffp1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_recovers_synthetic_slope_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,series,r\n");
    for i in 0..9 {
        let t = 0.1 * 10f64.powf(i as f64 / 8.0);
        csv += &format!("{t},a,{}\n{t},b,1.0\n", 0.7 * t * t);
    }
    fs::write(tmp.path().join("in.csv"), csv).unwrap();
    let args = ["fit", "--input", "in.csv", "--kind", "slope", "--x", "t", "--y", "r", "--where", "series=a"];
    let o = kinlab(tmp.path(), &[&args[..], &["--expect", "2", "--rel-tol", "1e-9", "--svg", "--out", "f"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let res = fs::read_to_string(tmp.path().join("f/results.csv")).unwrap();
    let slope: f64 = res.lines().find(|l| l.starts_with("slope,")).unwrap()[6..].parse().unwrap();
    assert!((slope - 2.0).abs() < 1e-9);
    let svg = fs::read_to_string(tmp.path().join("f/plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let o = kinlab(tmp.path(), &[&args[..], &["--expect", "3", "--out", "g"]].concat());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn macro_residual_sweep_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kinlab(tmp.path(), &["macro-residual", "--sweep", "--n-v3", "16", "--out", "m"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(tmp.path().join("m/results.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("k_bound,")).count(), 4);
    let o = kinlab(tmp.path(), &["--k-max", "4", "--n-v", "32", "ffp1", "--n-snap", "3", "--snapshots", "--out", "s"]);
    assert!(o.status.success());
    for i in 0..3 {
        assert!(tmp.path().join(format!("s/snap_{i:03}.bin")).exists());
    }
    let m = manifest(&tmp.path().join("s"));
    assert!(m.contains("ffp1.c_stab=0.9"));
}
