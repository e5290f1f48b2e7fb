use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raman-cnn"))
        .current_dir(dir)
        .arg("-q")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

/// Two Gaussian-peaked spectra per class on 200..2000 with a sloped offset.
fn write_measured_csv(path: &Path, classes: usize, per_class: usize) -> Vec<(String, usize)> {
    let mut text = String::from("wavenumber,intensity,spectrum_id\n");
    let mut ids = Vec::new();
    for c in 0..classes {
        for k in 0..per_class {
            let id = format!("c{c}_{k}");
            let center = 600.0 + 400.0 * c as f64 + 3.0 * k as f64;
            for i in 0..901 {
                let x = 200.0 + 2.0 * i as f64;
                let y = 80.0 + 0.02 * x + 40.0 * (-((x - center) / 6.0).powi(2)).exp();
                text += &format!("{x},{y},{id}\n");
            }
            ids.push((id, c));
        }
    }
    std::fs::write(path, text).unwrap();
    ids
}

#[test]
fn synth_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "peaks", "--positions", "100,500,1000", "--per-class", "20", "--length", "1024", "--out", "p"]);
    assert_eq!(lines(&d.join("p/spectra.csv")).len(), 61);
    assert_eq!(lines(&d.join("p/spectra.csv"))[0].split(',').count(), 1025);
    ok(d, &["synth", "--kind", "mixture", "--classes", "20", "--per-pair", "5", "--out", "m"]);
    assert_eq!(lines(&d.join("m/spectra.csv")).len(), 1901);
    assert_eq!(lines(&d.join("m/labels.csv")).len(), 1901);
    ok(d, &["synth", "--kind", "common", "--per-class", "4", "--out", "c"]);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("c/meta.json")).unwrap()).unwrap();
    assert!(meta["items"].as_array().unwrap().iter().all(|i| i["random_peaks"].as_array().unwrap().len() == 3));
}

#[test]
fn synth_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["synth", "--out", "x"])), 1);
    assert_eq!(code(&run(dir.path(), &["synth", "--kind", "peaks", "--positions", "5", "--out", "x"])), 1);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(d, &["synth", "--kind", "common", "--per-class", "3", "--seed", "7", "--out", out]);
    }
    for f in ["spectra.csv", "labels.csv", "meta.json"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap());
    }
}

#[test]
fn ingest_resamples_onto_model_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_measured_csv(&d.join("raw.csv"), 1, 2);
    ok(d, &["ingest", "--input", "raw.csv", "--out", "ds"]);
    let rows = lines(&d.join("ds/spectra.csv"));
    assert_eq!(rows.len(), 3);
    let header: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(header.len(), 1452);
    assert_eq!((header[1], header[1451]), ("350", "1800"));
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 1452));
}

#[test]
fn ingest_rejects_non_monotone_rows_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "wavenumber,intensity\n400,1\n500,2\n600,3\n550,1\n700,0\n").unwrap();
    let out = run(d, &["ingest", "--input", "bad.csv", "--out", "ds"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(!d.join("ds").exists());
}

#[test]
fn train_visualize_and_reingest_maps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ids = write_measured_csv(&d.join("raw.csv"), 3, 2);
    let mut labels = String::from("id,class\n");
    for (id, c) in &ids {
        labels += &format!("{id},{c}\n");
    }
    std::fs::write(d.join("labels.csv"), labels).unwrap();
    ok(d, &["ingest", "--input", "raw.csv", "--labels", "labels.csv", "--out", "ds"]);
    let train = ["train", "--data", "ds", "--lr", "1e-3", "--epochs", "2", "--filters", "4", "--seed", "3"];
    ok(d, &[&train[..], &["--out", "ck/a.json"]].concat());
    ok(d, &[&train[..], &["--out", "ck/b.json"]].concat());
    assert_eq!(std::fs::read(d.join("ck/a.json")).unwrap(), std::fs::read(d.join("ck/b.json")).unwrap());
    assert!(d.join("ck/a.history.json").is_file());
    let ck: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("ck/a.json")).unwrap()).unwrap();
    assert_eq!(ck["arch"]["n_classes"], 3);

    ok(d, &["visualize", "--checkpoint", "ck/a.json", "--data", "ds", "--method", "fcmap", "--out", "maps"]);
    let map = lines(&d.join("maps/c0_0_fcmap.csv"));
    assert_eq!(map.len(), 1452);
    assert_eq!(map[0], "wavenumber,contribution");
    assert!(d.join("maps/c0_0_fcmap.svg").is_file());

    ok(d, &["visualize", "--checkpoint", "ck/a.json", "--data", "raw.csv", "--method", "gradcam", "--class", "1", "--out", "gc"]);
    for row in lines(&d.join("gc/c2_1_gradcam.csv")).iter().skip(1) {
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v >= 0.0);
    }

    let out = run(d, &["visualize", "--checkpoint", "ck/a.json", "--data", "ds", "--method", "fcmap", "--class", "99", "--out", "x"]);
    assert_eq!(code(&out), 1);

    ok(d, &["ingest", "--input", "maps/c0_0_fcmap.csv", "--out", "back"]);
    assert_eq!(lines(&d.join("back/spectra.csv")).len(), 2);
}

#[test]
fn train_kfold_reports_each_fold() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "peaks", "--per-class", "3", "--length", "64", "--positions", "10,30,50", "--out", "p"]);
    ok(d, &["train", "--data", "p", "--out", "m.json", "--kfold", "3", "--epochs", "2", "--filters", "2", "--filter-size", "3"]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("m.history.json")).unwrap()).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);
    for k in 1..=3 {
        assert!(d.join(format!("m.fold{k}.json")).is_file());
    }
}

#[test]
fn train_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["train", "--data", "missing", "--out", "m.json"])), 2);
    ok(d, &["synth", "--kind", "peaks", "--per-class", "2", "--out", "p"]);
    assert_eq!(code(&run(d, &["train", "--data", "p", "--out", "m.json", "--classes", "5", "--epochs", "1"])), 2);
    assert_eq!(code(&run(d, &["train", "--data", "p", "--out", "m.json", "--epochs", "0"])), 1);
}

#[test]
fn nan_learning_rate_is_a_usage_error_and_divergence_is_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "peaks", "--per-class", "2", "--length", "64", "--positions", "10,30,50", "--out", "p"]);
    assert_eq!(code(&run(d, &["train", "--data", "p", "--out", "m.json", "--lr", "NaN"])), 1);
    let out = run(d, &["train", "--data", "p", "--out", "m.json", "--lr", "1e300", "--epochs", "5", "--filters", "2"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiment_report_references_existing_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "experiment", "filter_sweep", "--out", "sweep", "--epochs", "1", "--per-class", "2", "--sizes", "4,8", "--counts", "2",
            "--filters", "2", "--filter-size", "4",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("sweep/report.json")).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for f in runs.iter().flat_map(|r| r["files"].as_array().unwrap()) {
        assert!(d.join("sweep").join(f.as_str().unwrap()).is_file());
    }
    assert_eq!(code(&run(d, &["experiment", "nonsense", "--out", "x"])), 1);
}
