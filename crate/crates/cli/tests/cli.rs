//! End-to-end tests of the `xtreaming` binary: every subcommand is driven
//! through a real process and its file outputs are inspected.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xtreaming"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn xtreaming")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed (status {:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

/// Generates a small dataset into `dir` and returns the data CSV path.
fn generate_small(dir: &Path) -> PathBuf {
    let out = run(&[
        "generate",
        "--n",
        "500",
        "--steps",
        "10",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    dir.join("data.csv")
}

#[test]
fn generate_writes_data_labels_and_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());

    assert_eq!(lines(&data).len(), 500);
    let labels = lines(&tmp.path().join("labels.csv"));
    assert_eq!(labels[0], "id,step,label");
    assert_eq!(labels.len(), 501);
    for row in &labels[1..] {
        assert_eq!(row.split(',').count(), 3);
    }
    let spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("spec.json")).unwrap())
            .unwrap();
    assert_eq!(spec["n"], 500);
    assert_eq!(spec["seed"], 7);
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_small(a.path());
    generate_small(b.path());
    for name in ["data.csv", "labels.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn project_writes_snapshots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());
    let run_dir = tmp.path().join("run");
    let out = run(&[
        "project",
        "--input",
        data.to_str().unwrap(),
        "--buffer-size",
        "100",
        "--snapshot-every",
        "2",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_success(&out);

    // 500 points / 100 per buffer = 5 buffers -> snapshots after 2 and 4.
    assert!(run_dir.join("snapshot_0002.csv").exists());
    assert!(run_dir.join("snapshot_0004.csv").exists());
    assert!(!run_dir.join("snapshot_0005.csv").exists());
    let final_rows = lines(&run_dir.join("snapshot_final.csv"));
    assert_eq!(final_rows[0], "id,x,y,step,opacity");
    assert_eq!(final_rows.len(), 501);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["buffers"].as_array().unwrap().len(), 5);
    assert!(manifest["landmark_count"].as_u64().unwrap() > 0);
    assert_eq!(manifest["buffers"][0]["rebuilt"], true);
}

#[test]
fn project_frozen_never_rebuilds_after_first_buffer() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());
    let run_dir = tmp.path().join("run");
    let out = run(&[
        "project",
        "--input",
        data.to_str().unwrap(),
        "--buffer-size",
        "100",
        "--frozen",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    let buffers = manifest["buffers"].as_array().unwrap();
    assert_eq!(buffers[0]["rebuilt"], true);
    for report in &buffers[1..] {
        assert_eq!(report["rebuilt"], false);
    }
}

#[test]
fn eval_final_scores_a_projected_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());
    let run_dir = tmp.path().join("run");
    assert_success(&run(&[
        "project",
        "--input",
        data.to_str().unwrap(),
        "--buffer-size",
        "100",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]));
    let report = tmp.path().join("stress.csv");
    let out = run(&[
        "eval",
        "--input",
        data.to_str().unwrap(),
        "--layout",
        run_dir.join("snapshot_final.csv").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_success(&out);
    let rows = lines(&report);
    assert_eq!(rows[0], "value,pairs,exact,seed");
    assert_eq!(rows.len(), 2);
    let value: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
    assert!(value.is_finite() && value >= 0.0, "stress {value}");
}

#[test]
fn eval_evolution_and_shuffle_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());

    let evolution = tmp.path().join("evolution.csv");
    assert_success(&run(&[
        "eval",
        "--input",
        data.to_str().unwrap(),
        "--mode",
        "evolution",
        "--buffer-size",
        "100",
        "--out",
        evolution.to_str().unwrap(),
    ]));
    let rows = lines(&evolution);
    assert_eq!(rows[0], "buffer,value,pairs,exact,seed");
    assert_eq!(rows.len(), 6, "one row per buffer");

    let shuffle = tmp.path().join("shuffle.csv");
    assert_success(&run(&[
        "eval",
        "--input",
        data.to_str().unwrap(),
        "--mode",
        "shuffle",
        "--runs",
        "3",
        "--buffer-size",
        "100",
        "--out",
        shuffle.to_str().unwrap(),
    ]));
    let rows = lines(&shuffle);
    assert_eq!(rows[0], "run,value");
    assert_eq!(rows.len(), 4);
}

#[test]
fn plot_renders_one_circle_per_point_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());
    let run_dir = tmp.path().join("run");
    assert_success(&run(&[
        "project",
        "--input",
        data.to_str().unwrap(),
        "--buffer-size",
        "100",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]));
    let layout = run_dir.join("snapshot_final.csv");

    let svg_a = tmp.path().join("a.svg");
    let svg_b = tmp.path().join("b.svg");
    for svg in [&svg_a, &svg_b] {
        assert_success(&run(&[
            "plot",
            "--layout",
            layout.to_str().unwrap(),
            "--labels",
            tmp.path().join("labels.csv").to_str().unwrap(),
            "--out",
            svg.to_str().unwrap(),
        ]));
    }
    let text = std::fs::read_to_string(&svg_a).unwrap();
    assert_eq!(text.matches("<circle").count(), 500);
    // Points from the newest step are fully opaque.
    assert!(text.contains(r#"fill-opacity="1""#));
    assert_eq!(
        std::fs::read(&svg_a).unwrap(),
        std::fs::read(&svg_b).unwrap(),
        "plot output is not deterministic"
    );
}

#[test]
fn bench_reports_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_small(tmp.path());
    let report = tmp.path().join("bench.csv");
    assert_success(&run(&[
        "bench",
        "--input",
        data.to_str().unwrap(),
        "--buffer-sizes",
        "100,250",
        "--seeds",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]));
    let rows = lines(&report);
    assert_eq!(rows[0], "buffer_size,seed,stress,seconds");
    assert_eq!(rows.len(), 5, "2 sizes x 2 seeds");
}

#[test]
fn exit_codes_distinguish_usage_from_runtime_errors() {
    // Missing required argument -> usage error (2, from clap).
    let out = run(&["project"]);
    assert_eq!(out.status.code(), Some(2));

    // Unreadable input file -> runtime error (1).
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "project",
        "--input",
        tmp.path().join("missing.csv").to_str().unwrap(),
        "--out-dir",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    // Malformed CSV -> usage error (2).
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "1.0,2.0\nnot-a-number,3.0\n").unwrap();
    let out = run(&[
        "project",
        "--input",
        bad.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("run2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
