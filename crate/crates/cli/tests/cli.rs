use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cenn::cost::{self, PipelineStep};
use cenn_cli::io;
use cenn_cli::RunConfig;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn cenn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cenn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{"synth": {"width": 72, "height": 40, "frames": 8, "start": [12, 10]},
                        "trainer": {"ga": {"generations": 30}}}"#;

/// Synthetic sequence plus a trained model in a fresh directory.
fn prepared() -> TempDir {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL).unwrap();
    let o = cenn(dir.path(), &["--config", "cfg.json", "synth", "--out", "seq"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cenn(
        dir.path(),
        &["--config", "cfg.json", "train", "--frames", "seq", "--gt", "seq/groundtruth.txt", "--out", "model.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

fn track(dir: &Path, out: &str) -> Output {
    cenn(dir, &["--config", "cfg.json", "track", "--frames", "seq", "--model", "model.json", "--out", out])
}

#[test]
fn shipped_files_match_the_built_in_defaults() {
    let pipeline: Vec<PipelineStep> =
        serde_json::from_str(&std::fs::read_to_string(data("tracking_pipeline.json")).unwrap()).unwrap();
    assert_eq!(pipeline, cost::tracking_pipeline());
    let cfg: RunConfig = serde_json::from_str(&std::fs::read_to_string(data("default_config.json")).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn train_writes_a_reloadable_model_and_is_byte_stable() {
    let dir = prepared();
    let p = dir.path();
    let first = std::fs::read(p.join("model.json")).unwrap();
    let model = io::load_model(&p.join("model.json")).unwrap();
    assert!(!model.kernels.is_empty());
    assert!(model.weights.iter().all(|w| w.is_finite()));
    assert_eq!(io::model_json(&model).into_bytes(), first);

    let o = cenn(
        p,
        &["--config", "cfg.json", "train", "--frames", "seq", "--gt", "seq/groundtruth.txt", "--out", "again.json"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("generation,best_fitness\n0,"));
    assert_eq!(std::fs::read(p.join("again.json")).unwrap(), first);
}

#[test]
fn track_emits_one_row_per_frame_deterministically() {
    let dir = prepared();
    let p = dir.path();
    assert!(track(p, "a.csv").status.success());
    assert!(track(p, "b.csv").status.success());
    let a = std::fs::read_to_string(p.join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 1 + 8);
    assert_eq!(a, std::fs::read_to_string(p.join("b.csv")).unwrap());

    let o = cenn(
        p,
        &["--config", "cfg.json", "track", "--frames", "seq", "--model", "model.json", "--out", "c.csv",
          "--masks", "masks", "--first", "2", "--count", "4", "--gt", "seq/groundtruth.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let c = io::load_results(&p.join("c.csv")).unwrap();
    assert_eq!(c.iter().map(|r| r.0).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
    assert_eq!(io::frame_paths(&p.join("masks")).unwrap().len(), 4);

    let o = cenn(p, &["score", "--results", "a.csv", "--gt", "seq/groundtruth.txt"]);
    let auc: f64 = stdout(&o).trim().strip_prefix("AUC ").unwrap().parse().unwrap();
    assert!(auc > 0.8, "{auc}");
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = prepared();
    let p = dir.path();
    let o = cenn(p, &["train", "--frames", "seq", "--gt", "missing.txt", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(p.join("broken.json"), "{\"kernels\": [\n  {\"kind\": ").unwrap();
    let o = track_with_model(p, "broken.json");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2 column"), "{}", stderr(&o));

    std::fs::write(p.join("cfg2.json"), r#"{"tracker": {"dilation": 3}}"#).unwrap();
    let o = cenn(p, &["--config", "cfg2.json", "synth", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(p.join("gt.txt"), "1,1,20,20\n1,1,0,20\n").unwrap();
    let o = cenn(p, &["score", "--results", "model.json", "--gt", "gt.txt"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cenn(p, &["train"]);
    assert_eq!(o.status.code(), Some(2));
}

fn track_with_model(p: &Path, model: &str) -> Output {
    cenn(p, &["track", "--frames", "seq", "--model", model, "--out", "r.csv"])
}

#[test]
fn bad_ground_truth_names_the_line() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("gt.txt"), "10,20,30,40\n10,20,0,40\n").unwrap();
    std::fs::write(dir.path().join("r.csv"), "frame,x,y,w,h,lost,area\n0,9,19,30,40,0,1200\n").unwrap();
    let o = cenn(dir.path(), &["score", "--results", "r.csv", "--gt", "gt.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn score_examples() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    std::fs::write(p.join("gt.txt"), "10,20,30,40\n12,20,30,40\n").unwrap();
    std::fs::write(p.join("same.csv"), "frame,x,y,w,h,lost,area\n0,9,19,30,40,0,1200\n1,11,19,30,40,0,1200\n").unwrap();
    let o = cenn(p, &["score", "--results", "same.csv", "--gt", "gt.txt", "--curve", "curve.csv"]);
    assert_eq!(stdout(&o), "AUC 1.0000\n");
    let curve = std::fs::read_to_string(p.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 102);
    assert_eq!(curve.lines().nth(1), Some("0.00,1"));
    assert_eq!(curve.lines().last(), Some("1.00,1"));

    std::fs::write(p.join("far.csv"), "frame,x,y,w,h,lost,area\n0,200,200,5,5,1,0\n1,200,200,5,5,1,0\n").unwrap();
    let o = cenn(p, &["score", "--results", "far.csv", "--gt", "gt.txt"]);
    let auc: f64 = stdout(&o).trim().strip_prefix("AUC ").unwrap().parse().unwrap();
    assert!(auc <= 0.005);

    std::fs::write(p.join("long.csv"), "frame,x,y,w,h,lost,area\n2,9,19,30,40,0,1200\n").unwrap();
    let o = cenn(p, &["score", "--results", "long.csv", "--gt", "gt.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cost_examples() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let o = cenn(p, &["cost", "--csv", "cost.csv"]);
    assert!(o.status.success());
    let total = stdout(&o).lines().find(|l| l.starts_with("Total/frame")).unwrap().to_string();
    assert!(total.contains("159.7"), "{total}");
    assert_eq!(std::fs::read_to_string(p.join("cost.csv")).unwrap().lines().count(), 16);

    let report = cost::frame_report(&cost::tracking_pipeline(), &Default::default()).unwrap();
    let seq = report.sequence(cost::DEFAULT_SEQUENCE_FRAMES);
    let flag = format!("{},{}", seq.energy_j, seq.time_s);
    let o = cenn(p, &["cost", "--cpu", &flag]);
    assert!(stdout(&o).ends_with("EDP ratio (CPU / CeNN): 1.00\n"), "{}", stdout(&o));

    std::fs::write(p.join("empty.json"), "[]").unwrap();
    let o = cenn(p, &["cost", "--pipeline", "empty.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cenn(p, &["cost", "--cpu", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pgm_and_png_frames_load_alike() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let gray: Vec<u8> = (0..12u8).map(|i| i * 20).collect();
    io::write_gray(&p.join("0.pgm"), 4, 3, &gray).unwrap();
    io::write_gray(&p.join("1.png"), 4, 3, &gray).unwrap();
    io::write_gray(&p.join("10.pgm"), 4, 3, &gray).unwrap();
    std::fs::write(p.join("notes.txt"), "ignored").unwrap();
    let names: Vec<_> = io::frame_paths(p)
        .unwrap()
        .iter()
        .map(|q| q.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["0.pgm", "1.png", "10.pgm"]);
    let frames = io::load_frames(p, Default::default()).unwrap();
    assert_eq!(frames[0], frames[1]);
    assert_eq!(frames[0].to_gray(), gray);
    let pgm = std::fs::read(p.join("0.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n4 3 255\n"));

    io::write_gray(&p.join("11.pgm"), 3, 4, &gray).unwrap();
    assert!(matches!(io::load_frames(p, Default::default()), Err(cenn_cli::CliError::Input(_))));
}
