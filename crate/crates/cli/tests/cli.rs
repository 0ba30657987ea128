use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn ghwp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghwp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn solve_into(dir: &Path, spec: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "solve",
        spec.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ghwp(&args)
}

#[test]
fn solve_example1_reports_the_optimum() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(dir.path(), &data("example1.json"), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let j: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("J_best"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((j - 85.2772730788).abs() < 1e-6, "{j}");
    assert!(text.contains("verdict     optimal_within_tol"), "{text}");

    let results: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(results["stop_reason"], "objective_stagnation");
    assert_eq!(results["trace_file"], "trace.csv");
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,J,J_best,alpha,grad_norm\n"));

    // the stored solution verifies and renders
    let spec = data("example1.json");
    let res = dir.path().join("results.json");
    let v = ghwp(&["verify", spec.to_str().unwrap(), res.to_str().unwrap()]);
    assert!(v.status.success());
    assert!(stdout(&v).contains("optimal_within_tol"));

    let svg = dir.path().join("fig.svg");
    let plot = dir.path().join("trace.svg");
    let r = ghwp(&[
        "render",
        spec.to_str().unwrap(),
        res.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--trace-svg",
        plot.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let drawing = fs::read_to_string(&svg).unwrap();
    assert_eq!(drawing.matches("<circle class=\"set").count(), 4);
    assert_eq!(drawing.matches("<rect class=\"hub-set").count(), 1);
    assert!(drawing.contains("class=\"chain\""));
    assert_eq!(drawing.matches("class=\"hub-ray\"").count(), 4);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("<svg"));
}

#[test]
fn loose_tolerance_checkpoint_lies_in_band() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(dir.path(), &data("example1.json"), &["--tolerance", "1e-4"]);
    assert!(out.status.success());
    let results: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    let first = results["checkpoints"][0]["iteration"].as_u64().unwrap();
    assert!((77..=115).contains(&first), "{first}");
    assert_eq!(results["iterations"].as_u64().unwrap(), first);
}

#[test]
fn flags_override_the_spec() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(
        dir.path(),
        &data("example1.json"),
        &[
            "--max-iter",
            "25",
            "--step-rule",
            "sqrt-decay",
            "--step-scale",
            "0.5",
        ],
    );
    assert!(out.status.success());
    let results: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(results["iterations"], 25);
    assert_eq!(results["stop_reason"], "max_iter");
    assert_eq!(results["solver"]["step_rule"], "sqrt_decay");
    assert_eq!(results["solver"]["step_scale"], 0.5);
}

#[test]
fn three_dimensional_render_falls_back_to_a_table() {
    let dir = TempDir::new().unwrap();
    let spec = data("example2.json");
    assert!(solve_into(dir.path(), &spec, &["--tolerance", "1e-6"])
        .status
        .success());
    let svg = dir.path().join("fig.svg");
    let r = ghwp(&[
        "render",
        spec.to_str().unwrap(),
        dir.path().join("results.json").to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(7));
    assert!(!svg.exists());
    let table = fs::read_to_string(dir.path().join("fig.csv")).unwrap();
    assert!(table.starts_with("kind,label,from,to,x1,x2,x3"));
}

#[test]
fn check_reports_diagnostics() {
    let out = ghwp(&["check", data("example1.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("nondegenerate"));
    assert!(text.contains("existence   guaranteed"));
    assert!(text.contains("disjoint    yes"));
}

#[test]
fn check_flags_unbounded_components() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("open.json");
    fs::write(
        &spec,
        r#"{
  "dimension": 1,
  "chain_sets": [
    {"kind": "halfspace", "normal": [1], "offset": 0},
    {"kind": "halfspace", "normal": [-1], "offset": -2},
    {"kind": "halfspace", "normal": [1], "offset": 5}
  ],
  "hub_set": {"kind": "halfspace", "normal": [1], "offset": 1},
  "rho": [1, 1, 1],
  "omega": [1, 0, 0]
}"#,
    )
    .unwrap();
    let out = ghwp(&["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stdout(&out).contains("existence   not guaranteed"));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        ghwp(&["check", missing.to_str().unwrap()]).status.code(),
        Some(3)
    );

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"dimension\": 2,\n  \"chain_sets\": [,\n}").unwrap();
    let out = ghwp(&["check", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let text = fs::read_to_string(data("example1.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["rho"] = serde_json::json!([1.0, 2.0, 2.0]);
    let bad_rho = dir.path().join("bad_rho.json");
    fs::write(&bad_rho, doc.to_string()).unwrap();
    let out = ghwp(&["check", bad_rho.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho"));

    assert_eq!(ghwp(&["solve"]).status.code(), Some(2));
}

#[test]
fn tampered_results_are_rejected() {
    let dir = TempDir::new().unwrap();
    let spec = data("example1.json");
    assert!(solve_into(dir.path(), &spec, &["--tolerance", "1e-6"])
        .status
        .success());
    let path = dir.path().join("results.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    doc["best_objective"] = serde_json::json!(80.0);
    fs::write(&path, doc.to_string()).unwrap();
    let out = ghwp(&["verify", spec.to_str().unwrap(), path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("best_objective"));
}
