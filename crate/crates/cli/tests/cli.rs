use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn dpmix(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpmix")).args(args).current_dir(dir).output().expect("binary runs")
}

fn run(cmd: &str, dir: &Path, config: &Value, extra: &[&str]) -> Output {
    let path = dir.join(format!("{cmd}.json"));
    fs::write(&path, config.to_string()).unwrap();
    let mut args = vec![cmd, "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--frozen-clock"];
    args.extend_from_slice(extra);
    dpmix(&args, dir)
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn normal(mean: f64, var: f64) -> Value {
    json!({"mean": [mean], "cov": [[var]]})
}

fn two_mode() -> Value {
    json!({"weights": [0.5, 0.5], "components": [normal(-8.0, 1.0), normal(8.0, 1.0)]})
}

#[test]
fn gen_writes_replayable_data_and_round_trips_the_model() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"model": two_mode(), "n": 100, "seed": 7});
    ok(&run("gen", dir.path(), &cfg, &[]));
    let data = fs::read_to_string(dir.path().join("data.txt")).unwrap();
    assert_eq!(data.lines().count(), 100);
    assert_eq!(read_json(&dir.path().join("model.json")), two_mode());
    let record = read_json(&dir.path().join("gen.json"));
    assert_eq!(record["seed"], 7);
    let first = fs::read(dir.path().join("data.txt")).unwrap();
    let gen_first = fs::read(dir.path().join("gen.json")).unwrap();
    ok(&run("gen", dir.path(), &cfg, &[]));
    assert_eq!(first, fs::read(dir.path().join("data.txt")).unwrap());
    assert_eq!(gen_first, fs::read(dir.path().join("gen.json")).unwrap());
    ok(&run("gen", dir.path(), &cfg, &["--seed", "8"]));
    assert_ne!(first, fs::read(dir.path().join("data.txt")).unwrap());
}

#[test]
fn standard_normal_dataset_has_one_point_per_line() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"model": {"weights": [1.0], "components": [normal(0.0, 1.0)]}, "n": 100, "seed": 1});
    ok(&run("gen", dir.path(), &cfg, &[]));
    let data = fs::read_to_string(dir.path().join("data.txt")).unwrap();
    for line in data.lines() {
        assert_eq!(line.split_whitespace().count(), 1);
        line.trim().parse::<f64>().unwrap();
    }
}

#[test]
fn malformed_weights_are_an_invalid_config() {
    let dir = TempDir::new().unwrap();
    let bad = json!({"model": {"weights": [0.5, 0.4], "components": [normal(0.0, 1.0), normal(1.0, 1.0)]}, "n": 10});
    let out = run("gen", dir.path(), &bad, &[]);
    assert_eq!(out.status.code(), Some(2));
    let garbage = dir.path().join("gen.json");
    fs::write(&garbage, "{not json").unwrap();
    let out = dpmix(&["gen", "--config", garbage.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

fn write_model(dir: &Path, name: &str, model: &Value) {
    fs::write(dir.join(name), model.to_string()).unwrap();
}

fn eval_row(dir: &Path) -> Vec<String> {
    let csv = fs::read_to_string(dir.join("eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "model_a,model_b,method,tv,half_width,conf,n_samples,runtime_ms");
    lines.next().unwrap().split(',').map(String::from).collect()
}

#[test]
fn eval_closed_form_and_self_distance() {
    let dir = TempDir::new().unwrap();
    write_model(dir.path(), "a.json", &json!({"weights": [1.0], "components": [normal(0.0, 1.0)]}));
    write_model(dir.path(), "b.json", &json!({"weights": [1.0], "components": [normal(0.1, 1.0)]}));
    write_model(dir.path(), "m.json", &two_mode());
    ok(&run("eval", dir.path(), &json!({"model_a": "a.json", "model_b": "b.json"}), &[]));
    let row = eval_row(dir.path());
    assert_eq!(row[2], "closed_form");
    let tv: f64 = row[3].parse().unwrap();
    assert!((tv - 0.03988).abs() < 1e-5, "{tv}");
    // 2Φ(0.05) − 1
    assert!((tv - 0.039_878_2).abs() < 1e-6, "{tv}");
    assert_eq!(row[7], "0.000");
    ok(&run("eval", dir.path(), &json!({"model_a": "m.json", "model_b": "m.json"}), &[]));
    let row = eval_row(dir.path());
    assert_eq!(row[2], "quadrature");
    assert!(row[3].parse::<f64>().unwrap().abs() < 1e-9);
}

#[test]
fn eval_two_dimensional_models_by_monte_carlo() {
    let dir = TempDir::new().unwrap();
    let g = |m: f64| json!({"weights": [1.0], "components": [{"mean": [m, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}]});
    write_model(dir.path(), "a.json", &g(0.0));
    write_model(dir.path(), "b.json", &g(1.0));
    ok(&run("eval", dir.path(), &json!({"model_a": "a.json", "model_b": "b.json", "mc_n": 50000, "seed": 3}), &[]));
    let row = eval_row(dir.path());
    assert_eq!(row[2], "monte_carlo");
    let (tv, hw): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
    // 2Φ(1/2) − 1
    assert!((tv - 0.382_924_9).abs() <= hw, "{tv} ± {hw}");
    assert!(hw > 0.0 && hw < 0.02);
    assert_eq!(row[5], "0.99");
    assert_eq!(row[6], "50000");
    write_model(dir.path(), "c.json", &json!({"weights": [1.0], "components": [normal(0.0, 1.0)]}));
    let out = run("eval", dir.path(), &json!({"model_a": "a.json", "model_b": "c.json"}), &[]);
    assert_eq!(out.status.code(), Some(2));
}

fn dense_recipe(k: usize, mean_bound: f64) -> Value {
    json!({
        "kind": "dense_mixture",
        "k": k,
        "alpha": 0.02,
        "component": {"kind": "bounded_gaussian", "box": {"dim": 1, "mean_bound": mean_bound, "eig_min": 0.25, "eig_max": 4.0}, "alpha": 0.02}
    })
}

fn practical(k: usize, rounds: usize, m2: usize, m3: usize) -> Value {
    json!({
        "k": k, "alpha": 0.3, "epsilon": 1.0, "delta": 1e-6, "mode": "practical",
        "overrides": {
            "rounds": rounds, "m2": m2, "m3": m3, "list_cap": 60, "mde_mc_n": 1000,
            "decoder": {"kind": "refined", "seeds": 20, "seed_separation": 0.5, "score_points": 500, "top": 3,
                        "weight_iters": 6, "em_iters": 25, "weight_steps": 3}
        }
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    for (k, v) in b.as_object().unwrap() {
        a[k] = v.clone();
    }
    a
}

#[test]
fn missing_cover_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let cfg = merge(practical(1, 4, 200, 300), json!({"data": "data.txt", "cover": {"path": "nowhere/cover.json"}}));
    let out = run("learn", dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/cover.json"));
}

#[test]
fn theory_mode_reports_log_sizes_without_running() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "data": "absent.txt", "cover": {"recipe": dense_recipe(2, 4.0)},
        "k": 2, "alpha": 0.3, "epsilon": 1.0, "delta": 1e-6, "mode": "theory"
    });
    let out = run("learn", dir.path(), &cfg, &[]);
    ok(&out);
    let report = read_json(&dir.path().join("theory_report.json"));
    assert_eq!(report["executable"], false);
    for key in ["ln_rounds", "ln_m3", "ln_total_samples"] {
        assert!(report[key].as_f64().unwrap().is_finite());
    }
    assert!(report["ln_total_samples"].as_f64().unwrap() > 1e9f64.ln());
    assert!(String::from_utf8_lossy(&out.stdout).contains("executable = false"));
}

#[test]
fn short_dataset_exits_with_insufficient_data() {
    let dir = TempDir::new().unwrap();
    ok(&run("gen", dir.path(), &json!({"model": {"weights": [1.0], "components": [normal(0.0, 1.0)]}, "n": 500}), &[]));
    let cfg = merge(practical(1, 4, 200, 300), json!({"data": "data.txt", "cover": {"recipe": dense_recipe(1, 4.0)}}));
    let out = run("learn", dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1200"));
}

#[test]
fn learn_from_files_is_byte_identical_under_frozen_clock() {
    let dir = TempDir::new().unwrap();
    let gen = json!({"model": {"weights": [1.0], "components": [normal(0.0, 1.0)]}, "n": 1500, "seed": 2, "cover": dense_recipe(1, 4.0)});
    ok(&run("gen", dir.path(), &gen, &[]));
    let cfg = merge(practical(1, 5, 200, 300), json!({"data": "data.txt", "cover": {"path": "cover.json"}, "seed": 4}));
    ok(&run("learn", dir.path(), &cfg, &[]));
    let manifest = fs::read(dir.path().join("manifest.json")).unwrap();
    let learned = fs::read(dir.path().join("learned.json")).unwrap();
    ok(&run("learn", dir.path(), &cfg, &[]));
    assert_eq!(manifest, fs::read(dir.path().join("manifest.json")).unwrap());
    assert_eq!(learned, fs::read(dir.path().join("learned.json")).unwrap());
    let m: Value = serde_json::from_slice(&manifest).unwrap();
    assert_eq!(m["chunks"].as_array().unwrap().len(), 5);
}

#[test]
fn simulated_single_gaussian_runs_record_chunks_and_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = merge(
        practical(1, 40, 200, 300),
        json!({
            "simulate": {"truth": {"weights": [1.0], "components": [normal(0.0, 1.0)]}, "n": 12000, "trials": 100},
            "cover": {"recipe": dense_recipe(1, 4.0)},
            "seed": 11
        }),
    );
    ok(&run("learn", dir.path(), &cfg, &[]));
    let summary = read_json(&dir.path().join("summary.json"));
    assert!(summary["non_bottom"].as_u64().unwrap() >= 90, "{summary}");
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,data_seed,run_seed,output,tv,tv_half_width,selected_score,max_score,chunks,mean_survivors,runtime_ms"
    );
    assert_eq!(lines.clone().count(), 100);
    for line in lines {
        assert_eq!(line.split(',').nth(8), Some("40"));
    }
    let m = read_json(&dir.path().join("manifests/trial_0000.json"));
    assert_eq!(m["chunks"].as_array().unwrap().len(), 40);
}

#[test]
fn sensitivity_audit_on_fifty_pairs() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"kind": "sensitivity", "cover": {"recipe": {"kind": "simplex", "k": 3, "alpha": 0.1}}, "t": 10, "q": 4, "pairs": 50, "seed": 5});
    ok(&run("audit", dir.path(), &cfg, &[]));
    let r = read_json(&dir.path().join("sensitivity_audit.json"));
    assert_eq!(r["pairs"], 50);
    assert!(r["max_difference"].as_u64().unwrap() <= 1);
}

#[test]
fn dp_audit_passes_at_configured_epsilon() {
    let dir = TempDir::new().unwrap();
    let lists = json!([[[0.5, 0.5]], [[0.5, 0.5]], [[0.5, 0.5]], [[0.5, 0.5]]]);
    let neighbor = json!([[[0.5, 0.5]], [[0.5, 0.5]], [[0.5, 0.5]], [[0.0, 1.0]]]);
    let cfg = json!({
        "kind": "dp", "cover": {"recipe": {"kind": "simplex", "k": 2, "alpha": 0.1}},
        "lists": lists, "neighbor": neighbor, "epsilon": 1.0, "delta": 1e-6, "runs": 10000, "seed": 9
    });
    ok(&run("audit", dir.path(), &cfg, &[]));
    let r = read_json(&dir.path().join("dp_audit.json"));
    assert!(r["epsilon_hat_upper"].as_f64().unwrap() <= 1.5);
    assert!(r["epsilon_exact"].as_f64().unwrap() <= 1.0 + 1e-9);
    // A slack below the sampling noise fails the audit with exit code 4.
    let strict = merge(cfg, json!({"epsilon": 1.0, "slack": -0.9}));
    assert_eq!(run("audit", dir.path(), &strict, &[]).status.code(), Some(4));
}

#[test]
fn cover_audit_of_simplex_cover() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"kind": "cover", "cover": {"recipe": {"kind": "simplex", "k": 2, "alpha": 0.1}}, "gamma": 0.2, "max_ball_count": 25});
    ok(&run("audit", dir.path(), &cfg, &[]));
    let r = read_json(&dir.path().join("cover_audit.json"));
    assert!(r["max_ball_count"].as_u64().unwrap() <= 25);
    assert_eq!(r["probes"], 500);
    let tight = merge(cfg, json!({"max_ball_count": 1}));
    assert_eq!(run("audit", dir.path(), &tight, &[]).status.code(), Some(4));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("gen.json");
    fs::write(&path, json!({"model": two_mode(), "n": 5}).to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dpmix"))
        .args(["gen", "--config", path.to_str().unwrap()])
        .env("DPMIX_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
