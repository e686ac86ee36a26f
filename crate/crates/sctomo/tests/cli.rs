//! End-to-end runs of the `sctomo` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PI_6: f64 = std::f64::consts::FRAC_PI_6;

fn sctomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sctomo")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn h_config(dir: &Path, extra: &str) -> PathBuf {
    write(
        dir,
        "config.json",
        &format!(
            r#"{{"source": {{"kind": "bloch_pure", "theta": 1.5707963267948966, "phi": 0.0}},
                 "protocol": "sct", "true_alphas": [{PI_6}], "photons_per_setting": 1000{extra}}}"#
        ),
    )
}

#[test]
fn simulate_then_reconstruct_recovers_alpha() {
    let dir = TempDir::new().unwrap();
    let cfg = h_config(dir.path(), r#", "seed": 4"#);
    let out = dir.path().join("sim");
    let o = sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out), "--noiseless"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let result = dir.path().join("result.json");
    let o = sctomo(&[
        "reconstruct",
        "--counts",
        s(&out.join("counts.csv")),
        "--settings",
        s(&out.join("settings.json")),
        "--mode",
        "sct",
        "--use-expected",
        "--out",
        s(&result),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&result);
    assert_eq!(r["format_version"], "1.0");
    assert!((r["alpha_hat"][0].as_f64().unwrap() - PI_6).abs() <= 1e-3);
    assert!(r["final_L"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["rho_hat"].as_array().unwrap().len(), 2);
    assert!(r["start_results"].as_array().unwrap().len() >= 24);
    assert!(r.get("error_bars").is_none());
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 4);
    assert_eq!(m["seed_source"], "config");
    assert_eq!(m["resolved_config"]["seed"], 4);
}

#[test]
fn st_mode_on_sct_counts_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = h_config(dir.path(), "");
    let out = dir.path().join("sim");
    assert_eq!(code(&sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out), "--seed", "1"])), 0);
    let o = sctomo(&[
        "reconstruct",
        "--counts",
        s(&out.join("counts.csv")),
        "--settings",
        s(&out.join("settings.json")),
        "--mode",
        "st",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mode st"), "{}", stderr(&o));
}

#[test]
fn mc_flag_appends_error_bars() {
    let dir = TempDir::new().unwrap();
    let cfg = h_config(dir.path(), "");
    let out = dir.path().join("sim");
    assert_eq!(code(&sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out), "--seed", "2"])), 0);
    let result = dir.path().join("r.json");
    let o = sctomo(&[
        "reconstruct",
        "--counts",
        s(&out.join("counts.csv")),
        "--settings",
        s(&out.join("settings.json")),
        "--mc",
        "200",
        "--out",
        s(&result),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bars = json(&result)["error_bars"].as_array().unwrap().clone();
    let names: Vec<&str> = bars.iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["fidelity", "alpha_0"]);
    for b in &bars {
        assert_eq!(b["n_resamples"].as_u64().unwrap() + b["failures"].as_u64().unwrap(), 200);
        assert!(b["std"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn non_convergence_exits_3_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let cfg = h_config(dir.path(), "");
    let out = dir.path().join("sim");
    assert_eq!(code(&sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out), "--seed", "3"])), 0);
    let result = dir.path().join("r.json");
    let o = sctomo(&[
        "reconstruct",
        "--counts",
        s(&out.join("counts.csv")),
        "--settings",
        s(&out.join("settings.json")),
        "--max-evals",
        "5",
        "--out",
        s(&result),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(json(&result)["converged"], false);
}

#[test]
fn suite_writes_fourteen_files_and_an_index() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"true_alphas": [0.5235987755982988], "photons_per_setting": 500, "seed": 7}"#,
    );
    let out = dir.path().join("suite");
    let o = sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out), "--suite"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let counts: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("counts_"))
        .collect();
    assert_eq!(counts.len(), 14);
    let index = json(&out.join("index.json"));
    assert_eq!(index["states"].as_array().unwrap().len(), 14);
    assert_eq!(index["states"][0]["label"], "R");
}

#[test]
fn missing_seed_is_drawn_and_recorded() {
    let dir = TempDir::new().unwrap();
    let cfg = h_config(dir.path(), "");
    let out = dir.path().join("sim");
    assert_eq!(code(&sctomo(&["simulate", "--config", s(&cfg), "--out", s(&out)])), 0);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["seed_source"], "entropy");
    let seed = m["seed"].as_u64().unwrap();
    assert_eq!(m["resolved_config"]["seed"].as_u64(), Some(seed));
    // Replaying the recorded seed reproduces the counts.
    let again = dir.path().join("again");
    let o = sctomo(&["simulate", "--config", s(&cfg), "--out", s(&again), "--seed", &seed.to_string()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(out.join("counts.csv")).unwrap(), fs::read(again.join("counts.csv")).unwrap());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let zero = h_config(dir.path(), "").to_str().unwrap().to_string();
    let text = fs::read_to_string(&zero).unwrap().replace("1000", "0");
    let zero = write(dir.path(), "zero.json", &text);
    let o = sctomo(&["simulate", "--config", s(&zero), "--out", s(&out), "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("photons_per_setting"), "{}", stderr(&o));

    let bad = write(dir.path(), "bad.json", "{\n  \"photons_per_setting\": \"many\"\n}");
    let o = sctomo(&["simulate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("photons_per_setting") && e.contains("line 2"), "{e}");

    let newer = write(dir.path(), "newer.json", r#"{"format_version": "2.0", "photons_per_setting": 10}"#);
    let o = sctomo(&["simulate", "--config", s(&newer), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("newer"), "{}", stderr(&o));

    let o = sctomo(&["simulate", "--config", s(&dir.path().join("absent.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn count_setting_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let settings = dir.path().join("s.json");
    assert_eq!(code(&sctomo(&["settings", "--out", s(&settings)])), 0);
    let counts = write(dir.path(), "c.csv", "setting_id,count,expected\nU9:R,5,\n");
    let o = sctomo(&["reconstruct", "--counts", s(&counts), "--settings", s(&settings)]);
    assert_eq!(code(&o), 2);
}

fn noise_config(dir: &Path, photons: &str) -> PathBuf {
    write(
        dir,
        "noise.json",
        &format!(
            r#"{{"state": {{"kind": "bloch_pure", "theta": 1.5707963267948966, "phi": 0.0}},
                 "alpha": 0.09817477042468103, "photons": {photons}, "runs": 100, "base_seed": 11}}"#
        ),
    )
}

#[test]
fn noise_sweep_writes_one_histogram_per_level() {
    let dir = TempDir::new().unwrap();
    let cfg = noise_config(dir.path(), "[150, 500, 1000, 3000]");
    let out = dir.path().join("noise");
    let o = sctomo(&["sweep", "noise", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let hist: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("histogram_"))
        .collect();
    assert_eq!(hist.len(), 4);
    let summary = json(&out.join("summary.json"));
    for p in summary["points"].as_array().unwrap() {
        let h = &p["fidelity_histogram"];
        let total = h["total"].as_u64().unwrap() + h["out_of_range"].as_u64().unwrap() + h["missing"].as_u64().unwrap();
        assert_eq!(total, 100);
    }
    let rows = fs::read_to_string(out.join("cells.csv")).unwrap().lines().count();
    assert_eq!(rows, 2 + 400);
}

#[test]
fn empty_photon_list_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = noise_config(dir.path(), "[]");
    let o = sctomo(&["sweep", "noise", "--config", s(&cfg), "--out", s(&dir.path().join("n"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("photon level"), "{}", stderr(&o));
}

#[test]
fn retardance_sweep_over_the_suite() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "ret.json",
        r#"{"states": "suite", "alphas": [0.19634954084936207, 0.5235987755982988], "photons": 1000, "runs": 1,
            "optimizer": {"n_starts": 12}}"#,
    );
    let out = dir.path().join("ret");
    let o = sctomo(&["sweep", "retardance", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("cells.csv")).unwrap().lines().count();
    assert_eq!(rows, 2 + 14 * 2);
    assert!(out.join("histogram_01.csv").exists());
    assert_eq!(json(&out.join("manifest.json"))["command"], "sweep_retardance");
}

#[test]
fn commands_are_idempotent() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "ret.json",
        r#"{"states": [{"kind": "bloch_pure", "theta": 1.0, "phi": 2.0}], "alphas": [0.7], "photons": 300, "runs": 3}"#,
    );
    let out = dir.path().join("out");
    let files = ["cells.csv", "histogram_00.csv", "summary.json", "manifest.json"];
    let run = || {
        assert_eq!(code(&sctomo(&["sweep", "retardance", "--config", s(&cfg), "--out", s(&out)])), 0);
        files.map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn compare_emits_concurrences() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cmp.json",
        r#"{"source": {"kind": "two_qubit_ab", "a": [0.7071067811865476, 0], "b": [0.7071067811865476, 0]},
            "true_alphas": [0.7853981633974483, 0.7853981633974483], "photons": 5000, "noiseless": true}"#,
    );
    let out = dir.path().join("cmp.json.out");
    let o = sctomo(&["compare", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = json(&out);
    assert!((c["c_sct"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!((c["c_st"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn settings_command_prints_manifest() {
    let o = sctomo(&["settings", "--protocol", "st", "--qubits", "2"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_unknowns"], 0);
    assert_eq!(v["settings"].as_array().unwrap().len(), 36);
    assert_eq!(code(&sctomo(&["settings", "--qubits", "3"])), 2);
}
