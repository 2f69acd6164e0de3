use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("OPTOMECH_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Header lines and data rows of a CSV written by the tool.
fn read_csv(p: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(p).unwrap();
    let header: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(String::from).collect();
    let body: String = text.lines().skip(header.len()).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let cols = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, cols, rows)
}

fn column(cols: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = cols.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn missing_file_exits_two_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["meanfield", "does/not/exist.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["path"], "does/not/exist.json");
    assert_eq!(e["error"], "InputIo");
}

#[test]
fn bad_scenarios_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"schema_version": 1, "system": {"coupling_kind": "linear", "cavity": {"kappa_hz": 1.0}, "modes": [{"omega_hz": 1.0, "g_hz": 0.1}]}, "extra": 1}"#, "Parse"),
        (r#"{"schema_version": 9, "system": {"coupling_kind": "linear", "cavity": {"kappa_hz": 1.0}, "modes": [{"omega_hz": 1.0, "g_hz": 0.1}]}}"#, "Validation"),
        (r#"{"schema_version": 1, "system": {"coupling_kind": "linear", "cavity": {"kappa_hz": -1.0}, "modes": [{"omega_hz": 1.0, "g_hz": 0.1}]}}"#, "Validation"),
        ("{ not json", "Parse"),
    ];
    for (i, (text, kind)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.json"));
        fs::write(&p, text).unwrap();
        let o = run(&["meanfield", p.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "case {i}");
        let e = stderr_json(&o);
        assert_eq!(e["error"], *kind, "case {i}: {e}");
        assert!(e.get("path").is_some() || e.get("field").is_some());
    }
}

#[test]
fn missing_block_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["transfer", scenario("fig2.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["field"], "transfer");
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: Value = serde_json::from_slice(&fs::read(scenario("fig3.json")).unwrap()).unwrap();
    // Without a forced common frequency the cold-damping-only drift is undefined.
    v["evolve"]["common_frequency"] = Value::Bool(false);
    let p = dir.path().join("mismatch.json");
    fs::write(&p, v.to_string()).unwrap();
    let o = run(&["evolve", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "MismatchedFrequencies");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "Usage");
    let o = run(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn match_fig2_lists_two_red_detunings() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["match", scenario("fig2.json").to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let (header, cols, rows) = read_csv(&dir.path().join("fig2_match.csv"));
    assert!(header.iter().any(|l| l.starts_with("# config_sha256: ")));
    let side = cols.iter().position(|c| c == "side").unwrap();
    assert_eq!(rows.iter().filter(|r| r[side] == "red").count(), 2);
    assert_eq!(rows.iter().filter(|r| r[side] == "blue").count(), 2);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().contains("delta_bar_hz"));
}

#[test]
fn evolve_fig3_coupled_cooling_is_slower() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["evolve", scenario("fig3.json").to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, cols, rows) = read_csv(&dir.path().join("fig3_evolve.csv"));
    for c in ["t_s", "V_0_0", "V_3_3", "nu_sympl_0", "ref_V_0_0", "ref_phonons_1"] {
        assert!(cols.iter().any(|x| x == c), "missing {c}");
    }
    let t = column(&cols, &rows, "t_s");
    let k = t.iter().position(|&x| x > 1e-4).unwrap();
    for j in 0..2 {
        let coupled = column(&cols, &rows, &format!("V_{}_{}", 2 * j, 2 * j));
        let single = column(&cols, &rows, &format!("ref_V_{}_{}", 2 * j, 2 * j));
        assert!(coupled[k] > single[k], "mode {j}: {} vs {}", coupled[k], single[k]);
    }
    let sy = column(&cols, &rows, "nu_sympl_0");
    assert!(sy.iter().all(|&x| x >= 0.25 - 1e-9));
}

#[test]
fn json_format_wraps_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--format", "json", "--seed", "5", "sweep", scenario("fig4.json").to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("fig4_sweep.json")).unwrap()).unwrap();
    assert_eq!(v["metadata"]["seed"], 5);
    assert_eq!(v["metadata"]["calibration"]["c_o"], 2.0);
    assert_eq!(v["metadata"]["tool"], "optomech");
    assert_eq!(v["result"].as_array().unwrap().len(), 2001);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(["meanfield", scenario("quadratic_fwm.json").to_str().unwrap()])
        .env("OPTOMECH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("quadratic_fwm_branches.csv").exists());
}

#[test]
fn fwm_output_independent_of_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("quadratic_fwm.json");
    let args = |t: &'static str| ["--threads", t, "--seed", "11", "fwm", s.to_str().unwrap(), "--n-traj", "16"];
    assert!(run(&args("1"), a.path()).status.success());
    assert!(run(&args("4"), b.path()).status.success());
    for f in ["quadratic_fwm_fwm.csv", "quadratic_fwm_fwm_spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn same_inputs_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("fig5.json");
    assert!(run(&["transfer", s.to_str().unwrap()], a.path()).status.success());
    assert!(run(&["transfer", s.to_str().unwrap()], b.path()).status.success());
    for f in ["fig5_transfer.csv", "fig5_transfer_summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn transfer_flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("fig5.json");
    let o = run(&["transfer", s.to_str().unwrap(), "--sweep-phase", "9", "--squeeze-N", "0,1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, cols, rows) = read_csv(&dir.path().join("fig5_phase_sweep.csv"));
    assert_eq!(cols, ["phase_rad", "F_N0", "F_N1"]);
    assert_eq!(rows.len(), 9);

    let o = run(&["transfer", s.to_str().unwrap(), "--initial", "coherent:1:0,vacuum"], dir.path());
    assert!(o.status.success());
    let o = run(&["transfer", s.to_str().unwrap(), "--initial", "squeezed:0.1:0.1,vacuum"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_bundled_scenario_loads() {
    let dir = fs::read_dir(scenario("")).unwrap();
    let mut n = 0;
    for entry in dir {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            optomech::config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 7);
}
