use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mudae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mudae"))
        .current_dir(dir)
        .env_remove("MUDAE_THREADS")
        .args(args)
        .output()
        .expect("spawn mudae")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn json(dir: &Path, rel: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, rel)).unwrap()
}

#[test]
fn malformed_model_file_is_error_with_location() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.json"), "{\n  \"n\": 2,\n  \"m\": \n}").unwrap();
    let o = mudae(t.path(), &["--file", "bad.json", "model"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    fs::write(t.path().join("short.json"), r#"{"n": 2, "m": 2}"#).unwrap();
    let o = mudae(t.path(), &["--file", "short.json", "model"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing field"), "{}", stderr(&o));
}

#[test]
fn exported_model_reimports_identically() {
    let t = TempDir::new().unwrap();
    let a = mudae(t.path(), &["model", "--export", "twobus.json", "--out", "a"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = mudae(t.path(), &["--file", "twobus.json", "model", "--out", "b"]);
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    assert_eq!(a.stdout, b.stdout);

    let e1 = mudae(t.path(), &["eigs", "--out", "a"]);
    let e2 = mudae(t.path(), &["--file", "twobus.json", "eigs", "--out", "b"]);
    assert_eq!(code(&e1), 0);
    assert_eq!(code(&e2), 0, "{}", stderr(&e2));
    assert_eq!(read(t.path(), "a/eigs.csv"), read(t.path(), "b/eigs.csv"));
}

#[test]
fn oversize_box_completes_uncertified() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("box.json"), r#"{"boxes": {"0": [-1.0, 3.0]}}"#).unwrap();
    let o = mudae(t.path(), &["certify", "box", "--box-file", "box.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let cert = json(t.path(), "mudae-out/box_certificate.json");
    assert_eq!(cert["certified"], false);
    assert!(t.path().join("mudae-out/certify_box.manifest.json").exists());
}

#[test]
fn unstable_point_completes_uncertified() {
    let t = TempDir::new().unwrap();
    let o = mudae(t.path(), &["certify", "point", "--at", "2.5,0,1.0,0.0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn grown_box_recertifies_bit_exactly() {
    let t = TempDir::new().unwrap();
    let g = mudae(t.path(), &["certify", "grow", "--weights", "1,0,0.2,1", "--out", "g"]);
    assert_eq!(code(&g), 0, "{}", stderr(&g));
    let b = mudae(t.path(), &["certify", "box", "--box-file", "g/grow.json", "--out", "b"]);
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let grown = json(t.path(), "g/grow.json");
    let rechecked = json(t.path(), "b/box_certificate.json");
    let bits = |v: &serde_json::Value| v.as_f64().unwrap().to_bits();
    assert_eq!(bits(&grown["zeta_star"]), bits(&rechecked["zeta_star"]));
    assert!(grown["zeta_star"].as_f64().unwrap() < 0.0);
}

#[test]
fn area_with_zero_samples_is_error() {
    let t = TempDir::new().unwrap();
    let o = mudae(t.path(), &["area", "--samples", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
}

#[test]
fn zero_width_sweep_writes_one_row() {
    let t = TempDir::new().unwrap();
    let o = mudae(t.path(), &["rootlocus", "--from", "0.3", "--to", "0.3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(t.path(), "mudae-out/rootlocus.csv");
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn default_root_locus_flags_a_crossing() {
    let t = TempDir::new().unwrap();
    let o = mudae(t.path(), &["rootlocus"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(t.path(), "mudae-out/rootlocus.csv");
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "crossing_flag").unwrap();
    let flagged = csv.lines().skip(1).filter(|l| l.split(',').nth(col) == Some("1")).count();
    assert!(flagged >= 1);
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let t = TempDir::new().unwrap();
    let grid = "delta:-0.5:2.0:15,|vx+jvy|:0.5:1.5:15";
    for (threads, out) in [("1", "t1"), ("4", "t4")] {
        let s = mudae(t.path(), &["--threads", threads, "--out", out, "scan", "--grid", grid]);
        assert_eq!(code(&s), 0, "{}", stderr(&s));
        let a = mudae(t.path(), &["--threads", threads, "--out", out, "area", "--samples", "150"]);
        assert_eq!(code(&a), 0, "{}", stderr(&a));
    }
    for f in ["scan.csv", "area.csv", "fit.json"] {
        assert_eq!(read(t.path(), &format!("t1/{f}")), read(t.path(), &format!("t4/{f}")), "{f}");
    }
    for f in ["scan.manifest.json", "area.manifest.json"] {
        let (m1, m4) = (json(t.path(), &format!("t1/{f}")), json(t.path(), &format!("t4/{f}")));
        assert_eq!(m1["outputs"], m4["outputs"], "{f}");
        assert!(m1["options"].get("threads").is_none());
    }
}

#[test]
fn rerun_reproduces_outputs_and_manifest() {
    let t = TempDir::new().unwrap();
    for out in ["r1", "r2"] {
        let o = mudae(t.path(), &["--out", out, "sensitivity", "--steps", "12"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(read(t.path(), "r1/sensitivity.csv"), read(t.path(), "r2/sensitivity.csv"));
    let m1 = json(t.path(), "r1/sensitivity.manifest.json");
    let m2 = json(t.path(), "r2/sensitivity.manifest.json");
    assert_eq!(m1["outputs"], m2["outputs"]);
    assert_eq!(m1["inputs"], m2["inputs"]);
    assert_eq!(m1["toolkit"], "mudae");
    assert!(m1["version"].is_string());
    assert_eq!(m1["options"]["steps"], 12);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let t = TempDir::new().unwrap();
    fs::write(
        t.path().join("run.toml"),
        "out = \"cfg\"\n[rootlocus]\nsteps = 7\nto = 0.5\n[twobus]\nd_damp = 0.3\n",
    )
    .unwrap();
    let o = mudae(t.path(), &["--config", "run.toml", "rootlocus", "--steps", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(t.path(), "cfg/rootlocus.manifest.json");
    assert_eq!(m["options"]["steps"], 5);
    assert_eq!(m["options"]["to"].as_f64(), Some(0.5));
    assert_eq!(m["options"]["twobus"]["d_damp"].as_f64(), Some(0.3));
    assert!(m["inputs"]["config"].is_string());
    assert_eq!(read(t.path(), "cfg/rootlocus.csv").lines().count(), 6);
}

#[test]
fn bad_thread_env_is_error() {
    let t = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mudae"))
        .current_dir(t.path())
        .env("MUDAE_THREADS", "many")
        .arg("model")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("MUDAE_THREADS"));
}
