mod common;

use std::path::Path;
use std::process::{Command, Output};

fn sago(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sago"))
        .args(args)
        .env("SAGO_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&sago(&["frobnicate"])), 1);
    assert_eq!(code(&sago(&["sample", "--beta", "warm"])), 1);
    assert_eq!(code(&sago(&["render"])), 1);
    assert_eq!(code(&sago(&["--help"])), 0);
}

#[test]
fn validate_reports_kind_and_errors() {
    let dir = common::data_dir();
    for f in ["skeleton.json", "scenes.json", "catalog.json"] {
        let o = sago(&["validate", path(&dir.join(f))]);
        assert_eq!(code(&o), 0, "{f}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(dir.join("catalog.json")).unwrap();
    let cut = tmp.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&sago(&["validate", path(&cut)])), 2);
    assert_eq!(code(&sago(&["validate", "--kind", "layout", path(&dir.join("catalog.json"))])), 2);
}

#[test]
fn empty_training_set_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scenes = tmp.path().join("scenes.json");
    std::fs::write(&scenes, "[]").unwrap();
    let skeleton = common::data_dir().join("skeleton.json");
    let o = sago(&["learn", "--skeleton", path(&skeleton), "--scenes", path(&scenes), "--out", path(&tmp.path().join("g.json"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no training scenes"));
}

#[test]
fn stage_commands_chain_together() {
    let dir = common::data_dir();
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let grammar = t.join("grammar.json");
    let run = |args: &[&str]| {
        let o = sago(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&[
        "learn",
        "--skeleton",
        path(&dir.join("skeleton.json")),
        "--scenes",
        path(&dir.join("scenes.json")),
        "--iterations",
        "5",
        "--out",
        path(&grammar),
    ]);
    run(&["--seed", "4", "sample", "--grammar", path(&grammar), "--chains", "2", "--out", path(&t.join("pg"))]);
    let pg0 = t.join("pg/scene_0000.json");
    run(&["validate", "--kind", "parse-graph", path(&pg0)]);
    run(&[
        "instantiate",
        "--catalog",
        path(&dir.join("catalog.json")),
        "--out",
        path(&t.join("layouts")),
        "--obj",
        path(&pg0),
    ]);
    let layout = t.join("layouts/scene_0000.layout.json");
    run(&["validate", path(&layout)]);
    assert!(t.join("layouts/scene_0000.obj").exists());
    let cam = t.join("cam.json");
    std::fs::write(
        &cam,
        r#"{"position": [0.5, 0.5, 1.6], "look_at": [2.0, 2.0, 0.8], "width": 40, "height": 30, "fx": 30, "fy": 30, "cx": 20, "cy": 15}"#,
    )
    .unwrap();
    run(&["render", "--camera", path(&cam), "--channels", "depth,instance", "--out", path(&t.join("frames")), path(&layout)]);
    let names: Vec<String> = std::fs::read_dir(t.join("frames"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with("_depth.pfm")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with("_instance.png")), "{names:?}");
    assert!(!names.iter().any(|n| n.ends_with("_normal.png")), "{names:?}");
}

#[test]
fn pipeline_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::data_dir().join("pipeline.json");
    let out = tmp.path().join("out");
    let o = sago(&["--seed", "2", "--config", path(&cfg), "pipeline", "--n", "1", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let artifacts = m["artifacts"].as_array().unwrap();
    assert!(artifacts.iter().any(|a| a["kind"] == "layout"));
    for a in artifacts {
        assert!(out.join(a["path"].as_str().unwrap()).exists());
    }
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let o = sago(&["validate", "/nonexistent/thing.json"]);
    assert_eq!(code(&o), 2);
}
