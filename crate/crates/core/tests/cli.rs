use std::path::{Path, PathBuf};

use hoi_core::cli::run;
use hoi_core::framepair::SelectionThresholds;
use hoi_core::hand::{generate_capsule_hand_template, HandTemplate, TemplateConfig};
use hoi_core::synth::{synthetic_clip, synthetic_correspondences, write_clip, write_grasp_fixture};
use serde_json::Value;

fn template() -> HandTemplate {
    generate_capsule_hand_template(&TemplateConfig::default()).unwrap()
}

fn hoi(args: &[&str]) -> i32 {
    run(std::iter::once("hoi").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn template_command_writes_envelope() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "template"]), 0);
    let v = read(out.join("template.json"));
    assert_eq!(v["format_version"], "hoi-1");
    assert_eq!(v["config"]["contact"]["k"], 8);
    assert_eq!(v["template"]["joints"].as_array().unwrap().len(), 21);
    assert!(out.join("template.obj").exists());
}

#[test]
fn contact_command_writes_one_file_per_sample() {
    let d = tempfile::tempdir().unwrap();
    let m = write_grasp_fixture(&d.path().join("data"), &template(), 3, 1, 600, (0.0, 0.0), 0.0).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "contact", p(&m)]), 0);
    for id in ["s000", "s001", "s002"] {
        let v = read(out.join("contact").join(format!("{id}.json")));
        assert_eq!(v["id"], id);
        assert_eq!(v["label7"].as_str().unwrap().len(), 7);
        assert!(v["hand_contact_count"].as_u64().unwrap() > 0);
        assert_eq!(v["object_contact"].as_array().unwrap().len(), 600);
    }
    let s = read(out.join("contact_summary.json"));
    assert_eq!(s["processed"].as_array().unwrap().len(), 3);
    assert!(s["errors"].as_array().unwrap().is_empty());
}

#[test]
fn missing_file_is_a_partial_failure() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("data");
    let m = write_grasp_fixture(&data, &template(), 2, 5, 400, (0.0, 0.0), 0.0).unwrap();
    std::fs::remove_file(data.join("s001.obj")).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "contact", p(&m)]), 2);
    let s = read(out.join("contact_summary.json"));
    assert_eq!(s["processed"], serde_json::json!(["s000"]));
    assert_eq!(s["errors"][0]["id"], "s001");
    assert!(out.join("contact/s000.json").exists());
}

#[test]
fn empty_manifest_succeeds() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("manifest.jsonl");
    std::fs::write(&m, "\n").unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "contact", p(&m)]), 0);
    assert_eq!(hoi(&["--out", p(&out), "metrics", p(&m)]), 0);
    let v = read(out.join("metrics.json"));
    assert!(v["report"]["samples"].as_array().unwrap().is_empty());
}

#[test]
fn hard_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "contact", p(&d.path().join("absent.jsonl"))]), 1);
    let bad = write_config(d.path(), r#"{"contact": {"alpha": 2.0}}"#);
    assert_eq!(hoi(&["--config", p(&bad), "--out", p(&out), "template"]), 1);
    assert_eq!(hoi(&["--bogus-flag"]), 1);
    assert_eq!(hoi(&["--out", p(&out), "framepair", p(d.path())]), 1);
}

#[test]
fn metrics_on_exact_predictions() {
    let d = tempfile::tempdir().unwrap();
    let m = write_grasp_fixture(&d.path().join("data"), &template(), 4, 9, 600, (0.0, 0.0), 0.0).unwrap();
    let cfg = write_config(d.path(), r#"{"metrics": {"kmeans_k": 2}}"#);
    let out = d.path().join("out");
    assert_eq!(hoi(&["--config", p(&cfg), "--out", p(&out), "metrics", p(&m)]), 0);
    let v = read(out.join("metrics.json"));
    for row in v["report"]["samples"].as_array().unwrap() {
        assert_eq!(row["mpvpe"], 0.0);
        assert_eq!(row["p_iou"], 1.0);
        assert_eq!(row["p_f1"], 1.0);
    }
    assert!(v["report"]["p_fid"]["value"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(v["report"]["diversity"]["k"], 2);
    let table = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(table.lines().last().unwrap().starts_with("mean"));
}

#[test]
fn metrics_without_enough_samples_omits_diversity() {
    let d = tempfile::tempdir().unwrap();
    let m = write_grasp_fixture(&d.path().join("data"), &template(), 2, 3, 400, (2.0, 5.0), 0.02).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "metrics", p(&m)]), 0);
    let v = read(out.join("metrics.json"));
    assert!(v["report"]["diversity"].is_null());
    assert!(v["notes"][0].as_str().unwrap().starts_with("diversity omitted"));
    assert!(v["report"]["samples"][0]["mpvpe"].as_f64().unwrap() > 0.0);
}

#[test]
fn refine_writes_trace_and_improves() {
    let d = tempfile::tempdir().unwrap();
    let m = write_grasp_fixture(&d.path().join("data"), &template(), 2, 11, 500, (10.0, 15.0), 0.05).unwrap();
    let cfg = write_config(d.path(), r#"{"tta": {"iterations": 60}}"#);
    let out = d.path().join("out");
    assert_eq!(hoi(&["--config", p(&cfg), "--out", p(&out), "refine", p(&m)]), 0);
    let v = read(out.join("refine/s000.json"));
    assert_eq!(v["iterations"], 60);
    assert!(v["best"]["total"].as_f64().unwrap() < v["initial"]["total"].as_f64().unwrap());
    let csv = std::fs::read_to_string(out.join("refine/s000_trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 62);
    assert_eq!(csv.lines().next().unwrap(), "iteration,total,contact,pene,anatomy,self,cyc");
}

#[test]
fn refine_single_scene() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("data");
    let t = template();
    write_grasp_fixture(&data, &t, 1, 4, 400, (5.0, 5.0), 0.0).unwrap();
    let g = hoi_core::synth::synthetic_grasp(&t, 4, 400).unwrap();
    let pred: Value = read(data.join("s000_pred.json"));
    let scene = serde_json::json!({
        "id": "one",
        "object_mesh": "s000.obj",
        "object_points": "s000.xyz",
        "init": pred,
        "hand_contact": g.hand_contact,
        "object_contact": g.object_contact,
        "tta": {"iterations": 10},
    });
    let sp = data.join("scene.json");
    std::fs::write(&sp, scene.to_string()).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "refine", "--scene", p(&sp)]), 0);
    let v = read(out.join("refine/one.json"));
    assert_eq!(v["config"]["tta"]["iterations"], 10);
    assert_eq!(v["iterations"], 10);
}

#[test]
fn framepair_command_on_rotating_clip() {
    let d = tempfile::tempdir().unwrap();
    let clip = synthetic_clip(12, (4, 7), 6.0, (96, 96)).unwrap();
    let corr: Vec<_> = (0..12).map(|t| synthetic_correspondences(&clip, 0, t, 40, 0.1, 0.0, t as u64)).collect();
    let dir = d.path().join("clip");
    write_clip(&dir, &clip, &corr).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "framepair", p(&dir)]), 0);
    let v = read(out.join("framepair.json"));
    assert_eq!(v["result"]["i_ref"], 3);
    assert!((v["result"]["period"][0].as_u64().unwrap()) <= 4);
    assert_eq!(v["config"]["selection"], serde_json::to_value(SelectionThresholds::default()).unwrap());
    assert!(out.join("inpaint.pgm").exists());
}

#[test]
fn resample_balances_labels() {
    let d = tempfile::tempdir().unwrap();
    let m = write_grasp_fixture(&d.path().join("data"), &template(), 4, 21, 500, (0.0, 0.0), 0.0).unwrap();
    let out = d.path().join("out");
    assert_eq!(hoi(&["--out", p(&out), "resample", p(&m)]), 0);
    let v = read(out.join("resample.json"));
    let indices = v["indices"].as_array().unwrap();
    assert!(indices.len() >= 4);
    assert_eq!(v["resampled_ids"].as_array().unwrap().len(), indices.len());
}

#[test]
fn binary_reports_partial_failure_code() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("manifest.jsonl");
    std::fs::write(&m, r#"{"id": "x", "object_mesh": "none.obj", "gt_params": "none.json"}"#).unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_hoi"))
        .args(["--out", p(&d.path().join("out")), "contact", p(&m)])
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
