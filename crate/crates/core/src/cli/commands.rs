use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Envelope, RunConfig};
use super::manifest::{read_json, LoadedSample, Manifest, SampleRecord};
use super::Outcome;
use crate::contact::{compute_contact_maps, dataset_contact_annotation, ContactMap};
use crate::error::{Error, Result};
use crate::framepair::{select_frame_pair, FramePairResult, MaskSequence};
use crate::geom::io::{read_obj, read_xyz, write_obj, write_pgm};
use crate::geom::PointCloud;
use crate::hand::{
    balance_resample, contact_label7, contact_parts17, generate_capsule_hand_template, pose_hand, ContactLabel7,
    HandParams, HandTemplate, PosedHand,
};
use crate::metrics::{
    diversity, diversity_features, mpvpe, p_fid, part_iou_f1, penetration_depth, penetration_volume, set_iou_f1,
    MetricReport, PFidSummary, PartGranularity, SampleMetrics,
};
use crate::refine::{tta_refine, LossBreakdown, RefineScene, RefineWeights, TtaConfig, TtaResult};

#[derive(Debug, Clone, Serialize)]
struct SampleError {
    id: String,
    error: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    processed: Vec<String>,
    errors: Vec<SampleError>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, body: T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope::new(cfg, body))?;
    text.push('\n');
    write_text(path, &text)
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

fn build_template(cfg: &RunConfig) -> Result<HandTemplate> {
    generate_capsule_hand_template(&cfg.template)
}

fn check_id(id: &str, seen: &mut HashSet<String>) -> Result<()> {
    let bad = id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']);
    if bad {
        return Err(Error::Invalid(format!("sample id {id:?} is not usable as a file name")));
    }
    if !seen.insert(id.to_string()) {
        return Err(Error::Invalid(format!("duplicate sample id {id:?}")));
    }
    Ok(())
}

/// Runs `f` on every record in parallel and returns results in manifest
/// order. Ids are checked up front so bad ids fail only their own record.
fn for_each_sample<T, F>(cfg: &RunConfig, manifest: &Manifest, f: F) -> Result<Vec<(String, Result<T>)>>
where
    T: Send,
    F: Fn(usize, &SampleRecord, LoadedSample) -> Result<T> + Sync,
{
    let mut seen = HashSet::new();
    let id_checks: Vec<Result<()>> = manifest.records.iter().map(|r| check_id(&r.id, &mut seen)).collect();
    let results = pool(cfg)?.install(|| {
        manifest
            .records
            .par_iter()
            .zip(id_checks)
            .enumerate()
            .map(|(i, (rec, checked))| {
                let res = checked
                    .and_then(|_| rec.load(&manifest.dir, cfg.stream_seed("sampling", i as u64), cfg.object_points))
                    .and_then(|loaded| f(i, rec, loaded));
                if let Err(e) = &res {
                    log::warn!("sample {}: {e}", rec.id);
                }
                (rec.id.clone(), res)
            })
            .collect()
    });
    Ok(results)
}

fn split<T>(results: Vec<(String, Result<T>)>) -> (Vec<(String, T)>, Vec<SampleError>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => errors.push(SampleError { id, error: e.to_string() }),
        }
    }
    (ok, errors)
}

fn finish(cfg: &RunConfig, out: &Path, command: &str, processed: Vec<String>, errors: Vec<SampleError>) -> Result<Outcome> {
    let outcome = Outcome { succeeded: processed.len(), failed: errors.len() };
    write_json(&out.join(format!("{command}_summary.json")), cfg, Summary { command, processed, errors })?;
    log::info!("{command}: {} succeeded, {} failed", outcome.succeeded, outcome.failed);
    Ok(outcome)
}

fn hand_cloud(hand: &PosedHand) -> Result<PointCloud> {
    PointCloud::new(hand.vertices.clone())
}

#[derive(Serialize)]
struct ContactBody<'a> {
    id: &'a str,
    action: Option<&'a str>,
    label7: ContactLabel7,
    parts17: u32,
    hand_contact_count: usize,
    object_contact_count: usize,
    hand_contact: ContactMap,
    object_contact: ContactMap,
}

pub fn contact(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<Outcome> {
    let template = build_template(cfg)?;
    let results = for_each_sample(cfg, manifest, |_, rec, s| {
        let hand = hand_cloud(&pose_hand(&template, &s.gt))?;
        let ann = dataset_contact_annotation(&hand, &s.cloud, template.part_labels(), &cfg.contact)?;
        let parts17 = contact_parts17(&ann.hand_contact, template.part_labels(), cfg.contact.min_hits)?;
        let body = ContactBody {
            id: &rec.id,
            action: rec.action.as_deref(),
            label7: ann.label7,
            parts17,
            hand_contact_count: ann.hand_contact.count(),
            object_contact_count: ann.object_contact.count(),
            hand_contact: ann.hand_contact,
            object_contact: ann.object_contact,
        };
        write_json(&out.join("contact").join(format!("{}.json", rec.id)), cfg, body)
    })?;
    let (ok, errors) = split(results);
    finish(cfg, out, "contact", ok.into_iter().map(|(id, _)| id).collect(), errors)
}

struct MetricSample {
    row: SampleMetrics,
    pred: PosedHand,
    pred_cloud: PointCloud,
    gt_cloud: PointCloud,
}

fn sample_metrics(cfg: &RunConfig, template: &HandTemplate, id: &str, s: LoadedSample) -> Result<MetricSample> {
    let pred_params = s.pred.ok_or_else(|| Error::Invalid(format!("sample {id}: no pred_params")))?;
    let pred = pose_hand(template, &pred_params);
    let gt = pose_hand(template, &s.gt);
    let m = &cfg.metrics;
    let hand_mesh = template.mesh().with_vertices(pred.vertices.clone())?;
    let pred_cloud = hand_cloud(&pred)?;
    let gt_cloud = hand_cloud(&gt)?;
    let (_, pred_contact) = compute_contact_maps(&s.cloud, &pred_cloud, &cfg.contact)?;
    let gt_contact = match s.hand_contact {
        Some(c) => c,
        None => compute_contact_maps(&s.cloud, &gt_cloud, &cfg.contact)?.1,
    };
    let labels = template.part_labels();
    let hits = cfg.contact.min_hits;
    let (p_iou, p_f1) = match m.parts {
        PartGranularity::Categories7 => {
            part_iou_f1(contact_label7(&pred_contact, labels, hits)?, contact_label7(&gt_contact, labels, hits)?)
        }
        PartGranularity::Parts17 => {
            set_iou_f1(contact_parts17(&pred_contact, labels, hits)?, contact_parts17(&gt_contact, labels, hits)?)
        }
    };
    let row = SampleMetrics {
        id: id.to_string(),
        mpvpe: mpvpe(&pred.vertices, &gt.vertices)?,
        pd: penetration_depth(&hand_mesh, &s.mesh)?,
        pv: penetration_volume(&hand_mesh, &s.mesh, m.voxel_size, m.cell_budget)?,
        p_iou,
        p_f1,
    };
    Ok(MetricSample { row, pred, pred_cloud, gt_cloud })
}

#[derive(Serialize)]
struct MetricsBody {
    report: MetricReport,
    notes: Vec<String>,
}

/// Per-sample rows plus set-level P-FID and diversity over the samples that
/// succeeded.
pub fn metrics(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<Outcome> {
    let template = build_template(cfg)?;
    let results = for_each_sample(cfg, manifest, |_, rec, s| sample_metrics(cfg, &template, &rec.id, s))?;
    let (ok, errors) = split(results);
    let m = &cfg.metrics;
    let mut notes = Vec::new();
    let pred_clouds: Vec<PointCloud> = ok.iter().map(|(_, s)| s.pred_cloud.clone()).collect();
    let gt_clouds: Vec<PointCloud> = ok.iter().map(|(_, s)| s.gt_cloud.clone()).collect();
    let p_fid = if ok.is_empty() {
        notes.push("P-FID omitted: no samples".into());
        None
    } else {
        match p_fid(&pred_clouds, &gt_clouds, m.extractor) {
            Ok(value) => Some(PFidSummary { value, extractor: m.extractor.name().to_string() }),
            Err(e) => {
                notes.push(format!("P-FID omitted: {e}"));
                None
            }
        }
    };
    let diversity = if ok.len() < m.kmeans_k {
        notes.push(format!("diversity omitted: {} samples for k = {}", ok.len(), m.kmeans_k));
        None
    } else {
        let features: Vec<Vec<f64>> = ok.iter().map(|(_, s)| diversity_features(&s.pred)).collect();
        Some(diversity(&features, m.kmeans_k, cfg.stream_seed("kmeans", 0), m.kmeans_max_iter)?)
    };
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    let report = MetricReport::new(ok.into_iter().map(|(_, s)| s.row).collect(), diversity, p_fid);
    write_text(&out.join("metrics.txt"), &report.table())?;
    write_json(&out.join("metrics.json"), cfg, MetricsBody { report, notes })?;
    finish(cfg, out, "metrics", processed, errors)
}

#[derive(Serialize)]
struct RefineBody<'a> {
    id: &'a str,
    init: &'a HandParams,
    params: &'a HandParams,
    best_iteration: usize,
    iterations: usize,
    initial: &'a LossBreakdown,
    best: &'a LossBreakdown,
}

fn write_refine(cfg: &RunConfig, out: &Path, id: &str, init: &HandParams, r: &TtaResult) -> Result<()> {
    let dir = out.join("refine");
    let body = RefineBody {
        id,
        init,
        params: &r.params,
        best_iteration: r.best_iteration,
        iterations: r.trace.len() - 1,
        initial: r.initial(),
        best: r.best(),
    };
    write_json(&dir.join(format!("{id}.json")), cfg, body)?;
    write_text(&dir.join(format!("{id}_trace.csv")), &r.trace_csv())
}

/// Refines `pred_params` (or `gt_params` when absent) against contact maps
/// read from the record or computed from the ground-truth pose.
pub fn refine(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<Outcome> {
    let template = build_template(cfg)?;
    let results = for_each_sample(cfg, manifest, |_, rec, s| {
        let (hand_contact, object_contact) = match (s.hand_contact, s.object_contact) {
            (Some(h), Some(o)) => (h, o),
            (h, o) => {
                let gt = hand_cloud(&pose_hand(&template, &s.gt))?;
                let (co, ch) = compute_contact_maps(&s.cloud, &gt, &cfg.contact)?;
                (h.unwrap_or(ch), o.unwrap_or(co))
            }
        };
        let init = s.pred.unwrap_or(s.gt);
        let scene = RefineScene::new(s.mesh, s.cloud, hand_contact, object_contact)?;
        let r = tta_refine(&template, &init, &scene, &cfg.weights, &cfg.tta)?;
        write_refine(cfg, out, &rec.id, &init, &r)?;
        Ok(r)
    })?;
    let (ok, errors) = split(results);
    finish(cfg, out, "refine", ok.into_iter().map(|(id, _)| id).collect(), errors)
}

/// Single refinement problem with inline parameters and contact maps; paths
/// are relative to the scene file.
#[derive(Debug, Deserialize)]
struct SceneFile {
    #[serde(default)]
    id: Option<String>,
    object_mesh: PathBuf,
    #[serde(default)]
    object_points: Option<PathBuf>,
    #[serde(default)]
    object_samples: Option<usize>,
    #[serde(default = "unit_scale")]
    scale: f64,
    init: HandParams,
    hand_contact: ContactMap,
    object_contact: ContactMap,
    #[serde(default)]
    weights: Option<RefineWeights>,
    #[serde(default)]
    tta: Option<TtaConfig>,
}

fn unit_scale() -> f64 {
    1.0
}

pub fn refine_scene(mut cfg: RunConfig, path: &Path, out: &Path) -> Result<Outcome> {
    let scene: SceneFile = read_json(path)?;
    if let Some(w) = scene.weights {
        cfg.weights = w;
    }
    if let Some(t) = scene.tta {
        cfg.tta = t;
    }
    cfg.validate()?;
    if !(scene.scale > 0.0) || !scene.scale.is_finite() {
        return Err(Error::Invalid("scene scale must be positive".into()));
    }
    let id = match scene.id {
        Some(id) => id,
        None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scene".into()),
    };
    check_id(&id, &mut HashSet::new())?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let s = scene.scale;
    let mesh = read_obj(&dir.join(&scene.object_mesh))?.transformed(|v| v * s);
    let cloud = match &scene.object_points {
        Some(p) => read_xyz(&dir.join(p))?.map(|v| v * s)?,
        None => mesh.sample_surface(
            scene.object_samples.unwrap_or(cfg.object_points),
            &mut ChaCha8Rng::seed_from_u64(cfg.stream_seed("sampling", 0)),
        )?,
    };
    let template = build_template(&cfg)?;
    let refine_scene = RefineScene::new(mesh, cloud, scene.hand_contact, scene.object_contact)?;
    let r = tta_refine(&template, &scene.init, &refine_scene, &cfg.weights, &cfg.tta)?;
    write_refine(&cfg, out, &id, &scene.init, &r)?;
    finish(&cfg, out, "refine", vec![id], Vec::new())
}

#[derive(Serialize)]
struct FramePairBody<'a> {
    clip: String,
    result: &'a FramePairResult,
}

pub fn framepair(cfg: &RunConfig, clip: &Path, out: &Path) -> Result<Outcome> {
    let seq = MaskSequence::load(clip)?;
    let result = select_frame_pair(&seq, &cfg.selection, cfg.stream_seed("ransac", 0))?;
    let name = clip.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(mask) = &result.inpaint_mask {
        write_pgm(&out.join("inpaint.pgm"), mask)?;
    }
    write_json(&out.join("framepair.json"), cfg, FramePairBody { clip: name, result: &result })?;
    log::info!("framepair: i_ref {} i_hoi {} theta {:.4} deg", result.i_ref, result.i_hoi, result.theta);
    Ok(Outcome { succeeded: 1, failed: 0 })
}

#[derive(Serialize)]
struct TemplateBody<'a> {
    template: &'a HandTemplate,
}

pub fn template(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let t = build_template(cfg)?;
    write_obj(&out.join("template.obj"), t.mesh())?;
    write_json(&out.join("template.json"), cfg, TemplateBody { template: &t })?;
    Ok(Outcome { succeeded: 1, failed: 0 })
}

#[derive(Serialize)]
struct ResampleBody {
    ids: Vec<String>,
    labels: Vec<ContactLabel7>,
    indices: Vec<usize>,
    resampled_ids: Vec<String>,
}

/// Class-balanced oversampling over the labels of the samples that loaded.
pub fn resample(cfg: &RunConfig, manifest: &Manifest, out: &Path) -> Result<Outcome> {
    let template = build_template(cfg)?;
    let results = for_each_sample(cfg, manifest, |_, _, s| {
        let hand_contact = match s.hand_contact {
            Some(c) => c,
            None => {
                let hand = hand_cloud(&pose_hand(&template, &s.gt))?;
                compute_contact_maps(&s.cloud, &hand, &cfg.contact)?.1
            }
        };
        contact_label7(&hand_contact, template.part_labels(), cfg.contact.min_hits)
    })?;
    let (ok, errors) = split(results);
    let (ids, labels): (Vec<String>, Vec<ContactLabel7>) = ok.into_iter().unzip();
    let indices = if labels.is_empty() { Vec::new() } else { balance_resample(&labels, cfg.stream_seed("resampling", 0))? };
    let resampled_ids = indices.iter().map(|&i| ids[i].clone()).collect();
    write_json(&out.join("resample.json"), cfg, ResampleBody { ids: ids.clone(), labels, indices, resampled_ids })?;
    finish(cfg, out, "resample", ids, errors)
}
