//! Subcommand bodies. Each writes its artifacts into the output directory and
//! returns the pipeline error, if any, for exit-code mapping.

use std::fs;
use std::path::Path;
use std::time::Instant;

use attgrasp::detect::{
    confusion_matrix, detect as detect_roi, iou_per_type, mean_iou, pmap, GraspInfo, GraspType, ProbabilityProvider,
    SyntheticProvider,
};
use attgrasp::experiment::{first_detection, perceive, run_experiment, RunConfig};
use attgrasp::imaging::io::{read_rgb, write_image};
use attgrasp::imaging::ImageF;
use attgrasp::planner::{plan as plan_grasp, CandidateResult, HandModel, PlanResult};
use attgrasp::saliency::{compute_saliency, extract_rois, Roi};
use attgrasp::scene::{render_depth, render_rgb, Scene};
use attgrasp::{Error, Result};
use serde_json::{json, Value};

use crate::overlay;

/// IoU binarization threshold for predicted maps.
const BIN_THRESHOLD: f32 = 0.5;

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn roi_json(roi: &Roi) -> Value {
    json!({ "x": roi.x, "y": roi.y, "w": roi.w, "h": roi.h, "seed": roi.seed, "peak": roi.peak, "area": roi.area() })
}

fn detection_json(info: Option<&GraspInfo>, roi: Option<&Roi>) -> Value {
    let roi = info.map(|i| &i.roi).or(roi);
    json!({
        "roi": roi.map(|r| json!({ "x": r.x, "y": r.y, "w": r.w, "h": r.h })),
        "type_name": info.map(|i| i.grasp_type.name()),
        "type_code": info.map(|i| i.grasp_type.code()),
        "point": info.map(|i| i.point),
        "score": info.map(|i| i.score),
    })
}

pub fn saliency(cfg: &RunConfig, out: &Path, image: &Path) -> Result<()> {
    cfg.pipeline.saliency.validate()?;
    let rgb = read_rgb(image)?;
    let sal = compute_saliency(&rgb, &cfg.pipeline.saliency.pyramid)?;
    let rois = extract_rois(
        &sal,
        cfg.pipeline.saliency.max_rois,
        cfg.pipeline.saliency.grow_fraction,
    );
    write_image(&sal.map, out.join("saliency.pgm"))?;
    write_json(
        &out.join("rois.json"),
        &Value::Array(rois.iter().map(roi_json).collect()),
    )?;
    println!("{} ROI(s)", rois.len());
    Ok(())
}

pub fn detect(cfg: &RunConfig, out: &Path, maps: &Path, image: Option<&Path>, rect: Option<[usize; 4]>) -> Result<()> {
    cfg.pipeline.detect.validate()?;
    let maps = pmap::read_maps(maps)?;
    let rgb = image.map(read_rgb).transpose()?;
    if let Some(rgb) = &rgb {
        if rgb.dims() != (maps.width(), maps.height()) {
            return Err(Error::InvalidInput(format!(
                "image is {}x{}, maps are {}x{}",
                rgb.width(),
                rgb.height(),
                maps.width(),
                maps.height()
            )));
        }
    }
    let rois = match (rect, &rgb) {
        (Some([x, y, w, h]), _) => {
            if x + w > maps.width() || y + h > maps.height() {
                return Err(Error::InvalidInput(format!("ROI {x},{y},{w},{h} exceeds the maps")));
            }
            vec![Roi::rect(x, y, w, h)]
        }
        (None, Some(rgb)) => {
            let sal = compute_saliency(rgb, &cfg.pipeline.saliency.pyramid)?;
            extract_rois(
                &sal,
                cfg.pipeline.saliency.max_rois,
                cfg.pipeline.saliency.grow_fraction,
            )
        }
        (None, None) => vec![Roi::rect(0, 0, maps.width(), maps.height())],
    };
    if rois.is_empty() {
        write_json(&out.join("detection.json"), &detection_json(None, None))?;
        return Err(Error::NoRoi);
    }

    let mut result = Err(Error::NoGraspPoint);
    for roi in &rois {
        match detect_roi(&maps, roi, &cfg.pipeline.detect) {
            Err(Error::NoGraspPoint) => continue,
            other => {
                result = other;
                break;
            }
        }
    }
    let info = match result {
        Ok(info) => Some(info),
        Err(Error::NoGraspPoint) => None,
        Err(e) => return Err(e),
    };
    write_json(
        &out.join("detection.json"),
        &detection_json(info.as_ref(), rois.first()),
    )?;

    let mut canvas = rgb.unwrap_or_else(|| overlay::max_probability(&maps));
    let roi = info.as_ref().map_or(&rois[0], |i| &i.roi);
    overlay::rectangle(&mut canvas, roi.x, roi.y, roi.w, roi.h, overlay::RED);
    if let Some(info) = &info {
        overlay::cross(&mut canvas, info.point, 4, overlay::GREEN);
    }
    write_image(&canvas, out.join("overlay.png"))?;

    match info {
        Some(info) => {
            println!(
                "{} (code {}) at ({:.2}, {:.2}), score {:.4}",
                info.grasp_type,
                info.grasp_type.code(),
                info.point[0],
                info.point[1],
                info.score
            );
            Ok(())
        }
        None => Err(Error::NoGraspPoint),
    }
}

fn candidate_json(c: &CandidateResult) -> Value {
    let o = &c.outcome;
    json!({
        "index": c.index,
        "search_point": { "d": c.search_point.d, "alpha": c.search_point.alpha, "beta": c.search_point.beta, "gamma": c.search_point.gamma },
        "feasible": o.feasible,
        "quality": o.quality,
        "failure": o.failure.map(|f| format!("{f:?}")),
    })
}

fn plan_json(info: &GraspInfo, plan: &PlanResult, hand: &HandModel) -> Value {
    let best = &plan.best;
    let rot = best.outcome.palm_rotation.matrix();
    let rows: Vec<[f64; 3]> = (0..3).map(|r| [rot[(r, 0)], rot[(r, 1)], rot[(r, 2)]]).collect();
    let contacts: Vec<Value> = best
        .outcome
        .contacts
        .iter()
        .map(|c| {
            json!({
                "position": [c.position.x, c.position.y, c.position.z],
                "normal": [c.normal.x, c.normal.y, c.normal.z],
                "force_dir": [c.force_dir.x, c.force_dir.y, c.force_dir.z],
                "normal_force": c.normal_force,
            })
        })
        .collect();
    let pg = &plan.pregrasp;
    json!({
        "detection": detection_json(Some(info), None),
        "object_id": pg.object_id,
        "surface_point": [pg.target_point.x, pg.target_point.y, pg.target_point.z],
        "hand": hand.kind,
        "grasp_type": plan.grasp_type.name(),
        "type_code": plan.grasp_type.code(),
        "fingers": pg.active_fingers,
        "attempts_used": plan.attempts_used,
        "best": {
            "index": best.index,
            "search_point": { "d": best.search_point.d, "alpha": best.search_point.alpha, "beta": best.search_point.beta, "gamma": best.search_point.gamma },
            "quality": best.outcome.quality,
            "palm_center": [best.outcome.palm_center.x, best.outcome.palm_center.y, best.outcome.palm_center.z],
            "palm_rotation": rows,
            "contacts": contacts,
        },
        "candidates": plan.candidates.iter().map(candidate_json).collect::<Vec<_>>(),
    })
}

pub fn plan(cfg: &RunConfig, out: &Path, scene: &Path) -> Result<()> {
    cfg.validate()?;
    let scene = Scene::load(scene)?;
    let camera = cfg.camera.camera()?;
    let provider = SyntheticProvider::new(cfg.pipeline.provider)?;
    let hand = HandModel::preset(cfg.hand);
    let perception = perceive(&scene, &camera, &provider, &cfg.pipeline)?;
    let info = first_detection(&perception, &cfg.pipeline.detect)?;
    let plan = plan_grasp(&scene, &camera, &info, &hand, &cfg.pipeline.planner)?;
    write_json(&out.join("plan.json"), &plan_json(&info, &plan, &hand))?;
    println!(
        "{} on {:?}: feasible after {} attempt(s), quality {:.4}",
        plan.grasp_type, plan.pregrasp.object_id, plan.attempts_used, plan.best.outcome.quality
    );
    Ok(())
}

pub fn eval(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let start = Instant::now();
    let report = run_experiment(cfg)?;
    let csv = report.to_csv();
    fs::write(out.join("report.csv"), &csv)?;
    fs::write(out.join("report.json"), report.to_json()? + "\n")?;
    print!("{csv}");
    // Wall time varies between runs, so it stays out of the report files.
    eprintln!("eval: {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn metrics(out: &Path, pred: &Path, gt: &Path) -> Result<()> {
    let pred = pmap::read_maps(pred)?;
    let gt = pmap::read_masks(gt)?;
    let iou = iou_per_type(&pred, &gt, BIN_THRESHOLD)?;
    let miou = mean_iou(&iou);
    let conf = confusion_matrix(&pred, &gt)?;

    let names: Vec<&str> = GraspType::ALL.iter().map(|s| s.name()).collect();
    let mut csv = format!("truth,{}\n", names.join(","));
    for (g, row) in conf.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        csv.push_str(&format!("{},{}\n", names[g], cells.join(",")));
    }
    fs::write(out.join("confusion.csv"), &csv)?;
    let per_type: serde_json::Map<String, Value> =
        names.iter().zip(iou).map(|(n, v)| (n.to_string(), json!(v))).collect();
    write_json(
        &out.join("metrics.json"),
        &json!({ "threshold": BIN_THRESHOLD, "iou": per_type, "mean_iou": miou, "confusion": conf }),
    )?;

    for (n, v) in names.iter().zip(iou) {
        println!("{n:<12} {v:.4}");
    }
    println!("{:<12} {miou:.4}", "mean");
    print!("{csv}");
    Ok(())
}

pub fn render(cfg: &RunConfig, out: &Path, scene: &Path) -> Result<()> {
    cfg.validate()?;
    let scene = Scene::load(scene)?;
    let camera = cfg.camera.camera()?;
    let provider = SyntheticProvider::new(cfg.pipeline.provider)?;
    write_image(&render_rgb(&scene, &camera), out.join("rgb.png"))?;
    write_image(&normalized_depth(&render_depth(&scene, &camera)), out.join("depth.png"))?;
    pmap::write_file(provider.predict(&scene, &camera)?.image(), out.join("maps.pmap"))?;
    pmap::write_file(
        provider.generating_masks(&scene, &camera).image(),
        out.join("masks.pmap"),
    )?;
    println!("{}x{}, {} object(s)", camera.width, camera.height, scene.objects.len());
    Ok(())
}

/// Depth scaled to `[0, 1]` over the range of hit pixels; misses (depth 0)
/// map to 1.
fn normalized_depth(depth: &ImageF) -> ImageF {
    let hits = depth.data().iter().copied().filter(|v| *v > 0.0);
    let (lo, hi) = hits.fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    depth.map(|v| if v > 0.0 { (v - lo) / span } else { 1.0 })
}
