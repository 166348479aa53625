use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, frame_name, write_json};
use crate::depth_io::{
    write_binary_mask, write_depth_pfm, write_instance_mask, write_rgb, DatasetManifest, DepthKind, ManifestEntry,
    MANIFEST_FILE_NAME,
};
use crate::error::Result;
use crate::synth::{generate_domain, Domain, SyntheticFrame, TwoDomainConfig};

pub const TRUTH_FILE_NAME: &str = "truth.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub index: usize,
    pub jitter: f64,
    /// Meters per prediction unit for this frame: `G * (1 + jitter)`.
    pub true_slope: f64,
    pub outliers: usize,
    pub moving_instances: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub config: TwoDomainConfig,
    pub source: Vec<FrameTruth>,
    pub target: Vec<FrameTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub source_manifest: PathBuf,
    pub target_manifest: PathBuf,
    /// Target frames with metric predictions of an emulated supervised network.
    pub target_supervised_manifest: PathBuf,
    pub truth: SynthTruth,
}

/// Generates a two-domain synthetic dataset under `out_dir`:
///
/// ```text
/// source/manifest.tsv             source camera, up-to-scale predictions
/// target/manifest.tsv             target camera, up-to-scale predictions
/// target_supervised/manifest.tsv  target frames, metric predictions
/// truth.json                      configuration and per-frame true slopes
/// ```
pub fn run_synth(config: &TwoDomainConfig, out_dir: &Path) -> Result<SynthOutcome> {
    config.validate()?;
    ensure_dir(out_dir)?;
    let mut truths = Vec::new();
    let mut manifests = Vec::new();
    for domain in [Domain::Source, Domain::Target] {
        let frames = generate_domain(config, domain)?;
        let dir = out_dir.join(domain.as_str());
        let manifest = write_domain(config, domain, &frames, &dir)?;
        manifests.push(dir.join(MANIFEST_FILE_NAME));
        manifest.write(dir.join(MANIFEST_FILE_NAME))?;
        if domain == Domain::Target {
            let sup_dir = out_dir.join("target_supervised");
            ensure_dir(&sup_dir)?;
            write_supervised(&frames, &manifest, &sup_dir)?;
        }
        truths.push(frame_truths(config, &frames));
    }
    let target = truths.pop().expect("two domains");
    let source = truths.pop().expect("two domains");
    let truth = SynthTruth {
        config: config.clone(),
        source,
        target,
    };
    write_json(&truth, out_dir.join(TRUTH_FILE_NAME))?;
    Ok(SynthOutcome {
        source_manifest: manifests[0].clone(),
        target_manifest: manifests[1].clone(),
        target_supervised_manifest: out_dir.join("target_supervised").join(MANIFEST_FILE_NAME),
        truth,
    })
}

fn frame_truths(config: &TwoDomainConfig, frames: &[SyntheticFrame]) -> Vec<FrameTruth> {
    frames
        .iter()
        .enumerate()
        .map(|(index, f)| FrameTruth {
            index,
            jitter: f.prediction.jitter,
            true_slope: config.prediction.global_scale * (1.0 + f.prediction.jitter),
            outliers: f.prediction.outliers,
            moving_instances: f
                .scene
                .boxes
                .iter()
                .enumerate()
                .filter(|(_, b)| b.moving)
                .map(|(k, _)| k as u16 + 2)
                .collect(),
        })
        .collect()
}

fn write_domain(
    config: &TwoDomainConfig,
    domain: Domain,
    frames: &[SyntheticFrame],
    dir: &Path,
) -> Result<DatasetManifest> {
    for sub in ["images", "gt", "pred", "road", "instances"] {
        ensure_dir(&dir.join(sub))?;
    }
    let entries = frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let name = frame_name(i);
            let entry = ManifestEntry {
                image: PathBuf::from(format!("images/{name}.png")),
                gt_depth: Some(PathBuf::from(format!("gt/{name}.pfm"))),
                prediction: Some(PathBuf::from(format!("pred/{name}.pfm"))),
                road_mask: Some(PathBuf::from(format!("road/{name}.png"))),
                instance_mask: Some(PathBuf::from(format!("instances/{name}.png"))),
                motion_mask: None,
            };
            let k = &f.view.intrinsics;
            write_rgb(&f.view.rgb(), dir.join(&entry.image))?;
            write_depth_pfm(&f.view.depth, dir.join(entry.gt_depth.as_ref().expect("set")))?;
            write_depth_pfm(&f.prediction.prediction, dir.join(entry.prediction.as_ref().expect("set")))?;
            write_binary_mask(k.width, k.height, &f.view.road_mask(), dir.join(entry.road_mask.as_ref().expect("set")))?;
            write_instance_mask(
                &f.view.instance_mask(&f.scene)?,
                dir.join(entry.instance_mask.as_ref().expect("set")),
            )?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let (camera, _) = config.camera(domain);
    let mut manifest = DatasetManifest::new(format!("synthetic_{}", domain.as_str()), camera, dir);
    manifest.entries = entries;
    manifest.prediction_kind = Some(DepthKind::UpToScale);
    Ok(manifest)
}

fn write_supervised(frames: &[SyntheticFrame], target: &DatasetManifest, dir: &Path) -> Result<()> {
    ensure_dir(&dir.join("pred"))?;
    let preds: Vec<PathBuf> = (0..frames.len())
        .map(|i| PathBuf::from(format!("pred/{}.pfm", frame_name(i))))
        .collect();
    frames
        .par_iter()
        .zip(&preds)
        .try_for_each(|(f, rel)| write_depth_pfm(&f.supervised, dir.join(rel)))?;
    let up = Path::new("..").join("target");
    let mut manifest = DatasetManifest::new("synthetic_target_supervised", target.intrinsics, dir);
    manifest.prediction_kind = Some(DepthKind::AbsolutePrediction);
    manifest.entries = target
        .entries
        .iter()
        .zip(preds)
        .map(|(e, pred)| {
            let rebase = |p: &Option<PathBuf>| p.as_ref().map(|p| up.join(p));
            ManifestEntry {
                image: up.join(&e.image),
                gt_depth: rebase(&e.gt_depth),
                prediction: Some(pred),
                road_mask: rebase(&e.road_mask),
                instance_mask: rebase(&e.instance_mask),
                motion_mask: None,
            }
        })
        .collect();
    manifest.write(dir.join(MANIFEST_FILE_NAME))
}
