use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{absolute, ensure_dir, frame_name};
use crate::depth_io::{write_binary_mask, DatasetManifest, InstanceClass, MANIFEST_FILE_NAME};
use crate::error::{Error, Result};
use crate::local_motion::{motion_mask_for_frame, InstanceVerdict, MotionMaskConfig, SkipReason};

pub const VERDICTS_FILE_NAME: &str = "verdicts.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub index: usize,
    pub skipped: Option<SkipReason>,
    pub verdicts: Vec<InstanceVerdict>,
}

#[derive(Debug, Clone)]
pub struct MotionOutcome {
    pub manifest_path: PathBuf,
    pub manifest: DatasetManifest,
    pub frames: Vec<FrameSummary>,
}

impl MotionOutcome {
    pub fn moving_instances(&self) -> usize {
        self.frames
            .iter()
            .flat_map(|f| &f.verdicts)
            .filter(|v| v.verdict == crate::local_motion::Verdict::Moving)
            .count()
    }
}

/// Builds local-motion masks for a split.
///
/// `self_supervised` holds the frames with their self-supervised
/// predictions, instance masks and (optionally) road masks; `supervised`
/// holds predictions of a supervised network for the same frames, matched by
/// record order. Frames without a road mask use the road-class instance
/// pixels. Masks go to `out_dir/masks`, one verdict row per instance to
/// `out_dir/verdicts.csv`, and a manifest with the motion-mask column filled
/// to `out_dir/manifest.tsv`. Frames with too little road get no mask.
pub fn run_motion_masks(
    self_supervised: &DatasetManifest,
    supervised: &DatasetManifest,
    config: &MotionMaskConfig,
    out_dir: &Path,
) -> Result<MotionOutcome> {
    self_supervised.validate()?;
    supervised.validate()?;
    config.validate()?;
    if supervised.entries.len() != self_supervised.entries.len() {
        return Err(Error::validation(format!(
            "supervised split has {} records but the self-supervised split has {}",
            supervised.entries.len(),
            self_supervised.entries.len()
        )));
    }
    ensure_dir(&out_dir.join("masks"))?;
    let results = (0..self_supervised.entries.len())
        .into_par_iter()
        .map(|i| -> Result<(FrameSummary, Option<PathBuf>)> {
            let missing = |what: &str| Error::validation(format!("entry {i} has no {what}"));
            let unsup = self_supervised
                .load_prediction(i)?
                .ok_or_else(|| missing("self-supervised prediction"))?;
            let sup = supervised.load_prediction(i)?.ok_or_else(|| missing("supervised prediction"))?;
            let instances = self_supervised
                .load_instance_mask(i)?
                .ok_or_else(|| missing("instance mask"))?;
            let road = match self_supervised.load_road_mask(i)? {
                Some((w, h, mask)) => {
                    if (w, h) != (instances.width(), instances.height()) {
                        return Err(Error::validation(format!("entry {i}: road mask size differs from instance mask")));
                    }
                    mask
                }
                None => instances.class_mask(InstanceClass::Road),
            };
            let mut summary = FrameSummary {
                index: i,
                skipped: None,
                verdicts: Vec::new(),
            };
            match motion_mask_for_frame(&sup, &unsup, &road, &instances, config)? {
                Ok(mask) => {
                    let rel = PathBuf::from(format!("masks/{}.png", frame_name(i)));
                    write_binary_mask(mask.width, mask.height, &mask.masked, out_dir.join(&rel))?;
                    summary.verdicts = mask.verdicts;
                    Ok((summary, Some(rel)))
                }
                Err(reason) => {
                    summary.skipped = Some(reason);
                    Ok((summary, None))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut manifest = self_supervised.clone();
    manifest.base_dir = out_dir.to_path_buf();
    let mut frames = Vec::with_capacity(results.len());
    for (entry, (summary, mask)) in manifest.entries.iter_mut().zip(results) {
        let keep = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| absolute(&self_supervised.resolve(p)))
                .transpose()
        };
        entry.image = absolute(&self_supervised.resolve(&entry.image))?;
        entry.gt_depth = keep(&entry.gt_depth)?;
        entry.prediction = keep(&entry.prediction)?;
        entry.road_mask = keep(&entry.road_mask)?;
        entry.instance_mask = keep(&entry.instance_mask)?;
        entry.motion_mask = mask;
        frames.push(summary);
    }
    write_verdicts(&frames, &out_dir.join(VERDICTS_FILE_NAME))?;
    let manifest_path = out_dir.join(MANIFEST_FILE_NAME);
    manifest.write(&manifest_path)?;
    Ok(MotionOutcome {
        manifest_path,
        manifest,
        frames,
    })
}

fn write_verdicts(frames: &[FrameSummary], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "frame",
        "instance_id",
        "class",
        "total_pixels",
        "valid_pixels",
        "exceeding_pixels",
        "exceeding_percent",
        "verdict",
    ])
    .map_err(csv_err)?;
    for f in frames {
        if let Some(SkipReason::InsufficientRoad { found, required }) = &f.skipped {
            let note = format!("skipped: {found} road pixels, {required} required");
            w.write_record([f.index.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), note])
                .map_err(csv_err)?;
        }
        for v in &f.verdicts {
            w.write_record([
                f.index.to_string(),
                v.instance_id.to_string(),
                v.class.as_str().to_string(),
                v.total_pixels.to_string(),
                v.valid_pixels.to_string(),
                v.exceeding_pixels.to_string(),
                v.exceeding_percent.map_or(String::new(), |p| format!("{p:.3}")),
                v.verdict.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
