use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{ensure_dir, ensure_parent, frame_name};
use crate::camera_geometry::{plan_adjustment, AdjustMode, CameraIntrinsics, FovAdjustPlan};
use crate::depth_io::{
    write_binary_mask, write_depth_pfm, write_instance_mask, write_rgb, DatasetManifest, InstanceMask, ManifestEntry,
    MANIFEST_FILE_NAME,
};
use crate::error::{Error, Result};
use crate::resample::{warp_depth, warp_labels, warp_rgb};

#[derive(Debug, Clone)]
pub struct AdjustOutcome {
    pub manifest_path: PathBuf,
    pub manifest: DatasetManifest,
    pub plan: FovAdjustPlan,
}

/// Maps every image, depth map and mask of `source` onto the `target`
/// camera and writes them with a new manifest under `out_dir`.
///
/// Depth maps (ground truth and predictions) are written as PFM. In FOV
/// mode the new manifest carries the target intrinsics; the naive modes
/// record what their plan actually produces and mark the geometry as
/// uncorrected.
pub fn run_fov_adjust(
    source: &DatasetManifest,
    target: &CameraIntrinsics,
    mode: AdjustMode,
    out_dir: &Path,
) -> Result<AdjustOutcome> {
    source.validate()?;
    let plan = plan_adjustment(mode, &source.intrinsics, target)?;
    ensure_dir(out_dir)?;
    let entries = (0..source.entries.len())
        .into_par_iter()
        .map(|i| adjust_entry(source, i, &plan, out_dir))
        .collect::<Result<Vec<_>>>()?;

    let intrinsics = if mode.corrects_geometry() {
        *target
    } else {
        plan.output_intrinsics(&source.intrinsics)
    };
    let mut manifest = DatasetManifest::new(source.split_name.clone(), intrinsics, out_dir);
    manifest.entries = entries;
    manifest.depth_cap = source.depth_cap;
    manifest.eval_crop = source.eval_crop;
    manifest.gt_divisor = source.gt_divisor;
    manifest.prediction_kind = source.prediction_kind;
    manifest.uncorrected_geometry = source.uncorrected_geometry || !mode.corrects_geometry();
    let manifest_path = out_dir.join(MANIFEST_FILE_NAME);
    manifest.write(&manifest_path)?;
    Ok(AdjustOutcome {
        manifest_path,
        manifest,
        plan,
    })
}

fn adjust_entry(source: &DatasetManifest, i: usize, plan: &FovAdjustPlan, out_dir: &Path) -> Result<ManifestEntry> {
    let src = &source.entries[i];
    let name = frame_name(i);
    let k = &source.intrinsics;
    let check = |what: &str, w: u32, h: u32| {
        if (w, h) == (k.width, k.height) {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "entry {i}: {what} is {w}x{h} but the manifest camera is {}x{}",
                k.width, k.height
            )))
        }
    };

    let out = |rel: &PathBuf| -> Result<PathBuf> {
        let path = out_dir.join(rel);
        ensure_parent(&path)?;
        Ok(path)
    };

    let image = source.load_image(i)?;
    check("image", image.width(), image.height())?;
    let rel = PathBuf::from(format!("images/{name}.png"));
    write_rgb(&warp_rgb(&image, plan)?, out(&rel)?)?;
    let mut entry = ManifestEntry::new(rel);

    if let Some(gt) = source.load_gt(i)? {
        check("ground truth", gt.width(), gt.height())?;
        let rel = PathBuf::from(format!("gt/{name}.pfm"));
        write_depth_pfm(&warp_depth(&gt, plan)?, out(&rel)?)?;
        entry.gt_depth = Some(rel);
    }
    if let Some(pred) = source.load_prediction(i)? {
        check("prediction", pred.width(), pred.height())?;
        let rel = PathBuf::from(format!("pred/{name}.pfm"));
        write_depth_pfm(&warp_depth(&pred, plan)?, out(&rel)?)?;
        entry.prediction = Some(rel);
    }
    if let Some((w, h, mask)) = source.load_road_mask(i)? {
        check("road mask", w, h)?;
        let rel = PathBuf::from(format!("road/{name}.png"));
        let warped = warp_labels(&mask, w, h, plan, false)?;
        write_binary_mask(plan.output_width, plan.output_height, &warped, out(&rel)?)?;
        entry.road_mask = Some(rel);
    }
    if let Some(inst) = source.load_instance_mask(i)? {
        check("instance mask", inst.width(), inst.height())?;
        let rel = PathBuf::from(format!("instances/{name}.png"));
        let labels = warp_labels(inst.labels(), inst.width(), inst.height(), plan, 0u16)?;
        let mut present = vec![false; usize::from(u16::MAX) + 1];
        for &l in &labels {
            present[usize::from(l)] = true;
        }
        let classes: BTreeMap<_, _> = inst
            .classes()
            .iter()
            .filter(|(&id, _)| present[usize::from(id)])
            .map(|(&id, &c)| (id, c))
            .collect();
        let warped = InstanceMask::new(plan.output_width, plan.output_height, labels, classes)?;
        write_instance_mask(&warped, out(&rel)?)?;
        entry.instance_mask = Some(rel);
    }
    if let Some(p) = &src.motion_mask {
        let (w, h, mask) = crate::depth_io::read_binary_mask(source.resolve(p))?;
        check("motion mask", w, h)?;
        let rel = PathBuf::from(format!("motion/{name}.png"));
        let warped = warp_labels(&mask, w, h, plan, false)?;
        write_binary_mask(plan.output_width, plan.output_height, &warped, out(&rel)?)?;
        entry.motion_mask = Some(rel);
    }
    Ok(entry)
}
