use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{absolute, ensure_parent, frame_name};
use crate::depth_io::{write_depth_pfm, DatasetManifest, DepthKind, MANIFEST_FILE_NAME};
use crate::error::{Error, Result};

/// Multiplies every up-to-scale prediction by `g_dscale` and writes the
/// metric maps as PFM under `out_dir`, with a manifest whose other paths
/// point at the original files.
pub fn run_apply(manifest: &DatasetManifest, g_dscale: f64, out_dir: &Path) -> Result<(PathBuf, DatasetManifest)> {
    manifest.validate()?;
    if !(g_dscale.is_finite() && g_dscale > 0.0) {
        return Err(Error::validation(format!("scale G = {g_dscale} must be positive")));
    }
    if manifest.prediction_kind == Some(DepthKind::AbsolutePrediction) {
        return Err(Error::validation(format!(
            "split {} already holds absolute predictions",
            manifest.split_name
        )));
    }
    if manifest.entries.iter().all(|e| e.prediction.is_none()) {
        return Err(Error::validation("manifest has no predictions to scale"));
    }
    let entries = (0..manifest.entries.len())
        .into_par_iter()
        .map(|i| {
            let src = &manifest.entries[i];
            let keep = |p: &Option<PathBuf>| p.as_ref().map(|p| absolute(&manifest.resolve(p))).transpose();
            let mut entry = src.clone();
            entry.image = absolute(&manifest.resolve(&src.image))?;
            entry.gt_depth = keep(&src.gt_depth)?;
            entry.road_mask = keep(&src.road_mask)?;
            entry.instance_mask = keep(&src.instance_mask)?;
            entry.motion_mask = keep(&src.motion_mask)?;
            if let Some(pred) = manifest.load_prediction(i)? {
                let rel = PathBuf::from(format!("pred/{}.pfm", frame_name(i)));
                let path = out_dir.join(&rel);
                ensure_parent(&path)?;
                write_depth_pfm(&pred.scaled(g_dscale, DepthKind::AbsolutePrediction)?, &path)?;
                entry.prediction = Some(rel);
            }
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = manifest.clone();
    out.entries = entries;
    out.prediction_kind = Some(DepthKind::AbsolutePrediction);
    out.base_dir = out_dir.to_path_buf();
    let path = out_dir.join(MANIFEST_FILE_NAME);
    ensure_parent(&path)?;
    out.write(&path)?;
    Ok((path, out))
}
