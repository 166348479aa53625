//! End-to-end stages over manifests on disk.
//!
//! Every stage reads a manifest, writes its outputs plus a new manifest (or
//! a report) under an output directory, and can be re-run on its own:
//!
//! 1. [`run_fov_adjust`] maps source imagery onto the target camera,
//! 2. [`run_fit`] fits the global scale on source predictions,
//! 3. [`run_apply`] scales target predictions to meters,
//! 4. [`run_evaluate`] scores them against ground truth.
//!
//! [`run_motion_masks`] and [`run_synth`] produce training masks and
//! synthetic datasets in the same format.

mod adjust;
mod apply;
mod evaluate;
mod fit;
mod motion;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub use adjust::{run_fov_adjust, AdjustOutcome};
pub use apply::run_apply;
pub use evaluate::{run_evaluate, Convention, EvaluateConfig, EvaluationReport};
pub use fit::{collect_samples, read_fit_slope, run_fit, FilteredFit, FitConfig, FitReport, SampleSet, Subsampling};
pub use motion::{run_motion_masks, MotionOutcome};
pub use synth::{run_synth, SynthOutcome};

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    fs::write(path, to_json(value)).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

// Absolute form of a path read from a manifest, for manifests written elsewhere.
pub(crate) fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn frame_name(i: usize) -> String {
    format!("{i:06}")
}
