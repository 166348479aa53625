//! Line-oriented dataset manifest.
//!
//! ```text
//! depthscale-manifest v1
//! split	kitti_eigen_test
//! intrinsics	721.5377	721.5377	609.5593	172.854	1242	375
//! depth_cap	80
//! eval_crop	garg
//! gt_divisor	256
//! prediction_kind	up_to_scale
//! uncorrected_geometry	false
//! records	image	gt_depth	prediction	road_mask	instance_mask	motion_mask
//! img/0000.png	gt/0000.png	pred/0000.pfm	-	-	-
//! ```
//!
//! The first line is the versioned header. Tab-separated `key value...`
//! lines follow; `split` and `intrinsics` are required, the rest default to
//! the values shown above (`prediction_kind` has no default and must be
//! declared whenever a record carries a prediction). The `records` line
//! fixes the column order and every later line is one record with six
//! tab-separated fields, `-` marking an absent optional path. Relative
//! paths resolve against the manifest's directory. Blank lines and lines
//! starting with `#` are ignored.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::depth_map::{DepthKind, DepthMap};
use super::instance::{read_instance_mask, InstanceMask};
use super::pfm::{read_depth_pfm, write_depth_pfm};
use super::png::{read_binary_mask, read_depth_png16, read_rgb, write_depth_png16, DEFAULT_PNG_DEPTH_DIVISOR};
use crate::camera_geometry::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::metrics::EvalCrop;

pub const MANIFEST_HEADER: &str = "depthscale-manifest v1";
pub const MANIFEST_FILE_NAME: &str = "manifest.tsv";
pub const DEFAULT_DEPTH_CAP: f64 = 80.0;

const RECORD_COLUMNS: [&str; 6] = [
    "image",
    "gt_depth",
    "prediction",
    "road_mask",
    "instance_mask",
    "motion_mask",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub gt_depth: Option<PathBuf>,
    pub prediction: Option<PathBuf>,
    pub road_mask: Option<PathBuf>,
    pub instance_mask: Option<PathBuf>,
    pub motion_mask: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn new(image: impl Into<PathBuf>) -> Self {
        Self {
            image: image.into(),
            ..Self::default()
        }
    }

    fn fields(&self) -> [(&'static str, Option<&PathBuf>); 6] {
        [
            ("image", Some(&self.image)),
            ("gt_depth", self.gt_depth.as_ref()),
            ("prediction", self.prediction.as_ref()),
            ("road_mask", self.road_mask.as_ref()),
            ("instance_mask", self.instance_mask.as_ref()),
            ("motion_mask", self.motion_mask.as_ref()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub split_name: String,
    pub intrinsics: CameraIntrinsics,
    pub entries: Vec<ManifestEntry>,
    pub depth_cap: f64,
    pub eval_crop: EvalCrop,
    /// Divisor applied to 16-bit PNG depth files.
    pub gt_divisor: f64,
    pub prediction_kind: Option<DepthKind>,
    /// Set when the imagery was resized without matching the FOV.
    pub uncorrected_geometry: bool,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(split_name: impl Into<String>, intrinsics: CameraIntrinsics, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            split_name: split_name.into(),
            intrinsics,
            entries: Vec::new(),
            depth_cap: DEFAULT_DEPTH_CAP,
            eval_crop: EvalCrop::None,
            gt_divisor: DEFAULT_PNG_DEPTH_DIVISOR,
            prediction_kind: None,
            uncorrected_geometry: false,
            base_dir: base_dir.into(),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks every invariant that does not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if !(self.depth_cap.is_finite() && self.depth_cap > 0.0) {
            return Err(Error::validation(format!("depth_cap {} must be positive", self.depth_cap)));
        }
        if !(self.gt_divisor.is_finite() && self.gt_divisor > 0.0) {
            return Err(Error::validation(format!("gt_divisor {} must be positive", self.gt_divisor)));
        }
        if self.split_name.is_empty() || self.split_name.contains(['\t', '\n']) {
            return Err(Error::validation("split name must be non-empty without tabs or newlines"));
        }
        if self.prediction_kind.is_none() && self.entries.iter().any(|e| e.prediction.is_some()) {
            return Err(Error::validation("records carry predictions but prediction_kind is not declared"));
        }
        if self.prediction_kind == Some(DepthKind::GroundTruth) {
            return Err(Error::validation("prediction_kind cannot be ground_truth"));
        }
        Ok(())
    }

    fn check_paths_exist(&self, manifest_path: &Path) -> Result<()> {
        for (n, entry) in self.entries.iter().enumerate() {
            for (field, path) in entry.fields() {
                if let Some(p) = path {
                    let full = self.resolve(p);
                    if !full.is_file() {
                        return Err(Error::DanglingPath {
                            manifest: manifest_path.to_path_buf(),
                            entry: n,
                            field,
                            path: full,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        self.validate()?;
        let k = &self.intrinsics;
        let mut out = String::new();
        out.push_str(MANIFEST_HEADER);
        out.push('\n');
        out.push_str(&format!("split\t{}\n", self.split_name));
        out.push_str(&format!(
            "intrinsics\t{}\t{}\t{}\t{}\t{}\t{}\n",
            k.focal_x, k.focal_y, k.center_x, k.center_y, k.width, k.height
        ));
        out.push_str(&format!("depth_cap\t{}\n", self.depth_cap));
        out.push_str(&format!("eval_crop\t{}\n", self.eval_crop.as_str()));
        out.push_str(&format!("gt_divisor\t{}\n", self.gt_divisor));
        out.push_str(&format!(
            "prediction_kind\t{}\n",
            self.prediction_kind.map_or("-", DepthKind::as_str)
        ));
        out.push_str(&format!("uncorrected_geometry\t{}\n", self.uncorrected_geometry));
        out.push_str("records\t");
        out.push_str(&RECORD_COLUMNS.join("\t"));
        out.push('\n');
        for entry in &self.entries {
            let mut cols = Vec::with_capacity(6);
            for (field, path) in entry.fields() {
                cols.push(match path {
                    None => "-".to_string(),
                    Some(p) => {
                        let s = p.to_str().ok_or_else(|| {
                            Error::validation(format!("{field} path {} is not utf-8", p.display()))
                        })?;
                        if s.is_empty() || s == "-" || s.contains(['\t', '\n', '\r']) {
                            return Err(Error::validation(format!(
                                "{field} path {s:?} cannot be stored in a manifest"
                            )));
                        }
                        s.to_string()
                    }
                });
            }
            out.push_str(&cols.join("\t"));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_text()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_image(&self, i: usize) -> Result<image::RgbImage> {
        read_rgb(self.resolve(&self.entries[i].image))
    }

    pub fn load_gt(&self, i: usize) -> Result<Option<DepthMap>> {
        self.entries[i]
            .gt_depth
            .as_ref()
            .map(|p| read_depth(&self.resolve(p), self.gt_divisor, DepthKind::GroundTruth))
            .transpose()
    }

    pub fn load_prediction(&self, i: usize) -> Result<Option<DepthMap>> {
        let kind = self.prediction_kind.unwrap_or(DepthKind::UpToScale);
        self.entries[i]
            .prediction
            .as_ref()
            .map(|p| read_depth(&self.resolve(p), self.gt_divisor, kind))
            .transpose()
    }

    pub fn load_road_mask(&self, i: usize) -> Result<Option<(u32, u32, Vec<bool>)>> {
        self.entries[i]
            .road_mask
            .as_ref()
            .map(|p| read_binary_mask(self.resolve(p)))
            .transpose()
    }

    pub fn load_instance_mask(&self, i: usize) -> Result<Option<InstanceMask>> {
        self.entries[i]
            .instance_mask
            .as_ref()
            .map(|p| read_instance_mask(self.resolve(p)))
            .transpose()
    }
}

/// Loads a depth file, choosing the codec from the extension (`.png` or `.pfm`).
pub fn read_depth(path: &Path, png_divisor: f64, kind: DepthKind) -> Result<DepthMap> {
    match extension(path).as_deref() {
        Some("png") => read_depth_png16(path, png_divisor, kind),
        Some("pfm") => read_depth_pfm(path, kind),
        _ => Err(Error::validation(format!(
            "cannot tell depth format of {}: expected .png or .pfm",
            path.display()
        ))),
    }
}

/// Writes a depth file, choosing the codec from the extension.
pub fn write_depth(map: &DepthMap, path: &Path, png_divisor: f64) -> Result<()> {
    match extension(path).as_deref() {
        Some("png") => write_depth_png16(map, path, png_divisor),
        Some("pfm") => write_depth_pfm(map, path),
        _ => Err(Error::validation(format!(
            "cannot tell depth format of {}: expected .png or .pfm",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Reads, parses and fully validates a manifest, including that every
/// referenced file exists.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let manifest = parse_manifest(&text, path, base_dir)?;
    manifest.check_paths_exist(path)?;
    Ok(manifest)
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(text: &str, path: &Path, base_dir: PathBuf) -> Result<DatasetManifest> {
    let err = |line: usize, reason: String| Error::Manifest {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, MANIFEST_HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected header {MANIFEST_HEADER:?}, found {other:?}"))),
        None => return Err(err(0, "empty manifest".into())),
    }

    let mut split = None;
    let mut intrinsics = None;
    let mut depth_cap = DEFAULT_DEPTH_CAP;
    let mut eval_crop = EvalCrop::None;
    let mut gt_divisor = DEFAULT_PNG_DEPTH_DIVISOR;
    let mut prediction_kind = None;
    let mut uncorrected_geometry = false;
    let mut seen = BTreeSet::new();
    let mut saw_records = false;

    for (n, line) in lines.by_ref() {
        let fields: Vec<&str> = line.split('\t').collect();
        let key = fields[0];
        let values = &fields[1..];
        if !seen.insert(key.to_string()) {
            return Err(err(n, format!("duplicate key {key:?}")));
        }
        let single = || -> Result<&str> {
            match values {
                [v] => Ok(v),
                _ => Err(err(n, format!("{key} takes exactly one value"))),
            }
        };
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| err(n, format!("{key}: bad number {s:?}")))
        };
        match key {
            "split" => split = Some(single()?.to_string()),
            "intrinsics" => {
                if values.len() != 6 {
                    return Err(err(n, "intrinsics needs fx fy cx cy width height".into()));
                }
                let size = |s: &str| -> Result<u32> {
                    s.parse::<u32>().map_err(|_| err(n, format!("intrinsics: bad size {s:?}")))
                };
                let k = CameraIntrinsics {
                    focal_x: number(values[0])?,
                    focal_y: number(values[1])?,
                    center_x: number(values[2])?,
                    center_y: number(values[3])?,
                    width: size(values[4])?,
                    height: size(values[5])?,
                };
                k.validate().map_err(|e| err(n, e.to_string()))?;
                intrinsics = Some(k);
            }
            "depth_cap" => depth_cap = number(single()?)?,
            "eval_crop" => {
                let v = single()?;
                eval_crop = EvalCrop::parse(v).ok_or_else(|| err(n, format!("unknown eval_crop {v:?}")))?;
            }
            "gt_divisor" => gt_divisor = number(single()?)?,
            "prediction_kind" => {
                let v = single()?;
                prediction_kind = match v {
                    "-" => None,
                    v => Some(DepthKind::parse(v).ok_or_else(|| err(n, format!("unknown prediction_kind {v:?}")))?),
                };
            }
            "uncorrected_geometry" => {
                uncorrected_geometry = match single()? {
                    "true" => true,
                    "false" => false,
                    v => return Err(err(n, format!("uncorrected_geometry must be true/false, got {v:?}"))),
                }
            }
            "records" => {
                if values != RECORD_COLUMNS {
                    return Err(err(n, format!("records columns must be {}", RECORD_COLUMNS.join(" "))));
                }
                saw_records = true;
                break;
            }
            other => return Err(err(n, format!("unknown key {other:?}"))),
        }
    }
    if !saw_records {
        return Err(err(0, "missing records line".into()));
    }

    let mut entries = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != RECORD_COLUMNS.len() {
            return Err(err(n, format!("record has {} fields, expected {}", fields.len(), RECORD_COLUMNS.len())));
        }
        let opt = |s: &str| (s != "-").then(|| PathBuf::from(s));
        if fields[0] == "-" || fields[0].is_empty() {
            return Err(err(n, "image path is required".into()));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(err(n, "empty field; use `-` for absent paths".into()));
        }
        entries.push(ManifestEntry {
            image: PathBuf::from(fields[0]),
            gt_depth: opt(fields[1]),
            prediction: opt(fields[2]),
            road_mask: opt(fields[3]),
            instance_mask: opt(fields[4]),
            motion_mask: opt(fields[5]),
        });
    }

    let manifest = DatasetManifest {
        split_name: split.ok_or_else(|| err(0, "missing split".into()))?,
        intrinsics: intrinsics.ok_or_else(|| err(0, "missing intrinsics".into()))?,
        entries,
        depth_cap,
        eval_crop,
        gt_divisor,
        prediction_kind,
        uncorrected_geometry,
        base_dir,
    };
    manifest.validate().map_err(|e| match e {
        Error::Validation(reason) => err(0, reason),
        other => other,
    })?;
    Ok(manifest)
}
