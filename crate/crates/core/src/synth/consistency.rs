use serde::{Deserialize, Serialize};

use super::scene::{render, RenderedView, SyntheticScene};
use crate::camera_geometry::{plan_adjustment, AdjustMode, CameraIntrinsics, DepthFilter};
use crate::error::Result;
use crate::resample::{warp_depth, warp_labels};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyOptions {
    /// Pixels within this many pixels of an occlusion edge or a crease
    /// between box faces are ignored.
    pub edge_band: u32,
    /// Relative depth jump between 4-neighbors treated as an edge.
    pub edge_jump: f64,
    /// Pixels deeper than this in either map are ignored, meters.
    pub max_depth: f64,
    pub depth_filter: DepthFilter,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            edge_band: 2,
            edge_jump: 0.1,
            max_depth: 80.0,
            depth_filter: DepthFilter::EdgeAwareBilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub mode: AdjustMode,
    /// Largest `|adjusted - rendered| / rendered` over compared pixels.
    pub max_relative_discrepancy: f64,
    pub mean_relative_discrepancy: f64,
    pub compared_pixels: usize,
    pub edge_pixels: usize,
    /// Target pixels with rendered depth but no adjusted source content.
    pub padded_pixels: usize,
    /// `(column, row)` of the pixel with the largest discrepancy.
    pub worst_pixel: Option<(u32, u32)>,
}

/// Renders `scene` with the source camera, FOV-adjusts the depth onto the
/// target camera and compares it with a direct render at the target camera.
///
/// Pixels near occlusion edges or box creases in either view are skipped,
/// as are pixels deeper than `max_depth`.
pub fn fov_consistency_check(
    scene: &SyntheticScene,
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
    opts: &ConsistencyOptions,
) -> Result<ConsistencyReport> {
    adjustment_consistency(scene, source, target, AdjustMode::Fov, opts)
}

/// Same comparison for any adjustment mode, including the naive ones.
pub fn adjustment_consistency(
    scene: &SyntheticScene,
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
    mode: AdjustMode,
    opts: &ConsistencyOptions,
) -> Result<ConsistencyReport> {
    let src = render(scene, source)?;
    let tgt = render(scene, target)?;
    let plan = plan_adjustment(mode, source, target)?.with_depth_filter(opts.depth_filter);
    let adjusted = warp_depth(&src.depth, &plan)?;
    // Edges visible to either camera, including ones just outside the target frame.
    let src_edges = warp_labels(&edge_band(&src, opts), source.width, source.height, &plan, false)?;
    let edges: Vec<bool> = edge_band(&tgt, opts)
        .into_iter()
        .zip(src_edges)
        .map(|(a, b)| a || b)
        .collect();

    let mut report = ConsistencyReport {
        mode,
        max_relative_discrepancy: 0.0,
        mean_relative_discrepancy: 0.0,
        compared_pixels: 0,
        edge_pixels: 0,
        padded_pixels: 0,
        worst_pixel: None,
    };
    let mut sum = 0.0;
    for (i, &edge) in edges.iter().enumerate().take(tgt.depth.len()) {
        if !tgt.depth.is_valid(i) {
            continue;
        }
        if !adjusted.is_valid(i) {
            report.padded_pixels += 1;
            continue;
        }
        if edge {
            report.edge_pixels += 1;
            continue;
        }
        let (a, t) = (adjusted.values()[i], tgt.depth.values()[i]);
        if a > opts.max_depth || t > opts.max_depth {
            continue;
        }
        let rel = (a - t).abs() / t;
        if rel > report.max_relative_discrepancy || report.worst_pixel.is_none() {
            report.max_relative_discrepancy = rel;
            let w = target.width as usize;
            report.worst_pixel = Some(((i % w) as u32, (i / w) as u32));
        }
        sum += rel;
        report.compared_pixels += 1;
    }
    if report.compared_pixels > 0 {
        report.mean_relative_discrepancy = sum / report.compared_pixels as f64;
    }
    Ok(report)
}

// Surface and face changes plus large depth jumps, dilated by the band width.
fn edge_band(view: &RenderedView, opts: &ConsistencyOptions) -> Vec<bool> {
    let (w, h) = (view.intrinsics.width as usize, view.intrinsics.height as usize);
    let d = &view.depth;
    let differs = |a: usize, b: usize| {
        if view.surfaces[a] != view.surfaces[b] || view.faces[a] != view.faces[b] || d.is_valid(a) != d.is_valid(b) {
            return true;
        }
        if !d.is_valid(a) {
            return false;
        }
        let (x, y) = (d.values()[a], d.values()[b]);
        (x - y).abs() > opts.edge_jump * x.min(y)
    };
    let mut edge = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w && differs(i, i + 1) {
                edge[i] = true;
                edge[i + 1] = true;
            }
            if r + 1 < h && differs(i, i + w) {
                edge[i] = true;
                edge[i + w] = true;
            }
        }
    }
    let band = opts.edge_band as usize;
    if band == 0 {
        return edge;
    }
    let mut rows = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let lo = c.saturating_sub(band);
            let hi = (c + band).min(w - 1);
            rows[r * w + c] = (lo..=hi).any(|k| edge[r * w + k]);
        }
    }
    let mut out = vec![false; w * h];
    for r in 0..h {
        let lo = r.saturating_sub(band);
        let hi = (r + band).min(h - 1);
        for c in 0..w {
            out[r * w + c] = (lo..=hi).any(|k| rows[k * w + c]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_io::InstanceClass;
    use crate::synth::SceneBox;

    fn scene() -> SyntheticScene {
        let mut s = SyntheticScene::new(1.6);
        s.boxes.push(SceneBox::on_ground(1.6, -1.0, 12.0, [1.8, 1.5, 4.2], InstanceClass::Vehicle));
        s.boxes.push(SceneBox::on_ground(1.6, 9.0, 20.0, [5.0, 8.0, 12.0], InstanceClass::Other));
        s
    }

    #[test]
    fn identical_cameras_agree_exactly() {
        let k = CameraIntrinsics::centered(120.0, 160, 60).unwrap();
        let r = fov_consistency_check(&scene(), &k, &k, &ConsistencyOptions::default()).unwrap();
        assert_eq!(r.max_relative_discrepancy, 0.0);
        assert!(r.compared_pixels > 1000);
        assert_eq!(r.padded_pixels, 0);
    }

    #[test]
    fn crop_path_stays_within_one_percent() {
        let s = CameraIntrinsics::centered(240.0, 200, 80).unwrap();
        let t = CameraIntrinsics::centered(120.0, 160, 60).unwrap();
        let r = fov_consistency_check(&scene(), &s, &t, &ConsistencyOptions::default()).unwrap();
        assert!(r.max_relative_discrepancy < 0.01, "{r:?}");
    }

    #[test]
    fn padded_path_skips_padding() {
        let s = CameraIntrinsics::centered(60.0, 160, 60).unwrap();
        let t = CameraIntrinsics::centered(120.0, 160, 60).unwrap();
        let r = fov_consistency_check(&scene(), &s, &t, &ConsistencyOptions::default()).unwrap();
        assert_eq!(r.padded_pixels, 0);
        assert!(r.max_relative_discrepancy < 0.01, "{r:?}");

        let s = CameraIntrinsics::centered(240.0, 160, 60).unwrap();
        let r = fov_consistency_check(&scene(), &s, &t, &ConsistencyOptions::default()).unwrap();
        assert!(r.padded_pixels > 0);
        assert!(r.max_relative_discrepancy < 0.01, "{r:?}");
    }

    #[test]
    fn naive_crop_breaks_geometry() {
        let s = CameraIntrinsics::centered(200.0, 160, 60).unwrap();
        let t = CameraIntrinsics::centered(120.0, 160, 60).unwrap();
        let r = adjustment_consistency(&scene(), &s, &t, AdjustMode::NaiveCenterCrop, &ConsistencyOptions::default())
            .unwrap();
        assert!(r.max_relative_discrepancy > 0.05, "{r:?}");
    }
}
