//! Applies a [`FovAdjustPlan`] to RGB frames, depth maps and label masks.

use image::RgbImage;

use crate::camera_geometry::{DepthFilter, FovAdjustPlan, RgbPadMode};
use crate::depth_io::DepthMap;
use crate::error::{Error, Result};

// Mirror index into [0, n) without repeating the border sample.
fn reflect(i: i64, n: u32) -> usize {
    let n = i64::from(n);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

fn check_source(plan: &FovAdjustPlan, width: u32, height: u32, what: &str) -> Result<()> {
    if width != plan.source_width || height != plan.source_height {
        return Err(Error::validation(format!(
            "{what} is {width}x{height} but the plan expects {}x{}",
            plan.source_width, plan.source_height
        )));
    }
    Ok(())
}

// Source sample position (pixel-center coordinates) for each output column/row.
fn sample_positions(plan: &FovAdjustPlan) -> (Vec<f64>, Vec<f64>) {
    let xs = (0..plan.output_width)
        .map(|j| plan.map_x(f64::from(j) + 0.5))
        .collect();
    let ys = (0..plan.output_height)
        .map(|i| plan.map_y(f64::from(i) + 0.5))
        .collect();
    (xs, ys)
}

// Left neighbor index and weight for interpolating at continuous index
// `p`. Within half a pixel of the border the two outermost samples are
// extrapolated linearly, so the weight may leave [0, 1] by up to 0.5.
fn bracket(p: f64, n: u32) -> (i64, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i = (p.floor() as i64).clamp(0, i64::from(n) - 2);
    (i, p - i as f64)
}

fn nearest_index(pos: f64, n: u32) -> Option<usize> {
    let i = pos.floor();
    (i >= 0.0 && i < f64::from(n)).then_some(i as usize)
}

/// Bilinear resample with the plan's RGB padding.
pub fn warp_rgb(img: &RgbImage, plan: &FovAdjustPlan) -> Result<RgbImage> {
    let (w, h) = img.dimensions();
    check_source(plan, w, h, "image")?;
    let (xs, ys) = sample_positions(plan);
    let mut out = RgbImage::new(plan.output_width, plan.output_height);
    let fetch = |x: i64, y: i64| -> [f64; 3] {
        let inside = x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h);
        if !inside && plan.rgb_pad_mode == RgbPadMode::Zero {
            return [0.0; 3];
        }
        let p = img.get_pixel(reflect(x, w) as u32, reflect(y, h) as u32).0;
        [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]
    };
    for (i, &sy) in ys.iter().enumerate() {
        let py = sy - 0.5;
        let y0 = py.floor();
        let fy = py - y0;
        for (j, &sx) in xs.iter().enumerate() {
            let px = sx - 0.5;
            let x0 = px.floor();
            let fx = px - x0;
            let (x0, y0) = (x0 as i64, y0 as i64);
            let a = fetch(x0, y0);
            let mut rgb = [0u8; 3];
            if fx == 0.0 && fy == 0.0 {
                for c in 0..3 {
                    rgb[c] = a[c] as u8;
                }
            } else {
                let b = fetch(x0 + 1, y0);
                let c_ = fetch(x0, y0 + 1);
                let d = fetch(x0 + 1, y0 + 1);
                for c in 0..3 {
                    let v = (1.0 - fy) * ((1.0 - fx) * a[c] + fx * b[c]) + fy * ((1.0 - fx) * c_[c] + fx * d[c]);
                    rgb[c] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
            out.put_pixel(j as u32, i as u32, image::Rgb(rgb));
        }
    }
    Ok(out)
}

/// Resamples a depth map; samples outside the source are invalid.
pub fn warp_depth(map: &DepthMap, plan: &FovAdjustPlan) -> Result<DepthMap> {
    check_source(plan, map.width(), map.height(), "depth map")?;
    let (w, h) = (map.width(), map.height());
    let (xs, ys) = sample_positions(plan);
    let mut out = DepthMap::empty(plan.output_width, plan.output_height, map.kind());
    let at = |x: i64, y: i64| map.get(x as u32, y as u32);
    let ow = plan.output_width as usize;
    for (i, &sy) in ys.iter().enumerate() {
        for (j, &sx) in xs.iter().enumerate() {
            let nearest = || match (nearest_index(sx, w), nearest_index(sy, h)) {
                (Some(x), Some(y)) => map.get(x as u32, y as u32),
                _ => None,
            };
            let inside = nearest_index(sx, w).is_some() && nearest_index(sy, h).is_some();
            let value = match plan.resize_filter_depth {
                _ if !inside => None,
                DepthFilter::Nearest => nearest(),
                DepthFilter::EdgeAwareBilinear => {
                    let (x0, fx) = bracket(sx - 0.5, w);
                    let (y0, fy) = bracket(sy - 0.5, h);
                    let x1 = (x0 + 1).min(i64::from(w) - 1);
                    let y1 = (y0 + 1).min(i64::from(h) - 1);
                    match (at(x0, y0), at(x1, y0), at(x0, y1), at(x1, y1)) {
                        (Some(a), _, _, _) if fx == 0.0 && fy == 0.0 => Some(a),
                        (Some(a), Some(b), Some(c), Some(d)) => {
                            let lo = a.min(b).min(c).min(d);
                            let hi = a.max(b).max(c).max(d);
                            if hi <= lo * plan.depth_edge_ratio {
                                Some((1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d))
                            } else {
                                nearest()
                            }
                        }
                        _ => nearest(),
                    }
                }
            };
            if let Some(v) = value {
                out.set(i * ow + j, v);
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbor resample of per-pixel labels; outside samples get `fill`.
pub fn warp_labels<T: Copy>(
    labels: &[T],
    width: u32,
    height: u32,
    plan: &FovAdjustPlan,
    fill: T,
) -> Result<Vec<T>> {
    check_source(plan, width, height, "label map")?;
    if labels.len() != width as usize * height as usize {
        return Err(Error::validation("label length does not match dimensions"));
    }
    let (xs, ys) = sample_positions(plan);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &sy in &ys {
        for &sx in &xs {
            out.push(match (nearest_index(sx, width), nearest_index(sy, height)) {
                (Some(x), Some(y)) => labels[y * width as usize + x],
                _ => fill,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera_geometry::{plan_fov_adjustment, CameraIntrinsics};
    use crate::depth_io::DepthKind;

    #[test]
    fn reflection_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn identity_plan_is_pixel_exact() {
        let k = CameraIntrinsics::new(90.0, 90.0, 7.3, 4.1, 13, 9).unwrap();
        let plan = plan_fov_adjustment(&k, &k).unwrap();
        let img = RgbImage::from_fn(13, 9, |x, y| image::Rgb([(x * 19) as u8, (y * 27) as u8, ((x * y) % 251) as u8]));
        assert_eq!(warp_rgb(&img, &plan).unwrap(), img);
        let values: Vec<f64> = (0..117).map(|i| if i % 7 == 0 { 0.0 } else { 1.0 + (i as f64).sqrt() }).collect();
        let depth = DepthMap::from_values(13, 9, values, DepthKind::GroundTruth).unwrap();
        assert_eq!(warp_depth(&depth, &plan).unwrap(), depth);
    }

    #[test]
    fn padding_is_invalid_depth_and_reflected_rgb() {
        let s = CameraIntrinsics::centered(200.0, 4, 2).unwrap();
        let t = CameraIntrinsics::centered(100.0, 4, 2).unwrap();
        let plan = plan_fov_adjustment(&s, &t).unwrap();
        assert_eq!(plan.crop_left(), -2);
        let depth = DepthMap::from_values(4, 2, vec![5.0; 8], DepthKind::GroundTruth).unwrap();
        let out = warp_depth(&depth, &plan.with_depth_filter(DepthFilter::Nearest)).unwrap();
        // Output column 0 samples source x = -2 + 0.5 * 2 = -1, outside.
        assert_eq!(out.get(0, 0), None);
        assert_eq!(out.get(1, 0), Some(5.0));
        assert_eq!(out.get(3, 0), None);
        let img = RgbImage::from_fn(4, 2, |x, _| image::Rgb([x as u8 * 10, 0, 0]));
        let rgb = warp_rgb(&img, &plan).unwrap();
        assert!(rgb.pixels().all(|p| p.0[0] <= 30));
    }

    #[test]
    fn edge_aware_filter_does_not_blend_discontinuities() {
        let s = CameraIntrinsics::centered(100.0, 4, 1).unwrap();
        let t = CameraIntrinsics::centered(200.0, 4, 1).unwrap();
        let plan = plan_fov_adjustment(&s, &t).unwrap();
        let depth = DepthMap::from_values(4, 1, vec![1.0, 2.0, 10.0, 20.0], DepthKind::GroundTruth).unwrap();
        let out = warp_depth(&depth, &plan).unwrap();
        for v in out.values() {
            assert!([2.0, 10.0].contains(v), "{v}");
        }
    }
}
