//! Named camera presets for common driving datasets.
//!
//! Each preset stores the horizontal FOV, the camera height above the road
//! and the network input resolution used when the dataset is the target
//! domain. Intrinsics are derived with a centered principal point and square
//! pixels.

use serde::Serialize;

use crate::camera_geometry::CameraIntrinsics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetPreset {
    pub name: &'static str,
    /// Horizontal field of view in degrees.
    pub fov_deg: f64,
    /// Camera height above the ground plane in meters.
    pub camera_height: f64,
    pub width: u32,
    pub height: u32,
}

impl DatasetPreset {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_horizontal_fov(self.fov_deg, self.width, self.height)
            .expect("preset values are valid")
    }

    /// Same FOV at a resolution scaled by `factor` (rounded, at least 1 px).
    pub fn scaled_intrinsics(&self, factor: f64) -> Result<CameraIntrinsics> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::validation(format!("resolution factor {factor} must be positive")));
        }
        let w = ((f64::from(self.width) * factor).round() as u32).max(1);
        let h = ((f64::from(self.height) * factor).round() as u32).max(1);
        CameraIntrinsics::from_horizontal_fov(self.fov_deg, w, h)
    }
}

pub const KITTI: DatasetPreset = DatasetPreset {
    name: "kitti",
    fov_deg: 81.43,
    camera_height: 1.65,
    width: 1024,
    height: 320,
};

/// DDAD front camera.
pub const DDAD_FRONT: DatasetPreset = DatasetPreset {
    name: "ddad-front",
    fov_deg: 47.85,
    camera_height: 1.55,
    width: 960,
    height: 608,
};

pub const NUSCENES_FRONT: DatasetPreset = DatasetPreset {
    name: "nuscenes-front",
    fov_deg: 64.8,
    camera_height: 1.51,
    width: 800,
    height: 488,
};

/// Virtual KITTI 2, camera 0 at its native resolution.
pub const VKITTI2: DatasetPreset = DatasetPreset {
    name: "vkitti2",
    fov_deg: 81.16,
    camera_height: 1.58,
    width: 1242,
    height: 375,
};

pub const PRESETS: [DatasetPreset; 4] = [KITTI, DDAD_FRONT, NUSCENES_FRONT, VKITTI2];

pub fn preset(name: &str) -> Option<DatasetPreset> {
    let name = name.to_ascii_lowercase();
    let alias = match name.as_str() {
        "ddad" | "ddad1" => "ddad-front",
        "nuscenes" | "nuscenes1" => "nuscenes-front",
        other => other,
    };
    PRESETS.iter().copied().find(|p| p.name == alias)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}
