use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Image axis along which a field of view is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Pinhole intrinsics of a camera domain.
///
/// Pixel coordinates are continuous: pixel `(col, row)` covers
/// `[col, col + 1) x [row, row + 1)` and its center sits at
/// `(col + 0.5, row + 0.5)`. A principal point of `(width / 2, height / 2)`
/// is therefore exactly centered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_x: f64,
    pub focal_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Builds and validates intrinsics.
    pub fn new(
        focal_x: f64,
        focal_y: f64,
        center_x: f64,
        center_y: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let k = Self {
            focal_x,
            focal_y,
            center_x,
            center_y,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(
            focal,
            focal,
            f64::from(width) / 2.0,
            f64::from(height) / 2.0,
            width,
            height,
        )
    }

    /// Centered intrinsics whose horizontal FOV equals `fov_deg`.
    pub fn from_horizontal_fov(fov_deg: f64, width: u32, height: u32) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::validation(format!(
                "field of view {fov_deg} deg outside (0, 180)"
            )));
        }
        let focal = focal_for_fov(fov_deg, f64::from(width));
        Self::centered(focal, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation(format!(
                "image size {}x{} must be positive",
                self.width, self.height
            )));
        }
        if !(self.focal_x.is_finite() && self.focal_x > 0.0)
            || !(self.focal_y.is_finite() && self.focal_y > 0.0)
        {
            return Err(Error::validation(format!(
                "focal lengths ({}, {}) must be positive and finite",
                self.focal_x, self.focal_y
            )));
        }
        let cx_ok = self.center_x >= 0.0 && self.center_x < f64::from(self.width);
        let cy_ok = self.center_y >= 0.0 && self.center_y < f64::from(self.height);
        if !(cx_ok && cy_ok) {
            return Err(Error::validation(format!(
                "principal point ({}, {}) outside image {}x{}",
                self.center_x, self.center_y, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Field of view in degrees: `2 * atan(extent / (2 * focal))`.
    pub fn fov(&self, axis: Axis) -> Result<f64> {
        compute_fov(self, axis)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Normalized ray direction `(x, y, 1)` through continuous pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64) -> [f64; 3] {
        [
            (u - self.center_x) / self.focal_x,
            (v - self.center_y) / self.focal_y,
            1.0,
        ]
    }

    pub fn project(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        (
            self.focal_x * x / z + self.center_x,
            self.focal_y * y / z + self.center_y,
        )
    }
}

/// Field of view in degrees along `axis`.
///
/// Horizontal uses `width` with `focal_x`, vertical uses `height` with `focal_y`.
pub fn compute_fov(intrinsics: &CameraIntrinsics, axis: Axis) -> Result<f64> {
    intrinsics.validate()?;
    let (extent, focal) = match axis {
        Axis::Horizontal => (f64::from(intrinsics.width), intrinsics.focal_x),
        Axis::Vertical => (f64::from(intrinsics.height), intrinsics.focal_y),
    };
    Ok(fov_degrees(extent, focal))
}

fn fov_degrees(extent: f64, focal: f64) -> f64 {
    2.0 * (extent / (2.0 * focal)).atan().to_degrees()
}

/// Inverse of the FOV formula: the focal length giving `fov_deg` over `extent` pixels.
pub fn focal_for_fov(fov_deg: f64, extent: f64) -> f64 {
    extent / (2.0 * (fov_deg.to_radians() / 2.0).tan())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_fov_is_ninety_degrees() {
        let k = CameraIntrinsics::centered(500.0, 1000, 600).unwrap();
        let fov = compute_fov(&k, Axis::Horizontal).unwrap();
        assert!((fov - 90.0).abs() < 1e-12);
    }

    #[test]
    fn kitti_like_fov() {
        let k = CameraIntrinsics::centered(721.5, 1242, 375).unwrap();
        let fov = compute_fov(&k, Axis::Horizontal).unwrap();
        // 2 * atan(1242 / 1443) evaluated independently.
        let expected = 2.0 * (1242.0f64 / 1443.0).atan() * 180.0 / std::f64::consts::PI;
        assert!((fov - expected).abs() < 1e-12);
        assert!((fov - 81.437_608_394_484).abs() < 1e-9, "{fov}");
    }

    #[test]
    fn vertical_uses_height_and_focal_y() {
        let k = CameraIntrinsics::new(500.0, 250.0, 500.0, 250.0, 1000, 500).unwrap();
        let fov = compute_fov(&k, Axis::Vertical).unwrap();
        assert!((fov - 90.0).abs() < 1e-12);
    }

    #[test]
    fn zero_width_rejected() {
        let k = CameraIntrinsics {
            focal_x: 1000.0,
            focal_y: 1000.0,
            center_x: 0.0,
            center_y: 0.0,
            width: 0,
            height: 10,
        };
        assert!(matches!(
            compute_fov(&k, Axis::Horizontal),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn principal_point_must_lie_inside() {
        assert!(CameraIntrinsics::new(100.0, 100.0, 10.0, 5.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(100.0, 100.0, -0.1, 5.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(-1.0, 100.0, 5.0, 5.0, 10, 10).is_err());
    }

    #[test]
    fn fov_focal_round_trip() {
        for &(f, w) in &[(100.0, 640u32), (721.5377, 1242), (2000.0, 320), (1.5, 4)] {
            let k = CameraIntrinsics::centered(f, w, 100).unwrap();
            let fov = compute_fov(&k, Axis::Horizontal).unwrap();
            let back = focal_for_fov(fov, f64::from(w));
            assert!(((back - f) / f).abs() < 1e-9);
        }
    }
}
