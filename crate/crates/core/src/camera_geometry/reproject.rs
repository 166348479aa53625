use nalgebra::{Isometry3, Matrix3, Point3, Vector3};

use super::intrinsics::CameraIntrinsics;
use crate::error::{Error, Result};

/// Where a pixel lands after moving it through a relative camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reprojection {
    /// Homogeneous pixel `(u, v, 1)` in the second view. Meaningless when
    /// `in_front` is false.
    pub pixel: Vector3<f64>,
    /// Z-depth of the point in the second camera frame.
    pub depth: f64,
    /// False when the transformed point lies on or behind the image plane.
    pub in_front: bool,
}

/// Calibration matrix `K`.
pub fn calibration_matrix(k: &CameraIntrinsics) -> Matrix3<f64> {
    Matrix3::new(
        k.focal_x, 0.0, k.center_x, //
        0.0, k.focal_y, k.center_y, //
        0.0, 0.0, 1.0,
    )
}

/// Computes `K * T * (depth * K^-1 * p)` and dehomogenizes it.
///
/// `relative_pose` maps points from the first camera frame into the second.
/// `pixel` may carry any non-zero homogeneous scale.
pub fn reproject_pixel(
    pixel: &Vector3<f64>,
    depth: f64,
    intrinsics: &CameraIntrinsics,
    relative_pose: &Isometry3<f64>,
) -> Result<Reprojection> {
    intrinsics.validate()?;
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::validation(format!("depth {depth} must be positive")));
    }
    if pixel.z == 0.0 || !pixel.iter().all(|c| c.is_finite()) {
        return Err(Error::validation("pixel must be a finite point with w != 0"));
    }
    let k = calibration_matrix(intrinsics);
    let p = pixel / pixel.z;
    let ray = Vector3::new(
        (p.x - k[(0, 2)]) / k[(0, 0)],
        (p.y - k[(1, 2)]) / k[(1, 1)],
        1.0,
    );
    let point = relative_pose.transform_point(&Point3::from(ray * depth));
    let in_front = point.z > 0.0;
    let projected = k * point.coords;
    let pixel = if in_front {
        projected / projected.z
    } else {
        projected
    };
    Ok(Reprojection {
        pixel,
        depth: point.z,
        in_front,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Translation3, UnitQuaternion};
    use std::f64::consts::PI;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn identity_pose_is_a_fixed_point() {
        let k = camera();
        for &(u, v, d) in &[(10.5, 20.5, 3.0), (320.0, 240.0, 50.0), (639.9, 0.1, 0.2)] {
            let r = reproject_pixel(&Vector3::new(u, v, 1.0), d, &k, &Isometry3::identity()).unwrap();
            assert!(r.in_front);
            assert!((r.pixel.x - u).abs() < 1e-9 && (r.pixel.y - v).abs() < 1e-9);
            assert!((r.depth - d).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_motion_by_half_depth_doubles_offsets() {
        let k = camera();
        let d = 10.0;
        // Camera moves forward d/2, so points move toward it by d/2.
        let pose = Isometry3::from_parts(Translation3::new(0.0, 0.0, -d / 2.0), UnitQuaternion::identity());
        let (u, v) = (400.0, 200.0);
        let r = reproject_pixel(&Vector3::new(u, v, 1.0), d, &k, &pose).unwrap();
        assert!(r.in_front);
        assert!((r.pixel.x - (k.center_x + 2.0 * (u - k.center_x))).abs() < 1e-9);
        assert!((r.pixel.y - (k.center_y + 2.0 * (v - k.center_y))).abs() < 1e-9);
        assert!((r.depth - d / 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_turn_puts_point_behind() {
        let k = camera();
        let pose = Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), PI),
        );
        let r = reproject_pixel(&Vector3::new(300.0, 200.0, 1.0), 5.0, &k, &pose).unwrap();
        assert!(!r.in_front);
        assert!(r.depth < 0.0);
    }

    #[test]
    fn homogeneous_scale_is_ignored() {
        let k = camera();
        let a = reproject_pixel(&Vector3::new(100.0, 50.0, 1.0), 4.0, &k, &Isometry3::identity()).unwrap();
        let b = reproject_pixel(&Vector3::new(200.0, 100.0, 2.0), 4.0, &k, &Isometry3::identity()).unwrap();
        assert!((a.pixel - b.pixel).norm() < 1e-9);
    }

    #[test]
    fn non_positive_depth_rejected() {
        let k = camera();
        let p = Vector3::new(1.0, 1.0, 1.0);
        assert!(reproject_pixel(&p, 0.0, &k, &Isometry3::identity()).is_err());
        assert!(reproject_pixel(&p, -2.0, &k, &Isometry3::identity()).is_err());
    }
}
