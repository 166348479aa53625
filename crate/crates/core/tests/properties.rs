use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;

use depthscale::camera_geometry::{
    compute_fov, plan_adjustment, reproject_pixel, AdjustMode, Axis, CameraIntrinsics,
};
use depthscale::depth_io::{read_depth_pfm, write_depth_pfm, DepthKind, DepthMap};
use depthscale::metrics::{abs_rel_norm, evaluate, EvalOptions, ImagePair};
use depthscale::resample::warp_depth;
use depthscale::scale_regression::{fit_global_scale, FitMethod, FitOptions, ScaleSample};

fn intrinsics() -> impl Strategy<Value = CameraIntrinsics> {
    (32u32..400, 24u32..300, 20.0f64..150.0, 0.4f64..0.6, 0.4f64..0.6).prop_map(|(w, h, fov, cx, cy)| {
        let f = f64::from(w) / 2.0 / (fov.to_radians() / 2.0).tan();
        CameraIntrinsics::new(f, f, f64::from(w) * cx, f64::from(h) * cy, w, h).unwrap()
    })
}

fn depth_map(max_side: u32) -> impl Strategy<Value = DepthMap> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.5f64..120.0], (w * h) as usize)
            .prop_map(move |v| DepthMap::from_values(w, h, v, DepthKind::GroundTruth).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fov_plan_realizes_target_fov(source in intrinsics(), target in intrinsics()) {
        let plan = plan_adjustment(AdjustMode::Fov, &source, &target).unwrap();
        let out = plan.output_intrinsics(&source);
        for axis in [Axis::Horizontal, Axis::Vertical] {
            let got = compute_fov(&out, axis).unwrap();
            let want = compute_fov(&target, axis).unwrap();
            prop_assert!((got - want).abs() < 1e-9, "{axis:?}: {got} vs {want}");
        }
    }

    #[test]
    fn identity_warp_is_exact(map in depth_map(24)) {
        let k = CameraIntrinsics::centered(50.0, map.width(), map.height()).unwrap();
        let plan = plan_adjustment(AdjustMode::Fov, &k, &k).unwrap();
        prop_assert_eq!(warp_depth(&map, &plan).unwrap(), map);
    }

    #[test]
    fn reprojection_round_trips(
        k in intrinsics(),
        u in 0.0f64..1.0, v in 0.0f64..1.0, depth in 1.0f64..80.0,
        axis in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), angle in -0.2f64..0.2,
        shift in (-1.0f64..1.0, -0.5f64..0.5, -1.0f64..1.0),
    ) {
        let pixel = Vector3::new(u * f64::from(k.width), v * f64::from(k.height), 1.0);
        let identity = reproject_pixel(&pixel, depth, &k, &Isometry3::identity()).unwrap();
        prop_assert!((identity.pixel - pixel).norm() < 1e-9);
        prop_assert!((identity.depth - depth).abs() < 1e-9);

        let rot_axis = Vector3::new(axis.0, axis.1, axis.2);
        prop_assume!(rot_axis.norm() > 1e-3);
        let pose = Isometry3::from_parts(
            Translation3::new(shift.0, shift.1, shift.2),
            UnitQuaternion::from_scaled_axis(rot_axis.normalize() * angle),
        );
        let there = reproject_pixel(&pixel, depth, &k, &pose).unwrap();
        prop_assume!(there.in_front);
        let back = reproject_pixel(&there.pixel, there.depth, &k, &pose.inverse()).unwrap();
        prop_assert!((back.pixel - pixel).norm() < 1e-6);
        prop_assert!((back.depth - depth).abs() < 1e-9 * depth);
    }

    #[test]
    fn exact_linear_data_recovers_slope(
        slope in 0.5f64..500.0,
        xs in proptest::collection::vec(0.01f64..1.0, 3..80),
        pairwise in any::<bool>(),
    ) {
        let samples: Vec<ScaleSample> = xs.iter().map(|&x| ScaleSample::new(x, slope * x, 0)).collect();
        let opts = FitOptions {
            method: if pairwise { FitMethod::TheilSenPairwise } else { FitMethod::default() },
            ..FitOptions::default()
        };
        let fit = fit_global_scale(&samples, &opts).unwrap();
        prop_assert!((fit.slope / slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn through_origin_slope_scales_with_ground_truth(
        pairs in proptest::collection::vec((0.01f64..1.0, 1.0f64..80.0), 2..100),
        c in 0.1f64..10.0,
    ) {
        let a: Vec<ScaleSample> = pairs.iter().map(|&(x, y)| ScaleSample::new(x, y, 0)).collect();
        let b: Vec<ScaleSample> = pairs.iter().map(|&(x, y)| ScaleSample::new(x, c * y, 0)).collect();
        let opts = FitOptions::default();
        let (sa, sb) = (fit_global_scale(&a, &opts).unwrap().slope, fit_global_scale(&b, &opts).unwrap().slope);
        prop_assert!((sb / (c * sa) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_are_ordered_and_bounded(gt in depth_map(12), factors in proptest::collection::vec(0.2f64..5.0, 144)) {
        let values: Vec<f64> = gt.values().iter().zip(&factors).map(|(g, f)| g.max(1.0) * f).collect();
        let pred = DepthMap::from_values(gt.width(), gt.height(), values, DepthKind::AbsolutePrediction).unwrap();
        let opts = EvalOptions::default();
        let Ok(r) = evaluate(&[ImagePair::new(&pred, &gt)], &opts) else {
            return Ok(());
        };
        prop_assert!(r.abs_rel >= 0.0 && r.sq_rel >= 0.0 && r.rmse >= 0.0 && r.rmse_log >= 0.0);
        prop_assert!(r.delta_1 <= r.delta_2 && r.delta_2 <= r.delta_3 && r.delta_3 <= 1.0);
        prop_assert!(r.abs_rel_norm >= 0.0);
    }

    #[test]
    fn abs_rel_norm_ignores_prediction_scale(gt in depth_map(12), c in 1e-3f64..1e3) {
        let pred = gt.scaled(0.01, DepthKind::UpToScale).unwrap();
        let pred = DepthMap::from_values(
            gt.width(),
            gt.height(),
            pred.values().iter().enumerate().map(|(i, v)| v * (1.0 + 0.1 * (i % 5) as f64)).collect(),
            DepthKind::UpToScale,
        )
        .unwrap();
        let rescaled = pred.scaled(c, DepthKind::UpToScale).unwrap();
        let opts = EvalOptions::default();
        let a = abs_rel_norm(&[ImagePair::new(&pred, &gt)], &opts);
        let b = abs_rel_norm(&[ImagePair::new(&rescaled, &gt)], &opts);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn pfm_round_trip_is_bit_exact(map in depth_map(16)) {
        let values: Vec<f64> = map.values().iter().map(|&v| f64::from(v as f32)).collect();
        let map = DepthMap::from_values(map.width(), map.height(), values, DepthKind::GroundTruth).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        write_depth_pfm(&map, &path).unwrap();
        prop_assert_eq!(read_depth_pfm(&path, DepthKind::GroundTruth).unwrap(), map);
    }
}
