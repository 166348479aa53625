use std::path::Path;

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use depthscale::camera_geometry::{AdjustMode, CameraIntrinsics};
use depthscale::depth_io::{
    load_manifest, read_depth_pfm, write_depth_pfm, write_rgb, DatasetManifest, DepthKind, DepthMap, ManifestEntry,
};
use depthscale::local_motion::{MotionMaskConfig, Verdict};
use depthscale::pipeline::{
    run_apply, run_evaluate, run_fit, run_fov_adjust, run_motion_masks, run_synth, Convention, EvaluateConfig,
    FitConfig,
};
use depthscale::synth::TwoDomainConfig;

const W: u32 = 40;
const H: u32 = 24;

// Small split on disk: textured images, ground truth in [2, 70] m with a few
// holes, and predictions `gt / slope`.
fn write_split(dir: &Path, n: usize, slope: Option<f64>) -> DatasetManifest {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let k = CameraIntrinsics::new(30.0, 30.0, 19.6, 12.2, W, H).unwrap();
    let mut manifest = DatasetManifest::new("tiny", k, dir);
    for i in 0..n {
        let img = RgbImage::from_fn(W, H, |_, _| image::Rgb(rng.gen()));
        let gt: Vec<f64> = (0..W * H)
            .map(|_| if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(2.0..70.0) })
            .collect();
        let gt = DepthMap::from_values(W, H, gt, DepthKind::GroundTruth).unwrap();
        let mut entry = ManifestEntry::new(format!("img{i}.png"));
        write_rgb(&img, dir.join(format!("img{i}.png"))).unwrap();
        write_depth_pfm(&gt, dir.join(format!("gt{i}.pfm"))).unwrap();
        entry.gt_depth = Some(format!("gt{i}.pfm").into());
        if let Some(s) = slope {
            let pred = gt.scaled(1.0 / s, DepthKind::UpToScale).unwrap();
            write_depth_pfm(&pred, dir.join(format!("pred{i}.pfm"))).unwrap();
            entry.prediction = Some(format!("pred{i}.pfm").into());
            manifest.prediction_kind = Some(DepthKind::UpToScale);
        }
        manifest.entries.push(entry);
    }
    manifest.write(dir.join("manifest.tsv")).unwrap();
    load_manifest(dir.join("manifest.tsv")).unwrap()
}

#[test]
fn exact_linear_split_recovers_slope() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(dir.path(), 4, Some(42.0));
    let report = run_fit(&m, &FitConfig::default()).unwrap();
    assert!((report.g_dscale - 42.0).abs() < 1e-4, "{}", report.g_dscale);
    let filtered = report.filtered.unwrap();
    assert_eq!(filtered.retained_fraction, 1.0);
    assert!(filtered.dropped_images.is_empty());
}

#[test]
fn fit_without_predictions_fails() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(dir.path(), 2, None);
    let err = run_fit(&m, &FitConfig::default()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn apply_multiplies_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(&dir.path().join("split"), 2, Some(2.0));

    let (_, unit) = run_apply(&m, 1.0, &dir.path().join("unit")).unwrap();
    let (_, scaled) = run_apply(&m, 100.0, &dir.path().join("scaled")).unwrap();
    for i in 0..2 {
        let before = m.load_prediction(i).unwrap().unwrap();
        let same = unit.load_prediction(i).unwrap().unwrap();
        assert_eq!(same.values(), before.values());
        assert_eq!(same.kind(), DepthKind::AbsolutePrediction);
        let big = scaled.load_prediction(i).unwrap().unwrap();
        for (b, s) in before.values().iter().zip(big.values()) {
            assert!((s - 100.0 * b).abs() <= 1e-4 * s.abs().max(1.0));
        }
    }
    // Ground truth still resolves from the new location.
    let reloaded = load_manifest(dir.path().join("scaled/manifest.tsv")).unwrap();
    assert_eq!(reloaded.load_gt(1).unwrap(), m.load_gt(1).unwrap());
    // Scaling twice is refused.
    assert!(run_apply(&scaled, 2.0, &dir.path().join("twice")).is_err());
}

#[test]
fn half_predictions_become_fifty_meters() {
    let dir = tempfile::tempdir().unwrap();
    let k = CameraIntrinsics::centered(10.0, 4, 3).unwrap();
    let mut m = DatasetManifest::new("half", k, dir.path());
    m.prediction_kind = Some(DepthKind::UpToScale);
    write_rgb(&RgbImage::new(4, 3), dir.path().join("i.png")).unwrap();
    let pred = DepthMap::from_values(4, 3, vec![0.5; 12], DepthKind::UpToScale).unwrap();
    write_depth_pfm(&pred, dir.path().join("p.pfm")).unwrap();
    let mut e = ManifestEntry::new("i.png");
    e.prediction = Some("p.pfm".into());
    m.entries.push(e);
    let (_, out) = run_apply(&m, 100.0, &dir.path().join("out")).unwrap();
    let got = read_depth_pfm(out.resolve(out.entries[0].prediction.as_ref().unwrap()), DepthKind::AbsolutePrediction)
        .unwrap();
    assert!(got.values().iter().all(|&v| v == 50.0));
}

#[test]
fn identity_adjustment_preserves_content() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(&dir.path().join("split"), 2, Some(3.0));
    let out = run_fov_adjust(&m, &m.intrinsics, AdjustMode::Fov, &dir.path().join("adj")).unwrap();
    assert!(out.plan.is_identity());
    assert!(!out.manifest.uncorrected_geometry);
    for i in 0..2 {
        assert_eq!(out.manifest.load_image(i).unwrap(), m.load_image(i).unwrap());
        assert_eq!(out.manifest.load_gt(i).unwrap(), m.load_gt(i).unwrap());
        assert_eq!(out.manifest.load_prediction(i).unwrap(), m.load_prediction(i).unwrap());
    }
}

#[test]
fn naive_modes_mark_geometry_uncorrected() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(&dir.path().join("split"), 1, Some(3.0));
    let target = CameraIntrinsics::centered(20.0, 30, 20).unwrap();
    for (mode, name) in [(AdjustMode::NaiveCenterCrop, "a"), (AdjustMode::NaiveResizeCrop, "b")] {
        let out = run_fov_adjust(&m, &target, mode, &dir.path().join(name)).unwrap();
        assert!(out.manifest.uncorrected_geometry);
        assert_eq!((out.manifest.intrinsics.width, out.manifest.intrinsics.height), (30, 20));
        let reloaded = load_manifest(&out.manifest_path).unwrap();
        assert!(reloaded.uncorrected_geometry);
        let report = run_evaluate(&reloaded, &EvaluateConfig::default());
        // Predictions are still up to scale but the flag travels with the report.
        assert!(report.map(|r| r.uncorrected_geometry).unwrap_or(true));
    }
}

#[test]
fn padded_adjustment_invalidates_borders() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(&dir.path().join("split"), 1, Some(3.0));
    // Shorter focal at the same size: the target sees more than the source.
    let target = CameraIntrinsics::centered(15.0, W, H).unwrap();
    let out = run_fov_adjust(&m, &target, AdjustMode::Fov, &dir.path().join("adj")).unwrap();
    assert!(out.plan.needs_padding());
    let gt = out.manifest.load_gt(0).unwrap().unwrap();
    assert!(!gt.is_valid(gt.index(0, 0)));
    assert!(!gt.is_valid(gt.index(W - 1, H / 2)));
    assert!(gt.valid_count() > 0);
    let img = out.manifest.load_image(0).unwrap();
    // Reflection padding, not black.
    assert!(img.pixels().filter(|p| p.0 == [0, 0, 0]).count() < (W * H / 10) as usize);
}

#[test]
fn evaluation_of_exact_predictions_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_split(&dir.path().join("split"), 3, Some(5.0));
    let (_, scaled) = run_apply(&m, 5.0, &dir.path().join("scaled")).unwrap();
    let config = EvaluateConfig {
        convention: Convention::Both,
        ..EvaluateConfig::default()
    };
    let report = run_evaluate(&scaled, &config).unwrap();
    for r in [report.per_image.as_ref().unwrap(), report.pooled.as_ref().unwrap()] {
        assert!(r.abs_rel < 1e-6 && r.abs_rel_norm < 1e-6, "{r:?}");
        assert!((r.scale_ratio_mean - 1.0).abs() < 1e-6);
        assert_eq!(r.delta_1, 1.0);
    }
    assert_eq!(report.images.len(), 3);
}

#[test]
fn motion_masks_follow_moving_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = TwoDomainConfig::kitti_to_ddad(0.2, 5).unwrap();
    config.images_per_domain = 4;
    config.moving_fraction = 0.5;
    // Outlier pixels alone can push a static car past the rule.
    config.prediction.outlier_fraction = 0.0;
    config.prediction.noise_std = 0.0;
    let synth = run_synth(&config, &dir.path().join("synth")).unwrap();
    let unsup = load_manifest(&synth.target_manifest).unwrap();
    let sup = load_manifest(&synth.target_supervised_manifest).unwrap();
    let out = run_motion_masks(&unsup, &sup, &MotionMaskConfig::default(), &dir.path().join("motion")).unwrap();

    let mut truly_moving = 0;
    for (frame, truth) in out.frames.iter().zip(&synth.truth.target) {
        assert!(frame.skipped.is_none());
        truly_moving += truth.moving_instances.len();
        for v in &frame.verdicts {
            let flagged = v.verdict == Verdict::Moving;
            assert_eq!(flagged, truth.moving_instances.contains(&v.instance_id), "frame {}: {v:?}", frame.index);
        }
    }
    assert!(truly_moving > 0);
    assert!(out.moving_instances() > 0);
    assert!(dir.path().join("motion/verdicts.csv").exists());
    let reloaded = load_manifest(&out.manifest_path).unwrap();
    assert!(reloaded.entries.iter().all(|e| e.motion_mask.is_some()));
}

#[test]
fn jittered_synthetic_split_recovers_scale() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = TwoDomainConfig::kitti_to_ddad(0.2, 17).unwrap();
    config.images_per_domain = 20;
    config.prediction.global_scale = 60.0;
    let synth = run_synth(&config, dir.path()).unwrap();
    let source = load_manifest(&synth.source_manifest).unwrap();
    let fit = run_fit(&source, &FitConfig::default()).unwrap();
    // The realized scale of a finite split is set by its per-image jitter.
    let mut slopes: Vec<f64> = synth.truth.source.iter().map(|t| t.true_slope).collect();
    slopes.sort_by(f64::total_cmp);
    let realized = (slopes[9] + slopes[10]) / 2.0;
    assert!((fit.g_dscale / realized - 1.0).abs() < 0.01, "{} vs {realized}", fit.g_dscale);
    assert!((fit.g_dscale / 60.0 - 1.0).abs() < 0.03, "{}", fit.g_dscale);
}
