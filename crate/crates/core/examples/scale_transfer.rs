//! Full scale transfer on a synthetic KITTI-like source and DDAD-like target.
//!
//! Run with `cargo run --release --example scale_transfer [out_dir]`.

use std::path::PathBuf;

use depthscale::camera_geometry::AdjustMode;
use depthscale::depth_io::load_manifest;
use depthscale::pipeline::{run_apply, run_evaluate, run_fit, run_fov_adjust, run_synth, EvaluateConfig, FitConfig};
use depthscale::synth::TwoDomainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("depthscale-transfer"));
    let mut config = TwoDomainConfig::kitti_to_ddad(0.25, 7)?;
    config.prediction.global_scale = 150.0;

    let synth = run_synth(&config, &out.join("synth"))?;
    let source = load_manifest(&synth.source_manifest)?;
    let target = load_manifest(&synth.target_manifest)?;

    let adjusted = run_fov_adjust(&source, &target.intrinsics, AdjustMode::Fov, &out.join("adjusted"))?;
    let fit = run_fit(&adjusted.manifest, &FitConfig::default())?;
    println!("injected G = {}, fitted G_dscale = {:.3}", config.prediction.global_scale, fit.g_dscale);
    if let Some(per_image) = &fit.unfiltered.per_image {
        println!("per-image slopes: {:.2} +- {:.2}", per_image.mean, per_image.std_dev);
    }

    let (_, scaled) = run_apply(&target, fit.g_dscale, &out.join("scaled"))?;
    let report = run_evaluate(&scaled, &EvaluateConfig::default())?;
    let m = report.primary();
    println!(
        "target: abs_rel {:.4}, abs_rel_norm {:.4}, scale_ratio {:.3} +- {:.3}",
        m.abs_rel, m.abs_rel_norm, m.scale_ratio_mean, m.scale_ratio_std
    );
    Ok(())
}
