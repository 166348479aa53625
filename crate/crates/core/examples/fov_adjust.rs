//! Plans a FOV adjustment from a KITTI-sized camera to a DDAD-front-sized
//! one and checks it against direct renders of a synthetic street.
//!
//! Run with `cargo run --example fov_adjust`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use depthscale::camera_geometry::{compute_fov, plan_adjustment, AdjustMode, Axis};
use depthscale::presets::{DDAD_FRONT, KITTI};
use depthscale::synth::{adjustment_consistency, random_scene, ConsistencyOptions, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = KITTI.scaled_intrinsics(0.25)?;
    let target = DDAD_FRONT.scaled_intrinsics(0.25)?;
    for (name, k) in [("source", &source), ("target", &target)] {
        println!(
            "{name}: {}x{} px, f = {:.1} px, FOV {:.1} x {:.1} deg",
            k.width,
            k.height,
            k.focal_x,
            compute_fov(k, Axis::Horizontal)?,
            compute_fov(k, Axis::Vertical)?
        );
    }

    let plan = plan_adjustment(AdjustMode::Fov, &source, &target)?;
    println!(
        "window {:.1} x {:.1} source px at ({:.1}, {:.1}), padding: {}",
        plan.window_width,
        plan.window_height,
        plan.window_left,
        plan.window_top,
        plan.needs_padding()
    );

    let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(3), KITTI.camera_height, &SceneConfig::default());
    for mode in [AdjustMode::Fov, AdjustMode::NaiveCenterCrop, AdjustMode::NaiveResizeCrop] {
        let r = adjustment_consistency(&scene, &source, &target, mode, &ConsistencyOptions::default())?;
        println!(
            "{mode:?}: max depth discrepancy {:.2}% over {} pixels",
            100.0 * r.max_relative_discrepancy,
            r.compared_pixels
        );
    }
    Ok(())
}
