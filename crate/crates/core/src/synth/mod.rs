//! Analytic pinhole scenes with exact depth, used as an oracle for the FOV
//! adjustment and the scale-transfer pipeline.
//!
//! A scene is a flat road below the camera plus axis-aligned boxes standing
//! on it. World coordinates share the camera origin with `x` right, `y` down
//! and `z` forward before pitch; the road is the plane `y = camera_height`.

mod consistency;
mod domains;
mod scene;
mod simulate;

pub use consistency::{adjustment_consistency, fov_consistency_check, ConsistencyOptions, ConsistencyReport};
pub use domains::{generate_domain, Domain, SyntheticFrame, TwoDomainConfig};
pub use scene::{
    random_scene, render, render_depth, RenderedView, SceneBox, SceneConfig, SyntheticScene, ROAD_INSTANCE_ID,
    SKY_SURFACE, GROUND_SURFACE,
};
pub use simulate::{add_motion_artifacts, simulate_up_to_scale, SimulatedPrediction, UpToScaleParams};

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
