use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::scene::{random_scene, render, RenderedView, SceneConfig, SyntheticScene};
use super::simulate::{add_motion_artifacts, simulate_up_to_scale, SimulatedPrediction, UpToScaleParams};
use crate::camera_geometry::CameraIntrinsics;
use crate::depth_io::{DepthKind, DepthMap, InstanceClass};
use crate::error::{Error, Result};
use crate::presets::{DatasetPreset, DDAD_FRONT, KITTI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

/// Two camera domains sharing one depth scale, as after FOV alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDomainConfig {
    pub source: CameraIntrinsics,
    /// Meters above the road.
    pub source_camera_height: f64,
    pub target: CameraIntrinsics,
    pub target_camera_height: f64,
    pub images_per_domain: usize,
    pub prediction: UpToScaleParams,
    pub scene: SceneConfig,
    /// Probability that a vehicle moves with the ego car.
    pub moving_fraction: f64,
    /// Factor applied to self-supervised depth of moving vehicles.
    pub moving_depth_factor: f64,
    pub seed: u64,
}

impl TwoDomainConfig {
    /// KITTI-like source and DDAD-front-like target at `resolution_factor`
    /// times their network input sizes.
    pub fn kitti_to_ddad(resolution_factor: f64, seed: u64) -> Result<Self> {
        Self::from_presets(&KITTI, &DDAD_FRONT, resolution_factor, seed)
    }

    /// Cameras and heights of two dataset presets with the default
    /// simulation: 50 images per domain, G = 100, jitter 0.05, 10% outliers,
    /// noise 0.1 and no moving vehicles.
    pub fn from_presets(
        source: &DatasetPreset,
        target: &DatasetPreset,
        resolution_factor: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            source: source.scaled_intrinsics(resolution_factor)?,
            source_camera_height: source.camera_height,
            target: target.scaled_intrinsics(resolution_factor)?,
            target_camera_height: target.camera_height,
            images_per_domain: 50,
            prediction: UpToScaleParams {
                global_scale: 100.0,
                jitter_std: 0.05,
                outlier_fraction: 0.1,
                noise_std: 0.1,
            },
            scene: SceneConfig::default(),
            moving_fraction: 0.0,
            moving_depth_factor: 3.0,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.target.validate()?;
        self.prediction.validate()?;
        if self.images_per_domain == 0 {
            return Err(Error::validation("at least one image per domain is required"));
        }
        if !(0.0..=1.0).contains(&self.moving_fraction) {
            return Err(Error::validation("moving fraction must be in [0, 1]"));
        }
        if !(self.moving_depth_factor.is_finite() && self.moving_depth_factor > 0.0) {
            return Err(Error::validation("moving depth factor must be positive"));
        }
        for h in [self.source_camera_height, self.target_camera_height] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::validation(format!("camera height {h} m must be positive")));
            }
        }
        Ok(())
    }

    pub fn camera(&self, domain: Domain) -> (CameraIntrinsics, f64) {
        match domain {
            Domain::Source => (self.source, self.source_camera_height),
            Domain::Target => (self.target, self.target_camera_height),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub scene: SyntheticScene,
    pub view: RenderedView,
    /// Up-to-scale self-supervised output, moving-vehicle artifacts included.
    pub prediction: SimulatedPrediction,
    /// Metric output of a supervised network: exact depth, sky filled far.
    pub supervised: DepthMap,
}

/// Renders and simulates every frame of one domain. Frame `i` depends only
/// on the seed, the domain and `i`.
pub fn generate_domain(config: &TwoDomainConfig, domain: Domain) -> Result<Vec<SyntheticFrame>> {
    config.validate()?;
    let (camera, height) = config.camera(domain);
    let tag = domain as u64;
    (0..config.images_per_domain)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[tag, i as u64, 0]));
            let mut scene = random_scene(&mut rng, height, &config.scene);
            for b in scene.boxes.iter_mut().filter(|b| b.class == InstanceClass::Vehicle) {
                b.moving = config.moving_fraction > 0.0 && rng.gen_bool(config.moving_fraction);
            }
            let view = render(&scene, &camera)?;
            let mut prediction =
                simulate_up_to_scale(&view.depth, &config.prediction, derive_seed(config.seed, &[tag, i as u64, 1]))?;
            let moving: Vec<bool> = view
                .surfaces
                .iter()
                .map(|&s| s >= 2 && scene.boxes[(s - 2) as usize].moving)
                .collect();
            if moving.iter().any(|&m| m) {
                prediction.prediction = add_motion_artifacts(&prediction.prediction, &moving, config.moving_depth_factor)?;
            }
            let supervised = simulate_up_to_scale(
                &view.depth,
                &UpToScaleParams {
                    global_scale: 1.0,
                    ..UpToScaleParams::default()
                },
                0,
            )?
            .prediction
            .with_kind(DepthKind::AbsolutePrediction);
            Ok(SyntheticFrame {
                scene,
                view,
                prediction,
                supervised,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TwoDomainConfig {
        let mut c = TwoDomainConfig::kitti_to_ddad(0.1, 11).unwrap();
        c.images_per_domain = 3;
        c
    }

    #[test]
    fn frames_are_deterministic_and_sized() {
        let c = small();
        let a = generate_domain(&c, Domain::Target).unwrap();
        let b = generate_domain(&c, Domain::Target).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.prediction, y.prediction);
            assert_eq!(x.view.depth.width(), c.target.width);
        }
    }

    #[test]
    fn moving_vehicles_are_exaggerated() {
        let mut c = small();
        c.moving_fraction = 1.0;
        c.prediction = UpToScaleParams::default();
        let frames = generate_domain(&c, Domain::Source).unwrap();
        let f = &frames[0];
        let i = (0..f.view.surfaces.len())
            .find(|&i| f.view.surfaces[i] >= 2 && f.scene.boxes[(f.view.surfaces[i] - 2) as usize].moving)
            .expect("a moving vehicle is visible");
        let ratio = f.prediction.prediction.values()[i] * 100.0 / f.view.depth.values()[i];
        assert!((ratio - 3.0).abs() < 1e-12);
    }
}
