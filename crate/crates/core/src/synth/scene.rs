use std::collections::BTreeMap;

use image::{Rgb, RgbImage};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera_geometry::CameraIntrinsics;
use crate::depth_io::{DepthKind, DepthMap, InstanceClass, InstanceMask};
use crate::error::{Error, Result};

pub const SKY_SURFACE: u32 = 0;
pub const GROUND_SURFACE: u32 = 1;
/// Instance id of road pixels in rendered instance masks. Box `k` gets `k + 2`.
pub const ROAD_INSTANCE_ID: u16 = 1;

/// Axis-aligned box in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub class: InstanceClass,
    /// Whether the object moves independently of the camera.
    pub moving: bool,
}

impl SceneBox {
    /// Box resting on the road at lateral offset `x` and forward distance `z`.
    pub fn on_ground(camera_height: f64, x: f64, z: f64, size: [f64; 3], class: InstanceClass) -> Self {
        Self {
            center: [x, camera_height - size[1] / 2.0, z],
            size,
            class,
            moving: false,
        }
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let lo = std::array::from_fn(|k| self.center[k] - self.size[k] / 2.0);
        let hi = std::array::from_fn(|k| self.center[k] + self.size[k] / 2.0);
        (lo, hi)
    }

    fn contains_origin(&self) -> bool {
        let (lo, hi) = self.bounds();
        (0..3).all(|k| lo[k] <= 0.0 && hi[k] >= 0.0)
    }

    // Ray parameter and face (2 * axis + side) of the first hit for a ray
    // from the origin, if in front.
    fn intersect(&self, dir: [f64; 3]) -> Option<(f64, u8)> {
        let (lo, hi) = self.bounds();
        let mut t_near = f64::NEG_INFINITY;
        let mut face = 0;
        let mut t_far = f64::INFINITY;
        for k in 0..3 {
            if dir[k].abs() < 1e-15 {
                if lo[k] > 0.0 || hi[k] < 0.0 {
                    return None;
                }
                continue;
            }
            let (a, b) = (lo[k] / dir[k], hi[k] / dir[k]);
            if a.min(b) > t_near {
                t_near = a.min(b);
                face = 2 * k as u8 + u8::from(dir[k] < 0.0);
            }
            t_far = t_far.min(a.max(b));
        }
        (t_near <= t_far && t_near > 0.0).then_some((t_near, face))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    /// Height of the camera above the road, meters.
    pub camera_height: f64,
    /// Downward tilt of the optical axis, radians.
    pub pitch: f64,
    pub boxes: Vec<SceneBox>,
}

impl SyntheticScene {
    pub fn new(camera_height: f64) -> Self {
        Self {
            camera_height,
            pitch: 0.0,
            boxes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.camera_height.is_finite() && self.camera_height > 0.0) {
            return Err(Error::validation(format!(
                "camera height {} m must be positive",
                self.camera_height
            )));
        }
        if self.pitch.is_nan() || self.pitch.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::validation(format!("pitch {} rad out of range", self.pitch)));
        }
        for (k, b) in self.boxes.iter().enumerate() {
            if b.size.iter().any(|&s| !(s.is_finite() && s > 0.0)) || b.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::validation(format!("box {k} has a degenerate size or center")));
            }
            if b.contains_origin() {
                return Err(Error::validation(format!("box {k} contains the camera")));
            }
        }
        Ok(())
    }

    // Camera-frame direction to world frame.
    fn to_world(&self, d: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.pitch.sin_cos();
        [d[0], d[1] * c + d[2] * s, -d[1] * s + d[2] * c]
    }

    /// Z-depth and surface id along the camera ray `(x, y, 1)`.
    ///
    /// Because the ray has unit forward component the hit parameter is the
    /// z-depth directly.
    pub fn trace(&self, ray: [f64; 3]) -> Option<(f64, u32)> {
        self.trace_face(ray).map(|(t, s, _)| (t, s))
    }

    // Like `trace`, plus the face index of box hits (0 for the road).
    fn trace_face(&self, ray: [f64; 3]) -> Option<(f64, u32, u8)> {
        let d = self.to_world(ray);
        let mut best: Option<(f64, u32, u8)> = None;
        if d[1] > 1e-12 {
            best = Some((self.camera_height / d[1], GROUND_SURFACE, 0));
        }
        for (k, b) in self.boxes.iter().enumerate() {
            if let Some((t, face)) = b.intersect(d) {
                if best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, k as u32 + 2, face));
                }
            }
        }
        best
    }
}

/// Depth, surface ids and derived rasters of a scene seen by one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub intrinsics: CameraIntrinsics,
    pub depth: DepthMap,
    /// [`SKY_SURFACE`], [`GROUND_SURFACE`], or `k + 2` for box `k`.
    pub surfaces: Vec<u32>,
    /// Box face hit by each pixel; creases between faces are depth-gradient
    /// discontinuities.
    pub faces: Vec<u8>,
    // World-space hit points, used for texturing.
    hits: Vec<[f64; 3]>,
}

impl RenderedView {
    pub fn road_mask(&self) -> Vec<bool> {
        self.surfaces.iter().map(|&s| s == GROUND_SURFACE).collect()
    }

    pub fn instance_mask(&self, scene: &SyntheticScene) -> Result<InstanceMask> {
        let labels: Vec<u16> = self
            .surfaces
            .iter()
            .map(|&s| match s {
                SKY_SURFACE => 0,
                GROUND_SURFACE => ROAD_INSTANCE_ID,
                k => u16::try_from(k).unwrap_or(u16::MAX),
            })
            .collect();
        let mut classes = BTreeMap::new();
        for &id in &labels {
            if id == 0 || classes.contains_key(&id) {
                continue;
            }
            let class = if id == ROAD_INSTANCE_ID {
                InstanceClass::Road
            } else {
                scene.boxes[usize::from(id) - 2].class
            };
            classes.insert(id, class);
        }
        InstanceMask::new(self.intrinsics.width, self.intrinsics.height, labels, classes)
    }

    /// Flat-shaded frame: checkered road, one tint per box, plain sky.
    pub fn rgb(&self) -> RgbImage {
        let w = self.intrinsics.width;
        RgbImage::from_fn(w, self.intrinsics.height, |col, row| {
            let i = row as usize * w as usize + col as usize;
            let p = self.hits[i];
            match self.surfaces[i] {
                SKY_SURFACE => Rgb([140, 185, 235]),
                GROUND_SURFACE => {
                    let check = ((p[0] / 2.0).floor() + (p[2] / 2.0).floor()) as i64;
                    if check.rem_euclid(2) == 0 {
                        Rgb([96, 96, 100])
                    } else {
                        Rgb([120, 120, 124])
                    }
                }
                k => {
                    let shade = (1.0 - (self.depth.values()[i] / 120.0).min(0.6)) as f32;
                    let base = [(k * 67 % 200 + 40) as f32, (k * 131 % 200 + 40) as f32, (k * 29 % 200 + 40) as f32];
                    Rgb(base.map(|c| (c * shade) as u8))
                }
            }
        })
    }
}

type PixelHit = (f64, u32, u8, [f64; 3]);

/// Renders z-depth, surface ids and hit points by exact ray casting through
/// pixel centers. Sky pixels are invalid.
pub fn render(scene: &SyntheticScene, intrinsics: &CameraIntrinsics) -> Result<RenderedView> {
    scene.validate()?;
    intrinsics.validate()?;
    let (w, h) = (intrinsics.width as usize, intrinsics.height as usize);
    // (z-depth, surface id, face, hit point) per pixel.
    let rows: Vec<Vec<PixelHit>> = (0..h)
        .into_par_iter()
        .map(|row| {
            (0..w)
                .map(|col| {
                    let ray = intrinsics.unproject(col as f64 + 0.5, row as f64 + 0.5);
                    match scene.trace_face(ray) {
                        Some((t, s, face)) => {
                            let d = scene.to_world(ray);
                            (t, s, face, d.map(|c| c * t))
                        }
                        None => (0.0, SKY_SURFACE, 0, [0.0; 3]),
                    }
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(w * h);
    let mut surfaces = Vec::with_capacity(w * h);
    let mut faces = Vec::with_capacity(w * h);
    let mut hits = Vec::with_capacity(w * h);
    for (t, s, face, p) in rows.into_iter().flatten() {
        values.push(t);
        surfaces.push(s);
        faces.push(face);
        hits.push(p);
    }
    let depth = DepthMap::from_values(intrinsics.width, intrinsics.height, values, DepthKind::GroundTruth)?;
    Ok(RenderedView {
        intrinsics: *intrinsics,
        depth,
        surfaces,
        faces,
        hits,
    })
}

pub fn render_depth(scene: &SyntheticScene, intrinsics: &CameraIntrinsics) -> Result<DepthMap> {
    Ok(render(scene, intrinsics)?.depth)
}

/// Ranges for [`random_scene`], meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub vehicles: (usize, usize),
    pub vehicle_lateral: f64,
    pub vehicle_distance: (f64, f64),
    pub buildings_per_side: usize,
    pub max_pitch: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            vehicles: (2, 6),
            vehicle_lateral: 7.0,
            vehicle_distance: (6.0, 45.0),
            buildings_per_side: 2,
            max_pitch: 0.0,
        }
    }
}

/// Street scene: road, parked or driving cars and buildings on both sides.
pub fn random_scene<R: Rng + ?Sized>(rng: &mut R, camera_height: f64, config: &SceneConfig) -> SyntheticScene {
    let mut scene = SyntheticScene::new(camera_height);
    if config.max_pitch > 0.0 {
        scene.pitch = rng.gen_range(-config.max_pitch..=config.max_pitch);
    }
    let n = rng.gen_range(config.vehicles.0..=config.vehicles.1.max(config.vehicles.0));
    for _ in 0..n {
        let size = [
            1.8 * rng.gen_range(0.9..1.1),
            1.5 * rng.gen_range(0.9..1.2),
            4.3 * rng.gen_range(0.9..1.1),
        ];
        let x = rng.gen_range(-config.vehicle_lateral..=config.vehicle_lateral);
        let z = rng.gen_range(config.vehicle_distance.0..=config.vehicle_distance.1);
        scene
            .boxes
            .push(SceneBox::on_ground(camera_height, x, z, size, InstanceClass::Vehicle));
    }
    for side in [-1.0, 1.0] {
        for _ in 0..config.buildings_per_side {
            let size = [rng.gen_range(4.0..8.0), rng.gen_range(5.0..14.0), rng.gen_range(8.0..20.0)];
            let x = side * (config.vehicle_lateral + 3.0 + size[0] / 2.0 + rng.gen_range(0.0..4.0));
            let z = rng.gen_range(8.0..70.0);
            scene
                .boxes
                .push(SceneBox::on_ground(camera_height, x, z, size, InstanceClass::Other));
        }
    }
    scene
}
