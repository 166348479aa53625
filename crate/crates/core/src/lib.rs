//! Depth-scale transfer between camera domains.
//!
//! A monocular depth network trained without supervision on a target camera
//! predicts depth only up to scale. This crate recovers metric scale by
//! borrowing it from a source domain that has ground truth:
//!
//! 1. adjust the source imagery so its field of view matches the target
//!    camera ([`camera_geometry`], [`resample`]),
//! 2. fit a single global slope between source ground truth and up-to-scale
//!    predictions ([`scale_regression`]),
//! 3. multiply target predictions by that slope and evaluate them
//!    ([`metrics`]).
//!
//! [`local_motion`] builds masks of moving vehicles for self-supervised
//! training and [`synth`] renders analytic pinhole scenes with exact ground
//! truth. [`pipeline`] chains the stages over manifest files on disk.

pub mod camera_geometry;
pub mod cli;
pub mod depth_io;
mod error;
pub mod local_motion;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod resample;
pub mod scale_regression;
pub mod stats;
pub mod synth;

pub use camera_geometry::{compute_fov, plan_fov_adjustment, Axis, CameraIntrinsics, FovAdjustPlan};
pub use depth_io::{load_manifest, DatasetManifest, DepthKind, DepthMap, InstanceMask};
pub use error::{Error, Result};
pub use metrics::{EvalOptions, MetricsReport};
pub use scale_regression::{fit_global_scale, FitMethod, FitOptions, ScaleFit, ScaleSample};
