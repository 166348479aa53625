//! Reading and writing depth maps, RGB frames, masks and dataset manifests.
//!
//! Invalid pixels are always tracked by a boolean mask, whatever sentinel the
//! file format uses (0 for 16-bit PNG, non-finite for PFM). 16-bit PNG depth
//! is quantized to `1 / divisor` meters.

mod depth_map;
mod instance;
mod manifest;
mod pfm;
mod png;

pub use depth_map::{DepthKind, DepthMap};
pub use instance::{classes_sidecar, read_instance_mask, write_instance_mask, InstanceClass, InstanceMask};
pub use manifest::{
    load_manifest, parse_manifest, read_depth, write_depth, DatasetManifest, ManifestEntry,
    DEFAULT_DEPTH_CAP, MANIFEST_FILE_NAME, MANIFEST_HEADER,
};
pub use pfm::{read_depth_pfm, write_depth_pfm};
pub use png::{
    read_binary_mask, read_depth_png16, read_labels, read_rgb, write_binary_mask, write_depth_png16,
    write_labels, write_rgb, DEFAULT_PNG_DEPTH_DIVISOR,
};
