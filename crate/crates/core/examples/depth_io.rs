//! Writes depth as PFM and 16-bit PNG, reads both back and loads a manifest.
//!
//! Run with `cargo run --example depth_io [dir]`.

use std::path::PathBuf;

use depthscale::camera_geometry::CameraIntrinsics;
use depthscale::depth_io::{
    load_manifest, read_depth_pfm, read_depth_png16, write_depth_pfm, write_depth_png16, write_rgb, DatasetManifest,
    DepthKind, DepthMap, ManifestEntry, DEFAULT_PNG_DEPTH_DIVISOR,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("depthscale-io"));
    std::fs::create_dir_all(&dir)?;

    let values = vec![1.5, 2.25, 0.0, 80.1234, 13.0, 7.77];
    let depth = DepthMap::from_values(3, 2, values, DepthKind::GroundTruth)?;
    write_depth_pfm(&depth, dir.join("gt.pfm"))?;
    write_depth_png16(&depth, dir.join("gt.png"), DEFAULT_PNG_DEPTH_DIVISOR)?;
    let pfm = read_depth_pfm(dir.join("gt.pfm"), DepthKind::GroundTruth)?;
    let png = read_depth_png16(dir.join("gt.png"), DEFAULT_PNG_DEPTH_DIVISOR, DepthKind::GroundTruth)?;
    println!("original {:?}", depth.values());
    println!("pfm      {:?}", pfm.values());
    println!("png16    {:?}", png.values());

    let k = CameraIntrinsics::centered(2.0, 3, 2)?;
    let mut manifest = DatasetManifest::new("demo", k, &dir);
    write_rgb(&image::RgbImage::new(3, 2), dir.join("rgb.png"))?;
    let mut entry = ManifestEntry::new("rgb.png");
    entry.gt_depth = Some("gt.png".into());
    manifest.entries.push(entry);
    manifest.write(dir.join("manifest.tsv"))?;
    print!("{}", std::fs::read_to_string(dir.join("manifest.tsv"))?);
    let loaded = load_manifest(dir.join("manifest.tsv"))?;
    println!("loaded split {:?} with {} record(s)", loaded.split_name, loaded.entries.len());
    Ok(())
}
