//! Standard depth metrics on a pair of small hand-made maps.
//!
//! Run with `cargo run --example metrics`.

use depthscale::depth_io::{DepthKind, DepthMap};
use depthscale::metrics::{evaluate_detailed, Averaging, EvalOptions, ImagePair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = DepthMap::from_values(3, 2, vec![4.0, 8.0, 12.0, 20.0, 0.0, 95.0], DepthKind::GroundTruth)?;
    let pred = DepthMap::from_values(3, 2, vec![5.0, 7.0, 13.0, 15.0, 3.0, 60.0], DepthKind::AbsolutePrediction)?;
    let half = pred.scaled(0.5, DepthKind::AbsolutePrediction)?;

    for averaging in [Averaging::PerImage, Averaging::Pooled] {
        let opts = EvalOptions {
            averaging,
            ..EvalOptions::default()
        };
        let pairs = [ImagePair::new(&pred, &gt), ImagePair::new(&half, &gt)];
        let (report, images) = evaluate_detailed(&pairs, &opts)?;
        println!(
            "{}: abs_rel {:.4}, abs_rel_norm {:.4}, rmse {:.3} m, delta_1 {:.3}, scale ratio {:.3} +- {:.3}",
            averaging.as_str(),
            report.abs_rel,
            report.abs_rel_norm,
            report.rmse,
            report.delta_1,
            report.scale_ratio_mean,
            report.scale_ratio_std
        );
        for m in images {
            println!("  image {}: {} pixels, abs_rel {:.4}", m.index, m.n_pixels, m.abs_rel);
        }
    }
    Ok(())
}
