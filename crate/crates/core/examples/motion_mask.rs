//! Flags moving vehicles on a synthetic frame by comparing road-normalized
//! self-supervised and supervised depth.
//!
//! Run with `cargo run --example motion_mask`.

use depthscale::depth_io::InstanceClass;
use depthscale::local_motion::{motion_mask_for_frame, MotionMaskConfig};
use depthscale::synth::{generate_domain, Domain, TwoDomainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = TwoDomainConfig::kitti_to_ddad(0.25, 21)?;
    config.images_per_domain = 3;
    config.moving_fraction = 0.5;
    for (i, frame) in generate_domain(&config, Domain::Target)?.iter().enumerate() {
        let instances = frame.view.instance_mask(&frame.scene)?;
        let result = motion_mask_for_frame(
            &frame.supervised,
            &frame.prediction.prediction,
            &frame.view.road_mask(),
            &instances,
            &MotionMaskConfig::default(),
        )?;
        let Ok(mask) = result else {
            println!("frame {i}: skipped, too little road");
            continue;
        };
        for v in mask.verdicts.iter().filter(|v| v.class == InstanceClass::Vehicle) {
            let truth = frame.scene.boxes[(v.instance_id - 2) as usize].moving;
            println!(
                "frame {i} instance {}: {:.1}% of pixels exceed the cutoff -> {} (moving: {truth})",
                v.instance_id,
                v.exceeding_percent.unwrap_or(0.0),
                v.verdict.as_str()
            );
        }
    }
    Ok(())
}
