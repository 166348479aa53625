//! Robust global scale from contaminated samples, with both Theil-Sen
//! variants and the AbsRel_norm image filter.
//!
//! Run with `cargo run --example fit_scale`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use depthscale::scale_regression::{
    filter_by_absrel_norm, fit_global_scale, fit_per_image_scales, FitMethod, FitOptions, ScaleSample,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // 20 images with true slope 80, 5% per-image jitter and 25% outliers.
    let mut samples = Vec::new();
    for image in 0..20 {
        let slope = 80.0 * (1.0 + rng.gen_range(-0.05..0.05));
        for _ in 0..300 {
            let x: f64 = rng.gen_range(0.02..0.8);
            let y = if rng.gen_bool(0.25) { rng.gen_range(1.0..80.0) } else { slope * x };
            samples.push(ScaleSample::new(x, y, image));
        }
    }

    for method in [FitMethod::TheilSenThroughOrigin, FitMethod::TheilSenPairwise] {
        let opts = FitOptions {
            method,
            ..FitOptions::default()
        };
        let fit = fit_per_image_scales(&samples, &opts)?;
        println!("{method:?}: G = {:.3} from {} samples", fit.slope, fit.n_samples);
        if let Some(per_image) = &fit.per_image {
            println!("  per-image slopes {:.2} +- {:.2}", per_image.mean, per_image.std_dev);
        }
    }

    let filtered = filter_by_absrel_norm(&samples, 0.15)?;
    let fit = fit_global_scale(&filtered.samples, &FitOptions::default())?;
    println!(
        "after AbsRel_norm < 0.15 filter: {} of 20 images kept, G = {:.3}",
        20 - filtered.dropped_images.len(),
        fit.slope
    );
    Ok(())
}
