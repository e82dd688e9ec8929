//! Mirrored-Rician fit of a skewed coherence histogram, comparing the
//! integration-based moments with the raw sample moments.
//!
//! cargo run --example rician_histogram

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transmon_lab::fitters::{self, rician_moments, RicianFitMode, RicianParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = RicianParams::new(25e-6, 12e-6, 110e-6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = fitters::sample_mirrored_rician(&truth, 3000, &mut rng);
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();

    for mode in [RicianFitMode::MaximumLikelihood, RicianFitMode::Histogram] {
        let fit = fitters::fit_rician_mirrored(&samples, mode)?;
        let (m, s) = rician_moments(&fit.params);
        println!(
            "{mode:?}: nu {:.2} us, sigma {:.2} us, T_max {:.2} us -> mean {:.2} us, std {:.2} us",
            fit.params.nu * 1e6,
            fit.params.sigma * 1e6,
            fit.params.t_max * 1e6,
            m * 1e6,
            s * 1e6
        );
    }
    let (m, s) = rician_moments(&truth);
    println!("truth: mean {:.2} us, std {:.2} us; sample: mean {:.2} us, std {:.2} us", m * 1e6, s * 1e6, mean * 1e6, std * 1e6);
    Ok(())
}
