//! Energy-relaxation measurement: simulate a 1024-shot decay curve and fit
//! `A·exp(−τ/T1) + B`.
//!
//! cargo run --example decay_fit

use transmon_lab::expsim::{self, ExperimentNoiseConfig};
use transmon_lab::fitters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t1 = 45e-6;
    let grid = expsim::default_decay_grid(t1);
    let noise = ExperimentNoiseConfig { decay_amplitude: 0.93, decay_offset: 0.03, ..Default::default() };
    let curve = expsim::simulate_decay_curve(t1, &grid, &noise, 3)?;
    let fit = fitters::fit_exponential(&curve)?;
    for (name, v) in &fit.params {
        println!("{name:>3} = {v:.6e} ± {:.1e}", fit.stderr.get(name).copied().unwrap_or(f64::NAN));
    }
    println!("T1 off by {:+.2}%, converged {}", 100.0 * (fit.params["t1"] / t1 - 1.0), fit.converged);
    Ok(())
}
