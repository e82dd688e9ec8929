//! Closed-loop check of σ_T1 = a·⟨T1⟩^{3/2}: simulate a family of qubits
//! and fit the prefactor and a free exponent.
//!
//! cargo run --release --example scaling_law

use transmon_lab::stability::{self, UnitSystem};
use transmon_lab::tlssim::{self, ScalingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a_true = 1.22e-2;
    let cfg = ScalingConfig::calibrated(a_true);
    let points = tlssim::scaling_experiment(8, (10e-6, 500e-6), &cfg, 1)?;
    println!("{:>6} {:>10} {:>10} {:>8}", "qubit", "<T1> us", "std us", "samples");
    for p in &points {
        println!("{:>6} {:>10.2} {:>10.3} {:>8}", p.label, p.mean_t1 * 1e6, p.std_t1 * 1e6, p.n_samples);
    }
    let fit = stability::fit_scaling_law(&points, false)?;
    let (a, se) = fit.a_in(UnitSystem::Lab);
    println!("a = ({:.3} ± {:.3})e-2 {} (generated at {:.3}e-2)", a * 1e2, se * 1e2, UnitSystem::Lab.a_unit(), a_true * 1e2);
    println!("free exponent {:.3} ± {:.3}", fit.exponent, fit.exponent_stderr);
    Ok(())
}
