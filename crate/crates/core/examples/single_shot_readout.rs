//! Single-shot readout: QDA discrimination, fidelity and effective
//! temperature for a sweep of thermal populations.
//!
//! cargo run --example single_shot_readout

use transmon_lab::domain::reference_devices;
use transmon_lab::expsim::{self, ExperimentNoiseConfig};
use transmon_lab::readout;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let design = reference_devices(1.2).into_iter().find(|d| d.label() == "B.1").ok_or("no B.1")?;
    println!("{}  f_q = {:.4} GHz", design.label(), design.f_q * 1e-9);
    println!("{:>6} {:>8} {:>8} {:>8} {:>9}", "p_th", "P(1|0)", "F", "dm", "T_eff mK");
    for p in [0.0, 0.01, 0.02, 0.05, 0.1] {
        let noise = ExperimentNoiseConfig { thermal_excitation_p: p, decay_during_readout_p: 0.02, ..Default::default() };
        let shots = expsim::simulate_single_shot(&design, 5.0, &noise, 2)?;
        let model = readout::fit_discriminator(&shots)?;
        let m = readout::compute_metrics(&shots, &model, design.f_q);
        println!(
            "{:>6.2} {:>8.4} {:>8.4} {:>8.3} {:>9.1} {:?}",
            p,
            m.confusion[0][1],
            m.fidelity,
            m.delta_m,
            m.t_eff_mk(),
            m.t_eff_status
        );
    }
    Ok(())
}
