//! Ramsey with a virtual-Z detuning: the drive sits 3 kHz above the qubit,
//! the fit recovers the fringe and the drive is recalibrated.
//!
//! cargo run --example ramsey_calibration

use transmon_lab::expsim::{self, ExperimentNoiseConfig};
use transmon_lab::fitters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = expsim::ramsey_protocol("A.2").ok_or("unknown protocol")?;
    let f_q = 4.4557e9;
    let f_drive = f_q + 3e3;
    let curve = expsim::simulate_ramsey_curve(
        f_drive - f_q,
        p.mean_t2star,
        p.set_detuning,
        p.t_max,
        &p.grid(),
        &ExperimentNoiseConfig::default(),
        11,
    )?;
    let fit = fitters::fit_damped_cosine(&curve)?;
    let f_r = fit.params["f_ramsey"];
    println!("{}: {} delays over {:.0} us, set detuning {:.0} kHz", p.label, curve.len(), p.t_max * 1e6, p.set_detuning * 1e-3);
    println!("f_Ramsey = {:.1} Hz, T2* = {:.2} us, flags {:?}", f_r, fit.params["t2star"] * 1e6, fit.flags);
    let cal = fitters::resolve_drive_calibration(f_drive, f_r, p.set_detuning);
    println!("calibrated drive {:.1} Hz (qubit {:.1} Hz, residual {:+.1} Hz)", cal, f_q, cal - f_q);
    Ok(())
}
