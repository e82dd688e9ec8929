//! Cross-cooldown aging: junction resistance drift from qubit frequency
//! shifts, and the split of the resonator shift into dispersive pull and
//! bare drift.
//!
//! cargo run --example junction_aging

use transmon_lab::aging::{self, ResonatorModel};
use transmon_lab::domain::{reference_devices, CooldownRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = reference_devices(1.2).into_iter().next().ok_or("empty table")?;
    let e_c = d.charging_energy();
    let records: Vec<CooldownRecord> = [(0.0, 0.0, 0.0), (95.0, -22e6, -0.4e6), (240.0, -45e6, -0.9e6), (410.0, -61e6, -1.3e6)]
        .iter()
        .enumerate()
        .map(|(k, &(days, dfq, dfr))| CooldownRecord {
            index: k as u32,
            elapsed_days: days,
            f_q: Some(d.f_q + dfq),
            f_r: Some(d.f_r + dfr),
            mean_t1: Some(50e-6 + 4e-6 * k as f64),
        })
        .collect();

    let report = aging::cooldown_report(&records, e_c, d.gap_delta)?;
    let r0 = aging::rn_from_fq(d.f_q, e_c, d.gap_delta);
    println!("{}: R_N {:.1} Ohm, E_J/E_C = {:.1}", d.label(), r0, aging::JunctionState::from_resistance(r0, e_c, d.gap_delta)?.ej_ec_ratio());
    let opt = |v: Option<f64>, scale: f64| v.map_or("     n/a".to_string(), |x| format!("{:>8.3}", x * scale));
    for r in &report.rows {
        println!(
            "cooldown {} day {:>5.0}: df_q {} MHz  R_N {} Ohm  dR_N/R_N {} %",
            r.index,
            r.elapsed_days,
            opt(r.delta_fq, 1e-6),
            opt(r.r_n, 1.0),
            opt(r.delta_rn_rel, 100.0)
        );
    }

    let model = ResonatorModel::from_geometry(4.5e-3, 6.45, 0.0)?;
    let split = aging::decompose_fr_shift(&records, &model, e_c, d.gap_delta)?;
    println!("bare f_r {:.4} GHz, back-solved g {:.1} MHz", split.f_r_bare * 1e-9, split.g_ref * 1e-6);
    for s in &split.splits {
        println!(
            "cooldown {}: df_r {:>7.1} kHz = pull {:>7.1} + bare {:>7.1}  (pull share {:.2})",
            s.index,
            s.delta_fr * 1e-3,
            s.pulling * 1e-3,
            s.bare * 1e-3,
            s.pulling_share.unwrap_or(f64::NAN)
        );
    }
    for note in split.notes.iter().chain(&report.notes) {
        println!("note: {note}");
    }
    Ok(())
}
