//! Stability analysis of a simulated T1/T2* pair: Rician summaries,
//! one-sigma dropouts and their coincidence.
//!
//! cargo run --release --example stability_report

use std::collections::BTreeMap;

use transmon_lab::stability;
use transmon_lab::tlssim::{self, EnsembleConfig, InjectedCrossing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let crossing = |h: f64| InjectedCrossing { start_s: h * 3600.0, end_s: (h + 1.0) * 3600.0, coupling_hz: 2e5, linewidth_hz: 2e5 };
    let cfg = EnsembleConfig {
        n_tls: 5,
        g_range_hz: [1e3, 3e3],
        crossings: vec![crossing(4.0), crossing(13.0), crossing(20.0)],
        ..Default::default()
    };
    let ens = tlssim::sample_ensemble(&cfg, 9)?;
    let t1 = tlssim::simulate_t1_trace(&ens, 86_400.0, 60.0, 9)?;
    let t2 = tlssim::coupled_t2star_trace(&t1, 80e-6)?;

    let mut traces = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for (name, trace) in [("T1", t1), ("T2*", t2)] {
        let s = stability::distribution_summary(trace.values())?;
        let rep = stability::detect_dropouts(&trace, (s.mean, s.std));
        println!(
            "{name:>3}: mean {:.2} us, std {:.2} us, skew {:+.2}; threshold {:.2} us, {} dropouts ({:.1}% of samples)",
            s.mean * 1e6,
            s.std * 1e6,
            s.skewness,
            rep.threshold * 1e6,
            rep.intervals.len(),
            100.0 * rep.affected_fraction
        );
        for (a, b) in &rep.intervals {
            println!("       {:.2} h .. {:.2} h", a / 3600.0, b / 3600.0);
        }
        traces.insert(name.to_string(), trace);
        reports.insert(name.to_string(), rep);
    }
    for p in stability::coincidence_report(&traces, &reports, 0.5) {
        println!("{} -> {}: overlap {:.2}{}", p.from, p.to, p.overlap, if p.coincident { " (coincident)" } else { "" });
    }
    Ok(())
}
