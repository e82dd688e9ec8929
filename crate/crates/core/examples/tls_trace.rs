//! Simulate a day of TLS-limited T1 and its coupled T2* trace, then print
//! a coarse summary.
//!
//! cargo run --example tls_trace

use transmon_lab::tlssim::{self, EnsembleConfig, InjectedCrossing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EnsembleConfig {
        crossings: vec![InjectedCrossing { start_s: 30_000.0, end_s: 33_600.0, coupling_hz: 2e5, linewidth_hz: 2e5 }],
        ..Default::default()
    };
    let ens = tlssim::sample_ensemble(&cfg, 7)?;
    let t1 = tlssim::simulate_t1_trace(&ens, 86_400.0, 60.0, 7)?;
    let t2 = tlssim::coupled_t2star_trace(&t1, 100e-6)?;

    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    let (m1, s1) = stats(t1.values());
    let (m2, s2) = stats(t2.values());
    println!("{} samples over {:.1} h, {} defects", t1.len(), t1.span() / 3600.0, ens.n_tls);
    println!("T1  mean {:.1} us  std {:.1} us  skew {:+.2}", m1 * 1e6, s1 * 1e6, tlssim::skewness(t1.values()));
    println!("T2* mean {:.1} us  std {:.1} us", m2 * 1e6, s2 * 1e6);

    // one line per hour
    for (t, v) in t1.timestamps().iter().zip(t1.values()).step_by(60) {
        let bar = "#".repeat((v * 1e6 / 2.0).round() as usize);
        println!("{:5.1} h {:6.1} {bar}", t / 3600.0, v * 1e6);
    }
    Ok(())
}
