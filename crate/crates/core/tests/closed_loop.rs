//! Simulate, analyse, compare with the generating parameters.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use transmon_lab::domain::{reference_devices, FitFlag, IqShot, IqShotSet, ParameterKind, TimeTrace};
use transmon_lab::expsim::{self, ExperimentNoiseConfig};
use transmon_lab::fitters::{self, rician_moments, sample_mirrored_rician, CurveModel, Exponential, RicianParams};
use transmon_lab::readout;
use transmon_lab::stability;
use transmon_lab::tlssim::{self, Dynamics, EnsembleConfig, TlsDefect, TlsEnsemble};

fn mean_var(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, var, m4)
}

/// First and second moments of one defect's rate for log-uniform `g` on
/// `[g0, g1]` and uniform detuning on `[−b, b]`.
fn single_defect_moments(cfg: &EnsembleConfig) -> (f64, f64) {
    let [g0, g1] = cfg.g_range_hz;
    let (b, gamma) = (cfg.delta_band_hz, cfg.gamma_hz);
    let l = (g1 / g0).ln();
    let eg2 = (g1 * g1 - g0 * g0) / (2.0 * l);
    let eg4 = (g1.powi(4) - g0.powi(4)) / (4.0 * l);
    let u = 2.0 * b / gamma;
    let el = u.atan() / (2.0 * b);
    let el2 = (u / (1.0 + u * u) + u.atan()) / (4.0 * b * gamma);
    let mean = 4.0 * eg2 * el;
    (mean, 16.0 * eg4 * el2 - mean * mean)
}

fn ensemble_rates(n_tls: usize, draws: u64) -> (EnsembleConfig, Vec<f64>) {
    let cfg = EnsembleConfig { n_tls, background_rate: 0.0, ..Default::default() };
    let rates = (0..draws).map(|s| tlssim::decay_rate_at(&tlssim::sample_ensemble(&cfg, s).unwrap(), 0.0)).collect();
    (cfg, rates)
}

#[test]
fn ensemble_mean_rate_matches_per_defect_average() {
    let (cfg, rates) = ensemble_rates(1000, 10_000);
    let (m, var, _) = mean_var(&rates);
    let (single, _) = single_defect_moments(&cfg);
    let want = 1000.0 * single;
    let se = (var / rates.len() as f64).sqrt();
    assert!((m - want).abs() < 3.0 * se, "mean {m:.2} vs {want:.2} (se {se:.2})");
}

#[test]
fn ensemble_variance_grows_linearly_in_defect_count() {
    for n in [25, 50, 100, 200] {
        let (cfg, rates) = ensemble_rates(n, 10_000);
        let (_, var, m4) = mean_var(&rates);
        let (_, single_var) = single_defect_moments(&cfg);
        let want = n as f64 * single_var;
        let se = ((m4 - var * var) / rates.len() as f64).sqrt();
        assert!((var - want).abs() < 3.0 * se, "n = {n}: var {var:.4e} vs {want:.4e} (se {se:.3e})");
    }
}

#[test]
fn telegraphic_crossing_produces_a_dropout() {
    let ens = TlsEnsemble {
        defects: vec![TlsDefect {
            coupling: 1e5,
            linewidth: 2e5,
            detuning: 4e6,
            dynamics: Dynamics::Telegraphic,
            rate: 2e-4,
            alt_detuning: 0.0,
            window: None,
        }],
        n_tls: 1,
        background_rate: 1e4,
        band: 5e6,
    };
    let trace = tlssim::simulate_t1_trace(&ens, 24.0 * 3600.0, 60.0, 1).unwrap();
    let (m, var, _) = mean_var(trace.values());
    let rep = stability::detect_dropouts(&trace, (m, var.sqrt()));
    assert!(!rep.intervals.is_empty());
    assert!(rep.sample_ranges.iter().all(|(a, b)| b >= a));
}

#[test]
fn default_traces_are_negatively_skewed() {
    // a defect parked near resonance can flip one trace; the pooled
    // histogram carries the sign
    let mut pooled = Vec::new();
    let mut negative = 0;
    for seed in 0..20 {
        let ens = tlssim::sample_ensemble(&EnsembleConfig::default(), seed).unwrap();
        let trace = tlssim::simulate_t1_trace(&ens, 24.0 * 3600.0, 60.0, seed).unwrap();
        if tlssim::skewness(trace.values()) < 0.0 {
            negative += 1;
        }
        let (m, _, _) = mean_var(trace.values());
        pooled.extend(trace.values().iter().map(|v| v / m));
    }
    let skew = tlssim::skewness(&pooled);
    assert!(skew < 0.0, "pooled skewness {skew}");
    assert!(negative >= 16, "{negative}/20 traces negatively skewed");
}

#[test]
fn scaling_experiment_is_deterministic() {
    let cfg = tlssim::ScalingConfig { samples_per_qubit: 600, ..tlssim::ScalingConfig::calibrated(1.22e-2) };
    let a = tlssim::scaling_experiment(3, (20e-6, 80e-6), &cfg, 5).unwrap();
    let b = tlssim::scaling_experiment(3, (20e-6, 80e-6), &cfg, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn summary_moments_match_generating_distribution() {
    let p = RicianParams::new(20e-6, 10e-6, 100e-6).unwrap();
    let x = sample_mirrored_rician(&p, 5000, &mut ChaCha8Rng::seed_from_u64(3));
    let s = stability::distribution_summary(&x).unwrap();
    let (m, sd) = rician_moments(&p);
    assert!((s.mean / m - 1.0).abs() < 0.02, "{} vs {m}", s.mean);
    assert!((s.std / sd - 1.0).abs() < 0.02, "{} vs {sd}", s.std);
    assert!(s.skewness < 0.0);
}

#[test]
fn gaussian_samples_have_no_skew() {
    let normal = Normal::new(50e-6, 5e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..5000).map(|_| normal.sample(&mut rng)).collect();
    let s = stability::distribution_summary(&x).unwrap();
    assert!(s.skewness.abs() < 0.1, "{}", s.skewness);
    assert!(s.params.nu / s.params.sigma > 2.5, "{:?}", s.params);
    assert!((s.mean / 50e-6 - 1.0).abs() < 0.01);
}

#[test]
fn integration_mean_resists_low_outliers() {
    let p = RicianParams::new(20e-6, 10e-6, 100e-6).unwrap();
    let clean = sample_mirrored_rician(&p, 5000, &mut ChaCha8Rng::seed_from_u64(8));
    let mut dirty = clean.clone();
    dirty.extend(std::iter::repeat_n(2e-6, 50));
    let arith = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let arith_shift = (arith(&dirty) - arith(&clean)).abs();
    let a = stability::distribution_summary(&clean).unwrap().mean;
    let b = stability::distribution_summary(&dirty).unwrap().mean;
    assert!((b - a).abs() < 5.0 * arith_shift, "fit shift {:e}, arithmetic shift {arith_shift:e}", (b - a).abs());
}

fn step_trace(drops: &[(usize, usize)]) -> TimeTrace {
    let v: Vec<f64> = (0..400).map(|k| if drops.iter().any(|&(a, b)| (a..=b).contains(&k)) { 10e-6 } else { 50e-6 }).collect();
    TimeTrace::new(ParameterKind::T1, (0..400).map(|k| 60.0 * k as f64).collect(), v).unwrap()
}

#[test]
fn superset_dropouts_are_one_way_coincident() {
    let t1 = step_trace(&[(50, 70), (200, 220)]);
    let t2 = step_trace(&[(45, 75), (200, 230), (300, 320)]);
    let mut traces = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for (name, tr) in [("t1", t1), ("t2star", t2)] {
        let (m, var, _) = mean_var(tr.values());
        reports.insert(name.to_string(), stability::detect_dropouts(&tr, (m, var.sqrt())));
        traces.insert(name.to_string(), tr);
    }
    let pairs = stability::coincidence_report(&traces, &reports, 0.5);
    let get = |from: &str| pairs.iter().find(|p| p.from == from).unwrap().overlap;
    assert_eq!(get("t1"), 1.0);
    assert!(get("t2star") < 1.0);
}

#[test]
fn frequency_drift_is_tracked() {
    let p = expsim::ramsey_protocol("A.1").unwrap();
    let noise = ExperimentNoiseConfig::default();
    let mut fits = Vec::new();
    for k in 0..16 {
        let offset = 1e3 * k as f64;
        let curve = expsim::simulate_ramsey_curve(offset, p.mean_t2star, p.set_detuning, p.t_max, &p.grid(), &noise, k).unwrap();
        fits.push((3600.0 * k as f64, fitters::fit_damped_cosine(&curve).unwrap()));
    }
    let mut aliased = fits[3].1.clone();
    aliased.flags.push(FitFlag::Aliased);
    fits.push((99_000.0, aliased.clone()));
    fits.push((99_500.0, aliased));
    let series = stability::frequency_drift_series(&fits, p.set_detuning);
    assert_eq!(series.dropped_aliased, 2);
    assert_eq!(series.trace.as_ref().unwrap().len(), 16);
    assert!((series.max_abs_offset - 15e3).abs() < 1e3, "{}", series.max_abs_offset);
}

#[test]
fn fitted_means_are_within_standard_error() {
    let design = &reference_devices(1.2)[2];
    let noise = ExperimentNoiseConfig::default();
    let set = expsim::simulate_single_shot(design, 3.0, &noise, 21).unwrap();
    let model = readout::fit_discriminator(&set).unwrap();
    let n = set.count(0) as f64;
    let tol = 3.0 * noise.iq_blob_sigma / n.sqrt();
    for (k, want) in [[0.0, 0.0], [3.0, 0.0]].into_iter().enumerate() {
        let got = model.classes[k].mean;
        assert!((got[0] - want[0]).abs() < tol && (got[1] - want[1]).abs() < tol, "{got:?}");
    }
}

#[test]
fn shared_covariance_gives_linear_boundary() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base: Vec<(f64, f64)> = (0..2000).map(|_| (normal.sample(&mut rng), 0.5 * normal.sample(&mut rng))).collect();
    let mut shots: Vec<IqShot> = base.iter().map(|&(i, q)| IqShot { i, q, prepared_state: 0 }).collect();
    shots.extend(base.iter().map(|&(i, q)| IqShot { i: i + 2.5, q: q - 1.0, prepared_state: 1 }));
    let model = readout::fit_discriminator(&IqShotSet::new(shots).unwrap()).unwrap();
    let quad = model.quadratic_form();
    assert!(quad.iter().flatten().all(|v| v.abs() < 1e-9), "{quad:?}");
}

#[test]
fn coincident_blobs_read_out_at_chance() {
    let design = &reference_devices(1.2)[0];
    let set = expsim::simulate_single_shot(design, 0.0, &ExperimentNoiseConfig::default(), 6).unwrap();
    let m = readout::compute_metrics(&set, &readout::fit_discriminator(&set).unwrap(), design.f_q);
    assert!((m.fidelity - 0.5).abs() < 0.05, "{}", m.fidelity);
}

#[test]
fn blob_marginals_are_gaussian() {
    let design = &reference_devices(1.2)[0];
    let set = expsim::simulate_single_shot(design, 4.0, &ExperimentNoiseConfig::default(), 0).unwrap();
    for state in 0..2u8 {
        let (i, q): (Vec<f64>, Vec<f64>) = set.class(state).unzip();
        for x in [i, q] {
            let (_, p) = readout::jarque_bera(&x);
            assert!(p > 0.01, "state {state}: p = {p}");
        }
    }
}

#[test]
fn reported_residual_matches_model() {
    let t1 = 40e-6;
    let grid = expsim::default_decay_grid(t1);
    let curve = expsim::simulate_decay_curve(t1, &grid, &ExperimentNoiseConfig::default(), 13).unwrap();
    let fit = fitters::fit_exponential(&curve).unwrap();
    let p = [fit.params["A"], fit.params["B"], fit.params["t1"]];
    let rss: f64 = curve.delays().iter().zip(curve.p1()).map(|(t, y)| (Exponential.value(*t, &p) - y).powi(2)).sum();
    assert!((rss.sqrt() - fit.residual_norm).abs() <= 1e-12 * fit.residual_norm.max(1e-300) + 1e-15);
}
