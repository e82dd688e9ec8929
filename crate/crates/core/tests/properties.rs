use std::f64::consts::TAU;

use proptest::prelude::*;

use transmon_lab::aging::{self, JunctionState, ResonatorModel};
use transmon_lab::domain::io;
use transmon_lab::domain::{reference_devices, CooldownRecord, DecayCurve, IqShot, IqShotSet, ParameterKind, TimeTrace};
use transmon_lab::expsim::{self, ExperimentNoiseConfig};
use transmon_lab::fitters;
use transmon_lab::readout;
use transmon_lab::stability::{self, ScalingPoint};
use transmon_lab::tlssim::{self, Dynamics, EnsembleConfig};

fn increasing(deltas: Vec<f64>, start: f64) -> Vec<f64> {
    deltas
        .iter()
        .scan(start, |acc, d| {
            let v = *acc;
            *acc += d;
            Some(v)
        })
        .collect()
}

fn rotate(set: &IqShotSet, angle: f64, dx: f64, dy: f64) -> IqShotSet {
    let (s, c) = angle.sin_cos();
    IqShotSet::new(
        set.shots()
            .iter()
            .map(|p| IqShot { i: c * p.i - s * p.q + dx, q: s * p.i + c * p.q + dy, prepared_state: p.prepared_state })
            .collect(),
    )
    .unwrap()
}

fn quiet_config(n_tls: usize, background: f64) -> EnsembleConfig {
    EnsembleConfig { n_tls, background_rate: background, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decay_csv_round_trips(steps in prop::collection::vec(1e-7..1e-5f64, 2..40), p in prop::collection::vec(0.0..=1.0f64, 40), shots in prop::option::of(1u32..5000)) {
        let tau = increasing(steps.clone(), 0.0);
        let curve = DecayCurve::new(tau.clone(), p[..tau.len()].to_vec(), shots).unwrap();
        let text = io::write_decay(&curve);
        let back = io::parse_decay(&text).unwrap();
        prop_assert_eq!(&back, &curve);
        prop_assert_eq!(io::write_decay(&back), text);
    }

    #[test]
    fn trace_csv_round_trips(steps in prop::collection::vec(1.0..600.0f64, 1..50), v in prop::collection::vec(1e-6..1e-3f64, 50)) {
        let t = increasing(steps, 10.0);
        let trace = TimeTrace::new(ParameterKind::T1, t.clone(), v[..t.len()].to_vec()).unwrap();
        let text = io::write_trace(&trace);
        let back = io::parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(io::write_trace(&back), text);
    }

    #[test]
    fn iq_csv_round_trips(pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 4..60)) {
        let shots: Vec<IqShot> = pts.iter().enumerate().map(|(k, &(i, q))| IqShot { i, q, prepared_state: (k % 2) as u8 }).collect();
        let set = IqShotSet::new(shots).unwrap();
        let text = io::write_iq(&set);
        let back = io::parse_iq(&text).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(io::write_iq(&back), text);
    }

    #[test]
    fn cooldown_json_round_trips(days in prop::collection::vec(0.0..200.0f64, 1..6), fq in 4e9..5e9f64) {
        let elapsed = increasing(days, 0.0);
        let records: Vec<CooldownRecord> = elapsed
            .iter()
            .enumerate()
            .map(|(k, &d)| CooldownRecord { index: k as u32, elapsed_days: d, f_q: Some(fq - 1e6 * k as f64), f_r: Some(6.5e9), mean_t1: (k % 2 == 0).then_some(5e-5) })
            .collect();
        let text = io::write_cooldowns(&records);
        let back = io::parse_cooldowns(&text).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(io::write_cooldowns(&back), text);
    }

    #[test]
    fn delta_m_invariant_under_rigid_motion(seed in 0u64..1000, sep in 1.0..6.0f64, angle in -3.0..3.0f64, dx in -20.0..20.0f64, dy in -20.0..20.0f64) {
        let design = &reference_devices(1.2)[0];
        let noise = ExperimentNoiseConfig { single_shot_shots: 512, ..Default::default() };
        let set = expsim::simulate_single_shot(design, sep, &noise, seed).unwrap();
        let moved = rotate(&set, angle, dx, dy);
        let a = readout::compute_metrics(&set, &readout::fit_discriminator(&set).unwrap(), design.f_q);
        let b = readout::compute_metrics(&moved, &readout::fit_discriminator(&moved).unwrap(), design.f_q);
        prop_assert!((a.delta_m - b.delta_m).abs() <= 1e-9 * a.delta_m.max(1.0));
        prop_assert!(a.accuracy >= 0.5);
    }

    #[test]
    fn fidelity_and_temperature_anticorrelate(p01 in 0.0..0.1f64, p10a in 1e-4..0.2f64, bump in 1e-4..0.2f64, f_q in 3e9..7e9f64) {
        let p10b = p10a + bump;
        let fa = readout::readout_fidelity(p01, p10a);
        let fb = readout::readout_fidelity(p01, p10b);
        let (ta, _) = readout::effective_temperature(f_q, p10a, 1.0 - p10a);
        let (tb, _) = readout::effective_temperature(f_q, p10b, 1.0 - p10b);
        prop_assert!(fb < fa);
        prop_assert!(tb > ta);
    }

    #[test]
    fn dropout_intervals_disjoint_and_bounded(steps in prop::collection::vec(1.0..120.0f64, 2..200), v in prop::collection::vec(1e-6..1e-4f64, 200), k in 0.0..2.0f64) {
        let t = increasing(steps, 0.0);
        let trace = TimeTrace::new(ParameterKind::T1, t.clone(), v[..t.len()].to_vec()).unwrap();
        let s = stability::distribution_summary(trace.values()).map(|s| (s.mean, s.std)).unwrap_or((5e-5, 1e-5));
        let rep = stability::detect_dropouts_with(&trace, s, k);
        for w in rep.intervals.windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
        for &(a, b) in &rep.intervals {
            prop_assert!(a <= b && a >= t[0] && b <= t[t.len() - 1]);
        }
        prop_assert!((0.0..=1.0).contains(&rep.affected_fraction));
    }

    #[test]
    fn scaling_fit_is_scale_covariant(c in 0.01..100.0f64, means in prop::collection::vec(10e-6..500e-6f64, 3..10), jitter in prop::collection::vec(0.8..1.2f64, 10)) {
        let points: Vec<ScalingPoint> = means
            .iter()
            .zip(&jitter)
            .enumerate()
            .map(|(k, (&m, &j))| ScalingPoint { label: format!("q{k}"), mean_t1: m, std_t1: j * 0.386 * m.powf(1.5), std_t1_err: None, n_samples: 600, span_hours: 12.0 })
            .collect();
        let scaled: Vec<ScalingPoint> = points
            .iter()
            .map(|p| ScalingPoint { mean_t1: c * p.mean_t1, std_t1: c * p.std_t1, ..p.clone() })
            .collect();
        let a = stability::fit_scaling_law(&points, false).unwrap().a;
        let b = stability::fit_scaling_law(&scaled, false).unwrap().a;
        prop_assert!((b / a - c.powf(-0.5)).abs() <= 1e-10 * c.powf(-0.5));
    }

    #[test]
    fn frequencies_fall_with_resistance(r1 in 2e3..2e4f64, ratio in 1.0001..1.5f64) {
        let d = &reference_devices(1.2)[0];
        let e_c = d.charging_energy();
        let fq = |r: f64| aging::fq_from_junction(&JunctionState::from_resistance(r, e_c, d.gap_delta).unwrap());
        let model = ResonatorModel { f_r_bare: 8e9, g: 80e6, l_tot: None, eps_eff: None };
        let (a, b) = (fq(r1), fq(r1 * ratio));
        prop_assert!(b < a);
        // same side of the resonator pole
        prop_assume!((a - model.f_r_bare).signum() == (b - model.f_r_bare).signum());
        prop_assert!(aging::dressed_fr(&model, b) < aging::dressed_fr(&model, a));
    }

    #[test]
    fn decomposition_shares_sum_to_shift(dfq in prop::collection::vec(-150e6..150e6f64, 1..5), dfr in prop::collection::vec(-3e6..3e6f64, 5)) {
        let d = &reference_devices(1.2)[0];
        let model = ResonatorModel { f_r_bare: 6.575e9, g: 0.0, l_tot: None, eps_eff: None };
        let mut records = vec![CooldownRecord { index: 0, elapsed_days: 0.0, f_q: Some(d.f_q), f_r: Some(d.f_r), mean_t1: None }];
        for (k, (a, b)) in dfq.iter().zip(&dfr).enumerate() {
            records.push(CooldownRecord { index: k as u32 + 1, elapsed_days: 30.0 * (k + 1) as f64, f_q: Some(d.f_q + a), f_r: Some(d.f_r + b), mean_t1: None });
        }
        let dec = aging::decompose_fr_shift(&records, &model, d.charging_energy(), d.gap_delta).unwrap();
        for s in &dec.splits {
            prop_assert!((s.pulling + s.bare - s.delta_fr).abs() <= 1e-6);
        }
    }

    #[test]
    fn ensemble_union_is_additive(na in 1usize..40, nb in 1usize..40, sa in 0u64..500, sb in 500u64..1000) {
        let a = tlssim::sample_ensemble(&quiet_config(na, 2e4), sa).unwrap();
        let b = tlssim::sample_ensemble(&quiet_config(nb, 2e4), sb).unwrap();
        let u = a.union(&b);
        let want = tlssim::decay_rate_at(&a, 0.0) + tlssim::decay_rate_at(&b, 0.0) - 2e4;
        prop_assert!((tlssim::decay_rate_at(&u, 0.0) - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn t1_samples_positive_and_finite(n in 0usize..60, seed in 0u64..1000, telegraphic: bool) {
        let dynamics = if telegraphic { Dynamics::Telegraphic } else { Dynamics::Diffusive };
        let rate = if dynamics == Dynamics::Telegraphic { 1e-3 } else { 1e7 };
        let cfg = EnsembleConfig { n_tls: n, dynamics, rate, ..Default::default() };
        let ens = tlssim::sample_ensemble(&cfg, seed).unwrap();
        let trace = tlssim::simulate_t1_trace(&ens, 4.0 * 3600.0, 120.0, seed).unwrap();
        prop_assert!(trace.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn virtual_z_phase_wraps(df in 0.0..200e3f64, tau in 0.0..1e-3f64) {
        let phi = expsim::virtual_z_phase(df, tau);
        prop_assert!((0.0..TAU).contains(&phi));
        let raw = TAU * df * tau;
        let k = ((raw - phi) / TAU).round();
        prop_assert!((raw - phi - k * TAU).abs() <= 1e-9 * raw.max(1.0));
    }

    #[test]
    fn exponential_fit_ignores_affine_scaling(a in 0.2..0.7f64, b in 0.0..0.3f64, t1 in 5e-6..200e-6f64) {
        let tau = expsim::default_decay_grid(t1);
        let p1: Vec<f64> = tau.iter().map(|t| a * (-t / t1).exp() + b).collect();
        let fit = fitters::fit_exponential(&DecayCurve::new(tau, p1, None).unwrap()).unwrap();
        prop_assert!((fit.params["t1"] / t1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ramsey_offset_sign_resolves(offset in prop_oneof![-4e3..-300.0f64, 300.0..4e3f64], f_drive in 4e9..5e9f64) {
        let p = expsim::ramsey_protocol("A.2").unwrap();
        let curve = expsim::simulate_ramsey_curve(offset, p.mean_t2star, p.set_detuning, p.t_max, &p.grid(), &ExperimentNoiseConfig::noiseless(), 0).unwrap();
        let fit = fitters::fit_damped_cosine(&curve).unwrap();
        let f_r = fit.params["f_ramsey"];
        prop_assert_eq!((f_r - p.set_detuning).signum(), offset.signum());
        let f_q = f_drive - offset;
        let cal = fitters::resolve_drive_calibration(f_drive, f_r, p.set_detuning);
        prop_assert!((cal - f_q).abs() < 1e-3);
    }
}
