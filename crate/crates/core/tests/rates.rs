use avd_core::diagnostics::{energy_e, DiagnosticSeries, LyapunovParams};
use avd_core::dynamics::{crossing_events, integrate, Forcing, IntegrationConfig};
use avd_core::ifb::{discrete_passes, run_ifb, Perturbation};
use avd_core::problems::{bessel_state, catalog, make_flat_bottom};
use avd_core::rates::{
    discrete_loop_decrement, fit_power_law, gronwall_check, loop_decrement, measure_decay,
    perturbed_bound_constant, perturbed_energy, search_loop_start, strong_min_rates,
    verify_perturbed_rate, verify_perturbed_rate_discrete, verify_speed_rate, verify_value_rate,
    verify_value_rate_discrete, DecayMeasurement, FitMode, RateOptions,
};
use avd_core::{linalg, Error};
use proptest::prelude::*;

fn synthetic(t0: f64, t1: f64, dt: f64, f: impl Fn(f64) -> f64) -> DiagnosticSeries {
    let n = ((t1 - t0) / dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
    let values = times.iter().map(|t| f(*t)).collect();
    DiagnosticSeries::new("synthetic", times, values)
}

fn run(id: &str, alpha: f64, x0: Vec<f64>, t_end: f64) -> avd_core::Trajectory {
    let spec = catalog::problem(id).unwrap();
    let v0 = vec![0.0; x0.len()];
    integrate(&spec, &IntegrationConfig::new(alpha, x0, v0).t_end(t_end)).unwrap()
}

#[test]
fn exact_power_law_fit() {
    let s = synthetic(1.0, 100.0, 0.5, |t| t.powi(-2));
    let f = fit_power_law(&s, (1.0, 100.0), FitMode::Direct).unwrap();
    assert!((f.exponent + 2.0).abs() < 1e-10, "{}", f.exponent);
    assert!(f.halfwidth < 1e-10);
}

#[test]
fn envelope_fit_of_modulated_power_law() {
    let s = synthetic(150.0, 6000.0, 0.05, |t| {
        5.0 * t.powf(-1.3) * (1.0 + 0.01 * t.sin())
    });
    let f = fit_power_law(&s, (200.0, 5000.0), FitMode::Envelope).unwrap();
    assert!((f.exponent + 1.3).abs() < 0.02, "{}", f.exponent);
    assert!(f.samples >= 20);
    let auto = fit_power_law(&s, (200.0, 5000.0), FitMode::Auto).unwrap();
    assert_eq!(auto.mode, FitMode::Envelope);
}

#[test]
fn fit_rejects_bad_input() {
    let zeros = synthetic(1.0, 100.0, 1.0, |t| if t > 50.0 { 0.0 } else { 1.0 / t });
    assert!(matches!(
        fit_power_law(&zeros, (1.0, 100.0), FitMode::Direct),
        Err(Error::Fit(_))
    ));
    let short = synthetic(1.0, 10.0, 1.0, |t| 1.0 / t);
    assert!(matches!(
        fit_power_law(&short, (1.0, 10.0), FitMode::Direct),
        Err(Error::Fit(_))
    ));
    let ok = synthetic(1.0, 100.0, 1.0, |t| 1.0 / t);
    assert!(fit_power_law(&ok, (0.5, 100.0), FitMode::Direct).is_err());
    assert!(fit_power_law(&ok, (1.0, 200.0), FitMode::Direct).is_err());
}

#[test]
fn extinct_series_is_classified() {
    let s = synthetic(1.0, 1000.0, 0.5, |t| {
        if t < 100.0 {
            (100.0 - t) / t
        } else {
            0.0
        }
    });
    match measure_decay(&s, (10.0, 1000.0), FitMode::Auto).unwrap() {
        DecayMeasurement::Extinct { since } => assert!((since - 100.0).abs() <= 0.5),
        other => panic!("{other:?}"),
    }
    let alive = synthetic(1.0, 1000.0, 0.5, |t| t.powf(-0.7));
    let m = measure_decay(&alive, (10.0, 1000.0), FitMode::Auto).unwrap();
    assert!((m.exponent() + 0.7).abs() < 1e-10);
}

#[test]
fn bessel_envelope_exponent() {
    let spec = catalog::problem("quadratic").unwrap();
    let (x1, v1) = bessel_state(3.0, &[1.0], 1.0).unwrap();
    let tr = integrate(&spec, &IntegrationConfig::new(3.0, x1, v1).t_end(1000.0)).unwrap();
    let gap = avd_core::diagnostics::value_gap(&tr).unwrap();
    let f = fit_power_law(&gap, (10.0, 1000.0), FitMode::Envelope).unwrap();
    assert!((f.exponent + 3.0).abs() < 0.2, "{}", f.exponent);
}

#[test]
fn value_rate_on_quadratic_critical() {
    let r = verify_value_rate(
        &run("quadratic", 3.0, vec![1.0], 1000.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert!((r.bound_constant.unwrap() - 4.5).abs() < 1e-12);
    assert_eq!(r.bound_satisfied, Some(true));
    assert!(r.passed());
    assert!(r.fitted_exponent.unwrap() <= -2.0 + 0.1);
}

#[test]
fn value_rate_on_flat_bottom() {
    let r = verify_value_rate(
        &run("flat-bottom", 1.5, vec![3.0], 1000.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert!((r.bound_constant.unwrap() - 7.0).abs() < 1e-12);
    assert!(r.observed_sup <= 7.0);
    assert!(r.passed());
}

#[test]
fn stationary_value_rate_is_trivial() {
    let r = verify_value_rate(
        &run("quadratic", 2.0, vec![0.0], 100.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert_eq!(r.bound_constant, Some(0.0));
    assert_eq!(r.observed_sup, 0.0);
    assert!(r.passed());
    assert!(r.extinct);
    let s = verify_speed_rate(
        &run("quadratic", 2.0, vec![0.0], 100.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert_eq!(s.observed_sup, 0.0);
    assert!(s.passed());
}

#[test]
fn value_rate_supercritical_uses_energy_bound() {
    let tr = run("quadratic", 4.0, vec![1.0], 1000.0);
    let r = verify_value_rate(&tr, &RateOptions::default()).unwrap();
    let params = LyapunovParams::family_a(4.0).unwrap();
    let e0 = energy_e(&tr, &[0.0], &params).unwrap().values[0];
    assert_eq!(r.bound_constant, Some(e0));
    assert!(r.passed());
    assert_eq!(r.little_o, Some(true));
}

#[test]
fn speed_rates() {
    let r4 = verify_speed_rate(
        &run("quadratic", 4.0, vec![1.0], 1000.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert_eq!(r4.scaling, 1.0);
    assert!(r4.passed() && r4.tail_sup.is_finite());
    assert_eq!(r4.little_o, Some(true));
    let r2 = verify_speed_rate(
        &run("quadratic", 2.0, vec![1.0], 1000.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert!((r2.scaling - 0.45).abs() < 1e-12);
    assert!(r2.passed() && r2.tail_sup.is_finite());
    let r05 = verify_speed_rate(
        &run("quadratic", 0.5, vec![1.0], 100.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert!(!r05.asserted && r05.passed());
}

#[test]
fn strong_minimum_rates() {
    let tr = run("quadratic", 2.0, vec![1.0], 1000.0);
    let rep = strong_min_rates(&tr, &RateOptions::default()).unwrap();
    let c = rep.values.bound_constant.unwrap();
    assert!(rep.values.observed_sup <= c);
    assert!((rep.distance.bound_constant.unwrap() - 2.0 * c).abs() < 1e-12);
    assert!(rep.distance.observed_sup <= 2.0 * c);
    assert_eq!(rep.inequality_violations, 0);
    assert!(rep.passed());
    let fitted = rep.values.fitted_exponent.unwrap();
    assert!((fitted + 2.0).abs() < 0.2, "{fitted}");

    let stat = strong_min_rates(
        &run("quadratic", 2.0, vec![0.0], 100.0),
        &RateOptions::default(),
    )
    .unwrap();
    assert_eq!(stat.values.observed_sup, 0.0);
    assert_eq!(stat.distance.observed_sup, 0.0);
    assert_eq!(stat.speed.observed_sup, 0.0);

    let flat = run("flat-bottom", 2.0, vec![3.0], 100.0);
    assert!(matches!(
        strong_min_rates(&flat, &RateOptions::default()),
        Err(Error::MissingGroundTruth(_))
    ));
}

#[test]
fn discrete_value_rate_bounded() {
    let spec = catalog::problem("aniso-quadratic").unwrap();
    let log = run_ifb(
        &spec,
        2.0,
        1.0 / spec.lipschitz(),
        &[1.0, 1.0],
        20_000,
        None,
    )
    .unwrap();
    let p = 2.0 * 2.0 / 3.0 - 0.1;
    let r = verify_value_rate_discrete(&log, p).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(verify_value_rate_discrete(&log, 4.0 / 3.0).is_err());
}

#[test]
fn zero_forcing_reduces_to_value_rate() {
    let tr = run("quadratic", 3.0, vec![1.0], 1000.0);
    let a = verify_value_rate(&tr, &RateOptions::default()).unwrap();
    let b = verify_perturbed_rate(&tr, 1.0, &RateOptions::default()).unwrap();
    assert_eq!(a.observed_sup, b.observed_sup);
    assert_eq!(a.tail_bounded, b.tail_bounded);
    // With M = 0 the bound is E(t0) = ½ + ½·2² for x0 = 1, v0 = 0.
    assert!((b.bound_constant.unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn perturbed_continuous_rate() {
    let spec = catalog::problem("quadratic").unwrap();
    let cfg = IntegrationConfig::new(3.0, vec![1.0], vec![0.0])
        .t_end(1000.0)
        .forcing(Forcing::power_decay(0.1, 2.5, 1));
    let tr = integrate(&spec, &cfg).unwrap();
    let r = verify_perturbed_rate(&tr, 1.0, &RateOptions::default()).unwrap();
    // E(t0) = 2.5, M = 0.1/0.5 = 0.2, bound = 2.5 + 0.2(√5 + 0.2).
    let expected = 2.5 + 0.2 * (5.0f64.sqrt() + 0.2);
    assert!((r.bound_constant.unwrap() - expected).abs() < 1e-12);
    assert!(r.passed(), "{r:?}");
    let e = perturbed_energy(&tr, &[0.0], &LyapunovParams::family_a(3.0).unwrap()).unwrap();
    assert!(
        e.is_monotone(),
        "{:?}",
        &e.monotone_violations[..e.monotone_violations.len().min(3)]
    );

    let bad = IntegrationConfig::new(3.0, vec![1.0], vec![0.0])
        .t_end(100.0)
        .forcing(Forcing::power_decay(0.1, 1.5, 1));
    let tr = integrate(&spec, &bad).unwrap();
    assert!(matches!(
        verify_perturbed_rate(&tr, 1.0, &RateOptions::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn perturbed_bound_constant_formula() {
    assert_eq!(perturbed_bound_constant(2.0, 0.0), 2.0);
    assert!((perturbed_bound_constant(2.0, 1.0) - (2.0 + 1.0 * (2.0 + 1.0))).abs() < 1e-15);
}

#[test]
fn perturbed_discrete_rate() {
    let spec = catalog::problem("lasso-small").unwrap();
    let g = Perturbation::power_decay(0.1, 2.7, 1);
    let log = run_ifb(&spec, 2.0, 1.0, &[5.0], 20_000, Some(&g)).unwrap();
    let r = verify_perturbed_rate_discrete(&log, &g, 1.2).unwrap();
    assert!(r.passed(), "{r:?}");
    let slow = Perturbation::power_decay(0.1, 2.0, 1);
    assert!(matches!(
        verify_perturbed_rate_discrete(&log, &slow, 1.2),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn gronwall_on_forced_trajectory() {
    let spec = catalog::problem("quadratic").unwrap();
    let cfg = IntegrationConfig::new(3.0, vec![1.0], vec![0.0])
        .t_end(300.0)
        .forcing(Forcing::power_decay(0.1, 2.5, 1));
    let tr = integrate(&spec, &cfg).unwrap();
    let params = LyapunovParams::family_a(3.0).unwrap();
    let t = tr.times();
    let w: Vec<f64> = (0..tr.len())
        .map(|i| {
            let (x, v) = (tr.position(i), tr.velocity(i));
            linalg::norm(&[params.lambda(t[i]) * x[0] + t[i] * v[0]])
        })
        .collect();
    let m: Vec<f64> = t.iter().map(|s| s * 0.1 * s.powf(-2.5)).collect();
    let e0 = energy_e(&tr, &[0.0], &params).unwrap().values[0];
    let check = gronwall_check(t, &m, &w, (2.0 * e0).sqrt()).unwrap();
    assert!(
        check.hypothesis_holds && check.conclusion_holds,
        "{check:?}"
    );
}

#[test]
fn gronwall_flags_violations() {
    let t: Vec<f64> = (0..100).map(|i| 1.0 + i as f64 * 0.1).collect();
    let m = vec![1.0; t.len()];
    let w: Vec<f64> = t.iter().map(|s| 1.5 * (1.0 + (s - 1.0))).collect();
    let check = gronwall_check(&t, &m, &w, 1.0).unwrap();
    assert!(!check.conclusion_holds && !check.hypothesis_holds);
    assert!(gronwall_check(&t, &vec![-1.0; t.len()], &w, 1.0).is_err());
}

proptest! {
    #[test]
    fn gronwall_conclusion_below_envelope(
        c in 0.0f64..3.0,
        ms in prop::collection::vec(0.0f64..2.0, 20),
        us in prop::collection::vec(0.0f64..1.0, 20),
    ) {
        let t: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.3).collect();
        let mut int_m = [0.0; 20];
        for i in 1..20 {
            int_m[i] = int_m[i - 1] + 0.15 * (ms[i] + ms[i - 1]);
        }
        let w: Vec<f64> = (0..20).map(|i| us[i] * (c + int_m[i])).collect();
        prop_assert!(gronwall_check(&t, &ms, &w, c).unwrap().conclusion_holds);
    }

    #[test]
    fn fit_recovers_random_power(q in -3.0f64..-0.1, a in 0.1f64..10.0) {
        let s = synthetic(1.0, 200.0, 1.0, |t| a * t.powf(q));
        let f = fit_power_law(&s, (1.0, 200.0), FitMode::Direct).unwrap();
        prop_assert!((f.exponent - q).abs() < 1e-9);
    }
}

#[test]
fn no_loops_inside_interval() {
    let spec = make_flat_bottom(0.0, 1.0).unwrap();
    let tr = integrate(
        &spec,
        &IntegrationConfig::new(3.0, vec![0.5], vec![0.01]).t_end(100.0),
    )
    .unwrap();
    let ev = crossing_events(&tr, 0.0, 1.0).unwrap();
    let r = loop_decrement(&ev, 3.0, 0.0, 1.0).unwrap();
    assert!(r.decrements.is_empty() && r.passed.is_none() && r.note.is_some());
}

#[test]
fn continuous_loop_decrements() {
    let spec = catalog::problem("flat-bottom").unwrap();
    let found = search_loop_start(&spec, 3.0, 0.0, 1.0, 1000.0, 1e-9)
        .unwrap()
        .expect("no start with two loops");
    assert!(found.report.decrements.len() >= 2);
    assert_eq!(found.report.target, 4.0);
    assert_eq!(found.report.passed, Some(true), "{:?}", found.report);
    assert!(found.report.decrements.iter().all(|d| *d >= 3.6));
}

#[test]
fn discrete_pass_decrements() {
    let spec = catalog::problem("flat-bottom").unwrap();
    let s = 1e-4;
    let log = run_ifb(&spec, 3.0, s, &[9.0], (60.0 / s.sqrt()) as usize, None).unwrap();
    let passes = discrete_passes(&log, 0.0, 1.0).unwrap();
    let r = discrete_loop_decrement(&passes, 0.0, 1.0).unwrap();
    assert!(!r.decrements.is_empty());
    assert_eq!(r.passed, Some(true), "{r:?}");
}

#[test]
fn discrete_rate_ignores_roundoff_floor() {
    // Converges to machine precision well before K/10; the floored tail counts as zero.
    let spec = catalog::problem("strong-quad").unwrap();
    let log = run_ifb(
        &spec,
        0.5,
        1.0 / spec.lipschitz(),
        &[3.0, 2.0],
        20_000,
        None,
    )
    .unwrap();
    let r = verify_value_rate_discrete(&log, 2.0 * 0.5 / 3.0 - 0.1).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.tail_sup, 0.0);
    assert!(r.notes.iter().any(|n| n.contains("round-off")));
    let floor = avd_core::rates::roundoff_gap_floor(2.0, 0.0, &[1.0, -1.0]);
    assert!(floor > 1e-31 && floor < 1e-28, "{floor:e}");
}
