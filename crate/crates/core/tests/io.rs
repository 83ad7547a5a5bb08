use avd_core::diagnostics::DiagnosticSeries;
use avd_core::dynamics::{integrate, Forcing, IntegrationConfig};
use avd_core::ifb::{discrete_lyapunov, run_ifb, Perturbation};
use avd_core::io::{
    fmt_num, read_iterates_csv, read_series_csv, read_trajectory_csv, write_energies_csv,
    write_iterates_csv, write_json, write_series_csv, write_trajectory_csv,
};
use avd_core::problems::catalog;
use avd_core::rates::{verify_value_rate, RateOptions, RateReport};
use avd_core::Error;
use proptest::prelude::*;

#[test]
fn number_format_has_17_significant_digits() {
    assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
}

proptest! {
    #[test]
    fn number_format_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

#[test]
fn trajectory_round_trip_is_exact() {
    let spec = catalog::problem("aniso-quadratic").unwrap();
    let cfg = IntegrationConfig::new(2.0, vec![1.0, 1.0], vec![0.0, 0.5])
        .t_end(20.0)
        .forcing(Forcing::power_decay(0.1, 2.5, 2));
    let tr = integrate(&spec, &cfg).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&tr, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# {\"problem\":\"aniso-quadratic\""));
    assert_eq!(text.lines().nth(1).unwrap(), "t,x_1,x_2,v_1,v_2");
    let back = read_trajectory_csv(buf.as_slice()).unwrap();
    assert_eq!(back.times(), tr.times());
    assert_eq!(back.alpha(), 2.0);
    assert_eq!(back.forcing(), tr.forcing());
    for i in 0..tr.len() {
        assert_eq!(back.position(i), tr.position(i));
        assert_eq!(back.velocity(i), tr.velocity(i));
    }
    assert!(!back.has_dense_output());
}

#[test]
fn trajectory_read_errors() {
    assert!(matches!(
        read_trajectory_csv("t,x_1,v_1\n1,0,0\n".as_bytes()),
        Err(Error::Parse(_))
    ));
    let unknown = "# {\"problem\":\"nope\",\"alpha\":3.0,\"tol\":1e-9,\"forcing\":{\"kind\":\"zero\"}}\nt,x_1,v_1\n1,0,0\n2,0,0\n";
    assert!(read_trajectory_csv(unknown.as_bytes()).is_err());
    let short = "# {\"problem\":\"quadratic\",\"alpha\":3.0,\"tol\":1e-9,\"forcing\":{\"kind\":\"zero\"}}\nt,x_1,v_1\n1,0\n2,0,0\n";
    assert!(read_trajectory_csv(short.as_bytes()).is_err());
    let bad = "# {\"problem\":\"quadratic\",\"alpha\":3.0,\"tol\":1e-9,\"forcing\":{\"kind\":\"zero\"}}\nt,x_1,v_1\n1,zz,0\n2,0,0\n";
    assert!(matches!(
        read_trajectory_csv(bad.as_bytes()),
        Err(Error::Parse(_))
    ));
}

#[test]
fn series_round_trip() {
    let s = DiagnosticSeries::new(
        "value_gap",
        vec![1.0, 2.0, 3.0],
        vec![0.5, f64::NAN, 1e-300],
    );
    let mut buf = Vec::new();
    write_series_csv(&s, &mut buf).unwrap();
    let back = read_series_csv(buf.as_slice()).unwrap();
    assert_eq!(back.name, "value_gap");
    assert_eq!(back.times, s.times);
    assert_eq!(back.values[0], 0.5);
    assert!(back.values[1].is_nan());
    assert_eq!(back.values[2], 1e-300);
}

#[test]
fn iterate_round_trip_rebuilds_log() {
    let spec = catalog::problem("lasso-small").unwrap();
    let g = Perturbation::power_decay(0.1, 2.7, 1);
    let log = run_ifb(&spec, 2.0, 1.0, &[5.0], 500, Some(&g)).unwrap();
    let mut buf = Vec::new();
    write_iterates_csv(&log, Some(&g), &mut buf).unwrap();
    let back = read_iterates_csv(buf.as_slice()).unwrap();
    assert_eq!(back.iterations(), 500);
    assert_eq!(back.values(), log.values());
    for k in 1..500 {
        assert_eq!(back.y(k), log.y(k));
        assert_eq!(back.perturbation(k), log.perturbation(k));
    }
    assert!(write_iterates_csv(&log, None, Vec::new()).is_err());
}

#[test]
fn energies_csv_columns() {
    let spec = catalog::problem("quadratic").unwrap();
    let log = run_ifb(&spec, 3.0, 1.0, &[1.0], 400, None).unwrap();
    let en = discrete_lyapunov(&log, &[0.0], 0.9).unwrap();
    let mut buf = Vec::new();
    write_energies_csv(&en, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,W,h,E,E_tilde,E_crit");
    assert_eq!(text.lines().count(), 402);
}

#[test]
fn report_json_round_trip() {
    let spec = catalog::problem("quadratic").unwrap();
    let tr = integrate(
        &spec,
        &IntegrationConfig::new(3.0, vec![1.0], vec![0.0]).t_end(200.0),
    )
    .unwrap();
    let r = verify_value_rate(&tr, &RateOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_json(&r, &mut buf).unwrap();
    let back: RateReport = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, r);
}
