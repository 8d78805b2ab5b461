use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qholo::field_model::*;
use qholo::Error;

const HARTREE_EV: f64 = 27.211386;

fn default_field() -> FieldRealization {
    let c = to_atomic_units(&LaserParams::default()).unwrap();
    FieldRealization::from_constants(&c, 0.0).unwrap()
}

#[test]
fn default_constants() {
    let c = to_atomic_units(&LaserParams::default()).unwrap();
    assert!((c.e0 - 0.053380).abs() < 1e-5, "e0 {}", c.e0);
    assert!((c.omega - 0.0303756).abs() < 1e-6);
    assert!((c.up - 0.7720).abs() < 5e-4, "up {}", c.up);
    assert!((c.up * HARTREE_EV - 21.0).abs() < 0.05);
    assert!((c.p_2up - 1.757).abs() < 1e-3);
    assert!((c.quiver_amplitude - c.e0 / (c.omega * c.omega)).abs() < 1e-12);
}

#[test]
fn quadrupled_intensity_doubles_field() {
    let base = LaserParams::default();
    let a = to_atomic_units(&base).unwrap();
    let b = to_atomic_units(&LaserParams { peak_intensity: 4.0 * base.peak_intensity, ..base }).unwrap();
    assert_eq!(b.e0, 2.0 * a.e0);
    assert_eq!(b.omega, a.omega);
}

#[test]
fn bad_parameters_are_domain_errors() {
    let base = LaserParams::default();
    for p in [
        LaserParams { wavelength_nm: 0.0, ..base },
        LaserParams { wavelength_nm: -800.0, ..base },
        LaserParams { peak_intensity: -1.0, ..base },
        LaserParams { peak_intensity: f64::NAN, ..base },
        LaserParams { target_atom_ip: 0.0, ..base },
        LaserParams { cep: f64::INFINITY, ..base },
    ] {
        assert!(matches!(to_atomic_units(&p), Err(Error::Domain(_))), "{p:?}");
    }
    assert!(matches!(FieldRealization::new(-1.0, 0.05, 0.0), Err(Error::Domain(_))));
    assert!(matches!(FieldRealization::new(0.05, 0.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn window_start_has_zero_potential() {
    let f = default_field();
    let (e, a) = field_and_potential(f.window.0, &f);
    assert!((e + f.e0).abs() < 1e-15);
    assert!(a.abs() < 1e-15);
    assert!((f.window.1 - f.window.0 - f.period()).abs() < 1e-12);
}

#[test]
fn window_follows_cep() {
    let c = to_atomic_units(&LaserParams::default()).unwrap();
    for cep in [0.3, PI, -1.0] {
        let f = FieldRealization::from_constants(&c, cep).unwrap();
        let (_, a) = field_and_potential(f.window.0, &f);
        assert!(a.abs() < 1e-15);
        assert!((f.window.1 - f.window.0 - 2.0 * PI / c.omega).abs() < 1e-12);
    }
}

#[test]
fn gated_outside_window() {
    let f = default_field();
    assert_eq!(field_and_potential(f.window.0 - 1.0, &f), (0.0, 0.0));
    assert_eq!(field_and_potential(f.window.1 + 1e-6, &f), (0.0, 0.0));
}

#[test]
fn field_is_minus_potential_derivative() {
    let f = default_field();
    let h = 1e-4;
    for i in 1..50 {
        let t = f.window.0 + f.period() * i as f64 / 50.0;
        let (e, _) = field_and_potential(t, &f);
        let da = (field_and_potential(t + h, &f).1 - field_and_potential(t - h, &f).1) / (2.0 * h);
        assert!((e + da).abs() < 1e-8, "t {t}: {e} vs {}", -da);
    }
}

#[test]
fn potential_peak_is_quiver_momentum() {
    let f = default_field();
    let n = 200_001;
    let peak = (0..n)
        .map(|i| field_and_potential(f.window.0 + f.period() * i as f64 / (n - 1) as f64, &f).1.abs())
        .fold(0.0, f64::max);
    assert!((peak - f.e0 / f.omega).abs() < 1e-10);
}

#[test]
fn ponderomotive_energy_round_trip() {
    let c = to_atomic_units(&LaserParams::default()).unwrap();
    let f = FieldRealization::from_constants(&c, 0.0).unwrap();
    assert_eq!(f.up(), c.up);
    assert_eq!(FieldConstants::from_field(f.e0, f.omega), c);
}

#[test]
fn complex_continuation_matches_real_field() {
    let f = default_field();
    let t = 37.0;
    let (e, a) = field_and_potential(t, &f);
    assert!((f.e(C64::new(t, 0.0)).re - e).abs() < 1e-15);
    assert!((f.a(C64::new(t, 0.0)).re - a).abs() < 1e-15);
    // antiderivatives
    let z = C64::new(41.0, 7.0);
    let h = 1e-5;
    let d1 = (f.int_a(z + h) - f.int_a(z - h)) / (2.0 * h);
    let d2 = (f.int_a2(z + h) - f.int_a2(z - h)) / (2.0 * h);
    assert!((d1 - f.a(z)).norm() < 1e-7 * f.a(z).norm().max(1.0));
    assert!((d2 - f.a(z) * f.a(z)).norm() < 1e-7 * (f.a(z) * f.a(z)).norm().max(1.0));
}
