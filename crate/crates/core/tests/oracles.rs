//! Bundled presets against the time-domain double integrals.

use influence_lab::functionals::direct::{commutator_direct, hadamard_time_domain, phi_time_domain};
use influence_lab::functionals::{compute_all_with_diagnostics, QuadratureConfig};
use influence_lab::scenario::Scenario;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gravitational_spacelike_preset_matches_time_domain() {
    let s = Scenario::preset("spacelike_gr").unwrap();
    let (a, b, spec) = s.build().unwrap();
    let r = compute_all_with_diagnostics(&a, &b, &spec, &s.quadrature).unwrap();
    let f = r.functionals;
    let coarse = QuadratureConfig { direct_points_per_width: 4.0, ..s.quadrature };

    let gamma_a = 0.5 * hadamard_time_domain(&a, &a, &spec, &coarse).unwrap();
    assert!(rel(f.gamma_a, gamma_a) < 1e-2, "{} vs {gamma_a}", f.gamma_a);
    let gamma_c = hadamard_time_domain(&a, &b, &spec, &coarse).unwrap();
    assert!(rel(f.gamma_c, gamma_c) < 1e-2, "{} vs {gamma_c}", f.gamma_c);

    let phi_ba = phi_time_domain(&b, &a, &spec, &s.quadrature).unwrap();
    assert!(rel(f.phi_ba, phi_ba) < 1e-3, "{} vs {phi_ba}", f.phi_ba);
    assert_eq!(f.phi_ab, 0.0);
}

#[test]
fn gravitational_timelike_preset_matches_time_domain() {
    let s = Scenario::preset("timelike_gr").unwrap();
    let (a, b, spec) = s.build().unwrap();
    let r = compute_all_with_diagnostics(&a, &b, &spec, &s.quadrature).unwrap();
    let f = r.functionals;
    let phi_ab = phi_time_domain(&a, &b, &spec, &s.quadrature).unwrap();
    let phi_ba = phi_time_domain(&b, &a, &spec, &s.quadrature).unwrap();
    assert!(rel(f.phi_ab, phi_ab) < 1e-3, "{} vs {phi_ab}", f.phi_ab);
    assert!(rel(f.phi_ba, phi_ba) < 1e-3, "{} vs {phi_ba}", f.phi_ba);

    let c = commutator_direct(&a, &b, &spec, &s.quadrature).unwrap();
    assert!(rel(f.phi_ab - f.phi_ba, c) < 1e-3);
    assert!(rel(r.commutator_spectral.value, c) < 1e-3);
}

#[test]
fn electromagnetic_timelike_preset_matches_time_domain() {
    let s = Scenario::preset("timelike_em").unwrap();
    let (a, b, spec) = s.build().unwrap();
    let r = compute_all_with_diagnostics(&a, &b, &spec, &s.quadrature).unwrap();
    let f = r.functionals;
    let coarse = QuadratureConfig { direct_points_per_width: 4.0, ..s.quadrature };
    let gamma_c = hadamard_time_domain(&a, &b, &spec, &coarse).unwrap();
    assert!(rel(f.gamma_c, gamma_c) < 1e-2, "{} vs {gamma_c}", f.gamma_c);
    let phi_ab = phi_time_domain(&a, &b, &spec, &s.quadrature).unwrap();
    assert!(rel(f.phi_ab, phi_ab) < 1e-3, "{} vs {phi_ab}", f.phi_ab);
}
