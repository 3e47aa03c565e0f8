use nalgebra::Vector3;

use super::*;
use crate::sources::{make_split_path, FieldType, Label, SplitPath};

fn path(label_offset: f64, t_start: f64, sep: f64, samples: usize) -> SplitPath<f64> {
    SplitPath {
        t_total: 1.0,
        t_start,
        separation: sep,
        hold_fraction: 0.5,
        center: Vector3::new(label_offset, 0.0, 0.0),
        axis: Vector3::new(1.0, 0.0, 0.0),
        coupling: 0.1,
        smearing_width: 0.005,
        samples,
    }
}

fn pair(field: FieldType, d: f64, tb: f64, samples: usize) -> (BranchedSource<f64>, BranchedSource<f64>) {
    let a = make_split_path(field, Label::A, &path(0.0, 0.0, 0.1, samples)).unwrap();
    let b = make_split_path(field, Label::B, &path(d, tb, 0.1, samples)).unwrap();
    (a, b)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gamma_self_matches_time_domain_quadrature() {
    let spec = KernelSpec::em(4000.0);
    let (a, _) = pair(FieldType::Em, 5.0, 4.5, 256);
    let g = gamma_self_estimate(&a, &spec, &QuadratureConfig::default()).unwrap();
    assert!(g.converged && g.value > 0.0);
    let cfg = QuadratureConfig { direct_points_per_width: 3.0, ..Default::default() };
    let oracle = 0.5 * direct::hadamard_time_domain(&a, &a, &spec, &cfg).unwrap();
    assert!(rel(g.value, oracle) < 1e-2, "{} vs {oracle}", g.value);
}

#[test]
fn gamma_self_is_quadratic_in_coupling() {
    let spec = KernelSpec::em(4000.0);
    let mut p = path(0.0, 0.0, 0.1, 64);
    let g1 = gamma_self(&make_split_path(FieldType::Em, Label::A, &p).unwrap(), &spec).unwrap();
    p.coupling *= 2.0;
    let g2 = gamma_self(&make_split_path(FieldType::Em, Label::A, &p).unwrap(), &spec).unwrap();
    assert!(rel(g2, 4.0 * g1) < 1e-12);
}

#[test]
fn unsplit_sources_give_exact_zeros() {
    let spec = KernelSpec::em(4000.0);
    let a = make_split_path(FieldType::Em, Label::A, &path(0.0, 0.0, 0.0, 32)).unwrap();
    let b = make_split_path(FieldType::Em, Label::B, &path(0.2, 0.0, 0.1, 32)).unwrap();
    let r = compute_all_with_diagnostics(&a, &b, &spec, &QuadratureConfig::default()).unwrap();
    let f = r.functionals;
    assert_eq!([f.gamma_a, f.gamma_c, f.phi_ab, f.phi_ba], [0.0; 4]);
    assert!(f.gamma_b > 0.0);
}

#[test]
fn coincident_sources_give_twice_gamma_self() {
    let spec = KernelSpec::em(4000.0);
    let a = make_split_path(FieldType::Em, Label::A, &path(0.0, 0.0, 0.1, 64)).unwrap();
    let b = make_split_path(FieldType::Em, Label::B, &path(0.0, 0.0, 0.1, 64)).unwrap();
    let cfg = QuadratureConfig::default();
    let g = gamma_self_estimate(&a, &spec, &cfg).unwrap().value;
    let w = cross_spectrum(&a, &b, &spec, &cfg).unwrap().value;
    assert!(rel(w.re, 2.0 * g) < 1e-4, "{} vs {}", w.re, 2.0 * g);
    assert!(w.im.abs() < 1e-6 * g);
}

#[test]
fn spacelike_cross_terms_agree_with_time_domain_quadrature() {
    let spec = KernelSpec::em(4000.0);
    let (a, b) = pair(FieldType::Em, 5.0, 4.5, 256);
    let cfg = QuadratureConfig::default();
    let w = cross_spectrum(&a, &b, &spec, &cfg).unwrap();
    assert!(w.converged);

    let coarse = QuadratureConfig { direct_points_per_width: 4.0, ..cfg };
    let re = direct::hadamard_time_domain(&a, &b, &spec, &coarse).unwrap();
    assert!(rel(w.value.re, re) < 1e-2, "Re W {} vs {re}", w.value.re);

    let phi_ab = phi_directed_estimate(&a, &b, &spec, &cfg).unwrap();
    let phi_ba = phi_directed_estimate(&b, &a, &spec, &cfg).unwrap();
    let commutator = phi_ab.value - phi_ba.value;
    assert!(rel(2.0 * w.value.im, commutator) < 1e-5, "2 Im W {} vs {commutator}", 2.0 * w.value.im);
    let point = phi_point_limit(&b, &a, &spec).unwrap().value;
    assert!(rel(point, phi_ba.value) < 1e-3);
    let direct = direct::commutator_direct(&a, &b, &spec, &cfg).unwrap();
    assert!(rel(direct, commutator) < 1e-2, "direct {direct} vs {commutator}");
}

#[test]
fn phase_vanishes_exactly_without_causal_contact() {
    let spec = KernelSpec::em(4000.0);
    let (a, b) = pair(FieldType::Em, 5.0, 4.5, 128);
    // b lies entirely in the future of a: nothing from b reaches a
    let ab = phi_directed(&a, &b, &spec).unwrap();
    let ba = phi_directed(&b, &a, &spec).unwrap();
    assert_eq!(ab, 0.0);
    assert!(ba.abs() > 1e-8);
    assert!(matches!(phi_directed(&a, &a, &spec), Err(FunctionalError::SameLabel)));
}

#[test]
fn phase_matches_time_domain_quadrature_and_point_limit() {
    let (a, b) = pair(FieldType::Em, 0.2, 0.25, 256);
    let spec = KernelSpec::em(4000.0);
    let cfg = QuadratureConfig::default();
    let tube = phi_directed_estimate(&a, &b, &spec, &cfg).unwrap();
    assert!(tube.converged);
    let oracle = direct::phi_time_domain(&a, &b, &spec, &cfg).unwrap();
    assert!(rel(tube.value, oracle) < 1e-4, "{} vs {oracle}", tube.value);
    // the branches stay 0.1 apart, so the profile correction is O(1e-3)
    let point = phi_point_limit(&a, &b, &spec).unwrap().value;
    assert!(rel(tube.value, point) < 1e-3, "{} vs {point}", tube.value);

    let smeared = KernelSpec { smearing_width: 2e-3, ..spec };
    let tube = phi_directed(&a, &b, &smeared).unwrap();
    let oracle = direct::phi_time_domain(&a, &b, &smeared, &cfg).unwrap();
    assert!(rel(tube, oracle) < 1e-4, "{tube} vs {oracle}");
}

#[test]
fn timelike_pair_satisfies_the_uncertainty_relation() {
    let (a, b) = pair(FieldType::Em, 0.2, 0.25, 128);
    let spec = KernelSpec::em(4000.0);
    let r = compute_all_with_diagnostics(&a, &b, &spec, &QuadratureConfig::default()).unwrap();
    let f = r.functionals;
    assert!(r.all_converged());
    assert!(f.phi_ab.abs() > 0.0 && f.phi_ba.abs() > 0.0);
    let d = f.phi_ab - f.phi_ba;
    assert!(f.gamma_a * f.gamma_b >= f.gamma_c * f.gamma_c / 4.0 + d * d / 16.0);
    assert!(rel(r.commutator_spectral.value, d) < 1e-5, "{:?} vs {d}", r.commutator_spectral);
}

#[test]
fn guards_reject_bad_inputs() {
    let (a, b) = pair(FieldType::Em, 5.0, 4.5, 32);
    let coarse = KernelSpec::em(100.0);
    assert!(matches!(gamma_self(&a, &coarse), Err(FunctionalError::Unresolved(_))));
    let gr = KernelSpec::gr(1e-3, 4000.0);
    assert!(matches!(gamma_cross(&a, &b, &gr), Err(FunctionalError::FieldTypeMismatch(_))));
    let cfg = QuadratureConfig { max_direct_points: 10, ..Default::default() };
    assert!(matches!(
        direct::commutator_direct(&a, &b, &KernelSpec::em(4000.0), &cfg),
        Err(FunctionalError::GridTooLarge(_))
    ));
}

#[test]
fn gr_energy_density_functionals_are_consistent() {
    let (a, b) = pair(FieldType::Gr, 0.2, 0.25, 128);
    let spec = KernelSpec::gr(1e-3, 4000.0);
    let r = compute_all_with_diagnostics(&a, &b, &spec, &QuadratureConfig::default()).unwrap();
    let f = r.functionals;
    assert!(f.gamma_a > 0.0 && f.gamma_b > 0.0);
    assert!(f.gamma_c.abs() <= 2.0 * (f.gamma_a * f.gamma_b).sqrt());
    let direct = direct::commutator_direct(&a, &b, &spec, &QuadratureConfig::default()).unwrap();
    assert!(rel(direct, f.phi_ab - f.phi_ba) < 1e-2, "{direct} vs {}", f.phi_ab - f.phi_ba);
}

