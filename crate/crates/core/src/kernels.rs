//! Field kernels in the metric signature (-,+,+,+) with c = hbar = 1.
//!
//! Conventions:
//! * the symmetrised two-point function is `<{phi(x), phi(y)}> = N * H(dt, r)`
//!   with `N` the Hadamard tensor factor (`eta` for the vector field,
//!   `kappa^2 P` for the metric perturbation);
//! * the retarded propagator is `G_r = -i <[phi(x), phi(y)]> theta(dt)`, which
//!   equals `R * delta(dt - r) / (4 pi r)` with `R = -N`;
//! * the commutator is therefore `[phi(x), phi(y)] = i R PJ(dt, r)` with the
//!   Pauli–Jordan function `PJ = (delta(dt - r) - delta(dt + r)) / (4 pi r)`.

use std::ops::{Add, Mul};

use nalgebra::{Matrix4, Vector3, Vector4};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate_adaptive, Tolerance};
use crate::real::Real;
use crate::sources::FieldType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("coincident points: the kernel is singular at r = 0")]
    CoincidentPoints,
    #[error("invalid kernel parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("tensor rank does not match the field type")]
    RankMismatch,
}

/// Which components of the stress difference enter the gravitational functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressModel {
    /// Only the energy density `T^00`.
    #[default]
    EnergyDensity,
    /// All components of `m u^mu u^nu`.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub field_type: FieldType,
    pub gravitational_constant: T,
    /// Temporal width of the smeared light-cone delta; 0 means exact.
    pub smearing_width: T,
    pub uv_cutoff: T,
    pub stress_model: StressModel,
}

impl<T: Real> KernelSpec<T> {
    pub fn em(uv_cutoff: T) -> Self {
        Self {
            field_type: FieldType::Em,
            gravitational_constant: T::zero(),
            smearing_width: T::zero(),
            uv_cutoff,
            stress_model: StressModel::EnergyDensity,
        }
    }

    pub fn gr(gravitational_constant: T, uv_cutoff: T) -> Self {
        Self { field_type: FieldType::Gr, gravitational_constant, ..Self::em(uv_cutoff) }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |name, reason: &str| Err(KernelError::InvalidParameter { name, reason: reason.into() });
        if !(self.uv_cutoff > T::zero()) || !self.uv_cutoff.is_finite() {
            return bad("uv_cutoff", "must be positive and finite");
        }
        if !(self.smearing_width >= T::zero()) || !self.smearing_width.is_finite() {
            return bad("smearing_width", "must be non-negative and finite");
        }
        if self.field_type == FieldType::Gr
            && (!(self.gravitational_constant > T::zero()) || !self.gravitational_constant.is_finite())
        {
            return bad("gravitational_constant", "must be positive and finite");
        }
        Ok(())
    }

    /// `kappa^2 = 32 pi G`.
    pub fn kappa_squared(&self) -> T {
        T::lit(32.0) * T::PI() * self.gravitational_constant
    }
}

/// `diag(-1, 1, 1, 1)`.
pub fn minkowski<T: Real>() -> Matrix4<T> {
    Matrix4::from_diagonal(&Vector4::new(-T::one(), T::one(), T::one(), T::one()))
}

/// Constant rank-4 tensor with 256 components.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank4<T> {
    c: Box<[T; 256]>,
}

impl<T: Real> Rank4<T> {
    fn idx(m: usize, n: usize, r: usize, s: usize) -> usize {
        ((m * 4 + n) * 4 + r) * 4 + s
    }

    pub fn get(&self, m: usize, n: usize, r: usize, s: usize) -> T {
        self.c[Self::idx(m, n, r, s)]
    }

    /// `scale * (eta_mr eta_ns + eta_ms eta_nr - eta_mn eta_rs) / 2`.
    pub fn trace_reversed(scale: T) -> Self {
        let eta = minkowski::<T>();
        let mut c = Box::new([T::zero(); 256]);
        let half = T::lit(0.5) * scale;
        for m in 0..4 {
            for n in 0..4 {
                for r in 0..4 {
                    for s in 0..4 {
                        c[Self::idx(m, n, r, s)] =
                            half * (eta[(m, r)] * eta[(n, s)] + eta[(m, s)] * eta[(n, r)] - eta[(m, n)] * eta[(r, s)]);
                    }
                }
            }
        }
        Self { c }
    }

    fn scaled(&self, k: T) -> Self {
        let mut c = self.c.clone();
        c.iter_mut().for_each(|x| *x *= k);
        Self { c }
    }
}

/// A source difference: a current for the vector field, a stress for gravity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceTensor<E: nalgebra::Scalar> {
    Current(Vector4<E>),
    Stress(Matrix4<E>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorFactor<T> {
    Vector(Matrix4<T>),
    Tensor(Rank4<T>),
}

impl<T: Real> TensorFactor<T> {
    /// Full contraction `a^mu N_mu nu b^nu` (or the rank-4 analogue).
    pub fn contract<E>(&self, a: &SourceTensor<E>, b: &SourceTensor<E>) -> Result<E, KernelError>
    where
        E: nalgebra::Scalar + Copy + Zero + Add<Output = E> + Mul<Output = E> + Mul<T, Output = E>,
    {
        match (self, a, b) {
            (TensorFactor::Vector(n), SourceTensor::Current(a), SourceTensor::Current(b)) => {
                let mut acc = E::zero();
                for m in 0..4 {
                    for k in 0..4 {
                        let w = n[(m, k)];
                        if w != T::zero() {
                            acc = acc + a[m] * b[k] * w;
                        }
                    }
                }
                Ok(acc)
            }
            (TensorFactor::Tensor(p), SourceTensor::Stress(a), SourceTensor::Stress(b)) => {
                let mut acc = E::zero();
                for m in 0..4 {
                    for n in 0..4 {
                        let amn = a[(m, n)];
                        if amn == E::zero() {
                            continue;
                        }
                        for r in 0..4 {
                            for s in 0..4 {
                                let w = p.get(m, n, r, s);
                                if w != T::zero() {
                                    acc = acc + amn * b[(r, s)] * w;
                                }
                            }
                        }
                    }
                }
                Ok(acc)
            }
            _ => Err(KernelError::RankMismatch),
        }
    }

    fn negated(&self) -> Self {
        match self {
            TensorFactor::Vector(n) => TensorFactor::Vector(-n),
            TensorFactor::Tensor(p) => TensorFactor::Tensor(p.scaled(-T::one())),
        }
    }
}

pub fn hadamard_tensor_factor<T: Real>(spec: &KernelSpec<T>) -> TensorFactor<T> {
    match spec.field_type {
        FieldType::Em => TensorFactor::Vector(minkowski()),
        FieldType::Gr => TensorFactor::Tensor(Rank4::trace_reversed(spec.kappa_squared())),
    }
}

pub fn retarded_tensor_factor<T: Real>(spec: &KernelSpec<T>) -> TensorFactor<T> {
    hadamard_tensor_factor(spec).negated()
}

/// Normalised Gaussian in one variable.
pub fn gaussian_1d<T: Real>(x: T, width: T) -> T {
    (-(x * x) / (T::lit(2.0) * width * width)).exp() / (width * (T::lit(2.0) * T::PI()).sqrt())
}

/// `delta_sigma(dt - r) / (4 pi r)`.
///
/// With zero smearing the delta is exact: the result is 0 off the cone and
/// `+inf` on it, and callers integrate it analytically.
pub fn retarded_scalar<T: Real>(spec: &KernelSpec<T>, dt: T, r: T) -> Result<T, KernelError> {
    if !(r > T::zero()) {
        return Err(KernelError::CoincidentPoints);
    }
    let w = spec.smearing_width;
    if w == T::zero() {
        return Ok(if dt == r { T::infinity() } else { T::zero() });
    }
    Ok(gaussian_1d(dt - r, w) / (T::lit(4.0) * T::PI() * r))
}

/// Pauli–Jordan function smeared by a Gaussian of width `s` in time:
/// `(delta_s(tau - r) - delta_s(tau + r)) / (4 pi r)`, finite at `r = 0`.
pub fn pauli_jordan_smeared<T: Real>(tau: T, r: T, s: T) -> T {
    let four_pi = T::lit(4.0) * T::PI();
    if r <= s * T::lit(1e-4) {
        // r -> 0 limit, -2 delta_s'(tau) / (4 pi), plus the r^2 correction
        let g = gaussian_1d(tau, s);
        let s2 = s * s;
        let d1 = tau / s2;
        let third = tau * (T::lit(3.0) * s2 - tau * tau) / (s2 * s2 * s2);
        return g * (T::lit(2.0) * d1 - r * r * third / T::lit(3.0)) / four_pi;
    }
    (gaussian_1d(tau - r, s) - gaussian_1d(tau + r, s)) / (four_pi * r)
}

/// Retarded kernel between two Gaussian blobs whose relative position has
/// width `s`: `theta(tau) (delta_s(tau - r) - delta_s(tau + r)) / (4 pi r)`.
pub fn retarded_smeared<T: Real>(tau: T, r: T, s: T) -> T {
    if tau > T::zero() {
        pauli_jordan_smeared(tau, r, s)
    } else {
        T::zero()
    }
}

/// Dawson's integral `F(x) = exp(-x^2) int_0^x exp(t^2) dt`.
///
/// Taylor series near the origin, Rybicki's exponentially convergent sum
/// elsewhere; relative accuracy about 1e-14.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.2 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        for n in 1..12 {
            term *= -2.0 * x2 / (2 * n + 1) as f64;
            sum += term;
        }
        return sum;
    }
    if ax > 1e8 {
        return 0.5 / x;
    }
    const H: f64 = 0.25;
    let n0 = 2.0 * (0.5 * ax / H).round();
    let xp = ax - n0 * H;
    let mut sum = 0.0;
    for i in 0..30 {
        let n = (2 * i + 1) as f64;
        sum += (-(xp - n * H).powi(2)).exp() / (n0 + n) + (-(xp + n * H).powi(2)).exp() / (n0 - n);
    }
    x.signum() * sum / std::f64::consts::PI.sqrt()
}

/// `int_0^inf exp(-s^2 k^2) sin(b k) dk = F(b / (2s)) / s`.
fn gauss_sine<T: Real>(b: T, s: T) -> T {
    T::lit(dawson((b / (T::lit(2.0) * s)).as_f64())) / s
}

/// Derivative of [`gauss_sine`] with respect to `b`.
fn gauss_sine_prime<T: Real>(b: T, s: T) -> T {
    let x = b / (T::lit(2.0) * s);
    let f = T::lit(dawson(x.as_f64()));
    (T::one() - T::lit(2.0) * x * f) / (T::lit(2.0) * s * s)
}

/// Symmetrised scalar two-point function
/// `(1 / (2 pi^2 r)) int_0^K exp(-k^2 s^2) cos(k dt) sin(k r) dk`,
/// where `s` is the pair smearing (`s^2 = (sigma_x^2 + sigma_y^2) / 2` for two
/// Gaussian sources) and `K` the UV cutoff.
pub fn hadamard_scalar<T: Real>(spec: &KernelSpec<T>, dt: T, r: T, pair_smearing: T) -> Result<T, KernelError> {
    if !(r >= T::zero()) || !(pair_smearing >= T::zero()) {
        return Err(KernelError::InvalidParameter { name: "r", reason: "distances must be non-negative".into() });
    }
    let s = pair_smearing;
    let k = spec.uv_cutoff;
    let two_pi2 = T::lit(2.0) * T::PI() * T::PI();
    if s > T::zero() && k * s >= T::lit(6.5) {
        // cutoff is irrelevant beyond exp(-42)
        if r <= s * T::lit(1e-5) {
            return Ok(gauss_sine_prime(dt, s) / (T::PI() * T::PI()) * T::lit(0.5));
        }
        let val = (gauss_sine(dt + r, s) - gauss_sine(dt - r, s)) / (T::lit(4.0) * T::PI() * T::PI() * r);
        return Ok(val);
    }
    let f = |q: T| {
        let damp = (-(q * q) * s * s).exp();
        let radial = if r > T::zero() { (q * r).sin() / r } else { q };
        damp * (q * dt).cos() * radial
    };
    let res = integrate_adaptive(f, T::zero(), k, Tolerance { rel: T::lit(1e-10), abs: T::lit(1e-14) }, 4000);
    Ok(res.value / two_pi2)
}

/// A spacetime point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event<T: nalgebra::Scalar> {
    pub t: T,
    pub x: Vector3<T>,
}

/// `a . N . b * H(dt, |x - y|)` for two source differences.
pub fn hadamard_contracted<T: Real>(
    spec: &KernelSpec<T>,
    a: &SourceTensor<T>,
    b: &SourceTensor<T>,
    x: &Event<T>,
    y: &Event<T>,
    pair_smearing: T,
) -> Result<T, KernelError> {
    let d = x.x - y.x;
    let h = hadamard_scalar(spec, x.t - y.t, d.dot(&d).sqrt(), pair_smearing)?;
    Ok(hadamard_tensor_factor(spec).contract(a, b)? * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_gr() -> KernelSpec<f64> {
        KernelSpec::gr(1e-3, 2000.0)
    }

    #[test]
    fn tensor_factor_components() {
        let em = KernelSpec::<f64>::em(100.0);
        let TensorFactor::Vector(r) = retarded_tensor_factor(&em) else { panic!() };
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(1, 1)], -1.0);
        let TensorFactor::Tensor(p) = retarded_tensor_factor(&spec_gr()) else { panic!() };
        let k2 = spec_gr().kappa_squared();
        assert!((p.get(0, 0, 0, 0) + k2 / 2.0).abs() < 1e-15);
        assert!((p.get(0, 1, 0, 1) - k2 / 2.0).abs() < 1e-15);
        assert!((p.get(0, 1, 1, 0) - p.get(0, 1, 0, 1)).abs() < 1e-15);
    }

    #[test]
    fn trace_of_gravity_factor() {
        // eta^{mu nu} P_{mu nu rho sigma} = -eta_{rho sigma} in four dimensions
        let p = Rank4::<f64>::trace_reversed(1.0);
        let eta = minkowski::<f64>();
        for r in 0..4 {
            for s in 0..4 {
                let tr: f64 = (0..4).map(|m| eta[(m, m)] * p.get(m, m, r, s)).sum();
                assert!((tr + eta[(r, s)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn contraction_rank_checked() {
        let f = hadamard_tensor_factor(&KernelSpec::<f64>::em(1.0));
        let a = SourceTensor::Current(Vector4::new(1.0, 0.5, 0.0, 0.0));
        let s = SourceTensor::Stress(Matrix4::identity());
        assert!((f.contract(&a, &a).unwrap() + 0.75).abs() < 1e-15);
        assert_eq!(f.contract(&a, &s), Err(KernelError::RankMismatch));
    }

    #[test]
    fn retarded_scalar_cases() {
        let mut spec = KernelSpec::<f64>::em(100.0);
        assert_eq!(retarded_scalar(&spec, 1.0, 0.0), Err(KernelError::CoincidentPoints));
        assert_eq!(retarded_scalar(&spec, 0.5, 1.0).unwrap(), 0.0);
        spec.smearing_width = 0.01;
        let on = retarded_scalar(&spec, 1.0, 1.0).unwrap();
        let expect = 1.0 / (0.01 * (2.0 * std::f64::consts::PI).sqrt()) / (4.0 * std::f64::consts::PI);
        assert!((on - expect).abs() < 1e-12 * expect);
        let inside = retarded_scalar(&spec, 0.5, 1.0).unwrap();
        assert!(inside <= (-(0.5f64 / 0.01).powi(2) / 2.0).exp());
    }

    #[test]
    fn dawson_reference_values() {
        // F(1) and the maximum at x = 0.9241388730
        assert!((dawson(1.0) - 0.538079506912768).abs() < 1e-14);
        assert!((dawson(0.924138873004591767) - 0.541044224635181).abs() < 1e-14);
        assert!((dawson(-2.5) + 0.223083722167436).abs() < 1e-14);
        assert!((dawson(0.1) - 0.099335992397852).abs() < 1e-15);
        assert!((dawson(50.0) * 100.0 - (1.0 + 1.0 / 5000.0 + 3.0 / 4.0 / 50f64.powi(4))).abs() < 1e-9);
    }

    #[test]
    fn dawson_satisfies_ode() {
        // F' = 1 - 2 x F
        for &x in &[0.19, 0.21, 0.7, 1.3, 3.0, 7.5] {
            let h = 1e-5;
            let d = (dawson(x + h) - dawson(x - h)) / (2.0 * h);
            assert!((d - (1.0 - 2.0 * x * dawson(x))).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn hadamard_closed_form_matches_quadrature() {
        let spec = KernelSpec::<f64>::em(4000.0);
        let coarse = KernelSpec::<f64>::em(6.0 / 0.01);
        for &(dt, r) in &[(0.0, 0.05), (0.3, 0.1), (0.1, 0.1), (0.05, 1e-9)] {
            let a = hadamard_scalar(&spec, dt, r, 0.01).unwrap();
            let b = hadamard_scalar(&coarse, dt, r, 0.01).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "dt {dt} r {r}: {a} vs {b}");
        }
    }

    #[test]
    fn hadamard_far_field_is_massless_form() {
        // -1 / (2 pi^2 (dt^2 - r^2)) away from the cone
        // smearing corrections are O(s^2 / (dt - r)^2)
        let spec = KernelSpec::<f64>::em(1e5);
        let (dt, r) = (2.0, 0.5);
        let h = hadamard_scalar(&spec, dt, r, 2e-4).unwrap();
        let expect = -1.0 / (2.0 * std::f64::consts::PI.powi(2) * (dt * dt - r * r));
        assert!((h - expect).abs() < 1e-6 * expect.abs(), "{h} vs {expect}");
    }

    #[test]
    fn pauli_jordan_small_r_continuous() {
        let s = 0.01f64;
        for &tau in &[0.0, 0.004, -0.012] {
            let a = pauli_jordan_smeared(tau, 0.999e-6, s);
            let b = pauli_jordan_smeared(tau, 1.001e-6, s);
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "tau {tau}");
        }
        assert_eq!(pauli_jordan_smeared(0.0, 0.5, s), 0.0);
        assert!(pauli_jordan_smeared(0.5, 0.5, s) > 0.0);
        assert!(pauli_jordan_smeared(-0.5, 0.5, s) < 0.0);
    }

    #[test]
    fn smeared_retarded_is_causal_and_normalised() {
        let (r, s) = (0.7f64, 0.02);
        assert_eq!(retarded_smeared(-0.3, r, s), 0.0);
        for tau in [0.1, 0.69, 0.75] {
            let odd = retarded_smeared(tau, r, s) - retarded_smeared(-tau, r, s);
            assert_eq!(odd, pauli_jordan_smeared(tau, r, s));
        }
        // trapezoid on a fine grid across the cone
        let h = s / 50.0;
        let total: f64 = (0..2000).map(|i| r - 20.0 * s + h * i as f64).map(|t| retarded_smeared(t, r, s) * h).sum();
        assert!((total * 4.0 * std::f64::consts::PI * r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contracted_uses_factor() {
        let spec = spec_gr();
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 1.0;
        let a = SourceTensor::Stress(m);
        let x = Event { t: 0.0, x: Vector3::zeros() };
        let y = Event { t: 0.0, x: Vector3::new(0.3, 0.0, 0.0) };
        let v = hadamard_contracted(&spec, &a, &a, &x, &y, 0.01).unwrap();
        let h = hadamard_scalar(&spec, 0.0, 0.3, 0.01).unwrap();
        assert!((v - spec.kappa_squared() / 2.0 * h).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::<f64>::gr(0.0, 1.0).validate().is_err());
        assert!(KernelSpec::<f64>::em(f64::INFINITY).validate().is_err());
        assert!(KernelSpec::<f64>::em(10.0).validate().is_ok());
    }
}
