//! The five influence functionals of two branched sources.
//!
//! * `gamma_*` come from the Wightman cross-spectrum
//!   `W_XY = int d^3k / (2 (2 pi)^3 k) e^{-k^2 (s_X^2 + s_Y^2)/2} a_X(k) . N . a_Y(k)^*`,
//!   with `a_X` the Fourier transform of the source difference on shell:
//!   `gamma_X = W_XX / 2` and `gamma_c = Re W_AB`.
//! * `phi_XY` integrates the retarded kernel of the two Gaussian profiles over
//!   a band around the light cone; [`phi_point_limit`] is its `sigma -> 0`
//!   limit with the light-cone delta done analytically.
//! * `2 Im W_AB` is the commutator `phi_ab - phi_ba`, an independent check.

mod cone;
pub mod direct;
mod spectral;
mod tube;
mod types;

use nalgebra::Vector3;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use types::InfluenceFunctionals;

use crate::kernels::{KernelError, KernelSpec};
use crate::quadrature::QuadResult;
use crate::real::Real;
use crate::sources::{BranchedSource, SourceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("kernel cannot resolve source: k_max * sigma = {0} < 10")]
    Unresolved(f64),
    #[error("field types differ: {0}")]
    FieldTypeMismatch(String),
    #[error("sources must carry distinct labels")]
    SameLabel,
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("direct quadrature grid too large ({0} points per axis)")]
    GridTooLarge(usize),
}

/// Tolerances and grid controls for every quadrature in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Relative accuracy target per scalar.
    pub rel_tol: f64,
    /// Multiplier on the angular node counts.
    pub angular_oversampling: f64,
    /// Interval budget of one radial panel.
    pub max_intervals: usize,
    /// Time-grid points per smearing width for the direct double integrals.
    pub direct_points_per_width: f64,
    /// Cap on direct-grid points per axis.
    pub max_direct_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            angular_oversampling: 1.0,
            max_intervals: 200,
            direct_points_per_width: 6.0,
            max_direct_points: 40_000,
        }
    }
}

/// A computed scalar with its quadrature error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: Real> Estimate<T> {
    pub fn exact_zero() -> Self {
        Self { value: T::zero(), error: T::zero(), evaluations: 0, converged: true }
    }

    fn from_quad(q: &QuadResult<T>, scale: T) -> Self {
        Self { value: q.value * scale, error: q.error * scale, evaluations: q.evaluations, converged: q.converged }
    }
}

/// All five functionals with per-scalar error estimates and the spectral
/// commutator `2 Im W_AB`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalsReport<T> {
    pub functionals: InfluenceFunctionals<T>,
    pub gamma_a: Estimate<T>,
    pub gamma_b: Estimate<T>,
    pub gamma_c: Estimate<T>,
    pub phi_ab: Estimate<T>,
    pub phi_ba: Estimate<T>,
    pub commutator_spectral: Estimate<T>,
}

impl<T: Real> FunctionalsReport<T> {
    pub fn all_converged(&self) -> bool {
        [self.gamma_a, self.gamma_b, self.gamma_c, self.phi_ab, self.phi_ba].iter().all(|e| e.converged)
    }
}

fn check_field<T: Real>(spec: &KernelSpec<T>, srcs: &[&BranchedSource<T>]) -> Result<(), FunctionalError> {
    spec.validate()?;
    for s in srcs {
        if s.field_type() != spec.field_type {
            return Err(FunctionalError::FieldTypeMismatch(format!(
                "source {} is {} but the kernel is {}",
                s.label(),
                s.field_type(),
                spec.field_type
            )));
        }
    }
    Ok(())
}

fn resolution_guard<T: Real>(spec: &KernelSpec<T>, srcs: &[&BranchedSource<T>]) -> Result<(), FunctionalError> {
    for s in srcs {
        let r = spec.uv_cutoff * s.smearing_width();
        if r < T::lit(10.0) {
            return Err(FunctionalError::Unresolved(r.as_f64()));
        }
    }
    Ok(())
}

/// Wightman cross-spectrum `W_XY` with componentwise error estimate.
pub fn cross_spectrum<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<QuadResult<Complex<T>>, FunctionalError> {
    check_field(spec, &[x, y])?;
    resolution_guard(spec, &[x, y])?;
    Ok(spectral::cross_spectrum(x, y, spec, cfg, None))
}

/// `gamma_X = W_XX / 2`.
pub fn gamma_self<T: Real>(src: &BranchedSource<T>, spec: &KernelSpec<T>) -> Result<T, FunctionalError> {
    Ok(gamma_self_estimate(src, spec, &QuadratureConfig::default())?.value)
}

pub fn gamma_self_estimate<T: Real>(
    src: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<Estimate<T>, FunctionalError> {
    check_field(spec, &[src])?;
    resolution_guard(spec, &[src])?;
    if src.is_degenerate() {
        return Ok(Estimate::exact_zero());
    }
    let w = spectral::cross_spectrum(src, src, spec, cfg, None);
    let re = QuadResult { value: w.value.re, error: w.error.re, evaluations: w.evaluations, converged: w.converged };
    Ok(Estimate::from_quad(&re, T::lit(0.5)))
}

/// `gamma_c = Re W_AB`.
pub fn gamma_cross<T: Real>(a: &BranchedSource<T>, b: &BranchedSource<T>, spec: &KernelSpec<T>) -> Result<T, FunctionalError> {
    Ok(cross_spectrum(a, b, spec, &QuadratureConfig::default())?.value.re)
}

/// `phi_XY`: phase of the receiver `x` (first argument, field point) due to
/// the retarded field of `y` (second argument, source point).
pub fn phi_directed<T: Real>(x: &BranchedSource<T>, y: &BranchedSource<T>, spec: &KernelSpec<T>) -> Result<T, FunctionalError> {
    Ok(phi_directed_estimate(x, y, spec, &QuadratureConfig::default())?.value)
}

pub fn phi_directed_estimate<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<Estimate<T>, FunctionalError> {
    check_field(spec, &[x, y])?;
    resolution_guard(spec, &[x, y])?;
    if x.label() == y.label() {
        return Err(FunctionalError::SameLabel);
    }
    if x.is_degenerate() || y.is_degenerate() {
        return Ok(Estimate::exact_zero());
    }
    tube::phi_tube(x, y, spec, cfg)
}

/// `phi_XY` for point worldlines: the light-cone delta is integrated
/// exactly and the source profiles are ignored. Differs from
/// [`phi_directed`] by `O(sigma^2 / d^2)`.
pub fn phi_point_limit<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
) -> Result<Estimate<T>, FunctionalError> {
    check_field(spec, &[x, y])?;
    if x.label() == y.label() {
        return Err(FunctionalError::SameLabel);
    }
    if x.is_degenerate() || y.is_degenerate() {
        return Ok(Estimate::exact_zero());
    }
    cone::phi_cone(x, y, spec)
}

/// Computes all five functionals; see [`compute_all_with_diagnostics`].
pub fn compute_all<T: Real>(
    a: &BranchedSource<T>,
    b: &BranchedSource<T>,
    spec: &KernelSpec<T>,
) -> Result<InfluenceFunctionals<T>, FunctionalError> {
    Ok(compute_all_with_diagnostics(a, b, spec, &QuadratureConfig::default())?.functionals)
}

pub fn compute_all_with_diagnostics<T: Real>(
    a: &BranchedSource<T>,
    b: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<FunctionalsReport<T>, FunctionalError> {
    check_field(spec, &[a, b])?;
    resolution_guard(spec, &[a, b])?;
    if a.label() == b.label() {
        return Err(FunctionalError::SameLabel);
    }
    let gamma_a = gamma_self_estimate(a, spec, cfg)?;
    let gamma_b = gamma_self_estimate(b, spec, cfg)?;
    let (gamma_c, commutator_spectral) = if a.is_degenerate() || b.is_degenerate() {
        (Estimate::exact_zero(), Estimate::exact_zero())
    } else {
        let floor = (gamma_a.value.abs() * gamma_b.value.abs()).sqrt() * T::lit(1e-9) * T::lit(cfg.rel_tol);
        let w = spectral::cross_spectrum(a, b, spec, cfg, Some(Complex::new(floor, floor)));
        (
            Estimate { value: w.value.re, error: w.error.re, evaluations: w.evaluations, converged: w.converged },
            Estimate {
                value: T::lit(2.0) * w.value.im,
                error: T::lit(2.0) * w.error.im,
                evaluations: w.evaluations,
                converged: w.converged,
            },
        )
    };
    let phi_ab = phi_directed_estimate(a, b, spec, cfg)?;
    let phi_ba = phi_directed_estimate(b, a, spec, cfg)?;
    for (name, g) in [("gamma_a", gamma_a), ("gamma_b", gamma_b)] {
        if g.value < -(g.error + T::lit(1e-300)) {
            return Err(FunctionalError::InvariantViolation(format!(
                "{name} = {} is negative beyond its error estimate {}",
                g.value, g.error
            )));
        }
    }
    let ga = gamma_a.value.max(T::zero());
    let gb = gamma_b.value.max(T::zero());
    let bound = T::lit(2.0) * (ga * gb).sqrt();
    let slack = gamma_c.error + (gamma_a.error * gb + gamma_b.error * ga) / bound.max(T::min_positive_value());
    if gamma_c.value.abs() > bound + slack + T::lit(1e-12) * (ga + gb) {
        return Err(FunctionalError::InvariantViolation(format!(
            "|gamma_c| = {} exceeds 2 sqrt(gamma_a gamma_b) = {}",
            gamma_c.value.abs(),
            bound
        )));
    }
    let mut functionals = InfluenceFunctionals::unchecked(ga, gb, gamma_c.value, phi_ab.value, phi_ba.value);
    if gamma_c.value.abs() > bound {
        // inside the quadrature tolerance: clip onto the bound
        functionals.gamma_c = bound * gamma_c.value.signum();
    }
    Ok(FunctionalsReport { functionals, gamma_a, gamma_b, gamma_c, phi_ab, phi_ba, commutator_spectral })
}

/// Axis for the angular integrals and whether every displacement and
/// velocity of both sources lies along it.
pub(crate) fn polar_frame<T: Real>(x: &BranchedSource<T>, y: &BranchedSource<T>) -> (Vector3<T>, bool) {
    let d = x.center() - y.center();
    let dn = d.dot(&d).sqrt();
    let mut axis = if dn > T::zero() { d / dn } else { Vector3::zeros() };
    let mut vectors: Vec<Vector3<T>> = Vec::new();
    for src in [x, y] {
        let c = src.center();
        for (_, w) in src.branches() {
            for s in w.samples() {
                vectors.push(s.x - c);
                vectors.push(s.v);
            }
        }
    }
    if dn == T::zero() {
        if let Some(v) = vectors.iter().copied().max_by(|a, b| a.dot(a).partial_cmp(&b.dot(b)).unwrap_or(std::cmp::Ordering::Equal)) {
            let n = v.dot(&v).sqrt();
            if n > T::zero() {
                axis = v / n;
            }
        }
        if axis == Vector3::zeros() {
            axis = Vector3::new(T::zero(), T::zero(), T::one());
        }
    }
    let collinear = vectors.iter().all(|v| {
        let n2 = v.dot(v);
        let c = v.cross(&axis);
        c.dot(&c) <= T::lit(1e-24) * n2
    });
    (axis, collinear)
}

#[cfg(test)]
mod tests;
