//! Reduced two-qubit state of the two superposed particles and its
//! entanglement and which-path diagnostics.
//!
//! Basis ordering is `|P Q>` with index `2 P + Q`, `A` the outer factor and
//! `R = 0`, `L = 1`.

use nalgebra::{Matrix2, Matrix4, RealField};
use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::functionals::InfluenceFunctionals;
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("functionals do not define a physical state (minimum eigenvalue {0:e})")]
    NotPhysical(f64),
    #[error("small-coupling radicand is negative ({0:e})")]
    NegativeRadicand(f64),
    #[error("invalid functionals: {0}")]
    InvalidFunctionals(String),
}

/// Tolerance on a negative eigenvalue of a state before it is rejected.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Boundary tolerance of every inequality check.
pub const CHECK_TOLERANCE: f64 = 1e-12;

/// Local phases common to both branches of a particle; they act as local
/// unitaries and leave every entanglement measure unchanged.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CommonPhases<T> {
    pub a: T,
    pub b: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState<T: nalgebra::Scalar> {
    rho: Matrix4<Complex<T>>,
}

fn branch_sign<T: Real>(i: usize) -> T {
    if i == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Density matrix built from the functionals without any physicality check.
///
/// `rho[(P Q), (P' Q')] = exp(-Gamma + i psi) / 4` with
/// `Gamma = dA^2 gamma_a + dB^2 gamma_b + dA dB gamma_c`, `dA = (p' - p) / 2`
/// and `psi = -((p' - p)(q' + q) phi_ab + (q' - q)(p' + p) phi_ba) / 8`.
pub fn density_matrix_raw<T: Real>(f: &InfluenceFunctionals<T>, phases: CommonPhases<T>) -> Matrix4<Complex<T>> {
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let eighth = T::lit(0.125);
    Matrix4::from_fn(|row, col| {
        let (p, q) = (branch_sign::<T>(row / 2), branch_sign::<T>(row % 2));
        let (pp, qp) = (branch_sign::<T>(col / 2), branch_sign::<T>(col % 2));
        let da = (pp - p) * half;
        let db = (qp - q) * half;
        let gamma = da * da * f.gamma_a + db * db * f.gamma_b + da * db * f.gamma_c;
        let psi = -eighth * ((pp - p) * (qp + q) * f.phi_ab + (qp - q) * (pp + p) * f.phi_ba)
            + half * ((p - pp) * phases.a + (q - qp) * phases.b);
        Complex::from_polar(quarter * (-gamma).xexp(), psi)
    })
}

impl<T: Real> TwoQubitState<T> {
    pub fn from_matrix_unchecked(rho: Matrix4<Complex<T>>) -> Self {
        Self { rho }
    }

    pub fn matrix(&self) -> &Matrix4<Complex<T>> {
        &self.rho
    }

    /// Transpose on the `A` factor.
    pub fn partial_transpose(&self) -> Matrix4<Complex<T>> {
        Matrix4::from_fn(|row, col| {
            let (a, b) = (row / 2, row % 2);
            let (ap, bp) = (col / 2, col % 2);
            self.rho[(2 * ap + b, 2 * a + bp)]
        })
    }

    pub fn reduced_a(&self) -> Matrix2<Complex<T>> {
        Matrix2::from_fn(|i, j| self.rho[(2 * i, 2 * j)] + self.rho[(2 * i + 1, 2 * j + 1)])
    }

    /// State of `B` conditioned on `A` being on branch `p` (0 = R, 1 = L).
    pub fn conditional_b(&self, p: usize) -> Matrix2<Complex<T>> {
        let norm = self.rho[(2 * p, 2 * p)].re + self.rho[(2 * p + 1, 2 * p + 1)].re;
        Matrix2::from_fn(|i, j| self.rho[(2 * p + i, 2 * p + j)] / norm)
    }

    /// Interference visibility of `A`: twice the modulus of its coherence.
    pub fn visibility(&self) -> T {
        T::lit(2.0) * self.reduced_a()[(0, 1)].norm()
    }

    /// Which-path distinguishability: trace distance between the two
    /// conditional states of `B`.
    pub fn distinguishability(&self) -> T {
        let d = self.conditional_b(0) - self.conditional_b(1);
        let (a, c) = (d[(0, 0)].re, d[(1, 1)].re);
        let off = d[(0, 1)].norm();
        let mean = (a + c) * T::lit(0.5);
        let rad = ((a - c) * (a - c) * T::lit(0.25) + off * off).sqrt();
        ((mean + rad).abs() + (mean - rad).abs()) * T::lit(0.5)
    }
}

fn hermitian_eigenvalues<T: Real + RealField>(m: Matrix4<Complex<T>>) -> [T; 4] {
    let herm = (m + m.adjoint()) * Complex::new(nalgebra::convert::<f64, T>(0.5), T::zero());
    let eig = herm.symmetric_eigenvalues();
    let mut out = [eig[0], eig[1], eig[2], eig[3]];
    out.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    out
}

impl<T: Real + RealField> TwoQubitState<T> {
    /// Eigenvalues of the state, ascending.
    pub fn spectrum(&self) -> [T; 4] {
        hermitian_eigenvalues(self.rho)
    }

    /// Eigenvalues of the partial transpose, ascending.
    pub fn pt_spectrum(&self) -> [T; 4] {
        hermitian_eigenvalues(self.partial_transpose())
    }

    pub fn pt_min_eigenvalue(&self) -> T {
        self.pt_spectrum()[0]
    }
}

/// Builds the reduced state and rejects functionals that do not give a
/// positive semidefinite density matrix.
pub fn build_density_matrix<T: Real + RealField>(f: &InfluenceFunctionals<T>) -> Result<TwoQubitState<T>, StateError> {
    build_density_matrix_with_phases(f, CommonPhases { a: T::zero(), b: T::zero() })
}

pub fn build_density_matrix_with_phases<T: Real + RealField>(
    f: &InfluenceFunctionals<T>,
    phases: CommonPhases<T>,
) -> Result<TwoQubitState<T>, StateError> {
    f.validate().map_err(|e| StateError::InvalidFunctionals(e.to_string()))?;
    let state = TwoQubitState { rho: density_matrix_raw(f, phases) };
    let min = state.spectrum()[0];
    if min < -nalgebra::convert::<f64, T>(PSD_TOLERANCE) {
        return Err(StateError::NotPhysical(Real::as_f64(min)));
    }
    Ok(state)
}

/// Closed-form eigenvalues of the partial transpose.
///
/// `minus`/`plus` form the pair that can go negative; the primed pair is
/// `(1 + e^{-S} cosh gamma_c +- sqrt(b')) / 4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PtSpectrum<T> {
    pub minus: T,
    pub plus: T,
    pub minus_prime: T,
    pub plus_prime: T,
}

impl<T: Real> PtSpectrum<T> {
    pub fn sorted(&self) -> [T; 4] {
        let mut v = [self.minus, self.plus, self.minus_prime, self.plus_prime];
        v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        v
    }
}

struct SpectrumParts<T> {
    s: T,
    a: T,
    b: T,
    b_prime: T,
    bracket: T,
}

fn spectrum_parts<T: Real>(f: &InfluenceFunctionals<T>) -> SpectrumParts<T> {
    let two = T::lit(2.0);
    let s = f.gamma_a + f.gamma_b;
    // a = 1 - e^{-S} cosh(gamma_c) without cancellation
    let a = -((f.gamma_c - s).xexp_m1() + (-f.gamma_c - s).xexp_m1()) * T::lit(0.5);
    let ea_minus_eb = (-f.gamma_b).xexp() * (f.gamma_b - f.gamma_a).xexp_m1();
    let half_sum = (f.phi_ab + f.phi_ba) * T::lit(0.25);
    let sh = f.gamma_c.xsinh();
    let common = ea_minus_eb * ea_minus_eb + (-two * s).xexp() * sh * sh;
    let four_es = T::lit(4.0) * (-s).xexp();
    let (sn, cs) = (half_sum.xsin(), half_sum.xcos());
    let shc = (f.gamma_c * T::lit(0.5)).xsinh();
    let bracket = f.gamma_a.xsinh() * f.gamma_b.xsinh() - shc * shc - sn * sn;
    SpectrumParts { s, a, b: common + four_es * sn * sn, b_prime: common + four_es * cs * cs, bracket }
}

pub fn pt_spectrum_closed_form<T: Real>(f: &InfluenceFunctionals<T>) -> PtSpectrum<T> {
    let p = spectrum_parts(f);
    let q = T::lit(0.25);
    let ch = (-p.s).xexp() * f.gamma_c.xcosh();
    PtSpectrum {
        minus: lambda_min_closed_form(f),
        plus: q * (p.a + p.b.sqrt()),
        minus_prime: q * (T::one() + ch - p.b_prime.sqrt()),
        plus_prime: q * (T::one() + ch + p.b_prime.sqrt()),
    }
}

/// `lambda_min = (1 - e^{-S} cosh gamma_c - sqrt(b)) / 4`, evaluated as
/// `e^{-S} (sinh gamma_a sinh gamma_b - sinh^2(gamma_c/2) - sin^2(phi/4)) / (a + sqrt(b))`
/// with `phi = phi_ab + phi_ba`.
pub fn lambda_min_closed_form<T: Real>(f: &InfluenceFunctionals<T>) -> T {
    let p = spectrum_parts(f);
    let root = p.b.sqrt();
    let den = p.a + root;
    if den > T::zero() {
        (-p.s).xexp() * p.bracket / den
    } else {
        T::lit(0.25) * (p.a - root)
    }
}

pub fn negativity<T: Real>(f: &InfluenceFunctionals<T>) -> T {
    (-lambda_min_closed_form(f)).max(T::zero())
}

/// Leading small-coupling form
/// `(S - sqrt(S^2 - 4 (gamma_a gamma_b - gamma_c^2/4 - phi^2/16))) / 4`
/// with `phi = phi_ab + phi_ba`.
pub fn lambda_min_small_coupling<T: Real>(f: &InfluenceFunctionals<T>) -> Result<T, StateError> {
    let s = f.gamma_a + f.gamma_b;
    let phi = f.phi_ab + f.phi_ba;
    let det = f.gamma_a * f.gamma_b - f.gamma_c * f.gamma_c * T::lit(0.25) - phi * phi / T::lit(16.0);
    let mut rad = s * s - T::lit(4.0) * det;
    if rad < T::zero() {
        if rad < -T::lit(1e-14) {
            return Err(StateError::NegativeRadicand(rad.as_f64()));
        }
        rad = T::zero();
    }
    Ok(T::lit(0.25) * (s - rad.sqrt()))
}

pub fn visibility<T: Real>(f: &InfluenceFunctionals<T>) -> T {
    (-f.gamma_a).xexp() * (f.phi_ab * T::lit(0.5)).xcos().abs()
}

pub fn distinguishability<T: Real>(f: &InfluenceFunctionals<T>) -> T {
    (-f.gamma_b).xexp() * (f.phi_ba * T::lit(0.5)).xsin().abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Complementarity<T> {
    pub sum: T,
    pub holds: bool,
}

/// `V^2 + D^2 <= 1`.
pub fn check_complementarity<T: Real>(f: &InfluenceFunctionals<T>) -> Complementarity<T> {
    let v = visibility(f);
    let d = distinguishability(f);
    let sum = v * v + d * d;
    Complementarity { sum, holds: sum <= T::one() + T::lit(CHECK_TOLERANCE) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SrCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// `gamma_a gamma_b >= gamma_c^2 / 4 + (phi_ab - phi_ba)^2 / 16`.
pub fn check_sr<T: Real>(f: &InfluenceFunctionals<T>) -> SrCheck<T> {
    let lhs = f.gamma_a * f.gamma_b;
    let d = f.phi_ab - f.phi_ba;
    let rhs = f.gamma_c * f.gamma_c * T::lit(0.25) + d * d / T::lit(16.0);
    SrCheck { lhs, rhs, holds: lhs >= rhs - T::lit(CHECK_TOLERANCE) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateDiagnostics<T> {
    pub lambda_min: T,
    pub negativity: T,
    pub entangled: bool,
    pub visibility: T,
    pub distinguishability: T,
    pub comp_sum: T,
    pub comp_holds: bool,
    pub sr_lhs: T,
    pub sr_rhs: T,
    pub sr_holds: bool,
}

impl<T: Real> StateDiagnostics<T> {
    pub fn from_functionals(f: &InfluenceFunctionals<T>) -> Self {
        let lambda_min = lambda_min_closed_form(f);
        let comp = check_complementarity(f);
        let sr = check_sr(f);
        Self {
            lambda_min,
            negativity: (-lambda_min).max(T::zero()),
            entangled: lambda_min < -T::lit(CHECK_TOLERANCE),
            visibility: visibility(f),
            distinguishability: distinguishability(f),
            comp_sum: comp.sum,
            comp_holds: comp.holds,
            sr_lhs: sr.lhs,
            sr_rhs: sr.rhs,
            sr_holds: sr.holds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Extended;

    fn f(ga: f64, gb: f64, gc: f64, pab: f64, pba: f64) -> InfluenceFunctionals<f64> {
        InfluenceFunctionals::unchecked(ga, gb, gc, pab, pba)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_functionals_give_product_state() {
        let s = build_density_matrix(&f(0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert!(close(s.matrix()[(r, c)].re, 0.25, 1e-15));
                assert_eq!(s.matrix()[(r, c)].im, 0.0);
            }
        }
        assert!(close(s.pt_min_eigenvalue(), 0.0, 1e-15));
        assert_eq!(lambda_min_closed_form(&f(0.0, 0.0, 0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn matrix_is_hermitian_unit_trace() {
        let s = density_matrix_raw(&f(0.3, 0.2, 0.1, 0.05, 0.4), CommonPhases { a: 0.7, b: -1.1 });
        assert!((s - s.adjoint()).norm() < 1e-15);
        let tr: f64 = (0..4).map(|i| s[(i, i)].re).sum();
        assert!(close(tr, 1.0, 1e-15));
    }

    #[test]
    fn eigenvalue_example_and_its_second_branch() {
        // (0.3, 0.2, 0.1, 0, 0.4)
        let fx = f(0.3, 0.2, 0.1, 0.0, 0.4);
        let st = TwoQubitState::from_matrix_unchecked(density_matrix_raw(&fx, CommonPhases::default()));
        let dense = st.pt_spectrum();
        let closed = pt_spectrum_closed_form(&fx).sorted();
        for i in 0..4 {
            assert!(close(dense[i], closed[i], 1e-13), "{dense:?} vs {closed:?}");
        }
        let lm = lambda_min_closed_form(&fx);
        assert!(close(lm, 0.0515504, 1e-6));
        // the smallest eigenvalue belongs to the primed pair here
        assert!(close(dense[0], 0.0141509, 1e-6));
        assert!(dense.iter().any(|&e| close(e, lm, 1e-13)));
    }

    #[test]
    fn trace_of_pt_spectrum_is_one() {
        let p = pt_spectrum_closed_form(&f(0.7, 1.3, -0.4, 0.2, 2.5));
        assert!(close(p.minus + p.plus + p.minus_prime + p.plus_prime, 1.0, 1e-14));
    }

    #[test]
    fn local_phases_do_not_change_spectra() {
        let fx = f(0.05, 0.04, 0.01, 0.0, 0.15);
        let a = build_density_matrix(&fx).unwrap();
        let b = build_density_matrix_with_phases(&fx, CommonPhases { a: 1.3, b: -0.4 }).unwrap();
        let (sa, sb) = (a.pt_spectrum(), b.pt_spectrum());
        for i in 0..4 {
            assert!(close(sa[i], sb[i], 1e-14));
        }
        assert!(close(a.visibility(), b.visibility(), 1e-15));
        assert!(close(a.distinguishability(), b.distinguishability(), 1e-15));
    }

    #[test]
    fn unphysical_functionals_rejected() {
        // satisfies Cauchy–Schwarz but violates the phase bound
        let err = build_density_matrix(&f(0.01, 0.01, 0.0, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, StateError::NotPhysical(_)));
        assert!(matches!(build_density_matrix(&f(0.1, 0.1, 0.5, 0.0, 0.0)), Err(StateError::InvalidFunctionals(_))));
    }

    #[test]
    fn visibility_and_distinguishability_match_definitions() {
        let fx = f(0.2, 0.1, 0.05, 0.3, 0.9);
        let st = TwoQubitState::from_matrix_unchecked(density_matrix_raw(&fx, CommonPhases::default()));
        assert!(close(st.visibility(), visibility(&fx), 1e-15));
        assert!(close(st.distinguishability(), distinguishability(&fx), 1e-15));
    }

    #[test]
    fn complementarity_saturates_without_decoherence() {
        let c = check_complementarity(&f(0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(close(c.sum, 1.0, 1e-15));
        assert!(c.holds);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let c = check_complementarity(&f(0.5, 0.5, 0.0, 0.0, half_pi));
        let expect = (-1f64).xexp() + (-1f64).xexp() * (half_pi / 2.0).xsin().powi(2);
        assert!(close(c.sum, expect, 1e-15) && c.sum < 1.0 && c.holds);
    }

    #[test]
    fn sr_check_is_total() {
        let bad = f(0.0, 0.0, 1.0, 0.0, 0.0);
        let r = check_sr(&bad);
        assert!(!r.holds);
        assert_eq!(r.rhs, 0.25);
    }

    #[test]
    fn stable_lambda_min_for_tiny_inputs() {
        let fx = f(1e-9, 2e-9, 1e-9, 0.0, 1e-9);
        let lm = lambda_min_closed_form(&fx);
        let ext = lambda_min_closed_form(&fx.map(Extended::lit)).as_f64();
        assert!(close(lm, ext, 1e-15 * ext.abs()), "{lm} vs {ext}");
        let small = lambda_min_small_coupling(&fx).unwrap();
        assert!(close(lm, small, 1e-6 * lm.abs()));
    }

    #[test]
    fn small_coupling_radicand_cannot_go_negative() {
        // the radicand equals (ga - gb)^2 + gc^2 + phi^2 / 4
        let fx = f(0.3, 0.3, 0.0, 0.0, 0.0);
        assert!(close(lambda_min_small_coupling(&fx).unwrap(), 0.15, 1e-15));
        assert_eq!(lambda_min_small_coupling(&f(0.0, 0.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn diagnostics_consistent() {
        let d = StateDiagnostics::from_functionals(&f(1e-4, 1e-4, 0.0, 0.0, 1e-3));
        assert!(d.entangled);
        assert!(!d.sr_holds);
        assert!(d.comp_holds);
        assert!(d.negativity > 0.0);
    }
}
