use serde::Serialize;

use super::FunctionalError;
use crate::real::Real;

/// The five scalars that fix the reduced two-particle state, plus the
/// antisymmetric phase `theta = (phi_ab - phi_ba) / 2`.
///
/// `phi_xy` is the phase acquired by `x` from the retarded field of `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfluenceFunctionals<T> {
    pub gamma_a: T,
    pub gamma_b: T,
    pub gamma_c: T,
    pub phi_ab: T,
    pub phi_ba: T,
    pub theta: T,
}

impl<T: Real> InfluenceFunctionals<T> {
    /// Checked constructor: finite values, non-negative self terms and the
    /// Cauchy–Schwarz bound `|gamma_c| <= 2 sqrt(gamma_a gamma_b)`.
    pub fn new(gamma_a: T, gamma_b: T, gamma_c: T, phi_ab: T, phi_ba: T) -> Result<Self, FunctionalError> {
        let f = Self::unchecked(gamma_a, gamma_b, gamma_c, phi_ab, phi_ba);
        f.validate()?;
        Ok(f)
    }

    /// No validation; used to probe the algebra outside the physical region.
    pub fn unchecked(gamma_a: T, gamma_b: T, gamma_c: T, phi_ab: T, phi_ba: T) -> Self {
        let theta = (phi_ab - phi_ba) * T::lit(0.5);
        Self { gamma_a, gamma_b, gamma_c, phi_ab, phi_ba, theta }
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        let all = [self.gamma_a, self.gamma_b, self.gamma_c, self.phi_ab, self.phi_ba];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(FunctionalError::InvariantViolation("non-finite functional".into()));
        }
        if self.gamma_a < T::zero() || self.gamma_b < T::zero() {
            return Err(FunctionalError::InvariantViolation(format!(
                "negative self-decoherence: gamma_a = {}, gamma_b = {}",
                self.gamma_a, self.gamma_b
            )));
        }
        let bound = T::lit(2.0) * (self.gamma_a * self.gamma_b).sqrt();
        let slack = T::lit(1e-10) * (self.gamma_a + self.gamma_b);
        if self.gamma_c.abs() > bound + slack {
            return Err(FunctionalError::InvariantViolation(format!(
                "|gamma_c| = {} exceeds 2 sqrt(gamma_a gamma_b) = {}",
                self.gamma_c.abs(),
                bound
            )));
        }
        Ok(())
    }

    /// Every functional is quadratic in the couplings, so rescaling both
    /// couplings by `sqrt(s)` multiplies each functional by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self::unchecked(self.gamma_a * s, self.gamma_b * s, self.gamma_c * s, self.phi_ab * s, self.phi_ba * s)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> InfluenceFunctionals<U> {
        InfluenceFunctionals::unchecked(f(self.gamma_a), f(self.gamma_b), f(self.gamma_c), f(self.phi_ab), f(self.phi_ba))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_is_antisymmetric_half_difference() {
        let f = InfluenceFunctionals::new(0.3, 0.2, 0.1, 0.0, 0.4).unwrap();
        assert_eq!(f.theta, -0.2);
    }

    #[test]
    fn rejects_cauchy_schwarz_violation() {
        assert!(InfluenceFunctionals::new(0.1, 0.1, 0.3, 0.0, 0.0).is_err());
        assert!(InfluenceFunctionals::new(-0.1, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(InfluenceFunctionals::new(0.1, 0.1, 0.2, 0.0, 0.0).is_ok());
        assert!(InfluenceFunctionals::new(0.1, f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
