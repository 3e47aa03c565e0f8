//! Scalar abstraction shared by every layer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumAssign, NumCast};
use twofloat::TwoFloat;

/// Real scalar accepted by the numerical core.
///
/// Implemented for `f32`, `f64` and the double-double [`TwoFloat`]. The
/// assign-operator bounds are what nalgebra needs for vector arithmetic on
/// `Vector3<T>` / `Matrix4<T>`.
pub trait Real: Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal; panics only for values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    // Transcendentals used by the state algebra and the scans. The defaults
    // are the `Float` ones; `TwoFloat` overrides them because its own
    // versions are only accurate to about 1e-12.

    #[inline]
    fn xexp(self) -> Self {
        self.exp()
    }

    #[inline]
    fn xexp_m1(self) -> Self {
        self.exp_m1()
    }

    #[inline]
    fn xsin(self) -> Self {
        self.sin()
    }

    #[inline]
    fn xcos(self) -> Self {
        self.cos()
    }

    #[inline]
    fn xsinh(self) -> Self {
        self.sinh()
    }

    #[inline]
    fn xcosh(self) -> Self {
        self.cosh()
    }

    #[inline]
    fn xasin(self) -> Self {
        self.asin()
    }

    #[inline]
    fn xasinh(self) -> Self {
        self.asinh()
    }

    #[inline]
    fn xln(self) -> Self {
        self.ln()
    }
}

impl Real for f32 {}
impl Real for f64 {}

impl Real for TwoFloat {
    fn xexp(self) -> Self {
        dd::exp(self)
    }

    fn xexp_m1(self) -> Self {
        dd::exp_m1(self)
    }

    fn xsin(self) -> Self {
        dd::sin_cos(self).0
    }

    fn xcos(self) -> Self {
        dd::sin_cos(self).1
    }

    fn xsinh(self) -> Self {
        (dd::exp_m1(self) - dd::exp_m1(-self)) * dd::d(0.5)
    }

    fn xcosh(self) -> Self {
        (dd::exp(self) + dd::exp(-self)) * dd::d(0.5)
    }

    fn xasin(self) -> Self {
        let mut y = dd::d(self.hi().asin());
        for _ in 0..2 {
            let (s, c) = dd::sin_cos(y);
            if c == dd::d(0.0) {
                break;
            }
            y -= (s - self) / c;
        }
        y
    }

    fn xasinh(self) -> Self {
        let mut y = dd::d(self.hi().asinh());
        for _ in 0..2 {
            y -= (y.xsinh() - self) / y.xcosh();
        }
        y
    }

    fn xln(self) -> Self {
        let mut y = dd::d(self.hi().ln());
        for _ in 0..2 {
            y = y - dd::d(1.0) + self * dd::exp(-y);
        }
        y
    }
}

/// Double-double kernels built on the exact `TwoFloat` arithmetic.
mod dd {
    use twofloat::TwoFloat as D;

    pub(super) fn d(x: f64) -> D {
        <D as From<f64>>::from(x)
    }

    fn ln2() -> D {
        d(std::f64::consts::LN_2) + d(2.319_046_813_846_299_6e-17)
    }

    fn half_pi() -> D {
        d(std::f64::consts::FRAC_PI_2) + d(6.123_233_995_736_766e-17)
    }

    /// `exp(r) - 1` for `|r| <= 0.36` by scaling, Taylor series and squaring.
    fn expm1_reduced(r: D) -> D {
        let r = r * d(1.0 / 1024.0);
        let mut term = r;
        let mut sum = r;
        for n in 2..12 {
            term = term * r / d(n as f64);
            sum += term;
        }
        for _ in 0..10 {
            sum = sum * (d(2.0) + sum);
        }
        sum
    }

    pub(super) fn exp(x: D) -> D {
        let h = x.hi();
        if h > 709.0 {
            return d(f64::INFINITY);
        }
        if h < -745.0 {
            return d(0.0);
        }
        let k = (h / std::f64::consts::LN_2).round();
        let r = x - ln2() * d(k);
        (d(1.0) + expm1_reduced(r)) * d(2f64.powi(k as i32))
    }

    pub(super) fn exp_m1(x: D) -> D {
        if x.hi().abs() <= 0.36 {
            expm1_reduced(x)
        } else {
            exp(x) - d(1.0)
        }
    }

    pub(super) fn sin_cos(x: D) -> (D, D) {
        let k = (x.hi() / std::f64::consts::FRAC_PI_2).round();
        let r = x - half_pi() * d(k);
        let r2 = r * r;
        let (mut s, mut st) = (r, r);
        let (mut c, mut ct) = (d(1.0), d(1.0));
        for n in 1..16 {
            let m = 2.0 * n as f64;
            st = -st * r2 / d(m * (m + 1.0));
            ct = -ct * r2 / d((m - 1.0) * m);
            s += st;
            c += ct;
        }
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

/// Extended-precision scalar used to re-check near-boundary results.
pub type Extended = TwoFloat;

#[cfg(test)]
mod tests {
    use super::*;

    fn sinh_pi<T: Real>(x: T) -> T {
        x.sinh() * T::PI()
    }

    #[test]
    fn generic_code_runs_on_all_scalars() {
        let a = sinh_pi(0.3f64);
        let b = sinh_pi(0.3f32) as f64;
        let c = sinh_pi(Extended::lit(0.3)).as_f64();
        assert!((a - b).abs() < 1e-6);
        assert!((a - c).abs() < 1e-15);
    }

    #[test]
    fn extended_transcendentals_are_double_double() {
        // (hi, lo) splits of 50-digit references
        let e = |hi: f64, lo: f64| Extended::lit(hi) + Extended::lit(lo);
        let tol = Extended::lit(1e-30);
        let x = Extended::lit(1.7);

        assert!((x.xcosh() - e(2.828315457889967, -1.0024752332269377e-16)).abs() < tol);
        assert!((x.xln() - e(0.5306282510621704, -5.076541175216476e-18)).abs() < tol);
        assert!(((-x).xexp() - e(0.18268352405273466, -5.430659906894856e-18)).abs() < tol);
        assert!((Extended::lit(0.2).xasin() - e(0.2013579207903308, 6.185294261018391e-18)).abs() < tol);
        let ten = Extended::lit(10.0);
        assert!((ten.xsin() - e(-0.5440211108893698, -3.8949898668223557e-17)).abs() < tol);
        assert!((ten.xcos() - e(-0.8390715290764524, -1.4147119988953418e-17)).abs() < tol);
        let y = Extended::lit(0.8);
        assert!((y.xasinh().xsinh() - y).abs() < tol);
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.125), 0.125);
        assert_eq!(f32::from_usize(7), 7.0);
    }
}
