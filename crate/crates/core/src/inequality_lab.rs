//! Numerical study of the causal inequalities: the auxiliary functions F and
//! G on the unit cube, the positive coefficient C, and the nesting
//! `SR => non-entangled => complementarity` over sampled tuples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::functionals::InfluenceFunctionals;
use crate::quantum_state::CHECK_TOLERANCE;
use crate::real::{Extended, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("argument `{name}` = {value} outside the open unit interval")]
    Domain { name: &'static str, value: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("invalid scan parameter: {0}")]
    InvalidParameter(String),
}

/// Functionals restricted to the causal case `phi_ab = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CausalTuple<T> {
    pub gamma_a: T,
    pub gamma_b: T,
    pub gamma_c: T,
    pub phi_ba: T,
}

impl<T: Real> CausalTuple<T> {
    pub fn new(gamma_a: T, gamma_b: T, gamma_c: T, phi_ba: T) -> Self {
        Self { gamma_a, gamma_b, gamma_c, phi_ba }
    }

    pub fn functionals(&self) -> InfluenceFunctionals<T> {
        InfluenceFunctionals::unchecked(self.gamma_a, self.gamma_b, self.gamma_c, T::zero(), self.phi_ba)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> CausalTuple<U> {
        CausalTuple::new(f(self.gamma_a), f(self.gamma_b), f(self.gamma_c), f(self.phi_ba))
    }

    fn check(&self) -> Result<(), LabError> {
        let vals = [self.gamma_a, self.gamma_b, self.gamma_c, self.phi_ba];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvariantViolation("non-finite tuple".into()));
        }
        if self.gamma_a < T::zero() || self.gamma_b < T::zero() || self.gamma_a + self.gamma_b < self.gamma_c.abs() {
            return Err(LabError::InvariantViolation(format!(
                "need gamma_a, gamma_b >= 0 and gamma_a + gamma_b >= |gamma_c|, got ({}, {}, {})",
                self.gamma_a, self.gamma_b, self.gamma_c
            )));
        }
        Ok(())
    }
}

/// `sinh(gamma_a) sinh(gamma_b) - sinh^2(gamma_c / 2) - sin^2(phi_ba / 4)`.
pub fn lambda_bar<T: Real>(t: &CausalTuple<T>) -> T {
    let h = (t.gamma_c * T::lit(0.5)).xsinh();
    let s = (t.phi_ba * T::lit(0.25)).xsin();
    t.gamma_a.xsinh() * t.gamma_b.xsinh() - h * h - s * s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientC<T> {
    pub value: T,
    /// Set for the all-zero tuple, where the defining ratio is 0/0 and
    /// `value` is the `+inf` sentinel.
    pub degenerate: bool,
}

/// `C = e^{-S} / (1 - e^{-S} cosh gamma_c + sqrt(b))`, the positive factor in
/// `lambda_min = C * lambda_bar`.
pub fn coefficient_c<T: Real>(t: &CausalTuple<T>) -> Result<CoefficientC<T>, LabError> {
    t.check()?;
    let s = t.gamma_a + t.gamma_b;
    let a = -((t.gamma_c - s).xexp_m1() + (-t.gamma_c - s).xexp_m1()) * T::lit(0.5);
    let ea = (-t.gamma_a).xexp();
    let eb = (-t.gamma_b).xexp();
    let sn = (t.phi_ba * T::lit(0.25)).xsin();
    let sh = t.gamma_c.xsinh();
    let b = (ea - eb) * (ea - eb) + T::lit(4.0) * (-s).xexp() * sn * sn + (-T::lit(2.0) * s).xexp() * sh * sh;
    let den = a + b.sqrt();
    if den == T::zero() {
        return Ok(CoefficientC { value: T::infinity(), degenerate: true });
    }
    Ok(CoefficientC { value: (-s).xexp() / den, degenerate: false })
}

/// `C * lambda_bar`; zero for the degenerate all-zero tuple.
pub fn lambda_min_factored<T: Real>(t: &CausalTuple<T>) -> Result<T, LabError> {
    let c = coefficient_c(t)?;
    if c.degenerate {
        return Ok(T::zero());
    }
    Ok(c.value * lambda_bar(t))
}

fn open_unit<T: Real>(name: &'static str, v: T) -> Result<(), LabError> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(LabError::Domain { name, value: v.as_f64() })
    }
}

/// `F(x, y, z) = (1/x - x)(1/(yz) - yz)/4 - sinh^2 sqrt(ln x ln y) - sin^2 sqrt(ln x ln z)`.
///
/// Evaluated through `u = -ln x`, `v = -ln y`, `w = -ln z` as
/// `sinh u sinh(v + w) - sinh^2 sqrt(uv) - sin^2 sqrt(uw)`, which avoids the
/// cancellation in `1/x - x` near the `x -> 1` face.
pub fn f_function<T: Real>(x: T, y: T, z: T) -> Result<T, LabError> {
    open_unit("x", x)?;
    open_unit("y", y)?;
    open_unit("z", z)?;
    let (u, v, w) = (-x.xln(), -y.xln(), -z.xln());
    let a = (u * v).sqrt().xsinh();
    let b = (u * w).sqrt().xsin();
    Ok(u.xsinh() * (v + w).xsinh() - a * a - b * b)
}

/// `G(x, y, z) = 1 - x^2 - sin^2(2 asin z) / (c + sqrt(1 + c^2))^2` with
/// `c = (1/y - y)^2 / (2 (1/x - x)) + 2 z^2 / (1/x - x)`.
pub fn g_function<T: Real>(x: T, y: T, z: T) -> Result<T, LabError> {
    open_unit("x", x)?;
    open_unit("y", y)?;
    open_unit("z", z)?;
    let two = T::lit(2.0);
    let gx = two * (-x.xln()).xsinh();
    let gy = two * (-y.xln()).xsinh();
    let c = gy * gy / (two * gx) + two * z * z / gx;
    let s2 = T::lit(4.0) * z * z * (T::one() - z) * (T::one() + z);
    let d = c + (T::one() + c * c).sqrt();
    Ok((T::one() - x) * (T::one() + x) - s2 / (d * d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ScanFunction {
    F,
    G,
}

impl ScanFunction {
    pub fn eval<T: Real>(self, x: T, y: T, z: T) -> Result<T, LabError> {
        match self {
            ScanFunction::F => f_function(x, y, z),
            ScanFunction::G => g_function(x, y, z),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScanFunction::F => "F",
            ScanFunction::G => "G",
        }
    }
}

impl std::str::FromStr for ScanFunction {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" | "f" => Ok(ScanFunction::F),
            "G" | "g" => Ok(ScanFunction::G),
            other => Err(LabError::InvalidParameter(format!("unknown function `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub point: [f64; 3],
    pub value: f64,
    pub extended_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub function: ScanFunction,
    pub grid_per_axis: usize,
    pub margin: f64,
    pub evaluations: usize,
    pub min_value: f64,
    pub argmin: [f64; 3],
    /// Points negative in double precision.
    pub raw_negatives: usize,
    /// Negatives that survive re-evaluation in extended precision.
    pub negatives: usize,
    pub counterexamples: Vec<Counterexample>,
    /// Values along `x -> 1` at the argmin's `(y, z)`, for the infimum check.
    pub boundary_probe: Vec<(f64, f64)>,
    pub boundary_monotone: bool,
}

/// Uniform axis samples on `[margin, 1 - margin]`.
pub fn axis_points(grid: usize, margin: f64) -> Vec<f64> {
    (0..grid).map(|i| margin + (1.0 - 2.0 * margin) * i as f64 / (grid - 1) as f64).collect()
}

fn recheck(function: ScanFunction, p: [f64; 3]) -> f64 {
    let e = |v: f64| Extended::lit(v);
    function.eval(e(p[0]), e(p[1]), e(p[2])).map(|v| v.as_f64()).unwrap_or(f64::NAN)
}

/// Values approaching the `x -> 1` face at fixed `(y, z)`: `x = 1 - 10^-j`.
pub fn boundary_limit(function: ScanFunction, y: f64, z: f64, depth: u32) -> Vec<(f64, f64)> {
    (1..=depth)
        .map(|j| {
            let x = 1.0 - 10f64.powi(-(j as i32));
            (x, function.eval(x, y, z).unwrap_or(f64::NAN))
        })
        .collect()
}

/// Evaluates `function` on the uniform grid over `[margin, 1 - margin]^3`.
pub fn scan_nonnegativity(function: ScanFunction, grid_per_axis: usize, margin: f64) -> Result<ScanReport, LabError> {
    if grid_per_axis < 2 {
        return Err(LabError::InvalidParameter("grid_per_axis must be at least 2".into()));
    }
    if !(margin > 0.0 && margin < 0.5) {
        return Err(LabError::InvalidParameter("margin must lie in (0, 0.5)".into()));
    }
    let pts = axis_points(grid_per_axis, margin);
    // one slab per x value; merged in index order
    let slabs: Vec<(f64, [f64; 3], Vec<([f64; 3], f64)>)> = pts
        .par_iter()
        .map(|&x| {
            let mut min = f64::INFINITY;
            let mut arg = [x, pts[0], pts[0]];
            let mut neg = Vec::new();
            for &y in &pts {
                for &z in &pts {
                    let v = function.eval(x, y, z).expect("grid lies inside the open cube");
                    if v < min {
                        min = v;
                        arg = [x, y, z];
                    }
                    if v < 0.0 {
                        neg.push(([x, y, z], v));
                    }
                }
            }
            (min, arg, neg)
        })
        .collect();
    let mut min_value = f64::INFINITY;
    let mut argmin = [0.0; 3];
    let mut raw = Vec::new();
    for (m, a, n) in slabs {
        if m < min_value {
            min_value = m;
            argmin = a;
        }
        raw.extend(n);
    }
    let raw_negatives = raw.len();
    let counterexamples: Vec<Counterexample> = raw
        .iter()
        .filter_map(|&(p, v)| {
            let ext = recheck(function, p);
            (ext < 0.0).then_some(Counterexample { point: p, value: v, extended_value: ext })
        })
        .collect();
    let boundary_probe = boundary_limit(function, argmin[1], argmin[2], 8);
    let boundary_monotone = boundary_probe.windows(2).all(|w| w[1].1 <= w[0].1) && boundary_probe.iter().all(|p| p.1 >= 0.0);
    Ok(ScanReport {
        function,
        grid_per_axis,
        margin,
        evaluations: grid_per_axis.pow(3),
        min_value,
        argmin,
        raw_negatives,
        negatives: counterexamples.len(),
        counterexamples,
        boundary_probe,
        boundary_monotone,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSample<T> {
    pub gamma_a: T,
    pub gamma_b: T,
    pub gamma_c: T,
    pub phi_ba: T,
    pub sr_holds: bool,
    pub nonentangled: bool,
    pub comp_holds: bool,
    pub cauchy_schwarz: bool,
}

/// `gamma_a gamma_b - gamma_c^2 / 4 - phi_ba^2 / 16`.
pub fn sr_margin<T: Real>(t: &CausalTuple<T>) -> T {
    t.gamma_a * t.gamma_b - t.gamma_c * t.gamma_c * T::lit(0.25) - t.phi_ba * t.phi_ba / T::lit(16.0)
}

/// `1 - e^{-2 gamma_a} - e^{-2 gamma_b} sin^2(phi_ba / 2)`.
pub fn comp_margin<T: Real>(t: &CausalTuple<T>) -> T {
    let s = (t.phi_ba * T::lit(0.5)).xsin();
    -(-T::lit(2.0) * t.gamma_a).xexp_m1() - (-T::lit(2.0) * t.gamma_b).xexp() * s * s
}

/// Classifies a tuple by the three causal conditions. Total: tuples outside
/// the Cauchy–Schwarz interval are classified and flagged.
pub fn classify_region<T: Real>(t: &CausalTuple<T>) -> RegionSample<T> {
    let tol = T::lit(CHECK_TOLERANCE);
    let nonentangled = match lambda_min_factored(t) {
        Ok(l) => l >= -tol,
        // outside gamma_a + gamma_b >= |gamma_c| the factor C is undefined;
        // fall back to the sign of the bracket
        Err(_) => lambda_bar(t) >= -tol,
    };
    let cs = t.gamma_c.abs() <= T::lit(2.0) * (t.gamma_a * t.gamma_b).sqrt();
    RegionSample {
        gamma_a: t.gamma_a,
        gamma_b: t.gamma_b,
        gamma_c: t.gamma_c,
        phi_ba: t.phi_ba,
        sr_holds: sr_margin(t) >= -tol,
        nonentangled,
        comp_holds: comp_margin(t) >= -tol,
        cauchy_schwarz: cs,
    }
}

/// Counter-based sampler: tuple `i` depends only on `(seed, i)`.
///
/// `gamma_a`, `gamma_b` log-uniform on `[gamma_min, gamma_max]`, `gamma_c`
/// uniform in the Cauchy–Schwarz interval, `phi_ba` uniform on `[-phi_max, phi_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CausalSampler {
    pub seed: u64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub phi_max: f64,
    pub log_uniform: bool,
}

const WORDS_PER_SAMPLE: u128 = 8;

impl CausalSampler {
    /// Sampling measure of the inclusion-chain study.
    pub fn chain(seed: u64) -> Self {
        Self { seed, gamma_min: 1e-3, gamma_max: 3.0, phi_max: 2.0 * std::f64::consts::PI, log_uniform: true }
    }

    /// Sampling measure of the state-algebra oracle: uniform on `(0, 3]`.
    pub fn uniform(seed: u64) -> Self {
        Self { seed, gamma_min: 0.0, gamma_max: 3.0, phi_max: 2.0 * std::f64::consts::PI, log_uniform: false }
    }

    fn uniforms(&self, index: u64) -> [f64; 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(index as u128 * WORDS_PER_SAMPLE);
        [rng.random(), rng.random(), rng.random(), rng.random()]
    }

    fn gamma(&self, u: f64) -> f64 {
        if self.log_uniform {
            (self.gamma_min.xln() + u * (self.gamma_max.xln() - self.gamma_min.xln())).xexp()
        } else {
            // (0, max]: u in [0, 1) maps to (0, max]
            self.gamma_max * (1.0 - u)
        }
    }

    pub fn sample(&self, index: u64) -> CausalTuple<f64> {
        let u = self.uniforms(index);
        let ga = self.gamma(u[0]);
        let gb = self.gamma(u[1]);
        let bound = 2.0 * (ga * gb).sqrt();
        CausalTuple::new(ga, gb, bound * (2.0 * u[2] - 1.0), self.phi_max * (2.0 * u[3] - 1.0))
    }

    /// A general tuple with an independent `phi_ab` drawn from the same range.
    pub fn sample_general(&self, index: u64) -> InfluenceFunctionals<f64> {
        let t = self.sample(index);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_word_pos(index as u128 * 2);
        let u: f64 = rng.random();
        InfluenceFunctionals::unchecked(t.gamma_a, t.gamma_b, t.gamma_c, self.phi_max * (2.0 * u - 1.0), t.phi_ba)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub index: u64,
    pub tuple: CausalTuple<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ChainReport {
    pub samples: u64,
    pub seed: u64,
    pub sr_count: u64,
    pub nonentangled_count: u64,
    pub comp_count: u64,
    /// Populations of the eight (sr, nonentangled, comp) combinations,
    /// indexed by `4 sr + 2 nonentangled + comp`.
    pub region_counts: [u64; 8],
    /// `sr && !nonentangled` in double precision / after extended re-check.
    pub raw_counterexamples_c1: u64,
    pub counterexamples_c1: u64,
    /// `nonentangled && !comp` in double precision / after extended re-check.
    pub raw_counterexamples_c2: u64,
    pub counterexamples_c2: u64,
    /// `nonentangled && !sr`: the first region is strictly smaller.
    pub gap1_count: u64,
    pub gap1_witness: Option<Witness>,
    /// `comp && !nonentangled`: the second region is strictly smaller.
    pub gap2_count: u64,
    pub gap2_witness: Option<Witness>,
    pub counterexample_examples: Vec<Witness>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.counterexamples_c1 == 0 && self.counterexamples_c2 == 0 && self.gap1_count > 0 && self.gap2_count > 0
    }

    fn absorb(&mut self, other: ChainReport) {
        self.samples += other.samples;
        self.sr_count += other.sr_count;
        self.nonentangled_count += other.nonentangled_count;
        self.comp_count += other.comp_count;
        for i in 0..8 {
            self.region_counts[i] += other.region_counts[i];
        }
        self.raw_counterexamples_c1 += other.raw_counterexamples_c1;
        self.counterexamples_c1 += other.counterexamples_c1;
        self.raw_counterexamples_c2 += other.raw_counterexamples_c2;
        self.counterexamples_c2 += other.counterexamples_c2;
        self.gap1_count += other.gap1_count;
        self.gap2_count += other.gap2_count;
        self.gap1_witness = self.gap1_witness.or(other.gap1_witness);
        self.gap2_witness = self.gap2_witness.or(other.gap2_witness);
        self.counterexample_examples.extend(other.counterexample_examples);
        self.counterexample_examples.truncate(16);
    }
}

const CHUNK: u64 = 1 << 14;

fn chain_chunk(sampler: &CausalSampler, start: u64, end: u64) -> ChainReport {
    let mut r = ChainReport::default();
    for i in start..end {
        let t = sampler.sample(i);
        let c = classify_region(&t);
        r.samples += 1;
        r.sr_count += c.sr_holds as u64;
        r.nonentangled_count += c.nonentangled as u64;
        r.comp_count += c.comp_holds as u64;
        r.region_counts[4 * c.sr_holds as usize + 2 * c.nonentangled as usize + c.comp_holds as usize] += 1;
        let c1 = c.sr_holds && !c.nonentangled;
        let c2 = c.nonentangled && !c.comp_holds;
        if c1 || c2 {
            let e = classify_region(&t.map(Extended::lit));
            let confirmed1 = c1 && e.sr_holds && !e.nonentangled;
            let confirmed2 = c2 && e.nonentangled && !e.comp_holds;
            r.raw_counterexamples_c1 += c1 as u64;
            r.raw_counterexamples_c2 += c2 as u64;
            r.counterexamples_c1 += confirmed1 as u64;
            r.counterexamples_c2 += confirmed2 as u64;
            if confirmed1 || confirmed2 {
                r.counterexample_examples.push(Witness { index: i, tuple: t });
            }
        }
        if c.nonentangled && !c.sr_holds {
            r.gap1_count += 1;
            r.gap1_witness.get_or_insert(Witness { index: i, tuple: t });
        }
        if c.comp_holds && !c.nonentangled {
            r.gap2_count += 1;
            r.gap2_witness.get_or_insert(Witness { index: i, tuple: t });
        }
    }
    r
}

/// Samples `n` tuples and checks both implications of the chain.
pub fn verify_inclusion_chain(n: u64, sampler: &CausalSampler) -> ChainReport {
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n))).collect();
    let parts: Vec<ChainReport> = chunks.par_iter().map(|&(a, b)| chain_chunk(sampler, a, b)).collect();
    let mut out = ChainReport { seed: sampler.seed, ..ChainReport::default() };
    for p in parts {
        out.absorb(p);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub samples: u64,
    pub min_value: f64,
    pub nonpositive: u64,
    pub degenerate: u64,
    pub errors: u64,
    /// Samples where `C * lambda_bar` and the closed-form minimum disagree in sign.
    pub sign_mismatches: u64,
}

/// Evaluates C on `n` sampled tuples; also checks the sign agreement of the
/// factored form with the closed form.
pub fn verify_coefficient_positive(n: u64, sampler: &CausalSampler) -> CoefficientReport {
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n))).collect();
    let parts: Vec<CoefficientReport> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut r = CoefficientReport {
                samples: 0,
                min_value: f64::INFINITY,
                nonpositive: 0,
                degenerate: 0,
                errors: 0,
                sign_mismatches: 0,
            };
            for i in a..b {
                let t = sampler.sample(i);
                r.samples += 1;
                match coefficient_c(&t) {
                    Ok(c) => {
                        r.degenerate += c.degenerate as u64;
                        r.nonpositive += (!(c.value > 0.0)) as u64;
                        r.min_value = r.min_value.min(c.value);
                        let fact = c.value * lambda_bar(&t);
                        let closed = crate::quantum_state::lambda_min_closed_form(&t.functionals());
                        let tol = CHECK_TOLERANCE;
                        if (fact < -tol && closed > tol) || (fact > tol && closed < -tol) {
                            r.sign_mismatches += 1;
                        }
                    }
                    Err(_) => r.errors += 1,
                }
            }
            r
        })
        .collect();
    parts.into_iter().fold(
        CoefficientReport { samples: 0, min_value: f64::INFINITY, nonpositive: 0, degenerate: 0, errors: 0, sign_mismatches: 0 },
        |mut acc, r| {
            acc.samples += r.samples;
            acc.min_value = acc.min_value.min(r.min_value);
            acc.nonpositive += r.nonpositive;
            acc.degenerate += r.degenerate;
            acc.errors += r.errors;
            acc.sign_mismatches += r.sign_mismatches;
            acc
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::lambda_min_closed_form;
    use std::f64::consts::PI;

    #[test]
    fn coefficient_hand_value() {
        let c = coefficient_c(&CausalTuple::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        let expect = (-2f64).xexp() / (1.0 - (-2f64).xexp());
        assert!((c.value - expect).abs() < 1e-15);
        assert!(!c.degenerate);
    }

    #[test]
    fn coefficient_degenerate_sentinel() {
        let c = coefficient_c(&CausalTuple::new(0.0f64, 0.0, 0.0, 0.0)).unwrap();
        assert!(c.degenerate && c.value.is_infinite());
        assert_eq!(lambda_min_factored(&CausalTuple::new(0.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert!(coefficient_c(&CausalTuple::new(0.1, 0.1, 0.5, 0.0)).is_err());
    }

    #[test]
    fn factored_matches_closed_form() {
        let t = CausalTuple::new(0.3f64, 0.2, 0.1, 0.4);
        let a = lambda_min_factored(&t).unwrap();
        let b = lambda_min_closed_form(&t.functionals());
        assert!((a - b).abs() < 1e-10);
        let sampler = CausalSampler::chain(7);
        for i in 0..20_000 {
            let t = sampler.sample(i);
            let a = lambda_min_factored(&t).unwrap();
            let b = lambda_min_closed_form(&t.functionals());
            assert!((a - b).abs() < 1e-10, "{t:?}");
        }
    }

    #[test]
    fn f_boundary_and_interior() {
        assert!(f_function(1.0, 0.5, 0.5).is_err());
        assert!(f_function(0.5, 0.0, 0.5).is_err());
        assert!(f_function(0.5, 0.5, f64::NAN).is_err());
        // y, z -> 1 makes every term vanish
        let v: f64 = f_function(0.4, 1.0 - 1e-12, 1.0 - 1e-12).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn f_matches_direct_formula() {
        let (x, y, z) = (0.5f64, 0.5f64, 0.5f64);
        let direct = 0.25 * (1.0 / x - x) * (1.0 / (y * z) - y * z)
            - ((x.xln() * y.xln()).sqrt().xsinh()).powi(2)
            - ((x.xln() * z.xln()).sqrt().xsin()).powi(2);
        let v = f_function(x, y, z).unwrap();
        assert!((v - direct).abs() < 1e-14);
        assert!((v - 0.43548).abs() < 1e-5);
    }

    #[test]
    fn f_via_substitution() {
        // x = e^{-ga}, y = e^{-gc^2/(4 ga)}, z = e^{-phi^2/(16 ga)}; then
        // F = lambda_bar(ga, gb', gc, phi) with gb' = (gc^2/4 + phi^2/16) / ga
        let ln2 = 2f64.xln();
        let ga = ln2;
        let gc = 2.0 * (ln2 * ga).sqrt();
        let phi = 4.0 * (ln2 * ga).sqrt();
        let gb = (gc * gc / 4.0 + phi * phi / 16.0) / ga;
        let lb = lambda_bar(&CausalTuple::new(ga, gb, gc, phi));
        let f = f_function(0.5, 0.5, 0.5).unwrap();
        assert!((lb - f).abs() < 1e-14, "{lb} vs {f}");
    }

    #[test]
    fn g_matches_direct_formula_and_limits() {
        let (x, y, z) = (0.5f64, 0.5f64, 0.5f64);
        let c = (1.0 / y - y).powi(2) / (2.0 * (1.0 / x - x)) + 2.0 * z * z / (1.0 / x - x);
        let direct = 1.0 - x * x - (2.0 * z.xasin()).xsin().powi(2) / (c + (1.0 + c * c).sqrt()).powi(2);
        let v = g_function(x, y, z).unwrap();
        assert!((v - direct).abs() < 1e-14);
        assert!((v - 0.63535).abs() < 1e-5);
        let small_z: f64 = g_function(0.3, 0.7, 1e-9).unwrap();
        assert!((small_z - (1.0 - 0.09)).abs() < 1e-12);
        assert!(g_function(0.3, 0.7, 1.0).is_err());
    }

    #[test]
    fn g_via_substitution() {
        // x = e^{-ga}, y = e^{-gc/2}, z = sin(phi/4): G is the complementarity
        // margin at the gamma_b where lambda_bar vanishes
        let (x, y, z) = (0.5f64, 0.5f64, 0.5f64);
        let (ga, gc, phi) = (-x.xln(), -2.0 * y.xln(), 4.0 * z.xasin());
        let h = (gc / 2.0).xsinh();
        let gb = ((h * h + (phi / 4.0).xsin().powi(2)) / ga.xsinh()).xasinh();
        let t = CausalTuple::new(ga, gb, gc, phi);
        assert!(lambda_bar(&t).abs() < 1e-14);
        let g = g_function(x, y, z).unwrap();
        assert!((comp_margin(&t) - g).abs() < 1e-14, "{} vs {g}", comp_margin(&t));
    }

    #[test]
    fn tiny_scans() {
        let r = scan_nonnegativity(ScanFunction::F, 3, 0.25).unwrap();
        assert_eq!(r.evaluations, 27);
        assert_eq!(r.negatives, 0);
        let g = scan_nonnegativity(ScanFunction::G, 2, 0.25).unwrap();
        assert_eq!(g.evaluations, 8);
        assert!(g.min_value >= 0.0);
        assert!(scan_nonnegativity(ScanFunction::F, 1, 0.25).is_err());
        assert!(scan_nonnegativity(ScanFunction::F, 4, 0.5).is_err());
    }

    #[test]
    fn boundary_probe_decreases_to_zero() {
        let p = boundary_limit(ScanFunction::F, 0.3, 0.6, 8);
        assert!(p.windows(2).all(|w| w[1].1 < w[0].1));
        assert!(p.last().unwrap().1 < 1e-6 && p.last().unwrap().1 >= 0.0);
        let q = boundary_limit(ScanFunction::G, 0.3, 0.6, 8);
        assert!(q.last().unwrap().1 < 1e-6);
    }

    #[test]
    fn region_examples() {
        let r = classify_region(&CausalTuple::new(0.5, 0.5, 0.0, PI / 2.0));
        assert!(r.sr_holds && r.nonentangled && r.comp_holds);
        let e = classify_region(&CausalTuple::new(1e-3, 1e-3, 0.0, 0.0));
        assert!(e.sr_holds && e.nonentangled && e.comp_holds);
        let out = classify_region(&CausalTuple::new(0.01, 0.01, 0.0, 2.0));
        assert!(!out.sr_holds);
        let bad_cs = classify_region(&CausalTuple::new(0.01, 0.01, 0.5, 0.0));
        assert!(!bad_cs.cauchy_schwarz);
    }

    #[test]
    fn sampler_is_counter_based() {
        let s = CausalSampler::chain(42);
        let a = s.sample(123_456);
        let _ = s.sample(5);
        assert_eq!(a, s.sample(123_456));
        assert_ne!(a, s.sample(123_457));
        for i in 0..1000 {
            let t = s.sample(i);
            assert!((1e-3..=3.0).contains(&t.gamma_a));
            assert!(t.gamma_c.abs() <= 2.0 * (t.gamma_a * t.gamma_b).sqrt());
            assert!(t.phi_ba.abs() <= 2.0 * PI);
        }
        let u = CausalSampler::uniform(1).sample(0);
        assert!(u.gamma_a > 0.0 && u.gamma_a <= 3.0);
    }

    #[test]
    fn chain_is_worker_independent_and_merges() {
        let s = CausalSampler::chain(42);
        let a = verify_inclusion_chain(40_000, &s);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| verify_inclusion_chain(40_000, &s));
        assert_eq!(a, b);
        assert_eq!(a.samples, 40_000);
        assert_eq!(a.region_counts.iter().sum::<u64>(), 40_000);
        assert_eq!(a.counterexamples_c1 + a.counterexamples_c2, 0);
    }

    #[test]
    fn single_point_chain() {
        let t = CausalTuple::new(0.5, 0.5, 0.0, PI / 2.0);
        let c = classify_region(&t);
        assert!(!(c.sr_holds && !c.nonentangled) && !(c.nonentangled && !c.comp_holds));
    }

    #[test]
    fn extended_precision_agrees() {
        let t = CausalTuple::new(0.2, 1.7, -0.3, 2.2);
        let a = lambda_min_factored(&t).unwrap();
        let b = lambda_min_factored(&t.map(Extended::lit)).unwrap().as_f64();
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }
}
