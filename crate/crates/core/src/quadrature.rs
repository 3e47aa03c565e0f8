//! Adaptive Gauss–Kronrod integration, cached Gauss–Legendre rules and a
//! deterministic pairwise reduction.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use num_complex::Complex;
use rayon::prelude::*;

use crate::real::Real;

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae on [0, 1]).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Values that can be integrated: real scalars and complex numbers.
pub trait Accumulate<T: Real>: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    /// Componentwise absolute value.
    fn abs_parts(self) -> Self;
    /// Largest component magnitude, used to rank intervals.
    fn size(self) -> T;
    /// True if every component of `err` meets `max(abs, rel * |value|)`.
    fn within(err: Self, value: Self, rel: T, abs: Self) -> bool;
}

impl<T: Real> Accumulate<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn abs_parts(self) -> Self {
        self.abs()
    }
    fn size(self) -> T {
        self.abs()
    }
    fn within(err: Self, value: Self, rel: T, abs: T) -> bool {
        err <= abs.max(rel * value.abs())
    }
}

impl<T: Real> Accumulate<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn abs_parts(self) -> Self {
        Complex::new(self.re.abs(), self.im.abs())
    }
    fn size(self) -> T {
        self.re.abs().max(self.im.abs())
    }
    fn within(err: Self, value: Self, rel: T, abs: Self) -> bool {
        err.re <= abs.re.max(rel * value.re.abs()) && err.im <= abs.im.max(rel * value.im.abs())
    }
}

/// Sums in a balanced binary tree; the result depends only on the order of `xs`.
pub fn pairwise_sum<T: Real, V: Accumulate<T>>(xs: &[V]) -> V {
    match xs.len() {
        0 => V::zero(),
        1 => xs[0],
        n if n <= 8 => xs[1..].iter().fold(xs[0], |acc, &x| acc + x),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum::<T, V>(l) + pairwise_sum::<T, V>(r)
        }
    }
}

/// Parallel map followed by an ordered pairwise sum, so the result is
/// independent of the number of worker threads.
pub fn par_sum_map<T, V, I, F>(items: &[I], f: F) -> V
where
    T: Real,
    V: Accumulate<T>,
    I: Sync,
    F: Fn(&I) -> V + Sync + Send,
{
    let parts: Vec<V> = items.par_iter().map(f).collect();
    pairwise_sum::<T, V>(&parts)
}

/// 15-point Kronrod estimate on `[a, b]` with the |K15 - G7| error.
pub fn gauss_kronrod_15<T, V, F>(f: &F, a: T, b: T) -> (V, V)
where
    T: Real,
    V: Accumulate<T>,
    F: Fn(T) -> V,
{
    let half = (b - a) * T::lit(0.5);
    let mid = a + half;
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(mid - dx) + f(mid + dx);
        k = k + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + pair * T::lit(WG[j / 2]);
        }
    }
    let k = k * half;
    let g = g * half;
    (k, (k - g).abs_parts())
}

/// Abscissae of the 15-point rule mapped to `[a, b]` with their weights.
pub fn kronrod_nodes<T: Real>(a: T, b: T) -> [(T, T); 15] {
    let half = (b - a) * T::lit(0.5);
    let mid = a + half;
    let mut out = [(mid, half * T::lit(WGK[7])); 15];
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let w = half * T::lit(WGK[j]);
        out[2 * j] = (mid - dx, w);
        out[2 * j + 1] = (mid + dx, w);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance<T, V = T> {
    pub rel: T,
    /// Componentwise absolute floor.
    pub abs: V,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<V> {
    pub value: V,
    /// Componentwise error estimate.
    pub error: V,
    pub evaluations: usize,
    pub converged: bool,
}

/// Globally adaptive bisection driven by the 15-point Kronrod rule.
pub fn integrate_adaptive<T, V, F>(f: F, a: T, b: T, tol: Tolerance<T, V>, max_intervals: usize) -> QuadResult<V>
where
    T: Real,
    V: Accumulate<T>,
    F: Fn(T) -> V,
{
    let (v0, e0) = gauss_kronrod_15(&f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let mut evaluations = 15;
    loop {
        let value = pairwise_sum::<T, V>(&parts.iter().map(|p| p.2).collect::<Vec<_>>());
        let error = pairwise_sum::<T, V>(&parts.iter().map(|p| p.3).collect::<Vec<_>>());
        if V::within(error, value, tol.rel, tol.abs) || parts.len() >= max_intervals {
            let converged = V::within(error, value, tol.rel, tol.abs);
            return QuadResult { value, error, evaluations, converged };
        }
        let worst = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3.size() > acc.1 { (i, p.3.size()) } else { acc })
            .0;
        let (lo, hi, _, _) = parts[worst];
        let mid = lo + (hi - lo) * T::lit(0.5);
        if !(mid > lo && mid < hi) {
            // interval below floating-point resolution
            return QuadResult { value, error, evaluations, converged: false };
        }
        let (vl, el) = gauss_kronrod_15(&f, lo, mid);
        let (vr, er) = gauss_kronrod_15(&f, mid, hi);
        evaluations += 30;
        parts[worst] = (lo, mid, vl, el);
        parts.insert(worst + 1, (mid, hi, vr, er));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct LegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Cached Gauss–Legendre rule with `n` points.
pub fn legendre_rule(n: usize) -> Arc<LegendreRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LegendreRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return rule.clone();
    }
    let deg = NonZeroUsize::new(n.max(1)).expect("nonzero degree");
    let gl = GaussLegendre::new(deg);
    let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule = Arc::new(LegendreRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    });
    cache.lock().expect("rule cache poisoned").entry(n).or_insert(rule).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_polynomials() {
        let (v, _) = gauss_kronrod_15(&|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn kronrod_nodes_reproduce_rule() {
        let f = |x: f64| (3.0 * x).sin() * x.exp();
        let direct: f64 = kronrod_nodes(0.2, 1.7).iter().map(|&(x, w)| w * f(x)).sum();
        let (v, _) = gauss_kronrod_15(&f, 0.2, 1.7);
        assert!((direct - v).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let r = integrate_adaptive(|x: f64| (50.0 * x).cos(), 0.0, 3.0, Tolerance { rel: 1e-12, abs: 0.0 }, 1000);
        assert!(r.converged);
        assert!((r.value - (150f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_complex_componentwise() {
        let r = integrate_adaptive(
            |x: f64| Complex::new(x.exp(), 1e-8 * x.sin()),
            0.0,
            1.0,
            Tolerance { rel: 1e-10, abs: Complex::new(0.0, 0.0) },
            100,
        );
        assert!((r.value.re - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((r.value.im - 1e-8 * (1.0 - 1f64.cos())).abs() < 1e-19);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let r = integrate_adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance { rel: 1e-14, abs: 0.0 }, 4);
        assert!(!r.converged);
    }

    #[test]
    fn legendre_rule_integrates_and_caches() {
        let r = legendre_rule(40);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(78)).sum();
        assert!((s - 2.0 / 79.0).abs() < 1e-13);
        assert!(Arc::ptr_eq(&r, &legendre_rule(40)));
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pairwise_is_order_stable() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let a = pairwise_sum::<f64, f64>(&xs);
        let b = par_sum_map::<f64, f64, _, _>(&xs, |&x| x);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
