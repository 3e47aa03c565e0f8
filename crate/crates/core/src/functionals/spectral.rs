//! Frequency-domain cross-spectrum of two branched sources.

use nalgebra::{Matrix4, Vector3, Vector4};
use num_complex::Complex;
use rayon::prelude::*;

use super::{polar_frame, QuadratureConfig};
use crate::kernels::{hadamard_tensor_factor, KernelSpec, SourceTensor, StressModel, TensorFactor};
use crate::quadrature::{integrate_adaptive, legendre_rule, pairwise_sum, Accumulate, QuadResult, Tolerance};
use crate::real::Real;
use crate::sources::{norm, BranchedSource, FieldType};

/// One polyline segment, positions relative to the source center.
#[derive(Clone, Copy)]
struct Segment<T> {
    mid: Vector3<T>,
    t_mid: T,
    half_dt: T,
    v: Vector3<T>,
    /// `sign * coupling * dt`.
    weight: T,
}

struct Prepared<T> {
    segments: Vec<Segment<T>>,
    field_type: FieldType,
    stress_model: StressModel,
}

impl<T: Real> Prepared<T> {
    fn new(src: &BranchedSource<T>, spec: &KernelSpec<T>) -> Self {
        let c = src.center();
        let mut segments = Vec::new();
        for (sign, w) in src.branches() {
            let s = w.samples();
            for j in 0..s.len() - 1 {
                let dt = s[j + 1].t - s[j].t;
                segments.push(Segment {
                    mid: (s[j].x + s[j + 1].x) * T::lit(0.5) - c,
                    t_mid: (s[j].t + s[j + 1].t) * T::lit(0.5),
                    half_dt: dt * T::lit(0.5),
                    v: w.segment_velocity(j),
                    weight: sign * w.coupling() * dt,
                });
            }
        }
        Self { segments, field_type: src.field_type(), stress_model: spec.stress_model }
    }

    /// Fourier amplitude `int a(x) exp(i (k.x - omega t))` about the center.
    fn amplitude(&self, k: &Vector3<T>, omega: T) -> SourceTensor<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let full = self.field_type == FieldType::Gr && self.stress_model == StressModel::Full;
        let need_v = self.field_type == FieldType::Em || full;
        let mut s0 = zero;
        let mut sv = Vector3::from_element(zero);
        let mut svv = [[zero; 3]; 3];
        for seg in &self.segments {
            let beta = k.dot(&seg.v) - omega;
            let amp = seg.weight * sinc(beta * seg.half_dt);
            let (s, c) = (k.dot(&seg.mid) - omega * seg.t_mid).sin_cos();
            let e = Complex::new(c * amp, s * amp);
            s0 += e;
            if need_v {
                for i in 0..3 {
                    sv[i] += e * seg.v[i];
                }
            }
            if full {
                for i in 0..3 {
                    for j in i..3 {
                        svv[i][j] += e * (seg.v[i] * seg.v[j]);
                    }
                }
            }
        }
        match (self.field_type, full) {
            (FieldType::Em, _) => SourceTensor::Current(Vector4::new(s0, sv[0], sv[1], sv[2])),
            (FieldType::Gr, false) => {
                let mut m = Matrix4::from_element(zero);
                m[(0, 0)] = s0;
                SourceTensor::Stress(m)
            }
            (FieldType::Gr, true) => {
                let mut m = Matrix4::from_element(zero);
                m[(0, 0)] = s0;
                for i in 0..3 {
                    m[(0, i + 1)] = sv[i];
                    m[(i + 1, 0)] = sv[i];
                    for j in i..3 {
                        m[(i + 1, j + 1)] = svv[i][j];
                        m[(j + 1, i + 1)] = svv[i][j];
                    }
                }
                SourceTensor::Stress(m)
            }
        }
    }
}

fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}

fn conj_tensor<T: Real>(a: &SourceTensor<Complex<T>>) -> SourceTensor<Complex<T>> {
    match a {
        SourceTensor::Current(v) => SourceTensor::Current(v.map(|z| z.conj())),
        SourceTensor::Stress(m) => SourceTensor::Stress(m.map(|z| z.conj())),
    }
}

fn bucket(n: f64) -> usize {
    let n = n.ceil().max(16.0) as usize;
    n.div_ceil(16) * 16
}

struct Geometry<T> {
    e1: Vector3<T>,
    e2: Vector3<T>,
    e3: Vector3<T>,
    collinear: bool,
    /// `|D|`, the center separation along `e3`.
    distance: T,
    /// `R_X + R_Y`.
    local: f64,
    /// Longitudinal reach `|D| + R_X + R_Y`.
    reach: f64,
    /// Transverse reach of both sources.
    transverse: f64,
}

fn geometry<T: Real>(x: &BranchedSource<T>, y: &BranchedSource<T>) -> Geometry<T> {
    let (e3, collinear) = polar_frame(x, y);
    let trial = if e3.x.abs() < T::lit(0.9) { Vector3::x() } else { Vector3::y() };
    let trial: Vector3<T> = trial.map(T::lit);
    let e1 = {
        let p = trial - e3 * trial.dot(&e3);
        p / norm(&p)
    };
    let e2 = e3.cross(&e1);
    let offset = x.center() - y.center();
    let distance = norm(&offset);
    let mut local = 0.0;
    let mut transverse = 0.0;
    for src in [x, y] {
        let c = src.center();
        let mut r: f64 = 0.0;
        let mut rho: f64 = 0.0;
        for (_, w) in src.branches() {
            for s in w.samples() {
                let d = s.x - c;
                r = r.max(norm(&d).as_f64());
                rho = rho.max(norm(&d.cross(&e3)).as_f64());
            }
        }
        local += r;
        transverse += rho;
    }
    let reach = distance.as_f64() + local;
    Geometry { e1, e2, e3, collinear, distance, local, reach, transverse }
}

/// Spherical Bessel functions `j_0(a) ..= j_lmax(a)`: upward recurrence for
/// `a > lmax`, otherwise Miller's downward recurrence normalised with
/// `sum (2l+1) j_l^2 = 1`.
fn spherical_bessel<T: Real>(lmax: usize, a: T) -> Vec<T> {
    let mut j = vec![T::zero(); lmax + 1];
    if a == T::zero() {
        j[0] = T::one();
        return j;
    }
    let (s, c) = (a.xsin(), a.xcos());
    let j0 = s / a;
    let j1 = (s / a - c) / a;
    if a.as_f64() > lmax as f64 {
        j[0] = j0;
        if lmax > 0 {
            j[1] = j1;
        }
        for l in 1..lmax {
            j[l + 1] = T::from_usize(2 * l + 1) / a * j[l] - j[l - 1];
        }
        return j;
    }
    let start = lmax + 20 + (4.0 * (lmax as f64).sqrt()).ceil() as usize;
    let big = T::lit(1e120);
    let (mut hi, mut cur) = (T::zero(), T::one());
    let mut sum = T::zero();
    for l in (0..=start).rev() {
        if l <= lmax {
            j[l] = cur;
        }
        sum += T::from_usize(2 * l + 1) * cur * cur;
        if l > 0 {
            let lower = T::from_usize(2 * l + 1) / a * cur - hi;
            hi = cur;
            cur = lower;
        }
        if cur.abs() > big {
            let shrink = T::one() / big;
            cur *= shrink;
            hi *= shrink;
            sum *= shrink * shrink;
            for v in j.iter_mut() {
                *v *= shrink;
            }
        }
    }
    let mut scale = T::one() / sum.sqrt();
    let (reference, computed) = if j0.abs() >= j1.abs() || lmax == 0 { (j0, j[0]) } else { (j1, j[1]) };
    if (reference < T::zero()) != (computed < T::zero()) {
        scale = -scale;
    }
    j.iter_mut().for_each(|v| *v *= scale);
    j
}

/// `sum_l (2l+1) i^l j_l(a) P_l(mu)`: the projection of `exp(i a mu)` onto
/// Legendre degrees `<= lmax`.
fn plane_wave<T: Real>(j: &[T], mu: T) -> Complex<T> {
    let (mut p_prev, mut p) = (T::one(), mu);
    let mut re = j[0];
    let mut im = T::zero();
    for (l, &jl) in j.iter().enumerate().skip(1) {
        let term = T::from_usize(2 * l + 1) * jl * p;
        match l % 4 {
            0 => re += term,
            1 => im += term,
            2 => re -= term,
            _ => im -= term,
        }
        let lf = T::from_usize(l);
        let next = ((lf + lf + T::one()) * mu * p - lf * p_prev) / (lf + T::one());
        p_prev = p;
        p = next;
    }
    Complex::new(re, im)
}

/// Per-shell angular integral of `a_X . N . a_Y^*` times `exp(i k.(c_X - c_Y))`.
///
/// The polar axis is the center offset, so the fast factor `exp(i k |D| mu)`
/// is applied through its Legendre expansion and the angular grid only has
/// to resolve the source extents.
fn shell<T: Real>(
    k: T,
    px: &Prepared<T>,
    py: Option<&Prepared<T>>,
    n: &TensorFactor<T>,
    g: &Geometry<T>,
    cfg: &QuadratureConfig,
) -> Complex<T> {
    let kf = k.as_f64();
    let n_mu = bucket(cfg.angular_oversampling * kf * g.local + 24.0);
    let n_phi = if g.collinear { 1 } else { bucket(cfg.angular_oversampling * kf * g.transverse + 16.0) };
    let rule = legendre_rule(n_mu);
    let two_pi = T::lit(2.0) * T::PI();
    let dphi = two_pi / T::from_usize(n_phi);
    let bessel = spherical_bessel(n_mu - 1, k * g.distance);
    let terms: Vec<Complex<T>> = (0..n_mu)
        .into_par_iter()
        .map(|i| {
            let mu = T::lit(rule.nodes[i]);
            let st = (T::one() - mu * mu).max(T::zero()).sqrt();
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..n_phi {
                let phi = dphi * T::from_usize(j);
                let (sp, cp) = phi.sin_cos();
                let kv = (g.e3 * mu + (g.e1 * cp + g.e2 * sp) * st) * k;
                let ax = px.amplitude(&kv, k);
                let term = match py {
                    None => {
                        let c = conj_tensor(&ax);
                        n.contract(&ax, &c).expect("rank fixed by field type")
                    }
                    Some(py) => {
                        let ay = conj_tensor(&py.amplitude(&kv, k));
                        n.contract(&ax, &ay).expect("rank fixed by field type")
                    }
                };
                acc += term;
            }
            acc * plane_wave(&bessel, mu) * (T::lit(rule.weights[i]) * dphi)
        })
        .collect();
    pairwise_sum::<T, Complex<T>>(&terms)
}

/// `W_XY` by adaptive radial panels; stops once successive panels are
/// negligible against the running total.
pub(super) fn cross_spectrum<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
    floor: Option<Complex<T>>,
) -> QuadResult<Complex<T>> {
    let same = x == y;
    let px = Prepared::new(x, spec);
    let py = if same { None } else { Some(Prepared::new(y, spec)) };
    let n = hadamard_tensor_factor(spec);
    let g = geometry(x, y);
    let sx = x.smearing_width();
    let sy = y.smearing_width();
    let damp = (sx * sx + sy * sy) * T::lit(0.5);
    let s_eff = damp.sqrt();
    let norm_c = T::one() / (T::lit(2.0) * (T::lit(2.0) * T::PI()).powi(3));
    let integrand = |k: T| shell(k, &px, py.as_ref(), &n, &g, cfg) * (k * norm_c * (-(k * k) * damp).exp());

    let (ax, bx) = x.window();
    let (ay, by) = y.window();
    let span = bx.max(by) - ax.min(ay);
    let phase_len = span.as_f64() + g.reach;
    let width = T::lit(4.0 * std::f64::consts::PI / phase_len.max(1e-12));
    let k_end = spec.uv_cutoff.min(T::lit(12.0) / s_eff);

    let rel = T::lit(cfg.rel_tol);
    let floor = floor.unwrap_or(Complex::new(T::zero(), T::zero()));
    let mut value = Complex::new(T::zero(), T::zero());
    let mut error = value;
    let mut evaluations = 0;
    let mut converged = true;
    let mut quiet = 0;
    let mut a = T::zero();
    while a < k_end {
        let b = (a + width).min(k_end);
        let scale = value.re.abs().max(value.im.abs());
        let mut abs = Complex::new(
            (T::lit(0.05) * rel * value.re.abs()).max(T::lit(1e-8) * rel * scale).max(floor.re),
            (T::lit(0.05) * rel * value.im.abs()).max(T::lit(1e-8) * rel * scale).max(floor.im),
        );
        if same {
            abs.im = T::infinity();
        }
        let panel = integrate_adaptive(&integrand, a, b, Tolerance { rel: T::lit(0.1) * rel, abs }, cfg.max_intervals);
        value += panel.value;
        error += panel.error;
        evaluations += panel.evaluations;
        converged &= panel.converged;
        let small = |p: T, v: T, f: T| p.abs() <= (T::lit(1e-3) * rel * v.abs()).max(f);
        let negligible = small(panel.value.re, value.re, floor.re) && (same || small(panel.value.im, value.im, floor.im));
        quiet = if negligible && a > T::zero() { quiet + 1 } else { 0 };
        a = b;
        if quiet >= 3 {
            break;
        }
    }
    if same {
        value.im = T::zero();
        error.im = T::zero();
    }
    let error = error.abs_parts();
    QuadResult { value, error, evaluations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_bessel_matches_reference_values() {
        let cases: [(usize, f64, f64); 6] = [
            (0, 0.3, 0.985_067_355_537_798_6),
            (5, 0.3, 2.329_582_556_729_027_3e-7),
            (30, 2.0, 5.836_617_887_522_487e-34),
            (40, 500.0, -0.001_700_626_480_249_472),
            (7, 25.5, 0.003_938_403_640_337_134_5),
            (60, 25.5, 1.961_108_991_559_518_6e-18),
        ];
        for (l, a, want) in cases {
            let j = spherical_bessel(l.max(60), a);
            assert!((j[l] - want).abs() <= 1e-12 * want.abs(), "j_{l}({a}) = {} vs {want}", j[l]);
        }
    }

    #[test]
    fn plane_wave_projection_recovers_the_exponential() {
        let a = 37.0;
        let j = spherical_bessel(90, a);
        for mu in [-0.9, -0.2, 0.4, 0.999] {
            let z = plane_wave(&j, mu);
            let (s, c) = f64::sin_cos(a * mu);
            assert!((z.re - c).abs() < 1e-11 && (z.im - s).abs() < 1e-11, "{mu}: {z}");
        }
    }
}
