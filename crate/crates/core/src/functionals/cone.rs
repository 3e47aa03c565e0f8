//! Retarded phase with the exact light-cone delta done analytically.
//!
//! For a receiver branch `X_P` and a source event `(t', Y_Q(t'))` the delta
//! `delta(t - t' - |X_P(t) - Y_Q(t')|)` fixes the retarded time `t_r`, with
//! Jacobian `1 / (1 - n.v_P)`. The remaining integral over `t'` runs over the
//! segments of the source polyline.

use nalgebra::{Matrix4, Vector3, Vector4};

use super::{Estimate, FunctionalError};
use crate::kernels::{retarded_tensor_factor, KernelError, KernelSpec, SourceTensor, StressModel, TensorFactor};
use crate::quadrature::{gauss_kronrod_15, pairwise_sum};
use crate::real::Real;
use crate::sources::{norm, BranchedSource, FieldType, Worldline};

/// Retarded root on `w` for a signal emitted at `(t0, y)`: returns the
/// reception time, the segment index and the distance travelled.
pub(crate) fn retarded_root<T: Real>(w: &Worldline<T>, t0: T, y: &Vector3<T>) -> Option<(T, usize, T)> {
    let s = w.samples();
    let g = |i: usize| s[i].t - t0 - norm(&(s[i].x - y));
    let n = s.len();
    if g(0) > T::zero() || g(n - 1) < T::zero() {
        return None;
    }
    // g increases along the worldline; find the segment holding the sign change
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = w.segment_velocity(lo);
    let c = s[lo].t - t0;
    let d = s[lo].x - y;
    let a = T::one() - v.dot(&v);
    let b = c - d.dot(&v);
    let cc = c * c - d.dot(&d);
    let disc = (b * b - a * cc).max(T::zero()).sqrt();
    let tau = if b < T::zero() { (disc - b) / a } else { -cc / (b + disc) };
    let dt = s[lo + 1].t - s[lo].t;
    let tau = tau.max(T::zero()).min(dt);
    Some((s[lo].t + tau, lo, c + tau))
}

/// Emission time on `w` of the signal received at `(tk, xk)`, if it lies
/// inside the window of `w`.
fn emission_root<T: Real>(w: &Worldline<T>, tk: T, xk: &Vector3<T>) -> Option<T> {
    let s = w.samples();
    let h = |i: usize| tk - s[i].t - norm(&(xk - s[i].x));
    let n = s.len();
    if h(0) < T::zero() || h(n - 1) > T::zero() {
        return None;
    }
    // h decreases along the worldline
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if h(mid) >= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = w.segment_velocity(lo);
    let c = tk - s[lo].t;
    let d = xk - s[lo].x;
    let a = T::one() - v.dot(&v);
    let b = c - d.dot(&v);
    let cc = c * c - d.dot(&d);
    let disc = (b * b - a * cc).max(T::zero()).sqrt();
    let u = if b > T::zero() { cc / (b + disc) } else { (b - disc) / a };
    Some(s[lo].t + u.max(T::zero()).min(s[lo + 1].t - s[lo].t))
}

pub(crate) fn source_tensor<T: Real>(field: FieldType, model: StressModel, v: &Vector3<T>) -> SourceTensor<T> {
    let u = Vector4::new(T::one(), v.x, v.y, v.z);
    match (field, model) {
        (FieldType::Em, _) => SourceTensor::Current(u),
        (FieldType::Gr, StressModel::Full) => SourceTensor::Stress(u * u.transpose()),
        (FieldType::Gr, StressModel::EnergyDensity) => {
            let mut m = Matrix4::zeros();
            m[(0, 0)] = T::one();
            SourceTensor::Stress(m)
        }
    }
}

fn integrand<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    r: &TensorFactor<T>,
    model: StressModel,
    t_src: T,
    yq: &Vector3<T>,
    vq: &Vector3<T>,
) -> Result<T, FunctionalError> {
    let uq = source_tensor(y.field_type(), model, vq);
    let mut acc = T::zero();
    for (sp, wp) in x.branches() {
        let Some((t_r, j, dist)) = retarded_root(wp, t_src, yq) else { continue };
        if !(dist > T::zero()) {
            return Err(KernelError::CoincidentPoints.into());
        }
        let xp = wp.samples()[j].x + wp.segment_velocity(j) * (t_r - wp.samples()[j].t);
        let vp = wp.segment_velocity(j);
        let nhat = (xp - yq) / dist;
        let jac = T::one() - nhat.dot(&vp);
        let up = source_tensor(x.field_type(), model, &vp);
        acc += sp * r.contract(&up, &uq)? / (T::lit(4.0) * T::PI() * dist * jac);
    }
    Ok(acc)
}

pub(super) fn phi_cone<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
) -> Result<Estimate<T>, FunctionalError> {
    let r = retarded_tensor_factor(spec);
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut evaluations = 0;
    for (sq, wq) in y.branches() {
        let s = wq.samples();
        // receiver kinks seen from this source branch
        let mut cuts: Vec<T> = x
            .branches()
            .iter()
            .flat_map(|(_, wp)| wp.samples().iter().filter_map(|p| emission_root(wq, p.t, &p.x)))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut next_cut = 0;
        for j in 0..s.len() - 1 {
            let v = wq.segment_velocity(j);
            let mut knots = vec![s[j].t];
            while next_cut < cuts.len() && cuts[next_cut] < s[j + 1].t {
                if cuts[next_cut] > *knots.last().expect("non-empty") {
                    knots.push(cuts[next_cut]);
                }
                next_cut += 1;
            }
            knots.push(s[j + 1].t);
            let mut failure = None;
            let f = |t: T| {
                let yq = s[j].x + v * (t - s[j].t);
                match integrand(x, y, &r, spec.stress_model, t, &yq, &v) {
                    Ok(val) => val,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::zero()
                    }
                }
            };
            {
                let f = std::cell::RefCell::new(f);
                for k in knots.windows(2) {
                    let (val, err) = gauss_kronrod_15(&|t: T| (f.borrow_mut())(t), k[0], k[1]);
                    evaluations += 15;
                    values.push(val * sq);
                    errors.push(err);
                }
            }
            if let Some(e) = failure {
                return Err(e);
            }
        }
    }
    let scale = x.coupling() * y.coupling();
    let value = pairwise_sum::<T, T>(&values) * scale;
    let error = pairwise_sum::<T, T>(&errors) * scale.abs();
    Ok(Estimate { value, error, evaluations, converged: true })
}
