//! Retarded phase for Gaussian-profile sources.
//!
//! Smearing both sources turns the light-cone delta into a Gaussian of width
//! `s = sqrt(sigma_x^2 + sigma_y^2 + sigma_k^2)` in `u = t - t' - |X(t) - Y(t')|`.
//! The integrand lives in a band `|u| < 8 s` around the cone. Each pair of
//! polyline segments is a rectangle in `(t, t')` with constant velocities;
//! rectangles that meet the band are tiled with cells of side `<= s / 2` and
//! integrated by tensor Gauss–Legendre rules of two orders.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::cone::source_tensor;
use super::{Estimate, FunctionalError, QuadratureConfig};
use crate::kernels::{retarded_smeared, retarded_tensor_factor, KernelSpec, TensorFactor};
use crate::quadrature::{legendre_rule, pairwise_sum, LegendreRule};
use crate::real::Real;
use crate::sources::{norm, BranchedSource, Worldline};

const BAND: f64 = 8.0;
const LOW: usize = 4;
const HIGH: usize = 6;

struct Rules {
    low: std::sync::Arc<LegendreRule>,
    high: std::sync::Arc<LegendreRule>,
}

/// `u` at receiver vertex `k` for a source event `(t0, y)`; increases with `k`.
fn lag<T: Real>(w: &Worldline<T>, k: usize, t0: T, y: &Vector3<T>) -> T {
    let p = &w.samples()[k];
    p.t - t0 - norm(&(p.x - y))
}

/// First vertex with `pred` true, for a predicate monotone along the worldline.
fn partition<T: Real>(w: &Worldline<T>, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, w.samples().len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[allow(clippy::too_many_arguments)]
fn rectangle<T: Real>(
    rule: &LegendreRule,
    (c, e, xc, vp): (T, T, Vector3<T>, Vector3<T>),
    (a, b, ya, vq): (T, T, Vector3<T>, Vector3<T>),
    s: T,
    cells: (usize, usize),
) -> T {
    let ht = (e - c) / T::from_usize(cells.0);
    let hs = (b - a) / T::from_usize(cells.1);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for ci in 0..cells.0 {
        let t0 = c + ht * T::from_usize(ci);
        for cj in 0..cells.1 {
            let s0 = a + hs * T::from_usize(cj);
            let mut acc = T::zero();
            for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
                let t = t0 + ht * half * (T::lit(*xi) + T::one());
                let xp = xc + vp * (t - c);
                let mut row = T::zero();
                for (xj, wj) in rule.nodes.iter().zip(&rule.weights) {
                    let tp = s0 + hs * half * (T::lit(*xj) + T::one());
                    let yq = ya + vq * (tp - a);
                    row += T::lit(*wj) * retarded_smeared(t - tp, norm(&(xp - yq)), s);
                }
                acc += T::lit(*wi) * row;
            }
            total += acc;
        }
    }
    total * ht * hs * T::lit(0.25)
}

/// Both rule orders for the source segment `j` of `wq` against every
/// receiver segment of `wp` inside the band.
#[allow(clippy::too_many_arguments)]
fn segment<T: Real>(
    wp: &Worldline<T>,
    wq: &Worldline<T>,
    j: usize,
    factor: &TensorFactor<T>,
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    s: T,
    refine: usize,
    rules: &Rules,
) -> Result<(T, T, usize), FunctionalError> {
    let sq = wq.samples();
    let (a, b) = (sq[j].t, sq[j + 1].t);
    let (ya, yb) = (sq[j].x, sq[j + 1].x);
    let vq = wq.segment_velocity(j);
    let uq = source_tensor(y.field_type(), spec.stress_model, &vq);
    let band = T::lit(BAND) * s;
    let side = s * T::lit(0.5) / T::from_usize(1 << refine);
    let sp = wp.samples();
    let n = sp.len();
    let first = partition(wp, |k| lag(wp, k, a, &ya) >= -band).saturating_sub(1);
    let last = partition(wp, |k| lag(wp, k, b, &yb) > band).min(n - 1);
    let mut high = T::zero();
    let mut low = T::zero();
    let mut evaluations = 0;
    for i in first..last {
        if lag(wp, i, b, &yb) > band || lag(wp, i + 1, a, &ya) < -band {
            continue;
        }
        let (c, e) = (sp[i].t, sp[i + 1].t);
        let vp = wp.segment_velocity(i);
        let up = source_tensor(x.field_type(), spec.stress_model, &vp);
        let weight = factor.contract(&up, &uq)?;
        let cells = (((e - c) / side).ceil().as_f64().max(1.0) as usize, ((b - a) / side).ceil().as_f64().max(1.0) as usize);
        let recv = (c, e, sp[i].x, vp);
        let src = (a, b, ya, vq);
        high += weight * rectangle(&rules.high, recv, src, s, cells);
        low += weight * rectangle(&rules.low, recv, src, s, cells);
        evaluations += cells.0 * cells.1 * (HIGH * HIGH + LOW * LOW);
    }
    Ok((high, low, evaluations))
}

fn sweep<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    s: T,
    refine: usize,
    rules: &Rules,
) -> Result<(T, T, usize), FunctionalError> {
    let factor = retarded_tensor_factor(spec);
    let mut jobs = Vec::new();
    for (bp, (sp, _)) in x.branches().iter().enumerate() {
        for (bq, (sq, wq)) in y.branches().iter().enumerate() {
            for j in 0..wq.samples().len() - 1 {
                jobs.push((bp, bq, *sp * *sq, j));
            }
        }
    }
    let parts: Vec<Result<(T, T, usize), FunctionalError>> = jobs
        .par_iter()
        .map(|&(bp, bq, sign, j)| {
            let wp = x.branches()[bp].1;
            let wq = y.branches()[bq].1;
            segment(wp, wq, j, &factor, x, y, spec, s, refine, rules).map(|(h, l, n)| (h * sign, l * sign, n))
        })
        .collect();
    let mut high = Vec::with_capacity(parts.len());
    let mut diff = Vec::with_capacity(parts.len());
    let mut evaluations = 0;
    for p in parts {
        let (h, l, n) = p?;
        high.push(h);
        diff.push((h - l).abs());
        evaluations += n;
    }
    Ok((pairwise_sum::<T, T>(&high), pairwise_sum::<T, T>(&diff), evaluations))
}

/// `phi_XY` for Gaussian-profile sources; refines the cells until the two
/// rule orders agree to `rel_tol`.
pub(super) fn phi_tube<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<Estimate<T>, FunctionalError> {
    let (sx, sy, sk) = (x.smearing_width(), y.smearing_width(), spec.smearing_width);
    let s = (sx * sx + sy * sy + sk * sk).sqrt();
    let rules = Rules { low: legendre_rule(LOW), high: legendre_rule(HIGH) };
    let scale = x.coupling() * y.coupling();
    let mut evaluations = 0;
    let mut last = None;
    for refine in 0..4 {
        let (value, error, n) = sweep(x, y, spec, s, refine, &rules)?;
        evaluations += n;
        let converged = error <= T::lit(cfg.rel_tol) * value.abs() || error == T::zero();
        last = Some(Estimate { value: value * scale, error: error * scale.abs(), evaluations, converged });
        if converged {
            break;
        }
    }
    Ok(last.expect("at least one sweep"))
}
