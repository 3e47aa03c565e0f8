//! Time-domain double integrals over the two worldline sets.
//!
//! These use the closed-form smeared kernels directly and serve as
//! independent checks of the frequency-domain and light-cone routes.

use nalgebra::Vector3;

use super::cone::source_tensor;
use super::{check_field, FunctionalError, QuadratureConfig};
use crate::kernels::{
    hadamard_scalar, hadamard_tensor_factor, pauli_jordan_smeared, retarded_smeared, retarded_tensor_factor, KernelSpec,
    SourceTensor, TensorFactor,
};
use crate::quadrature::par_sum_map;
use crate::real::Real;
use crate::sources::{norm, BranchedSource};

struct Grid<T: nalgebra::Scalar> {
    t: Vec<T>,
    w: Vec<T>,
    /// Per branch: sign times coupling, then positions and source tensors.
    branches: Vec<(T, Vec<Vector3<T>>, Vec<SourceTensor<T>>)>,
}

fn grid<T: Real>(
    src: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    h: T,
    cfg: &QuadratureConfig,
) -> Result<Grid<T>, FunctionalError> {
    let (a, b) = src.window();
    let n = ((b - a) / h).ceil().as_f64().max(1.0) as usize;
    if n + 1 > cfg.max_direct_points {
        return Err(FunctionalError::GridTooLarge(n + 1));
    }
    let step = (b - a) / T::from_usize(n);
    let t: Vec<T> = (0..=n).map(|i| if i == n { b } else { a + step * T::from_usize(i) }).collect();
    let mut w = vec![step; n + 1];
    w[0] = step * T::lit(0.5);
    w[n] = step * T::lit(0.5);
    let mut branches = Vec::new();
    for (sign, wl) in src.branches() {
        let mut pos = Vec::with_capacity(t.len());
        let mut ten = Vec::with_capacity(t.len());
        for &ti in &t {
            pos.push(wl.position_at(ti).expect("grid lies inside the window"));
            let v = wl.velocity_at(ti).expect("grid lies inside the window");
            ten.push(source_tensor(src.field_type(), spec.stress_model, &v));
        }
        branches.push((sign * wl.coupling(), pos, ten));
    }
    Ok(Grid { t, w, branches })
}

fn double_sum<T, K>(gx: &Grid<T>, gy: &Grid<T>, factor: &TensorFactor<T>, kernel: K) -> Result<T, FunctionalError>
where
    T: Real,
    K: Fn(T, T) -> Result<Option<T>, FunctionalError> + Sync,
{
    let rows: Vec<usize> = (0..gx.t.len()).collect();
    let failure = std::sync::Mutex::new(None);
    let total = par_sum_map::<T, T, _, _>(&rows, |&i| {
        let mut acc = T::zero();
        for (cx, px, ux) in &gx.branches {
            for (cy, py, uy) in &gy.branches {
                let mut row = T::zero();
                for j in 0..gy.t.len() {
                    let tau = gx.t[i] - gy.t[j];
                    let d = norm(&(px[i] - py[j]));
                    match kernel(tau, d) {
                        Ok(Some(k)) => match factor.contract(&ux[i], &uy[j]) {
                            Ok(c) => row += gy.w[j] * c * k,
                            Err(e) => {
                                failure.lock().expect("poisoned").get_or_insert(e.into());
                            }
                        },
                        Ok(None) => {}
                        Err(e) => {
                            failure.lock().expect("poisoned").get_or_insert(e);
                        }
                    }
                }
                acc += *cx * *cy * row;
            }
        }
        acc * gx.w[i]
    });
    match failure.into_inner().expect("poisoned") {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// The commutator coefficient `c` in `[phi_A, phi_B] = i c`, from the smeared
/// Pauli–Jordan kernel on a uniform time grid. Equals `phi_ab - phi_ba`.
pub fn commutator_direct<T: Real>(
    a: &BranchedSource<T>,
    b: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<T, FunctionalError> {
    check_field(spec, &[a, b])?;
    let (sa, sb, sk) = (a.smearing_width(), b.smearing_width(), spec.smearing_width);
    let s = (sa * sa + sb * sb + sk * sk).sqrt();
    let h = s / T::lit(cfg.direct_points_per_width);
    let ga = grid(a, spec, h, cfg)?;
    let gb = grid(b, spec, h, cfg)?;
    let reach = T::lit(9.0) * s;
    double_sum(&ga, &gb, &retarded_tensor_factor(spec), |tau, d| {
        if (tau - d).abs() > reach && (tau + d).abs() > reach {
            return Ok(None);
        }
        Ok(Some(pauli_jordan_smeared(tau, d, s)))
    })
}

/// `Re W_XY` from the closed-form smeared Hadamard function:
/// `(1/2) int int dS_X . N . dS_Y H(dt, r)`.
pub fn hadamard_time_domain<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<T, FunctionalError> {
    check_field(spec, &[x, y])?;
    let (sx, sy) = (x.smearing_width(), y.smearing_width());
    let s = ((sx * sx + sy * sy) * T::lit(0.5)).sqrt();
    let h = s / T::lit(cfg.direct_points_per_width);
    let gx = grid(x, spec, h, cfg)?;
    let gy = grid(y, spec, h, cfg)?;
    let v = double_sum(&gx, &gy, &hadamard_tensor_factor(spec), |tau, d| {
        Ok(Some(hadamard_scalar(spec, tau, d, s)?))
    })?;
    Ok(v * T::lit(0.5))
}

/// `phi_XY` from the retarded kernel of the two Gaussian profiles, with the
/// kernel smearing added in quadrature.
pub fn phi_time_domain<T: Real>(
    x: &BranchedSource<T>,
    y: &BranchedSource<T>,
    spec: &KernelSpec<T>,
    cfg: &QuadratureConfig,
) -> Result<T, FunctionalError> {
    check_field(spec, &[x, y])?;
    let (sx, sy, sk) = (x.smearing_width(), y.smearing_width(), spec.smearing_width);
    let s = (sx * sx + sy * sy + sk * sk).sqrt();
    let h = s / T::lit(cfg.direct_points_per_width);
    let gx = grid(x, spec, h, cfg)?;
    let gy = grid(y, spec, h, cfg)?;
    let reach = T::lit(9.0) * s;
    double_sum(&gx, &gy, &retarded_tensor_factor(spec), |tau, d| {
        if (tau - d).abs() > reach {
            return Ok(None);
        }
        Ok(Some(retarded_smeared(tau, d, s)))
    })
}
