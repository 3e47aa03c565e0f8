//! Path-superposed sources: sampled worldlines, branched sources and the
//! smeared source differences they generate.

use std::fmt;

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("worldline needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample times must be strictly increasing (index {0})")]
    NonMonotonicTime(usize),
    #[error("non-finite value in sample {0}")]
    NonFinite(usize),
    #[error("superluminal motion at sample {index}: |v| = {speed}")]
    Superluminal { index: usize, speed: f64 },
    #[error("smearing width must be positive and finite, got {0}")]
    BadSmearing(f64),
    #[error("branches disagree: {0}")]
    BranchMismatch(String),
    #[error("operation needs a {expected} source, got {found}")]
    FieldTypeMismatch { expected: FieldType, found: FieldType },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Em,
    Gr,
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldType::Em => "em",
            FieldType::Gr => "gr",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::A => "A",
            Label::B => "B",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldlineSample<T> {
    pub t: T,
    pub x: Vector3<T>,
    pub v: Vector3<T>,
}

/// A sampled timelike trajectory.
///
/// Positions and velocities are interpolated linearly between samples.
/// The field-theoretic integrals use the polyline through the sampled
/// positions, whose current is exactly conserved.
#[derive(Clone, Debug, PartialEq)]
pub struct Worldline<T> {
    samples: Vec<WorldlineSample<T>>,
    coupling: T,
    smearing_width: T,
}

impl<T: Real> Worldline<T> {
    pub fn new(samples: Vec<WorldlineSample<T>>, coupling: T, smearing_width: T) -> Result<Self, SourceError> {
        if samples.len() < 2 {
            return Err(SourceError::TooFewSamples(samples.len()));
        }
        if !(smearing_width > T::zero()) || !smearing_width.is_finite() {
            return Err(SourceError::BadSmearing(smearing_width.as_f64()));
        }
        if !coupling.is_finite() {
            return Err(SourceError::InvalidParameter { name: "coupling", reason: "not finite".into() });
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.t.is_finite() && s.x.iter().all(|c| c.is_finite()) && s.v.iter().all(|c| c.is_finite());
            if !finite {
                return Err(SourceError::NonFinite(i));
            }
            let v2 = s.v.dot(&s.v);
            if v2 >= T::one() {
                return Err(SourceError::Superluminal { index: i, speed: v2.sqrt().as_f64() });
            }
            if i > 0 {
                let prev = &samples[i - 1];
                if !(s.t > prev.t) {
                    return Err(SourceError::NonMonotonicTime(i));
                }
                let dx = s.x - prev.x;
                let slope2 = dx.dot(&dx) / ((s.t - prev.t) * (s.t - prev.t));
                if slope2 >= T::one() {
                    return Err(SourceError::Superluminal { index: i, speed: slope2.sqrt().as_f64() });
                }
            }
        }
        Ok(Self { samples, coupling, smearing_width })
    }

    pub fn samples(&self) -> &[WorldlineSample<T>] {
        &self.samples
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn smearing_width(&self) -> T {
        self.smearing_width
    }

    pub fn t_start(&self) -> T {
        self.samples[0].t
    }

    pub fn t_end(&self) -> T {
        self.samples[self.samples.len() - 1].t
    }

    /// Index `j` of the segment `[t_j, t_{j+1}]` containing `t` (clamped).
    pub fn segment_index(&self, t: T) -> usize {
        let n = self.samples.len();
        let j = self.samples.partition_point(|s| s.t <= t);
        j.clamp(1, n - 1) - 1
    }

    /// Constant velocity of the polyline on segment `j`.
    pub fn segment_velocity(&self, j: usize) -> Vector3<T> {
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        (b.x - a.x) / (b.t - a.t)
    }

    fn lerp<F: Fn(&WorldlineSample<T>) -> Vector3<T>>(&self, t: T, f: F) -> Option<Vector3<T>> {
        if t < self.t_start() || t > self.t_end() {
            return None;
        }
        let j = self.segment_index(t);
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        let w = (t - a.t) / (b.t - a.t);
        Some(f(a) * (T::one() - w) + f(b) * w)
    }

    pub fn position_at(&self, t: T) -> Option<Vector3<T>> {
        self.lerp(t, |s| s.x)
    }

    pub fn velocity_at(&self, t: T) -> Option<Vector3<T>> {
        self.lerp(t, |s| s.v)
    }

    /// Largest distance of any sample from `origin`.
    pub fn extent_about(&self, origin: &Vector3<T>) -> T {
        self.samples.iter().map(|s| (s.x - origin).norm_sq().sqrt()).fold(T::zero(), T::max)
    }
}

trait NormSq<T> {
    fn norm_sq(&self) -> T;
}

impl<T: Real> NormSq<T> for Vector3<T> {
    fn norm_sq(&self) -> T {
        self.dot(self)
    }
}

pub(crate) fn norm<T: Real>(v: &Vector3<T>) -> T {
    v.dot(v).sqrt()
}

/// Two branches of one particle that separate and recombine.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchedSource<T> {
    right: Worldline<T>,
    left: Worldline<T>,
    field_type: FieldType,
    label: Label,
}

impl<T: Real> BranchedSource<T> {
    pub fn new(right: Worldline<T>, left: Worldline<T>, field_type: FieldType, label: Label) -> Result<Self, SourceError> {
        if right.coupling != left.coupling {
            return Err(SourceError::BranchMismatch("couplings differ".into()));
        }
        if right.smearing_width != left.smearing_width {
            return Err(SourceError::BranchMismatch("smearing widths differ".into()));
        }
        let span = (right.t_end() - right.t_start()).abs();
        let ttol = T::epsilon() * T::lit(64.0) * (T::one() + span + right.t_start().abs());
        if (right.t_start() - left.t_start()).abs() > ttol || (right.t_end() - left.t_end()).abs() > ttol {
            return Err(SourceError::BranchMismatch("time windows differ".into()));
        }
        let ends = [
            (&right.samples[0].x, &left.samples[0].x),
            (&right.samples[right.samples.len() - 1].x, &left.samples[left.samples.len() - 1].x),
        ];
        for (xr, xl) in ends {
            let scale = T::one() + norm(xr).max(norm(xl));
            if norm(&(xr - xl)) > T::epsilon() * T::lit(64.0) * scale {
                return Err(SourceError::BranchMismatch("branches do not coincide at the window ends".into()));
            }
        }
        Ok(Self { right, left, field_type, label })
    }

    pub fn right(&self) -> &Worldline<T> {
        &self.right
    }

    pub fn left(&self) -> &Worldline<T> {
        &self.left
    }

    pub fn field_type(&self) -> FieldType {
        self.field_type
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn coupling(&self) -> T {
        self.right.coupling
    }

    pub fn smearing_width(&self) -> T {
        self.right.smearing_width
    }

    pub fn window(&self) -> (T, T) {
        (self.right.t_start(), self.right.t_end())
    }

    /// True when both branches are the same trajectory, so every source
    /// difference vanishes identically.
    pub fn is_degenerate(&self) -> bool {
        self.right.samples == self.left.samples
    }

    /// Midpoint of the two branch starting points.
    pub fn center(&self) -> Vector3<T> {
        (self.right.samples[0].x + self.left.samples[0].x) * T::lit(0.5)
    }

    /// Branches as `(sign, worldline)`: `+` for R, `-` for L.
    pub fn branches(&self) -> [(T, &Worldline<T>); 2] {
        [(T::one(), &self.right), (-T::one(), &self.left)]
    }
}

/// Normalised isotropic Gaussian of width `sigma` evaluated at squared radius `r2`.
pub fn gaussian<T: Real>(r2: T, sigma: T) -> T {
    let two_pi_s2 = T::lit(2.0) * T::PI() * sigma * sigma;
    (-r2 / (T::lit(2.0) * sigma * sigma)).exp() / (two_pi_s2 * two_pi_s2.sqrt())
}

fn require<T: Real>(src: &BranchedSource<T>, expected: FieldType) -> Result<(), SourceError> {
    if src.field_type != expected {
        return Err(SourceError::FieldTypeMismatch { expected, found: src.field_type });
    }
    Ok(())
}

fn four_velocity<T: Real>(v: &Vector3<T>) -> Vector4<T> {
    Vector4::new(T::one(), v.x, v.y, v.z)
}

/// Smeared current difference `e Σ± u^μ G_σ(x - X_±(t))`; zero outside the window.
pub fn delta_current<T: Real>(src: &BranchedSource<T>, t: T, x: &Vector3<T>) -> Result<Vector4<T>, SourceError> {
    require(src, FieldType::Em)?;
    let mut out = Vector4::zeros();
    for (sign, w) in src.branches() {
        let (Some(pos), Some(vel)) = (w.position_at(t), w.velocity_at(t)) else {
            return Ok(Vector4::zeros());
        };
        let d = x - pos;
        out += four_velocity(&vel) * (sign * w.coupling * gaussian(d.dot(&d), w.smearing_width));
    }
    Ok(out)
}

/// Smeared stress difference `m Σ± u^μ u^ν G_σ(x - X_±(t))`; zero outside the window.
pub fn delta_stress<T: Real>(src: &BranchedSource<T>, t: T, x: &Vector3<T>) -> Result<Matrix4<T>, SourceError> {
    require(src, FieldType::Gr)?;
    let mut out = Matrix4::zeros();
    for (sign, w) in src.branches() {
        let (Some(pos), Some(vel)) = (w.position_at(t), w.velocity_at(t)) else {
            return Ok(Matrix4::zeros());
        };
        let d = x - pos;
        let u = four_velocity(&vel);
        out += u * u.transpose() * (sign * w.coupling * gaussian(d.dot(&d), w.smearing_width));
    }
    Ok(out)
}

/// Parameters of the canonical separate-hold-recombine trajectory.
///
/// The R branch moves along `axis` with velocity `v_max sin^2(pi s / tau)`
/// for `tau = (1 - hold_fraction) t_total / 2`, holds at `+separation/2`,
/// and returns along the time-reversed profile. The L branch mirrors it.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPath<T> {
    pub t_total: T,
    pub t_start: T,
    pub separation: T,
    pub hold_fraction: T,
    pub center: Vector3<T>,
    pub axis: Vector3<T>,
    pub coupling: T,
    pub smearing_width: T,
    pub samples: usize,
}

impl<T: Real> SplitPath<T> {
    /// Ramp duration on each side of the hold.
    pub fn ramp_time(&self) -> T {
        (T::one() - self.hold_fraction) * self.t_total * T::lit(0.5)
    }

    /// Peak branch speed during the ramps.
    pub fn peak_speed(&self) -> T {
        self.separation / self.ramp_time()
    }

    /// Displacement and velocity of the R branch along the axis at local time `s`.
    pub fn profile(&self, s: T) -> (T, T) {
        let tau = self.ramp_time();
        let half = T::lit(0.5);
        let vmax = self.peak_speed();
        let out = |s: T| {
            let ph = T::PI() * s / tau;
            let disp = self.separation * (half * s / tau - (T::lit(2.0) * ph).sin() / (T::lit(4.0) * T::PI()));
            (disp, vmax * ph.sin() * ph.sin())
        };
        if s <= tau {
            out(s.max(T::zero()))
        } else if s < self.t_total - tau {
            (self.separation * half, T::zero())
        } else {
            let (d, v) = out((self.t_total - s).max(T::zero()));
            (d, -v)
        }
    }

    fn validate(&self) -> Result<Vector3<T>, SourceError> {
        let bad = |name: &'static str, reason: &str| Err(SourceError::InvalidParameter { name, reason: reason.into() });
        if !(self.t_total > T::zero()) || !self.t_total.is_finite() {
            return bad("t_total", "must be positive and finite");
        }
        if !self.t_start.is_finite() {
            return bad("t_start", "must be finite");
        }
        if !(self.separation >= T::zero()) || !self.separation.is_finite() {
            return bad("separation", "must be non-negative and finite");
        }
        if !(self.hold_fraction > T::zero() && self.hold_fraction < T::one()) {
            return bad("hold_fraction", "must lie strictly between 0 and 1");
        }
        if self.samples < 8 {
            return bad("samples", "need at least 8 samples");
        }
        let n = norm(&self.axis);
        if !(n > T::zero()) || !n.is_finite() {
            return bad("axis", "must be a nonzero finite vector");
        }
        if !(self.peak_speed() < T::one()) {
            return Err(SourceError::Superluminal { index: 0, speed: self.peak_speed().as_f64() });
        }
        Ok(self.axis / n)
    }
}

/// Builds the two-branch source described by `path`.
pub fn make_split_path<T: Real>(field_type: FieldType, label: Label, path: &SplitPath<T>) -> Result<BranchedSource<T>, SourceError> {
    let axis = path.validate()?;
    let n = path.samples;
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for i in 0..n {
        let s = path.t_total * T::from_usize(i) / T::from_usize(n - 1);
        let (d, v) = path.profile(s);
        let t = path.t_start + s;
        right.push(WorldlineSample { t, x: path.center + axis * d, v: axis * v });
        left.push(WorldlineSample { t, x: path.center - axis * d, v: -axis * v });
    }
    let right = Worldline::new(right, path.coupling, path.smearing_width)?;
    let left = Worldline::new(left, path.coupling, path.smearing_width)?;
    BranchedSource::new(right, left, field_type, label)
}
