//! Scenario files: a versioned TOML tree with two particle blocks, the field
//! kernel and the quadrature controls.
//!
//! ```toml
//! schema_version = 1
//! id = "spacelike_em"
//! field_type = "em"
//!
//! [particle_a]
//! trajectory = "ramp"
//! t_total = 1.0
//! separation = 0.1
//! center = [0.0, 0.0, 0.0]
//! coupling = 0.1
//!
//! [particle_b]
//! # ...
//!
//! [kernel]
//! uv_cutoff = 4000.0
//! ```
//!
//! A particle is either a `ramp` split path or a `sampled` trajectory given
//! as times and R/L positions.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::QuadratureConfig;
use crate::kernels::{KernelError, KernelSpec, StressModel};
use crate::sources::{make_split_path, BranchedSource, FieldType, Label, SourceError, SplitPath, Worldline, WorldlineSample};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("particle_{label}: {source}")]
    Source { label: Label, source: SourceError },
    #[error("particle_{label}: {message}")]
    Trajectory { label: Label, message: String },
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
}

/// Bundled presets, by id.
pub const PRESETS: [(&str, &str); 5] = [
    ("spacelike_em", include_str!("../presets/spacelike_em.toml")),
    ("spacelike_gr", include_str!("../presets/spacelike_gr.toml")),
    ("timelike_em", include_str!("../presets/timelike_em.toml")),
    ("timelike_gr", include_str!("../presets/timelike_gr.toml")),
    ("zero_separation", include_str!("../presets/zero_separation.toml")),
];

fn default_hold() -> f64 {
    0.5
}

fn default_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_samples() -> usize {
    256
}

/// Split, hold and recombine along `axis` with a smooth ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampParticle {
    pub t_total: f64,
    #[serde(default)]
    pub t_start: f64,
    pub separation: f64,
    #[serde(default = "default_hold")]
    pub hold_fraction: f64,
    pub center: [f64; 3],
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    pub coupling: f64,
    /// Defaults to `separation / 20`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smearing_width: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

/// Explicit R and L positions on a shared time grid; velocities are taken
/// from centred differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledParticle {
    pub t: Vec<f64>,
    pub right: Vec<[f64; 3]>,
    pub left: Vec<[f64; 3]>,
    pub coupling: f64,
    pub smearing_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trajectory", rename_all = "snake_case")]
pub enum Particle {
    Ramp(RampParticle),
    Sampled(SampledParticle),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub gravitational_constant: f64,
    #[serde(default)]
    pub smearing_width: f64,
    pub uv_cutoff: f64,
    #[serde(default)]
    pub stress_model: StressModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    pub field_type: FieldType,
    #[serde(default)]
    pub seed: u64,
    pub particle_a: Particle,
    pub particle_b: Particle,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

/// Center distance and time windows, for the spacelike predicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScenarioGeometry {
    pub distance: f64,
    pub window_a: (f64, f64),
    pub window_b: (f64, f64),
    /// `D > T_A` and `D > T_B`.
    pub spacelike: bool,
}

fn ramp_path(p: &RampParticle) -> SplitPath<f64> {
    SplitPath {
        t_total: p.t_total,
        t_start: p.t_start,
        separation: p.separation,
        hold_fraction: p.hold_fraction,
        center: Vector3::from(p.center),
        axis: Vector3::from(p.axis),
        coupling: p.coupling,
        smearing_width: p.smearing_width.unwrap_or(p.separation / 20.0),
        samples: p.samples,
    }
}

fn sampled_branch(t: &[f64], x: &[[f64; 3]], label: Label) -> Result<Vec<WorldlineSample<f64>>, ScenarioError> {
    let bad = |message: String| ScenarioError::Trajectory { label, message };
    if x.len() != t.len() {
        return Err(bad(format!("{} positions for {} times", x.len(), t.len())));
    }
    if t.len() < 2 {
        return Err(bad("need at least two samples".into()));
    }
    let p: Vec<Vector3<f64>> = x.iter().map(|&v| Vector3::from(v)).collect();
    let n = t.len();
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let v = (p[hi] - p[lo]) / (t[hi] - t[lo]);
            WorldlineSample { t: t[i], x: p[i], v }
        })
        .collect())
}

impl Particle {
    pub fn build(&self, field: FieldType, label: Label) -> Result<BranchedSource<f64>, ScenarioError> {
        let wrap = |source| ScenarioError::Source { label, source };
        match self {
            Particle::Ramp(p) => make_split_path(field, label, &ramp_path(p)).map_err(wrap),
            Particle::Sampled(p) => {
                let right = Worldline::new(sampled_branch(&p.t, &p.right, label)?, p.coupling, p.smearing_width).map_err(wrap)?;
                let left = Worldline::new(sampled_branch(&p.t, &p.left, label)?, p.coupling, p.smearing_width).map_err(wrap)?;
                BranchedSource::new(right, left, field, label).map_err(wrap)
            }
        }
    }

    fn center(&self) -> Vector3<f64> {
        match self {
            Particle::Ramp(p) => Vector3::from(p.center),
            Particle::Sampled(p) => Vector3::from(p.right[0]),
        }
    }

    fn window(&self) -> (f64, f64) {
        match self {
            Particle::Ramp(p) => (p.t_start, p.t_start + p.t_total),
            Particle::Sampled(p) => (p.t[0], p.t[p.t.len() - 1]),
        }
    }

    fn scale_coupling(&mut self, s: f64) {
        match self {
            Particle::Ramp(p) => p.coupling *= s,
            Particle::Sampled(p) => p.coupling *= s,
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Version(s.schema_version));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml(&text).map_err(|e| match e {
            ScenarioError::Parse(m) => ScenarioError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn preset(id: &str) -> Result<Self, ScenarioError> {
        let (_, text) = PRESETS.iter().find(|(k, _)| *k == id).ok_or_else(|| ScenarioError::UnknownPreset(id.into()))?;
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are TOML-representable")
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec<f64>, ScenarioError> {
        let k = &self.kernel;
        let spec = KernelSpec {
            field_type: self.field_type,
            gravitational_constant: k.gravitational_constant,
            smearing_width: k.smearing_width,
            uv_cutoff: k.uv_cutoff,
            stress_model: k.stress_model,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Both sources and the kernel, with every precondition checked.
    pub fn build(&self) -> Result<(BranchedSource<f64>, BranchedSource<f64>, KernelSpec<f64>), ScenarioError> {
        let a = self.particle_a.build(self.field_type, Label::A)?;
        let b = self.particle_b.build(self.field_type, Label::B)?;
        Ok((a, b, self.kernel_spec()?))
    }

    pub fn geometry(&self) -> ScenarioGeometry {
        let distance = (self.particle_a.center() - self.particle_b.center()).norm();
        let window_a = self.particle_a.window();
        let window_b = self.particle_b.window();
        let spacelike = distance > window_a.1 - window_a.0 && distance > window_b.1 - window_b.0;
        ScenarioGeometry { distance, window_a, window_b, spacelike }
    }

    /// Ramp sample counts and the UV cutoff multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let mut s = self.clone();
        for p in [&mut s.particle_a, &mut s.particle_b] {
            if let Particle::Ramp(r) = p {
                r.samples = (r.samples - 1) * factor + 1;
            }
        }
        s.kernel.uv_cutoff *= factor as f64;
        s.quadrature.direct_points_per_width *= factor as f64;
        s
    }

    /// Both couplings multiplied by `s`.
    pub fn with_coupling_scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.particle_a.scale_coupling(s);
        out.particle_b.scale_coupling(s);
        out
    }
}
