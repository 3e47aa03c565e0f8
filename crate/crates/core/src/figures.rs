//! Plot-ready data: classified samples for the inclusion diagram and the
//! fixed-half slices of F and G.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::inequality_lab::{axis_points, classify_region, CausalSampler, RegionSample, ScanFunction};
use crate::pipeline::fmt_float;
use crate::Error;

/// A coordinate of a causal tuple, for projecting samples to a plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Coordinate {
    GammaA,
    GammaB,
    GammaC,
    PhiBa,
}

impl Coordinate {
    pub fn name(self) -> &'static str {
        match self {
            Coordinate::GammaA => "gamma_a",
            Coordinate::GammaB => "gamma_b",
            Coordinate::GammaC => "gamma_c",
            Coordinate::PhiBa => "phi_ba",
        }
    }

    fn of(self, s: &RegionSample<f64>) -> f64 {
        match self {
            Coordinate::GammaA => s.gamma_a,
            Coordinate::GammaB => s.gamma_b,
            Coordinate::GammaC => s.gamma_c,
            Coordinate::PhiBa => s.phi_ba,
        }
    }
}

impl FromStr for Coordinate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gamma_a" => Ok(Coordinate::GammaA),
            "gamma_b" => Ok(Coordinate::GammaB),
            "gamma_c" => Ok(Coordinate::GammaC),
            "phi_ba" => Ok(Coordinate::PhiBa),
            other => Err(Error::Config(format!("unknown coordinate `{other}` (gamma_a, gamma_b, gamma_c, phi_ba)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionFigure {
    pub seed: u64,
    pub axes: (Coordinate, Coordinate),
    pub samples: Vec<RegionSample<f64>>,
}

impl RegionFigure {
    /// Samples whose uncertainty relation holds but which are entangled.
    pub fn violations(&self) -> usize {
        self.samples.iter().filter(|s| s.sr_holds && !s.nonentangled).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        let (u, v) = self.axes;
        w.write_record([
            "index",
            "u",
            "v",
            "gamma_a",
            "gamma_b",
            "gamma_c",
            "phi_ba",
            "sr_holds",
            "nonentangled",
            "comp_holds",
        ])?;
        for (i, s) in self.samples.iter().enumerate() {
            let mut row = vec![i.to_string(), fmt_float(u.of(s)), fmt_float(v.of(s))];
            row.extend([s.gamma_a, s.gamma_b, s.gamma_c, s.phi_ba].map(fmt_float));
            row.extend([s.sr_holds, s.nonentangled, s.comp_holds].map(|b| b.to_string()));
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// Classified samples of the inclusion-chain measure.
pub fn region_figure(n: usize, seed: u64, axes: (Coordinate, Coordinate)) -> RegionFigure {
    let sampler = CausalSampler::chain(seed);
    let samples = (0..n as u64).into_par_iter().map(|i| classify_region(&sampler.sample(i))).collect();
    RegionFigure { seed, axes, samples }
}

/// The three planes through the cube center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Slice {
    /// `(u, v, 1/2)`.
    Xy,
    /// `(u, 1/2, v)`.
    Xz,
    /// `(1/2, u, v)`.
    Yz,
}

impl Slice {
    pub const ALL: [Slice; 3] = [Slice::Xy, Slice::Xz, Slice::Yz];

    pub fn name(self) -> &'static str {
        match self {
            Slice::Xy => "xy",
            Slice::Xz => "xz",
            Slice::Yz => "yz",
        }
    }

    pub fn point(self, u: f64, v: f64) -> [f64; 3] {
        match self {
            Slice::Xy => [u, v, 0.5],
            Slice::Xz => [u, 0.5, v],
            Slice::Yz => [0.5, u, v],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlicePoint {
    pub slice: Slice,
    pub u: f64,
    pub v: f64,
    pub value: f64,
}

/// `function` on a `grid x grid` lattice over `[margin, 1 - margin]^2` in
/// each of the three half planes.
pub fn slices(function: ScanFunction, grid: usize, margin: f64) -> Result<Vec<SlicePoint>, Error> {
    if grid < 2 || !(margin > 0.0 && margin < 0.5) {
        return Err(Error::Config("slices need grid >= 2 and margin in (0, 0.5)".into()));
    }
    let pts = axis_points(grid, margin);
    let mut out = Vec::with_capacity(3 * grid * grid);
    for slice in Slice::ALL {
        for &u in &pts {
            for &v in &pts {
                let [x, y, z] = slice.point(u, v);
                out.push(SlicePoint { slice, u, v, value: function.eval(x, y, z)? });
            }
        }
    }
    Ok(out)
}

pub fn write_slices_csv<W: Write>(out: W, points: &[SlicePoint]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slice", "u", "v", "value", "log_value"])?;
    for p in points {
        w.write_record([p.slice.name().to_string(), fmt_float(p.u), fmt_float(p.v), fmt_float(p.value), fmt_float(p.value.ln())])?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliceMinimum {
    pub slice: Slice,
    pub min_value: f64,
    pub argmin: [f64; 3],
}

/// Minimum of each half slice.
pub fn slice_minima(points: &[SlicePoint]) -> Vec<SliceMinimum> {
    Slice::ALL
        .iter()
        .filter_map(|&slice| {
            points.iter().filter(|p| p.slice == slice).min_by(|a, b| a.value.total_cmp(&b.value)).map(|p| SliceMinimum {
                slice,
                min_value: p.value,
                argmin: slice.point(p.u, p.v),
            })
        })
        .collect()
}

pub fn write_minima_csv<W: Write>(out: W, minima: &[SliceMinimum]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slice", "min_value", "argmin_x", "argmin_y", "argmin_z"])?;
    for m in minima {
        let mut row = vec![m.slice.name().to_string(), fmt_float(m.min_value)];
        row.extend(m.argmin.map(fmt_float));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_slices_are_positive_with_finite_logs() {
        let pts = slices(ScanFunction::F, 50, 1e-3).unwrap();
        assert_eq!(pts.len(), 3 * 2500);
        assert!(pts.iter().all(|p| p.value > 0.0 && p.value.ln().is_finite()));
    }

    #[test]
    fn g_half_slice_lies_in_unit_interval() {
        let pts = slices(ScanFunction::G, 50, 1e-3).unwrap();
        assert!(pts.iter().filter(|p| p.slice == Slice::Yz).all(|p| p.value > 0.0 && p.value <= 1.0));
        let m = slice_minima(&pts);
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|m| m.min_value > 0.0));
    }

    #[test]
    fn region_samples_respect_the_first_inclusion() {
        let fig = region_figure(10_000, 42, (Coordinate::GammaA, Coordinate::PhiBa));
        assert_eq!(fig.violations(), 0);
        assert!(fig.samples.iter().any(|s| s.sr_holds));
        let mut a = Vec::new();
        let mut b = Vec::new();
        fig.write_csv(&mut a).unwrap();
        region_figure(10_000, 42, (Coordinate::GammaA, Coordinate::PhiBa)).write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }
}
