//! End-to-end scenario runs: sources, functionals, state diagnostics and a
//! verdict, with a CSV row and a text block built from the same record.

use std::io::Write;

use serde::Serialize;

use crate::functionals::{compute_all_with_diagnostics, FunctionalsReport};
use crate::quantum_state::StateDiagnostics;
use crate::scenario::{Scenario, ScenarioGeometry};
use crate::sources::FieldType;
use crate::Error;

/// `|phi_ab| <= CAUSAL_RATIO * max(|phi_ba|, gamma_a, gamma_b)` counts as `phi_ab = 0`.
pub const CAUSAL_RATIO: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    /// `phi_ab` vanishes against the other scales.
    pub causal: bool,
    pub sr_holds: bool,
    pub entangled: bool,
    pub comp_holds: bool,
}

impl Verdict {
    /// The relations asserted for every physical run: the uncertainty
    /// relation, complementarity, and no entanglement when causal.
    pub fn invariants_hold(&self) -> bool {
        self.sr_holds && self.comp_holds && !(self.causal && self.entangled)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario_id: String,
    pub field_type: FieldType,
    pub geometry: ScenarioGeometry,
    pub report: FunctionalsReport<f64>,
    pub diagnostics: StateDiagnostics<f64>,
    pub verdict: Verdict,
}

pub fn is_causal(report: &FunctionalsReport<f64>) -> bool {
    let f = &report.functionals;
    f.phi_ab.abs() <= CAUSAL_RATIO * f.phi_ba.abs().max(f.gamma_a).max(f.gamma_b)
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunRecord, Error> {
    let (a, b, spec) = scenario.build()?;
    let report = compute_all_with_diagnostics(&a, &b, &spec, &scenario.quadrature)?;
    let diagnostics = StateDiagnostics::from_functionals(&report.functionals);
    let verdict = Verdict {
        causal: is_causal(&report),
        sr_holds: diagnostics.sr_holds,
        entangled: diagnostics.entangled,
        comp_holds: diagnostics.comp_holds,
    };
    Ok(RunRecord {
        scenario_id: scenario.id.clone(),
        field_type: scenario.field_type,
        geometry: scenario.geometry(),
        report,
        diagnostics,
        verdict,
    })
}

/// Floats with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    // -0 prints as 0
    format!("{:.16e}", x + 0.0)
}

pub const RUN_COLUMNS: [&str; 29] = [
    "scenario_id",
    "field_type",
    "gamma_a",
    "gamma_b",
    "gamma_c",
    "phi_ab",
    "phi_ba",
    "theta",
    "err_gamma_a",
    "err_gamma_b",
    "err_gamma_c",
    "err_phi_ab",
    "err_phi_ba",
    "commutator_spectral",
    "converged",
    "lambda_min",
    "negativity",
    "visibility",
    "distinguishability",
    "comp_sum",
    "sr_lhs",
    "sr_rhs",
    "distance",
    "spacelike",
    "causal",
    "sr_holds",
    "entangled",
    "comp_holds",
    "invariants_hold",
];

impl RunRecord {
    pub fn csv_row(&self) -> Vec<String> {
        let r = &self.report;
        let f = &r.functionals;
        let d = &self.diagnostics;
        let v = &self.verdict;
        let mut row = vec![self.scenario_id.clone(), self.field_type.to_string()];
        row.extend(
            [
                f.gamma_a,
                f.gamma_b,
                f.gamma_c,
                f.phi_ab,
                f.phi_ba,
                f.theta,
                r.gamma_a.error,
                r.gamma_b.error,
                r.gamma_c.error,
                r.phi_ab.error,
                r.phi_ba.error,
                r.commutator_spectral.value,
            ]
            .map(fmt_float),
        );
        row.push(r.all_converged().to_string());
        row.extend(
            [d.lambda_min, d.negativity, d.visibility, d.distinguishability, d.comp_sum, d.sr_lhs, d.sr_rhs, self.geometry.distance]
                .map(fmt_float),
        );
        row.extend(
            [self.geometry.spacelike, v.causal, v.sr_holds, v.entangled, v.comp_holds, v.invariants_hold()].map(|b| b.to_string()),
        );
        row
    }

    /// The verdict block printed by the command-line front end.
    pub fn verdict_text(&self) -> String {
        let v = &self.verdict;
        let f = &self.report.functionals;
        let yes = |b: bool, t: &str, n: &str| if b { t.to_string() } else { n.to_string() };
        format!(
            "scenario {} ({})\n\
             gamma_a {} gamma_b {} gamma_c {}\n\
             phi_ab {} phi_ba {}\n\
             causality: {}\n\
             uncertainty relation: {}\n\
             entanglement: {} (lambda_min {})\n\
             complementarity: {} (V^2 + D^2 = {})\n",
            self.scenario_id,
            self.field_type,
            fmt_float(f.gamma_a),
            fmt_float(f.gamma_b),
            fmt_float(f.gamma_c),
            fmt_float(f.phi_ab),
            fmt_float(f.phi_ba),
            yes(v.causal, "causal (phi_ab = 0)", "noncausal (phi_ab != 0)"),
            yes(v.sr_holds, "holds", "violated"),
            yes(v.entangled, "entangled", "not entangled"),
            fmt_float(self.diagnostics.lambda_min),
            yes(v.comp_holds, "holds", "violated"),
            fmt_float(self.diagnostics.comp_sum),
        )
    }
}

pub fn write_run_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_COLUMNS)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_separation_run_is_trivial() {
        let s = Scenario::preset("zero_separation").unwrap();
        let r = run_scenario(&s).unwrap();
        let f = r.report.functionals;
        assert_eq!([f.gamma_a, f.gamma_b, f.gamma_c, f.phi_ab, f.phi_ba], [0.0; 5]);
        assert_eq!(r.diagnostics.lambda_min, 0.0);
        assert_eq!(r.diagnostics.visibility, 1.0);
        assert_eq!(r.diagnostics.distinguishability, 0.0);
        assert!(r.verdict.causal && r.verdict.invariants_hold());

        let mut buf = Vec::new();
        write_run_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0].split(',').count(), RUN_COLUMNS.len());
        assert!(lines[1].starts_with("zero_separation,em,0.0000000000000000e0,"));
        assert!(lines[1].ends_with("false,true,true,false,true,true"));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_float(x), "3.0000000000000004e-1");
    }

    #[test]
    fn verdict_requires_separability_only_when_causal() {
        let v = Verdict { causal: false, sr_holds: true, entangled: true, comp_holds: true };
        assert!(v.invariants_hold());
        assert!(!Verdict { causal: true, ..v }.invariants_hold());
        assert!(!Verdict { sr_holds: false, ..v }.invariants_hold());
    }
}
