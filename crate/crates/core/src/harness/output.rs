//! Plain CSV and text outputs.

use std::io::Write;

use super::experiment::SweepRow;
use super::metrics::{Estimate, MetricsSummary};
use crate::error::{Error, Result};

/// `(metric, subgroup label, estimate)` rows of one summary.
fn scalar_rows(m: &MetricsSummary) -> Vec<(&'static str, String, Estimate)> {
    let mut rows = Vec::new();
    for (s, e) in m.dose_error.iter().enumerate() {
        rows.push(("dose_error", (s + 1).to_string(), *e));
    }
    rows.push(("dose_error", "all".into(), m.total_error));
    rows.push(("safe_type1", "all".into(), m.safe_type1));
    rows.push(("safe_type2", "all".into(), m.safe_type2));
    rows.push(("safe_total", "all".into(), m.safe_total));
    rows.push(("efficacy_per_patient", "all".into(), m.efficacy_per_patient));
    rows.push(("toxicity_per_patient", "all".into(), m.toxicity_per_patient));
    for (s, e) in m.toxicity_compliance.iter().enumerate() {
        rows.push(("toxicity_compliance", (s + 1).to_string(), *e));
    }
    for (s, &n) in m.compliance_excluded.iter().enumerate() {
        let e = Estimate { mean: n as f64, se: 0.0, n: m.replications };
        rows.push(("compliance_excluded", (s + 1).to_string(), e));
    }
    for (s, curve) in m.recruitment.iter().enumerate() {
        let last = curve.last().copied().unwrap_or(0.0);
        rows.push(("final_recruitment", (s + 1).to_string(), Estimate { mean: last, se: 0.0, n: m.replications }));
    }
    rows.push((
        "conventional_safety_calls",
        "all".into(),
        Estimate { mean: m.conventional_calls as f64, se: 0.0, n: m.replications },
    ));
    rows
}

pub fn write_summary_csv<W: Write>(out: W, summaries: &[MetricsSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "metric", "subgroup", "mean", "se", "n"])?;
    for m in summaries {
        for (metric, sub, e) in scalar_rows(m) {
            w.write_record([m.policy.name(), metric, &sub, &e.mean.to_string(), &e.se.to_string(), &e.n.to_string()])?;
        }
    }
    w.flush().map_err(Error::Output)
}

pub fn write_curves_csv<W: Write>(out: W, summaries: &[MetricsSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "round", "subgroup", "recruitment", "mse"])?;
    for m in summaries {
        for (s, (rec, mse)) in m.recruitment.iter().zip(&m.mse).enumerate() {
            for (t, (r, e)) in rec.iter().zip(mse).enumerate() {
                w.write_record([
                    m.policy.name(),
                    &(t + 1).to_string(),
                    &(s + 1).to_string(),
                    &r.to_string(),
                    &e.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(Error::Output)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "budget", "horizon", "policy", "metric", "subgroup", "mean", "se", "n"])?;
    for row in rows {
        let m = &row.summary;
        for (metric, sub, e) in scalar_rows(m) {
            w.write_record([
                row.param.name(),
                &row.value.to_string(),
                &row.budget.to_string(),
                &row.horizon.to_string(),
                m.policy.name(),
                metric,
                &sub,
                &e.mean.to_string(),
                &e.se.to_string(),
                &e.n.to_string(),
            ])?;
        }
    }
    w.flush().map_err(Error::Output)
}

/// `key = value` lines.
pub fn write_meta<W: Write>(mut out: W, entries: &[(&str, String)]) -> Result<()> {
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").map_err(Error::Output)?;
    }
    out.flush().map_err(Error::Output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_experiment;
    use crate::policies::{HyperParams, PolicyKind};
    use crate::scenario::Scenario;

    #[test]
    fn summary_has_header_and_one_row_per_metric() {
        let sc = Scenario::reference().with_budget_horizon(30, 90).unwrap();
        let s = run_experiment(&sc, &[PolicyKind::C3p3], &HyperParams::default(), 3, 1).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("policy,metric,subgroup,mean,se,n"));
        assert_eq!(lines.count(), scalar_rows(&s[0]).len());
        assert!(text.contains("c-3p3,dose_error,all,"));

        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 90);
    }
}
