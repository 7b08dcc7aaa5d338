//! Side-by-side comparison of all five models on one instance.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SddError};
use crate::instance::ValidInstance;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::plan::ModelKind;
use crate::solver::{solve_f1, solve_f3, solve_f4, solve_slots, SolveReport, SolverConfig};

/// Column order of the CSV output (and of the text table).
pub const COLUMNS: [&str; 12] = [
    "model",
    "objective",
    "served",
    "service_rate",
    "trips",
    "distance",
    "avg_wait",
    "max_wait",
    "wait_variability",
    "optimal",
    "runtime",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: ModelKind,
    pub objective: Option<f64>,
    pub optimal: Option<bool>,
    pub runtime: Option<f64>,
    pub metrics: Option<MetricsReport>,
    /// Why the model could not be solved (missing data, size limits).
    pub error: Option<String>,
}

impl CompareRow {
    fn from_result(model: ModelKind, inst: &ValidInstance, res: Result<SolveReport>) -> CompareRow {
        let solved = res.and_then(|rep| Ok((compute_metrics(inst, &rep.plan)?, rep)));
        match solved {
            Ok((metrics, rep)) => CompareRow {
                model,
                objective: Some(rep.objective),
                optimal: Some(rep.optimal),
                runtime: Some(rep.runtime),
                metrics: Some(metrics),
                error: None,
            },
            Err(e) => CompareRow {
                model,
                objective: None,
                optimal: None,
                runtime: None,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    }

    /// Cells in [`COLUMNS`] order, numbers with 6 decimals, blanks for
    /// missing values.
    pub fn cells(&self) -> Vec<String> {
        let num = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
        let m = self.metrics.as_ref();
        vec![
            self.model.to_string(),
            num(self.objective),
            m.map_or(String::new(), |m| m.served.to_string()),
            num(m.map(|m| m.service_rate)),
            m.map_or(String::new(), |m| m.trips.to_string()),
            num(m.map(|m| m.distance)),
            num(m.and_then(|m| m.avg_wait)),
            num(m.and_then(|m| m.max_wait)),
            num(m.and_then(|m| m.wait_variability)),
            self.optimal.map_or(String::new(), |o| o.to_string()),
            num(self.runtime),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Solves every model (concurrently) and returns rows in the fixed order
/// F1, F2, F2LEX, F3, F4. A model whose data is missing gets an error row.
pub fn compare(inst: &ValidInstance, cfg: &SolverConfig) -> Vec<CompareRow> {
    #[derive(Clone, Copy)]
    enum Job {
        F1,
        Slots,
        F3,
        F4,
    }
    let jobs = [Job::F1, Job::Slots, Job::F3, Job::F4];
    let results: Vec<Vec<CompareRow>> = jobs
        .par_iter()
        .map(|job| match job {
            Job::F1 => vec![CompareRow::from_result(ModelKind::F1, inst, solve_f1(inst, cfg))],
            Job::Slots => match solve_slots(inst, cfg) {
                Ok((rev, lex)) => vec![
                    CompareRow::from_result(ModelKind::F2, inst, Ok(rev.report)),
                    CompareRow::from_result(ModelKind::F2Lex, inst, Ok(lex.report)),
                ],
                Err(e) => {
                    let msg = e.to_string();
                    [ModelKind::F2, ModelKind::F2Lex]
                        .into_iter()
                        .map(|m| CompareRow::from_result(m, inst, Err(SddError::MissingData(msg.clone()))))
                        .collect()
                }
            },
            Job::F3 => vec![CompareRow::from_result(ModelKind::F3, inst, solve_f3(inst, cfg))],
            Job::F4 => vec![CompareRow::from_result(ModelKind::F4, inst, solve_f4(inst, cfg))],
        })
        .collect();
    results.into_iter().flatten().collect()
}

/// Aligned plain-text table.
pub fn render_table(rows: &[CompareRow]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells()).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| cells.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |row: Vec<&str>| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(COLUMNS.to_vec());
    for r in &cells {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn render_csv(rows: &[CompareRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    let bytes = w.into_inner().map_err(|e| SddError::Malformed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, OptionSet, Order, Station};

    #[test]
    fn single_order_rows() {
        let mut inst = Instance::new(250.0);
        inst.options = Some(OptionSet {
            deadlines: vec![60.0, 120.0, 240.0],
        });
        inst.stations.push(Station::new(1, 3.0, 4.0, 1));
        inst.orders
            .push(Order::new(1, 3.0, 4.0, 0.0).with_wtp(vec![40.0, 30.0, 20.0]).with_stations(vec![1]));
        let inst = inst.validate().unwrap();
        let rows = compare(&inst, &SolverConfig::default());
        let models: Vec<ModelKind> = rows.iter().map(|r| r.model).collect();
        assert_eq!(models, ModelKind::ALL.to_vec());
        assert!(rows.iter().all(|r| r.error.is_none()));
        let mut f3 = rows[3].cells();
        let mut f4 = rows[4].cells();
        f3.drain(..1);
        f4.drain(..1);
        // Runtimes differ; everything else matches.
        f3.remove(9);
        f4.remove(9);
        assert_eq!(f3, f4);
        let table = render_table(&rows);
        assert_eq!(table.lines().count(), 6);
        let csv = render_csv(&rows).unwrap();
        assert!(csv.starts_with("model,objective,served"));
    }

    #[test]
    fn missing_prerequisites_only_affect_their_rows() {
        let mut inst = Instance::new(100.0);
        inst.orders.push(Order::new(1, 3.0, 4.0, 0.0));
        let inst = inst.validate().unwrap();
        let rows = compare(&inst, &SolverConfig::default());
        assert!(rows[0].error.is_none());
        assert!(rows[1..].iter().all(|r| r.error.is_some()));
    }
}
