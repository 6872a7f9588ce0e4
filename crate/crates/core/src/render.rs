//! Text rendering of matrices and reports.
//!
//! CSV output is row-major with a header row of column indices. Numbers are
//! written in scientific notation with 12 significant digits, so output bytes
//! depend only on the values. Impossible readings are written as
//! [`UNDEFINED`] instead of a number.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::detector::ConditionalMatrix;
use crate::inference::{OptimisationReport, PosteriorMatrix};
use crate::montecarlo::{EmpiricalColumn, EmpiricalJoint};
use crate::priors::NumberPrior;

pub const UNDEFINED: &str = "undefined";

pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEFINED.to_string(), fmt_num)
}

/// Rectangular table with a corner label, integer column indices and
/// integer row indices.
struct Table {
    corner: &'static str,
    cols: usize,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut out = String::from(self.corner);
        for c in 0..self.cols {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            write!(out, "{r}").unwrap();
            for &v in row {
                write!(out, ",{}", fmt_opt(v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    fn json(&self, rows: &str, cols: &str, quantity: &str) -> String {
        let doc = json!({
            "quantity": quantity,
            "rows": rows,
            "columns": cols,
            "values": self.rows,
        });
        serde_json::to_string_pretty(&doc).unwrap() + "\n"
    }
}

fn pmn_table(matrix: &ConditionalMatrix) -> Table {
    Table {
        corner: "m\\n",
        cols: matrix.n_max() + 1,
        rows: (0..=matrix.m_max())
            .map(|m| (0..=matrix.n_max()).map(|n| Some(matrix.get(m, n))).collect())
            .collect(),
    }
}

fn pnm_table(post: &PosteriorMatrix) -> Table {
    Table {
        corner: "n\\m",
        cols: post.m_max() + 1,
        rows: (0..=post.n_max())
            .map(|n| (0..=post.m_max()).map(|m| post.get(n, m)).collect())
            .collect(),
    }
}

pub fn pmn_csv(matrix: &ConditionalMatrix) -> String {
    pmn_table(matrix).csv()
}

pub fn pmn_json(matrix: &ConditionalMatrix) -> String {
    pmn_table(matrix).json("m", "n", "P(m|n)")
}

pub fn pnm_csv(post: &PosteriorMatrix) -> String {
    pnm_table(post).csv()
}

pub fn pnm_json(post: &PosteriorMatrix) -> String {
    pnm_table(post).json("n", "m", "P(n|m)")
}

pub fn pn_csv(prior: &NumberPrior) -> String {
    let mut out = String::from("n,P(n)\n");
    for (n, &p) in prior.probs().iter().enumerate() {
        writeln!(out, "{n},{}", fmt_num(p)).unwrap();
    }
    out
}

pub fn pn_json(prior: &NumberPrior) -> String {
    serde_json::to_string_pretty(prior).unwrap() + "\n"
}

pub fn optmap_csv(report: &OptimisationReport) -> String {
    let mut out = String::from("m,m_opt\n");
    for (m, opt) in report.map.iter().enumerate() {
        match opt {
            Some(o) => writeln!(out, "{m},{o}").unwrap(),
            None => writeln!(out, "{m},{UNDEFINED}").unwrap(),
        }
    }
    out
}

pub fn optmap_json(report: &OptimisationReport) -> String {
    let doc = json!({ "m_opt": report.map, "ties": report.ties });
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}

pub fn fidelity_csv(report: &OptimisationReport) -> String {
    let mut out = String::from("m,P(m),F_raw,F_opt\n");
    for m in 0..report.map.len() {
        writeln!(
            out,
            "{m},{},{},{}",
            fmt_num(report.outcome_marginal[m]),
            fmt_opt(report.fidelity_raw[m]),
            fmt_opt(report.fidelity_opt[m]),
        )
        .unwrap();
    }
    out
}

pub fn fidelity_json(report: &OptimisationReport) -> String {
    let doc = json!({
        "outcome_marginal": report.outcome_marginal,
        "fidelity_raw": report.fidelity_raw,
        "fidelity_opt": report.fidelity_opt,
        "avg_fidelity_raw": report.avg_fidelity_raw,
        "avg_fidelity_opt": report.avg_fidelity_opt,
    });
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}

fn empirical_table(columns: &[EmpiricalColumn]) -> Table {
    let m_len = columns.iter().map(|c| c.counts.len()).max().unwrap_or(0);
    let freqs: Vec<Vec<f64>> = columns.iter().map(EmpiricalColumn::frequencies).collect();
    Table {
        corner: "m\\n",
        cols: columns.len(),
        rows: (0..m_len)
            .map(|m| freqs.iter().map(|f| Some(f.get(m).copied().unwrap_or(0.0))).collect())
            .collect(),
    }
}

fn joint_table(joint: &EmpiricalJoint) -> Table {
    let conds: Vec<Option<Vec<f64>>> = (0..joint.counts.len()).map(|m| joint.conditional(m)).collect();
    Table {
        corner: "n\\m",
        cols: conds.len(),
        rows: (0..=joint.n_max)
            .map(|n| conds.iter().map(|c| c.as_ref().map(|c| c[n])).collect())
            .collect(),
    }
}

pub fn empirical_pmn_csv(columns: &[EmpiricalColumn]) -> String {
    empirical_table(columns).csv()
}

pub fn empirical_pmn_json(columns: &[EmpiricalColumn]) -> String {
    empirical_table(columns).json("m", "n", "empirical P(m|n)")
}

pub fn empirical_pnm_csv(joint: &EmpiricalJoint) -> String {
    joint_table(joint).csv()
}

pub fn empirical_pnm_json(joint: &EmpiricalJoint) -> String {
    joint_table(joint).json("n", "m", "empirical P(n|m)")
}

/// Two-column listing `index,value` with a custom header.
pub fn series_csv(header: &str, values: &[Option<f64>]) -> String {
    let mut out = format!("{header}\n");
    for (i, &v) in values.iter().enumerate() {
        writeln!(out, "{i},{}", fmt_opt(v)).unwrap();
    }
    out
}

pub fn series_json<T: Serialize>(name: &str, values: &T) -> String {
    serde_json::to_string_pretty(&json!({ name: values })).unwrap() + "\n"
}

/// Matrix read back from a CSV table written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub corner: String,
    pub columns: Vec<usize>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
}

pub fn read_table_csv(text: &str) -> Result<ParsedTable, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty table")?;
    let mut head = header.split(',');
    let corner = head.next().unwrap_or_default().to_string();
    let columns = head
        .map(|c| c.parse::<usize>().map_err(|e| format!("bad column index {c:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        let idx = fields.next().unwrap_or_default();
        let idx = idx
            .parse::<usize>()
            .map_err(|e| format!("bad row index {idx:?}: {e}"))?;
        let values = fields
            .map(|f| {
                if f == UNDEFINED {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|e| format!("bad value {f:?}: {e}"))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != columns.len() {
            return Err(format!("row {idx} has {} values, expected {}", values.len(), columns.len()));
        }
        rows.push((idx, values));
    }
    Ok(ParsedTable {
        corner,
        columns,
        rows,
    })
}
