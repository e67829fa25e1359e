//! Summary tables: CSV for downstream tools and a markdown table with one
//! row per (initial spider, stress category) and one column per method.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::GridError;
use crate::grid::{CellId, CellSummary, ComparisonResult};
use crate::policies::Method;

#[derive(Serialize)]
struct SummaryRow<'a> {
    initial_kind: &'a str,
    stress_category: String,
    method: &'a str,
    n_runs: usize,
    n_success: usize,
    accuracy_percent: String,
    mean_presented: String,
    std_presented: String,
    considered: bool,
    best: bool,
    marker: &'a str,
    p_vs_best: String,
}

fn fixed(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

fn index_comparisons(comparisons: &[ComparisonResult]) -> BTreeMap<CellId, &ComparisonResult> {
    comparisons.iter().map(|c| (c.cell, c)).collect()
}

pub fn write_summary_csv<W: Write>(
    summaries: &[CellSummary],
    comparisons: &[ComparisonResult],
    out: W,
) -> Result<(), GridError> {
    let by_cell = index_comparisons(comparisons);
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        let cmp = by_cell.get(&s.cell());
        let marker = cmp
            .and_then(|c| c.markers.get(&s.method))
            .map_or("", |m| m.symbol());
        let p = cmp.and_then(|c| c.p_values.get(&s.method).copied().flatten());
        w.serialize(SummaryRow {
            initial_kind: s.initial_kind.name(),
            stress_category: s.stress_category.to_string(),
            method: s.method.name(),
            n_runs: s.n_runs,
            n_success: s.n_success,
            accuracy_percent: format!("{:.2}", s.accuracy_percent),
            mean_presented: fixed(s.mean_presented, 2),
            std_presented: fixed(s.std_presented, 2),
            considered: s.considered,
            best: cmp.and_then(|c| c.best) == Some(s.method),
            marker,
            p_vs_best: p.map(|p| format!("{p:.6}")).unwrap_or_default(),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Markdown table. Each entry reads `mean±std` with the significance marker
/// and the accuracy in parentheses; the best method is bold and cells below
/// the accuracy threshold carry a dagger.
pub fn summary_markdown(summaries: &[CellSummary], comparisons: &[ComparisonResult]) -> String {
    let by_cell = index_comparisons(comparisons);
    let methods: BTreeSet<Method> = summaries.iter().map(|s| s.method).collect();
    let mut rows: BTreeMap<CellId, BTreeMap<Method, &CellSummary>> = BTreeMap::new();
    for s in summaries {
        rows.entry(s.cell()).or_default().insert(s.method, s);
    }

    let mut out = String::new();
    out.push_str("| Initial State | Stress |");
    for m in &methods {
        let _ = write!(out, " {} |", m.label());
    }
    out.push_str("\n|---|---|");
    for _ in &methods {
        out.push_str("---|");
    }
    out.push('\n');

    for (cell, by_method) in &rows {
        let cmp = by_cell.get(cell);
        let _ = write!(out, "| {} | {} |", cell.initial_kind.label(), cell.category.label());
        for m in &methods {
            let Some(s) = by_method.get(m) else {
                out.push_str(" |");
                continue;
            };
            let body = match (s.mean_presented, s.std_presented) {
                (Some(mean), Some(std)) => format!("{mean:.2}±{std:.2}"),
                _ => "n/a".to_string(),
            };
            let body = if cmp.and_then(|c| c.best) == Some(*m) {
                format!("**{body}**")
            } else {
                body
            };
            let marker = cmp
                .and_then(|c| c.markers.get(m))
                .map(|mk| mk.symbol().replace('*', "\\*"))
                .unwrap_or_default();
            let dagger = if s.considered { "" } else { " †" };
            let _ = write!(out, " {body}{marker} ({:.2}%){dagger} |", s.accuracy_percent);
        }
        out.push('\n');
    }
    out.push_str(
        "\nEntries: Spiders Presented mean±std over successful runs (accuracy %). \
         Bold: best eligible method. \\*\\*: best is significantly better than every other method; \
         \\*: not significantly different from the best (paired t-test, p < 0.05). \
         †: accuracy below 75%, not eligible.\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{compare, summarize, RunRecord, StdMode};
    use crate::session::InitialKind;

    fn records() -> Vec<RunRecord> {
        let mut out = Vec::new();
        for subject in 0..4u32 {
            for (method, base) in [(Method::RlZero, 3usize), (Method::Ga, 9)] {
                out.push(RunRecord {
                    method,
                    initial_kind: InitialKind::Min,
                    target: 1,
                    subject_id: subject,
                    repeat: 0,
                    success: true,
                    spiders_presented: base + subject as usize % 2,
                    iterations_used: 2,
                });
            }
        }
        out
    }

    #[test]
    fn single_cell_markdown() {
        let recs = records();
        let s = summarize(&recs, StdMode::PooledRuns).unwrap();
        let c = compare(&recs, &s);
        let md = summary_markdown(&s, &c);
        let table_rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| Min")).collect();
        assert_eq!(table_rows.len(), 1);
        assert!(md.lines().next().unwrap().contains("GA | RL_Zero"));
        assert!(table_rows[0].contains("**3.50±0.58**\\*\\* (100.00%)"), "{md}");
    }

    #[test]
    fn summary_csv_columns() {
        let recs = records();
        let s = summarize(&recs, StdMode::PooledRuns).unwrap();
        let c = compare(&recs, &s);
        let mut buf = Vec::new();
        write_summary_csv(&s, &c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "initial_kind,stress_category,method,n_runs,n_success,accuracy_percent,mean_presented,std_presented,considered,best,marker,p_vs_best"
        );
        assert_eq!(lines.next().unwrap(), "min,low,ga,4,4,100.00,9.50,0.58,true,false,,0.000000");
        assert_eq!(lines.next().unwrap(), "min,low,rl_zero,4,4,100.00,3.50,0.58,true,true,**,");
    }
}
