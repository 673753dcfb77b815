use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentReport, MethodSpec, MethodSummary};
use super::{RetrievalTrial, Scores};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub method: String,
    pub k_first: Option<usize>,
    pub threshold: f64,
    pub scores: Option<Scores>,
    /// No trial of this method passed the threshold.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub thresholds: Vec<f64>,
    pub methods: Vec<String>,
    pub cells: Vec<GridCell>,
}

impl SensitivityGrid {
    pub fn cell(&self, method: &str, threshold: f64) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.threshold.to_bits() == threshold.to_bits())
    }
}

fn passes(t: &RetrievalTrial, threshold: f64) -> bool {
    threshold <= 0.0 || t.thought_fitness.is_some_and(|f| f >= threshold)
}

/// Recomputes every method's scores on the trials whose thought fitness is at
/// least each threshold. A threshold of 0 keeps every trial.
pub fn sensitivity_analysis(report: &ExperimentReport, thresholds: &[f64]) -> SensitivityGrid {
    let methods: Vec<String> = report.methods.iter().map(|m| m.method.clone()).collect();
    let mut cells = Vec::new();
    for summary in &report.methods {
        let k_first = summary
            .method
            .parse::<MethodSpec>()
            .ok()
            .and_then(|m| m.k_first());
        for &threshold in thresholds {
            let kept: Vec<&RetrievalTrial> = report
                .trials
                .iter()
                .filter(|t| t.method == summary.method && passes(t, threshold))
                .collect();
            let s = MethodSummary::from_trials(summary.method.clone(), &kept, summary.excluded);
            cells.push(GridCell {
                method: summary.method.clone(),
                k_first,
                threshold,
                empty: kept.is_empty(),
                scores: s.scores,
            });
        }
    }
    SensitivityGrid {
        thresholds: thresholds.to_vec(),
        methods,
        cells,
    }
}

fn fmt_score(s: Option<f64>) -> String {
    s.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

/// Plain-text table: one row per method with F1, MRR, macro-F1 and counts,
/// followed by per-language rows.
pub fn report_table(report: &ExperimentReport) -> String {
    let width = report
        .methods
        .iter()
        .map(|m| m.method.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}  {:>8}",
        "Method", "F1", "MRR", "macro-F1", "trials", "excluded"
    );
    for m in &report.methods {
        let s = m.scores;
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>6}  {:>8}",
            m.method,
            fmt_score(s.map(|s| s.f1)),
            fmt_score(s.map(|s| s.mrr)),
            fmt_score(s.map(|s| s.macro_f1)),
            s.map_or(0, |s| s.trials),
            m.excluded
        );
    }
    let langs: Vec<(&str, &str, &Scores)> = report
        .methods
        .iter()
        .flat_map(|m| {
            m.per_language
                .iter()
                .map(move |(l, s)| (m.method.as_str(), l.as_str(), s))
        })
        .collect();
    if !langs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>8}  {:>8}  {:>6}",
            "Method", "lang", "F1", "MRR", "trials"
        );
        for (m, l, s) in langs {
            let _ = writeln!(
                out,
                "{m:<width$}  {l:>4}  {:>8.4}  {:>8.4}  {:>6}",
                s.f1, s.mrr, s.trials
            );
        }
    }
    if let Some(t) = &report.thought_stats {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "thoughts: {}  mean alignment fitness {:.4}  mean replay fitness {:.4}",
            t.thoughts, t.mean_alignment_fitness, t.mean_replay_fitness
        );
    }
    out
}

/// Grid as text: one block per metric, rows are methods, columns thresholds.
pub fn grid_table(grid: &SensitivityGrid) -> String {
    let width = grid
        .methods
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = String::new();
    for (name, pick) in [("F1", 0usize), ("MRR", 1)] {
        let _ = write!(out, "{name:<width$}");
        for t in &grid.thresholds {
            let _ = write!(out, "  {:>8}", format!(">={t:.2}"));
        }
        let _ = writeln!(out);
        for m in &grid.methods {
            let _ = write!(out, "{m:<width$}");
            for &t in &grid.thresholds {
                let v = grid.cell(m, t).and_then(|c| c.scores).map(|s| {
                    if pick == 0 {
                        s.f1
                    } else {
                        s.mrr
                    }
                });
                let _ = write!(
                    out,
                    "  {:>8}",
                    v.map_or_else(|| "empty".into(), |v| format!("{v:.4}"))
                );
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(out);
    }
    out
}

/// Long-format CSV: `method,k_first,threshold,metric,value,trials`.
pub fn grid_csv(grid: &SensitivityGrid) -> String {
    let mut out = String::from("method,k_first,threshold,metric,value,trials\n");
    for c in &grid.cells {
        let k = c.k_first.map(|k| k.to_string()).unwrap_or_default();
        for (metric, value) in [
            ("f1", c.scores.map(|s| s.f1)),
            ("mrr", c.scores.map(|s| s.mrr)),
            ("macro_f1", c.scores.map(|s| s.macro_f1)),
        ] {
            let v = value.map(|v| v.to_string()).unwrap_or_default();
            let n = c.scores.map_or(0, |s| s.trials);
            let _ = writeln!(out, "{},{k},{},{metric},{v},{n}", c.method, c.threshold);
        }
    }
    out
}
