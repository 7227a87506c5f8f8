//! Human-readable artifacts: metric tables, temperature-sweep tables, and
//! self-contained token-highlight HTML pages.

use crate::eval::RunMetrics;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("empty report input: {0}")]
    EmptyInput(String),
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
}

/// Quote a CSV field per RFC 4180, minimally.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parse CSV text into rows of fields; handles quoted fields and embedded
/// quotes. Used for the round-trip guarantee on emitted tables.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>, ReportError> {
    let mut rows = Vec::new();
    let mut row = Vec::new();
    let mut field = String::new();
    let mut chars = text.chars().peekable();
    let mut in_quotes = false;

    while let Some(c) = chars.next() {
        if in_quotes {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                _ => field.push(c),
            }
        } else {
            match c {
                '"' => {
                    if field.is_empty() {
                        in_quotes = true;
                    } else {
                        return Err(ReportError::MalformedCsv(
                            "quote inside unquoted field".into(),
                        ));
                    }
                }
                ',' => {
                    row.push(std::mem::take(&mut field));
                }
                '\n' => {
                    row.push(std::mem::take(&mut field));
                    rows.push(std::mem::take(&mut row));
                }
                '\r' => {}
                _ => field.push(c),
            }
        }
    }
    if in_quotes {
        return Err(ReportError::MalformedCsv("unterminated quote".into()));
    }
    if !field.is_empty() || !row.is_empty() {
        row.push(field);
        rows.push(row);
    }
    Ok(rows)
}

/// Re-emit parsed CSV rows with the same minimal quoting.
pub fn emit_csv(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Fixed column order of the metrics table.
pub const METRICS_COLUMNS: &[&str] = &[
    "method",
    "lambda",
    "temperature",
    "epoch",
    "neg_log_fq",
    "fq_valid",
    "mu",
    "delta_mu_pct",
    "agg",
    "excluded",
    "exclusion_reason",
    "roc_auc",
    "op_fpr",
    "op_tpr",
    "informative_prob",
    "delta_rt_pct",
    "privleak",
    "best_agg",
    "best_neg_log_fq",
    "best_delta_mu",
    "best_delta_rt",
];

/// Write the per-run metrics table as CSV. Best-per-column markers (minimum
/// is best for every marked column) are computed over non-excluded runs only.
pub fn emit_metrics_table(runs: &[RunMetrics], path: impl AsRef<Path>) -> Result<(), ReportError> {
    if runs.is_empty() {
        return Err(ReportError::EmptyInput("no runs to tabulate".into()));
    }

    let best_index = |value: fn(&RunMetrics) -> f64| -> Option<usize> {
        runs.iter()
            .enumerate()
            .filter(|(_, r)| !r.excluded)
            .min_by(|(_, a), (_, b)| value(a).total_cmp(&value(b)))
            .map(|(i, _)| i)
    };
    let best_agg = best_index(|r| r.agg);
    let best_fq = best_index(|r| r.neg_log_fq);
    let best_dmu = best_index(|r| r.delta_mu_pct);
    let best_drt = best_index(|r| r.delta_rt_pct);

    let mut rows: Vec<Vec<String>> =
        vec![METRICS_COLUMNS.iter().map(|s| s.to_string()).collect()];
    for (i, r) in runs.iter().enumerate() {
        let mark = |best: Option<usize>| (best == Some(i)).to_string();
        rows.push(vec![
            r.method.clone(),
            fmt_opt_f64(r.lambda),
            fmt_opt_f64(r.temperature),
            fmt_opt_usize(r.epoch),
            r.neg_log_fq.to_string(),
            r.fq_valid.to_string(),
            r.mu.to_string(),
            r.delta_mu_pct.to_string(),
            r.agg.to_string(),
            r.excluded.to_string(),
            r.exclusion_reason.clone().unwrap_or_default(),
            r.roc_auc.to_string(),
            fmt_opt_f64(r.operating_point.map(|p| p.0)),
            fmt_opt_f64(r.operating_point.map(|p| p.1)),
            r.informative_prob.to_string(),
            r.delta_rt_pct.to_string(),
            fmt_opt_f64(r.privleak),
            mark(best_agg),
            mark(best_fq),
            mark(best_dmu),
            mark(best_drt),
        ]);
    }
    fs::write(path, emit_csv(&rows))?;
    Ok(())
}

/// One cell of a temperature-by-split sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub temperature: f64,
    pub split: f64,
    pub agg: f64,
    pub neg_log_fq: f64,
    pub delta_mu: f64,
    pub excluded: bool,
}

/// Long-format sweep table. Within each split, the non-excluded cell with
/// the lowest aggregated score is flagged best. Rows are ordered by split
/// then temperature.
pub fn emit_sweep(cells: &[SweepCell], path: impl AsRef<Path>) -> Result<(), ReportError> {
    if cells.is_empty() {
        return Err(ReportError::EmptyInput("no sweep cells".into()));
    }
    let mut sorted: Vec<&SweepCell> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        a.split
            .total_cmp(&b.split)
            .then(a.temperature.total_cmp(&b.temperature))
    });

    let mut best_per_split: Vec<(f64, &SweepCell)> = Vec::new();
    for cell in &sorted {
        if cell.excluded {
            continue;
        }
        match best_per_split.iter_mut().find(|(s, _)| *s == cell.split) {
            Some((_, best)) if cell.agg < best.agg => *best = cell,
            Some(_) => {}
            None => best_per_split.push((cell.split, cell)),
        }
    }
    let is_best = |cell: &SweepCell| {
        best_per_split
            .iter()
            .any(|(s, b)| *s == cell.split && std::ptr::eq(*b, cell))
    };

    let mut rows: Vec<Vec<String>> = vec![["temperature", "split", "agg", "neg_log_fq", "delta_mu", "best_flag"]
        .iter()
        .map(|s| s.to_string())
        .collect()];
    for cell in &sorted {
        rows.push(vec![
            cell.temperature.to_string(),
            cell.split.to_string(),
            cell.agg.to_string(),
            cell.neg_log_fq.to_string(),
            cell.delta_mu.to_string(),
            is_best(cell).to_string(),
        ]);
    }
    fs::write(path, emit_csv(&rows))?;
    Ok(())
}

/// One token of a highlight page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightToken {
    pub text: String,
    /// Raw method weight; None for prompt tokens (not unlearned).
    pub weight: Option<f64>,
    pub informative: bool,
}

/// One sample's tokens plus its identifying header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightSample {
    pub title: String,
    pub tokens: Vec<HighlightToken>,
}

/// A full highlight page for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightDocument {
    pub method: String,
    pub samples: Vec<HighlightSample>,
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&#39;")
}

/// Render a self-contained HTML page, one span per token. Background alpha
/// is the per-sample min-max rescaled weight; prompt tokens render fully
/// transparent; raw weights ride along in a data attribute. Informative
/// tokens are underlined.
pub fn emit_highlight_html(
    doc: &HighlightDocument,
    path: impl AsRef<Path>,
) -> Result<(), ReportError> {
    if doc.samples.is_empty() {
        return Err(ReportError::EmptyInput("no samples to highlight".into()));
    }
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n");
    let _ = writeln!(
        html,
        "<title>token weights: {}</title>",
        html_escape(&doc.method)
    );
    html.push_str(
        "<style>\nbody { font-family: sans-serif; margin: 2em; }\n\
         .sample { margin-bottom: 1.5em; line-height: 1.9; }\n\
         .title { font-weight: bold; margin-bottom: 0.25em; }\n\
         .tok { padding: 0.1em 0.15em; border-radius: 3px; }\n\
         .informative { text-decoration: underline; }\n\
         </style></head><body>\n",
    );
    let _ = writeln!(html, "<h1>{}</h1>", html_escape(&doc.method));

    for sample in &doc.samples {
        html.push_str("<div class=\"sample\">\n");
        let _ = write!(
            html,
            "<div class=\"title\">{}</div>\n<div>",
            html_escape(&sample.title)
        );

        // Per-sample min-max rescale of completion weights for display.
        let weights: Vec<f64> = sample.tokens.iter().filter_map(|t| t.weight).collect();
        let lo = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let rescale = |w: f64| -> f64 {
            if !lo.is_finite() || hi == lo {
                if w > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (w - lo) / (hi - lo)
            }
        };

        for tok in &sample.tokens {
            let class = if tok.informative {
                "tok informative"
            } else {
                "tok"
            };
            match tok.weight {
                Some(w) => {
                    let alpha = rescale(w);
                    let _ = write!(
                        html,
                        "<span class=\"{class}\" data-weight=\"{w}\" \
                         style=\"background: rgba(220, 60, 40, {alpha:.4})\">{}</span> ",
                        html_escape(&tok.text)
                    );
                }
                None => {
                    let _ = write!(
                        html,
                        "<span class=\"{class}\" style=\"background: rgba(220, 60, 40, 0)\">{}</span> ",
                        html_escape(&tok.text)
                    );
                }
            }
        }
        html.push_str("</div>\n</div>\n");
    }
    html.push_str("</body></html>\n");
    fs::write(path, html)?;
    Ok(())
}
