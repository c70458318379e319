//! Rendering of a [`ResultMatrix`](super::ResultMatrix) as CSV, JSON or a
//! Markdown table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, ResultMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    MarkdownTable,
}

/// One CSV row per (strategy, detector) cell, rates with four decimals.
/// Byte-identical across runs with equal inputs: no timestamps inside.
pub fn render_csv(matrix: &ResultMatrix) -> String {
    let mut out = String::from("strategy,detector,evaded,detected,tie,undetermined,evasion_rate\n");
    for (row, strategy) in matrix.strategies.iter().enumerate() {
        for (col, detector) in matrix.detectors.iter().enumerate() {
            let cell = &matrix.cells[row][col];
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.4}\n",
                csv_field(strategy),
                csv_field(detector),
                cell.evaded,
                cell.detected,
                cell.tie,
                cell.undetermined,
                cell.evasion_rate,
            ));
        }
    }
    out
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Strategy-rows × detector-columns table of evasion rates.
pub fn render_markdown(matrix: &ResultMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("| strategy \\ detector ({}) |", matrix.benchmark));
    for detector in &matrix.detectors {
        out.push_str(&format!(" {detector} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &matrix.detectors {
        out.push_str("---|");
    }
    out.push('\n');
    for (row, strategy) in matrix.strategies.iter().enumerate() {
        out.push_str(&format!("| {strategy} |"));
        for cell in &matrix.cells[row] {
            out.push_str(&format!(" {:.4} |", cell.evasion_rate));
        }
        out.push('\n');
    }
    out
}

/// Writes the matrix to `path` in the requested format.
pub fn emit_report(
    matrix: &ResultMatrix,
    format: ReportFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    let contents = match format {
        ReportFormat::Csv => render_csv(matrix),
        ReportFormat::Json => {
            serde_json::to_string_pretty(matrix).expect("matrix serializes") + "\n"
        }
        ReportFormat::MarkdownTable => render_markdown(matrix),
    };
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
