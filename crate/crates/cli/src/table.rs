//! Output tables rendered as CSV (RFC 4180) or Markdown.

use crate::scenario::FormatArg;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl OutputTable {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Fixed six-decimal display for every numeric cell.
pub fn num(value: f64) -> String {
    format!("{value:.6}")
}

fn csv_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn render_csv(table: &OutputTable) -> String {
    let mut out = String::new();
    let mut write_record = |cells: &[String]| {
        let line: Vec<String> = cells.iter().map(|c| csv_field(c)).collect();
        out.push_str(&line.join(","));
        out.push_str("\r\n");
    };
    write_record(&table.headers);
    for row in &table.rows {
        write_record(row);
    }
    out
}

fn render_markdown(table: &OutputTable) -> String {
    let columns = table.headers.len();
    let mut widths: Vec<usize> = table.headers.iter().map(|h| h.len()).collect();
    for row in &table.rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let pad = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect();
        format!("| {} |", padded.join(" | "))
    };
    let mut out = format!("### {}\n\n", table.title);
    out.push_str(&pad(&table.headers));
    out.push('\n');
    let rule: Vec<String> = (0..columns).map(|i| "-".repeat(widths[i])).collect();
    out.push_str(&format!("| {} |\n", rule.join(" | ")));
    for row in &table.rows {
        out.push_str(&pad(row));
        out.push('\n');
    }
    out
}

/// Renders tables in order, blank-line separated.
pub fn render_tables(tables: &[OutputTable], format: FormatArg) -> String {
    let rendered: Vec<String> = tables
        .iter()
        .map(|t| match format {
            FormatArg::Csv => render_csv(t),
            FormatArg::Md => render_markdown(t),
        })
        .collect();
    match format {
        FormatArg::Csv => rendered.join("\r\n"),
        FormatArg::Md => rendered.join("\n"),
    }
}
