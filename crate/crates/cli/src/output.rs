//! CSV and gnuplot data emission.

use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    /// Whitespace-separated columns with `#` comments, readable by gnuplot.
    Plot,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        let sep = match format {
            Format::Csv => ",",
            Format::Plot => " ",
        };
        if format == Format::Plot {
            out.push_str("# ");
        }
        out.push_str(&self.columns.join(sep));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(sep));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip representation; `inf` and `nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}
