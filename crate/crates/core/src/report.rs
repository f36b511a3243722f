//! CSV and JSON encodings of ensemble reports and small result tables.
//!
//! CSV output is a sequence of sections. Each starts with a `# name` line
//! followed by a header row and data rows, always LF-terminated. Reals are
//! written with 10 significant digits. JSON is produced by `serde_json`,
//! whose shortest round-trip float formatting makes it lossless.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{EnsembleReport, ReportMetadata};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid("format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

/// Formats `x` with 10 significant digits, trailing zeros removed.
///
/// Plain decimal notation is used for `1e-6 <= |x| < 1e15`, scientific
/// notation (`2.770171838e-11`) outside that range.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let ax = x.abs();
    if !(1e-6..1e15).contains(&ax) {
        let s = format!("{x:.9e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let exp = ax.log10().floor() as i32;
    let decimals = (9 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV section: a name, a header row and string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_csv(&self, out: &mut String) {
        let _ = writeln!(out, "# {}", self.name);
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
}

/// Concatenates tables as CSV sections.
pub fn tables_to_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for t in tables {
        t.write_csv(&mut out);
    }
    out
}

fn real_list(v: &[f64]) -> String {
    v.iter().map(|&x| format_real(x)).collect::<Vec<_>>().join(";")
}

pub fn metadata_table(md: &ReportMetadata) -> Table {
    let mut meta = Table::new("metadata", &["key", "value"]);
    for (k, v) in [
        ("seed", md.seed.to_string()),
        ("theta", format_real(md.theta)),
        ("n", md.n.to_string()),
        ("samples", md.samples.to_string()),
        ("grid", md.grid.to_string()),
        ("measure", md.measure.clone()),
        ("version", md.version.clone()),
    ] {
        meta.push(vec![k.into(), v]);
    }
    meta
}

/// The report as CSV sections, metadata first.
pub fn report_tables(report: &EnsembleReport) -> Vec<Table> {
    let meta = metadata_table(&report.metadata);

    let mut curve = Table::new("mean_curve", &["t", "mean", "std_error"]);
    for p in &report.mean_curve {
        curve.push(vec![format_real(p.t), format_real(p.mean), format_real(p.std_error)]);
    }

    let mut moments = Table::new("moment_estimates", &["l", "tvec", "estimate", "std_error"]);
    for m in &report.moment_estimates {
        moments.push(vec![
            m.l.to_string(),
            real_list(&m.tvec),
            format_real(m.estimate),
            format_real(m.std_error),
        ]);
    }

    let mut modulus = Table::new("modulus_table", &["a", "mean_q", "std_error"]);
    for m in &report.modulus_table {
        modulus.push(vec![format_real(m.a), format_real(m.mean_q), format_real(m.std_error)]);
    }

    let mut hist = Table::new("increment_histogram", &["value", "count", "frequency"]);
    let mut dyadic = Table::new("dyadic_check", &["checked", "failures"]);
    if let Some(h) = &report.increment_histogram {
        for b in &h.bins {
            hist.push(vec![format_real(b.value), b.count.to_string(), format_real(b.frequency)]);
        }
        if let Some(d) = &h.dyadic {
            dyadic.push(vec![d.checked.to_string(), d.failures.to_string()]);
        }
    }

    let mut dist = Table::new("oracle_distances", &["name", "value"]);
    for d in &report.oracle_distances {
        dist.push(vec![d.name.clone(), format_real(d.value)]);
    }

    vec![meta, curve, moments, modulus, hist, dyadic, dist]
}

/// Any serialisable value as pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialise");
    s.push('\n');
    s
}

pub fn serialize_report(report: &EnsembleReport, format: Format) -> String {
    match format {
        Format::Csv => tables_to_csv(&report_tables(report)),
        Format::Json => to_json(report),
    }
}
