//! Convergence tables as CSV.
//!
//! ```text
//! N,delta,value,exact,abs_error,wall_time_ms
//! 16,6.25000000e-2,...
//! CR,9.64400000e-1
//! ```
//!
//! Reals use `{:.8e}` (nine significant digits); Rust's float formatting
//! ignores locale, and parsing the text back yields the printed numbers.

use std::io::{Read, Write};

use anyhow::{anyhow, bail, Context, Result};

use gsocp::fit_rate;
use gsocp::grid::fmt_sci;

pub const HEADER: [&str; 6] = ["N", "delta", "value", "exact", "abs_error", "wall_time_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub delta: f64,
    pub value: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub wall_time_ms: f64,
}

impl ReportRow {
    pub fn new(n: usize, delta: f64, value: f64, exact: f64, wall_time_ms: f64) -> Self {
        Self {
            n,
            delta,
            value,
            exact,
            abs_error: (value - exact).abs(),
            wall_time_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    /// `None` when the errors admit no log-log fit (e.g. an exact zero).
    pub rate: Option<f64>,
}

impl ConvergenceReport {
    pub fn from_rows(rows: Vec<ReportRow>) -> Self {
        let deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        let errors: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
        let rate = fit_rate(&deltas, &errors).ok();
        Self { rows, rate }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.abs_error).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_sci(r.delta),
                fmt_sci(r.value),
                fmt_sci(r.exact),
                fmt_sci(r.abs_error),
                fmt_sci(r.wall_time_ms),
            ])?;
        }
        let rate = self.rate.map_or_else(|| "NaN".to_string(), fmt_sci);
        w.write_record(["CR".to_string(), rate])?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(false)
            .from_reader(input);
        let mut records = r.records();
        let header = records.next().ok_or_else(|| anyhow!("empty report"))??;
        if header.iter().ne(HEADER) {
            bail!("unexpected header {:?}", header);
        }
        let mut rows = Vec::new();
        let mut rate = None;
        for (line, rec) in records.enumerate() {
            let rec = rec?;
            if rate.is_some() {
                bail!("data after the CR line");
            }
            if rec.get(0) == Some("CR") {
                let v: f64 = rec
                    .get(1)
                    .ok_or_else(|| anyhow!("CR line has no value"))?
                    .parse()?;
                rate = Some(if v.is_nan() { None } else { Some(v) });
                continue;
            }
            if rec.len() != HEADER.len() {
                bail!("row {} has {} fields", line + 1, rec.len());
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .with_context(|| format!("row {} column {}", line + 1, HEADER[i]))
            };
            rows.push(ReportRow {
                n: rec[0]
                    .parse()
                    .with_context(|| format!("row {} column N", line + 1))?,
                delta: num(1)?,
                value: num(2)?,
                exact: num(3)?,
                abs_error: num(4)?,
                wall_time_ms: num(5)?,
            });
        }
        let rate = rate.ok_or_else(|| anyhow!("missing CR line"))?;
        Ok(Self { rows, rate })
    }
}
