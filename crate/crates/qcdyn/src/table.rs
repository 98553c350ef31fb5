//! Time-series tables and their CSV interchange form.
//!
//! The CSV layout is RFC-4180-style with `.` decimals and scientific
//! notation at 17 significant digits, preceded by a `#`-prefixed header block
//! that embeds the artifact version, the scenario hash, and the full
//! normalized scenario dump — enough to re-run the table exactly. Repeated
//! runs of the same scenario produce byte-identical files.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::propagate::EvolutionRecord;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    /// First column is always `t`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `#`-lines written verbatim into the CSV header block.
    pub metadata: Vec<String>,
}

impl TimeSeriesTable {
    pub fn from_record(record: &EvolutionRecord, track: &[String]) -> Result<Self> {
        let mut columns = vec!["t".to_string()];
        columns.extend(track.iter().cloned());
        let mut rows = Vec::with_capacity(record.times.len());
        let series: Vec<&[f64]> =
            track.iter().map(|name| record.column(name)).collect::<Result<_>>()?;
        for (k, &t) in record.times.iter().enumerate() {
            let mut row = Vec::with_capacity(columns.len());
            row.push(t);
            for s in &series {
                row.push(s[k]);
            }
            rows.push(row);
        }
        Ok(TimeSeriesTable { columns, rows, metadata: Vec::new() })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    fn check_monotone(&self) -> Result<()> {
        for pair in self.rows.windows(2) {
            if pair[1][0] <= pair[0][0] {
                return Err(Error::NumericalConsistency(format!(
                    "time axis not monotone: {} then {}",
                    pair[0][0], pair[1][0]
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for line in &self.metadata {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.check_monotone()?;
        let content = self.to_csv_string();
        let tmp = path.with_extension("csv.tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(content.as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_string(&text)
    }

    pub fn from_csv_string(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(meta) = line.strip_prefix('#') {
                metadata.push(meta.trim_start().to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if columns.is_empty() {
                columns = line.split(',').map(|s| s.trim().to_string()).collect();
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad number `{tok}`"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} cells, got {}", columns.len(), row.len()),
                });
            }
            rows.push(row);
        }
        if columns.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no header row".into() });
        }
        Ok(TimeSeriesTable { columns, rows, metadata })
    }
}

/// Aligned-time comparison of two tables. No interpolation unless opted in;
/// misaligned time axes are an error.
#[derive(Debug, Clone)]
pub struct TableComparison {
    pub columns: Vec<String>,
    pub max_abs: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub max_rel: Vec<f64>,
}

impl TableComparison {
    pub fn worst_max_abs(&self) -> f64 {
        self.max_abs.iter().fold(0.0_f64, |m, v| m.max(*v))
    }
}

pub fn compare_tables(
    a: &TimeSeriesTable,
    b: &TimeSeriesTable,
    columns: &[String],
    interpolate: bool,
) -> Result<TableComparison> {
    let ta = a.times();
    let tb = b.times();
    let aligned = ta.len() == tb.len()
        && ta.iter().zip(tb.iter()).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if !aligned && !interpolate {
        return Err(Error::Alignment(
            "time axes differ; pass the interpolation flag to compare anyway".into(),
        ));
    }
    let mut max_abs = Vec::new();
    let mut mean_abs = Vec::new();
    let mut max_rel = Vec::new();
    for name in columns {
        let ca = a.column(name)?;
        let cb = b.column(name)?;
        let mut worst = 0.0_f64;
        let mut total = 0.0;
        let mut worst_rel = 0.0_f64;
        let mut count = 0usize;
        for (k, &t) in ta.iter().enumerate() {
            let va = ca[k];
            let vb = if aligned {
                cb[k]
            } else {
                match interp(&tb, &cb, t) {
                    Some(v) => v,
                    None => continue,
                }
            };
            let d = (va - vb).abs();
            worst = worst.max(d);
            worst_rel = worst_rel.max(d / va.abs().max(vb.abs()).max(1e-300));
            total += d;
            count += 1;
        }
        if count == 0 {
            return Err(Error::Alignment("no overlapping times".into()));
        }
        max_abs.push(worst);
        mean_abs.push(total / count as f64);
        max_rel.push(worst_rel);
    }
    Ok(TableComparison { columns: columns.to_vec(), max_abs, mean_abs, max_rel })
}

fn interp(ts: &[f64], vs: &[f64], t: f64) -> Option<f64> {
    if ts.is_empty() || t < ts[0] - 1e-12 || t > ts[ts.len() - 1] + 1e-12 {
        return None;
    }
    let mut i = 0;
    while i + 1 < ts.len() && ts[i + 1] < t {
        i += 1;
    }
    if i + 1 >= ts.len() {
        return Some(vs[ts.len() - 1]);
    }
    let (t0, t1) = (ts[i], ts[i + 1]);
    if (t1 - t0).abs() < 1e-300 {
        return Some(vs[i]);
    }
    let w = (t - t0) / (t1 - t0);
    Some(vs[i] * (1.0 - w) + vs[i + 1] * w)
}
