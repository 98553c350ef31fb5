//! Minimal self-contained SVG plots of table columns: axes, tick labels, a
//! legend, and the scenario hash in the footer. Output depends only on the
//! input table, so plot files are reproducible byte for byte.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::TimeSeriesTable;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

/// Render selected columns against time into an SVG file.
pub fn emit_plot(table: &TimeSeriesTable, columns: &[String], path: &Path) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::Config("no columns selected for the plot".into()));
    }
    let times = table.times();
    if times.len() < 2 {
        return Err(Error::Config("need at least two rows to plot".into()));
    }
    let mut series = Vec::new();
    for name in columns {
        series.push((name.clone(), table.column(name)?));
    }
    let (t_lo, t_hi) = (times[0], *times.last().unwrap());
    let mut v_lo = f64::INFINITY;
    let mut v_hi = f64::NEG_INFINITY;
    for (_, vs) in &series {
        for v in vs {
            v_lo = v_lo.min(*v);
            v_hi = v_hi.max(*v);
        }
    }
    if !(v_hi.is_finite() && v_lo.is_finite()) {
        return Err(Error::NumericalConsistency("non-finite values in plot data".into()));
    }
    if v_hi - v_lo < 1e-300 {
        // constant columns render as a horizontal line mid-panel
        let pad = v_hi.abs().max(1.0) * 0.1;
        v_lo -= pad;
        v_hi += pad;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |t: f64| MARGIN_L + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let y_of = |v: f64| MARGIN_T + (v_hi - v) / (v_hi - v_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // frame
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    // ticks
    for i in 0..=4 {
        let t = t_lo + (t_hi - t_lo) * i as f64 / 4.0;
        let x = x_of(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 18.0,
            fmt(t)
        ));
        let v = v_lo + (v_hi - v_lo) * i as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">t</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 22.0
    ));
    // series
    for (idx, (name, vs)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = times
            .iter()
            .zip(vs.iter())
            .map(|(&t, &v)| format!("{:.3},{:.3}", x_of(t), y_of(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        // legend entry
        let ly = MARGIN_T + 16.0 + idx as f64 * 16.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            MARGIN_L + 10.0,
            MARGIN_L + 34.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{name}</text>\n",
            MARGIN_L + 40.0,
            ly + 4.0
        ));
    }
    // footer: scenario hash if the table metadata carries one
    let footer = table
        .metadata
        .iter()
        .find(|m| m.starts_with("scenario-hash:"))
        .cloned()
        .unwrap_or_else(|| "scenario-hash: unknown".to_string());
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#666666\">{footer}</text>\n",
        MARGIN_L,
        HEIGHT - 6.0
    ));
    svg.push_str("</svg>\n");

    let tmp = path.with_extension("svg.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(svg.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_with(rows: Vec<Vec<f64>>) -> TimeSeriesTable {
        TimeSeriesTable {
            columns: vec!["t".into(), "y".into()],
            rows,
            metadata: vec!["scenario-hash: deadbeef".into()],
        }
    }

    #[test]
    fn constant_column_is_horizontal_line() {
        let t = table_with(vec![vec![0.0, 2.5], vec![1.0, 2.5], vec![2.0, 2.5]]);
        let dir = std::env::temp_dir().join("qcdyn_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("const.svg");
        emit_plot(&t, &["y".to_string()], &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        // all polyline y-coordinates equal
        let poly = svg.lines().find(|l| l.contains("polyline")).unwrap();
        let pts: Vec<&str> = poly.split("points=\"").nth(1).unwrap().split('"').next().unwrap().split(' ').collect();
        let ys: Vec<&str> = pts.iter().map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
        assert!(svg.contains("deadbeef"));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn deterministic_output() {
        let t = table_with(vec![vec![0.0, 0.1], vec![0.5, -0.4], vec![1.0, 0.7]]);
        let dir = std::env::temp_dir().join("qcdyn_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.svg");
        let p2 = dir.join("b.svg");
        emit_plot(&t, &["y".to_string()], &p1).unwrap();
        emit_plot(&t, &["y".to_string()], &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        std::fs::remove_file(&p1).unwrap();
        std::fs::remove_file(&p2).unwrap();
    }

    #[test]
    fn unknown_column_rejected() {
        let t = table_with(vec![vec![0.0, 0.1], vec![1.0, 0.2]]);
        let dir = std::env::temp_dir().join("qcdyn_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("unknown.svg");
        assert!(matches!(
            emit_plot(&t, &["zz".to_string()], &path),
            Err(Error::UnknownColumn(_))
        ));
    }
}
