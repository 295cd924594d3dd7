//! SVG figures. Each figure is a pure function of one result table, so
//! `topotrack plot` can redraw it from the file alone.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use topotrack::metrics::{Method, TrackRecord};

use crate::error::{CliError, CliResult};
use crate::output::read_table;
use crate::track::WeightRecord;

const SIZE: (u32, u32) = (960, 560);
const COLORS: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
];

fn plot_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("plotting failed: {e}"))
}

fn by_method<T>(rows: &[T], method: impl Fn(&T) -> Method) -> Vec<(Method, Vec<&T>)> {
    let mut groups: Vec<(Method, Vec<&T>)> = Vec::new();
    for r in rows {
        let m = method(r);
        match groups.iter_mut().find(|(g, _)| *g == m) {
            Some((_, v)) => v.push(r),
            None => groups.push((m, vec![r])),
        }
    }
    groups
}

/// Tracking error against `t`, log scale, one curve per method.
pub fn error_svg(records: &[TrackRecord]) -> CliResult<String> {
    let groups: Vec<(Method, Vec<(f64, f64)>)> = by_method(records, |r| r.method)
        .into_iter()
        .map(|(m, rows)| {
            let pts = rows
                .iter()
                .filter_map(|r| r.error.filter(|e| *e > 0.0).map(|e| (r.t as f64, e)))
                .collect();
            (m, pts)
        })
        .collect();
    let all = groups.iter().flat_map(|(_, p)| p.iter());
    let (mut lo, mut hi, mut t_max) = (f64::INFINITY, 0.0f64, 1.0f64);
    for (t, e) in all {
        lo = lo.min(*e);
        hi = hi.max(*e);
        t_max = t_max.max(*t);
    }
    if !(hi > 0.0) {
        return Err(CliError::Data("no positive error values to plot".into()));
    }
    // pad by a factor so the curves do not touch the frame
    let (lo, hi) = (lo / 1.5, hi * 1.5);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("tracking error", ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(80)
            .build_cartesian_2d(0f64..t_max, (lo..hi).log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("t")
            .y_desc("||w_t - w*_t||")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(plot_err)?;
        for (k, (m, pts)) in groups.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(m.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 24, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Total learned edge weight against time, with a vertical line at every
/// marked row.
pub fn weights_svg(rows: &[WeightRecord]) -> CliResult<String> {
    if rows.is_empty() {
        return Err(CliError::Data("no rows to plot".into()));
    }
    let groups = by_method(rows, |r| r.method);
    let (mut t0, mut t1, mut hi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for r in rows {
        t0 = t0.min(r.time_s);
        t1 = t1.max(r.time_s);
        hi = hi.max(r.total_weight);
    }
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    let hi = if hi > 0.0 { hi * 1.1 } else { 1.0 };
    let mut markers: Vec<(f64, &str)> = rows
        .iter()
        .filter(|r| !r.event.is_empty())
        .map(|r| (r.time_s, r.event.as_str()))
        .collect();
    markers.dedup();

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("total edge weight", ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(80)
            .build_cartesian_2d(t0..t1, 0f64..hi)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("time [s]")
            .y_desc("sum of weights")
            .draw()
            .map_err(plot_err)?;
        for (k, (m, pts)) in groups.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            chart
                .draw_series(LineSeries::new(
                    pts.iter().map(|r| (r.time_s, r.total_weight)),
                    color.stroke_width(2),
                ))
                .map_err(plot_err)?
                .label(m.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 24, y)], color.stroke_width(2)));
        }
        for (t, label) in &markers {
            chart
                .draw_series(LineSeries::new([(*t, 0.0), (*t, hi)], BLACK.stroke_width(1)))
                .map_err(plot_err)?;
            chart
                .draw_series(std::iter::once(Text::new(
                    label.to_string(),
                    (*t, hi * 0.97),
                    ("sans-serif", 14),
                )))
                .map_err(plot_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Track,
    Weights,
}

/// Column names of a CSV header line or of the first JSON row.
fn columns(path: &Path) -> CliResult<Vec<String>> {
    let ctx = |e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| ctx(&e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ctx(&e))?;
        Ok(v.get(0)
            .and_then(|row| row.as_object())
            .map(|o| o.keys().cloned().collect())
            .unwrap_or_default())
    } else {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| ctx(&e))?;
        Ok(rdr.headers().map_err(|e| ctx(&e))?.iter().map(str::to_string).collect())
    }
}

pub fn detect(path: &Path) -> CliResult<TableKind> {
    let cols = columns(path)?;
    let has = |c: &str| cols.iter().any(|x| x == c);
    if has("error") && has("t") && has("method") {
        Ok(TableKind::Track)
    } else if has("time_s") && has("total_weight") {
        Ok(TableKind::Weights)
    } else {
        Err(CliError::Data(format!(
            "{}: not a track or weights table (columns: {})",
            path.display(),
            cols.join(",")
        )))
    }
}

/// Redraws the figure belonging to a result table into `out_dir`.
pub fn cmd_plot(input: &Path, out_dir: &Path) -> CliResult<PathBuf> {
    let (svg, name) = match detect(input)? {
        TableKind::Track => (error_svg(&read_table::<TrackRecord>(input)?)?, "error.svg"),
        TableKind::Weights => (weights_svg(&read_table::<WeightRecord>(input)?)?, "weights.svg"),
    };
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    std::fs::write(&path, svg)?;
    Ok(path)
}
