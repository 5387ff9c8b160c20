//! Static SVG views of the CSV artifacts.

use std::path::Path;

use plotters::prelude::*;

use crate::error::CliError;

pub type Series = (String, Vec<(f64, f64)>);

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(hi.abs() * 1e-6).max(1e-12);
    (lo - pad, hi + pad)
}

fn err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("plot {}", path.display()), e)
}

/// Lines `y(x)`, one per series.
pub fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<(), CliError> {
    let (x0, x1) = span(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = span(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(path, e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| err(path, e))?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(path, e))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(|e| err(path, e))?;
    root.present().map_err(|e| err(path, e))
}

/// Evaluated points as markers, fronts as staircases, and the reference
/// point as a cross.
pub fn front_plot(
    path: &Path,
    title: &str,
    points: &[Series],
    fronts: &[Series],
    reference: (f64, f64),
) -> Result<(), CliError> {
    let all = || {
        points
            .iter()
            .chain(fronts)
            .flat_map(|s| s.1.iter().copied())
            .chain(std::iter::once(reference))
    };
    let (x0, x1) = span(all().map(|p| p.0));
    let (y0, y1) = span(all().map(|p| p.1));
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("total delay (s)")
        .y_desc("total energy (J)")
        .draw()
        .map_err(|e| err(path, e))?;
    for (i, (name, pts)) in points.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| err(path, e))?
            .label(name.as_str())
            .legend(move |(x, y)| Circle::new((x + 9, y), 3, color.filled()));
        if let Some((_, front)) = fronts.iter().find(|f| &f.0 == name) {
            let mut stairs = Vec::with_capacity(front.len() * 2);
            for (k, &p) in front.iter().enumerate() {
                if k > 0 {
                    stairs.push((p.0, front[k - 1].1));
                }
                stairs.push(p);
            }
            chart
                .draw_series(LineSeries::new(stairs, color.stroke_width(2)))
                .map_err(|e| err(path, e))?;
        }
    }
    chart
        .draw_series(std::iter::once(Cross::new(reference, 6, BLACK.stroke_width(2))))
        .map_err(|e| err(path, e))?
        .label("reference")
        .legend(|(x, y)| Cross::new((x + 9, y), 5, BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(|e| err(path, e))?;
    root.present().map_err(|e| err(path, e))
}
