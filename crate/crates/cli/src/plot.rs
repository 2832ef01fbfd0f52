use plotters::coord::Shift;
use plotters::prelude::*;
use qpt_core::analysis::{DecaySeries, FitResult};
use std::path::Path;

type Area<'a> = DrawingArea<SVGBackend<'a>, Shift>;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

pub struct Curve<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

fn positive_times(points: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points.iter().copied().filter(|p| p.0 > 0.0 && p.1.is_finite())
}

fn bounds(curves: &[Curve]) -> Option<((f64, f64), (f64, f64))> {
    let pts: Vec<(f64, f64)> = curves.iter().flat_map(|c| positive_times(c.points)).collect();
    if pts.is_empty() {
        return None;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = ((y1 - y0) * 0.05).max(1e-12);
    Some(((x0, x1 * 1.0001), (y0 - pad, y1 + pad)))
}

fn draw_panel(area: &Area, title: &str, y_desc: &str, curves: &[Curve], legend: bool) -> Result<(), String> {
    let Some(((x0, x1), (y0, y1))) = bounds(curves) else { return Ok(()) };
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(32)
        .y_label_area_size(56)
        .build_cartesian_2d((x0..x1).log_scale(), y0..y1)
        .map_err(|e| e.to_string())?;
    chart.configure_mesh().x_desc("t (s)").y_desc(y_desc).draw().map_err(|e| e.to_string())?;
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series = chart
            .draw_series(LineSeries::new(positive_times(curve.points), color.stroke_width(2)))
            .map_err(|e| e.to_string())?;
        if legend {
            series
                .label(curve.label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        }
    }
    if legend {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Curves against log time on a single panel.
pub fn line_chart(path: &Path, title: &str, y_desc: &str, curves: &[Curve], legend: bool) -> Result<(), String> {
    let root = SVGBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    draw_panel(&root, title, y_desc, curves, legend)?;
    root.present().map_err(|e| e.to_string())
}

/// One panel per series with its fitted curve overlaid.
pub fn decay_panels(path: &Path, series: &[DecaySeries], fits: &[Option<FitResult>]) -> Result<(), String> {
    let root = SVGBackend::new(path, (1000, 1200)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let panels = root.split_evenly((3, 2));
    for ((area, s), fit) in panels.iter().zip(series).zip(fits) {
        let data: Vec<(f64, f64)> = s.times.iter().copied().zip(s.values.iter().copied()).collect();
        let mut curves = vec![Curve { label: "data".into(), points: &data }];
        let model: Vec<(f64, f64)> = match fit {
            Some(f) => s.times.iter().map(|&t| (t, f.evaluate(t))).collect(),
            None => Vec::new(),
        };
        if let Some(f) = fit {
            curves.push(Curve { label: format!("fit T = {:.4} s", f.t_star), points: &model });
        }
        draw_panel(area, &s.channel_label, "magnetization", &curves, true)?;
    }
    root.present().map_err(|e| e.to_string())
}

/// Plain text table.
pub fn table(path: &Path, title: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let width = 150 * header.len() as u32;
    let height = 60 + 24 * (rows.len() as u32 + 1);
    let root = SVGBackend::new(path, (width, height)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let style = ("monospace", 14).into_font();
    root.draw(&Text::new(title.to_string(), (10, 10), ("sans-serif", 18).into_font())).map_err(|e| e.to_string())?;
    let lines = std::iter::once(header.iter().map(|s| s.to_string()).collect::<Vec<_>>()).chain(rows.iter().cloned());
    for (r, line) in lines.enumerate() {
        for (col, cell) in line.iter().enumerate() {
            let pos = (10 + 150 * col as i32, 44 + 24 * r as i32);
            root.draw(&Text::new(cell.clone(), pos, style.clone())).map_err(|e| e.to_string())?;
        }
    }
    root.present().map_err(|e| e.to_string())
}
