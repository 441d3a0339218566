use plotters::prelude::*;
use qcoupler::output::{Cell, Table};
use qcoupler::{Error, Result};

/// Line plot of table columns against one x column.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    pub y_label: String,
    pub log_y: bool,
    /// Splits rows into one series per distinct value of this column.
    pub group: Option<String>,
}

impl PlotSpec {
    pub fn lines(title: &str, x: &str, ys: &[&str], y_label: &str) -> Self {
        PlotSpec {
            title: title.into(),
            x: x.into(),
            ys: ys.iter().map(|s| s.to_string()).collect(),
            y_label: y_label.into(),
            log_y: false,
            group: None,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn grouped_by(mut self, column: &str) -> Self {
        self.group = Some(column.into());
        self
    }
}

type Series = (String, Vec<(f64, f64)>);

fn index(table: &Table, name: &str) -> Result<usize> {
    table
        .columns
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::Data(format!("plot column `{name}` missing")))
}

fn number(c: &Cell) -> f64 {
    match c {
        Cell::Num(x) => *x,
        Cell::Int(i) => *i as f64,
        Cell::Text(_) => f64::NAN,
    }
}

fn key(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format!("{x}"),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn collect(table: &Table, spec: &PlotSpec) -> Result<Vec<Series>> {
    let xi = index(table, &spec.x)?;
    let gi = spec.group.as_deref().map(|g| index(table, g)).transpose()?;
    let mut series: Vec<Series> = Vec::new();
    for y in &spec.ys {
        let yi = index(table, y)?;
        for row in &table.rows {
            let label = match gi {
                Some(g) => format!("{y} [{}]", key(&row[g])),
                None => y.clone(),
            };
            let point = (number(&row[xi]), number(&row[yi]));
            if !(point.0.is_finite() && point.1.is_finite()) || (spec.log_y && point.1 <= 0.0) {
                continue;
            }
            match series.iter_mut().find(|(l, _)| *l == label) {
                Some((_, pts)) => pts.push(point),
                None => series.push((label, vec![point])),
            }
        }
    }
    Ok(series)
}

fn bounds(series: &[Series], f: fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(f))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Data(format!("plot rendering failed: {e:?}"))
}

/// Renders `spec` over `table` as an SVG document.
pub fn render(table: &Table, spec: &PlotSpec) -> Result<String> {
    let series = collect(table, spec)?;
    let (x0, x1) = bounds(&series, |p| p.0);
    let (y0, y1) = bounds(&series, |p| p.1);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(&spec.title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(70);
        let palette = |i: usize| Palette99::pick(i).to_rgba();
        macro_rules! finish {
            ($chart:expr) => {{
                let mut chart = $chart;
                chart
                    .configure_mesh()
                    .x_desc(spec.x.as_str())
                    .y_desc(spec.y_label.as_str())
                    .draw()
                    .map_err(draw_err)?;
                for (i, (label, pts)) in series.iter().enumerate() {
                    let color = palette(i);
                    chart
                        .draw_series(LineSeries::new(pts.iter().copied(), color))
                        .map_err(draw_err)?
                        .label(label.as_str())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
                }
                if series.len() <= 12 {
                    chart
                        .configure_series_labels()
                        .background_style(WHITE.mix(0.8))
                        .border_style(BLACK)
                        .draw()
                        .map_err(draw_err)?;
                }
            }};
        }
        if spec.log_y {
            finish!(builder
                .build_cartesian_2d(x0..x1, (y0..y1).log_scale())
                .map_err(draw_err)?);
        } else {
            finish!(builder
                .build_cartesian_2d(x0..x1, y0..y1)
                .map_err(draw_err)?);
        }
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}
