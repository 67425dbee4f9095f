//! Minimal SVG line charts plus their backing CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Several series sharing one x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    /// Optional display value per x, used as the first CSV column.
    pub x_text: Option<Vec<String>>,
    pub series: Vec<(String, Vec<f64>)>,
    /// Fraction of the data span added on each side of both axes.
    pub padding: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

fn padded(min: f64, max: f64, padding: f64) -> (f64, f64) {
    let span = max - min;
    if span > 0.0 {
        (min - padding * span, max + padding * span)
    } else {
        (min - 0.5, max + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl LineChart {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: Vec<f64>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            x_text: None,
            series: Vec::new(),
            padding: 0.05,
        }
    }

    pub fn with_series(mut self, name: &str, y: Vec<f64>) -> Self {
        self.series.push((name.into(), y));
        self
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.series.is_empty() {
            return Err(Error::Empty("chart series"));
        }
        for (_, ys) in &self.series {
            if ys.len() != self.x.len() {
                return Err(Error::LengthMismatch {
                    left: ys.len(),
                    right: self.x.len(),
                });
            }
        }
        if let Some(t) = &self.x_text {
            if t.len() != self.x.len() {
                return Err(Error::LengthMismatch {
                    left: t.len(),
                    right: self.x.len(),
                });
            }
        }
        let values = self.x.iter().chain(self.series.iter().flat_map(|(_, y)| y));
        if values.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chart data"));
        }
        Ok(())
    }

    pub fn axis_range(&self) -> Result<AxisRange> {
        self.validate()?;
        let fold = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (x0, x1) = fold(&mut self.x.iter().copied());
        let (y0, y1) = fold(&mut self.series.iter().flat_map(|(_, y)| y.iter().copied()));
        let (x_min, x_max) = padded(x0, x1, self.padding);
        let (y_min, y_max) = padded(y0, y1, self.padding);
        Ok(AxisRange {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn to_svg(&self) -> Result<String> {
        let r = self.axis_range()?;
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - r.x_min) / (r.x_max - r.x_min) * pw;
        let py = |y: f64| MARGIN_TOP + (r.y_max - y) / (r.y_max - r.y_min) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-x-min="{}" data-x-max="{}" data-y-min="{}" data-y-max="{}">"#,
            r.x_min, r.x_max, r.y_min, r.y_max
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (left, right) = (MARGIN_LEFT, MARGIN_LEFT + pw);
        let (top, bottom) = (MARGIN_TOP, MARGIN_TOP + ph);
        let _ = writeln!(
            s,
            r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#
        );
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let xv = r.x_min + f * (r.x_max - r.x_min);
            let yv = r.y_min + f * (r.y_max - r.y_min);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                px(xv),
                bottom + 16.0,
                tick_label(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                left - 6.0,
                py(yv) + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            left + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, (name, ys)) in self.series.iter().enumerate() {
            let points: Vec<String> = self
                .x
                .iter()
                .zip(ys)
                .map(|(x, y)| format!("{:.3},{:.3}", px(*x), py(*y)))
                .collect();
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-name="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(name),
                points.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                right - 120.0,
                top + 14.0 * (i as f64 + 1.0),
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }

    /// One row per x value: `x_label,<series names...>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![self.x_label.clone()];
        header.extend(self.series.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (i, x) in self.x.iter().enumerate() {
            let mut row = vec![match &self.x_text {
                Some(t) => t[i].clone(),
                None => x.to_string(),
            }];
            row.extend(self.series.iter().map(|(_, y)| y[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotFiles {
    pub svg: PathBuf,
    pub csv: PathBuf,
}

/// Writes `<stem>.svg` and `<stem>.csv` into `dir`.
pub fn emit_plot(dir: &Path, stem: &str, chart: &LineChart) -> Result<PlotFiles> {
    let svg = chart.to_svg()?;
    let files = PlotFiles {
        svg: dir.join(format!("{stem}.svg")),
        csv: dir.join(format!("{stem}.csv")),
    };
    fs::write(&files.svg, svg).map_err(|e| Error::io(&files.svg, e))?;
    chart.write_csv(&files.csv)?;
    Ok(files)
}
