//! Minimal SVG line plots with optional logarithmic axes.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_x(mut self, on: bool) -> Self {
        self.log_x = on;
        self
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }

    fn transform(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        let x = if self.log_x { (x > 0.0).then(|| x.log10())? } else { x };
        let y = if self.log_y { (y > 0.0).then(|| y.log10())? } else { y };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    /// Renders the plot; points not representable on a log axis are dropped.
    pub fn to_svg(&self) -> Result<String> {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().filter_map(|&p| self.transform(p)).collect())
            .collect();
        let all: Vec<(f64, f64)> = pts.iter().flatten().copied().collect();
        if all.is_empty() {
            return Err(Error::domain("nothing to plot"));
        }
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
        };
        let (x0, x1) = span(&mut all.iter().map(|p| p.0));
        let (y0, y1) = span(&mut all.iter().map(|p| p.1));
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(&self.title)).unwrap();
        writeln!(
            s,
            r#"<g class="axes" stroke="black"><line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}"/></g>"#,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        )
        .unwrap();
        for (v, pos, axis) in [(x0, sx(x0), 'x'), (x1, sx(x1), 'x'), (y0, sy(y0), 'y'), (y1, sy(y1), 'y')] {
            let log = if axis == 'x' { self.log_x } else { self.log_y };
            let text = if log { format!("1e{v:.1}") } else { format!("{v:.3e}") };
            let (x, y, anchor) = if axis == 'x' {
                (pos, HEIGHT - MARGIN + 16.0, "middle")
            } else {
                (MARGIN - 4.0, pos + 4.0, "end")
            };
            writeln!(s, r#"<text class="tick" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="10">{text}</text>"#).unwrap();
        }
        let x_label = if self.log_x { format!("{} (log)", self.x_label) } else { self.x_label.clone() };
        let y_label = if self.log_y { format!("{} (log)", self.y_label) } else { self.y_label.clone() };
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(&x_label)).unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{c}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {c})">{}</text>"#,
            escape(&y_label),
            c = HEIGHT / 2.0
        )
        .unwrap();
        for (i, (series, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            )
            .unwrap();
            writeln!(
                s,
                r#"<text class="legend" x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                MARGIN + 14.0 * i as f64,
                escape(&series.label)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let svg = Plot::new("t", "x", "y")
            .log_y(true)
            .with_series("a", vec![(1.0, 1e-3), (2.0, 1e-5)])
            .with_series("b<c", vec![(1.0, 0.0), (2.0, 1e-4)])
            .to_svg()
            .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("b&lt;c"));
    }

    #[test]
    fn empty_plot_is_error() {
        assert!(Plot::new("t", "x", "y").log_x(true).with_series("a", vec![(0.0, 1.0)]).to_svg().is_err());
    }
}
