//! Minimal SVG line charts for spectra and window fits.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color,
            dashed: false,
            points,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// A chart with linear axes, any number of polylines, vertical markers and
/// free-text notes in the top-left corner.
#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    pub markers: Vec<f64>,
    pub notes: Vec<String>,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Chart {
            title: title.into(),
            x_label: "k".into(),
            y_label: "T(k)".into(),
            x_range,
            y_range,
            series: Vec::new(),
            markers: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        LEFT + (x - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        HEIGHT - BOTTOM - (y - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (x0, x1) = (self.px(self.x_range.0), self.px(self.x_range.1));
        let (y0, y1) = (self.py(self.y_range.0), self.py(self.y_range.1));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                s,
                r##"<line x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{y1:.2}" stroke="#e4e4e4"/>"##
            );
            let _ = writeln!(
                s,
                r##"<line x1="{x0:.2}" y1="{yp:.2}" x2="{x1:.2}" y2="{yp:.2}" stroke="#e4e4e4"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                yp + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        for &m in &self.markers {
            let xp = self.px(m);
            let _ = writeln!(
                s,
                r##"<line class="window-bound" x1="{xp:.2}" y1="{y0:.2}" x2="{xp:.2}" y2="{y1:.2}" stroke="#888" stroke-dasharray="2 3"/>"##
            );
        }

        for series in &self.series {
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
                .collect();
            let dash = if series.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                series.color,
                pts.join(" ")
            );
        }

        for (i, series) in self.series.iter().enumerate() {
            let y = y1 + 16.0 + 16.0 * i as f64;
            let dash = if series.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="1.5"{dash}/>"#,
                x1 - 150.0,
                x1 - 126.0,
                series.color
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                x1 - 120.0,
                y + 4.0,
                escape(&series.label)
            );
        }

        for (i, note) in self.notes.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text class="note" x="{:.2}" y="{:.2}">{}</text>"#,
                x0 + 8.0,
                y1 + 16.0 + 16.0 * i as f64,
                escape(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    format!("{r}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// `"MSE 3.2e-10 (log10 -9.49)"`.
pub fn mse_note(mse: f64) -> String {
    if mse > 0.0 {
        format!("MSE {mse:.2e} (log10 {:.2})", mse.log10())
    } else {
        format!("MSE {mse:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polylines_markers_and_notes() {
        let mut chart = Chart::new("fit <W1>", (0.5, 1.5), (0.0, 1.05));
        chart.series.push(Series::new(
            "target",
            "black",
            vec![(0.5, 0.0), (1.0, 1.0), (1.5, 0.2)],
        ));
        chart
            .series
            .push(Series::new("fit", "red", vec![(0.5, 0.1), (1.5, 0.3)]).dashed());
        chart.markers = vec![0.6, 1.4];
        chart.notes.push(mse_note(1e-6));
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("window-bound").count(), 2);
        assert!(svg.contains("fit &lt;W1&gt;"));
        assert!(svg.contains("log10 -6.00"));
        // first target point maps to the lower-left plot corner
        assert!(svg.contains(&format!("{LEFT:.2},{:.2}", HEIGHT - BOTTOM)));
    }

    #[test]
    fn non_finite_points_are_dropped() {
        let mut chart = Chart::new("t", (0.0, 1.0), (0.0, 1.0));
        chart
            .series
            .push(Series::new("s", "blue", vec![(0.0, f64::NAN), (1.0, 1.0)]));
        let svg = chart.render();
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn zero_mse_note_has_no_log() {
        assert_eq!(mse_note(0.0), "MSE 0.00e0");
    }
}
