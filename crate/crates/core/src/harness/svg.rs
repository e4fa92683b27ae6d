//! Minimal static SVG plots: line charts, scatter plots, and CDF steps with
//! labeled axes. Output strings are deterministic for identical inputs.

use std::fmt::Write;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One plotted series.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional symmetric error bar half-heights, one per point.
    pub error: Option<Vec<f64>>,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.into(),
            points,
            error: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotStyle {
    Lines,
    Scatter,
    /// Horizontal-then-vertical steps (empirical CDFs).
    Steps,
}

/// Render the chart. Series are drawn in order with a fixed palette and a
/// legend in the top margin.
pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], style: PlotStyle) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let e = s.error.as_ref().map_or(0.0, |e| e[i]);
            xs.push(x);
            ys.push(y - e);
            ys.push(y + e);
        }
    }
    let (x_min, x_max) = padded_bounds(&xs);
    let (y_min, y_max) = padded_bounds(&ys);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = HEIGHT - MARGIN_BOTTOM - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        (px, py)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    // Axes.
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>",
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{MARGIN_TOP:.2}\" stroke=\"black\"/>"
    );
    for i in 0..=5 {
        let fx = x_min + (x_max - x_min) * i as f64 / 5.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
        let (px, _) = to_px(fx, y_min);
        let (_, py) = to_px(x_min, fy);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            y0 + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            py + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        escape(y_label)
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if let Some(errors) = &s.error {
            for (&(x, y), &e) in s.points.iter().zip(errors) {
                if e <= 0.0 {
                    continue;
                }
                let (px, p_lo) = to_px(x, y - e);
                let (_, p_hi) = to_px(x, y + e);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{px:.2}\" y1=\"{p_lo:.2}\" x2=\"{px:.2}\" y2=\"{p_hi:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>"
                );
                for py in [p_lo, p_hi] {
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>",
                        px - 4.0,
                        px + 4.0
                    );
                }
            }
        }
        match style {
            PlotStyle::Scatter => {
                for &(x, y) in &s.points {
                    let (px, py) = to_px(x, y);
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.7\"/>"
                    );
                }
            }
            PlotStyle::Lines | PlotStyle::Steps => {
                let mut path = String::new();
                let mut last: Option<(f64, f64)> = None;
                for &(x, y) in &s.points {
                    let (px, py) = to_px(x, y);
                    if style == PlotStyle::Steps {
                        if let Some((_, ly)) = last {
                            let _ = write!(path, "{px:.2},{ly:.2} ");
                        }
                    }
                    let _ = write!(path, "{px:.2},{py:.2} ");
                    last = Some((px, py));
                }
                let _ = writeln!(
                    svg,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                    path.trim_end()
                );
            }
        }
        // Legend entry.
        let lx = MARGIN_LEFT + 10.0 + 150.0 * (si % 4) as f64;
        let ly = 36.0 + 14.0 * (si / 4) as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            lx + 24.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn padded_bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.04;
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_line_series() {
        let series = vec![
            Series::line("a", vec![(0.0, 0.0), (1.0, 1.0)]),
            Series::line("b", vec![(0.0, 1.0), (1.0, 0.0)]),
        ];
        let svg = render("t", "x", "y", &series, PlotStyle::Lines);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">a</text>"));
        assert!(svg.contains(">b</text>"));
    }

    #[test]
    fn scatter_draws_circles_and_output_is_deterministic() {
        let series = vec![Series::line("pts", vec![(0.0, 2.0), (3.0, 1.0), (5.0, 4.0)])];
        let a = render("t", "x", "y", &series, PlotStyle::Scatter);
        let b = render("t", "x", "y", &series, PlotStyle::Scatter);
        assert_eq!(a, b);
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn error_bars_rendered_when_present() {
        let series = vec![Series {
            label: "e".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
            error: Some(vec![0.5, 0.25]),
        }];
        let svg = render("t", "x", "y", &series, PlotStyle::Lines);
        // One vertical plus two caps per point, plus axes/ticks.
        assert!(svg.matches("<line").count() >= 6);
    }
}
