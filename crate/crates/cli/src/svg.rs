//! Minimal static SVG line plots: fixed 800x600 viewBox, linear axes, legend.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

pub enum Layer {
    Line { label: String, color: &'static str, dashed: bool, points: Vec<(f64, f64)> },
    Points { label: String, color: &'static str, points: Vec<(f64, f64)> },
    ErrorBars { label: String, color: &'static str, points: Vec<(f64, f64, f64)> },
}

impl Layer {
    fn label(&self) -> &str {
        match self {
            Layer::Line { label, .. } | Layer::Points { label, .. } | Layer::ErrorBars { label, .. } => label,
        }
    }

    fn color(&self) -> &'static str {
        match self {
            Layer::Line { color, .. } | Layer::Points { color, .. } | Layer::ErrorBars { color, .. } => color,
        }
    }

    fn extent(&self) -> Vec<(f64, f64)> {
        match self {
            Layer::Line { points, .. } | Layer::Points { points, .. } => points.clone(),
            Layer::ErrorBars { points, .. } => {
                points.iter().flat_map(|&(x, y, e)| [(x, y - e), (x, y + e)]).collect()
            }
        }
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub layers: Vec<Layer>,
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .layers
            .iter()
            .flat_map(Layer::extent)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 <= 0.0 {
            y1 = y0 + 1.0;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(&self.title));

        // axes
        let _ = writeln!(
            s,
            r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/></g>"#,
            TOP + ph,
            LEFT + pw,
            TOP + ph,
            TOP + ph
        );
        for i in 0..=TICKS {
            let t = i as f64 / TICKS as f64;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
                num(sx(xv)),
                num(TOP + ph),
                num(TOP + ph + 5.0),
                num(TOP + ph + 20.0),
                tick_label(xv)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
                num(LEFT - 5.0),
                num(sy(yv)),
                num(LEFT),
                num(LEFT - 8.0),
                num(sy(yv) + 4.0),
                tick_label(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(LEFT + pw / 2.0),
            num(HEIGHT - 15.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            num(TOP + ph / 2.0),
            escape(&self.y_label)
        );

        for layer in &self.layers {
            match layer {
                Layer::Line { color, dashed, points, .. } => {
                    let path: Vec<String> = points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{},{}", num(sx(x)), num(sy(y))))
                        .collect();
                    let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Layer::Points { color, points, .. } => {
                    let _ = writeln!(s, r#"<g fill="{color}">"#);
                    for &(x, y) in points {
                        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3"/>"#, num(sx(x)), num(sy(y)));
                    }
                    s.push_str("</g>\n");
                }
                Layer::ErrorBars { color, points, .. } => {
                    let _ = writeln!(s, r#"<g stroke="{color}" fill="{color}">"#);
                    for &(x, y, e) in points {
                        let e = if e.is_finite() { e } else { 0.0 };
                        let (cx, lo, hi) = (sx(x), sy(y - e), sy(y + e));
                        let _ = writeln!(
                            s,
                            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/><line x1="{3}" y1="{1}" x2="{4}" y2="{1}"/><line x1="{3}" y1="{2}" x2="{4}" y2="{2}"/><rect x="{5}" y="{6}" width="4" height="4"/>"#,
                            num(cx),
                            num(lo),
                            num(hi),
                            num(cx - 3.0),
                            num(cx + 3.0),
                            num(cx - 2.0),
                            num(sy(y) - 2.0)
                        );
                    }
                    s.push_str("</g>\n");
                }
            }
        }

        // legend
        for (i, layer) in self.layers.iter().enumerate() {
            let y = TOP + 15.0 + 18.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="14" height="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                num(LEFT + 15.0),
                num(y - 4.0),
                layer.color(),
                num(LEFT + 35.0),
                num(y),
                escape(layer.label())
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_all_layers_with_fixed_viewbox() {
        let plot = Plot {
            title: "MSD <d=2>".into(),
            x_label: "n".into(),
            y_label: "E|X_n|^2".into(),
            layers: vec![
                Layer::Line { label: "formula".into(), color: "black", dashed: false, points: vec![(0.0, 0.0), (1.0, 1.0)] },
                Layer::Points { label: "oracle".into(), color: "blue", points: vec![(1.0, 1.0)] },
                Layer::ErrorBars { label: "mc".into(), color: "red", points: vec![(1.0, 1.0, 0.1)] },
            ],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        assert!(svg.contains("&lt;d=2&gt;"));
        assert!(svg.contains("<polyline") && svg.contains("<circle") && svg.contains("<rect x="));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, plot.render());
    }

    #[test]
    fn empty_plot_still_renders() {
        let plot = Plot { title: String::new(), x_label: String::new(), y_label: String::new(), layers: vec![] };
        assert!(plot.render().contains("</svg>"));
    }
}
