//! Minimal deterministic SVG emission.
//!
//! No plotting dependency: elements are written as text with fixed number
//! formatting, so rerendering identical inputs yields identical bytes.

/// Fixed-precision decimal formatting (Rust's formatter rounds the exact
/// binary value to `digits` decimals, ties to even).
pub fn fmt_fixed(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

pub struct Canvas {
    width: f64,
    height: f64,
    body: String,
}

fn px(v: f64) -> String {
    fmt_fixed(v, 2)
}

impl Canvas {
    pub fn new(width: f64, height: f64) -> Canvas {
        Canvas {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
            px(x1), px(y1), px(x2), px(y2), px(width)
        ));
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", px(*x), px(*y))).collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
            pts.join(" "), px(width)
        ));
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let stroke_attr = match stroke {
            Some(s) => format!(" stroke=\"{s}\" stroke-width=\"1.50\""),
            None => String::new(),
        };
        self.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"{stroke_attr}/>\n",
            px(x), px(y), px(w), px(h)
        ));
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>\n",
            px(cx), px(cy), px(r)
        ));
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"monospace\" text-anchor=\"{anchor}\">{}</text>\n",
            px(x), px(y), px(size), escape(content)
        ));
    }

    pub fn into_svg(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            px(self.width), px(self.height), px(self.width), px(self.height), self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Affine map from data range onto pixel range.
#[derive(Clone, Copy)]
pub struct Scale {
    pub data_min: f64,
    pub data_max: f64,
    pub px_min: f64,
    pub px_max: f64,
}

impl Scale {
    pub fn map(&self, v: f64) -> f64 {
        let span = self.data_max - self.data_min;
        let t = if span > 0.0 { (v - self.data_min) / span } else { 0.5 };
        self.px_min + t * (self.px_max - self.px_min)
    }
}

/// Pads a data range slightly so points do not sit on the axes.
pub fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { (hi - lo) * 0.08 } else { 0.5 * lo.abs().max(1e-6) };
    (lo - pad, hi + pad)
}

/// Two-color linear ramp used by the heatmap, low = light, high = dark.
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}
