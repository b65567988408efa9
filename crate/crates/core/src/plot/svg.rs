//! Deterministic SVG output for plot scenes.

use std::fmt::Write;

use super::{CorrelationScene, Glyph, PlotScene, PredictionsScene, Style};
use crate::error::{Error, Result};
use crate::terms::Direction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub margin_top: f64,
    pub margin_right: f64,
    pub margin_bottom: f64,
    pub margin_left: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            width: 900.0,
            height: 560.0,
            margin_top: 60.0,
            margin_right: 90.0,
            margin_bottom: 50.0,
            margin_left: 70.0,
        }
    }
}

/// Affine map from a value interval onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScale {
    pub domain: (f64, f64),
    pub pixels: (f64, f64),
}

impl LinearScale {
    pub fn apply(&self, v: f64) -> f64 {
        let (d0, d1) = self.domain;
        let (p0, p1) = self.pixels;
        p0 + (v - d0) * (p1 - p0) / (d1 - d0)
    }
}

impl Geometry {
    fn validate(&self) -> Result<()> {
        let sizes = [self.width, self.height];
        let margins = [self.margin_top, self.margin_right, self.margin_bottom, self.margin_left];
        if sizes.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || margins.iter().any(|v| !(*v >= 0.0 && v.is_finite()))
            || self.plot_width() <= 0.0
            || self.plot_height() <= 0.0
        {
            return Err(Error::Invalid(format!("non-positive plot geometry {self:?}")));
        }
        Ok(())
    }

    pub fn plot_width(&self) -> f64 {
        self.width - self.margin_left - self.margin_right
    }

    pub fn plot_height(&self) -> f64 {
        self.height - self.margin_top - self.margin_bottom
    }

    /// Vertical scale of a predictions scene: the bottom of the plot area
    /// shows `range.0`, the top `range.1`.
    pub fn vertical_scale(&self, scene: &PredictionsScene) -> LinearScale {
        LinearScale {
            domain: scene.range,
            pixels: (self.height - self.margin_bottom, self.margin_top),
        }
    }

    /// Horizontal position of axis `k` among `n`.
    pub fn axis_x(&self, k: usize, n: usize) -> f64 {
        self.margin_left + self.slot(n) * (k as f64 + 0.3)
    }

    fn slot(&self, n: usize) -> f64 {
        self.plot_width() / n as f64
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_svg(scene: &PlotScene, geometry: &Geometry, style: &Style) -> Result<String> {
    geometry.validate()?;
    match scene {
        PlotScene::Predictions(s) => render_predictions(s, geometry, style),
        PlotScene::Correlation(s) => render_correlation(s, geometry, style),
    }
}

fn header(out: &mut String, g: &Geometry, style: &Style) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{f}" font-size="{fs}">"#,
        w = num(g.width),
        h = num(g.height),
        f = esc(&style.font_family),
        fs = style.font_size,
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="{}"/>"#, esc(&style.background));
}

fn title(out: &mut String, text: &Option<String>, g: &Geometry, style: &Style) {
    if let Some(t) = text {
        let _ = writeln!(
            out,
            r#"<text class="title" x="{}" y="{}" text-anchor="middle" font-size="{}" fill="{}">{}</text>"#,
            num(g.width / 2.0),
            num(style.title_size * 1.6),
            style.title_size,
            esc(&style.text),
            esc(t)
        );
    }
}

fn arrow(out: &mut String, x: f64, y_top: f64, dir: Direction, color: &str, width: f64) {
    let (tail, head, sign) = match dir {
        Direction::Up => (y_top + 16.0, y_top, 1.0),
        Direction::Down => (y_top, y_top + 16.0, -1.0),
        Direction::NoArrow => return,
    };
    let _ = writeln!(
        out,
        r#"<g class="arrow" stroke="{c}" fill="{c}"><line x1="{x}" y1="{t}" x2="{x}" y2="{h}" stroke-width="{w}"/><path d="M{l},{b} L{x},{h} L{r},{b} Z"/></g>"#,
        c = esc(color),
        x = num(x),
        t = num(tail),
        h = num(head),
        l = num(x - 4.0),
        r = num(x + 4.0),
        b = num(head + 6.0 * sign),
        w = 1.5 * width,
    );
}

fn render_predictions(s: &PredictionsScene, g: &Geometry, style: &Style) -> Result<String> {
    if s.axes.len() < 2 {
        return Err(Error::Invalid("scene has no term axes".into()));
    }
    let n = s.axes.len();
    let scale = g.vertical_scale(s);
    let (top, bottom) = (g.margin_top, g.height - g.margin_bottom);
    let glyph_w = g.slot(n) * 0.6;
    let small = style.font_size * 0.85;
    let visible = |v: f64| v >= s.range.0 && v <= s.range.1;

    let mut out = String::new();
    header(&mut out, g, style);
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot-area"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
        num(g.margin_left),
        num(top),
        num(g.plot_width()),
        num(g.plot_height())
    );
    title(&mut out, &s.title, g, style);

    // left axis, linear-predictor units
    let lx = g.margin_left - 8.0;
    let _ = writeln!(out, r#"<g class="left-axis" stroke="{}" fill="{}">"#, esc(&style.axis), esc(&style.text));
    let _ = writeln!(
        out,
        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke-width="{}"/>"#,
        num(top),
        num(bottom),
        style.line_width,
        x = num(lx)
    );
    for t in &s.left_ticks {
        let y = num(scale.apply(t.value));
        let _ = writeln!(
            out,
            r#"<g class="left-tick" data-value="{v}"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke-width="{}"/><text x="{}" y="{}" text-anchor="end" stroke="none">{}</text></g>"#,
            num(lx - 4.0),
            num(lx),
            style.line_width,
            num(lx - 6.0),
            num(scale.apply(t.value) + 3.5),
            esc(&t.label),
            v = t.value,
        );
    }
    let _ = writeln!(out, "</g>");

    if !s.staircase {
        let y = num(scale.apply(0.0));
        let _ = writeln!(
            out,
            r#"<line class="zero" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="0.5" stroke-dasharray="2 3"/>"#,
            num(g.margin_left),
            num(g.width - g.margin_right),
            esc(&style.neutral)
        );
    }

    for (k, axis) in s.axes.iter().enumerate() {
        let x = g.axis_x(k, n);
        let off = axis.offset;
        let color = style.paint(axis.paint);
        let _ = writeln!(out, r#"<g class="axis" data-name="{}">"#, esc(&axis.name));
        let _ = writeln!(
            out,
            r#"<g class="glyph" clip-path="url(#plot-area)" fill="{}" fill-opacity="{}">"#,
            esc(color),
            style.glyph_opacity
        );
        match &axis.glyph {
            Glyph::Histogram { edges, counts } => {
                let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
                for (i, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let (y0, y1) = (scale.apply(edges[i + 1] + off), scale.apply(edges[i] + off));
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                        num(x),
                        num(y0),
                        num(glyph_w * c as f64 / max),
                        num((y1 - y0).max(0.5))
                    );
                }
            }
            Glyph::Bars { bars } => {
                let max = bars.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
                let th = (g.plot_height() / (3.0 * bars.len() as f64)).clamp(1.0, 4.0);
                for b in bars {
                    let y = scale.apply(b.value + off);
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                        num(x),
                        num(y - th / 2.0),
                        num(glyph_w * b.count as f64 / max),
                        num(th)
                    );
                }
            }
            Glyph::Density { points } => {
                let max = points.iter().map(|p| p.1).fold(0.0, f64::max);
                let max = if max > 0.0 { max } else { 1.0 };
                let mut d = format!("M{},{}", num(x), num(scale.apply(points[0].0 + off)));
                for &(v, dens) in points {
                    let _ = write!(d, " L{},{}", num(x + glyph_w * dens / max), num(scale.apply(v + off)));
                }
                let _ = write!(d, " L{},{} Z", num(x), num(scale.apply(points[points.len() - 1].0 + off)));
                let _ = writeln!(out, r#"<path d="{d}"/>"#);
            }
        }
        let _ = writeln!(out, "</g>");
        if let Glyph::Bars { bars } = &axis.glyph {
            for b in bars.iter().filter(|b| !b.label.is_empty() && visible(b.value + off)) {
                let _ = writeln!(
                    out,
                    r#"<text class="level" x="{}" y="{}" text-anchor="end" font-size="{small}" fill="{}">{}</text>"#,
                    num(x - 6.0),
                    num(scale.apply(b.value + off) + 3.5),
                    esc(&style.text),
                    esc(&b.label)
                );
            }
        }
        let (e0, e1) = axis.extent;
        let _ = writeln!(
            out,
            r#"<line class="axis-line" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{}" stroke-width="{}"/>"#,
            num(scale.apply(e1.min(s.range.1 - off) + off)),
            num(scale.apply(e0.max(s.range.0 - off) + off)),
            esc(&style.axis),
            style.line_width,
            x = num(x)
        );
        for t in axis.ticks.iter().filter(|t| visible(t.value + off)) {
            let y = scale.apply(t.value + off);
            let _ = writeln!(
                out,
                r#"<g class="tick"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="{}"/><text x="{}" y="{}" text-anchor="end" font-size="{small}" fill="{}">{}</text></g>"#,
                num(x - 4.0),
                num(x),
                esc(&style.axis),
                style.line_width,
                num(x - 6.0),
                num(y + 3.5),
                esc(&style.text),
                esc(&t.label),
                y = num(y),
            );
        }
        arrow(&mut out, x, top - 26.0, axis.direction, color, style.line_width);
        let _ = writeln!(
            out,
            r#"<text class="name" x="{}" y="{}" text-anchor="middle" fill="{}">{}</text>"#,
            num(x),
            num(bottom + 20.0),
            esc(&style.text),
            esc(&axis.name)
        );
        let _ = writeln!(out, "</g>");
    }

    // right axis, response units
    let rx = g.width - g.margin_right + 12.0;
    let _ = writeln!(out, r#"<g class="right-axis" stroke="{}" fill="{}">"#, esc(&style.axis), esc(&style.text));
    let _ = writeln!(
        out,
        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke-width="{}"/>"#,
        num(top),
        num(bottom),
        style.line_width,
        x = num(rx)
    );
    for t in &s.right_ticks {
        let y = scale.apply(t.value);
        let _ = writeln!(
            out,
            r#"<g class="right-tick" data-value="{}" data-y="{}"><line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke-width="{}"/><text x="{}" y="{}" stroke="none">{}</text></g>"#,
            esc(&t.label),
            y,
            num(rx),
            num(rx + 4.0),
            style.line_width,
            num(rx + 6.0),
            num(y + 3.5),
            esc(&t.label),
            y = num(y),
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="response" x="{}" y="{}" text-anchor="middle" stroke="none">{}</text>"#,
        num(rx + 10.0),
        num(top - 12.0),
        esc(&s.response_label)
    );
    let _ = writeln!(out, "</g>");

    // case overlays
    let x_of = |axis: usize| g.axis_x(axis, n);
    if let Some(profile) = &s.profile {
        let pts: Vec<String> = profile
            .iter()
            .enumerate()
            .map(|(k, &v)| format!("{},{}", num(x_of(k)), num(scale.apply(v))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="profile" points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-dasharray="5 4" stroke-opacity="0.8"/>"#,
            pts.join(" "),
            esc(&style.profile),
            style.profile_width
        );
    }
    if s.staircase {
        for w in s.markers.windows(2) {
            let y = num(scale.apply(w[0].value));
            let _ = writeln!(
                out,
                r#"<line class="step" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="{}" stroke-dasharray="2 2"/>"#,
                num(x_of(w[0].axis)),
                num(x_of(w[1].axis)),
                esc(&style.axis),
                style.line_width
            );
        }
    }
    for mk in &s.markers {
        let (x, y) = (x_of(mk.axis), scale.apply(mk.value));
        let color = esc(style.paint(mk.paint));
        let _ = writeln!(
            out,
            r#"<circle class="marker" data-value="{}" cx="{}" cy="{}" r="{}" fill="{color}" stroke="{}" stroke-width="1"/>"#,
            mk.value,
            num(x),
            num(y),
            style.marker_radius,
            esc(&style.background)
        );
        if !mk.label.is_empty() {
            let _ = writeln!(
                out,
                r#"<text class="marker-label" x="{}" y="{}" text-anchor="end" font-weight="bold" fill="{color}">{}</text>"#,
                num(x - style.marker_radius - 3.0),
                num(y - style.marker_radius - 1.0),
                esc(&mk.label)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Pixel sides of the correlation cells: proportional to the scene sides,
/// at least `min_px` each.
pub fn cell_pixels(sides: &[f64], available: f64, min_px: f64) -> Vec<f64> {
    let total: f64 = sides.iter().sum();
    sides.iter().map(|s| (s / total * available).max(min_px)).collect()
}

fn render_correlation(s: &CorrelationScene, g: &Geometry, style: &Style) -> Result<String> {
    if s.names.is_empty() {
        return Err(Error::Invalid("scene has no terms".into()));
    }
    let label_space = s.names.iter().map(|n| n.chars().count()).max().unwrap_or(0) as f64 * style.font_size * 0.6 + 10.0;
    let gx = g.margin_left + label_space;
    let gy = g.margin_top + label_space;
    let available = (g.width - g.margin_right - gx).min(g.height - g.margin_bottom - gy);
    if available <= 0.0 {
        return Err(Error::Invalid("plot area too small for the labels".into()));
    }
    let px = cell_pixels(&s.sides, available, style.min_cell_px);
    let mut pos = Vec::with_capacity(px.len());
    let mut acc = 0.0;
    for p in &px {
        pos.push(acc);
        acc += p;
    }

    let mut out = String::new();
    header(&mut out, g, style);
    title(&mut out, &s.title, g, style);
    let _ = writeln!(out, r#"<g class="cells" stroke="{}" stroke-width="0.5">"#, esc(&style.neutral));
    for c in &s.cells {
        let _ = writeln!(
            out,
            r#"<rect data-row="{}" data-col="{}" data-cor="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            c.row,
            c.col,
            c.correlation,
            num(gx + pos[c.col]),
            num(gy + pos[c.row]),
            num(px[c.col]),
            num(px[c.row]),
            c.fill.hex()
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="labels" fill="{}">"#, esc(&style.text));
    for (i, name) in s.names.iter().enumerate() {
        let mid = pos[i] + px[i] / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(gx - 6.0),
            num(gy + mid + 3.5),
            esc(name)
        );
        let (x, y) = (num(gx + mid + 3.5), num(gy - 6.0));
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" transform="rotate(-90 {x} {y})">{}</text>"#, esc(name));
    }
    let _ = writeln!(out, "</g>");

    // color legend
    let lo = if s.absolute { 0.0 } else { -1.0 };
    let steps = 10;
    let lx = g.width - g.margin_right + 20.0;
    let h = (g.plot_height() / (steps + 1) as f64).min(16.0);
    let _ = writeln!(out, r#"<g class="legend" font-size="{}">"#, style.font_size * 0.85);
    for i in 0..=steps {
        let r = 1.0 - (1.0 - lo) * i as f64 / steps as f64;
        let y = g.margin_top + h * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="14" height="{}" fill="{}" stroke="{}" stroke-width="0.5"/>"#,
            num(lx),
            num(y),
            num(h),
            crate::predscor::correlation_color(r).hex(),
            esc(&style.neutral)
        );
        if i % 5 == 0 {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
                num(lx + 18.0),
                num(y + h / 2.0 + 3.5),
                esc(&style.text),
                format!("{:.1}", r).replace("-0.0", "0.0")
            );
        }
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}
