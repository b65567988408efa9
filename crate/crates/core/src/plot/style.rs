use serde::Deserialize;

use super::Paint;

/// Colors and line widths. Any field may be overridden from JSON.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Style {
    pub up: String,
    pub down: String,
    pub neutral: String,
    pub above: String,
    pub below: String,
    pub profile: String,
    pub axis: String,
    pub text: String,
    pub background: String,
    pub font_family: String,
    pub font_size: f64,
    pub title_size: f64,
    pub line_width: f64,
    pub glyph_opacity: f64,
    pub marker_radius: f64,
    pub profile_width: f64,
    /// Smallest side, in pixels, of a rendered correlation cell.
    pub min_cell_px: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            up: "#2E8B57".into(),
            down: "#8B5A2B".into(),
            neutral: "#9B9B9B".into(),
            above: "#DD3333".into(),
            below: "#3366CC".into(),
            profile: "#9B9B9B".into(),
            axis: "#000000".into(),
            text: "#000000".into(),
            background: "#FFFFFF".into(),
            font_family: "Helvetica, Arial, sans-serif".into(),
            font_size: 11.0,
            title_size: 15.0,
            line_width: 1.0,
            glyph_opacity: 0.85,
            marker_radius: 5.0,
            profile_width: 1.5,
            min_cell_px: 2.0,
        }
    }
}

impl Style {
    pub fn paint(&self, p: Paint) -> &str {
        match p {
            Paint::Up => &self.up,
            Paint::Down => &self.down,
            Paint::Neutral => &self.neutral,
            Paint::Above => &self.above,
            Paint::Below => &self.below,
        }
    }

    pub fn from_json(text: &str) -> crate::Result<Style> {
        Ok(serde_json::from_str(text)?)
    }
}
