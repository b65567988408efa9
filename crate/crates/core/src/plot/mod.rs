//! Resolution-independent plot scenes and their SVG rendering.
//!
//! Vertical positions in a predictions scene are in linear-predictor units
//! relative to the centercept, shared by every axis. Rendering maps them
//! to pixels with one affine scale.

pub mod glyph;
pub mod predsplot;
pub mod style;
pub mod svg;

use crate::model::Link;
use crate::terms::{Direction, Side};

pub use glyph::{density_curve, histogram_bins, nice_ticks, BinRule, DensityCurve, Histogram};
pub use predsplot::{layout_case, layout_overall, layout_staircase, DisplayOptions, DisplayType};
pub use style::Style;
pub use svg::{render_svg, Geometry, LinearScale};

/// Distribution drawn along an axis, extending to the right of it.
#[derive(Debug, Clone, PartialEq)]
pub enum Glyph {
    Histogram { edges: Vec<f64>, counts: Vec<usize> },
    /// One bar per distinct value; length proportional to its frequency.
    Bars { bars: Vec<Bar> },
    Density { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub value: f64,
    pub count: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    /// Position on the shared vertical scale, before any staircase offset.
    pub value: f64,
    pub label: String,
}

/// Color role; the style maps roles to actual colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paint {
    Up,
    Down,
    Neutral,
    Above,
    Below,
}

impl Paint {
    pub fn for_direction(d: Direction) -> Paint {
        match d {
            Direction::Up => Paint::Up,
            Direction::Down => Paint::Down,
            Direction::NoArrow => Paint::Neutral,
        }
    }

    pub fn for_side(s: Side) -> Paint {
        match s {
            Side::Above => Paint::Above,
            Side::Below => Paint::Below,
            Side::Average => Paint::Neutral,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermAxis {
    pub name: String,
    pub glyph: Glyph,
    pub paint: Paint,
    pub direction: Direction,
    pub ticks: Vec<Tick>,
    /// Vertical shift applied to everything on this axis (staircase).
    pub offset: f64,
    /// Smallest and largest value the term takes, before the offset.
    pub extent: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub axis: usize,
    /// Position on the shared scale, offset included.
    pub value: f64,
    pub paint: Paint,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionsScene {
    pub title: Option<String>,
    /// Displayed terms left to right, then the total axis.
    pub axes: Vec<TermAxis>,
    pub range: (f64, f64),
    pub left_ticks: Vec<Tick>,
    /// Total-axis labels in response units, placed on the shared scale.
    pub right_ticks: Vec<Tick>,
    pub markers: Vec<Marker>,
    /// Marker positions of the displayed terms joined by a faint line.
    pub profile: Option<Vec<f64>>,
    pub staircase: bool,
    pub centercept: f64,
    pub link: Link,
    pub response_label: String,
}

impl PredictionsScene {
    pub fn total_axis(&self) -> usize {
        self.axes.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub correlation: f64,
    pub fill: Rgb,
}

/// Matrix display of term correlations with term-sized cells. Units are
/// arbitrary; rendering scales them to fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationScene {
    pub title: Option<String>,
    pub names: Vec<String>,
    /// Side length of each diagonal square.
    pub sides: Vec<f64>,
    pub cells: Vec<Cell>,
    pub absolute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotScene {
    Predictions(PredictionsScene),
    Correlation(CorrelationScene),
}
