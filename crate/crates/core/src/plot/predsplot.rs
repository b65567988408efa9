//! Layout of the predictions plot: one vertical axis per displayed term,
//! ordered by decreasing stdev, and a total-prediction axis on the right.

use super::glyph::{density_curve, histogram_bins, nice_ticks, tick_label, BinRule};
use super::{Bar, Glyph, Marker, Paint, PlotScene, PredictionsScene, TermAxis, Tick};
use crate::error::{Error, Result};
use crate::formula::TermKind;
use crate::model::{logit, FittedModel, Link, TermSpec};
use crate::terms::{order_terms, signif, CaseExplanation, Direction, PredictionTerms, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisplayType {
    #[default]
    Histogram,
    Density,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplayOptions {
    pub display: DisplayType,
    pub bandwidth: Option<f64>,
    pub bins: BinRule,
    /// Show only the first `k` terms in stdev order.
    pub max_terms: Option<usize>,
    /// Terms with at most this many distinct values are drawn as bars.
    pub bars_threshold: usize,
    /// Extend the vertical range to the whole total distribution.
    pub full_total_axis: bool,
    pub title: Option<String>,
}

impl Default for DisplayOptions {
    fn default() -> Self {
        DisplayOptions {
            display: DisplayType::Histogram,
            bandwidth: None,
            bins: BinRule::Sturges,
            max_terms: None,
            bars_threshold: 8,
            full_total_axis: false,
            title: None,
        }
    }
}

pub const PROBABILITY_TICKS: [f64; 13] =
    [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99];

const TICK_TARGET: usize = 5;

fn short(v: f64) -> String {
    format!("{}", signif(v, 4))
}

fn distinct(values: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

fn extent(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn distribution(values: &[f64], opts: &DisplayOptions) -> Result<Glyph> {
    let d = distinct(values);
    if d.len() <= opts.bars_threshold {
        let bars = d.into_iter().map(|(value, count)| Bar { value, count, label: short(value) }).collect();
        return Ok(Glyph::Bars { bars });
    }
    Ok(match opts.display {
        DisplayType::Histogram => {
            let h = histogram_bins(values, opts.bins);
            Glyph::Histogram { edges: h.edges, counts: h.counts }
        }
        DisplayType::Density => Glyph::Density { points: density_curve(values, opts.bandwidth)?.points },
    })
}

/// Contribution of a categorical term at each of its levels, computed the
/// same way as the per-row terms so equal levels compare exactly.
fn level_values(term: &TermSpec, b: &[f64], means: &[f64]) -> Vec<(String, f64)> {
    let levels = term.factors[0].levels.as_deref().unwrap_or_default();
    levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let f = (0..b.len())
                .map(|c| b[c] * (if c + 1 == i { 1.0 } else { 0.0 } - means[c]))
                .sum();
            (l.clone(), f)
        })
        .collect()
}

fn term_axis(m: &FittedModel, pt: &PredictionTerms, j: usize, opts: &DisplayOptions) -> Result<TermAxis> {
    let term = &m.terms[j];
    let range = m.term_ranges()[j].clone();
    let b = &m.coefficients[range.clone()];
    let means = &m.train_means[range];
    let values = &pt.contributions[j];
    let (lo, hi) = extent(values);
    let mut ticks = Vec::new();

    let glyph = if term.kind == TermKind::Categorical && term.factors[0].levels.is_some() {
        let counts = distinct(values);
        let bars = level_values(term, b, means)
            .into_iter()
            .map(|(label, value)| {
                let count = counts.iter().find(|(v, _)| *v == value).map_or(0, |c| c.1);
                Bar { value, count, label }
            })
            .collect();
        Glyph::Bars { bars }
    } else {
        let mut glyph = distribution(values, opts)?;
        if term.kind == TermKind::Numeric && b.len() == 1 {
            let (b, mean, log) = (b[0], means[0], term.factors[0].log);
            let to_x = |f: f64| {
                let t = f / b + mean;
                if log { t.exp() } else { t }
            };
            if let Glyph::Bars { bars } = &mut glyph {
                if b != 0.0 {
                    for bar in bars.iter_mut() {
                        bar.label = short(to_x(bar.value));
                    }
                }
            } else if b != 0.0 {
                let (x0, x1) = (to_x(lo), to_x(hi));
                let (xl, xh) = (x0.min(x1), x0.max(x1));
                let (xs, step) = nice_ticks(xl, xh, TICK_TARGET);
                for x in xs {
                    let t = if log { x.ln() } else { x };
                    if t.is_finite() {
                        ticks.push(Tick { value: b * (t - mean), label: tick_label(x, step) });
                    }
                }
            }
        } else if !matches!(glyph, Glyph::Bars { .. }) {
            let (fs, step) = nice_ticks(lo, hi, TICK_TARGET);
            ticks = fs.into_iter().map(|f| Tick { value: f, label: tick_label(f, step) }).collect();
        }
        glyph
    };

    Ok(TermAxis {
        name: pt.names[j].clone(),
        glyph,
        paint: Paint::for_direction(pt.directions[j]),
        direction: pt.directions[j],
        ticks,
        offset: 0.0,
        extent: (lo, hi),
    })
}

fn total_axis(pt: &PredictionTerms, opts: &DisplayOptions) -> Result<TermAxis> {
    let mut glyph = distribution(&pt.total, opts)?;
    if let Glyph::Bars { bars } = &mut glyph {
        for bar in bars.iter_mut() {
            bar.label = String::new();
        }
    }
    Ok(TermAxis {
        name: "total".into(),
        glyph,
        paint: Paint::Neutral,
        direction: Direction::NoArrow,
        ticks: Vec::new(),
        offset: 0.0,
        extent: extent(&pt.total),
    })
}

fn check_model(m: &FittedModel, pt: &PredictionTerms) -> Result<()> {
    if pt.n_terms() == 0 {
        return Err(Error::Invalid("no prediction terms to display".into()));
    }
    if pt.names.len() != m.terms.len() || pt.names.iter().zip(&m.terms).any(|(a, t)| *a != t.name) {
        return Err(Error::Invalid("prediction terms were computed from a different model".into()));
    }
    Ok(())
}

fn check_case(pt: &PredictionTerms, ce: &CaseExplanation) -> Result<()> {
    if ce.names != pt.names || ce.values.len() != pt.n_terms() {
        return Err(Error::Invalid("case explanation does not belong to these prediction terms".into()));
    }
    Ok(())
}

fn displayed(pt: &PredictionTerms, opts: &DisplayOptions) -> Vec<usize> {
    order_terms(pt, opts.max_terms.unwrap_or(usize::MAX))
}

/// Vertical range covering the displayed axes and markers, padded.
fn vertical_range(axes: &[TermAxis], markers: &[Marker], full_total: bool) -> (f64, f64) {
    let last = axes.len() - 1;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, a) in axes.iter().enumerate() {
        if k == last && !full_total {
            continue;
        }
        lo = lo.min(a.extent.0 + a.offset).min(a.offset);
        hi = hi.max(a.extent.1 + a.offset).max(a.offset);
    }
    for mk in markers {
        lo = lo.min(mk.value);
        hi = hi.max(mk.value);
    }
    let span = hi - lo;
    if !(span > 0.0) {
        let half = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - half, hi + half);
    }
    let pad = 0.04 * span;
    (lo - pad, hi + pad)
}

fn left_ticks(range: (f64, f64)) -> Vec<Tick> {
    let (vs, step) = nice_ticks(range.0, range.1, 6);
    vs.into_iter().map(|v| Tick { value: v, label: tick_label(v, step) }).collect()
}

/// Response-unit labels for the total axis. Positions are on the shared
/// scale, i.e. `g(v) - centercept`.
fn right_ticks(link: Link, centercept: f64, range: (f64, f64)) -> Vec<Tick> {
    match link {
        Link::Identity => {
            let (vs, step) = nice_ticks(range.0 + centercept, range.1 + centercept, 6);
            vs.into_iter().map(|v| Tick { value: v - centercept, label: tick_label(v, step) }).collect()
        }
        Link::Logit => PROBABILITY_TICKS
            .iter()
            .map(|&p| Tick { value: logit(p) - centercept, label: format!("{p}") })
            .filter(|t| t.value >= range.0 && t.value <= range.1)
            .collect(),
    }
}

fn assemble(
    pt: &PredictionTerms,
    mut axes: Vec<TermAxis>,
    markers: Vec<Marker>,
    profile: Option<Vec<f64>>,
    staircase: bool,
    opts: &DisplayOptions,
) -> PlotScene {
    let range = vertical_range(&axes, &markers, opts.full_total_axis);
    if !opts.full_total_axis {
        // keep the total glyph inside the visible range
        let last = axes.len() - 1;
        axes[last].extent = (axes[last].extent.0.max(range.0), axes[last].extent.1.min(range.1));
    }
    PlotScene::Predictions(PredictionsScene {
        title: opts.title.clone(),
        axes,
        range,
        left_ticks: left_ticks(range),
        right_ticks: right_ticks(pt.link, pt.centercept, range),
        markers,
        profile,
        staircase,
        centercept: pt.centercept,
        link: pt.link,
        response_label: pt.response_label.clone(),
    })
}

/// Overall plot: term distributions colored by slope direction.
pub fn layout_overall(m: &FittedModel, pt: &PredictionTerms, opts: &DisplayOptions) -> Result<PlotScene> {
    check_model(m, pt)?;
    let mut axes = displayed(pt, opts)
        .into_iter()
        .map(|j| term_axis(m, pt, j, opts))
        .collect::<Result<Vec<_>>>()?;
    axes.push(total_axis(pt, opts)?);
    Ok(assemble(pt, axes, Vec::new(), None, false, opts))
}

fn case_scene(
    m: &FittedModel,
    pt: &PredictionTerms,
    ce: &CaseExplanation,
    opts: &DisplayOptions,
    profile: bool,
    staircase: bool,
) -> Result<PlotScene> {
    check_model(m, pt)?;
    check_case(pt, ce)?;
    let shown = displayed(pt, opts);
    let mut axes = Vec::with_capacity(shown.len() + 1);
    let mut markers = Vec::with_capacity(shown.len() + 1);
    let mut cumulative = 0.0;
    for (k, &j) in shown.iter().enumerate() {
        let mut axis = term_axis(m, pt, j, opts)?;
        axis.paint = Paint::Neutral;
        if staircase {
            axis.offset = cumulative;
            cumulative += ce.values[j];
        }
        markers.push(Marker {
            axis: k,
            value: axis.offset + ce.values[j],
            paint: Paint::for_side(ce.sides[j]),
            label: ce.inputs[j].clone(),
        });
        axes.push(axis);
    }
    let mut total = total_axis(pt, opts)?;
    total.paint = Paint::Neutral;
    axes.push(total);
    let profile = profile.then(|| markers.iter().map(|mk| mk.value).collect());
    markers.push(Marker {
        axis: shown.len(),
        value: ce.sum,
        paint: Paint::for_side(Side::of(ce.sum)),
        label: short(ce.response),
    });
    Ok(assemble(pt, axes, markers, profile, staircase, opts))
}

/// One case over neutral distributions; markers red above the term
/// average and blue below.
pub fn layout_case(
    m: &FittedModel,
    pt: &PredictionTerms,
    ce: &CaseExplanation,
    opts: &DisplayOptions,
    profile: bool,
) -> Result<PlotScene> {
    case_scene(m, pt, ce, opts, profile, false)
}

/// Case plot with each term axis shifted by the running sum of the terms
/// to its left. Hidden terms (`max_terms`) are not part of the running
/// sum; the total marker always sits at the full SUM.
pub fn layout_staircase(
    m: &FittedModel,
    pt: &PredictionTerms,
    ce: &CaseExplanation,
    opts: &DisplayOptions,
) -> Result<PlotScene> {
    case_scene(m, pt, ce, opts, false, true)
}
