//! Distribution summaries drawn along term axes, and tick placement.

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinRule {
    /// `ceil(log2 n) + 1` bins.
    #[default]
    Sturges,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` increasing edges spanning `[min, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Equal-width bins over the data range. A single distinct value gives
/// one bin holding everything.
pub fn histogram_bins(values: &[f64], rule: BinRule) -> Histogram {
    let n = values.len();
    let (lo, hi) = min_max(values);
    if n == 0 {
        return Histogram { edges: vec![], counts: vec![] };
    }
    if lo == hi {
        return Histogram { edges: vec![lo, hi], counts: vec![n] };
    }
    let k = match rule {
        BinRule::Sturges => (n as f64).log2().ceil() as usize + 1,
        BinRule::Count(k) => k.max(1),
    };
    let width = (hi - lo) / k as f64;
    let mut edges: Vec<f64> = (0..k).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let mut counts = vec![0; k];
    for &v in values {
        let i = (((v - lo) / width).floor() as usize).min(k - 1);
        counts[i] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub bandwidth: f64,
    /// `(x, density)` at equispaced `x`.
    pub points: Vec<(f64, f64)>,
}

pub const DENSITY_POINTS: usize = 512;

/// Normal-reference bandwidth `0.9 min(sd, IQR/1.34) n^(-1/5)`, falling
/// back to whichever spread measure is positive.
pub fn default_bandwidth(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = stats::sd(values);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = if sd > 0.0 { sd } else if sorted[0] != 0.0 { sorted[0].abs() } else { 1.0 };
    }
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate on 512 points over `[min-3h, max+3h]`.
pub fn density_curve(values: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    let (lo, hi) = min_max(values);
    if values.len() < 2 || lo == hi {
        return Err(Error::Invalid("density needs at least two distinct values".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Invalid(format!("bandwidth must be positive, got {h}"))),
        None => default_bandwidth(values),
    };
    let (a, b) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (b - a) / (DENSITY_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let points = (0..DENSITY_POINTS)
        .map(|i| {
            let x = a + step * i as f64;
            let s: f64 = values.iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
            (x, s * norm)
        })
        .collect();
    Ok(DensityCurve { bandwidth: h, points })
}

/// Round-number ticks inside `[lo, hi]`, about `target` of them. Returns
/// the values and the step.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return (if lo.is_finite() { vec![lo] } else { vec![] }, 0.0);
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let ticks = (first..=last).map(|i| i as f64 * step).map(|v| if v == 0.0 { 0.0 } else { v }).collect();
    (ticks, step)
}

/// Label for a tick at `v` on a grid with spacing `step`.
pub fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step > 0.0 { (-step.log10().floor()).max(0.0) as usize } else { 4 };
    let s = format!("{:.*}", decimals, v);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}
