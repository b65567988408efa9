//! Covariance structure of the prediction terms and its cell display.

use crate::error::{Error, Result};
use crate::plot::{Cell, CorrelationScene, PlotScene, Rgb};
use crate::stats;
use crate::terms::{sort_by_stdev, PredictionTerms};

#[derive(Debug, Clone, PartialEq)]
pub struct TermCovariance {
    pub names: Vec<String>,
    pub stdevs: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    /// Constant terms left out of the matrices.
    pub excluded: Vec<String>,
}

/// Sample covariance and correlation of the non-constant terms, in
/// formula order.
pub fn term_covariance(pt: &PredictionTerms) -> Result<TermCovariance> {
    let (kept, dropped): (Vec<usize>, Vec<usize>) = (0..pt.n_terms()).partition(|&j| pt.stdevs[j] > 0.0);
    if kept.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 non-constant prediction terms, found {}",
            kept.len()
        )));
    }
    let cols: Vec<&[f64]> = kept.iter().map(|&j| pt.contributions[j].as_slice()).collect();
    let stdevs: Vec<f64> = kept.iter().map(|&j| pt.stdevs[j]).collect();
    let p = kept.len();
    let mut covariance = vec![vec![0.0; p]; p];
    let mut correlation = vec![vec![0.0; p]; p];
    for i in 0..p {
        for k in i..p {
            let c = if i == k { stdevs[i] * stdevs[i] } else { stats::covariance(cols[i], cols[k]) };
            let r = if i == k { 1.0 } else { (c / (stdevs[i] * stdevs[k])).clamp(-1.0, 1.0) };
            covariance[i][k] = c;
            covariance[k][i] = c;
            correlation[i][k] = r;
            correlation[k][i] = r;
        }
    }
    Ok(TermCovariance {
        names: kept.iter().map(|&j| pt.names[j].clone()).collect(),
        stdevs,
        covariance,
        correlation,
        excluded: dropped.iter().map(|&j| pt.names[j].clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellArea {
    /// Diagonal sides proportional to the stdev, so areas follow variances.
    #[default]
    Variance,
    /// Diagonal areas proportional to the stdev.
    Stdev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredscorOptions {
    pub sort_by_stdev: bool,
    pub absolute: bool,
    pub cell_area: CellArea,
    /// Equal cell sizes.
    pub classic: bool,
    pub title: Option<String>,
}

impl Default for PredscorOptions {
    fn default() -> Self {
        PredscorOptions {
            sort_by_stdev: true,
            absolute: false,
            cell_area: CellArea::Variance,
            classic: false,
            title: None,
        }
    }
}

/// White at 0, red at +1, blue at -1, linear in between.
pub fn correlation_color(r: f64) -> Rgb {
    let r = r.clamp(-1.0, 1.0);
    let v = (255.0 * (1.0 - r.abs())).round() as u8;
    if r >= 0.0 {
        Rgb(255, v, v)
    } else {
        Rgb(v, v, 255)
    }
}

pub fn layout_predscor(tc: &TermCovariance, opts: &PredscorOptions) -> PlotScene {
    let order: Vec<usize> =
        if opts.sort_by_stdev { sort_by_stdev(&tc.stdevs) } else { (0..tc.names.len()).collect() };
    let sides: Vec<f64> = order
        .iter()
        .map(|&j| match (opts.classic, opts.cell_area) {
            (true, _) => 1.0,
            (false, CellArea::Variance) => tc.stdevs[j],
            (false, CellArea::Stdev) => tc.stdevs[j].sqrt(),
        })
        .collect();
    let mut pos = Vec::with_capacity(sides.len());
    let mut acc = 0.0;
    for s in &sides {
        pos.push(acc);
        acc += s;
    }
    let mut cells = Vec::with_capacity(order.len() * order.len());
    for (row, &i) in order.iter().enumerate() {
        for (col, &k) in order.iter().enumerate() {
            let r = tc.correlation[i][k];
            let r = if opts.absolute { r.abs() } else { r };
            cells.push(Cell {
                row,
                col,
                x: pos[col],
                y: pos[row],
                width: sides[col],
                height: sides[row],
                correlation: r,
                fill: if row == col { Rgb(0, 0, 0) } else { correlation_color(r) },
            });
        }
    }
    PlotScene::Correlation(CorrelationScene {
        title: opts.title.clone(),
        names: order.iter().map(|&j| tc.names[j].clone()).collect(),
        sides,
        cells,
        absolute: opts.absolute,
    })
}
