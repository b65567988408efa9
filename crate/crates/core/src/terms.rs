//! Centered prediction terms: the per-variable decomposition of a fitted
//! linear predictor.
//!
//! For design columns `c` owned by term `j`, the term's contribution on a
//! row is `f_j = sum_c b_c (x_c - mean_c)` with training means frozen in
//! the model. Numeric main effects reduce to `b_j (x_j - mean_j)`; a
//! categorical term becomes its summed dummy prediction minus that sum's
//! training mean. The centercept is the training mean of the uncentered
//! total, so `sum_j f_j + centercept` is the linear predictor.

use std::fmt::Write;

use crate::data::{Dataset, Value};
use crate::error::{Error, Result};
use crate::formula::TermKind;
use crate::model::{CaseRecord, FittedModel, Link, TermSpec};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    NoArrow,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::NoArrow => "",
        }
    }
}

/// Arrow for a term: only numeric main effects have one, following the
/// sign of their slope.
pub fn term_direction(term: &TermSpec, coefficients: &[f64]) -> Direction {
    match (term.kind, coefficients) {
        (TermKind::Numeric, [b]) if *b > 0.0 => Direction::Up,
        (TermKind::Numeric, [b]) if *b < 0.0 => Direction::Down,
        _ => Direction::NoArrow,
    }
}

#[derive(Debug, Clone)]
pub struct PredictionTerms {
    pub names: Vec<String>,
    pub kinds: Vec<TermKind>,
    /// `contributions[j][i]` is term `j` on row `i`.
    pub contributions: Vec<Vec<f64>>,
    pub stdevs: Vec<f64>,
    pub directions: Vec<Direction>,
    pub centercept: f64,
    /// Row sums of the contributions.
    pub total: Vec<f64>,
    pub total_stdev: f64,
    /// All term indices by decreasing stdev.
    pub order: Vec<usize>,
    pub link: Link,
    pub response_label: String,
}

impl PredictionTerms {
    pub fn n_terms(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.total.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Centered contribution of every term for one encoded design row.
pub fn term_values(m: &FittedModel, x: &[f64]) -> Vec<f64> {
    m.term_ranges()
        .into_iter()
        .map(|r| r.map(|c| m.coefficients[c] * (x[c] - m.train_means[c])).sum())
        .collect()
}

/// Term indices by decreasing stdev, ties in formula order, cut to
/// `max_terms`.
pub fn order_terms(pt: &PredictionTerms, max_terms: usize) -> Vec<usize> {
    let mut idx = sort_by_stdev(&pt.stdevs);
    idx.truncate(max_terms.max(1));
    idx
}

pub(crate) fn sort_by_stdev(stdevs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stdevs.len()).collect();
    idx.sort_by(|&a, &b| stdevs[b].total_cmp(&stdevs[a]));
    idx
}

pub fn compute_terms(m: &FittedModel, ds: &Dataset) -> Result<PredictionTerms> {
    let p = m.terms.len();
    let n = ds.n_rows();
    let mut contributions = vec![Vec::with_capacity(n); p];
    let mut total = Vec::with_capacity(n);
    for row in 0..n {
        let x = m.encode_dataset_row(ds, row)?;
        let f = term_values(m, &x);
        total.push(f.iter().sum());
        for (col, v) in contributions.iter_mut().zip(f) {
            col.push(v);
        }
    }
    let stdevs: Vec<f64> = contributions.iter().map(|c| stats::sd(c)).collect();
    let ranges = m.term_ranges();
    let directions = m
        .terms
        .iter()
        .zip(&ranges)
        .zip(&stdevs)
        .map(|((t, r), &s)| {
            if s == 0.0 {
                Direction::NoArrow
            } else {
                term_direction(t, &m.coefficients[r.clone()])
            }
        })
        .collect();
    Ok(PredictionTerms {
        names: m.terms.iter().map(|t| t.name.clone()).collect(),
        kinds: m.terms.iter().map(|t| t.kind).collect(),
        order: sort_by_stdev(&stdevs),
        total_stdev: stats::sd(&total),
        contributions,
        stdevs,
        directions,
        centercept: m.centercept(),
        total,
        link: m.link,
        response_label: m.response.label(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
    Average,
}

impl Side {
    pub fn of(v: f64) -> Side {
        if v > 0.0 {
            Side::Above
        } else if v < 0.0 {
            Side::Below
        } else {
            Side::Average
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSource {
    /// Zero-based row of the dataset the terms were computed on.
    InSample { row: usize, id: Option<String> },
    Supplied,
}

/// Which case to explain.
#[derive(Debug, Clone, Copy)]
pub enum Case<'a> {
    InSample { data: &'a Dataset, row: usize },
    Record(&'a CaseRecord),
}

#[derive(Debug, Clone)]
pub struct CaseExplanation {
    pub names: Vec<String>,
    /// `f_j(case)` in formula order.
    pub values: Vec<f64>,
    pub sides: Vec<Side>,
    /// The case's input values as shown next to each term.
    pub inputs: Vec<String>,
    /// Sum of `values` taken in display order.
    pub sum: f64,
    pub centercept: f64,
    pub total_linear: f64,
    pub response: f64,
    pub source: CaseSource,
    pub response_label: String,
}

fn format_value(v: &Value) -> String {
    match v {
        Value::Number(x) => format!("{x}"),
        Value::Level(l) => l.clone(),
    }
}

pub fn explain_case(m: &FittedModel, pt: &PredictionTerms, case: Case<'_>) -> Result<CaseExplanation> {
    if pt.names.len() != m.terms.len() || pt.names.iter().zip(&m.terms).any(|(a, t)| *a != t.name) {
        return Err(Error::Invalid("prediction terms were computed from a different model".into()));
    }
    let (x, lookup_inputs, source): (Vec<f64>, Box<dyn Fn(&str) -> Option<Value>>, CaseSource) =
        match case {
            Case::InSample { data, row } => {
                if row >= data.n_rows() {
                    return Err(Error::CaseIndex { index: row + 1, n: data.n_rows() });
                }
                let id = data.row_ids().map(|ids| ids[row].clone());
                (
                    m.encode_dataset_row(data, row)?,
                    Box::new(move |c| data.column(c).and_then(|col| col.value(row))),
                    CaseSource::InSample { row, id },
                )
            }
            Case::Record(rec) => (
                m.encode_case(rec)?,
                Box::new(move |c| rec.get(c).cloned()),
                CaseSource::Supplied,
            ),
        };
    let values = term_values(m, &x);
    let sum: f64 = pt.order.iter().map(|&j| values[j]).sum();
    let centercept = m.centercept();
    let total_linear = sum + centercept;
    let inputs = m
        .terms
        .iter()
        .map(|t| {
            t.factors
                .iter()
                .map(|f| lookup_inputs(&f.column).map(|v| format_value(&v)).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(":")
        })
        .collect();
    Ok(CaseExplanation {
        names: pt.names.clone(),
        sides: values.iter().map(|&v| Side::of(v)).collect(),
        values,
        inputs,
        sum,
        centercept,
        total_linear,
        response: m.inverse_link(total_linear),
        source,
        response_label: pt.response_label.clone(),
    })
}

/// Rounds to `digits` significant digits, ties to even.
pub(crate) fn signif(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - mag);
    (v * scale).round_ties_even() / scale
}

/// Decimals needed to show `v` to `digits` significant digits.
fn decimals_for(v: f64, digits: i32) -> usize {
    if v == 0.0 || !v.is_finite() {
        return 0;
    }
    let mag = v.abs().log10().floor() as i32;
    (digits - 1 - mag).max(0) as usize
}

/// Stdev table in formula order, values at 4 significant digits with a
/// shared number of decimals, then the total prediction.
pub fn print_term_table(pt: &PredictionTerms) -> String {
    const HEADER: &str = "prediction term";
    let total_label = format!("Total prediction of {}", pt.response_label);
    let mut all: Vec<f64> = pt.stdevs.clone();
    all.push(pt.total_stdev);
    let decimals = all.iter().map(|&v| decimals_for(v, 4)).max().unwrap_or(0);
    let fmt = |v: f64| format!("{:.*}", decimals, signif(v, 4));

    let rows: Vec<(String, String, &str)> = (0..pt.n_terms())
        .map(|j| (pt.names[j].clone(), fmt(pt.stdevs[j]), pt.directions[j].label()))
        .collect();
    let total = fmt(pt.total_stdev);
    let name_w = rows
        .iter()
        .map(|r| r.0.len())
        .chain([HEADER.len()])
        .chain((!rows.is_empty()).then_some(total_label.len()))
        .max()
        .unwrap_or(HEADER.len());
    let val_w = rows.iter().map(|r| r.1.len()).chain([5, total.len()]).max().unwrap_or(5);

    let mut out = String::new();
    let _ = writeln!(out, "{HEADER:>name_w$} {:>val_w$} up/down", "stdev");
    if rows.is_empty() {
        return out;
    }
    for (name, val, dir) in &rows {
        let line = format!("{name:>name_w$} {val:>val_w$} {dir:>7}");
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out, "{total_label:>name_w$} {total:>val_w$}");
    out
}

/// Case table: signed term values in formula order, then SUM, the
/// centercept, the total linear prediction and the response-scale value.
pub fn print_case_table(ce: &CaseExplanation) -> String {
    let signed = |v: f64| format!("{v:+.5}");
    let plain = |v: f64| if v < 0.0 { format!("{v:.5}") } else { format!(" {v:.5}") };
    let mut rows: Vec<(String, String)> =
        ce.names.iter().zip(&ce.values).map(|(n, &v)| (n.clone(), signed(v))).collect();
    rows.push(("SUM".into(), signed(ce.sum)));
    rows.push(("centercept".into(), plain(ce.centercept)));
    rows.push((format!("Total linear prediction of {}", ce.response_label), plain(ce.total_linear)));
    rows.push((
        format!("Total prediction of {} in response units", ce.response_label),
        plain(ce.response),
    ));
    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(15);
    let val_w = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:>name_w$} {:>val_w$}", "prediction term", "value");
    for (n, v) in rows {
        let _ = writeln!(out, "{n:>name_w$} {v:>val_w$}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{read_csv, CsvOptions};
    use crate::formula::{bind_schema, parse_formula};
    use crate::model::{fit, Family};

    const CSV: &str = "y,a,b,g\n\
        3.1,1.0,5.0,u\n4.0,2.0,3.0,v\n6.2,3.5,4.0,w\n5.0,4.0,1.0,u\n\
        7.9,5.0,2.5,v\n8.1,6.5,2.0,w\n9.7,7.0,0.5,u\n10.2,8.0,1.5,v\n";

    fn setup(formula: &str) -> (FittedModel, Dataset, PredictionTerms) {
        let ds = read_csv(CSV.as_bytes(), &CsvOptions::default()).unwrap();
        let plan = bind_schema(&parse_formula(formula).unwrap(), &ds.schema()).unwrap();
        let (m, _) = fit(&ds, &plan, Family::Gaussian).unwrap();
        let pt = compute_terms(&m, &ds).unwrap();
        (m, ds, pt)
    }

    #[test]
    fn signif_ties_to_even() {
        assert_eq!(signif(0.125, 2), 0.12);
        assert_eq!(signif(0.375, 2), 0.38);
        assert_eq!(signif(-2.5, 1), -2.0);
        assert_eq!(signif(0.0043289, 4), 0.004329);
    }

    #[test]
    fn single_predictor_term_is_centered_total() {
        let (m, ds, pt) = setup("y ~ a");
        assert_eq!(pt.n_terms(), 1);
        for i in 0..ds.n_rows() {
            let x = m.encode_dataset_row(&ds, i).unwrap();
            let eta = m.linear_predictor_from_design(&x);
            assert!((pt.contributions[0][i] - (eta - pt.centercept)).abs() < 1e-12);
        }
    }

    #[test]
    fn directions() {
        let (m, _, pt) = setup("y ~ a + b + g");
        assert!(m.coefficients[0] > 0.0);
        assert_eq!(pt.directions[0], Direction::Up);
        assert_eq!(pt.directions[1], if m.coefficients[1] < 0.0 { Direction::Down } else { Direction::Up });
        assert_eq!(pt.directions[2], Direction::NoArrow);

        let spec = |kind, n| TermSpec { name: "t".into(), kind, factors: vec![crate::model::FactorSpec { column: "t".into(), log: false, levels: None }; n] };
        assert_eq!(term_direction(&spec(TermKind::Numeric, 1), &[0.0]), Direction::NoArrow);
        assert_eq!(term_direction(&spec(TermKind::Numeric, 1), &[-1.0]), Direction::Down);
        assert_eq!(term_direction(&spec(TermKind::Interaction, 2), &[1.0]), Direction::NoArrow);
    }

    #[test]
    fn equal_stdev_ties_keep_formula_order() {
        let (_, _, mut pt) = setup("y ~ a + b + g");
        pt.stdevs = vec![1.0, 2.0, 1.0];
        assert_eq!(order_terms(&pt, 3), [1, 0, 2]);
        assert_eq!(order_terms(&pt, 1), [1]);
        pt.stdevs = vec![0.0, 0.5, 0.5];
        assert_eq!(order_terms(&pt, 10), [1, 2, 0]);
    }

    #[test]
    fn in_sample_case_reproduces_row() {
        let (m, ds, pt) = setup("y ~ a + b + g");
        for row in 0..ds.n_rows() {
            let ce = explain_case(&m, &pt, Case::InSample { data: &ds, row }).unwrap();
            for j in 0..pt.n_terms() {
                assert_eq!(ce.values[j], pt.contributions[j][row]);
            }
            let x = m.encode_dataset_row(&ds, row).unwrap();
            let eta = m.linear_predictor_from_design(&x);
            assert!((ce.total_linear - eta).abs() < 1e-10 * eta.abs().max(1.0));
            assert_eq!(ce.total_linear, ce.sum + ce.centercept);
        }
    }

    #[test]
    fn case_at_training_means_has_zero_numeric_terms() {
        let (m, ds, pt) = setup("y ~ a + b");
        let mean = |c: &str| stats::mean(&ds.column(c).unwrap().numbers());
        let rec: CaseRecord = [("a", mean("a")), ("b", mean("b"))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::Number(v)))
            .collect();
        let ce = explain_case(&m, &pt, Case::Record(&rec)).unwrap();
        assert!(ce.values.iter().all(|v| v.abs() < 1e-12));
        assert!((ce.total_linear - pt.centercept).abs() < 1e-12);
        assert_eq!(ce.source, CaseSource::Supplied);
    }

    #[test]
    fn explain_errors() {
        let (m, ds, pt) = setup("y ~ a + g");
        let mut rec: CaseRecord = CaseRecord::new();
        rec.insert("a".into(), Value::Number(1.0));
        assert!(matches!(explain_case(&m, &pt, Case::Record(&rec)), Err(Error::MissingField(c)) if c == ["g"]));
        rec.insert("g".into(), Value::Level("zzz".into()));
        assert!(matches!(explain_case(&m, &pt, Case::Record(&rec)), Err(Error::UnseenLevel { .. })));
        assert!(matches!(
            explain_case(&m, &pt, Case::InSample { data: &ds, row: 99 }),
            Err(Error::CaseIndex { .. })
        ));
    }

    #[test]
    fn categorical_term_weighted_sum_is_zero() {
        let (_, _, pt) = setup("y ~ a + g");
        let s: f64 = pt.contributions[1].iter().sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn term_table_layout() {
        let (_, _, mut pt) = setup("y ~ a + b + g");
        pt.names = vec!["accel".into(), "drive".into(), "weight".into()];
        pt.stdevs = vec![0.004328850234822808, 0.0014003074230486627, 0.004489723775558745];
        pt.directions = vec![Direction::Down, Direction::NoArrow, Direction::Up];
        pt.total_stdev = 0.009783498997803185;
        pt.response_label = "GPM".into();
        let table = print_term_table(&pt);
        let expected = [
            "        prediction term    stdev up/down",
            "                  accel 0.004329    down",
            "                  drive 0.001400",
            "                 weight 0.004490      up",
            "Total prediction of GPM 0.009783",
            "",
        ]
        .join("\n");
        assert_eq!(table, expected);

        pt.names.clear();
        pt.stdevs.clear();
        pt.directions.clear();
        assert_eq!(print_term_table(&pt).lines().count(), 1);
    }

    #[test]
    fn hp_style_decimals() {
        let (_, _, mut pt) = setup("y ~ a + b + g");
        pt.names = vec!["topspeed".into(), "length".into(), "displ".into()];
        pt.stdevs = vec![68.38485564379873, 5.817377958494302, 91.78876640750487];
        pt.total_stdev = 149.21800848811276;
        let table = print_term_table(&pt);
        assert!(table.contains(" 68.380 "), "{table}");
        assert!(table.contains("  5.817 "), "{table}");
        assert!(table.contains(" 91.790"), "{table}");
        assert!(table.contains("149.200"), "{table}");
    }

    #[test]
    fn case_table_layout() {
        let ce = CaseExplanation {
            names: vec!["months".into(), "purpose".into()],
            values: vec![-0.4719, 1.02816],
            sides: vec![Side::Below, Side::Above],
            inputs: vec!["36".into(), "u.car".into()],
            sum: 0.55626,
            centercept: 0.95998,
            total_linear: 1.51624,
            response: 0.82,
            source: CaseSource::Supplied,
            response_label: "credit".into(),
        };
        let t = print_case_table(&ce);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "                             prediction term    value");
        assert_eq!(lines[1], "                                      months -0.47190");
        assert_eq!(lines[2], "                                     purpose +1.02816");
        assert_eq!(lines[3], "                                         SUM +0.55626");
        assert_eq!(lines[4], "                                  centercept  0.95998");
        assert_eq!(lines[6], "Total prediction of credit in response units  0.82000");
    }
}
