//! Treatment-coded design matrices.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::data::{Dataset, Value};
use crate::error::{Error, Result};
use crate::formula::{ModelTerm, ResponseSpec, ResponseTransform, TermKind, TermPlan};

/// One input variable of a term, with its level map when categorical.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub column: String,
    pub log: bool,
    /// Sorted levels; the first is the reference. `None` for numeric factors.
    pub levels: Option<Vec<String>>,
}

impl FactorSpec {
    fn label(&self) -> String {
        if self.log {
            format!("log({})", self.column)
        } else {
            self.column.clone()
        }
    }

    /// Numeric value (transformed) or level index for one cell.
    fn encode(&self, value: &Value) -> Result<FactorValue> {
        match (&self.levels, value) {
            (None, Value::Number(x)) => {
                if self.log {
                    if *x <= 0.0 {
                        return Err(Error::NonPositiveLog { column: self.column.clone(), value: *x });
                    }
                    Ok(FactorValue::Number(x.ln()))
                } else {
                    Ok(FactorValue::Number(*x))
                }
            }
            (Some(levels), Value::Level(l)) => levels
                .iter()
                .position(|lv| lv == l)
                .map(FactorValue::Level)
                .ok_or_else(|| Error::UnseenLevel { column: self.column.clone(), level: l.clone() }),
            (Some(levels), Value::Number(x)) => {
                // integer-coded classes read back as numbers
                let label = format!("{x}");
                levels
                    .iter()
                    .position(|lv| *lv == label)
                    .map(FactorValue::Level)
                    .ok_or(Error::UnseenLevel { column: self.column.clone(), level: label })
            }
            (None, Value::Level(l)) => Err(Error::ColumnType {
                column: self.column.clone(),
                reason: format!("expected a number, got `{l}`"),
            }),
        }
    }
}

enum FactorValue {
    Number(f64),
    Level(usize),
}

/// Identity of one design column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDescriptor {
    pub name: String,
    pub term: usize,
    /// Dummy level(s) for categorical parts, joined by `:` for interactions.
    pub level: Option<String>,
}

/// A model term with everything needed to encode new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSpec {
    pub name: String,
    pub kind: TermKind,
    pub factors: Vec<FactorSpec>,
}

/// Per-factor choice when expanding a term into columns: `None` for the
/// numeric value, `Some(i)` for the dummy of level `i`.
type Part = Option<usize>;

impl TermSpec {
    fn parts(&self) -> Vec<Vec<Part>> {
        let mut combos: Vec<Vec<Part>> = vec![Vec::new()];
        for f in &self.factors {
            let choices: Vec<Part> = match &f.levels {
                None => vec![None],
                Some(levels) => (1..levels.len()).map(Some).collect(),
            };
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    choices.iter().map(move |ch| {
                        let mut c = c.clone();
                        c.push(*ch);
                        c
                    })
                })
                .collect();
        }
        combos
    }

    /// Column names and dummy labels in encoding order.
    pub fn column_descriptors(&self, term: usize) -> Vec<ColumnDescriptor> {
        self.parts()
            .into_iter()
            .map(|parts| {
                let mut names = Vec::new();
                let mut levels = Vec::new();
                for (f, p) in self.factors.iter().zip(&parts) {
                    match (p, &f.levels) {
                        (Some(i), Some(lv)) => {
                            names.push(format!("{}{}", f.column, lv[*i]));
                            levels.push(lv[*i].clone());
                        }
                        _ => names.push(f.label()),
                    }
                }
                ColumnDescriptor {
                    name: names.join(":"),
                    term,
                    level: (!levels.is_empty()).then(|| levels.join(":")),
                }
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.levels.as_ref().map_or(1, |l| l.len().saturating_sub(1)))
            .product()
    }

    /// Encodes the term's design columns for one row, appending to `out`.
    pub fn encode_into<F>(&self, lookup: &F, out: &mut Vec<f64>) -> Result<()>
    where
        F: Fn(&str) -> Option<Value>,
    {
        let mut values = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let v = lookup(&f.column).ok_or_else(|| Error::MissingField(vec![f.column.clone()]))?;
            values.push(f.encode(&v)?);
        }
        for parts in self.parts() {
            let mut x = 1.0;
            for (v, p) in values.iter().zip(&parts) {
                x *= match (v, p) {
                    (FactorValue::Number(n), None) => *n,
                    (FactorValue::Level(l), Some(i)) => f64::from(u8::from(l == i)),
                    _ => unreachable!("part kind follows factor kind"),
                };
            }
            out.push(x);
        }
        Ok(())
    }
}

/// Cumulative column ranges per term.
pub fn term_ranges(terms: &[TermSpec]) -> Vec<Range<usize>> {
    let mut start = 0;
    terms
        .iter()
        .map(|t| {
            let r = start..start + t.width();
            start = r.end;
            r
        })
        .collect()
}

/// Encodes every design column for one row.
pub fn encode_row<F>(terms: &[TermSpec], lookup: F) -> Result<Vec<f64>>
where
    F: Fn(&str) -> Option<Value>,
{
    let missing: Vec<String> = {
        let mut m: Vec<String> = Vec::new();
        for f in terms.iter().flat_map(|t| &t.factors) {
            if lookup(&f.column).is_none() && !m.contains(&f.column) {
                m.push(f.column.clone());
            }
        }
        m
    };
    if !missing.is_empty() {
        return Err(Error::MissingField(missing));
    }
    let mut out = Vec::new();
    for t in terms {
        t.encode_into(&lookup, &mut out)?;
    }
    Ok(out)
}

/// Treatment-coded design without the intercept column.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub columns: Vec<ColumnDescriptor>,
    pub groups: Vec<Range<usize>>,
    pub terms: Vec<TermSpec>,
    pub response: ResponseSpec,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        self.values.column_iter().map(|c| c.sum() / n).collect()
    }
}

fn term_spec(ds: &Dataset, term: &ModelTerm) -> Result<TermSpec> {
    let mut factors = Vec::with_capacity(term.factors.len());
    for f in &term.factors {
        let levels = if f.categorical {
            let levels = ds.require(&f.column)?.levels();
            if levels.len() < 2 {
                return Err(Error::SingleLevel(f.column.clone()));
            }
            Some(levels)
        } else {
            None
        };
        factors.push(FactorSpec { column: f.column.clone(), log: f.log, levels });
    }
    Ok(TermSpec { name: term.name.clone(), kind: term.kind, factors })
}

/// Builds the design for `plan` over the rows of `ds`, which must already
/// be complete for every plan column.
pub fn build_design(ds: &Dataset, plan: &TermPlan) -> Result<DesignMatrix> {
    let terms = plan.terms.iter().map(|t| term_spec(ds, t)).collect::<Result<Vec<_>>>()?;
    let groups = term_ranges(&terms);
    let columns: Vec<ColumnDescriptor> =
        terms.iter().enumerate().flat_map(|(i, t)| t.column_descriptors(i)).collect();

    let cols = plan.input_columns();
    let data = cols.iter().map(|c| ds.require(c)).collect::<Result<Vec<_>>>()?;
    let k = columns.len();
    let n = ds.n_rows();
    let mut values = DMatrix::zeros(n, k);
    for r in 0..n {
        let row = encode_row(&terms, |name| {
            cols.iter().position(|c| c == name).and_then(|i| data[i].value(r))
        })?;
        for (j, v) in row.into_iter().enumerate() {
            values[(r, j)] = v;
        }
    }
    Ok(DesignMatrix { values, columns, groups, terms, response: plan.response.clone() })
}

/// Applies the response transform, if any.
pub fn transform_response(spec: &ResponseSpec, y: f64) -> Result<f64> {
    match spec.transform {
        None => Ok(y),
        Some(ResponseTransform::Log) => {
            if y <= 0.0 {
                Err(Error::NonPositiveLog { column: spec.column.clone(), value: y })
            } else {
                Ok(y.ln())
            }
        }
        Some(ResponseTransform::Reciprocal) => {
            if y == 0.0 {
                Err(Error::ZeroReciprocal(spec.column.clone()))
            } else {
                Ok(1.0 / y)
            }
        }
    }
}

/// Extracts the (transformed) response vector.
pub fn response_vector(ds: &Dataset, spec: &ResponseSpec) -> Result<Vec<f64>> {
    let col = ds.require(&spec.column)?;
    (0..ds.n_rows())
        .map(|r| match col.value(r) {
            Some(Value::Number(y)) => transform_response(spec, y),
            Some(Value::Level(_)) => Err(Error::ColumnType {
                column: spec.column.clone(),
                reason: "response must be numeric".into(),
            }),
            None => Err(Error::MissingField(vec![spec.column.clone()])),
        })
        .collect()
}
