//! Linear (identity link) and logistic (logit link) models over a
//! treatment-coded design.

pub mod design;
pub mod fit;
mod io;

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::{complete_cases, Dataset, Value};
use crate::error::{Error, Result};
use crate::formula::{ResponseSpec, TermPlan};

pub use design::{build_design, encode_row, ColumnDescriptor, DesignMatrix, FactorSpec, TermSpec};
pub use fit::{fit_logistic, fit_ols};
pub use io::{load_model, save_model, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Binomial,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "binomial" => Ok(Family::Binomial),
            other => Err(Error::Invalid(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviance: Option<f64>,
}

/// A case to predict: column name to value.
pub type CaseRecord = HashMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub link: Link,
    pub response: ResponseSpec,
    pub intercept: f64,
    pub terms: Vec<TermSpec>,
    /// One slope per design column, in term order.
    pub coefficients: Vec<f64>,
    /// Training mean of each design column.
    pub train_means: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

/// `1 / (1 + exp(-eta))` without overflow for large `|eta|`.
pub fn inverse_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl FittedModel {
    pub fn term_ranges(&self) -> Vec<Range<usize>> {
        design::term_ranges(&self.terms)
    }

    pub fn column_descriptors(&self) -> Vec<ColumnDescriptor> {
        self.terms.iter().enumerate().flat_map(|(i, t)| t.column_descriptors(i)).collect()
    }

    /// Input columns the model reads, in first-use order.
    pub fn input_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            if !out.contains(&f.column) {
                out.push(f.column.clone());
            }
        }
        out
    }

    /// Level maps of the categorical input columns.
    pub fn categorical_levels(&self) -> Vec<(String, Vec<String>)> {
        let mut out: Vec<(String, Vec<String>)> = Vec::new();
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            if let Some(levels) = &f.levels {
                if !out.iter().any(|(c, _)| c == &f.column) {
                    out.push((f.column.clone(), levels.clone()));
                }
            }
        }
        out
    }

    pub fn is_categorical(&self, column: &str) -> bool {
        self.categorical_levels().iter().any(|(c, _)| c == column)
    }

    /// Mean of the uncentered total prediction over the training rows.
    pub fn centercept(&self) -> f64 {
        self.intercept
            + self.coefficients.iter().zip(&self.train_means).map(|(b, m)| b * m).sum::<f64>()
    }

    pub fn encode<F: Fn(&str) -> Option<Value>>(&self, lookup: F) -> Result<Vec<f64>> {
        encode_row(&self.terms, lookup)
    }

    pub fn encode_case(&self, case: &CaseRecord) -> Result<Vec<f64>> {
        self.encode(|c| case.get(c).cloned())
    }

    /// Design row of dataset row `row`.
    pub fn encode_dataset_row(&self, ds: &Dataset, row: usize) -> Result<Vec<f64>> {
        let cols = self.input_columns();
        let data = cols.iter().map(|c| ds.require(c)).collect::<Result<Vec<_>>>()?;
        self.encode(|name| cols.iter().position(|c| c == name).and_then(|i| data[i].value(row)))
    }

    pub fn linear_predictor_from_design(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn linear_predictor(&self, case: &CaseRecord) -> Result<f64> {
        Ok(self.linear_predictor_from_design(&self.encode_case(case)?))
    }

    pub fn inverse_link(&self, eta: f64) -> f64 {
        match self.link {
            Link::Identity => eta,
            Link::Logit => inverse_logit(eta),
        }
    }

    /// `g`, the link itself.
    pub fn link_fn(&self, mu: f64) -> f64 {
        match self.link {
            Link::Identity => mu,
            Link::Logit => logit(mu),
        }
    }
}

/// Fits `plan` on the complete cases of `ds`. Returns the model and the
/// number of rows dropped for missing values.
pub fn fit(ds: &Dataset, plan: &TermPlan, family: Family) -> Result<(FittedModel, usize)> {
    let (cc, dropped) = complete_cases(ds, &plan.all_columns())?;
    let x = build_design(&cc, plan)?;
    let y = design::response_vector(&cc, &plan.response)?;
    let m = match family {
        Family::Gaussian => fit_ols(&x, &y)?,
        Family::Binomial => fit_logistic(&x, &y)?,
    };
    Ok((m, dropped))
}
