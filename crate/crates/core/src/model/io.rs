//! JSON persistence of fitted models.

use serde::{Deserialize, Serialize};

use super::design::{FactorSpec, TermSpec};
use super::{FitDiagnostics, FittedModel, Link};
use crate::error::{Error, Result};
use crate::formula::{ResponseSpec, ResponseTransform, TermKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    schema_version: u32,
    link: Link,
    response: ResponseDoc,
    intercept: f64,
    terms: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<FitDiagnostics>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseDoc {
    column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<ResponseTransform>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Transform {
    Log,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    name: String,
    kind: TermKind,
    columns: Vec<String>,
    transforms: Vec<Option<Transform>>,
    /// Parallel to `columns`; `null` for numeric inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<Option<Vec<String>>>>,
    coef: Vec<CoefDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefDoc {
    column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<String>,
    value: f64,
    train_mean: f64,
}

pub fn save_model(m: &FittedModel) -> Result<String> {
    let descriptors = m.column_descriptors();
    let ranges = m.term_ranges();
    let terms = m
        .terms
        .iter()
        .zip(ranges)
        .map(|(t, range)| {
            let any_levels = t.factors.iter().any(|f| f.levels.is_some());
            TermDoc {
                name: t.name.clone(),
                kind: t.kind,
                columns: t.factors.iter().map(|f| f.column.clone()).collect(),
                transforms: t.factors.iter().map(|f| f.log.then_some(Transform::Log)).collect(),
                levels: any_levels.then(|| t.factors.iter().map(|f| f.levels.clone()).collect()),
                coef: range
                    .map(|j| CoefDoc {
                        column: descriptors[j].name.clone(),
                        level: descriptors[j].level.clone(),
                        value: m.coefficients[j],
                        train_mean: m.train_means[j],
                    })
                    .collect(),
            }
        })
        .collect();
    let doc = ModelDoc {
        schema_version: SCHEMA_VERSION,
        link: m.link,
        response: ResponseDoc { column: m.response.column.clone(), transform: m.response.transform },
        intercept: m.intercept,
        terms,
        diagnostics: Some(m.diagnostics.clone()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn schema_error(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

pub fn load_model(text: &str) -> Result<FittedModel> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(schema_error(format!("unsupported schema_version {v}"))),
        None => return Err(schema_error("missing field `schema_version`")),
    }
    let doc: ModelDoc =
        serde_json::from_value(value).map_err(|e| schema_error(format!("invalid model document: {e}")))?;

    let mut terms = Vec::with_capacity(doc.terms.len());
    let mut coefficients = Vec::new();
    let mut train_means = Vec::new();
    for t in doc.terms {
        let n = t.columns.len();
        if n == 0 || n > 2 || t.transforms.len() != n {
            return Err(schema_error(format!("term `{}`: bad columns/transforms", t.name)));
        }
        let levels = match t.levels {
            Some(l) if l.len() == n => l,
            Some(_) => return Err(schema_error(format!("term `{}`: levels length", t.name))),
            None => vec![None; n],
        };
        let factors: Vec<FactorSpec> = t
            .columns
            .into_iter()
            .zip(t.transforms)
            .zip(levels)
            .map(|((column, tr), levels)| FactorSpec { column, log: tr.is_some(), levels })
            .collect();
        let spec = TermSpec { name: t.name, kind: t.kind, factors };
        let expected = spec.column_descriptors(terms.len());
        if expected.len() != t.coef.len()
            || expected.iter().zip(&t.coef).any(|(e, c)| e.name != c.column)
        {
            return Err(schema_error(format!(
                "term `{}`: coefficient columns do not match its levels",
                spec.name
            )));
        }
        for c in t.coef {
            coefficients.push(c.value);
            train_means.push(c.train_mean);
        }
        terms.push(spec);
    }
    let diagnostics = doc.diagnostics.unwrap_or(FitDiagnostics {
        iterations: usize::from(doc.link == Link::Identity),
        converged: true,
        n_obs: 0,
        deviance: None,
    });
    Ok(FittedModel {
        link: doc.link,
        response: ResponseSpec { column: doc.response.column, transform: doc.response.transform },
        intercept: doc.intercept,
        terms,
        coefficients,
        train_means,
        diagnostics,
    })
}
