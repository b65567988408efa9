//! Model formula mini-language.
//!
//! ```text
//! formula  := response '~' term ('+' term)*
//! response := ident | 'log(' ident ')' | '1/' ident
//! term     := factor (':' factor)?
//! factor   := ident | 'log(' ident ')'
//! ```
//!
//! Identifiers follow R naming: letters, digits, `_` and `.`, not starting
//! with a digit. Whitespace is ignored between tokens.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::ColumnKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseTransform {
    Log,
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub column: String,
    pub log: bool,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log {
            write!(f, "log({})", self.column)
        } else {
            f.write_str(&self.column)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermAst {
    pub factors: Vec<Factor>,
}

impl TermAst {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TermAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseAst {
    pub column: String,
    pub transform: Option<ResponseTransform>,
}

impl fmt::Display for ResponseAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transform {
            None => f.write_str(&self.column),
            Some(ResponseTransform::Log) => write!(f, "log({})", self.column),
            Some(ResponseTransform::Reciprocal) => write!(f, "1/{}", self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaAst {
    pub response: ResponseAst,
    pub terms: Vec<TermAst>,
}

impl fmt::Display for FormulaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{term}")?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

const IDENT: &str = "identifier";

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn error<T>(&mut self, expected: &[&str]) -> Result<T> {
        self.skip_ws();
        Err(Error::Syntax {
            offset: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(b) if b.is_ascii_alphabetic() || *b == b'_' || *b == b'.' => {}
            _ => return None,
        }
        while let Some(b) = self.src.get(self.pos) {
            if b.is_ascii_alphanumeric() || *b == b'_' || *b == b'.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    /// `ident` or `log(ident)`; `first` lets the caller reuse an already
    /// consumed identifier.
    fn factor_after(&mut self, first: String) -> Result<Factor> {
        if first == "log" && self.eat(b'(') {
            let column = match self.ident() {
                Some(id) => id,
                None => return self.error(&[IDENT]),
            };
            if !self.eat(b')') {
                return self.error(&[")"]);
            }
            Ok(Factor { column, log: true })
        } else {
            Ok(Factor { column: first, log: false })
        }
    }

    fn factor(&mut self, expected: &[&str]) -> Result<Factor> {
        match self.ident() {
            Some(id) => self.factor_after(id),
            None => self.error(expected),
        }
    }

    fn response(&mut self) -> Result<ResponseAst> {
        if self.peek() == Some(b'1') {
            self.pos += 1;
            if !self.eat(b'/') {
                return self.error(&["/"]);
            }
            let column = match self.ident() {
                Some(id) => id,
                None => return self.error(&[IDENT]),
            };
            return Ok(ResponseAst { column, transform: Some(ResponseTransform::Reciprocal) });
        }
        let f = self.factor(&[IDENT, "log(", "1/"])?;
        Ok(ResponseAst {
            column: f.column,
            transform: f.log.then_some(ResponseTransform::Log),
        })
    }

    fn term(&mut self) -> Result<TermAst> {
        let first = self.factor(&[IDENT, "log("])?;
        let mut factors = vec![first];
        if self.eat(b':') {
            factors.push(self.factor(&[IDENT, "log("])?);
        }
        Ok(TermAst { factors })
    }
}

/// Parses formula text, preserving the source order of terms.
pub fn parse_formula(text: &str) -> Result<FormulaAst> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    if p.peek().is_none() {
        return p.error(&[IDENT, "log(", "1/"]);
    }
    let response = p.response()?;
    if !p.eat(b'~') {
        return p.error(&["~"]);
    }
    let mut terms = vec![p.term()?];
    loop {
        match p.peek() {
            None => break,
            Some(b'+') => {
                p.pos += 1;
                terms.push(p.term()?);
            }
            Some(_) => {
                let expected: &[&str] = if terms.last().is_some_and(|t| t.factors.len() == 1) {
                    &["+", ":", "end of input"]
                } else {
                    &["+", "end of input"]
                };
                return p.error(expected);
            }
        }
    }

    let mut seen = HashSet::new();
    for term in &terms {
        let mut key: Vec<(String, bool)> =
            term.factors.iter().map(|f| (f.column.clone(), f.log)).collect();
        key.sort();
        if !seen.insert(key) {
            return Err(Error::DuplicateTerm(term.name()));
        }
    }
    Ok(FormulaAst { response, terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Numeric,
    Categorical,
    Interaction,
}

/// One input variable of a bound term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundFactor {
    pub column: String,
    pub log: bool,
    pub categorical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTerm {
    pub name: String,
    pub kind: TermKind,
    pub factors: Vec<BoundFactor>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSpec {
    pub column: String,
    pub transform: Option<ResponseTransform>,
}

impl ResponseSpec {
    pub fn label(&self) -> String {
        ResponseAst { column: self.column.clone(), transform: self.transform }.to_string()
    }
}

/// A formula validated against a dataset schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermPlan {
    pub response: ResponseSpec,
    pub terms: Vec<ModelTerm>,
}

impl TermPlan {
    /// Input columns referenced by the terms, in first-use order.
    pub fn input_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            if !out.contains(&f.column) {
                out.push(f.column.clone());
            }
        }
        out
    }

    /// Response followed by input columns.
    pub fn all_columns(&self) -> Vec<String> {
        let mut cols = vec![self.response.column.clone()];
        for c in self.input_columns() {
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
        cols
    }
}

pub fn bind_schema(ast: &FormulaAst, schema: &HashMap<String, ColumnKind>) -> Result<TermPlan> {
    let kind_of = |col: &str| -> Result<ColumnKind> {
        schema.get(col).copied().ok_or_else(|| Error::UnknownColumn(col.to_string()))
    };

    let response_kind = kind_of(&ast.response.column)?;
    if response_kind != ColumnKind::Numeric {
        return Err(Error::ColumnType {
            column: ast.response.column.clone(),
            reason: "response must be numeric".into(),
        });
    }

    let mut terms = Vec::with_capacity(ast.terms.len());
    for term in &ast.terms {
        let mut factors = Vec::with_capacity(term.factors.len());
        for f in &term.factors {
            if f.column == ast.response.column {
                return Err(Error::ColumnType {
                    column: f.column.clone(),
                    reason: "the response cannot also be a predictor".into(),
                });
            }
            let categorical = kind_of(&f.column)?.is_categorical();
            if f.log && categorical {
                return Err(Error::ColumnType {
                    column: f.column.clone(),
                    reason: "log() applies only to numeric columns".into(),
                });
            }
            factors.push(BoundFactor { column: f.column.clone(), log: f.log, categorical });
        }
        let kind = match factors.as_slice() {
            [single] if single.categorical => TermKind::Categorical,
            [_] => TermKind::Numeric,
            _ => TermKind::Interaction,
        };
        terms.push(ModelTerm { name: term.name(), kind, factors });
    }

    Ok(TermPlan {
        response: ResponseSpec {
            column: ast.response.column.clone(),
            transform: ast.response.transform,
        },
        terms,
    })
}
