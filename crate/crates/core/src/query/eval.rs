use fixedbitset::FixedBitSet;
use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::{Map, Value};
use thiserror::Error;

use super::parser::{Condition, FuzzyQuery, ParseError, Selection};
use crate::dataset::{AttributeSeries, ColumnKind, Dataset};
use crate::fca::{build_lattice, FormalContext, Lattice};
use crate::kb::{KbError, KnowledgeBase};
use crate::membership::{mf_eval, LinguisticVariable};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown numeric attribute {0:?}")]
    UnknownAttribute(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("values of {attribute} span [{min}, {max}], outside the domain [{lo}, {hi}]")]
    DomainMismatch {
        attribute: String,
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
    },
    #[error("a satisfaction degree needs at least one condition")]
    EmptyConditions,
    #[error("alpha must lie in [0, 1), got {0}")]
    BadAlpha(f64),
}

/// Degrees of every row on every query condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyContext {
    /// Dataset row id of each object.
    pub rows: Vec<usize>,
    pub conditions: Vec<Condition>,
    /// `degrees[object][condition]`.
    pub degrees: Vec<Vec<f64>>,
}

impl FuzzyContext {
    pub fn degree(&self, object: usize, condition: usize) -> f64 {
        self.degrees[object][condition]
    }
}

/// Degree of each distinct value under each term, in value order.
pub fn fuzzy_scale(series: &AttributeSeries, variable: &LinguisticVariable) -> Result<Vec<(f64, Vec<f64>)>, QueryError> {
    let (lo, hi) = variable.domain;
    if let (Some(min), Some(max)) = (series.min(), series.max()) {
        if min < lo || max > hi {
            return Err(QueryError::DomainMismatch {
                attribute: series.attribute.clone(),
                min,
                max,
                lo,
                hi,
            });
        }
    }
    Ok(series.values().iter().map(|&v| (v, variable.degrees(v))).collect())
}

pub fn build_fuzzy_context(q: &FuzzyQuery, ds: &Dataset, kb: &KnowledgeBase) -> Result<FuzzyContext, QueryError> {
    let mut columns = Vec::with_capacity(q.conditions.len());
    for c in &q.conditions {
        let values = ds
            .numeric_column(&c.attribute)
            .map_err(|_| QueryError::UnknownAttribute(c.attribute.clone()))?;
        let mf = kb.lookup(&c.attribute, &c.label)?;
        columns.push(values.iter().map(|&v| mf_eval(mf, v)).collect::<Vec<f64>>());
    }
    let n = ds.row_count();
    Ok(FuzzyContext {
        rows: (0..n).collect(),
        conditions: q.conditions.clone(),
        degrees: (0..n).map(|r| columns.iter().map(|col| col[r]).collect()).collect(),
    })
}

/// Crisp context keeping `(object, condition)` when the degree exceeds `alpha`.
pub fn binarize(fc: &FuzzyContext, alpha: f64) -> FormalContext {
    let mut ctx = FormalContext::new(fc.conditions.iter().map(ToString::to_string).collect());
    for (o, row) in fc.degrees.iter().enumerate() {
        let marks: Vec<usize> = (0..row.len()).filter(|&c| row[c] > alpha).collect();
        ctx.add_object(fc.rows[o].to_string(), &marks).expect("condition ids in range");
    }
    ctx
}

/// Minimum of the object's degrees over `conditions`.
pub fn satisfaction_degree(fc: &FuzzyContext, object: usize, conditions: &[usize]) -> Result<f64, QueryError> {
    conditions
        .iter()
        .map(|&c| fc.degree(object, c))
        .reduce(f64::min)
        .ok_or(QueryError::EmptyConditions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedAnswer {
    pub row: usize,
    pub degree: f64,
    /// Selected `(column, cell)` pairs.
    pub projection: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subquery {
    /// Condition indices, ascending.
    pub conditions: Vec<usize>,
    pub answers: Vec<RankedAnswer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    /// Condition index sets, by size then lexicographically.
    pub reasons: Vec<Vec<usize>>,
    pub approximate: Vec<Subquery>,
}

fn rank(fc: &FuzzyContext, objects: impl Iterator<Item = usize>, conditions: &[usize]) -> Vec<RankedAnswer> {
    let mut out: Vec<RankedAnswer> = objects
        .map(|o| RankedAnswer {
            row: fc.rows[o],
            degree: satisfaction_degree(fc, o, conditions).expect("non-empty conditions"),
            projection: Vec::new(),
        })
        .collect();
    out.sort_by(|a, b| b.degree.total_cmp(&a.degree).then(a.row.cmp(&b.row)));
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn bits(n: usize, ids: &[usize]) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    for &i in ids {
        b.insert(i);
    }
    b
}

/// Minimal sets of conditions that no object satisfies together, found by
/// scanning subset sizes upward against the lattice's intents.
pub fn minimal_failure_reasons(lattice: &Lattice, n: usize) -> Vec<Vec<usize>> {
    let cs = lattice.concepts();
    let mut covered = FixedBitSet::with_capacity(n);
    for &p in lattice.infimum_parents() {
        covered.union_with(&cs[p].intent);
    }
    let mut found: Vec<FixedBitSet> = (0..n)
        .filter(|&c| !covered.contains(c))
        .map(|c| bits(n, &[c]))
        .collect();
    // Intents of concepts with at least one object.
    let inhabited: Vec<&FixedBitSet> = cs
        .iter()
        .filter(|c| !c.extent.is_clear())
        .map(|c| &c.intent)
        .collect();
    for size in 2..n {
        for s in subsets(n, size) {
            let s = bits(n, &s);
            if lattice.concept_with_intent(&s).is_some() {
                continue;
            }
            if inhabited.iter().any(|i| i.count_ones(..) > size && s.is_subset(i)) {
                continue;
            }
            if found.iter().any(|r| r.is_subset(&s)) {
                continue;
            }
            found.push(s);
        }
    }
    if found.is_empty() {
        found.push(bits(n, &(0..n).collect::<Vec<_>>()));
    }
    let mut out: Vec<Vec<usize>> = found.iter().map(|s| s.ones().collect()).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Largest subqueries that still have answers, each with its ranked answers.
pub fn approximate_subqueries(lattice: &Lattice, fc: &FuzzyContext) -> Vec<Subquery> {
    let candidates: Vec<_> = lattice
        .concepts()
        .iter()
        .filter(|c| !c.extent.is_clear() && !c.intent.is_clear())
        .collect();
    let Some(best) = candidates.iter().map(|c| c.intent.count_ones(..)).max() else {
        return Vec::new();
    };
    let mut out: Vec<Subquery> = candidates
        .iter()
        .filter(|c| c.intent.count_ones(..) == best)
        .map(|c| {
            let conditions: Vec<usize> = c.intent.ones().collect();
            let answers = rank(fc, c.extent.ones(), &conditions);
            Subquery { conditions, answers }
        })
        .collect();
    out.sort_by(|a, b| a.conditions.cmp(&b.conditions));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: FuzzyQuery,
    pub answers: Vec<RankedAnswer>,
    /// Present exactly when `answers` is empty.
    pub failure: Option<FailureReport>,
}

fn project(ds: &Dataset, select: &Selection, answers: &mut [RankedAnswer]) {
    let cols: Vec<String> = match select {
        Selection::All => ds.columns().iter().map(|c| c.name.clone()).collect(),
        Selection::Columns(c) => c.clone(),
    };
    for a in answers {
        a.projection = cols
            .iter()
            .map(|c| (c.clone(), ds.cell(a.row, c).unwrap_or_default().to_string()))
            .collect();
    }
}

pub fn evaluate(q: &FuzzyQuery, ds: &Dataset, kb: &KnowledgeBase, alpha: f64) -> Result<QueryResult, QueryError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(QueryError::BadAlpha(alpha));
    }
    if let Selection::Columns(cols) = &q.select {
        if let Some(c) = cols.iter().find(|c| ds.column_index(c).is_none()) {
            return Err(QueryError::UnknownColumn(c.clone()));
        }
    }
    for c in &q.conditions {
        let numeric = ds
            .column_index(&c.attribute)
            .is_some_and(|i| ds.columns()[i].kind == ColumnKind::Numeric);
        if !numeric {
            return Err(QueryError::UnknownAttribute(c.attribute.clone()));
        }
    }
    let fc = build_fuzzy_context(q, ds, kb)?;
    let lattice = build_lattice(&binarize(&fc, alpha));
    let n = q.conditions.len();
    let bottom = &lattice.concepts()[lattice.infimum()];
    if !bottom.extent.is_clear() {
        let mut answers = rank(&fc, bottom.extent.ones(), &(0..n).collect::<Vec<_>>());
        project(ds, &q.select, &mut answers);
        return Ok(QueryResult {
            query: q.clone(),
            answers,
            failure: None,
        });
    }
    let reasons = minimal_failure_reasons(&lattice, n);
    let mut approximate = approximate_subqueries(&lattice, &fc);
    for s in &mut approximate {
        project(ds, &q.select, &mut s.answers);
    }
    Ok(QueryResult {
        query: q.clone(),
        answers: Vec::new(),
        failure: Some(FailureReport { reasons, approximate }),
    })
}

#[derive(Serialize)]
struct JsonAnswer {
    row: usize,
    degree: Box<RawValue>,
    projection: Map<String, Value>,
}

#[derive(Serialize)]
struct JsonSubquery {
    conditions: Vec<String>,
    answers: Vec<JsonAnswer>,
}

#[derive(Serialize)]
struct JsonResult {
    status: &'static str,
    answers: Vec<JsonAnswer>,
    failure_reasons: Vec<Vec<String>>,
    approximate: Vec<JsonSubquery>,
}

fn json_answers(answers: &[RankedAnswer]) -> Vec<JsonAnswer> {
    answers
        .iter()
        .map(|a| JsonAnswer {
            row: a.row,
            degree: RawValue::from_string(format!("{:.6}", a.degree)).expect("decimal literal"),
            projection: a
                .projection
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        })
        .collect()
}

impl QueryResult {
    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn condition_texts(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.query.conditions[i].to_string()).collect()
    }

    /// The subquery made of the given conditions, keeping the selection.
    pub fn subquery(&self, s: &Subquery) -> FuzzyQuery {
        FuzzyQuery {
            select: self.query.select.clone(),
            from: self.query.from.clone(),
            conditions: s.conditions.iter().map(|&i| self.query.conditions[i].clone()).collect(),
        }
    }

    /// JSON document with degrees printed to six decimals.
    pub fn to_json(&self) -> String {
        let doc = match &self.failure {
            None => JsonResult {
                status: "answers",
                answers: json_answers(&self.answers),
                failure_reasons: Vec::new(),
                approximate: Vec::new(),
            },
            Some(f) => JsonResult {
                status: "empty",
                answers: Vec::new(),
                failure_reasons: f.reasons.iter().map(|r| self.condition_texts(r)).collect(),
                approximate: f
                    .approximate
                    .iter()
                    .map(|s| JsonSubquery {
                        conditions: self.condition_texts(&s.conditions),
                        answers: json_answers(&s.answers),
                    })
                    .collect(),
            },
        };
        serde_json::to_string(&doc).expect("serializable")
    }
}
