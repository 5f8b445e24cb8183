//! A dataset paired with its knowledge base, kept in step as rows come and go.

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{clusterdb_star, ClusterError, Partition};
use crate::dataset::{attribute_series, AttributeSeries, ColumnKind, Dataset, DatasetError};
use crate::incremental::{delete_value, insert_value, IncrementalError, UpdateKind, UpdateOutcome};
use crate::kb::{KbError, KnowledgeBase};
use crate::membership::{default_labels, gfat_with_labels, MembershipError};
use crate::query::{evaluate, FuzzyQuery, QueryError, QueryResult};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error("{attribute}: {error}")]
    Update { attribute: String, error: IncrementalError },
    #[error("no stored partition for {0}; fit it first or supply its data")]
    NoPartition(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change {
    Insert(f64),
    Delete(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeUpdate {
    pub attribute: String,
    pub kind: UpdateKind,
    pub terms: Vec<String>,
    /// Labels of the terms whose parameters moved.
    pub touched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub attribute: String,
    pub clusters: usize,
    pub db_star: Option<f64>,
    pub kernels: Vec<(f64, f64)>,
}

/// Clusters `series` and stores the resulting variable. Labels already held
/// for the attribute are kept when the term count is unchanged.
pub fn fit_attribute(kb: &mut KnowledgeBase, series: &AttributeSeries) -> Result<FitReport, SessionError> {
    let (partition, db_star) = clusterdb_star(series)?;
    let labels = match kb.variable(&series.attribute) {
        Ok(old) if old.terms.len() == partition.len() => old.terms.iter().map(|t| t.label.clone()).collect(),
        _ => default_labels(partition.len()),
    };
    let variable = gfat_with_labels(&partition, &labels)?;
    let kernels = variable.terms.iter().map(|t| (t.b, t.c)).collect();
    kb.put_fitted(variable, &partition)?;
    Ok(FitReport {
        attribute: series.attribute.clone(),
        clusters: partition.len(),
        db_star,
        kernels,
    })
}

fn same_values(p: &Partition, series: &AttributeSeries) -> bool {
    p.source().values() == series.values() && p.source().counts() == series.counts()
}

/// Applies one value change to the attribute's stored partition. When
/// `data` is given and the stored partition does not describe it, the
/// attribute is refitted on `data` first.
pub fn maintain(
    kb: &mut KnowledgeBase,
    attribute: &str,
    data: Option<&AttributeSeries>,
    change: Change,
) -> Result<AttributeUpdate, SessionError> {
    let name = kb.variable(attribute)?.attribute.clone();
    let stored = kb.partition(&name).transpose()?;
    let partition = match (stored, data) {
        (Some(p), Some(s)) if same_values(&p, s) => Some(p),
        (Some(p), None) => Some(p),
        (_, Some(s)) if s.is_empty() => None,
        (_, Some(s)) => {
            fit_attribute(kb, s)?;
            kb.partition(&name).transpose()?
        }
        (None, None) => return Err(SessionError::NoPartition(name)),
    };
    let variable = kb.variable(&name)?.clone();
    let outcome = match (partition, change) {
        (Some(p), Change::Insert(x)) => insert_value(&p, &variable, x),
        (Some(p), Change::Delete(x)) => delete_value(&p, &variable, x),
        (None, Change::Insert(x)) => {
            let series = AttributeSeries::from_values(name.clone(), &[x]);
            fit_attribute(kb, &series)?;
            let variable = kb.variable(&name)?;
            return Ok(AttributeUpdate {
                attribute: name,
                kind: UpdateKind::Reclustered,
                terms: variable.terms.iter().map(|t| t.label.clone()).collect(),
                touched: variable.terms.iter().map(|t| t.label.clone()).collect(),
            });
        }
        (None, Change::Delete(x)) => Err(IncrementalError::Absent(x)),
    }
    .map_err(|error| SessionError::Update {
        attribute: name.clone(),
        error,
    })?;
    let UpdateOutcome {
        kind,
        partition,
        variable,
        touched,
    } = outcome;
    let update = AttributeUpdate {
        attribute: name,
        kind,
        terms: variable.terms.iter().map(|t| t.label.clone()).collect(),
        touched: touched.iter().map(|&i| variable.terms[i].label.clone()).collect(),
    };
    kb.put_fitted(variable, &partition)?;
    Ok(update)
}

/// A loaded table and the knowledge base describing its numeric attributes.
#[derive(Debug, Clone)]
pub struct Session {
    dataset: Dataset,
    kb: KnowledgeBase,
}

impl Session {
    pub fn new(dataset: Dataset, kb: KnowledgeBase) -> Self {
        Self { dataset, kb }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn into_parts(self) -> (Dataset, KnowledgeBase) {
        (self.dataset, self.kb)
    }

    pub fn query(&self, q: &FuzzyQuery, alpha: f64) -> Result<QueryResult, QueryError> {
        evaluate(q, &self.dataset, &self.kb, alpha)
    }

    /// Knowledge-base attributes backed by a numeric column.
    pub fn maintained(&self) -> Vec<String> {
        self.kb
            .variables()
            .filter(|v| {
                self.dataset
                    .column_index(&v.attribute)
                    .is_some_and(|c| self.dataset.columns()[c].kind == ColumnKind::Numeric)
            })
            .map(|v| v.attribute.clone())
            .collect()
    }

    /// Appends a row and updates every maintained attribute. Nothing changes
    /// if any step fails.
    pub fn insert_row(&mut self, cells: &[(String, String)]) -> Result<(usize, Vec<AttributeUpdate>), SessionError> {
        let mut dataset = self.dataset.clone();
        let id = dataset.push_row(cells)?;
        let mut kb = self.kb.clone();
        let mut updates = Vec::new();
        for attr in self.maintained() {
            let before = attribute_series(&self.dataset, &attr)?;
            let x = dataset.value(id, &attr)?;
            updates.push(maintain(&mut kb, &attr, Some(&before), Change::Insert(x))?);
        }
        self.dataset = dataset;
        self.kb = kb;
        Ok((id, updates))
    }

    /// Removes a row and updates every maintained attribute. Later rows
    /// shift down by one id.
    pub fn delete_row(&mut self, id: usize) -> Result<(Vec<String>, Vec<AttributeUpdate>), SessionError> {
        let mut dataset = self.dataset.clone();
        let mut kb = self.kb.clone();
        let mut updates = Vec::new();
        for attr in self.maintained() {
            let before = attribute_series(&self.dataset, &attr)?;
            let x = self.dataset.value(id, &attr)?;
            updates.push(maintain(&mut kb, &attr, Some(&before), Change::Delete(x))?);
        }
        let removed = dataset.remove_row(id)?;
        self.dataset = dataset;
        self.kb = kb;
        Ok((removed, updates))
    }
}
