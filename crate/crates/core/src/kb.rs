//! Knowledge base of linguistic variables, persisted as a canonical JSON
//! document and exportable as a flat FT table.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cluster::Partition;
use crate::dataset::AttributeSeries;
use crate::membership::{LinguisticVariable, MembershipError, TrapezoidMf};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown attribute {attribute:?}; known: {}", available.join(", "))]
    UnknownAttribute { attribute: String, available: Vec<String> },
    #[error("unknown label {label:?} for {attribute}; available: {}", available.join(", "))]
    UnknownLabel {
        attribute: String,
        label: String,
        available: Vec<String>,
    },
    #[error("label {label:?} for {attribute} is ambiguous between {}", candidates.join(", "))]
    AmbiguousLabel {
        attribute: String,
        label: String,
        candidates: Vec<String>,
    },
    #[error(transparent)]
    Invalid(#[from] MembershipError),
    #[error("malformed knowledge base: {0}")]
    Format(String),
}

/// One row of the FT table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtRecord {
    pub terme: String,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

/// Cluster membership snapshot kept alongside a fitted variable so that later
/// insertions and deletions can be applied without refitting.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSnapshot {
    pub clusters: Vec<Vec<(f64, usize)>>,
    pub noise: Vec<(f64, usize)>,
}

impl PartitionSnapshot {
    pub fn of(p: &Partition) -> Self {
        let src = p.source();
        let pairs = |vals: &[f64]| vals.iter().map(|&v| (v, src.multiplicity(v))).collect::<Vec<_>>();
        Self {
            clusters: p.clusters().iter().map(|c| pairs(c.values())).collect(),
            noise: p.noise().iter().flat_map(|c| pairs(c.values())).collect(),
        }
    }

    pub fn restore(&self, attribute: &str) -> Result<Partition, KbError> {
        let all: Vec<(f64, usize)> = self.clusters.iter().flatten().chain(&self.noise).copied().collect();
        let series = AttributeSeries::from_counts(attribute, &all);
        let groups: Vec<Vec<f64>> = self
            .clusters
            .iter()
            .map(|c| c.iter().map(|p| p.0).collect())
            .collect();
        Partition::from_groups(series, &groups).map_err(|e| KbError::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    version: u64,
    variables: BTreeMap<String, LinguisticVariable>,
    partitions: BTreeMap<String, PartitionSnapshot>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Stores `variable`, replacing any previous one for its attribute along
    /// with its partition snapshot.
    pub fn put(&mut self, variable: LinguisticVariable) -> Result<(), KbError> {
        let checked = LinguisticVariable::new(variable.attribute.clone(), variable.terms)?;
        self.partitions.remove(&checked.attribute);
        self.variables.insert(checked.attribute.clone(), checked);
        self.version += 1;
        Ok(())
    }

    /// Stores a variable together with the partition it was fitted on.
    pub fn put_fitted(&mut self, variable: LinguisticVariable, partition: &Partition) -> Result<(), KbError> {
        if partition.len() != variable.terms.len() {
            return Err(KbError::Format(format!(
                "{} clusters for {} terms",
                partition.len(),
                variable.terms.len()
            )));
        }
        let attribute = variable.attribute.clone();
        self.put(variable)?;
        self.partitions.insert(attribute, PartitionSnapshot::of(partition));
        Ok(())
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.variables.keys().map(String::as_str)
    }

    pub fn variables(&self) -> impl Iterator<Item = &LinguisticVariable> {
        self.variables.values()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variable(&self, attribute: &str) -> Result<&LinguisticVariable, KbError> {
        if let Some(v) = self.variables.get(attribute) {
            return Ok(v);
        }
        let folded: Vec<&LinguisticVariable> = self
            .variables
            .values()
            .filter(|v| v.attribute.to_lowercase() == attribute.to_lowercase())
            .collect();
        match folded.as_slice() {
            [one] => Ok(one),
            _ => Err(KbError::UnknownAttribute {
                attribute: attribute.to_string(),
                available: self.variables.keys().cloned().collect(),
            }),
        }
    }

    pub fn partition(&self, attribute: &str) -> Option<Result<Partition, KbError>> {
        let name = &self.variable(attribute).ok()?.attribute;
        self.partitions.get(name).map(|s| s.restore(name))
    }

    /// Resolves a term by exact label, full `attr-label` name, an abbreviated
    /// `attr_label` alias such as `tail_m`, or a unique prefix relation
    /// between the given word and a stored label.
    pub fn lookup(&self, attribute: &str, label: &str) -> Result<&TrapezoidMf, KbError> {
        let var = self.variable(attribute)?;
        if let Some(t) = var.term(label) {
            return Ok(t);
        }
        if let Some(t) = label
            .strip_prefix(var.attribute.as_str())
            .and_then(|rest| rest.strip_prefix('-'))
            .and_then(|l| var.term(l))
        {
            return Ok(t);
        }
        if let Some((head, tail)) = label.rsplit_once('_') {
            if !head.is_empty() && var.attribute.starts_with(head) {
                if let Some(t) = var.term(tail) {
                    return Ok(t);
                }
            }
        }
        let word = label.to_lowercase();
        let hits: Vec<&TrapezoidMf> = var
            .terms
            .iter()
            .filter(|t| {
                let l = t.label.to_lowercase();
                !l.is_empty() && !word.is_empty() && (word.starts_with(&l) || l.starts_with(&word))
            })
            .collect();
        match hits.as_slice() {
            [one] => Ok(one),
            [] => Err(KbError::UnknownLabel {
                attribute: var.attribute.clone(),
                label: label.to_string(),
                available: var.terms.iter().map(|t| t.label.clone()).collect(),
            }),
            many => Err(KbError::AmbiguousLabel {
                attribute: var.attribute.clone(),
                label: label.to_string(),
                candidates: many.iter().map(|t| t.label.clone()).collect(),
            }),
        }
    }

    /// Flat FT rows, attributes in name order and terms in domain order.
    pub fn records(&self) -> Vec<FtRecord> {
        self.variables
            .values()
            .flat_map(|v| {
                v.terms.iter().map(|t| FtRecord {
                    terme: v.term_name(&t.label),
                    a: t.a,
                    b: t.b,
                    c: t.c,
                    d: t.d,
                })
            })
            .collect()
    }

    pub fn write_ft_csv<W: Write>(&self, out: W) -> Result<(), KbError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["terme", "A", "B", "C", "D"])?;
        for r in self.records() {
            w.write_record([r.terme, r.a.to_string(), r.b.to_string(), r.c.to_string(), r.d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let attributes: Vec<Value> = self
            .variables
            .values()
            .map(|v| {
                let terms: Vec<Value> = v
                    .terms
                    .iter()
                    .map(|t| json!({"label": t.label, "A": t.a, "B": t.b, "C": t.c, "D": t.d}))
                    .collect();
                let mut entry = json!({
                    "name": v.attribute,
                    "domain": [v.domain.0, v.domain.1],
                    "terms": terms,
                });
                if let Some(s) = self.partitions.get(&v.attribute) {
                    entry["partition"] = json!({
                        "clusters": s.clusters.iter().map(|c| pairs_json(c)).collect::<Vec<_>>(),
                        "noise": pairs_json(&s.noise),
                    });
                }
                entry
            })
            .collect();
        json!({
            "version": self.version,
            "attributes": attributes,
        })
    }

    /// Canonical text: sorted keys, two-space indent, trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, KbError> {
        let doc: Value = serde_json::from_str(text)?;
        let bad = |m: &str| KbError::Format(m.to_string());
        let version = doc["version"].as_u64().ok_or_else(|| bad("missing version"))?;
        let attrs = doc["attributes"].as_array().ok_or_else(|| bad("missing attributes"))?;
        let mut kb = KnowledgeBase {
            version,
            ..Self::default()
        };
        for a in attrs {
            let name = a["name"].as_str().ok_or_else(|| bad("attribute without name"))?;
            let terms = a["terms"].as_array().ok_or_else(|| bad("attribute without terms"))?;
            let terms = terms
                .iter()
                .map(|t| serde_json::from_value::<TrapezoidMf>(t.clone()))
                .collect::<Result<Vec<_>, _>>()?;
            let var = LinguisticVariable::new(name, terms)?;
            if let Some(d) = a.get("domain") {
                let d: (f64, f64) = serde_json::from_value(d.clone())?;
                if d != var.domain {
                    return Err(KbError::Format(format!("domain of {name} does not match its terms")));
                }
            }
            if kb.variables.contains_key(name) {
                return Err(KbError::Format(format!("duplicate attribute {name}")));
            }
            if let Some(p) = a.get("partition") {
                let clusters: Vec<Vec<(f64, usize)>> = serde_json::from_value(p["clusters"].clone())?;
                let noise: Vec<(f64, usize)> = match p.get("noise") {
                    Some(n) => serde_json::from_value(n.clone())?,
                    None => Vec::new(),
                };
                if clusters.len() != var.terms.len() {
                    return Err(KbError::Format(format!("partition of {name} does not match its terms")));
                }
                let snapshot = PartitionSnapshot { clusters, noise };
                snapshot.restore(name)?;
                kb.partitions.insert(name.to_string(), snapshot);
            }
            kb.variables.insert(name.to_string(), var);
        }
        Ok(kb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KbError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn pairs_json(pairs: &[(f64, usize)]) -> Value {
    Value::Array(pairs.iter().map(|&(v, n)| json!([v, n])).collect())
}
