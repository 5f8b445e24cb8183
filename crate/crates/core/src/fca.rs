//! Formal contexts, Galois derivations and incremental concept lattices.

use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FcaError {
    #[error("object id {0} is outside the context")]
    ForeignObject(usize),
    #[error("attribute id {0} is outside the context")]
    ForeignAttribute(usize),
    #[error("incidence row {row} has {found} entries, expected {expected}")]
    RowWidth { row: usize, found: usize, expected: usize },
}

/// Objects, attributes and the incidence relation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    rows: Vec<FixedBitSet>,
}

impl FormalContext {
    pub fn new(attributes: Vec<String>) -> Self {
        Self {
            objects: Vec::new(),
            attributes,
            rows: Vec::new(),
        }
    }

    pub fn from_table(
        objects: Vec<String>,
        attributes: Vec<String>,
        table: &[Vec<bool>],
    ) -> Result<Self, FcaError> {
        let mut ctx = Self::new(attributes);
        for (row, (name, marks)) in objects.into_iter().zip(table).enumerate() {
            if marks.len() != ctx.attributes.len() {
                return Err(FcaError::RowWidth {
                    row,
                    found: marks.len(),
                    expected: ctx.attributes.len(),
                });
            }
            let ids: Vec<usize> = marks.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
            ctx.add_object(name, &ids)?;
        }
        Ok(ctx)
    }

    /// Appends an object described by attribute ids; returns its id.
    pub fn add_object(&mut self, name: impl Into<String>, attributes: &[usize]) -> Result<usize, FcaError> {
        let mut row = FixedBitSet::with_capacity(self.attributes.len());
        for &a in attributes {
            if a >= self.attributes.len() {
                return Err(FcaError::ForeignAttribute(a));
            }
            row.insert(a);
        }
        self.objects.push(name.into());
        self.rows.push(row);
        Ok(self.objects.len() - 1)
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    pub fn has(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    pub fn object_set(&self, ids: &[usize]) -> Result<FixedBitSet, FcaError> {
        let mut s = FixedBitSet::with_capacity(self.object_count());
        for &i in ids {
            if i >= self.object_count() {
                return Err(FcaError::ForeignObject(i));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn attribute_set(&self, ids: &[usize]) -> Result<FixedBitSet, FcaError> {
        let mut s = FixedBitSet::with_capacity(self.attribute_count());
        for &i in ids {
            if i >= self.attribute_count() {
                return Err(FcaError::ForeignAttribute(i));
            }
            s.insert(i);
        }
        Ok(s)
    }

    /// Attributes shared by every object of `objects`.
    pub fn derive_up(&self, objects: &FixedBitSet) -> Result<FixedBitSet, FcaError> {
        if let Some(o) = objects.ones().find(|&o| o >= self.object_count()) {
            return Err(FcaError::ForeignObject(o));
        }
        let mut out = FixedBitSet::with_capacity(self.attribute_count());
        out.insert_range(..);
        for o in objects.ones() {
            out.intersect_with(&self.rows[o]);
        }
        Ok(out)
    }

    /// Objects having every attribute of `attributes`.
    pub fn derive_down(&self, attributes: &FixedBitSet) -> Result<FixedBitSet, FcaError> {
        if let Some(a) = attributes.ones().find(|&a| a >= self.attribute_count()) {
            return Err(FcaError::ForeignAttribute(a));
        }
        let mut out = FixedBitSet::with_capacity(self.object_count());
        for (o, row) in self.rows.iter().enumerate() {
            if attributes.is_subset(row) {
                out.insert(o);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub extent: FixedBitSet,
    pub intent: FixedBitSet,
}

/// Concept lattice with its Hasse diagram. Objects are added one at a time.
#[derive(Debug, Clone)]
pub struct Lattice {
    attribute_count: usize,
    object_count: usize,
    concepts: Vec<Concept>,
    /// Covers with a larger extent.
    upper: Vec<Vec<usize>>,
    /// Covers with a smaller extent.
    lower: Vec<Vec<usize>>,
    by_intent: HashMap<FixedBitSet, usize>,
}

const INFIMUM: usize = 0;

impl Lattice {
    /// Lattice of a context with no objects: the single concept (∅, M).
    pub fn empty(attribute_count: usize) -> Self {
        let mut all = FixedBitSet::with_capacity(attribute_count);
        all.insert_range(..);
        let bottom = Concept {
            extent: FixedBitSet::new(),
            intent: all.clone(),
        };
        Self {
            attribute_count,
            object_count: 0,
            concepts: vec![bottom],
            upper: vec![Vec::new()],
            lower: vec![Vec::new()],
            by_intent: HashMap::from([(all, INFIMUM)]),
        }
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn object_count(&self) -> usize {
        self.object_count
    }

    pub fn infimum(&self) -> usize {
        INFIMUM
    }

    /// The concept whose extent holds every object.
    pub fn supremum(&self) -> usize {
        (0..self.len())
            .min_by_key(|&i| (self.concepts[i].intent.count_ones(..), i))
            .expect("never empty")
    }

    pub fn upper_covers(&self, c: usize) -> &[usize] {
        &self.upper[c]
    }

    pub fn lower_covers(&self, c: usize) -> &[usize] {
        &self.lower[c]
    }

    pub fn infimum_parents(&self) -> &[usize] {
        self.upper_covers(INFIMUM)
    }

    pub fn concept_with_intent(&self, intent: &FixedBitSet) -> Option<usize> {
        self.by_intent.get(intent).copied()
    }

    fn link(&mut self, low: usize, high: usize) {
        self.upper[low].push(high);
        self.lower[high].push(low);
    }

    fn unlink(&mut self, low: usize, high: usize) {
        self.upper[low].retain(|&h| h != high);
        self.lower[high].retain(|&l| l != low);
    }

    /// Inserts the next object, described by its attribute set, and repairs
    /// the Hasse diagram. Returns the object's id.
    pub fn insert(&mut self, description: &FixedBitSet) -> usize {
        let o = self.object_count;
        self.object_count += 1;
        let mut x = description.clone();
        x.grow(self.attribute_count);

        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (self.concepts[i].intent.count_ones(..), i));
        // Concepts whose extent now holds `o`, modified or created.
        let mut touched: Vec<usize> = Vec::new();

        for c in order {
            if self.concepts[c].intent.is_subset(&x) {
                let e = &mut self.concepts[c].extent;
                e.grow(o + 1);
                e.insert(o);
                touched.push(c);
                continue;
            }
            let mut meet = self.concepts[c].intent.clone();
            meet.intersect_with(&x);
            if self.by_intent.contains_key(&meet) {
                continue;
            }
            let mut extent = self.concepts[c].extent.clone();
            extent.grow(o + 1);
            extent.insert(o);
            let n = self.concepts.len();
            self.concepts.push(Concept {
                extent,
                intent: meet.clone(),
            });
            self.upper.push(Vec::new());
            self.lower.push(Vec::new());
            self.by_intent.insert(meet.clone(), n);

            let candidates: Vec<usize> = touched
                .iter()
                .copied()
                .filter(|&t| {
                    let i = &self.concepts[t].intent;
                    i.is_subset(&meet) && *i != meet
                })
                .collect();
            let parents: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&p| {
                    let ip = &self.concepts[p].intent;
                    !candidates.iter().any(|&q| {
                        let iq = &self.concepts[q].intent;
                        q != p && ip.is_subset(iq)
                    })
                })
                .collect();
            for p in parents {
                self.link(n, p);
                if self.upper[c].contains(&p) {
                    self.unlink(c, p);
                }
            }
            self.link(c, n);
            touched.push(n);
        }
        o
    }

    /// DOT rendering; nodes are labelled `intent | extent size`.
    pub fn to_dot(&self, ctx: &FormalContext) -> String {
        let mut s = String::from("digraph lattice {\n  rankdir=BT;\n  node [shape=box];\n");
        for (i, c) in self.concepts.iter().enumerate() {
            let names: Vec<&str> = c.intent.ones().map(|a| ctx.attributes()[a].as_str()).collect();
            let label = format!("{{{}}} | {}", names.join(","), c.extent.count_ones(..));
            let _ = writeln!(s, "  c{i} [label=\"{}\"];", label.replace('"', "\\\""));
        }
        for (low, highs) in self.upper.iter().enumerate() {
            for h in highs {
                let _ = writeln!(s, "  c{low} -> c{h};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Builds the lattice by inserting the context's objects in order.
pub fn build_lattice(ctx: &FormalContext) -> Lattice {
    let mut l = Lattice::empty(ctx.attribute_count());
    extend_lattice(&mut l, ctx);
    l
}

/// Inserts the context objects that the lattice has not seen yet.
pub fn extend_lattice(l: &mut Lattice, ctx: &FormalContext) {
    for o in l.object_count()..ctx.object_count() {
        l.insert(ctx.row(o));
    }
}
