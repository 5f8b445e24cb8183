//! Relative neighbourhood graph over a set of reals.
//!
//! Two nodes are relative neighbours when no third node is closer to both of
//! them than they are to each other. The construction below checks that
//! condition literally so the graph stays valid for any metric; on the real
//! line it always reduces to the chain of consecutive values.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RngError {
    #[error("cannot build a graph over an empty series")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RngGraph {
    nodes: Vec<f64>,
    edges: Vec<Edge>,
}

impl RngGraph {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_edge(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    }

    /// Indices of the nodes joined to `i` by an edge.
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.from == i {
                Some(e.to)
            } else if e.to == i {
                Some(e.from)
            } else {
                None
            }
        })
    }

    /// Restriction of the graph to the nodes `lo..hi` (positions in `nodes`).
    pub fn restrict(&self, lo: usize, hi: usize) -> RngGraph {
        let edges = self
            .edges
            .iter()
            .filter(|e| e.from >= lo && e.to < hi)
            .map(|e| Edge {
                from: e.from - lo,
                to: e.to - lo,
                weight: e.weight,
            })
            .collect();
        RngGraph {
            nodes: self.nodes[lo..hi].to_vec(),
            edges,
        }
    }
}

fn dist(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Builds the graph from strictly ascending distinct values.
///
/// Candidate witnesses `k` are scanned outward from `i`, nearest positions
/// first, so a failing pair is usually rejected after one or two checks.
pub fn build_rng(values: &[f64]) -> Result<RngGraph, RngError> {
    if values.is_empty() {
        return Err(RngError::Empty);
    }
    let n = values.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist(values[i], values[j]);
            let blocked = outward(i, n).filter(|&k| k != j).any(|k| {
                let m = dist(values[i], values[k]).max(dist(values[j], values[k]));
                dij > m
            });
            if !blocked {
                edges.push(Edge {
                    from: i,
                    to: j,
                    weight: dij,
                });
            }
        }
    }
    Ok(RngGraph {
        nodes: values.to_vec(),
        edges,
    })
}

/// Positions other than `i` in order of increasing index distance from `i`.
fn outward(i: usize, n: usize) -> impl Iterator<Item = usize> {
    (1..n).flat_map(move |step| {
        let right = (i + step < n).then_some(i + step);
        let left = i.checked_sub(step);
        right.into_iter().chain(left)
    })
}

/// Connected components after deleting every edge heavier than `threshold`,
/// ordered by their smallest node.
pub fn components_after_cut(g: &RngGraph, threshold: f64) -> Vec<RngGraph> {
    let n = g.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in g.edges.iter().filter(|e| e.weight <= threshold) {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
        .into_iter()
        .map(|members| {
            let mut remap = vec![usize::MAX; n];
            for (new, &old) in members.iter().enumerate() {
                remap[old] = new;
            }
            let edges = g
                .edges
                .iter()
                .filter(|e| e.weight <= threshold && remap[e.from] != usize::MAX)
                .map(|e| Edge {
                    from: remap[e.from],
                    to: remap[e.to],
                    weight: e.weight,
                })
                .collect();
            RngGraph {
                nodes: members.iter().map(|&i| g.nodes[i]).collect(),
                edges,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::AGES;

    /// Literal triple-condition check over every pair.
    fn brute_edges(v: &[f64]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let ok = (0..v.len())
                    .filter(|&k| k != i && k != j)
                    .all(|k| (v[i] - v[j]).abs() <= (v[i] - v[k]).abs().max((v[j] - v[k]).abs()));
                if ok {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn pairs(g: &RngGraph) -> Vec<(usize, usize)> {
        g.edges().iter().map(|e| (e.from, e.to)).collect()
    }

    #[test]
    fn ages_form_a_path() {
        let g = build_rng(&AGES).unwrap();
        assert_eq!(g.edges().len(), 28);
        assert_eq!(pairs(&g), brute_edges(&AGES));
        assert!(g.edges().iter().all(|e| e.to == e.from + 1));
    }

    #[test]
    fn two_values_one_edge() {
        let g = build_rng(&[3.0, 7.5]).unwrap();
        assert_eq!(g.edges(), &[Edge { from: 0, to: 1, weight: 4.5 }]);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert_eq!(build_rng(&[]), Err(RngError::Empty));
    }

    #[test]
    fn age_cut_at_four() {
        let g = build_rng(&AGES).unwrap();
        let comps = components_after_cut(&g, 4.0);
        let spans: Vec<(f64, f64)> = comps
            .iter()
            .map(|c| (c.nodes()[0], *c.nodes().last().unwrap()))
            .collect();
        assert_eq!(spans, vec![(10.0, 17.0), (30.0, 50.0), (69.0, 76.0), (90.0, 95.0)]);
    }

    #[test]
    fn large_threshold_keeps_one_component() {
        let g = build_rng(&AGES).unwrap();
        assert_eq!(components_after_cut(&g, g.max_edge()).len(), 1);
    }

    #[test]
    fn zero_threshold_isolates_every_node() {
        let g = build_rng(&[0.0, 1.0, 3.0]).unwrap();
        let comps = components_after_cut(&g, 0.0);
        assert_eq!(comps.len(), 3);
        assert!(comps.iter().all(|c| c.edges().is_empty()));
    }

    #[test]
    fn non_chain_metric_example() {
        // Equilateral-ish triple on the line cannot happen, but equal spacing
        // keeps every consecutive pair.
        let g = build_rng(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(pairs(&g), vec![(0, 1), (1, 2), (2, 3)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn distinct_sorted() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::btree_set(-500i32..500, 1..40)
                .prop_map(|s| s.into_iter().map(|v| v as f64 * 0.25).collect())
        }

        proptest! {
            #[test]
            fn one_dimensional_chain(v in distinct_sorted()) {
                let g = build_rng(&v).unwrap();
                prop_assert_eq!(pairs(&g), brute_edges(&v));
                prop_assert_eq!(g.edges().len(), v.len() - 1);
            }

            #[test]
            fn cut_partitions_into_contiguous_runs(v in distinct_sorted(), t in 0.0f64..60.0) {
                let g = build_rng(&v).unwrap();
                let comps = components_after_cut(&g, t);
                let joined: Vec<f64> = comps.iter().flat_map(|c| c.nodes().to_vec()).collect();
                prop_assert_eq!(&joined, &v);
                for c in &comps {
                    prop_assert!(c.edges().iter().all(|e| e.weight <= t));
                    prop_assert_eq!(c.edges().len(), c.len() - 1);
                }
            }
        }
    }
}
