//! Recursive graph-cut clustering of one attribute's distinct values.
//!
//! The neighbourhood graph is split at a data-driven distance threshold and
//! each component is split again until a stop condition holds. The plain
//! variant then folds small clusters into their neighbours; the DB*-guided
//! variant instead refuses any split that does not lower the DB* index of the
//! whole partition.

use thiserror::Error;

use crate::dataset::AttributeSeries;
use crate::rng::{build_rng, components_after_cut, RngGraph};
use crate::validity::{db_star, CentroidMode, PartitionView};

/// Relative tolerance used when comparing distances derived by subtraction.
pub(crate) const REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("cannot cluster an empty series")]
    Empty,
    #[error("cluster groups do not match the series: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    graph: RngGraph,
    size: usize,
    birth_threshold: Option<f64>,
}

impl Cluster {
    fn new(graph: RngGraph, source: &AttributeSeries, birth_threshold: Option<f64>) -> Self {
        let size = graph
            .nodes()
            .iter()
            .map(|&v| source.multiplicity(v).max(1))
            .sum();
        Self {
            graph,
            size,
            birth_threshold,
        }
    }

    pub fn values(&self) -> &[f64] {
        self.graph.nodes()
    }

    pub fn graph(&self) -> &RngGraph {
        &self.graph
    }

    /// Number of observations, counting duplicates.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn birth_threshold(&self) -> Option<f64> {
        self.birth_threshold
    }

    pub fn lower(&self) -> f64 {
        self.values()[0]
    }

    pub fn upper(&self) -> f64 {
        *self.values().last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.values().binary_search_by(|v| v.total_cmp(&x)).is_ok()
    }

    /// Heaviest internal edge, zero for a singleton.
    pub fn max_internal_edge(&self) -> f64 {
        self.graph.max_edge()
    }
}

/// Ordered clusters over one attribute series.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    clusters: Vec<Cluster>,
    /// Clusters discarded as noise by the small-cluster stage.
    noise: Vec<Cluster>,
    source: AttributeSeries,
}

impl Partition {
    /// Rebuilds a partition from explicit value groups. Groups must be
    /// non-empty, ascending and made of series values; runs of values left
    /// outside every group become noise.
    pub fn from_groups(source: AttributeSeries, groups: &[Vec<f64>]) -> Result<Self, ClusterError> {
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(ClusterError::Mismatch("empty group".into()));
        }
        if all.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ClusterError::Mismatch("groups are not ascending and disjoint".into()));
        }
        if let Some(v) = all.iter().find(|&&v| source.position(v).is_none()) {
            return Err(ClusterError::Mismatch(format!("{v} is not in the series")));
        }
        let clusters: Vec<Cluster> = groups
            .iter()
            .map(|g| Cluster::new(build_rng(g).expect("non-empty"), &source, None))
            .collect();
        let mut noise = Vec::new();
        let mut run = Vec::new();
        let mut covered = all.iter().peekable();
        for &v in source.values() {
            if covered.peek() == Some(&&v) {
                covered.next();
                if !run.is_empty() {
                    noise.push(Cluster::new(build_rng(&run).unwrap(), &source, None));
                    run.clear();
                }
            } else {
                run.push(v);
            }
        }
        if !run.is_empty() {
            noise.push(Cluster::new(build_rng(&run).unwrap(), &source, None));
        }
        Ok(Self {
            clusters,
            noise,
            source,
        })
    }

    /// Index of the cluster holding the value `x`.
    pub fn cluster_of(&self, x: f64) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(x))
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn noise(&self) -> &[Cluster] {
        &self.noise
    }

    pub fn source(&self) -> &AttributeSeries {
        &self.source
    }

    pub fn attribute(&self) -> &str {
        &self.source.attribute
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn groups(&self) -> Vec<Vec<f64>> {
        self.clusters.iter().map(|c| c.values().to_vec()).collect()
    }

    /// Index of the cluster whose span contains `x`.
    pub fn cluster_spanning(&self, x: f64) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.lower() <= x && x <= c.upper())
    }

    pub fn view(&self, mode: CentroidMode) -> PartitionView {
        PartitionView::new(self.groups(), mode).expect("clusters are non-empty")
    }

    /// DB* of the partition, `None` when it has a single cluster.
    pub fn db_star(&self, mode: CentroidMode) -> Option<f64> {
        db_star(&self.view(mode)).ok()
    }
}

/// Working state of one threshold search over a graph's edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    /// Ascending distinct edge weights.
    pub ao: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Successive differences of `ao`, ascending.
    pub variations: Vec<f64>,
    pub t: f64,
    pub threshold: Option<f64>,
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

/// Runs the threshold rules; `None` when the graph has no edges.
pub fn threshold_search(g: &RngGraph) -> Option<ThresholdSearch> {
    let mut ao: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    if ao.is_empty() {
        return None;
    }
    ao.sort_by(f64::total_cmp);
    ao.dedup_by(|b, a| approx_eq(*a, *b));
    let min = ao[0];
    let max = *ao.last().unwrap();
    let mut search = ThresholdSearch {
        ao,
        min,
        max,
        variations: Vec::new(),
        t: 0.0,
        threshold: None,
    };
    // Objects are already close to each other.
    if max <= 2.0 * min * (1.0 + REL_TOL) {
        return Some(search);
    }
    let mut variations: Vec<f64> = search.ao.windows(2).map(|w| w[1] - w[0]).collect();
    variations.sort_by(f64::total_cmp);
    let t = (variations[0] + variations[variations.len() - 1]) / 2.0;
    search.variations = variations;
    search.t = t;
    search.threshold = search
        .ao
        .windows(2)
        .find(|w| w[1] - w[0] >= t * (1.0 - REL_TOL) && w[0] >= 2.0 * min * (1.0 - REL_TOL))
        .map(|w| w[0]);
    Some(search)
}

pub fn find_threshold(g: &RngGraph) -> Option<f64> {
    threshold_search(g).and_then(|s| s.threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    /// Gate every split on a strict DB* improvement of the whole partition.
    pub use_index: bool,
    /// Run the small-cluster merge / noise stage after splitting.
    pub merge_small: bool,
    /// Clusters below this share of all observations count as small.
    pub small_fraction: f64,
    /// A small cluster born at a threshold above `noise_factor` times its
    /// neighbour's heaviest edge is dropped instead of merged.
    pub noise_factor: f64,
    pub centroid_mode: CentroidMode,
}

impl ClusterOptions {
    pub fn plain() -> Self {
        Self {
            use_index: false,
            merge_small: true,
            small_fraction: 0.05,
            noise_factor: 3.0,
            centroid_mode: CentroidMode::Mean,
        }
    }

    pub fn db_star() -> Self {
        Self {
            use_index: true,
            merge_small: false,
            ..Self::plain()
        }
    }
}

struct Splitter<'a> {
    source: &'a AttributeSeries,
    options: ClusterOptions,
    current: Vec<Cluster>,
    index: Option<f64>,
}

impl Splitter<'_> {
    /// Splits the cluster at `pos` recursively and returns how many clusters
    /// it finally occupies.
    fn process(&mut self, pos: usize) -> usize {
        let g = self.current[pos].graph.clone();
        let Some(seuil) = find_threshold(&g) else {
            return 1;
        };
        let comps = components_after_cut(&g, seuil * (1.0 + REL_TOL));
        if comps.len() == 1 || comps.len() as f64 > (g.len() as f64).sqrt() {
            return 1;
        }
        let children: Vec<Cluster> = comps
            .into_iter()
            .map(|c| Cluster::new(c, self.source, Some(seuil)))
            .collect();
        let k = children.len();

        let mut candidate = self.current.clone();
        candidate.splice(pos..=pos, children);
        if self.options.use_index {
            let groups = candidate.iter().map(|c| c.values().to_vec()).collect();
            let view =
                PartitionView::new(groups, self.options.centroid_mode).expect("non-empty clusters");
            let next = db_star(&view).ok();
            let better = match (self.index, next) {
                (None, _) => true,
                (Some(prev), Some(next)) => next < prev,
                (Some(_), None) => false,
            };
            if !better {
                return 1;
            }
            self.index = next;
        }
        self.current = candidate;

        let mut offset = 0;
        for _ in 0..k {
            offset += self.process(pos + offset);
        }
        offset
    }
}

/// Clusters a series with explicit options; also returns the final DB* value
/// (`None` for a single cluster).
pub fn cluster_with(
    series: &AttributeSeries,
    options: ClusterOptions,
) -> Result<(Partition, Option<f64>), ClusterError> {
    if series.is_empty() {
        return Err(ClusterError::Empty);
    }
    let root = build_rng(series.values()).expect("non-empty");
    let mut splitter = Splitter {
        source: series,
        options,
        current: vec![Cluster::new(root, series, None)],
        index: None,
    };
    splitter.process(0);
    let mut partition = Partition {
        clusters: splitter.current,
        noise: Vec::new(),
        source: series.clone(),
    };
    if options.merge_small {
        merge_small_clusters(&mut partition, options);
    }
    let index = partition.db_star(options.centroid_mode);
    Ok((partition, index))
}

pub fn cluster_plain(series: &AttributeSeries) -> Result<Partition, ClusterError> {
    cluster_with(series, ClusterOptions::plain()).map(|(p, _)| p)
}

pub fn clusterdb_star(series: &AttributeSeries) -> Result<(Partition, Option<f64>), ClusterError> {
    cluster_with(series, ClusterOptions::db_star())
}

fn merge_small_clusters(p: &mut Partition, options: ClusterOptions) {
    let limit = options.small_fraction * p.source.total() as f64;
    loop {
        if p.clusters.len() <= 1 {
            return;
        }
        let small = p
            .clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| (c.size as f64) < limit)
            .min_by_key(|(i, c)| (c.size, *i))
            .map(|(i, _)| i);
        let Some(i) = small else { return };

        let left_gap = (i > 0).then(|| p.clusters[i].lower() - p.clusters[i - 1].upper());
        let right_gap = p
            .clusters
            .get(i + 1)
            .map(|r| r.lower() - p.clusters[i].upper());
        let j = match (left_gap, right_gap) {
            (Some(l), Some(r)) if r < l => i + 1,
            (Some(_), _) => i - 1,
            (None, _) => i + 1,
        };
        let neighbour_max = p.clusters[j].max_internal_edge();
        let born = p.clusters[i].birth_threshold.unwrap_or(0.0);
        if born > options.noise_factor * neighbour_max {
            let dropped = p.clusters.remove(i);
            p.noise.push(dropped);
            continue;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let mut values = p.clusters[lo].values().to_vec();
        values.extend_from_slice(p.clusters[hi].values());
        let merged = Cluster {
            graph: build_rng(&values).expect("non-empty"),
            size: p.clusters[lo].size + p.clusters[hi].size,
            birth_threshold: p.clusters[j].birth_threshold,
        };
        p.clusters.splice(lo..=hi, [merged]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incremental::check_coherence;
    use crate::test_support::{planted_series, AGES};

    fn spans(p: &Partition) -> Vec<(f64, f64)> {
        p.clusters().iter().map(|c| (c.lower(), c.upper())).collect()
    }

    #[test]
    fn age_threshold_search() {
        let g = build_rng(&AGES).unwrap();
        let s = threshold_search(&g).unwrap();
        assert_eq!(s.ao, vec![1.0, 2.0, 3.0, 4.0, 13.0, 14.0, 19.0]);
        assert_eq!(s.t, 5.0);
        assert_eq!(s.threshold, Some(4.0));
    }

    #[test]
    fn uniform_spacing_has_no_threshold() {
        let g = build_rng(&[0.0, 3.0, 6.0, 9.0]).unwrap();
        let s = threshold_search(&g).unwrap();
        assert_eq!(s.ao, vec![3.0]);
        assert_eq!(s.threshold, None);
    }

    #[test]
    fn max_equal_to_twice_min_stops() {
        let g = build_rng(&[0.0, 1.0, 3.0]).unwrap();
        let s = threshold_search(&g).unwrap();
        assert_eq!(s.ao, vec![1.0, 2.0]);
        assert!(s.variations.is_empty());
        assert_eq!(s.threshold, None);
    }

    #[test]
    fn single_value_has_no_edges() {
        let g = build_rng(&[5.0]).unwrap();
        assert!(threshold_search(&g).is_none());
    }

    #[test]
    fn age_clusterdb_star_gives_four_clusters() {
        let series = AttributeSeries::from_values("age", &AGES);
        let (p, idx) = clusterdb_star(&series).unwrap();
        assert_eq!(spans(&p), vec![(10.0, 17.0), (30.0, 50.0), (69.0, 76.0), (90.0, 95.0)]);
        let idx = idx.unwrap();
        assert!((idx - 0.297).abs() <= 0.05, "{idx}");
    }

    #[test]
    fn age_g2_split_would_raise_db_star() {
        let series = AttributeSeries::from_values("age", &AGES);
        let (p, idx) = clusterdb_star(&series).unwrap();
        let g2 = &p.clusters()[1];
        let seuil = find_threshold(g2.graph()).unwrap();
        assert_eq!(seuil, 2.0);
        let mut groups = p.groups();
        let parts = components_after_cut(g2.graph(), seuil);
        assert_eq!(parts.len(), 2);
        groups.splice(1..=1, parts.iter().map(|g| g.nodes().to_vec()));
        let split = PartitionView::new(groups, CentroidMode::Mean).unwrap();
        assert!(db_star(&split).unwrap() > idx.unwrap());
    }

    #[test]
    fn age_plain_matches_and_merge_is_a_noop() {
        let series = AttributeSeries::from_values("age", &AGES);
        let p = cluster_plain(&series).unwrap();
        // Without the index gate the G2 and G3 splits go through.
        assert!(p.len() >= 4);
        assert!(p.noise().is_empty());
        let unmerged = cluster_with(&series, ClusterOptions { merge_small: false, ..ClusterOptions::plain() })
            .unwrap()
            .0;
        assert_eq!(p, unmerged);
    }

    #[test]
    fn single_value_gives_one_cluster() {
        let series = AttributeSeries::from_values("x", &[3.0, 3.0]);
        let p = cluster_plain(&series).unwrap();
        assert_eq!(spans(&p), vec![(3.0, 3.0)]);
        assert_eq!(p.clusters()[0].size(), 2);
        let (q, idx) = clusterdb_star(&series).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(idx, None);
    }

    #[test]
    fn two_tight_groups_stay_one_cluster() {
        // AO = {1, 98}: Max > 2 Min, t = 97, but the only candidate 1 < 2 Min,
        // so no threshold exists and the series stays whole.
        let series = AttributeSeries::from_values("x", &[0.0, 1.0, 2.0, 100.0, 101.0, 102.0]);
        let g = build_rng(series.values()).unwrap();
        let s = threshold_search(&g).unwrap();
        assert_eq!(s.ao, vec![1.0, 98.0]);
        assert_eq!(s.threshold, None);
        assert_eq!(cluster_plain(&series).unwrap().len(), 1);
    }

    #[test]
    fn empty_series_is_rejected() {
        let series = AttributeSeries::from_values("x", &[]);
        assert_eq!(cluster_plain(&series), Err(ClusterError::Empty));
    }

    #[test]
    fn planted_gaps_are_recovered() {
        for k in 2..=4 {
            let (series, truth) = planted_series(k, 11 + k as u64);
            let (p, _) = clusterdb_star(&series).unwrap();
            assert_eq!(p.groups(), truth, "k = {k}");
        }
    }

    #[test]
    fn small_cluster_is_merged_into_nearest() {
        // 40 values in [0, 39] with unit gaps plus a pair far out; the pair is
        // under 5 % of the data.
        let mut v: Vec<f64> = (0..40).map(f64::from).collect();
        v.extend([45.0, 46.0]);
        let series = AttributeSeries::from_values("x", &v);
        let mut p = Partition::from_groups(series, &[v[..40].to_vec(), v[40..].to_vec()]).unwrap();
        p.clusters[1].birth_threshold = Some(2.0);
        merge_small_clusters(&mut p, ClusterOptions::plain());
        assert_eq!(p.len(), 1);
        assert!(p.noise().is_empty());
    }

    #[test]
    fn small_cluster_next_to_singleton_is_noise() {
        let mut v: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.5).collect();
        v.extend([100.0, 200.0]);
        let series = AttributeSeries::from_values("x", &v);
        let mut p = Partition::from_groups(
            series,
            &[v[..40].to_vec(), vec![100.0], vec![200.0]],
        )
        .unwrap();
        p.clusters[1].birth_threshold = Some(80.0);
        p.clusters[2].birth_threshold = Some(80.0);
        merge_small_clusters(&mut p, ClusterOptions::plain());
        // {100}: nearest is {200} (gap 100 vs 80.5? no: 80.5 to the left) -> left
        // neighbour max edge 0.5, 80 > 1.5 -> noise. Then {200} likewise.
        assert_eq!(p.len(), 1);
        assert_eq!(p.noise().len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn series() -> impl Strategy<Value = AttributeSeries> {
            proptest::collection::vec(0i32..400, 1..80).prop_map(|v| {
                let v: Vec<f64> = v.into_iter().map(|x| f64::from(x) * 0.5).collect();
                AttributeSeries::from_values("x", &v)
            })
        }

        proptest! {
            #[test]
            fn db_star_partitions_are_coherent_and_cover(s in series()) {
                let (p, _) = clusterdb_star(&s).unwrap();
                let joined: Vec<f64> = p.groups().concat();
                prop_assert_eq!(joined.as_slice(), s.values());
                prop_assert!(p.clusters().windows(2).all(|w| w[0].upper() < w[1].lower()));
                prop_assert_eq!(p.clusters().iter().map(Cluster::size).sum::<usize>(), s.total());
            }

            #[test]
            fn index_only_rejects_splits(s in series()) {
                let (p, _) = clusterdb_star(&s).unwrap();
                let unmerged = cluster_with(&s, ClusterOptions { merge_small: false, ..ClusterOptions::plain() }).unwrap().0;
                prop_assert!(p.len() <= unmerged.len());
            }

            #[test]
            fn plain_covers_with_noise(s in series()) {
                let p = cluster_plain(&s).unwrap();
                let mut all: Vec<f64> = p.clusters().iter().chain(p.noise()).flat_map(|c| c.values().to_vec()).collect();
                all.sort_by(f64::total_cmp);
                prop_assert_eq!(all.as_slice(), s.values());
                prop_assert!(p.clusters().windows(2).all(|w| w[0].upper() < w[1].lower()));
            }

            #[test]
            fn deterministic(s in series()) {
                prop_assert_eq!(clusterdb_star(&s).unwrap(), clusterdb_star(&s).unwrap());
            }

            #[test]
            fn planted_partitions_are_coherent(k in 2usize..5, seed in 0u64..1000) {
                let (s, _) = planted_series(k, seed);
                let (p, _) = clusterdb_star(&s).unwrap();
                prop_assert!(check_coherence(&p));
            }
        }
    }
}
