//! Partition quality indices: Davies-Bouldin, DB*, Dunn and silhouette.
//!
//! Dispersion `S_i` is the mean absolute distance of a cluster's members to
//! its centroid, and the distance between two clusters is the distance between
//! their centroids.

use thiserror::Error;

use crate::rng::build_rng;

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("index needs at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("every cluster has zero diameter; the Dunn index is undefined")]
    ZeroDiameter,
    #[error("clusters {0} and {1} share a centroid; separation is zero")]
    CoincidentCentroids(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentroidMode {
    /// Arithmetic mean of the members.
    #[default]
    Mean,
    /// Member closest to the mean, ties toward the smaller value.
    NearestMember,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMode {
    /// Largest distance between two members.
    Full,
    /// Heaviest edge of the cluster's neighbourhood graph.
    RngEdge,
}

/// Read-only view of a partition with per-cluster statistics precomputed.
#[derive(Debug, Clone)]
pub struct PartitionView {
    clusters: Vec<Vec<f64>>,
    centroids: Vec<f64>,
    dispersion: Vec<f64>,
}

impl PartitionView {
    pub fn new(clusters: Vec<Vec<f64>>, mode: CentroidMode) -> Result<Self, IndexError> {
        if let Some(i) = clusters.iter().position(Vec::is_empty) {
            return Err(IndexError::EmptyCluster(i));
        }
        let centroids: Vec<f64> = clusters
            .iter()
            .map(|c| match mode {
                CentroidMode::Mean => mean(c),
                CentroidMode::NearestMember => nearest_member(c, mean(c)),
            })
            .collect();
        let dispersion = clusters
            .iter()
            .zip(&centroids)
            .map(|(c, &ce)| c.iter().map(|x| (x - ce).abs()).sum::<f64>() / c.len() as f64)
            .collect();
        Ok(Self {
            clusters,
            centroids,
            dispersion,
        })
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Vec<f64>] {
        &self.clusters
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.dispersion
    }

    pub fn diameter(&self, k: usize) -> f64 {
        let c = &self.clusters[k];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    fn separation(&self, i: usize, j: usize) -> Result<f64, IndexError> {
        let d = (self.centroids[i] - self.centroids[j]).abs();
        if d == 0.0 {
            Err(IndexError::CoincidentCentroids(i.min(j), i.max(j)))
        } else {
            Ok(d)
        }
    }

    fn require_pair(&self) -> Result<(), IndexError> {
        if self.len() < 2 {
            Err(IndexError::TooFewClusters(self.len()))
        } else {
            Ok(())
        }
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn nearest_member(v: &[f64], target: f64) -> f64 {
    let mut best = v[0];
    for &x in &v[1..] {
        let (dx, db) = ((x - target).abs(), (best - target).abs());
        if dx < db || (dx == db && x < best) {
            best = x;
        }
    }
    best
}

/// Davies-Bouldin: mean over clusters of the worst similarity ratio.
pub fn db(p: &PartitionView) -> Result<f64, IndexError> {
    p.require_pair()?;
    let n = p.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..n).filter(|&j| j != i) {
            let r = (p.dispersion[i] + p.dispersion[j]) / p.separation(i, j)?;
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / n as f64)
}

/// DB*: the numerator and denominator of each cluster's ratio are maximised
/// and minimised independently.
pub fn db_star(p: &PartitionView) -> Result<f64, IndexError> {
    p.require_pair()?;
    let n = p.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut spread = f64::NEG_INFINITY;
        let mut closest = f64::INFINITY;
        for k in (0..n).filter(|&k| k != i) {
            spread = spread.max(p.dispersion[i] + p.dispersion[k]);
            closest = closest.min(p.separation(i, k)?);
        }
        total += spread / closest;
    }
    Ok(total / n as f64)
}

pub fn dunn(p: &PartitionView, mode: DiameterMode) -> Result<f64, IndexError> {
    p.require_pair()?;
    let n = p.len();
    let mut widest: f64 = 0.0;
    for k in 0..n {
        let d = match mode {
            DiameterMode::Full => p.diameter(k),
            DiameterMode::RngEdge => {
                let mut v = p.clusters[k].clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                build_rng(&v).map(|g| g.max_edge()).unwrap_or(0.0)
            }
        };
        widest = widest.max(d);
    }
    if widest == 0.0 {
        return Err(IndexError::ZeroDiameter);
    }
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            for &x in &p.clusters[i] {
                for &y in &p.clusters[j] {
                    gap = gap.min((x - y).abs());
                }
            }
        }
    }
    Ok(gap / widest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    /// Per-object widths, grouped like the partition's clusters.
    pub objects: Vec<Vec<f64>>,
    pub cluster_means: Vec<f64>,
    pub global: f64,
}

pub fn silhouette(p: &PartitionView) -> Result<Silhouette, IndexError> {
    p.require_pair()?;
    let n = p.len();
    let mean_dist = |x: f64, c: &[f64], skip_self: bool| -> f64 {
        let others = if skip_self { c.len() - 1 } else { c.len() };
        if others == 0 {
            return 0.0;
        }
        c.iter().map(|&y| (x - y).abs()).sum::<f64>() / others as f64
    };
    let mut objects = Vec::with_capacity(n);
    for i in 0..n {
        let widths = p.clusters[i]
            .iter()
            .map(|&x| {
                let a = mean_dist(x, &p.clusters[i], true);
                let b = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| mean_dist(x, &p.clusters[j], false))
                    .fold(f64::INFINITY, f64::min);
                let denom = a.max(b);
                if denom == 0.0 {
                    0.0
                } else {
                    (b - a) / denom
                }
            })
            .collect::<Vec<_>>();
        objects.push(widths);
    }
    let cluster_means: Vec<f64> = objects.iter().map(|w| mean(w)).collect();
    let global = mean(&cluster_means);
    Ok(Silhouette {
        objects,
        cluster_means,
        global,
    })
}
