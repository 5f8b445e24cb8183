//! Single-value insertion and deletion that keeps a partition and its
//! linguistic variable consistent without reclustering when possible.

use serde::Serialize;
use thiserror::Error;

use crate::cluster::{clusterdb_star, ClusterError, Partition};
use crate::membership::{
    centroid, default_labels, density_profile, kernel, position_of, supports, walk, Kernel,
    LinguisticVariable, MembershipError, Side, DENSITY_TOL,
};
use crate::rng::build_rng;

/// Relative tolerance for deciding that a new value is equidistant from two
/// clusters.
const EQUIDISTANT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum IncrementalError {
    #[error("value {0} is not finite")]
    NotFinite(f64),
    #[error("value {0} is not present")]
    Absent(f64),
    #[error("cannot delete the last remaining value")]
    LastValue,
    #[error("partition has {clusters} clusters but the variable has {terms} terms")]
    Mismatch { clusters: usize, terms: usize },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UpdateKind {
    Adjusted,
    Reclustered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub kind: UpdateKind,
    pub partition: Partition,
    pub variable: LinguisticVariable,
    /// Terms of the new variable whose parameters differ from before.
    pub touched: Vec<usize>,
}

/// Spans are ordered and every gap between adjacent clusters is strictly
/// larger than every gap between consecutive members of either cluster.
pub fn check_coherence(p: &Partition) -> bool {
    let widest = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    p.clusters().windows(2).all(|w| {
        let gap = w[1].lower() - w[0].upper();
        gap > 0.0 && gap > widest(w[0].values()) && gap > widest(w[1].values())
    })
}

fn check_shapes(p: &Partition, v: &LinguisticVariable) -> Result<(), IncrementalError> {
    if p.len() != v.terms.len() {
        return Err(IncrementalError::Mismatch {
            clusters: p.len(),
            terms: v.terms.len(),
        });
    }
    Ok(())
}

/// Members of `values` inside `k`, or `None` when none are.
fn snap(values: &[f64], k: Kernel) -> Option<Kernel> {
    let lower = values.iter().copied().find(|&x| x >= k.lower)?;
    let upper = values.iter().copied().rev().find(|&x| x <= k.upper)?;
    (lower <= upper).then_some(Kernel { lower, upper })
}

fn threshold_of(values: &[f64]) -> f64 {
    density_profile(&build_rng(values).expect("non-empty")).threshold
}

fn insert_kernel(old_values: &[f64], values: &[f64], old: Kernel, x: f64) -> Kernel {
    let g = build_rng(values).expect("non-empty");
    let prof = density_profile(&g);
    let old_sd = threshold_of(old_values);
    let c = centroid(values);
    let Some(old) = snap(values, old) else {
        return kernel(&g);
    };
    if !old.contains(c) || prof.threshold > old_sd + DENSITY_TOL {
        return kernel(&g);
    }
    let n = values.len();
    let (lo, hi) = (position_of(values, old.lower), position_of(values, old.upper));
    let (lo, hi) = if prof.threshold >= old_sd - DENSITY_TOL {
        let px = position_of(values, x);
        if px + 1 == lo {
            (walk(n, lo, Side::Left, |i| prof.is_dense(i)), hi)
        } else if px == hi + 1 {
            (lo, walk(n, hi, Side::Right, |i| prof.is_dense(i)))
        } else {
            (lo, hi)
        }
    } else {
        (
            walk(n, lo, Side::Left, |i| prof.is_strictly_dense(i)),
            walk(n, hi, Side::Right, |i| prof.is_strictly_dense(i)),
        )
    };
    Kernel {
        lower: values[lo],
        upper: values[hi],
    }
}

fn delete_kernel(old_values: &[f64], values: &[f64], old_raw: Kernel, x: f64) -> Kernel {
    let g = build_rng(values).expect("non-empty");
    let prof = density_profile(&g);
    let old_sd = threshold_of(old_values);
    let c = centroid(values);
    let Some(old) = snap(values, old_raw) else {
        return kernel(&g);
    };
    if !old.contains(c) || prof.threshold > old_sd + DENSITY_TOL {
        return kernel(&g);
    }
    let n = values.len();
    let pc = position_of(values, c);
    let (mut lo, mut hi) = (position_of(values, old.lower), position_of(values, old.upper));
    let regrow = |lo: &mut usize, hi: &mut usize| {
        if x > c {
            *hi = walk(n, pc, Side::Right, |i| prof.is_dense(i));
        } else {
            *lo = walk(n, pc, Side::Left, |i| prof.is_dense(i));
        }
    };
    if prof.threshold >= old_sd - DENSITY_TOL {
        regrow(&mut lo, &mut hi);
    } else {
        if old_raw.contains(x) {
            regrow(&mut lo, &mut hi);
        }
        lo = walk(n, lo, Side::Left, |i| prof.is_strictly_dense(i));
        hi = walk(n, hi, Side::Right, |i| prof.is_strictly_dense(i));
    }
    Kernel {
        lower: values[lo],
        upper: values[hi],
    }
}

fn changed_terms(old: &LinguisticVariable, new: &LinguisticVariable, old_index: impl Fn(usize) -> Option<usize>) -> Vec<usize> {
    (0..new.terms.len())
        .filter(|&j| {
            let t = &new.terms[j];
            match old_index(j).and_then(|i| old.terms.get(i)) {
                Some(o) => (o.a, o.b, o.c, o.d) != (t.a, t.b, t.c, t.d),
                None => true,
            }
        })
        .collect()
}

fn recluster(
    series: crate::dataset::AttributeSeries,
    old: &LinguisticVariable,
) -> Result<UpdateOutcome, IncrementalError> {
    let (partition, _) = clusterdb_star(&series)?;
    let labels: Vec<String> = if partition.len() == old.terms.len() {
        old.terms.iter().map(|t| t.label.clone()).collect()
    } else {
        default_labels(partition.len())
    };
    let variable = crate::membership::gfat_with_labels(&partition, &labels)?;
    let touched = (0..variable.terms.len()).collect();
    Ok(UpdateOutcome {
        kind: UpdateKind::Reclustered,
        partition,
        variable,
        touched,
    })
}

fn restitch(
    p: &Partition,
    kernels: &[Kernel],
    labels: &[String],
    attribute: &str,
) -> Result<LinguisticVariable, IncrementalError> {
    let src = p.source();
    Ok(supports(
        attribute,
        kernels,
        labels,
        src.min().expect("non-empty"),
        src.max().expect("non-empty"),
    )?)
}

fn unchanged(partition: Partition, variable: &LinguisticVariable) -> Result<UpdateOutcome, IncrementalError> {
    let kernels = variable.kernels();
    let labels: Vec<String> = variable.terms.iter().map(|t| t.label.clone()).collect();
    let next = restitch(&partition, &kernels, &labels, &variable.attribute)?;
    let touched = changed_terms(variable, &next, Some);
    Ok(UpdateOutcome {
        kind: UpdateKind::Adjusted,
        partition,
        variable: next,
        touched,
    })
}

/// Adds one observation of `x`.
pub fn insert_value(p: &Partition, v: &LinguisticVariable, x: f64) -> Result<UpdateOutcome, IncrementalError> {
    if !x.is_finite() {
        return Err(IncrementalError::NotFinite(x));
    }
    // Folds -0 into +0 so it cannot sit beside 0 as a distinct value.
    let x = x + 0.0;
    check_shapes(p, v)?;
    let mut series = p.source().clone();
    let fresh = series.add(x, None);
    let mut groups = p.groups();
    if !fresh {
        let partition = Partition::from_groups(series, &groups)?;
        return unchanged(partition, v);
    }

    let k = groups.len();
    let target = if let Some(i) = p.cluster_spanning(x) {
        Some((i, false))
    } else if x < groups[0][0] {
        Some((0, true))
    } else if x > *groups[k - 1].last().unwrap() {
        Some((k - 1, true))
    } else {
        let i = groups
            .iter()
            .position(|g| *g.last().unwrap() > x)
            .expect("x lies below the last cluster")
            - 1;
        let left = x - groups[i].last().unwrap();
        let right = groups[i + 1][0] - x;
        if (left - right).abs() <= EQUIDISTANT_TOL * left.max(right) {
            None
        } else if left < right {
            Some((i, true))
        } else {
            Some((i + 1, true))
        }
    };
    let Some((i, check)) = target else {
        return recluster(series, v);
    };

    let old_values = groups[i].clone();
    let at = old_values.partition_point(|&y| y < x);
    groups[i].insert(at, x);
    let partition = Partition::from_groups(series.clone(), &groups)?;
    if check && !check_coherence(&partition) {
        return recluster(series, v);
    }

    let mut kernels = v.kernels();
    kernels[i] = insert_kernel(&old_values, &groups[i], kernels[i], x);
    let labels: Vec<String> = v.terms.iter().map(|t| t.label.clone()).collect();
    let variable = restitch(&partition, &kernels, &labels, &v.attribute)?;
    let touched = changed_terms(v, &variable, Some);
    Ok(UpdateOutcome {
        kind: UpdateKind::Adjusted,
        partition,
        variable,
        touched,
    })
}

/// Removes one observation of `x`.
pub fn delete_value(p: &Partition, v: &LinguisticVariable, x: f64) -> Result<UpdateOutcome, IncrementalError> {
    check_shapes(p, v)?;
    let x = x + 0.0;
    let mut series = p.source().clone();
    if series.total() == 1 && series.position(x).is_some() {
        return Err(IncrementalError::LastValue);
    }
    let gone = series.remove(x, None).ok_or(IncrementalError::Absent(x))?;
    let mut groups = p.groups();
    let labels: Vec<String> = v.terms.iter().map(|t| t.label.clone()).collect();
    let Some(i) = p.cluster_of(x).filter(|_| gone) else {
        let partition = Partition::from_groups(series, &groups)?;
        return unchanged(partition, v);
    };

    let old_values = groups[i].clone();
    if old_values.len() == 1 {
        groups.remove(i);
        if groups.is_empty() {
            return recluster(series, v);
        }
        let partition = Partition::from_groups(series, &groups)?;
        let mut kernels = v.kernels();
        kernels.remove(i);
        let mut labels = labels;
        labels.remove(i);
        let variable = restitch(&partition, &kernels, &labels, &v.attribute)?;
        let touched = changed_terms(v, &variable, |j| Some(if j < i { j } else { j + 1 }));
        return Ok(UpdateOutcome {
            kind: UpdateKind::Adjusted,
            partition,
            variable,
            touched,
        });
    }

    let at = position_of(&old_values, x);
    if at > 0 && at + 1 < old_values.len() {
        let bridged = old_values[at + 1] - old_values[at - 1];
        let left_ok = i == 0 || old_values[0] - groups[i - 1].last().unwrap() > bridged;
        let right_ok = i + 1 == groups.len() || groups[i + 1][0] - old_values.last().unwrap() > bridged;
        if !(left_ok && right_ok) {
            return recluster(series, v);
        }
    }
    groups[i].remove(at);
    let partition = Partition::from_groups(series, &groups)?;
    let mut kernels = v.kernels();
    kernels[i] = delete_kernel(&old_values, &groups[i], kernels[i], x);
    let variable = restitch(&partition, &kernels, &labels, &v.attribute)?;
    let touched = changed_terms(v, &variable, Some);
    Ok(UpdateOutcome {
        kind: UpdateKind::Adjusted,
        partition,
        variable,
        touched,
    })
}
