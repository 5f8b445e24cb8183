//! Trapezoidal membership functions derived from a partition.
//!
//! Each cluster gets a kernel grown from its centroid through dense nodes;
//! adjacent kernels are then stitched so that the resulting terms sum to one
//! everywhere on the attribute's domain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::Partition;
use crate::rng::{build_rng, RngGraph};
use crate::validity::{mean, nearest_member};

/// Tolerance used when comparing densities against the density threshold.
pub(crate) const DENSITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MembershipError {
    #[error("a linguistic variable needs at least one term")]
    NoTerms,
    #[error("term {label:?} is not ordered: expected A <= B <= C <= D")]
    Unordered { label: String },
    #[error("term {label:?} has a non-finite breakpoint")]
    NotFinite { label: String },
    #[error("terms {left:?} and {right:?} are not stitched (C/D of one must equal A/B of the next)")]
    NotStitched { left: String, right: String },
    #[error("boundary term {label:?} must be flat at the domain end")]
    OpenBoundary { label: String },
    #[error("duplicate term label {0:?}")]
    DuplicateLabel(String),
    #[error("kernels overlap or are out of order")]
    OverlappingKernels,
    #[error("kernel count {kernels} does not match label count {labels}")]
    LabelCount { kernels: usize, labels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidMf {
    pub label: String,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl TrapezoidMf {
    pub fn new(label: impl Into<String>, a: f64, b: f64, c: f64, d: f64) -> Result<Self, MembershipError> {
        let mf = Self {
            label: label.into(),
            a,
            b,
            c,
            d,
        };
        mf.validate()?;
        Ok(mf)
    }

    fn validate(&self) -> Result<(), MembershipError> {
        if ![self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite()) {
            return Err(MembershipError::NotFinite {
                label: self.label.clone(),
            });
        }
        if !(self.a <= self.b && self.b <= self.c && self.c <= self.d) {
            return Err(MembershipError::Unordered {
                label: self.label.clone(),
            });
        }
        Ok(())
    }

    pub fn kernel(&self) -> Kernel {
        Kernel {
            lower: self.b,
            upper: self.c,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        mf_eval(self, x)
    }
}

/// Degree of `x` in `mf`: 1 on the kernel, 0 outside the support, linear ramps
/// in between.
pub fn mf_eval(mf: &TrapezoidMf, x: f64) -> f64 {
    if mf.b <= x && x <= mf.c {
        1.0
    } else if x <= mf.a || x >= mf.d {
        0.0
    } else if x < mf.b {
        (x - mf.a) / (mf.b - mf.a)
    } else {
        (mf.d - x) / (mf.d - mf.c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub attribute: String,
    pub domain: (f64, f64),
    pub terms: Vec<TrapezoidMf>,
}

impl LinguisticVariable {
    /// Validates ordering, boundary flatness and adjacent stitching.
    pub fn new(attribute: impl Into<String>, terms: Vec<TrapezoidMf>) -> Result<Self, MembershipError> {
        let first = terms.first().ok_or(MembershipError::NoTerms)?;
        let last = terms.last().unwrap();
        for t in &terms {
            t.validate()?;
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|u| u.label == t.label) {
                return Err(MembershipError::DuplicateLabel(t.label.clone()));
            }
        }
        if first.a != first.b {
            return Err(MembershipError::OpenBoundary {
                label: first.label.clone(),
            });
        }
        if last.c != last.d {
            return Err(MembershipError::OpenBoundary {
                label: last.label.clone(),
            });
        }
        for w in terms.windows(2) {
            if w[0].c != w[1].a || w[0].d != w[1].b {
                return Err(MembershipError::NotStitched {
                    left: w[0].label.clone(),
                    right: w[1].label.clone(),
                });
            }
        }
        Ok(Self {
            attribute: attribute.into(),
            domain: (first.a, last.d),
            terms,
        })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.label.as_str()).collect()
    }

    pub fn term(&self, label: &str) -> Option<&TrapezoidMf> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn degrees(&self, x: f64) -> Vec<f64> {
        self.terms.iter().map(|t| mf_eval(t, x)).collect()
    }

    /// Full term name as used in the FT table, e.g. `salaire-faible`.
    pub fn term_name(&self, label: &str) -> String {
        format!("{}-{}", self.attribute, label)
    }

    pub fn kernels(&self) -> Vec<Kernel> {
        self.terms.iter().map(TrapezoidMf::kernel).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub lower: f64,
    pub upper: f64,
}

impl Kernel {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub densities: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Midpoint of the extreme densities; nodes at or above it are dense.
    pub threshold: f64,
    pub diameter: f64,
}

impl DensityProfile {
    pub fn is_dense(&self, i: usize) -> bool {
        self.densities[i] >= self.threshold - DENSITY_TOL
    }

    pub fn is_strictly_dense(&self, i: usize) -> bool {
        self.densities[i] > self.threshold + DENSITY_TOL
    }
}

/// Mean of the values if it is one of them, else the nearest member.
pub fn centroid(values: &[f64]) -> f64 {
    nearest_member(values, mean(values))
}

/// Node densities over the neighbourhood graph. A singleton gets density 1.
pub fn density_profile(g: &RngGraph) -> DensityProfile {
    let nodes = g.nodes();
    let diameter = nodes[nodes.len() - 1] - nodes[0];
    if diameter == 0.0 {
        return DensityProfile {
            densities: vec![1.0; nodes.len()],
            min: 1.0,
            max: 1.0,
            threshold: 1.0,
            diameter,
        };
    }
    let densities: Vec<f64> = (0..nodes.len())
        .map(|i| {
            let (sum, n) = g
                .neighbours(i)
                .fold((0.0, 0usize), |(s, n), j| (s + (nodes[i] - nodes[j]).abs(), n + 1));
            let avg = if n == 0 { diameter } else { sum / n as f64 };
            (diameter - avg) / diameter
        })
        .collect();
    let min = densities.iter().copied().fold(f64::INFINITY, f64::min);
    let max = densities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DensityProfile {
        densities,
        min,
        max,
        threshold: (min + max) / 2.0,
        diameter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
}

/// Walks from position `from` towards `side` while the next node passes
/// `accept`, returning the last position reached.
pub(crate) fn walk(len: usize, from: usize, side: Side, accept: impl Fn(usize) -> bool) -> usize {
    let mut at = from;
    loop {
        let next = match side {
            Side::Left => at.checked_sub(1),
            Side::Right => (at + 1 < len).then_some(at + 1),
        };
        match next {
            Some(n) if accept(n) => at = n,
            _ => return at,
        }
    }
}

pub(crate) fn position_of(values: &[f64], x: f64) -> usize {
    values
        .binary_search_by(|v| v.total_cmp(&x))
        .expect("value is a member")
}

/// Grows a kernel from the centroid through dense neighbours, right side first.
pub fn kernel(g: &RngGraph) -> Kernel {
    let nodes = g.nodes();
    let c = position_of(nodes, centroid(nodes));
    let profile = density_profile(g);
    let right = walk(nodes.len(), c, Side::Right, |i| profile.is_dense(i));
    let left = walk(nodes.len(), c, Side::Left, |i| profile.is_dense(i));
    Kernel {
        lower: nodes[left],
        upper: nodes[right],
    }
}

pub fn kernel_of_values(values: &[f64]) -> Kernel {
    kernel(&build_rng(values).expect("non-empty cluster"))
}

pub fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("t{i}")).collect()
}

/// Stitches ordered kernels into terms covering `[min, max]`.
pub fn supports(
    attribute: &str,
    kernels: &[Kernel],
    labels: &[String],
    min: f64,
    max: f64,
) -> Result<LinguisticVariable, MembershipError> {
    if kernels.is_empty() {
        return Err(MembershipError::NoTerms);
    }
    if kernels.len() != labels.len() {
        return Err(MembershipError::LabelCount {
            kernels: kernels.len(),
            labels: labels.len(),
        });
    }
    if kernels.windows(2).any(|w| w[0].upper >= w[1].lower)
        || kernels.iter().any(|k| k.lower > k.upper)
        || min > kernels[0].upper
        || max < kernels[kernels.len() - 1].lower
    {
        return Err(MembershipError::OverlappingKernels);
    }
    let k = kernels.len();
    let lower = |i: usize| if i == 0 { min } else { kernels[i].lower };
    let upper = |i: usize| if i == k - 1 { max } else { kernels[i].upper };
    let terms = (0..k)
        .map(|i| TrapezoidMf {
            label: labels[i].clone(),
            a: if i == 0 { min } else { upper(i - 1) },
            b: lower(i),
            c: upper(i),
            d: if i == k - 1 { max } else { lower(i + 1) },
        })
        .collect();
    LinguisticVariable::new(attribute, terms)
}

/// Kernels and stitched supports for every cluster of the partition.
pub fn gfat(p: &Partition) -> LinguisticVariable {
    gfat_with_labels(p, &default_labels(p.len())).expect("partition clusters are ordered")
}

pub fn gfat_with_labels(p: &Partition, labels: &[String]) -> Result<LinguisticVariable, MembershipError> {
    let kernels: Vec<Kernel> = p.clusters().iter().map(|c| kernel(c.graph())).collect();
    let src = p.source();
    supports(
        p.attribute(),
        &kernels,
        labels,
        src.min().expect("non-empty"),
        src.max().expect("non-empty"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{age_clusters, taille};

    fn t(label: &str, a: f64, b: f64, c: f64, d: f64) -> TrapezoidMf {
        TrapezoidMf::new(label, a, b, c, d).unwrap()
    }

    #[test]
    fn centroid_rules() {
        assert_eq!(centroid(&[10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 17.0]), 13.0);
        assert_eq!(centroid(&[7.0]), 7.0);
        assert_eq!(centroid(&[0.0, 2.0]), 0.0);
        assert_eq!(centroid(&[1.0, 2.0, 3.0]), 2.0);
    }

    #[test]
    fn density_examples() {
        let p = density_profile(&build_rng(&[0.0, 1.0, 2.0]).unwrap());
        assert_eq!(p.densities, vec![0.5, 0.5, 0.5]);
        assert_eq!(p.threshold, 0.5);
        let p = density_profile(&build_rng(&[0.0, 1.0, 10.0]).unwrap());
        assert_eq!(p.densities, vec![0.9, 0.5, 0.1]);
        assert_eq!(p.threshold, 0.5);
        assert_eq!(p.diameter, 10.0);
    }

    #[test]
    fn singleton_kernel() {
        assert_eq!(kernel_of_values(&[4.0]), Kernel { lower: 4.0, upper: 4.0 });
    }

    #[test]
    fn age_kernels() {
        let kernels: Vec<Kernel> = age_clusters().iter().map(|c| kernel_of_values(c)).collect();
        let bounds: Vec<(f64, f64)> = kernels.iter().map(|k| (k.lower, k.upper)).collect();
        // The last cluster's own kernel stops at 91 (95 has density 0.2 against
        // a threshold of 0.5); the domain end stretches it to 95 once stitched.
        assert_eq!(bounds, vec![(10.0, 15.0), (38.0, 41.0), (69.0, 72.0), (90.0, 91.0)]);
    }

    #[test]
    fn age_supports() {
        let kernels: Vec<Kernel> = age_clusters().iter().map(|c| kernel_of_values(c)).collect();
        let v = supports("age", &kernels, &default_labels(4), 10.0, 95.0).unwrap();
        let abcd: Vec<[f64; 4]> = v.terms.iter().map(|t| [t.a, t.b, t.c, t.d]).collect();
        assert_eq!(
            abcd,
            vec![
                [10.0, 10.0, 15.0, 38.0],
                [15.0, 38.0, 41.0, 69.0],
                [41.0, 69.0, 72.0, 90.0],
                [72.0, 90.0, 95.0, 95.0],
            ]
        );
        assert_eq!(v.labels(), vec!["t1", "t2", "t3", "t4"]);
        assert_eq!(v.term_name("t2"), "age-t2");
    }

    #[test]
    fn single_kernel_is_constant_one() {
        let v = supports("x", &[Kernel { lower: 3.0, upper: 4.0 }], &default_labels(1), 0.0, 9.0).unwrap();
        assert_eq!(v.terms[0], t("t1", 0.0, 0.0, 9.0, 9.0));
        for x in [0.0, 2.5, 9.0] {
            assert_eq!(v.degrees(x), vec![1.0]);
        }
    }

    #[test]
    fn taille_degrees() {
        let v = taille();
        assert_eq!(v.degrees(162.0), vec![0.6, 0.4, 0.0]);
        let d = v.degrees(174.0);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 0.2).abs() < 1e-12 && (d[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn step_edges_for_zero_width_ramps() {
        let mf = t("s", 1.0, 1.0, 2.0, 2.0);
        assert_eq!(mf.eval(0.999), 0.0);
        assert_eq!(mf.eval(1.0), 1.0);
        assert_eq!(mf.eval(2.0), 1.0);
        assert_eq!(mf.eval(2.001), 0.0);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(TrapezoidMf::new("x", 2.0, 1.0, 3.0, 4.0), Err(MembershipError::Unordered { .. })));
        assert!(matches!(TrapezoidMf::new("x", f64::NAN, 1.0, 3.0, 4.0), Err(MembershipError::NotFinite { .. })));
        assert_eq!(LinguisticVariable::new("v", vec![]), Err(MembershipError::NoTerms));
        let gap = vec![t("a", 0.0, 0.0, 1.0, 2.0), t("b", 1.5, 2.0, 3.0, 3.0)];
        assert!(matches!(LinguisticVariable::new("v", gap), Err(MembershipError::NotStitched { .. })));
        let open = vec![t("a", 0.0, 1.0, 2.0, 2.0)];
        assert!(matches!(LinguisticVariable::new("v", open), Err(MembershipError::OpenBoundary { .. })));
        let dup = vec![t("a", 0.0, 0.0, 1.0, 2.0), t("a", 1.0, 2.0, 3.0, 3.0)];
        assert_eq!(LinguisticVariable::new("v", dup), Err(MembershipError::DuplicateLabel("a".into())));
        let k = [Kernel { lower: 0.0, upper: 2.0 }, Kernel { lower: 2.0, upper: 3.0 }];
        assert_eq!(
            supports("v", &k, &default_labels(2), 0.0, 3.0),
            Err(MembershipError::OverlappingKernels)
        );
    }

    mod props {
        use super::*;
        use crate::cluster::clusterdb_star;
        use crate::dataset::AttributeSeries;
        use proptest::prelude::*;

        fn kernels() -> impl Strategy<Value = (Vec<Kernel>, f64, f64)> {
            proptest::collection::vec((0.01f64..50.0, 0.0f64..50.0), 1..8).prop_map(|steps| {
                let mut at = 0.0;
                let mut ks = Vec::new();
                for (gap, width) in steps {
                    at += gap;
                    ks.push(Kernel { lower: at, upper: at + width });
                    at += width;
                }
                (ks, 0.0, at + 1.0)
            })
        }

        proptest! {
            #[test]
            fn ruspini(layout in kernels(), u in 0.0f64..1.0) {
                let (ks, lo, hi) = layout;
                let v = supports("v", &ks, &default_labels(ks.len()), lo, hi).unwrap();
                let x = lo + u * (hi - lo);
                let s: f64 = v.degrees(x).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9, "sum {} at {}", s, x);
            }

            #[test]
            fn ramps_are_monotone(a in 0.0f64..10.0, w in proptest::array::uniform3(0.0f64..10.0), u in 0.0f64..1.0, v in 0.0f64..1.0) {
                let mf = t("m", a, a + w[0], a + w[0] + w[1], a + w[0] + w[1] + w[2]);
                let (x, y) = (mf.a + u.min(v) * (mf.b - mf.a), mf.a + u.max(v) * (mf.b - mf.a));
                prop_assert!(mf.eval(x) <= mf.eval(y) + 1e-12);
                let (x, y) = (mf.c + u.min(v) * (mf.d - mf.c), mf.c + u.max(v) * (mf.d - mf.c));
                prop_assert!(mf.eval(x) + 1e-12 >= mf.eval(y));
            }

            #[test]
            fn kernel_contains_centroid_and_members(v in proptest::collection::btree_set(0i32..300, 1..40)) {
                let v: Vec<f64> = v.into_iter().map(f64::from).collect();
                let k = kernel_of_values(&v);
                prop_assert!(v.contains(&k.lower) && v.contains(&k.upper));
                prop_assert!(k.contains(centroid(&v)));
            }

            #[test]
            fn gfat_kernels_inside_clusters(v in proptest::collection::vec(0i32..500, 2..60)) {
                let v: Vec<f64> = v.into_iter().map(f64::from).collect();
                let s = AttributeSeries::from_values("x", &v);
                let (p, _) = clusterdb_star(&s).unwrap();
                let var = gfat(&p);
                prop_assert_eq!(var.terms.len(), p.len());
                for (i, (term, c)) in var.terms.iter().zip(p.clusters()).enumerate() {
                    if i > 0 { prop_assert!(c.contains(term.b)); }
                    if i + 1 < p.len() { prop_assert!(c.contains(term.c)); }
                }
            }
        }
    }
}
