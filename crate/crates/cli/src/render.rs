//! Plain-text rendering of command results.

use std::fmt::Write;

use flexq_core::query::{QueryResult, RankedAnswer};
use flexq_core::session::{AttributeUpdate, FitReport};
use flexq_core::LinguisticVariable;

/// Six decimals with trailing zeros dropped, keeping at least two.
pub fn degree(d: f64) -> String {
    let mut s = format!("{d:.6}");
    while s.ends_with('0') && s.len() - s.find('.').map_or(s.len(), |p| p + 1) > 2 {
        s.pop();
    }
    s
}

fn number(x: f64) -> String {
    format!("{x}")
}

pub fn fit(r: &FitReport) -> String {
    let mut s = format!("{}: {} clusters", r.attribute, r.clusters);
    if let Some(d) = r.db_star {
        let _ = write!(s, ", DB* {d:.4}");
    }
    s.push('\n');
    for (i, (lo, hi)) in r.kernels.iter().enumerate() {
        let _ = writeln!(s, "  kernel {}: [{}, {}]", i + 1, number(*lo), number(*hi));
    }
    s
}

pub fn membership(v: &LinguisticVariable) -> String {
    let width = v.terms.iter().map(|t| t.label.chars().count()).max().unwrap_or(0).max(4);
    let mut s = format!("{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}\n", "term", "A", "B", "C", "D");
    for t in &v.terms {
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}",
            t.label,
            number(t.a),
            number(t.b),
            number(t.c),
            number(t.d)
        );
    }
    s
}

pub fn update(u: &AttributeUpdate) -> String {
    let kind = format!("{:?}", u.kind);
    if u.touched.is_empty() {
        format!("{}: {kind}, no term changed\n", u.attribute)
    } else {
        format!("{}: {kind}, changed {}\n", u.attribute, u.touched.join(", "))
    }
}

fn answers(out: &mut String, list: &[RankedAnswer], indent: &str) {
    for (i, a) in list.iter().enumerate() {
        let cells: Vec<String> = a.projection.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "{indent}{:>3}. {:>8}  {}", i + 1, degree(a.degree), cells.join("  "));
    }
}

/// Ranked answers, or the failure report with numbered subqueries.
pub fn result(r: &QueryResult) -> String {
    let mut s = String::new();
    let Some(f) = &r.failure else {
        let _ = writeln!(s, "{} answers", r.answers.len());
        answers(&mut s, &r.answers, "");
        return s;
    };
    s.push_str("no answers\nminimal failure reasons:\n");
    for reason in &f.reasons {
        let _ = writeln!(s, "  - {}", r.condition_texts(reason).join(" and "));
    }
    if f.approximate.is_empty() {
        s.push_str("no approximate subqueries\n");
        return s;
    }
    s.push_str("approximate subqueries:\n");
    for (i, sub) in f.approximate.iter().enumerate() {
        let _ = writeln!(s, "  [{}] {}", i + 1, r.condition_texts(&sub.conditions).join(" and "));
        answers(&mut s, &sub.answers, "     ");
    }
    s
}
