//! Interactive loop: a query per line, or the number of an approximate
//! subquery from the previous failure report.

use std::io::{self, BufRead, Write};

use flexq_core::query::{parse_query, FuzzyQuery, QueryResult};
use flexq_core::session::Session;

use crate::{render, Format};

const PROMPT: &str = "flexq> ";

fn show(out: &mut impl Write, r: &QueryResult, format: Format) -> io::Result<()> {
    match format {
        Format::Table => write!(out, "{}", render::result(r)),
        Format::Json => writeln!(out, "{}", r.to_json()),
    }
}

fn pick(last: Option<&QueryResult>, n: usize) -> Result<FuzzyQuery, String> {
    let subs = last
        .and_then(|r| r.failure.as_ref().map(|f| (r, &f.approximate)))
        .filter(|(_, s)| !s.is_empty())
        .ok_or("no approximate subqueries to choose from")?;
    let (r, subs) = subs;
    let sub = subs
        .get(n.wrapping_sub(1))
        .ok_or_else(|| format!("choose a subquery between 1 and {}", subs.len()))?;
    Ok(r.subquery(sub))
}

pub fn run<R: BufRead, W: Write>(
    session: &Session,
    alpha: f64,
    format: Format,
    input: R,
    mut out: W,
) -> io::Result<()> {
    let mut last: Option<QueryResult> = None;
    let mut lines = input.lines();
    loop {
        write!(out, "{PROMPT}")?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else {
            writeln!(out)?;
            return Ok(());
        };
        let line = line.trim();
        match line {
            "" => continue,
            "quit" | "exit" | r"\q" => return Ok(()),
            _ => {}
        }
        let query = match line.parse::<usize>() {
            Ok(n) => pick(last.as_ref(), n),
            Err(_) => parse_query(line).map_err(|e| e.to_string()),
        };
        let query = match query {
            Ok(q) => q,
            Err(e) => {
                writeln!(out, "error: {e}")?;
                continue;
            }
        };
        match session.query(&query, alpha) {
            Ok(r) => {
                if line.parse::<usize>().is_ok() {
                    writeln!(out, "{query}")?;
                }
                show(&mut out, &r, format)?;
                last = Some(r);
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}
