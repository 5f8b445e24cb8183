//! `SELECT cols FROM table WHERE attr IS label (AND attr IS label)*`

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("query has no conditions")]
    EmptyConditions,
    #[error("condition `{attribute} is {label}` appears twice")]
    DuplicateCondition { attribute: String, label: String },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub label: String,
}

impl Condition {
    pub fn new(attribute: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            label: label.into(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} is {}", self.attribute, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    All,
    Columns(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyQuery {
    pub select: Selection,
    pub from: String,
    pub conditions: Vec<Condition>,
}

impl FuzzyQuery {
    /// Builds a query from structured parts, applying the same checks as the
    /// parser.
    pub fn new(select: Selection, from: impl Into<String>, conditions: Vec<Condition>) -> Result<Self, ParseError> {
        if conditions.is_empty() {
            return Err(ParseError::EmptyConditions);
        }
        for (i, c) in conditions.iter().enumerate() {
            if conditions[..i].contains(c) {
                return Err(ParseError::DuplicateCondition {
                    attribute: c.attribute.clone(),
                    label: c.label.clone(),
                });
            }
        }
        Ok(Self {
            select,
            from: from.into(),
            conditions,
        })
    }
}

impl fmt::Display for FuzzyQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = match &self.select {
            Selection::All => "*".to_string(),
            Selection::Columns(c) => c.join(", "),
        };
        let conds: Vec<String> = self.conditions.iter().map(ToString::to_string).collect();
        write!(f, "SELECT {cols} FROM {} WHERE {}", self.from, conds.join(" and "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Comma,
    Star,
    Other(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Comma => "`,`".into(),
            Tok::Star => "`*`".into(),
            Tok::Other(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if is_ident_char(c) {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
            }
            out.push((at, Tok::Word(word)));
        } else {
            chars.next();
            out.push((
                at,
                match c {
                    ',' => Tok::Comma,
                    '*' => Tok::Star,
                    other => Tok::Other(other),
                },
            ));
        }
    }
    out.push((text.len(), Tok::End));
    out
}

const KEYWORDS: [&str; 5] = ["select", "from", "where", "is", "and"];

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(usize, Tok) {
        &self.toks[self.at]
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        let (offset, tok) = self.peek();
        Err(ParseError::Syntax {
            offset: *offset,
            expected: expected.to_string(),
            found: tok.describe(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().1, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.at += 1;
            Ok(())
        } else {
            self.fail(&kw.to_uppercase())
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().1 {
            Tok::Word(w) if !KEYWORDS.iter().any(|k| w.eq_ignore_ascii_case(k)) => {
                let w = w.clone();
                self.at += 1;
                Ok(w)
            }
            _ => self.fail(what),
        }
    }
}

pub fn parse_query(text: &str) -> Result<FuzzyQuery, ParseError> {
    let mut p = Parser {
        toks: tokenize(text),
        at: 0,
    };
    p.keyword("select")?;
    let select = if p.peek().1 == Tok::Star {
        p.at += 1;
        Selection::All
    } else {
        let mut cols = vec![p.ident("column name or `*`")?];
        while p.peek().1 == Tok::Comma {
            p.at += 1;
            cols.push(p.ident("column name")?);
        }
        Selection::Columns(cols)
    };
    p.keyword("from")?;
    let from = p.ident("table name")?;
    p.keyword("where")?;
    if p.peek().1 == Tok::End {
        return Err(ParseError::EmptyConditions);
    }
    let mut conditions = Vec::new();
    loop {
        let attribute = p.ident("attribute name")?;
        p.keyword("is")?;
        let label = p.ident("linguistic term")?;
        conditions.push(Condition { attribute, label });
        if p.is_keyword("and") {
            p.at += 1;
        } else if p.peek().1 == Tok::End {
            break;
        } else {
            return p.fail("AND or end of input");
        }
    }
    FuzzyQuery::new(select, from, conditions)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPLOYE: &str = "SELECT nom FROM employé WHERE salaire is faible and age is grand and nbAT is moyen and nbE is faible and taille is moyenne";

    #[test]
    fn employe_query() {
        let q = parse_query(EMPLOYE).unwrap();
        let pairs: Vec<(&str, &str)> = q
            .conditions
            .iter()
            .map(|c| (c.attribute.as_str(), c.label.as_str()))
            .collect();
        assert_eq!(
            pairs,
            vec![("salaire", "faible"), ("age", "grand"), ("nbAT", "moyen"), ("nbE", "faible"), ("taille", "moyenne")]
        );
        assert_eq!(q.select, Selection::Columns(vec!["nom".into()]));
        assert_eq!(q.from, "employé");
    }

    #[test]
    fn star_and_single_condition() {
        let q = parse_query("SELECT * FROM t WHERE a IS b").unwrap();
        assert_eq!(q.select, Selection::All);
        assert_eq!(q.conditions, vec![Condition::new("a", "b")]);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let q = parse_query("select a, b From t wHeRe x Is y AND z is w").unwrap();
        assert_eq!(q.select, Selection::Columns(vec!["a".into(), "b".into()]));
        assert_eq!(q.conditions.len(), 2);
    }

    #[test]
    fn comparison_is_a_syntax_error() {
        let err = parse_query("SELECT * FROM t WHERE a = 5").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                offset: 24,
                expected: "IS".into(),
                found: "`=`".into()
            }
        );
    }

    #[test]
    fn empty_and_duplicate_conditions() {
        assert_eq!(parse_query("SELECT * FROM t WHERE"), Err(ParseError::EmptyConditions));
        assert_eq!(
            parse_query("SELECT * FROM t WHERE a is b and a is b"),
            Err(ParseError::DuplicateCondition {
                attribute: "a".into(),
                label: "b".into()
            })
        );
    }

    #[test]
    fn truncated_and_trailing_input() {
        assert_eq!(parse_query("SELECT * FROM t WHERE a is").unwrap_err().offset(), Some(26));
        assert!(matches!(
            parse_query("SELECT * FROM t WHERE a is b c"),
            Err(ParseError::Syntax { offset: 29, .. })
        ));
        assert!(matches!(parse_query("FROM t"), Err(ParseError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn offsets_are_byte_positions() {
        let err = parse_query("SELECT * FROM employé WHERE âge ! x").unwrap_err();
        assert_eq!(err.offset(), Some(34));
    }

    #[test]
    fn display_round_trips() {
        let q = parse_query(EMPLOYE).unwrap();
        assert_eq!(parse_query(&q.to_string()).unwrap(), q);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ident() -> impl Strategy<Value = String> {
            "[a-zA-Zéè_][a-zA-Z0-9éè_-]{0,8}"
                .prop_filter("keyword", |s| !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)))
        }

        proptest! {
            #[test]
            fn printed_queries_parse_back(
                cols in proptest::collection::vec(ident(), 0..3),
                table in ident(),
                conds in proptest::collection::vec((ident(), ident()), 1..6),
            ) {
                let mut seen = Vec::new();
                let conds: Vec<Condition> = conds
                    .into_iter()
                    .map(|(a, l)| Condition::new(a, l))
                    .filter(|c| if seen.contains(c) { false } else { seen.push(c.clone()); true })
                    .collect();
                let select = if cols.is_empty() { Selection::All } else { Selection::Columns(cols) };
                let q = FuzzyQuery::new(select, table, conds).unwrap();
                prop_assert_eq!(parse_query(&q.to_string()).unwrap(), q);
            }

            #[test]
            fn never_panics(text in "\\PC{0,60}") {
                let _ = parse_query(&text);
            }
        }
    }
}
