//! Conjunctive fuzzy queries evaluated through a concept lattice, with
//! failure explanations and relaxed subqueries when nothing matches.

mod eval;
mod parser;

pub use eval::{
    approximate_subqueries, binarize, build_fuzzy_context, evaluate, fuzzy_scale,
    minimal_failure_reasons, satisfaction_degree, FailureReport, FuzzyContext, QueryError,
    QueryResult, RankedAnswer, Subquery,
};
pub use parser::{parse_query, Condition, FuzzyQuery, ParseError, Selection};
