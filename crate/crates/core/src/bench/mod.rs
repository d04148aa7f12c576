//! Benchmark construction and scoring: standard and stricter relevance
//! groups, qrels, run files and P@k.

mod eval;
mod groups;
mod qrels;
mod stricter;

pub use eval::{evaluate, precision_at_k, CategoryScore, EvalReport, QueryScore, DEFAULT_CATEGORY, DEFAULT_K};
pub use groups::{map_cases_to_standard_groups, read_group_specs, GroupSpec, StandardMapping};
pub use qrels::{
    build_qrels, read_queries, read_run, write_queries, write_run, NamedGroup, QueryPolicy, QueryRecord,
    QuerySpec, Qrels, RunRecord,
};
pub use stricter::{stricter_grouping, StricterKey, StricterMode};
