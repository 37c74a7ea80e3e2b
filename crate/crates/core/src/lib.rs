//! Unbounded-thread reachability for thread transition diagrams.
//!
//! The pathwise engine collapses the expanded diagram into its SCC quotient,
//! summarizes loop-free segments and simple loops as linear integer
//! constraints, and falls back to slice-restricted backward search for loop
//! nests and thread creation.

pub mod bws;
pub mod check;
pub mod format;
pub mod model;
pub mod oracle;
pub mod presburger;
pub mod quotient;
pub mod summary;

pub use bws::{bws, cover_pre, covers, minimize, BwsResult, BwsStats, Coverability, MinBasis, Witness};
pub use check::{check, CheckError, CheckOptions, Engine, Evidence, Report, Stats, Status, Verdict};
pub use format::{parse_ttd, serialize_ttd, ParseError, Parsed};
pub use model::{normalize_initial_states, CounterState, Edge, EdgeKind, ModelError, ThreadState, Ttd};
pub use oracle::{forward_explore, random_ttd, Exploration};
pub use presburger::{
    eval_chain, rewrite_maxplus, solve, to_smtlib, Formula, LinearAtom, Rel, SatResult, SatStatus, Var,
};
pub use quotient::{build_ettd, enumerate_paths, Ettd, EttdEdge, EttdEdgeKind, PathPlan, QuotientGraph, SccClass};
pub use summary::{
    assemble_constraints, compact_form, loop_summary, segment_summary, Atom, NotSummarizable, PathConstraint, Start,
    SummaryTerm,
};
