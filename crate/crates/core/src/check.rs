//! The pathwise checker and its verdicts.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::bws::{bws, covers, Coverability, Witness};
use crate::model::{normalize_initial_states, CounterState, ModelError, ThreadState, Ttd};
use crate::presburger::{rewrite_maxplus, solve, Formula, LinExpr, Rel, Var};
use crate::quotient::{enumerate_paths, QuotientGraph, DEFAULT_PATH_CAP};
use crate::summary::{assemble_constraints, PathConstraint};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Engine {
    /// Quotient paths with summaries, backward search for the rest.
    #[default]
    Pathwise,
    /// Backward search over the whole diagram.
    Bws,
    /// Both, failing on disagreement.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    pub engine: Engine,
    /// `None` means no bound.
    pub max_paths: Option<usize>,
    /// Keep every assembled constraint in the report.
    pub keep_constraints: bool,
    /// Keep every formula handed to the solver in the report.
    pub keep_formulas: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            engine: Engine::Pathwise,
            max_paths: Some(DEFAULT_PATH_CAP),
            keep_constraints: false,
            keep_formulas: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Reachable,
    Unreachable,
    /// The path cap stopped enumeration before a decision.
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Reachable => "REACHABLE",
            Status::Unreachable => "UNREACHABLE",
            Status::Unknown => "UNKNOWN (path cap)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// Loop counts (indexed by loop, 0 for loops not iterated) satisfying
    /// the constraint of a plan.
    Kappa { plan: usize, kappas: Vec<i64>, constraint: PathConstraint },
    /// A concrete run, on the normalized diagram.
    Trace(Witness),
}

impl Evidence {
    /// Re-checks the evidence independently of how it was found.
    pub fn verify(&self, target: ThreadState) -> bool {
        match self {
            Evidence::Kappa { kappas, constraint, .. } => constraint.holds_at(kappas),
            Evidence::Trace(w) => w.replays() && covers(w.last(), &CounterState::single(target)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub paths: usize,
    pub loopfree: usize,
    pub simple: usize,
    pub spaghetti: usize,
    pub solver_calls: usize,
    pub bws_calls: usize,
    pub time_ms: u128,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paths={} loopfree={} simple={} spaghetti={} solver_calls={} bws_calls={} time_ms={}",
            self.paths, self.loopfree, self.simple, self.spaghetti, self.solver_calls, self.bws_calls, self.time_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub evidence: Option<Evidence>,
    pub stats: Stats,
    pub truncated: bool,
}

impl Verdict {
    /// The stdout block: verdict, optional witness, statistics.
    pub fn render(&self) -> String {
        let mut out = format!("VERDICT: {}\n", self.status);
        match &self.evidence {
            Some(Evidence::Kappa { kappas, .. }) => {
                out.push_str("WITNESS: kappa");
                for (i, k) in kappas.iter().enumerate() {
                    out.push_str(&format!(" k{i}={k}"));
                }
                out.push('\n');
            }
            Some(Evidence::Trace(w)) => {
                let edges: Vec<String> = w.steps.iter().map(|(e, _)| e.to_string()).collect();
                out.push_str(&format!("WITNESS: trace threads={} {}\n", w.initial.total(), edges.join(" ")));
            }
            None => {}
        }
        out.push_str(&format!("STATS: {}\n", self.stats));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub verdict: Verdict,
    /// The whole-diagram search result when both engines ran.
    pub bws_verdict: Option<Verdict>,
    pub constraints: Vec<PathConstraint>,
    pub formulas: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("engines disagree: pathwise says {pathwise}, backward search says {bws}")]
    Disagreement { pathwise: Status, bws: Status, report: Box<Report> },
}

/// Decides whether some thread can reach the target for some thread count.
pub fn check(d: &Ttd, options: &CheckOptions) -> Result<Report, CheckError> {
    let d = normalize_initial_states(d)?;
    match options.engine {
        Engine::Pathwise => pathwise(&d, options),
        Engine::Bws => {
            Ok(Report { verdict: whole_bws(&d), bws_verdict: None, constraints: Vec::new(), formulas: Vec::new() })
        }
        Engine::Both => {
            let mut report = pathwise(&d, options)?;
            let other = whole_bws(&d);
            let disagree = report.verdict.status != Status::Unknown && report.verdict.status != other.status;
            let pathwise = report.verdict.status;
            report.bws_verdict = Some(other.clone());
            if disagree {
                return Err(CheckError::Disagreement { pathwise, bws: other.status, report: Box::new(report) });
            }
            Ok(report)
        }
    }
}

fn whole_bws(d: &Ttd) -> Verdict {
    let start = Instant::now();
    let r = bws(d, None, &CounterState::single(d.target()));
    let stats = Stats { bws_calls: 1, time_ms: start.elapsed().as_millis(), ..Stats::default() };
    match r.verdict {
        Coverability::Coverable => {
            Verdict { status: Status::Reachable, evidence: r.witness.map(Evidence::Trace), stats, truncated: false }
        }
        Coverability::Uncoverable => Verdict { status: Status::Unreachable, evidence: None, stats, truncated: false },
    }
}

fn pathwise(d: &Ttd, options: &CheckOptions) -> Result<Report, CheckError> {
    let start = Instant::now();
    let mut stats = Stats::default();
    let mut report = Report {
        verdict: Verdict { status: Status::Unreachable, evidence: None, stats, truncated: false },
        bws_verdict: None,
        constraints: Vec::new(),
        formulas: Vec::new(),
    };
    let init = d.initial_state().ok_or(ModelError::NoInitialState)?;
    if init == d.target() {
        let w = Witness { initial: CounterState::single(init), steps: Vec::new() };
        report.verdict.status = Status::Reachable;
        report.verdict.evidence = Some(Evidence::Trace(w));
        report.verdict.stats.time_ms = start.elapsed().as_millis();
        return Ok(report);
    }
    let q = QuotientGraph::build(d)?;
    if !q.sequentially_reachable() {
        report.verdict.stats.time_ms = start.elapsed().as_millis();
        return Ok(report);
    }
    let goal = q.goal();
    let mut stream = enumerate_paths(&q, options.max_paths);
    let mut evidence = None;
    for plan in stream.by_ref() {
        stats.paths += 1;
        match plan.class {
            0 => stats.loopfree += 1,
            1 | 2 => stats.simple += 1,
            _ => stats.spaghetti += 1,
        }
        if plan.contains_spaghetti || plan.contains_spawn {
            stats.bws_calls += 1;
            let r = bws(q.diagram(), Some(&plan.slice), &goal);
            if let Some(w) = r.witness {
                evidence = Some(Evidence::Trace(q.strip_padding(&w)));
                break;
            }
            continue;
        }
        let variants = assemble_constraints(&plan, q.diagram()).expect("plan without spawn edges");
        for pc in variants {
            let f = rewrite_maxplus(&pc);
            stats.solver_calls += 1;
            let r = solve(&f);
            if options.keep_formulas {
                report.formulas.push(f.clone());
            }
            if options.keep_constraints {
                report.constraints.push(pc.clone());
            }
            if let Some(model) = r.model {
                let kappas = minimize_kappas(&pc, &f, &model, &mut stats);
                debug_assert!(pc.holds_at(&kappas));
                evidence = Some(Evidence::Kappa { plan: plan.id, kappas, constraint: pc });
                break;
            }
        }
        if evidence.is_some() {
            break;
        }
    }
    let truncated = stream.truncated();
    stats.time_ms = start.elapsed().as_millis();
    report.verdict = Verdict {
        status: match (&evidence, truncated) {
            (Some(_), _) => Status::Reachable,
            (None, true) => Status::Unknown,
            (None, false) => Status::Unreachable,
        },
        evidence,
        stats,
        truncated,
    };
    Ok(report)
}

/// Lexicographically smallest loop counts, found by bisection per loop.
fn minimize_kappas(
    pc: &PathConstraint,
    f: &Formula,
    model: &std::collections::BTreeMap<Var, i64>,
    stats: &mut Stats,
) -> Vec<i64> {
    let mut fixed: Vec<Formula> = vec![f.clone()];
    let mut out = vec![0; pc.loop_count];
    for &k in &pc.kappas {
        let var = LinExpr::var(Var::Kappa(k));
        let (mut lo, mut hi) = (1, model[&Var::Kappa(k)]);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let mut probe = fixed.clone();
            probe.push(Formula::atom(var.clone().offset(-mid), Rel::Le));
            stats.solver_calls += 1;
            if solve(&Formula::And(probe)).is_sat() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        fixed.push(Formula::atom(var.offset(-lo), Rel::Eq));
        out[k] = lo;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_ttd;

    #[test]
    fn degenerate_target_is_initial() {
        let d = parse_ttd("shared 1\nlocal 1\ninitial 0 0\ntarget 0 0\n").unwrap().ttd;
        let r = check(&d, &CheckOptions::default()).unwrap();
        assert_eq!(r.verdict.status, Status::Reachable);
        assert!(r.verdict.evidence.unwrap().verify(d.target()));
    }

    #[test]
    fn sequential_fast_path() {
        let d = parse_ttd("shared 2\nlocal 1\ninitial 0 0\ntarget 1 0\n").unwrap().ttd;
        let r = check(&d, &CheckOptions::default()).unwrap();
        assert_eq!(r.verdict.status, Status::Unreachable);
        assert_eq!(r.verdict.stats.paths, 0);
    }

    #[test]
    fn spawn_path_goes_to_search() {
        let d = parse_ttd("shared 2\nlocal 2\ninitial 0 0\ntarget 1 1\n0 0 +> 1 1\n").unwrap().ttd;
        let opts = CheckOptions { engine: Engine::Both, ..CheckOptions::default() };
        let r = check(&d, &opts).unwrap();
        assert_eq!(r.verdict.status, Status::Reachable);
        assert_eq!(r.verdict.stats.bws_calls, 1);
        assert!(r.verdict.evidence.unwrap().verify(d.target()));
    }

    #[test]
    fn render_block() {
        let v = Verdict { status: Status::Unknown, evidence: None, stats: Stats::default(), truncated: true };
        assert_eq!(
            v.render(),
            "VERDICT: UNKNOWN (path cap)\nSTATS: paths=0 loopfree=0 simple=0 spaghetti=0 solver_calls=0 bws_calls=0 time_ms=0\n"
        );
    }
}
