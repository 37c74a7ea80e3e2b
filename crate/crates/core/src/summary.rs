//! Max-plus summaries of backward traversals, per local state.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{ThreadState, Ttd};
use crate::quotient::{EttdEdge, EttdEdgeKind, PathPlan, PlanStep};

/// Thread creation has no exact summary; such paths go to backward search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("walk contains spawn edge {0}")]
pub struct NotSummarizable(pub EttdEdge);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Start {
    Const(i64),
    /// The counter of a local state.
    Counter(usize),
}

/// One step of a chain. `x ⊕_b c` is `max(x + c, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    Add(i64),
    MaxAdd {
        floor: i64,
        delta: i64,
    },
    /// `x ⊕_b (κ + shift)·coeff`
    MaxAddScaled {
        floor: i64,
        coeff: i64,
        kappa: usize,
        shift: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for loop count k{0}")]
    MissingKappa(usize),
    #[error("no value for counter n{0}")]
    MissingCounter(usize),
    #[error("arithmetic overflow")]
    Overflow,
}

/// A left-associated chain `start atom atom ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SummaryTerm {
    pub start: Start,
    pub atoms: Vec<Atom>,
}

impl SummaryTerm {
    pub fn counter(l: usize) -> Self {
        Self { start: Start::Counter(l), atoms: Vec::new() }
    }

    pub fn constant(c: i64) -> Self {
        Self { start: Start::Const(c), atoms: Vec::new() }
    }

    /// Evaluates strictly left to right.
    pub fn eval(
        &self,
        counter: impl Fn(usize) -> Option<i64>,
        kappa: impl Fn(usize) -> Option<i64>,
    ) -> Result<i64, EvalError> {
        let mut x = match self.start {
            Start::Const(c) => c,
            Start::Counter(l) => counter(l).ok_or(EvalError::MissingCounter(l))?,
        };
        for atom in &self.atoms {
            x = match *atom {
                Atom::Add(c) => x.checked_add(c).ok_or(EvalError::Overflow)?,
                Atom::MaxAdd { floor, delta } => x.checked_add(delta).ok_or(EvalError::Overflow)?.max(floor),
                Atom::MaxAddScaled { floor, coeff, kappa: k, shift } => {
                    let kv = kappa(k).ok_or(EvalError::MissingKappa(k))?;
                    let step = kv.checked_add(shift).and_then(|v| v.checked_mul(coeff)).ok_or(EvalError::Overflow)?;
                    x.checked_add(step).ok_or(EvalError::Overflow)?.max(floor)
                }
            };
        }
        Ok(x)
    }

    /// Evaluates with the start counter bound to `n` and no loop counts.
    pub fn apply(&self, n: i64) -> i64 {
        self.eval(|_| Some(n), |_| None).expect("chain without loop counts")
    }

    pub fn kappas(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::MaxAddScaled { kappa, .. } => Some(*kappa),
            _ => None,
        })
    }
}

fn signed(f: &mut fmt::Formatter<'_>, c: i64) -> fmt::Result {
    if c < 0 {
        write!(f, "-{}", c.unsigned_abs())
    } else {
        write!(f, "+{c}")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Atom::Add(c) => signed(f, c),
            Atom::MaxAdd { floor, delta } if delta < 0 => write!(f, "⊖[{floor}] {}", delta.unsigned_abs()),
            Atom::MaxAdd { floor, delta } => write!(f, "⊕[{floor}] {delta}"),
            Atom::MaxAddScaled { floor, coeff, kappa, shift } => {
                write!(f, "⊕[{floor}] (k{kappa}")?;
                if shift != 0 {
                    signed(f, shift)?;
                }
                write!(f, ")·({coeff})")
            }
        }
    }
}

impl fmt::Display for SummaryTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.start {
            Start::Const(c) => write!(f, "{c}")?,
            Start::Counter(l) => write!(f, "n{l}")?,
        }
        for a in &self.atoms {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

fn reject_spawn(edges: &[EttdEdge]) -> Result<(), NotSummarizable> {
    match edges.iter().find(|e| e.kind == EttdEdgeKind::Spawn) {
        Some(e) => Err(NotSummarizable(*e)),
        None => Ok(()),
    }
}

/// Chain for counter `l` obtained by walking `edges` backward.
pub fn segment_summary(edges: &[EttdEdge], l: usize) -> Result<SummaryTerm, NotSummarizable> {
    reject_spawn(edges)?;
    let mut term = SummaryTerm::counter(l);
    for e in edges.iter().rev() {
        match e.kind {
            EttdEdgeKind::Real => {
                if e.source.local == l {
                    term.atoms.push(Atom::Add(1));
                }
                if e.target.local == l {
                    term.atoms.push(Atom::Add(-1));
                }
            }
            EttdEdgeKind::Expansion => {
                if e.source.local == l {
                    term.atoms.push(Atom::MaxAdd { floor: 0, delta: -1 });
                    term.atoms.push(Atom::Add(1));
                }
            }
            EttdEdgeKind::Spawn => unreachable!("rejected above"),
        }
    }
    Ok(term)
}

/// `(b, δ)` with `segment_summary(edges, l)(n) = n ⊕_b δ` for every `n` at
/// least 1 when the walk ends in `l`, at least 0 otherwise.
pub fn compact_form(edges: &[EttdEdge], l: usize) -> Result<(i64, i64), NotSummarizable> {
    let term = segment_summary(edges, l)?;
    let delta = edges
        .iter()
        .filter(|e| e.kind == EttdEdgeKind::Real)
        .map(|e| i64::from(e.source.local == l) - i64::from(e.target.local == l))
        .sum();
    let ends_here = edges.last().is_some_and(|e| e.target.local == l);
    Ok((term.apply(i64::from(ends_here)), delta))
}

/// Closed form for `kappa ≥ 1` backward traversals of `cycle`.
pub fn loop_summary(cycle: &[EttdEdge], l: usize, kappa: usize) -> Result<SummaryTerm, NotSummarizable> {
    let (b, delta) = compact_form(cycle, l)?;
    Ok(SummaryTerm {
        start: Start::Counter(l),
        atoms: vec![Atom::MaxAdd { floor: b, delta }, Atom::MaxAddScaled { floor: b, coeff: delta, kappa, shift: -1 }],
    })
}

/// The per-local-state chains for one choice of which loops are iterated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathConstraint {
    pub plan: usize,
    /// Loops whose cycle is applied, each with `κ ≥ 1`; others have `κ = 0`.
    pub kappas: Vec<usize>,
    /// Total number of loops on the plan.
    pub loop_count: usize,
    /// One chain per local state, starting from the target assignment.
    pub rows: Vec<SummaryTerm>,
    pub initial: ThreadState,
    pub target: ThreadState,
}

impl PathConstraint {
    /// Whether counter `l` satisfies its final condition at value `v`.
    pub fn final_ok(&self, l: usize, v: i64) -> bool {
        if l == self.initial.local {
            v >= 1
        } else {
            v == 0
        }
    }

    /// Checks every row at the given loop counts, indexed by loop.
    pub fn holds_at(&self, kappas: &[i64]) -> bool {
        if (0..self.loop_count).any(|i| (kappas.get(i).copied().unwrap_or(0) >= 1) != self.kappas.contains(&i)) {
            return false;
        }
        self.rows
            .iter()
            .enumerate()
            .all(|(l, row)| row.eval(|_| None, |k| kappas.get(k).copied()).is_ok_and(|v| self.final_ok(l, v)))
    }

    /// Table rendering, one line per local state.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (l, row) in self.rows.iter().enumerate() {
            let cond = if l == self.initial.local { ">= 1" } else { "= 0" };
            out.push_str(&format!("n{l}: {row} {cond}\n"));
        }
        out
    }
}

fn push_compact(row: &mut SummaryTerm, edges: &[EttdEdge], l: usize) -> Result<(), NotSummarizable> {
    if edges.is_empty() {
        return Ok(());
    }
    let (b, delta) = compact_form(edges, l)?;
    row.atoms.push(Atom::MaxAdd { floor: b, delta });
    Ok(())
}

/// One constraint per subset of loops taken zero times, ordered by the bit
/// mask of iterated loops (loop `i` is bit `i`).
pub fn assemble_constraints(plan: &PathPlan, d: &Ttd) -> Result<Vec<PathConstraint>, NotSummarizable> {
    assert!(!plan.contains_spaghetti, "plan needs backward search");
    let init = d.initial_state().expect("unique initial state");
    let target = d.target();
    // Forward pieces: seg0, (partial_i, cycle_i, seg_i) for each loop.
    let mut segs: Vec<&[EttdEdge]> = Vec::new();
    let mut loops = Vec::new();
    for step in &plan.steps {
        match step {
            PlanStep::Segment(e) => segs.push(e),
            PlanStep::Loop(l) => loops.push(l),
            PlanStep::Tangle(_) => unreachable!("no tangles in simple plans"),
        }
    }
    let m = loops.len();
    assert!(m < 20, "too many loops on one path");
    let mut out = Vec::with_capacity(1 << m);
    for mask in 0u32..(1 << m) {
        let mut rows = Vec::with_capacity(d.local_count());
        for l in 0..d.local_count() {
            let mut row = SummaryTerm::constant(i64::from(l == target.local));
            // Backward: seg_m, then for i = m..1: cycle_i (if taken), seg_{i-1}·partial_i.
            push_compact(&mut row, segs[m], l)?;
            for i in (0..m).rev() {
                if mask & (1 << i) != 0 {
                    let lp = loop_summary(&loops[i].cycle, l, loops[i].kappa)?;
                    row.atoms.extend(lp.atoms);
                }
                let mut walk = segs[i].to_vec();
                walk.extend_from_slice(&loops[i].partial);
                push_compact(&mut row, &walk, l)?;
            }
            rows.push(row);
        }
        out.push(PathConstraint {
            plan: plan.id,
            kappas: (0..m).filter(|i| mask & (1 << i) != 0).collect(),
            loop_count: m,
            rows,
            initial: init,
            target,
        });
    }
    Ok(out)
}

/// Assignment helper for tests and replay: loop `i` gets `values[i]`.
pub fn kappa_map(values: &[i64]) -> BTreeMap<usize, i64> {
    values.iter().copied().enumerate().collect()
}
