//! Thread transition diagrams and the counter representation of global states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A `(shared, local)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreadState {
    pub shared: usize,
    pub local: usize,
}

impl ThreadState {
    pub const fn new(shared: usize, local: usize) -> Self {
        Self { shared, local }
    }
}

impl fmt::Display for ThreadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.shared, self.local)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    /// One thread moves from `source` to `target`.
    Real,
    /// The shared state moves `source.shared -> target.shared`, the spawning
    /// thread stays in `source.local` and a new thread appears in `target.local`.
    Spawn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: ThreadState,
    pub target: ThreadState,
    pub kind: EdgeKind,
}

impl Edge {
    pub const fn real(source: ThreadState, target: ThreadState) -> Self {
        Self { source, target, kind: EdgeKind::Real }
    }

    pub const fn spawn(source: ThreadState, target: ThreadState) -> Self {
        Self { source, target, kind: EdgeKind::Spawn }
    }

    /// Same shared state on both ends.
    pub fn is_horizontal(&self) -> bool {
        self.source.shared == self.target.shared
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.kind {
            EdgeKind::Real => "->",
            EdgeKind::Spawn => "+>",
        };
        write!(f, "{}{}{}", self.source, arrow, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("diagram needs at least one shared and one local state")]
    EmptyStateSpace,
    #[error("thread state {state} out of range for {shared} shared / {local} local states")]
    OutOfRange { state: ThreadState, shared: usize, local: usize },
    #[error("no initial thread state")]
    NoInitialState,
    #[error("initial states violate the box property: {a} and {b} are initial but {missing} is not")]
    BoxProperty { a: ThreadState, b: ThreadState, missing: ThreadState },
    #[error("cannot generate diagram: {0}")]
    Infeasible(String),
}

/// A thread transition diagram together with its initial states and the
/// target thread state of the reachability question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ttd {
    shared_count: usize,
    local_count: usize,
    edges: BTreeSet<Edge>,
    initial: BTreeSet<ThreadState>,
    target: ThreadState,
}

impl Ttd {
    pub fn new(
        shared_count: usize,
        local_count: usize,
        edges: impl IntoIterator<Item = Edge>,
        initial: impl IntoIterator<Item = ThreadState>,
        target: ThreadState,
    ) -> Result<Self, ModelError> {
        if shared_count == 0 || local_count == 0 {
            return Err(ModelError::EmptyStateSpace);
        }
        let ttd = Self {
            shared_count,
            local_count,
            edges: edges.into_iter().collect(),
            initial: initial.into_iter().collect(),
            target,
        };
        if ttd.initial.is_empty() {
            return Err(ModelError::NoInitialState);
        }
        let states = ttd
            .edges
            .iter()
            .flat_map(|e| [e.source, e.target])
            .chain(ttd.initial.iter().copied())
            .chain(std::iter::once(target));
        for state in states {
            ttd.check_range(state)?;
        }
        Ok(ttd)
    }

    fn check_range(&self, state: ThreadState) -> Result<(), ModelError> {
        if state.shared < self.shared_count && state.local < self.local_count {
            Ok(())
        } else {
            Err(ModelError::OutOfRange { state, shared: self.shared_count, local: self.local_count })
        }
    }

    pub fn shared_count(&self) -> usize {
        self.shared_count
    }

    pub fn local_count(&self) -> usize {
        self.local_count
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn initial_states(&self) -> &BTreeSet<ThreadState> {
        &self.initial
    }

    pub fn target(&self) -> ThreadState {
        self.target
    }

    /// The unique initial thread state, if there is exactly one.
    pub fn initial_state(&self) -> Option<ThreadState> {
        if self.initial.len() == 1 {
            self.initial.first().copied()
        } else {
            None
        }
    }

    pub fn has_spawn(&self) -> bool {
        self.edges.iter().any(|e| e.kind == EdgeKind::Spawn)
    }

    /// Same diagram, different target.
    pub fn with_target(&self, target: ThreadState) -> Result<Self, ModelError> {
        self.check_range(target)?;
        Ok(Self { target, ..self.clone() })
    }

    /// Adds fresh shared states and the given edges. Used for padding.
    pub(crate) fn extended(
        &self,
        extra_shared: usize,
        extra_edges: impl IntoIterator<Item = Edge>,
        initial: ThreadState,
        target: ThreadState,
    ) -> Self {
        let mut edges = self.edges.clone();
        edges.extend(extra_edges);
        Self {
            shared_count: self.shared_count + extra_shared,
            local_count: self.local_count,
            edges,
            initial: BTreeSet::from([initial]),
            target,
        }
    }

    /// First violation of the box property, as `(a, b, missing)`.
    pub fn box_violation(&self) -> Option<(ThreadState, ThreadState, ThreadState)> {
        for &a in &self.initial {
            for &b in &self.initial {
                for missing in [ThreadState::new(a.shared, b.local), ThreadState::new(b.shared, a.local)] {
                    if !self.initial.contains(&missing) {
                        return Some((a, b, missing));
                    }
                }
            }
        }
        None
    }
}

/// Reduces a diagram with several initial thread states to one with a unique
/// initial state, using a fresh shared state `|S|` and a fresh local state `|L|`.
///
/// The initial set must be closed under swapping components (the box property);
/// then every thread state that does not use a fresh component is reachable in
/// the result iff it is reachable in the input.
pub fn normalize_initial_states(d: &Ttd) -> Result<Ttd, ModelError> {
    if d.initial.len() == 1 {
        return Ok(d.clone());
    }
    if let Some((a, b, missing)) = d.box_violation() {
        return Err(ModelError::BoxProperty { a, b, missing });
    }
    let fresh = ThreadState::new(d.shared_count, d.local_count);
    let mut edges = d.edges.clone();
    for &t in &d.initial {
        edges.insert(Edge::real(fresh, t));
        edges.insert(Edge::real(ThreadState::new(t.shared, fresh.local), t));
    }
    Ok(Ttd {
        shared_count: d.shared_count + 1,
        local_count: d.local_count + 1,
        edges,
        initial: BTreeSet::from([fresh]),
        target: d.target,
    })
}

/// A global state in counter notation: a shared state plus the number of
/// threads in each local state. Zero counters are not stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CounterState {
    shared: usize,
    counts: BTreeMap<usize, u32>,
}

impl CounterState {
    pub fn new(shared: usize) -> Self {
        Self { shared, counts: BTreeMap::new() }
    }

    /// `shared` with one thread in `local`.
    pub fn single(state: ThreadState) -> Self {
        Self::new(state.shared).with(state.local, 1)
    }

    pub fn with(mut self, local: usize, count: u32) -> Self {
        self.set(local, count);
        self
    }

    pub fn shared(&self) -> usize {
        self.shared
    }

    pub fn set_shared(&mut self, shared: usize) {
        self.shared = shared;
    }

    pub fn get(&self, local: usize) -> u32 {
        self.counts.get(&local).copied().unwrap_or(0)
    }

    pub fn set(&mut self, local: usize, count: u32) {
        if count == 0 {
            self.counts.remove(&local);
        } else {
            self.counts.insert(local, count);
        }
    }

    pub fn increment(&mut self, local: usize) {
        *self.counts.entry(local).or_insert(0) += 1;
    }

    /// Decrements if positive; returns whether a thread was removed.
    pub fn decrement(&mut self, local: usize) -> bool {
        match self.counts.get_mut(&local) {
            Some(c) if *c > 1 => {
                *c -= 1;
                true
            }
            Some(_) => {
                self.counts.remove(&local);
                true
            }
            None => false,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    /// Nonzero counters in ascending local order.
    pub fn counters(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts.iter().map(|(&l, &c)| (l, c))
    }

    /// Thread states occupied in this global state.
    pub fn thread_states(&self) -> impl Iterator<Item = ThreadState> + '_ {
        self.counts.keys().map(|&l| ThreadState::new(self.shared, l))
    }

    /// Fires `edge` forward, if enabled.
    pub fn fire(&self, edge: &Edge) -> Option<CounterState> {
        if edge.source.shared != self.shared || self.get(edge.source.local) == 0 {
            return None;
        }
        let mut next = self.clone();
        next.shared = edge.target.shared;
        if edge.kind == EdgeKind::Real {
            next.decrement(edge.source.local);
        }
        next.increment(edge.target.local);
        Some(next)
    }
}

impl fmt::Display for CounterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} |", self.shared)?;
        let mut first = true;
        for (l, c) in self.counters() {
            write!(f, "{} n{}={}", if first { "" } else { "," }, l, c)?;
            first = false;
        }
        write!(f, ">")
    }
}
