//! Backward coverability search over upward-closed sets of counter states.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use crate::model::{CounterState, Edge, EdgeKind, Ttd};

/// `a ⪰ b`: same shared state and pointwise at least as many threads.
pub fn covers(a: &CounterState, b: &CounterState) -> bool {
    a.shared() == b.shared() && b.counters().all(|(l, c)| a.get(l) >= c)
}

/// Minimal predecessor of `w` through one edge, if the edge can lead into
/// the upward closure of `w`.
pub(crate) fn pre_one(w: &CounterState, e: &Edge) -> Option<CounterState> {
    if w.shared() != e.target.shared {
        return None;
    }
    let mut p = w.clone();
    p.set_shared(e.source.shared);
    p.decrement(e.target.local);
    match e.kind {
        EdgeKind::Real => p.increment(e.source.local),
        EdgeKind::Spawn => {
            if p.get(e.source.local) == 0 {
                p.set(e.source.local, 1);
            }
        }
    }
    debug_assert!(p.total() <= w.total() + 1);
    Some(p)
}

/// Minimal cover-predecessors of `w` under `edges`.
pub fn cover_pre<'a>(w: &CounterState, edges: impl IntoIterator<Item = &'a Edge>) -> Vec<CounterState> {
    minimize(edges.into_iter().filter_map(|e| pre_one(w, e))).into_vec()
}

/// An antichain under `⪰` representing its upward closure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MinBasis {
    elements: Vec<CounterState>,
}

impl MinBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether `x` lies in the upward closure.
    pub fn contains_upward(&self, x: &CounterState) -> bool {
        self.elements.iter().any(|u| covers(x, u))
    }

    /// Adds `x` unless already covered; drops elements that cover `x`.
    pub fn insert(&mut self, x: CounterState) -> bool {
        if self.contains_upward(&x) {
            return false;
        }
        self.elements.retain(|u| !covers(u, &x));
        self.elements.push(x);
        true
    }

    pub fn elements(&self) -> &[CounterState] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn into_vec(self) -> Vec<CounterState> {
        self.elements
    }
}

/// Minimal elements of `states`, sorted.
pub fn minimize(states: impl IntoIterator<Item = CounterState>) -> MinBasis {
    let mut sorted: Vec<CounterState> = states.into_iter().collect();
    sorted.sort_by_key(|c| (c.total(), c.clone()));
    sorted.dedup();
    let mut basis = MinBasis::new();
    for s in sorted {
        basis.insert(s);
    }
    basis.elements.sort();
    basis
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverability {
    Coverable,
    Uncoverable,
}

/// A concrete forward run: `initial`, then each edge with the state it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub initial: CounterState,
    pub steps: Vec<(Edge, CounterState)>,
}

impl Witness {
    pub fn last(&self) -> &CounterState {
        self.steps.last().map_or(&self.initial, |(_, s)| s)
    }

    /// Re-fires every edge from `initial` and checks the recorded states.
    pub fn replays(&self) -> bool {
        let mut cur = self.initial.clone();
        for (e, s) in &self.steps {
            match cur.fire(e) {
                Some(next) if &next == s => cur = next,
                _ => return false,
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BwsStats {
    pub iterations: usize,
    pub generated: usize,
    pub retained: usize,
    /// Largest thread count of any element ever added to the basis.
    pub max_threads: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwsResult {
    pub verdict: Coverability,
    pub witness: Option<Witness>,
    pub stats: BwsStats,
}

struct Node {
    state: CounterState,
    /// Edge fired forward from this node, and the node it leads to.
    next: Option<(Edge, usize)>,
    alive: bool,
}

fn is_initial(d: &Ttd, p: &CounterState) -> bool {
    let inits = d.initial_states();
    p.total() > 0 && p.thread_states().all(|t| inits.contains(&t))
}

/// Backward search for a state covering `q`, firing only `slice` edges if given.
///
/// The initial global states are all `{s} × T_s^n` for `n ≥ 1`, where `T_s`
/// are the initial locals at shared state `s`.
pub fn bws(d: &Ttd, slice: Option<&BTreeSet<Edge>>, q: &CounterState) -> BwsResult {
    let edges: Vec<Edge> = match slice {
        Some(s) => s.iter().copied().collect(),
        None => d.edges().iter().copied().collect(),
    };
    // Edges indexed by target shared state.
    let mut by_target: HashMap<usize, Vec<Edge>> = HashMap::new();
    for e in edges {
        by_target.entry(e.target.shared).or_default().push(e);
    }

    let mut arena = vec![Node { state: q.clone(), next: None, alive: true }];
    let mut by_shared: HashMap<usize, Vec<usize>> = HashMap::from([(q.shared(), vec![0])]);
    let mut work = BinaryHeap::from([Reverse((q.total(), 0usize))]);
    let mut stats = BwsStats { retained: 1, max_threads: q.total(), ..BwsStats::default() };

    if is_initial(d, q) {
        return found(&arena, 0, stats);
    }

    while let Some(Reverse((_, idx))) = work.pop() {
        if !arena[idx].alive {
            continue;
        }
        stats.iterations += 1;
        let w = arena[idx].state.clone();
        let Some(incoming) = by_target.get(&w.shared()) else {
            continue;
        };
        for e in incoming {
            let Some(p) = pre_one(&w, e) else { continue };
            stats.generated += 1;
            let bucket = by_shared.entry(p.shared()).or_default();
            if bucket.iter().any(|&u| covers(&p, &arena[u].state)) {
                continue;
            }
            bucket.retain(|&u| {
                let keep = !covers(&arena[u].state, &p);
                if !keep {
                    arena[u].alive = false;
                }
                keep
            });
            let id = arena.len();
            bucket.push(id);
            stats.max_threads = stats.max_threads.max(p.total());
            let initial = is_initial(d, &p);
            work.push(Reverse((p.total(), id)));
            arena.push(Node { state: p, next: Some((*e, idx)), alive: true });
            if initial {
                stats.retained = by_shared.values().map(Vec::len).sum();
                return found(&arena, id, stats);
            }
        }
    }
    stats.retained = by_shared.values().map(Vec::len).sum();
    BwsResult { verdict: Coverability::Uncoverable, witness: None, stats }
}

fn found(arena: &[Node], start: usize, stats: BwsStats) -> BwsResult {
    let initial = arena[start].state.clone();
    let mut cur = initial.clone();
    let mut steps = Vec::new();
    let mut at = start;
    while let Some((e, next)) = arena[at].next {
        cur = cur.fire(&e).expect("backward link must be enabled forward");
        debug_assert!(covers(&cur, &arena[next].state));
        steps.push((e, cur.clone()));
        at = next;
    }
    BwsResult { verdict: Coverability::Coverable, witness: Some(Witness { initial, steps }), stats }
}
