//! Brute-force reference semantics and a random instance generator.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CounterState, Edge, EdgeKind, ModelError, ThreadState, Ttd};

/// Result of a bounded forward exploration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration {
    /// Thread states occupied in some explored global state.
    pub states: BTreeSet<ThreadState>,
    /// True when the reachable state space was closed within the step bound.
    pub exhaustive: bool,
    /// Number of distinct global states visited.
    pub visited: usize,
}

/// Initial global states with `n` threads: for each shared state `s` of an
/// initial thread state, every multiset of size `n` over the locals `l` with
/// `(s, l)` initial.
fn initial_globals(d: &Ttd, n: u32) -> Vec<CounterState> {
    let mut by_shared: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for t in d.initial_states() {
        by_shared.entry(t.shared).or_default().push(t.local);
    }
    let mut out = Vec::new();
    for (s, locals) in by_shared {
        let mut acc = Vec::new();
        multisets(&locals, n, &mut CounterState::new(s), &mut acc);
        out.extend(acc);
    }
    out
}

fn multisets(locals: &[usize], n: u32, cur: &mut CounterState, out: &mut Vec<CounterState>) {
    let Some((&first, rest)) = locals.split_first() else {
        if n == 0 {
            out.push(cur.clone());
        }
        return;
    };
    let upper = if rest.is_empty() { n } else { 0 };
    for k in (upper..=n).rev() {
        cur.set(first, k);
        multisets(rest, n - k, cur, out);
    }
    cur.set(first, 0);
}

/// Explores the `n`-thread system forward, expanding at most `max_steps`
/// global states.
pub fn forward_explore(d: &Ttd, n: u32, max_steps: usize) -> Exploration {
    let mut seen: HashSet<CounterState> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut states = BTreeSet::new();
    for g in initial_globals(d, n) {
        if seen.insert(g.clone()) {
            queue.push_back(g);
        }
    }
    let mut steps = 0;
    while let Some(g) = queue.pop_front() {
        if steps == max_steps {
            queue.push_front(g);
            break;
        }
        steps += 1;
        states.extend(g.thread_states());
        for e in d.edges() {
            if let Some(next) = g.fire(e) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    // States still queued are reachable too, even if not expanded.
    for g in &queue {
        states.extend(g.thread_states());
    }
    Exploration { states, exhaustive: queue.is_empty(), visited: seen.len() }
}

/// A seeded random diagram with initial state `(0,0)`, `edge_count` distinct
/// (source, target) pairs and a target drawn from the non-initial states.
pub fn random_ttd(
    shared_count: usize,
    local_count: usize,
    edge_count: usize,
    spawn_fraction: f64,
    seed: u64,
) -> Result<Ttd, ModelError> {
    if shared_count == 0 || local_count == 0 {
        return Err(ModelError::EmptyStateSpace);
    }
    let states = shared_count * local_count;
    if states < 2 {
        return Err(ModelError::Infeasible("need a non-initial thread state for the target".into()));
    }
    if edge_count > states * states {
        return Err(ModelError::Infeasible(format!("{edge_count} edges exceed {} possible pairs", states * states)));
    }
    if !(0.0..=1.0).contains(&spawn_fraction) {
        return Err(ModelError::Infeasible(format!("spawn fraction {spawn_fraction} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let at = |i: usize| ThreadState::new(i / local_count, i % local_count);

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    if edge_count * 2 > states * states {
        let mut all: Vec<(usize, usize)> = (0..states).flat_map(|a| (0..states).map(move |b| (a, b))).collect();
        all.shuffle(&mut rng);
        pairs.extend(all.into_iter().take(edge_count));
    } else {
        while pairs.len() < edge_count {
            pairs.insert((rng.random_range(0..states), rng.random_range(0..states)));
        }
    }
    let mut ordered: Vec<_> = pairs.into_iter().collect();
    ordered.shuffle(&mut rng);
    let edges: Vec<Edge> = ordered
        .into_iter()
        .map(|(a, b)| {
            let kind =
                if spawn_fraction > 0.0 && rng.random_bool(spawn_fraction) { EdgeKind::Spawn } else { EdgeKind::Real };
            Edge { source: at(a), target: at(b), kind }
        })
        .collect();
    let target = at(rng.random_range(1..states));
    Ttd::new(shared_count, local_count, edges, [ThreadState::new(0, 0)], target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_ttd;

    fn ts(s: usize, l: usize) -> ThreadState {
        ThreadState::new(s, l)
    }

    #[test]
    fn single_edge_one_thread() {
        let d = parse_ttd("shared 2\nlocal 1\ninitial 0 0\ntarget 1 0\n0 0 -> 1 0\n").unwrap().ttd;
        let x = forward_explore(&d, 1, 100);
        assert!(x.exhaustive);
        assert_eq!(x.states, BTreeSet::from([ts(0, 0), ts(1, 0)]));
    }

    #[test]
    fn truncation_is_reported() {
        // Self-spawning loop never closes.
        let d = Ttd::new(1, 1, [Edge::spawn(ts(0, 0), ts(0, 0))], [ts(0, 0)], ts(0, 0)).unwrap();
        let x = forward_explore(&d, 1, 10);
        assert!(!x.exhaustive);
    }

    #[test]
    fn multi_initial_globals() {
        let d = Ttd::new(1, 2, [], [ts(0, 0), ts(0, 1)], ts(0, 1)).unwrap();
        let g = initial_globals(&d, 2);
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|c| c.total() == 2));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_ttd(3, 3, 5, 0.0, 42).unwrap();
        let b = random_ttd(3, 3, 5, 0.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges().len(), 5);
        assert!(a.edges().iter().all(|e| e.kind == EdgeKind::Real));
        assert_ne!(a.target(), ts(0, 0));
    }

    #[test]
    fn generator_rejects_infeasible() {
        assert!(random_ttd(1, 1, 0, 0.0, 1).is_err());
        assert!(random_ttd(2, 1, 5, 0.0, 1).is_err());
        assert!(random_ttd(2, 1, 4, 0.0, 1).is_ok());
    }
}
