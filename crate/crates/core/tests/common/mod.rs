//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttdreach::{Edge, EttdEdge, EttdEdgeKind, ThreadState, Ttd};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ts(s: usize, l: usize) -> ThreadState {
    ThreadState::new(s, l)
}

/// Backward evaluation of a walk's effect on counter `l`, written out
/// directly from the three edge rules rather than through chains.
pub fn walk_value(edges: &[EttdEdge], l: usize, n: i64) -> i64 {
    let mut v = n;
    for e in edges.iter().rev() {
        match e.kind {
            EttdEdgeKind::Real => {
                if e.source.local == l {
                    v += 1;
                }
                if e.target.local == l {
                    v -= 1;
                }
            }
            EttdEdgeKind::Expansion => {
                if e.source.local == l {
                    v = (v - 1).max(0) + 1;
                }
            }
            EttdEdgeKind::Spawn => panic!("spawn edge in summarized walk"),
        }
    }
    v
}

/// Smallest counter value for which compact forms are claimed exact.
pub fn admissible_floor(edges: &[EttdEdge], l: usize) -> i64 {
    i64::from(edges.last().is_some_and(|e| e.target.local == l))
}

fn edge_between(a: ThreadState, b: ThreadState, rng: &mut ChaCha8Rng) -> EttdEdge {
    let kind = if a.shared == b.shared && a.local != b.local && rng.random_bool(0.5) {
        EttdEdgeKind::Expansion
    } else {
        EttdEdgeKind::Real
    };
    EttdEdge { source: a, target: b, kind }
}

/// Distinct thread states, biased so consecutive states often share a
/// shared or local component.
fn distinct_states(len: usize, shared: usize, local: usize, rng: &mut ChaCha8Rng) -> Vec<ThreadState> {
    let mut all: Vec<ThreadState> = (0..shared).flat_map(|s| (0..local).map(move |l| ts(s, l))).collect();
    all.shuffle(rng);
    let mut out = vec![all.pop().expect("state")];
    while out.len() < len && !all.is_empty() {
        let prev = *out.last().expect("nonempty");
        let pick = match rng.random_range(0..3) {
            0 => all.iter().position(|t| t.shared == prev.shared),
            1 => all.iter().position(|t| t.local == prev.local),
            _ => None,
        }
        .unwrap_or(0);
        out.push(all.swap_remove(pick));
    }
    out
}

/// A simple cycle over distinct thread states, returned starting and ending
/// at its first state.
pub fn random_cycle(shared: usize, local: usize, rng: &mut ChaCha8Rng) -> Vec<EttdEdge> {
    let len = rng.random_range(1..=(shared * local).min(8));
    let states = distinct_states(len, shared, local, rng);
    (0..states.len()).map(|i| edge_between(states[i], states[(i + 1) % states.len()], rng)).collect()
}

/// A loop-free walk over distinct thread states.
pub fn random_walk(shared: usize, local: usize, rng: &mut ChaCha8Rng) -> Vec<EttdEdge> {
    let len = rng.random_range(1..=(shared * local).min(9));
    let states = distinct_states(len, shared, local, rng);
    states.windows(2).map(|w| edge_between(w[0], w[1], rng)).collect()
}

/// Which case shapes a walk exercises for counter `l`: real edge leaving l,
/// real edge entering l, vertical real edge at l, expansion edge from l,
/// edge unrelated to l.
pub fn shapes(edges: &[EttdEdge], l: usize) -> [bool; 5] {
    let mut out = [false; 5];
    for e in edges {
        let (src, tgt) = (e.source.local == l, e.target.local == l);
        match e.kind {
            EttdEdgeKind::Real if src && tgt => out[2] = true,
            EttdEdgeKind::Real if src => out[0] = true,
            EttdEdgeKind::Real if tgt => out[1] = true,
            EttdEdgeKind::Expansion if src => out[3] = true,
            _ => out[4] = true,
        }
    }
    out
}

/// Random diagram whose initial set is a product `A × B` with at least two
/// elements, so it has the box property.
pub fn random_box_ttd(seed: u64) -> Ttd {
    let mut r = rng(seed);
    loop {
        let shared = r.random_range(1..=4);
        let local = r.random_range(1..=4);
        if shared * local < 2 {
            continue;
        }
        let a: BTreeSet<usize> = (0..r.random_range(1..=shared)).map(|_| r.random_range(0..shared)).collect();
        let b: BTreeSet<usize> = (0..r.random_range(1..=local)).map(|_| r.random_range(0..local)).collect();
        if a.len() * b.len() < 2 {
            continue;
        }
        let initial: Vec<ThreadState> = a.iter().flat_map(|&s| b.iter().map(move |&l| ts(s, l))).collect();
        let edge_count = r.random_range(0..=10);
        let states = shared * local;
        let at = |i: usize| ts(i / local, i % local);
        let edges: BTreeSet<Edge> =
            (0..edge_count).map(|_| Edge::real(at(r.random_range(0..states)), at(r.random_range(0..states)))).collect();
        let target = at(r.random_range(0..states));
        return Ttd::new(shared, local, edges, initial, target).expect("valid diagram");
    }
}

/// Parameters of the differential corpus for seed `i`.
pub fn corpus_params(i: u64) -> (usize, usize, usize, f64) {
    let mut r = rng(i ^ 0x5eed_0000);
    let shared = r.random_range(1..=4);
    let local = r.random_range(1..=4);
    let (shared, local) = if shared * local < 2 { (2, local) } else { (shared, local) };
    let states = shared * local;
    let edges = r.random_range(0..=12usize.min(states * states));
    let spawn = if i.is_multiple_of(2) { 0.0 } else { 0.2 };
    (shared, local, edges, spawn)
}

use ttdreach::presburger::{LinExpr, Rewriter};
use ttdreach::{Atom, Formula, Rel, Start, SummaryTerm, Var};

/// A chain of up to eight atoms over loop counts `k0..k2`.
pub fn random_chain(rng: &mut ChaCha8Rng, counter_start: bool) -> SummaryTerm {
    let start = if counter_start { Start::Counter(0) } else { Start::Const(rng.random_range(0..=3)) };
    let atoms = (0..rng.random_range(1..=8))
        .map(|_| match rng.random_range(0..3) {
            0 => Atom::Add(rng.random_range(-3..=3)),
            1 => Atom::MaxAdd { floor: rng.random_range(0..=3), delta: rng.random_range(-3..=3) },
            _ => Atom::MaxAddScaled {
                floor: rng.random_range(0..=3),
                coeff: rng.random_range(-3..=3),
                kappa: rng.random_range(0..3),
                shift: rng.random_range(-1..=0),
            },
        })
        .collect();
    SummaryTerm { start, atoms }
}

/// Conjunction of a few rewritten chains with final conditions, and every
/// loop count bounded to `0..=30`.
pub fn random_formula(rng: &mut ChaCha8Rng) -> Formula {
    random_formula_with_chains(rng).0
}

/// Brute-force satisfiability of a formula from [`random_formula`]: enumerate
/// the loop counts and evaluate the chains directly.
pub fn brute_sat(chains: &[(SummaryTerm, Rel, i64)]) -> bool {
    for k0 in 0..=30 {
        for k1 in 0..=30 {
            for k2 in 0..=30 {
                let ks = [k0, k1, k2];
                let ok = chains.iter().all(|(t, rel, c)| {
                    let v = t.eval(|_| None, |k| ks.get(k).copied()).expect("bound kappas") - c;
                    match rel {
                        Rel::Eq => v == 0,
                        Rel::Ge => v >= 0,
                        Rel::Lt => v < 0,
                        Rel::Le => v <= 0,
                        Rel::Gt => v > 0,
                    }
                });
                if ok {
                    return true;
                }
            }
        }
    }
    false
}

/// Like [`random_formula`], also returning the chains for [`brute_sat`].
pub fn random_formula_with_chains(rng: &mut ChaCha8Rng) -> (Formula, Vec<(SummaryTerm, Rel, i64)>) {
    let mut rw = Rewriter::new();
    let mut rest = Vec::new();
    let mut chains = Vec::new();
    for k in 0..3 {
        let kv = LinExpr::var(Var::Kappa(k));
        rest.push(Formula::atom(kv.clone(), Rel::Ge));
        rest.push(Formula::atom(kv.offset(-30), Rel::Le));
    }
    for _ in 0..rng.random_range(1..=3) {
        let t = random_chain(rng, false);
        let e = rw.chain(&t);
        let c = rng.random_range(0..=2);
        let rel = [Rel::Eq, Rel::Ge, Rel::Lt][rng.random_range(0..3)];
        rest.push(Formula::atom(e.offset(-c), rel));
        chains.push((t, rel, c));
    }
    (rw.finish(rest), chains)
}

/// Path of an external SMT solver, from `TTDREACH_SMT_SOLVER` or `z3` on PATH.
pub fn external_solver() -> Option<std::path::PathBuf> {
    if let Some(p) = std::env::var_os("TTDREACH_SMT_SOLVER") {
        return Some(p.into());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join("z3")).find(|p| p.is_file())
}
