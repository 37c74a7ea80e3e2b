//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::Rng;

use common::*;
use ttdreach::presburger::{row_formula, to_smtlib_script, LinExpr, Rewriter};
use ttdreach::quotient::QuotientGraph;
use ttdreach::{
    check, compact_form, enumerate_paths, eval_chain, forward_explore, loop_summary, normalize_initial_states,
    parse_ttd, random_ttd, segment_summary, solve, Atom, CheckOptions, Engine, Formula, Rel, SatStatus, Start, Status,
    SummaryTerm, ThreadState, Ttd, Var,
};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn data(name: &str) -> Ttd {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_ttd(&std::fs::read_to_string(path).expect("data file")).expect("valid data file").ttd
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn two_step_values() -> Outcome {
    let d = data("two_step.ttd");
    let q = QuotientGraph::build(&d).map_err(|e| e.to_string())?;
    let plan = enumerate_paths(&q, None).next().ok_or("no path")?;
    let walk = plan.walk();
    ensure(walk.len() == 3, || format!("walk has {} edges", walk.len()))?;
    let s = |l: usize, n: i64| segment_summary(&walk, l).map(|t| t.apply(n)).map_err(|e| e.to_string());
    let got = [s(0, 0)?, s(0, 1)?, s(1, 0)?, s(2, 1)?];
    ensure(got == [1, 1, 1, 0], || format!("got S0(0),S0(1),S1(0),S2(1) = {got:?}"))?;
    Ok("S0(0)=1 S0(1)=1 S1(0)=1 S2(1)=0".into())
}

fn loop_negative() -> Outcome {
    let d = data("loop_unreachable.ttd");
    let opts = CheckOptions { keep_constraints: true, ..CheckOptions::default() };
    let r = check(&d, &opts).map_err(|e| e.to_string())?;
    let v = &r.verdict;
    ensure(v.status == Status::Unreachable, || format!("status {}", v.status))?;
    ensure(v.stats.bws_calls == 0, || format!("{} bws calls", v.stats.bws_calls))?;
    ensure(v.stats.paths == 1, || format!("{} quotient paths", v.stats.paths))?;
    for pc in &r.constraints {
        let f = row_formula(pc, 4);
        ensure(solve(&f).status == SatStatus::Unsat, || format!("n4 row satisfiable: {}", pc.rows[4]))?;
    }
    let looped = r.constraints.iter().find(|pc| !pc.kappas.is_empty()).ok_or("no loop variant")?;
    let row = looped.rows[4].to_string();
    ensure(row == "1 ⊕[1] 0 ⊕[0] 0 ⊕[0] (k0-1)·(0) ⊕[0] 0", || format!("n4 row {row}"))?;
    Ok(format!("UNREACHABLE, bws_calls=0, n4 row `{row} = 0` unsat"))
}

fn loop_positive() -> Outcome {
    let d = data("loop_reachable.ttd");
    let r = check(&d, &CheckOptions::default()).map_err(|e| e.to_string())?;
    let v = &r.verdict;
    ensure(v.status == Status::Reachable, || format!("status {}", v.status))?;
    match &v.evidence {
        Some(ev @ ttdreach::Evidence::Kappa { kappas, .. }) => {
            ensure(kappas == &[2], || format!("kappas {kappas:?}"))?;
            ensure(ev.verify(d.target()), || "witness does not replay".into())?;
        }
        other => return Err(format!("unexpected evidence {other:?}")),
    }
    Ok("REACHABLE with k0=2".into())
}

fn loop_closed_form_suite() -> Outcome {
    let mut r = rng(4);
    let mut checks = 0u64;
    let cycles = 300;
    for _ in 0..cycles {
        let shared = r.random_range(1..=6);
        let local = r.random_range(1..=6);
        let cycle = random_cycle(shared, local, &mut r);
        for l in 0..local {
            let closed = loop_summary(&cycle, l, 0).map_err(|e| e.to_string())?;
            for kappa in 1..=6 {
                for n in admissible_floor(&cycle, l)..=10 {
                    let mut expect = n;
                    for _ in 0..kappa {
                        expect = walk_value(&cycle, l, expect);
                    }
                    let got = closed.eval(|_| Some(n), |_| Some(kappa)).map_err(|e| e.to_string())?;
                    ensure(got == expect, || {
                        format!("cycle {cycle:?} l={l} kappa={kappa} n={n}: closed {got}, iterated {expect}")
                    })?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{cycles} cycles, {checks} evaluations, n from [walk ends in l] to 10"))
}

fn compact_form_suite() -> Outcome {
    let mut r = rng(5);
    let mut seen = [false; 5];
    let mut checks = 0u64;
    let walks = 400;
    for _ in 0..walks {
        let shared = r.random_range(1..=5);
        let local = r.random_range(1..=5);
        let walk = random_walk(shared, local, &mut r);
        for l in 0..local {
            for (s, hit) in seen.iter_mut().zip(shapes(&walk, l)) {
                *s |= hit;
            }
            let (b, delta) = compact_form(&walk, l).map_err(|e| e.to_string())?;
            for n in admissible_floor(&walk, l)..=20 {
                let expect = walk_value(&walk, l, n);
                let got = (n + delta).max(b);
                ensure(got == expect, || format!("walk {walk:?} l={l} n={n}: compact {got}, direct {expect}"))?;
                checks += 1;
            }
        }
    }
    ensure(seen.iter().all(|&s| s), || format!("case shapes not all covered: {seen:?}"))?;
    Ok(format!("{walks} walks, all case shapes, {checks} evaluations, n from [walk ends in l] to 20"))
}

fn differential_suite() -> Outcome {
    let mut decided = 0;
    let mut reachable = 0;
    for seed in 0..1200u64 {
        let (s, l, e, spawn) = corpus_params(seed);
        let d = random_ttd(s, l, e, spawn, seed).map_err(|e| e.to_string())?;
        let pw = check(&d, &CheckOptions::default()).map_err(|e| e.to_string())?.verdict;
        let bw = check(&d, &CheckOptions { engine: Engine::Bws, ..CheckOptions::default() })
            .map_err(|e| e.to_string())?
            .verdict;
        ensure(!pw.truncated, || format!("seed {seed}: path cap hit"))?;
        ensure(pw.status == bw.status, || {
            format!("seed {seed}: pathwise {} vs bws {}\n{}", pw.status, bw.status, ttdreach::serialize_ttd(&d))
        })?;
        if let Some(ev) = &pw.evidence {
            ensure(ev.verify(d.target()), || format!("seed {seed}: evidence does not replay"))?;
        }
        decided += 1;
        reachable += usize::from(pw.status == Status::Reachable);
    }
    Ok(format!("{decided} diagrams agree ({reachable} reachable), no truncation"))
}

fn over_approximation_suite() -> Outcome {
    let mut positives = 0;
    let mut checked = 0;
    for seed in 0..1200u64 {
        let (s, l, e, spawn) = corpus_params(seed);
        let d = random_ttd(s, l, e, spawn, seed).map_err(|e| e.to_string())?;
        let q = QuotientGraph::build(&d).map_err(|e| e.to_string())?;
        for n in 1..=3 {
            let x = forward_explore(&d, n, 5_000);
            if !x.exhaustive {
                continue;
            }
            checked += 1;
            if x.states.contains(&d.target()) {
                positives += 1;
                ensure(q.sequentially_reachable(), || {
                    format!("seed {seed}: reachable with {n} threads but not in quotient")
                })?;
            }
        }
    }
    Ok(format!("{checked} exhaustive explorations, {positives} forward-reachable targets, 0 violations"))
}

fn rewrite_suite() -> Outcome {
    // Pinned regression: chains associate to the left.
    let left = SummaryTerm {
        start: Start::Const(1),
        atoms: vec![Atom::MaxAdd { floor: 0, delta: 2 }, Atom::MaxAdd { floor: 0, delta: -3 }],
    };
    let inner = SummaryTerm { start: Start::Const(2), atoms: vec![Atom::MaxAdd { floor: 0, delta: -3 }] };
    let empty = BTreeMap::new();
    let inner_v = eval_chain(&inner, &empty).map_err(|e| e.to_string())?;
    let right = SummaryTerm { start: Start::Const(1), atoms: vec![Atom::MaxAdd { floor: 0, delta: inner_v }] };
    let pair =
        (eval_chain(&left, &empty).map_err(|e| e.to_string())?, eval_chain(&right, &empty).map_err(|e| e.to_string())?);
    ensure(pair == (0, 1), || format!("(1+2)-3, 1+(2-3) = {pair:?}"))?;

    let mut r = rng(8);
    let chains = 500;
    for _ in 0..chains {
        let term = random_chain(&mut r, true);
        let mut rw = Rewriter::new();
        let value = rw.chain(&term);
        let side = rw.finish(Vec::new());
        for _ in 0..20 {
            let n = r.random_range(0..=10);
            let ks: Vec<i64> = (0..3).map(|_| r.random_range(0..=6)).collect();
            let mut assignment = BTreeMap::from([(Var::Counter(0), n)]);
            let mut pins = vec![side.clone(), Formula::atom(LinExpr::var(Var::Counter(0)).offset(-n), Rel::Eq)];
            for (k, &v) in ks.iter().enumerate() {
                assignment.insert(Var::Kappa(k), v);
                pins.push(Formula::atom(LinExpr::var(Var::Kappa(k)).offset(-v), Rel::Eq));
            }
            let expect = eval_chain(&term, &assignment).map_err(|e| e.to_string())?;
            let res = solve(&Formula::And(pins.clone()));
            let model = res.model.ok_or_else(|| format!("{term}: rewritten formula unsat at {assignment:?}"))?;
            let got = value.eval(&model).ok_or("unbound variable")?;
            ensure(got == i128::from(expect), || format!("{term} at {assignment:?}: forced {got}, eval {expect}"))?;
            // No other value is possible.
            for rel in [Rel::Lt, Rel::Gt] {
                let mut probe = pins.clone();
                probe.push(Formula::atom(value.clone().offset(-expect), rel));
                ensure(!solve(&Formula::And(probe)).is_sat(), || format!("{term}: value not forced"))?;
            }
        }
    }
    Ok(format!("{chains} chains x 20 assignments agree; (1+2)-3=0, 1+(2-3)=1"))
}

fn visible(d: &Ttd, shared: usize, local: usize) -> BTreeSet<ThreadState> {
    let mut out = BTreeSet::new();
    for n in 1..=3 {
        let x = forward_explore(d, n, 200_000);
        assert!(x.exhaustive, "spawn-free exploration must close");
        out.extend(x.states.into_iter().filter(|t| t.shared < shared && t.local < local));
    }
    out
}

fn normalization_suite() -> Outcome {
    let cases = 250;
    for seed in 0..cases {
        let d = random_box_ttd(seed);
        let n = normalize_initial_states(&d).map_err(|e| e.to_string())?;
        let before = visible(&d, d.shared_count(), d.local_count());
        let after = visible(&n, d.shared_count(), d.local_count());
        ensure(before == after, || format!("seed {seed}: {before:?} vs {after:?}"))?;
    }
    Ok(format!("{cases} box-property diagrams, identical reachable sets for n <= 3"))
}

fn solver_differential() -> Outcome {
    let Some(solver) = external_solver() else {
        return Ok("SKIP: no external solver found".into());
    };
    let mut formulas = Vec::new();
    let opts = CheckOptions { keep_formulas: true, ..CheckOptions::default() };
    for seed in 0..3000u64 {
        if formulas.len() >= 250 {
            break;
        }
        let (s, l, e, _) = corpus_params(seed);
        let d = random_ttd(s, l, e, 0.0, seed).map_err(|e| e.to_string())?;
        formulas.extend(check(&d, &opts).map_err(|e| e.to_string())?.formulas);
    }
    let mut r = rng(10);
    while formulas.len() < 600 {
        formulas.push(random_formula(&mut r));
    }
    let script = to_smtlib_script(&formulas);
    let mut child = Command::new(&solver)
        .arg("-in")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot run {}: {e}", solver.display()))?;
    child.stdin.take().ok_or("stdin")?.write_all(script.as_bytes()).map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let answers: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    ensure(answers.len() == formulas.len(), || {
        format!("{} answers for {} formulas: {text}", answers.len(), formulas.len())
    })?;
    let mut sat = 0;
    for (i, (f, a)) in formulas.iter().zip(&answers).enumerate() {
        let ours = solve(f).status;
        let theirs = match *a {
            "sat" => SatStatus::Sat,
            "unsat" => SatStatus::Unsat,
            other => return Err(format!("formula {i}: external answer {other}")),
        };
        ensure(ours == theirs, || {
            format!("formula {i}: built-in {ours:?}, external {theirs:?}\n{}", ttdreach::to_smtlib(f))
        })?;
        sat += usize::from(ours == SatStatus::Sat);
    }
    Ok(format!("{} formulas agree with {} ({sat} sat)", formulas.len(), solver.display()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "two-step segment summaries", Duration::from_secs(1), two_step_values),
        (2, "loop diagram, target (6,4) unreachable", Duration::from_secs(1), loop_negative),
        (3, "loop diagram, target (6,3) reachable", Duration::from_secs(1), loop_positive),
        (4, "loop closed form vs iteration", Duration::from_secs(30), loop_closed_form_suite),
        (5, "compact form of loop-free walks", Duration::from_secs(10), compact_form_suite),
        (6, "pathwise vs backward search", Duration::from_secs(300), differential_suite),
        (7, "quotient over-approximation", Duration::from_secs(120), over_approximation_suite),
        (8, "max-plus rewriting", Duration::from_secs(10), rewrite_suite),
        (9, "initial-state normalization", Duration::from_secs(120), normalization_suite),
        (10, "external solver agreement", Duration::from_secs(300), solver_differential),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > budget => Err(format!("took {took:.2?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
