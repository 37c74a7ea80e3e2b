//! Expanded diagrams, their SCC quotient and ranked path enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use crate::bws::Witness;
use crate::model::{CounterState, Edge, EdgeKind, ModelError, ThreadState, Ttd};

/// Default bound on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EttdEdgeKind {
    Real,
    Spawn,
    /// Analysis-only horizontal edge; never fired by a search.
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EttdEdge {
    pub source: ThreadState,
    pub target: ThreadState,
    pub kind: EttdEdgeKind,
}

impl EttdEdge {
    pub const fn expansion(source: ThreadState, target: ThreadState) -> Self {
        Self { source, target, kind: EttdEdgeKind::Expansion }
    }

    /// The diagram edge this stands for, unless it is an expansion edge.
    pub fn base(&self) -> Option<Edge> {
        let kind = match self.kind {
            EttdEdgeKind::Real => EdgeKind::Real,
            EttdEdgeKind::Spawn => EdgeKind::Spawn,
            EttdEdgeKind::Expansion => return None,
        };
        Some(Edge { source: self.source, target: self.target, kind })
    }
}

impl From<Edge> for EttdEdge {
    fn from(e: Edge) -> Self {
        let kind = match e.kind {
            EdgeKind::Real => EttdEdgeKind::Real,
            EdgeKind::Spawn => EttdEdgeKind::Spawn,
        };
        Self { source: e.source, target: e.target, kind }
    }
}

impl fmt::Display for EttdEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.kind {
            EttdEdgeKind::Real => "->",
            EttdEdgeKind::Spawn => "+>",
            EttdEdgeKind::Expansion => "~>",
        };
        write!(f, "{}{}{}", self.source, arrow, self.target)
    }
}

/// A diagram plus its expansion edges.
#[derive(Debug, Clone)]
pub struct Ettd {
    base: Ttd,
    expansions: BTreeSet<(ThreadState, ThreadState)>,
    edges: Vec<EttdEdge>,
}

impl Ettd {
    pub fn base(&self) -> &Ttd {
        &self.base
    }

    pub fn expansion_edges(&self) -> &BTreeSet<(ThreadState, ThreadState)> {
        &self.expansions
    }

    /// Base and expansion edges, sorted.
    pub fn edges(&self) -> &[EttdEdge] {
        &self.edges
    }
}

/// Adds `(s,l) ~> (s,l')` whenever some edge enters `(s,l)` and some edge
/// leaves `(s,l')` or `(s,l')` is the target.
pub fn build_ettd(d: &Ttd) -> Ettd {
    let mut entered: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut exits: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for e in d.edges() {
        entered.entry(e.target.shared).or_default().insert(e.target.local);
        exits.entry(e.source.shared).or_default().insert(e.source.local);
    }
    exits.entry(d.target().shared).or_default().insert(d.target().local);

    let mut expansions = BTreeSet::new();
    for (s, ins) in &entered {
        let Some(outs) = exits.get(s) else { continue };
        for &l in ins {
            for &l2 in outs {
                if l != l2 {
                    expansions.insert((ThreadState::new(*s, l), ThreadState::new(*s, l2)));
                }
            }
        }
    }
    let mut edges: Vec<EttdEdge> = d.edges().iter().map(|&e| e.into()).collect();
    edges.extend(expansions.iter().map(|&(a, b)| EttdEdge::expansion(a, b)));
    edges.sort();
    Ettd { base: d.clone(), expansions, edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SccClass {
    Trivial,
    SimpleLoop,
    Spaghetti,
}

#[derive(Debug, Clone)]
pub struct Scc {
    pub members: Vec<ThreadState>,
    /// ETTD edges with both ends inside.
    pub internal: Vec<EttdEdge>,
    /// ETTD edges leaving to another SCC, sorted.
    pub outgoing: Vec<EttdEdge>,
    pub class: SccClass,
}

impl Scc {
    /// Path-ranking class: 0 trivial, 1 simple loop over diagram edges only,
    /// 2 simple loop using expansion edges, 3 anything else.
    pub fn rank(&self) -> u8 {
        match self.class {
            SccClass::Trivial => 0,
            SccClass::SimpleLoop if self.internal.iter().all(|e| e.kind != EttdEdgeKind::Expansion) => 1,
            SccClass::SimpleLoop => 2,
            SccClass::Spaghetti => 3,
        }
    }
}

/// Extra edges added so the initial and target states are singleton SCCs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Padding {
    pub pre_initial: Option<Edge>,
    pub post_final: Option<Edge>,
}

/// SCC quotient of the ETTD, as a multigraph over concrete border edges.
#[derive(Debug, Clone)]
pub struct QuotientGraph {
    original: Ttd,
    ettd: Ettd,
    padding: Padding,
    scc_of: Vec<usize>,
    sccs: Vec<Scc>,
    source: usize,
    target: usize,
}

fn tarjan(n: usize, succ: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

struct Decomposition {
    scc_of: Vec<usize>,
    sccs: Vec<Scc>,
}

fn decompose(e: &Ettd) -> Decomposition {
    let d = e.base();
    let locals = d.local_count();
    let n = d.shared_count() * locals;
    let idx = |t: ThreadState| t.shared * locals + t.local;
    let mut succ = vec![Vec::new(); n];
    for edge in e.edges() {
        succ[idx(edge.source)].push(idx(edge.target));
    }
    let scc_of = tarjan(n, &succ);
    let count = scc_of.iter().max().map_or(0, |m| m + 1);
    let mut sccs: Vec<Scc> = (0..count)
        .map(|_| Scc { members: Vec::new(), internal: Vec::new(), outgoing: Vec::new(), class: SccClass::Trivial })
        .collect();
    for i in 0..n {
        sccs[scc_of[i]].members.push(ThreadState::new(i / locals, i % locals));
    }
    for edge in e.edges() {
        let (a, b) = (scc_of[idx(edge.source)], scc_of[idx(edge.target)]);
        if a == b {
            sccs[a].internal.push(*edge);
        } else {
            sccs[a].outgoing.push(*edge);
        }
    }
    for scc in &mut sccs {
        scc.class = classify(scc);
    }
    Decomposition { scc_of, sccs }
}

fn classify(scc: &Scc) -> SccClass {
    if scc.internal.is_empty() {
        return SccClass::Trivial;
    }
    if scc.internal.len() != scc.members.len() {
        return SccClass::Spaghetti;
    }
    let mut outdeg: HashMap<ThreadState, usize> = HashMap::new();
    let mut indeg: HashMap<ThreadState, usize> = HashMap::new();
    for e in &scc.internal {
        *outdeg.entry(e.source).or_default() += 1;
        *indeg.entry(e.target).or_default() += 1;
    }
    let simple = scc.members.iter().all(|m| outdeg.get(m) == Some(&1) && indeg.get(m) == Some(&1));
    if simple {
        SccClass::SimpleLoop
    } else {
        SccClass::Spaghetti
    }
}

impl QuotientGraph {
    /// Builds the quotient of `d`, padding the diagram when the initial or
    /// target state lies on a cycle. `d` must have a unique initial state.
    pub fn build(d: &Ttd) -> Result<Self, ModelError> {
        let init = d.initial_state().ok_or(ModelError::NoInitialState)?;
        let target = d.target();
        let idx = |t: ThreadState| t.shared * d.local_count() + t.local;
        let first = build_ettd(d);
        let dec = decompose(&first);
        let nontrivial = |t: ThreadState| dec.sccs[dec.scc_of[idx(t)]].class != SccClass::Trivial;

        let (ettd, dec, padding) = if nontrivial(init) || nontrivial(target) {
            let mut padding = Padding::default();
            let mut extra = 0;
            let mut new_init = init;
            let mut new_target = target;
            if nontrivial(init) {
                let pre = ThreadState::new(d.shared_count() + extra, init.local);
                extra += 1;
                padding.pre_initial = Some(Edge::real(pre, init));
                new_init = pre;
            }
            if nontrivial(target) {
                let post = ThreadState::new(d.shared_count() + extra, target.local);
                extra += 1;
                padding.post_final = Some(Edge::real(target, post));
                new_target = post;
            }
            let padded =
                d.extended(extra, padding.pre_initial.into_iter().chain(padding.post_final), new_init, new_target);
            let ettd = build_ettd(&padded);
            let dec = decompose(&ettd);
            (ettd, dec, padding)
        } else {
            (first, dec, Padding::default())
        };

        let p = ettd.base();
        let pidx = |t: ThreadState| t.shared * p.local_count() + t.local;
        let source = dec.scc_of[pidx(p.initial_state().expect("unique initial"))];
        let target = dec.scc_of[pidx(p.target())];
        let mut sccs = dec.sccs;
        for scc in &mut sccs {
            scc.outgoing.sort();
        }
        let q = QuotientGraph { original: d.clone(), ettd, padding, scc_of: dec.scc_of, sccs, source, target };
        debug_assert!(q.is_acyclic());
        Ok(q)
    }

    /// The diagram the user asked about.
    pub fn original(&self) -> &Ttd {
        &self.original
    }

    /// The possibly padded diagram all analyses run on.
    pub fn diagram(&self) -> &Ttd {
        self.ettd.base()
    }

    pub fn ettd(&self) -> &Ettd {
        &self.ettd
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn sccs(&self) -> &[Scc] {
        &self.sccs
    }

    pub fn scc_of(&self, t: ThreadState) -> usize {
        self.scc_of[t.shared * self.diagram().local_count() + t.local]
    }

    pub fn source_node(&self) -> usize {
        self.source
    }

    pub fn target_node(&self) -> usize {
        self.target
    }

    /// Number of quotient edges (border edges of the ETTD).
    pub fn edge_count(&self) -> usize {
        self.sccs.iter().map(|s| s.outgoing.len()).sum()
    }

    fn is_acyclic(&self) -> bool {
        // Tarjan numbers components in reverse topological order.
        self.sccs.iter().enumerate().all(|(i, s)| s.outgoing.iter().all(|e| self.scc_of(e.target) < i))
    }

    /// Whether the target node is reachable from the source node.
    pub fn sequentially_reachable(&self) -> bool {
        let mut seen = vec![false; self.sccs.len()];
        let mut queue = VecDeque::from([self.source]);
        seen[self.source] = true;
        while let Some(v) = queue.pop_front() {
            if v == self.target {
                return true;
            }
            for e in &self.sccs[v].outgoing {
                let w = self.scc_of(e.target);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Removes padding steps from a witness found on the padded diagram.
    pub fn strip_padding(&self, w: &Witness) -> Witness {
        let mut initial = w.initial.clone();
        let mut steps = w.steps.as_slice();
        if let (Some(pre), Some((e, s))) = (self.padding.pre_initial, steps.first()) {
            if *e == pre {
                initial = s.clone();
                steps = &steps[1..];
            }
        }
        let mut steps = steps.to_vec();
        if let Some(post) = self.padding.post_final {
            if steps.last().is_some_and(|(e, _)| *e == post) {
                steps.pop();
            }
        }
        Witness { initial, steps }
    }

    /// The search goal: one thread in the (padded) target state.
    pub fn goal(&self) -> CounterState {
        CounterState::single(self.diagram().target())
    }

    /// Graphviz rendering of the quotient.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph quotient {\n  node [shape=box];\n");
        for (i, scc) in self.sccs.iter().enumerate() {
            let members: Vec<String> = scc.members.iter().map(ToString::to_string).collect();
            let mut extra = String::new();
            if i == self.source {
                extra.push_str(", peripheries=2");
            }
            if i == self.target {
                extra.push_str(", style=bold");
            }
            let _ = writeln!(out, "  c{i} [label=\"{:?} {}\"{extra}];", scc.class, members.join(" "));
        }
        for (i, scc) in self.sccs.iter().enumerate() {
            for e in &scc.outgoing {
                let _ = writeln!(out, "  c{i} -> c{} [label=\"{:?} {}\"];", self.scc_of(e.target), e.kind, e);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// One traversal of a simple loop: the partial path from entry to exit, then
/// `kappa` copies of `cycle`, which starts and ends at `exit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopVisit {
    pub scc: usize,
    pub entry: ThreadState,
    pub exit: ThreadState,
    pub partial: Vec<EttdEdge>,
    pub cycle: Vec<EttdEdge>,
    /// Index of the loop-count variable.
    pub kappa: usize,
}

/// Passage through a non-simple SCC, with one shortest route for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangleVisit {
    pub scc: usize,
    pub entry: ThreadState,
    pub exit: ThreadState,
    pub route: Vec<EttdEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanStep {
    Segment(Vec<EttdEdge>),
    Loop(LoopVisit),
    Tangle(TangleVisit),
}

/// A concretized source-to-target path of the quotient. Steps alternate
/// segments and SCC visits, beginning and ending with a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPlan {
    pub id: usize,
    pub class: u8,
    pub border: Vec<EttdEdge>,
    pub steps: Vec<PlanStep>,
    pub contains_spaghetti: bool,
    pub contains_spawn: bool,
    /// Diagram edges a search along this path may fire.
    pub slice: BTreeSet<Edge>,
}

impl PathPlan {
    pub fn segments(&self) -> impl Iterator<Item = &[EttdEdge]> {
        self.steps.iter().filter_map(|s| match s {
            PlanStep::Segment(e) => Some(e.as_slice()),
            _ => None,
        })
    }

    pub fn loops(&self) -> impl Iterator<Item = &LoopVisit> {
        self.steps.iter().filter_map(|s| match s {
            PlanStep::Loop(l) => Some(l),
            _ => None,
        })
    }

    pub fn loop_count(&self) -> usize {
        self.loops().count()
    }

    /// The walk with every loop taken zero extra times.
    pub fn walk(&self) -> Vec<EttdEdge> {
        let mut out = Vec::new();
        for s in &self.steps {
            match s {
                PlanStep::Segment(e) => out.extend_from_slice(e),
                PlanStep::Loop(l) => out.extend_from_slice(&l.partial),
                PlanStep::Tangle(t) => out.extend_from_slice(&t.route),
            }
        }
        out
    }
}

fn follow_cycle(scc: &Scc, from: ThreadState, to: ThreadState, full: bool) -> Vec<EttdEdge> {
    let mut out = Vec::new();
    let mut at = from;
    while at != to || (full && out.is_empty()) {
        let e = scc.internal.iter().find(|e| e.source == at).expect("simple loop edge");
        out.push(*e);
        at = e.target;
    }
    out
}

fn bfs_route(scc: &Scc, from: ThreadState, to: ThreadState) -> Vec<EttdEdge> {
    let mut prev: HashMap<ThreadState, EttdEdge> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for e in scc.internal.iter().filter(|e| e.source == v) {
            if e.target != from && !prev.contains_key(&e.target) {
                prev.insert(e.target, *e);
                queue.push_back(e.target);
            }
        }
    }
    let mut route = Vec::new();
    let mut at = to;
    while at != from {
        let e = prev[&at];
        route.push(e);
        at = e.source;
    }
    route.reverse();
    route
}

impl QuotientGraph {
    fn plan(&self, id: usize, class: u8, border: Vec<EttdEdge>) -> PathPlan {
        let mut steps = Vec::new();
        let mut seg = Vec::new();
        let mut slice = BTreeSet::new();
        let mut contains_spaghetti = false;
        let mut contains_spawn = false;
        let mut kappa = 0;
        for (i, e) in border.iter().enumerate() {
            seg.push(*e);
            slice.extend(e.base());
            contains_spawn |= e.kind == EttdEdgeKind::Spawn;
            let c = self.scc_of(e.target);
            let scc = &self.sccs[c];
            if scc.class == SccClass::Trivial {
                continue;
            }
            let entry = e.target;
            let exit = border[i + 1].source;
            slice.extend(scc.internal.iter().filter_map(EttdEdge::base));
            contains_spawn |= scc.internal.iter().any(|e| e.kind == EttdEdgeKind::Spawn);
            steps.push(PlanStep::Segment(std::mem::take(&mut seg)));
            if scc.class == SccClass::SimpleLoop {
                steps.push(PlanStep::Loop(LoopVisit {
                    scc: c,
                    entry,
                    exit,
                    partial: follow_cycle(scc, entry, exit, false),
                    cycle: follow_cycle(scc, exit, exit, true),
                    kappa,
                }));
                kappa += 1;
            } else {
                contains_spaghetti = true;
                steps.push(PlanStep::Tangle(TangleVisit { scc: c, entry, exit, route: bfs_route(scc, entry, exit) }));
            }
        }
        steps.push(PlanStep::Segment(seg));
        PathPlan { id, class, border, steps, contains_spaghetti, contains_spawn, slice }
    }
}

/// Per-class reachability tables: `layers[r][v]` says whether a path with
/// exactly `r` border edges leads from `v` to the target through nodes of
/// rank at most `c`, and whether such a path meets a node of rank exactly `c`.
struct ClassTable {
    class: u8,
    layers: Vec<Vec<(bool, bool)>>,
}

impl ClassTable {
    fn new(q: &QuotientGraph, class: u8) -> Self {
        let base = (0..q.sccs.len())
            .map(|v| {
                let ok = v == q.target && q.sccs[v].rank() <= class;
                (ok, ok && q.sccs[v].rank() == class)
            })
            .collect();
        Self { class, layers: vec![base] }
    }

    fn ensure(&mut self, q: &QuotientGraph, r: usize) {
        while self.layers.len() <= r {
            let prev = self.layers.last().expect("base layer");
            let layer = (0..q.sccs.len())
                .map(|v| {
                    let rank = q.sccs[v].rank();
                    if rank > self.class {
                        return (false, false);
                    }
                    let (mut any, mut hit) = (false, false);
                    for e in &q.sccs[v].outgoing {
                        let (a, h) = prev[q.scc_of(e.target)];
                        any |= a;
                        hit |= h;
                    }
                    (any, if rank == self.class { any } else { hit })
                })
                .collect();
            self.layers.push(layer);
        }
    }
}

struct Frame {
    node: usize,
    cursor: usize,
    hit: bool,
}

/// Lazy stream of path plans in rank order. See [`enumerate_paths`].
pub struct PathStream<'q> {
    q: &'q QuotientGraph,
    cap: Option<usize>,
    produced: usize,
    truncated: bool,
    table: Option<ClassTable>,
    length: usize,
    max_length: usize,
    stack: Vec<Frame>,
    path: Vec<EttdEdge>,
    started: bool,
}

/// Enumerates source-to-target paths by class (loop-free, simple loops over
/// diagram edges, simple loops with expansion edges, other SCCs), then by
/// number of border edges, then lexicographically by border edges.
pub fn enumerate_paths(q: &QuotientGraph, cap: Option<usize>) -> PathStream<'_> {
    PathStream {
        q,
        cap,
        produced: 0,
        truncated: false,
        table: None,
        length: 0,
        max_length: q.sccs.len().saturating_sub(1),
        stack: Vec::new(),
        path: Vec::new(),
        started: false,
    }
}

impl PathStream<'_> {
    /// True once the cap stopped the stream while paths remained.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn produced(&self) -> usize {
        self.produced
    }

    fn next_border(&mut self) -> Option<(u8, Vec<EttdEdge>)> {
        let q = self.q;
        loop {
            if !self.started {
                self.started = true;
                self.table = Some(ClassTable::new(q, 0));
                self.length = 0;
            }
            let table = self.table.as_mut()?;
            if self.stack.is_empty() {
                // Advance to the next (class, length) batch.
                self.length += 1;
                if self.length > self.max_length {
                    if table.class == 3 {
                        self.table = None;
                        return None;
                    }
                    *table = ClassTable::new(q, table.class + 1);
                    self.length = 1;
                }
                table.ensure(q, self.length);
                let src = q.source;
                let rank = q.sccs[src].rank();
                let hit = rank == table.class;
                let (any, with_hit) = table.layers[self.length][src];
                if rank <= table.class && if hit { any } else { with_hit } {
                    self.stack.push(Frame { node: src, cursor: 0, hit });
                }
                continue;
            }
            let depth = self.path.len();
            if depth == self.length {
                let out = (table.class, self.path.clone());
                self.stack.pop();
                self.path.pop();
                return Some(out);
            }
            let frame = self.stack.last_mut().expect("nonempty");
            let outgoing = &q.sccs[frame.node].outgoing;
            let remaining = self.length - depth - 1;
            let mut pushed = None;
            while frame.cursor < outgoing.len() {
                let e = outgoing[frame.cursor];
                frame.cursor += 1;
                let w = q.scc_of(e.target);
                let rank = q.sccs[w].rank();
                if rank > table.class {
                    continue;
                }
                let hit = frame.hit || rank == table.class;
                let (any, with_hit) = table.layers[remaining][w];
                if if hit { any } else { with_hit } {
                    pushed = Some((Frame { node: w, cursor: 0, hit }, e));
                    break;
                }
            }
            match pushed {
                Some((f, e)) => {
                    self.stack.push(f);
                    self.path.push(e);
                }
                None => {
                    self.stack.pop();
                    self.path.pop();
                }
            }
        }
    }
}

impl Iterator for PathStream<'_> {
    type Item = PathPlan;

    fn next(&mut self) -> Option<PathPlan> {
        if self.cap.is_some_and(|c| self.produced >= c) {
            if !self.truncated && self.next_border().is_some() {
                self.truncated = true;
            }
            return None;
        }
        let (class, border) = self.next_border()?;
        let plan = self.q.plan(self.produced, class, border);
        self.produced += 1;
        Some(plan)
    }
}
