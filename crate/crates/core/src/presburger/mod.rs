//! Linear integer formulas: max-plus elimination, a built-in decision
//! procedure and SMT-LIB export.

mod omega;
mod smtlib;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use smtlib::{to_smtlib, to_smtlib_script};

use crate::summary::{Atom, EvalError, PathConstraint, Start, SummaryTerm};

/// Formula variables. The order fixes declaration order in exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Kappa(usize),
    Aux(usize),
    Counter(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Kappa(i) => write!(f, "k{i}"),
            Var::Aux(i) => write!(f, "v{i}"),
            Var::Counter(i) => write!(f, "n{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    fn holds(self, v: i128) -> bool {
        match self {
            Rel::Eq => v == 0,
            Rel::Le => v <= 0,
            Rel::Lt => v < 0,
            Rel::Ge => v >= 0,
            Rel::Gt => v > 0,
        }
    }
}

/// A linear expression `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        Self { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self { coeffs: BTreeMap::from([(v, 1)]), constant: 0 }
    }

    pub fn plus(mut self, other: &LinExpr, k: i64) -> Self {
        for (&v, &c) in &other.coeffs {
            let e = self.coeffs.entry(v).or_insert(0);
            *e += k * c;
            if *e == 0 {
                self.coeffs.remove(&v);
            }
        }
        self.constant += k * other.constant;
        self
    }

    pub fn offset(mut self, c: i64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, model: &BTreeMap<Var, i64>) -> Option<i128> {
        let mut acc = i128::from(self.constant);
        for (v, &c) in &self.coeffs {
            acc += i128::from(c) * i128::from(*model.get(v)?);
        }
        Some(acc)
    }
}

/// `expr rel 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearAtom {
    pub coeffs: BTreeMap<Var, i64>,
    pub constant: i64,
    pub rel: Rel,
}

impl LinearAtom {
    pub fn new(expr: LinExpr, rel: Rel) -> Self {
        Self { coeffs: expr.coeffs, constant: expr.constant, rel }
    }

    /// `lhs rel rhs`
    pub fn compare(lhs: &LinExpr, rel: Rel, rhs: &LinExpr) -> Self {
        Self::new(lhs.clone().plus(rhs, -1), rel)
    }

    pub fn expr(&self) -> LinExpr {
        LinExpr { coeffs: self.coeffs.clone(), constant: self.constant }
    }

    /// Truth under `model`; `None` if a variable is unbound.
    pub fn eval(&self, model: &BTreeMap<Var, i64>) -> Option<bool> {
        Some(self.rel.holds(self.expr().eval(model)?))
    }
}

impl fmt::Display for LinearAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.coeffs {
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.unsigned_abs();
            let sep = if first { "" } else { " " };
            if mag == 1 {
                write!(f, "{sep}{sign}{v}")?;
            } else {
                write!(f, "{sep}{sign}{mag}{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0 {
            let sign = if self.constant < 0 { "-" } else { "+" };
            write!(f, " {sign}{}", self.constant.unsigned_abs())?;
        }
        write!(f, " {} 0", self.rel.symbol())
    }
}

/// Negation-free boolean combination of atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Atom(LinearAtom),
}

impl Formula {
    pub fn atom(expr: LinExpr, rel: Rel) -> Self {
        Formula::Atom(LinearAtom::new(expr, rel))
    }

    pub fn eval(&self, model: &BTreeMap<Var, i64>) -> Option<bool> {
        match self {
            Formula::Atom(a) => a.eval(model),
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(model)? {
                        return Some(false);
                    }
                }
                Some(true)
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(model)? {
                        return Some(true);
                    }
                }
                Some(false)
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Atom(a) => out.extend(a.coeffs.keys().copied()),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    /// Number of atoms in the tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::size).sum(),
        }
    }
}

/// Replaces max-plus atoms by fresh auxiliaries with case-split side
/// conditions. Auxiliaries are numbered in creation order.
#[derive(Debug, Default)]
pub struct Rewriter {
    next_aux: usize,
    side: Vec<Formula>,
}

impl Rewriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Expression equal to the value of `term` under the side conditions.
    pub fn chain(&mut self, term: &SummaryTerm) -> LinExpr {
        let mut e = match term.start {
            Start::Const(c) => LinExpr::constant(c),
            Start::Counter(l) => LinExpr::var(Var::Counter(l)),
        };
        for atom in &term.atoms {
            e = match *atom {
                Atom::Add(c) => e.offset(c),
                Atom::MaxAdd { floor, delta } => self.floor(e.offset(delta), floor),
                Atom::MaxAddScaled { floor, coeff, kappa, shift } => {
                    let x = e.plus(&LinExpr::var(Var::Kappa(kappa)), coeff).offset(shift * coeff);
                    self.floor(x, floor)
                }
            };
        }
        e
    }

    fn floor(&mut self, x: LinExpr, b: i64) -> LinExpr {
        let v = LinExpr::var(Var::Aux(self.next_aux));
        self.next_aux += 1;
        let bound = LinExpr::constant(b);
        self.side.push(Formula::Or(vec![
            Formula::And(vec![
                Formula::Atom(LinearAtom::compare(&x, Rel::Ge, &bound)),
                Formula::Atom(LinearAtom::compare(&v, Rel::Eq, &x)),
            ]),
            Formula::And(vec![
                Formula::Atom(LinearAtom::compare(&x, Rel::Lt, &bound)),
                Formula::Atom(LinearAtom::compare(&v, Rel::Eq, &bound)),
            ]),
        ]));
        v
    }

    /// Side conditions accumulated so far, conjoined with `rest`.
    pub fn finish(self, rest: Vec<Formula>) -> Formula {
        let mut all = self.side;
        all.extend(rest);
        Formula::And(all)
    }
}

fn final_condition(pc: &PathConstraint, l: usize, e: LinExpr) -> Formula {
    if l == pc.initial.local {
        Formula::atom(e.offset(-1), Rel::Ge)
    } else {
        Formula::atom(e, Rel::Eq)
    }
}

fn kappa_bounds(pc: &PathConstraint) -> Vec<Formula> {
    pc.kappas.iter().map(|&k| Formula::atom(LinExpr::var(Var::Kappa(k)).offset(-1), Rel::Ge)).collect()
}

/// The whole constraint as a max-plus-free formula over the loop counts.
pub fn rewrite_maxplus(pc: &PathConstraint) -> Formula {
    let mut rw = Rewriter::new();
    let mut finals = kappa_bounds(pc);
    for (l, row) in pc.rows.iter().enumerate() {
        let e = rw.chain(row);
        finals.push(final_condition(pc, l, e));
    }
    rw.finish(finals)
}

/// A single row with its final condition, plus the loop-count bounds.
pub fn row_formula(pc: &PathConstraint, l: usize) -> Formula {
    let mut rw = Rewriter::new();
    let e = rw.chain(&pc.rows[l]);
    let mut rest = kappa_bounds(pc);
    rest.push(final_condition(pc, l, e));
    rw.finish(rest)
}

/// Left-to-right evaluation of a chain under an assignment of counters and
/// loop counts.
pub fn eval_chain(term: &SummaryTerm, assignment: &BTreeMap<Var, i64>) -> Result<i64, EvalError> {
    term.eval(|l| assignment.get(&Var::Counter(l)).copied(), |k| assignment.get(&Var::Kappa(k)).copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatResult {
    pub status: SatStatus,
    /// Values for every variable of the formula; present iff `Sat`.
    pub model: Option<BTreeMap<Var, i64>>,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        self.status == SatStatus::Sat
    }
}

struct Context {
    vars: Vec<Var>,
    index: BTreeMap<Var, usize>,
}

impl Context {
    fn rows(&self, atom: &LinearAtom) -> (Option<omega::Row>, Option<omega::Row>) {
        let mut a = vec![0i128; self.vars.len()];
        for (v, &c) in &atom.coeffs {
            a[self.index[v]] = i128::from(c);
        }
        let c = i128::from(atom.constant);
        let neg = |a: &[i128]| a.iter().map(|v| -v).collect::<Vec<_>>();
        match atom.rel {
            Rel::Eq => (Some(omega::Row { a, c }), None),
            Rel::Ge => (None, Some(omega::Row { a, c })),
            Rel::Gt => (None, Some(omega::Row { a, c: c - 1 })),
            Rel::Le => (None, Some(omega::Row { a: neg(&a), c: -c })),
            Rel::Lt => (None, Some(omega::Row { a: neg(&a), c: -c - 1 })),
        }
    }
}

#[derive(Clone, Default)]
struct Conj {
    eqs: Vec<omega::Row>,
    geqs: Vec<omega::Row>,
}

impl Conj {
    fn check(&self, n: usize) -> Option<Vec<i128>> {
        omega::solve(n, self.eqs.clone(), self.geqs.clone())
    }
}

/// Splits `f` into atoms (added to `conj`) and pending disjunctions.
/// Returns false on an empty disjunction.
fn flatten<'f>(ctx: &Context, f: &'f Formula, conj: &mut Conj, pending: &mut Vec<&'f [Formula]>) -> bool {
    match f {
        Formula::Atom(a) => {
            let (eq, geq) = ctx.rows(a);
            conj.eqs.extend(eq);
            conj.geqs.extend(geq);
            true
        }
        Formula::And(fs) => fs.iter().all(|g| flatten(ctx, g, conj, pending)),
        Formula::Or(fs) if fs.is_empty() => false,
        Formula::Or(fs) if fs.len() == 1 => flatten(ctx, &fs[0], conj, pending),
        Formula::Or(fs) => {
            pending.push(fs);
            true
        }
    }
}

fn search(ctx: &Context, conj: Conj, pending: &[&[Formula]]) -> Option<Vec<i128>> {
    let n = ctx.vars.len();
    let Some((first, rest)) = pending.split_first() else {
        return conj.check(n);
    };
    conj.check(n)?;
    for branch in *first {
        let mut c = conj.clone();
        let mut more: Vec<&[Formula]> = Vec::new();
        if !flatten(ctx, branch, &mut c, &mut more) {
            continue;
        }
        more.extend_from_slice(rest);
        if let Some(m) = search(ctx, c, &more) {
            return Some(m);
        }
    }
    None
}

/// Decides satisfiability over the integers. Disjunctions are explored
/// leftmost first, pruning branches whose atoms are already infeasible.
pub fn solve(f: &Formula) -> SatResult {
    let vars: Vec<Var> = f.vars().into_iter().collect();
    let index = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let ctx = Context { vars, index };
    let mut conj = Conj::default();
    let mut pending = Vec::new();
    let found = if flatten(&ctx, f, &mut conj, &mut pending) { search(&ctx, conj, &pending) } else { None };
    match found {
        Some(values) => {
            let model: BTreeMap<Var, i64> = ctx
                .vars
                .iter()
                .zip(values)
                .map(|(&v, x)| (v, i64::try_from(x).expect("model value fits in i64")))
                .collect();
            assert_eq!(f.eval(&model), Some(true), "solver produced an invalid model");
            SatResult { status: SatStatus::Sat, model: Some(model) }
        }
        None => SatResult { status: SatStatus::Unsat, model: None },
    }
}
