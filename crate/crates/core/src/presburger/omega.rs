//! Integer feasibility of conjunctions of linear constraints, by exact
//! variable elimination with real/dark shadows and splinters.
//!
//! Arithmetic is `i128` with overflow checks; overflow panics rather than
//! returning a wrong answer.

use std::collections::HashMap;

/// `a·x + c = 0` or `a·x + c ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Row {
    pub a: Vec<i128>,
    pub c: i128,
}

impl Row {
    fn eval(&self, x: &[i128]) -> i128 {
        self.a.iter().zip(x).fold(self.c, |acc, (a, v)| add(acc, mul(*a, *v)))
    }

    fn widen(&mut self, n: usize) {
        self.a.resize(n, 0);
    }
}

fn add(a: i128, b: i128) -> i128 {
    a.checked_add(b).expect("integer overflow in constraint solver")
}

fn mul(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("integer overflow in constraint solver")
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// `a mod^ m`: the residue of `a` in `[-m/2, m/2)`.
fn mod_hat(a: i128, m: i128) -> i128 {
    a - mul(m, floor_div(add(mul(2, a), m), mul(2, m)))
}

/// `row + k·expr`, where `expr` replaces variable `var`.
fn substitute(row: &Row, var: usize, expr: &Row) -> Row {
    let k = row.a[var];
    if k == 0 {
        return row.clone();
    }
    let mut out = row.clone();
    out.a[var] = 0;
    for (o, e) in out.a.iter_mut().zip(&expr.a) {
        *o = add(*o, mul(k, *e));
    }
    out.c = add(out.c, mul(k, expr.c));
    out
}

enum Norm {
    Drop,
    Keep(Row),
    Unsat,
}

fn norm_eq(mut r: Row) -> Norm {
    let g = r.a.iter().fold(0, |g, &v| gcd(g, v));
    if g == 0 {
        return if r.c == 0 { Norm::Drop } else { Norm::Unsat };
    }
    if r.c % g != 0 {
        return Norm::Unsat;
    }
    r.a.iter_mut().for_each(|v| *v /= g);
    r.c /= g;
    Norm::Keep(r)
}

fn norm_geq(mut r: Row) -> Norm {
    let g = r.a.iter().fold(0, |g, &v| gcd(g, v));
    if g == 0 {
        return if r.c >= 0 { Norm::Drop } else { Norm::Unsat };
    }
    r.a.iter_mut().for_each(|v| *v /= g);
    r.c = floor_div(r.c, g);
    Norm::Keep(r)
}

/// Finds an integer point satisfying all `eqs` (`= 0`) and `geqs` (`≥ 0`)
/// over `n` variables, or `None` if there is none.
pub(crate) fn solve(n: usize, eqs: Vec<Row>, geqs: Vec<Row>) -> Option<Vec<i128>> {
    let model = solve_rec(n, eqs.clone(), geqs.clone())?;
    debug_assert!(eqs.iter().all(|r| r.eval(&model) == 0));
    debug_assert!(geqs.iter().all(|r| r.eval(&model) >= 0));
    Some(model)
}

fn solve_rec(n: usize, eqs: Vec<Row>, geqs: Vec<Row>) -> Option<Vec<i128>> {
    let mut neqs = Vec::with_capacity(eqs.len());
    for r in eqs {
        match norm_eq(r) {
            Norm::Drop => {}
            Norm::Keep(r) => neqs.push(r),
            Norm::Unsat => return None,
        }
    }
    let mut ngeqs = Vec::with_capacity(geqs.len());
    for r in geqs {
        match norm_geq(r) {
            Norm::Drop => {}
            Norm::Keep(r) => ngeqs.push(r),
            Norm::Unsat => return None,
        }
    }
    if !neqs.is_empty() {
        return eliminate_equality(n, neqs, ngeqs);
    }
    inequalities(n, ngeqs)
}

fn eliminate_equality(n: usize, mut eqs: Vec<Row>, geqs: Vec<Row>) -> Option<Vec<i128>> {
    // Equality and variable with the smallest nonzero coefficient.
    let (ei, var) = eqs
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.a.iter().enumerate().filter(|(_, a)| **a != 0).map(move |(j, a)| (a.abs(), i, j)))
        .min()
        .map(|(_, i, j)| (i, j))
        .expect("normalized equality has a variable");
    let a_k = eqs[ei].a[var];
    if a_k.abs() == 1 {
        let eq = eqs.swap_remove(ei);
        let expr = unit_solution(&eq, var);
        let eqs = eqs.iter().map(|r| substitute(r, var, &expr)).collect();
        let geqs = geqs.iter().map(|r| substitute(r, var, &expr)).collect();
        let mut model = solve_rec(n, eqs, geqs)?;
        model[var] = expr.eval(&model);
        return Some(model);
    }
    // Introduce sigma with a unit coefficient on `var`, then substitute.
    let m = add(a_k.abs(), 1);
    let sigma = n;
    let eq = &eqs[ei];
    let mut defining = Row { a: eq.a.iter().map(|&a| mod_hat(a, m)).collect(), c: mod_hat(eq.c, m) };
    defining.widen(n + 1);
    defining.a[sigma] = -m;
    debug_assert_eq!(defining.a[var].abs(), 1);
    let expr = unit_solution(&defining, var);
    let widen = |r: &Row| {
        let mut r = r.clone();
        r.widen(n + 1);
        substitute(&r, var, &expr)
    };
    let eqs = eqs.iter().map(widen).collect();
    let geqs = geqs.iter().map(widen).collect();
    let mut model = solve_rec(n + 1, eqs, geqs)?;
    model[var] = expr.eval(&model);
    model.truncate(n);
    Some(model)
}

/// For `eq` with coefficient ±1 on `var`, the expression `var = expr`.
fn unit_solution(eq: &Row, var: usize) -> Row {
    let s = eq.a[var];
    debug_assert!(s == 1 || s == -1);
    let mut expr = Row { a: eq.a.iter().map(|&a| -s * a).collect(), c: -s * eq.c };
    expr.a[var] = 0;
    expr
}

fn inequalities(n: usize, geqs: Vec<Row>) -> Option<Vec<i128>> {
    if geqs.is_empty() {
        return Some(vec![0; n]);
    }
    // Keep the tightest row per coefficient vector and look for opposite pairs.
    let mut tightest: HashMap<Vec<i128>, i128> = HashMap::new();
    for r in &geqs {
        tightest.entry(r.a.clone()).and_modify(|c| *c = (*c).min(r.c)).or_insert(r.c);
    }
    let mut rows: Vec<Row> = Vec::with_capacity(tightest.len());
    for (a, &c) in &tightest {
        let neg: Vec<i128> = a.iter().map(|v| -v).collect();
        if let Some(&c2) = tightest.get(&neg) {
            // a·x ≥ -c and a·x ≤ c2
            if add(c, c2) < 0 {
                return None;
            }
            if add(c, c2) == 0 {
                let eq = Row { a: a.clone(), c };
                let rest = geqs.into_iter().filter(|r| r.a != *a && r.a != neg).collect();
                return solve_rec(n, vec![eq], rest);
            }
        }
        rows.push(Row { a: a.clone(), c });
    }
    rows.sort_by(|x, y| (&x.a, x.c).cmp(&(&y.a, y.c)));

    let var = pick_variable(n, &rows);
    let (lowers, uppers): (Vec<&Row>, Vec<&Row>) = {
        let l = rows.iter().filter(|r| r.a[var] > 0).collect();
        let u = rows.iter().filter(|r| r.a[var] < 0).collect();
        (l, u)
    };
    let others: Vec<Row> = rows.iter().filter(|r| r.a[var] == 0).cloned().collect();

    if lowers.is_empty() || uppers.is_empty() {
        let mut model = solve_rec(n, Vec::new(), others)?;
        model[var] = pick_value(var, &lowers, &uppers, &model);
        return Some(model);
    }

    let exact = lowers.iter().all(|r| r.a[var] == 1) || uppers.iter().all(|r| r.a[var] == -1);
    let shadow = |dark: bool| {
        let mut out = others.clone();
        for l in &lowers {
            for u in &uppers {
                let a = l.a[var];
                let b = -u.a[var];
                let mut row = Row {
                    a: l.a.iter().zip(&u.a).map(|(x, y)| add(mul(b, *x), mul(a, *y))).collect(),
                    c: add(mul(b, l.c), mul(a, u.c)),
                };
                if dark {
                    row.c = add(row.c, -mul(a - 1, b - 1));
                }
                debug_assert_eq!(row.a[var], 0);
                out.push(row);
            }
        }
        out
    };

    if exact {
        let mut model = solve_rec(n, Vec::new(), shadow(false))?;
        model[var] = pick_value(var, &lowers, &uppers, &model);
        return Some(model);
    }
    solve_rec(n, Vec::new(), shadow(false))?;
    if let Some(mut model) = solve_rec(n, Vec::new(), shadow(true)) {
        model[var] = pick_value(var, &lowers, &uppers, &model);
        return Some(model);
    }
    // Splinters: some lower bound is nearly tight.
    let max_b = uppers.iter().map(|u| -u.a[var]).max().expect("uppers nonempty");
    for l in &lowers {
        let a = l.a[var];
        let top = floor_div(add(mul(a, max_b), -add(a, max_b)), max_b);
        for i in 0..=top {
            let eq = Row { a: l.a.clone(), c: add(l.c, -i) };
            if let Some(model) = solve_rec(n, vec![eq], rows.clone()) {
                return Some(model);
            }
        }
    }
    None
}

fn pick_variable(n: usize, rows: &[Row]) -> usize {
    let mut best: Option<((u8, usize), usize)> = None;
    for var in 0..n {
        let lowers: Vec<i128> = rows.iter().map(|r| r.a[var]).filter(|&a| a > 0).collect();
        let uppers: Vec<i128> = rows.iter().map(|r| r.a[var]).filter(|&a| a < 0).collect();
        if lowers.is_empty() && uppers.is_empty() {
            continue;
        }
        let score = if lowers.is_empty() || uppers.is_empty() {
            (0, 0)
        } else if lowers.iter().all(|&a| a == 1) || uppers.iter().all(|&a| a == -1) {
            (1, lowers.len() * uppers.len())
        } else {
            (2, lowers.len() * uppers.len())
        };
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, var));
        }
    }
    best.expect("some row has a variable").1
}

/// Smallest value of `var` within its bounds, or the largest if unbounded below.
fn pick_value(var: usize, lowers: &[&Row], uppers: &[&Row], model: &[i128]) -> i128 {
    let rest = |r: &Row| {
        let mut r = r.clone();
        r.a[var] = 0;
        r.eval(model)
    };
    let lo = lowers.iter().map(|r| ceil_div(-rest(r), r.a[var])).max();
    let hi = uppers.iter().map(|r| floor_div(rest(r), -r.a[var])).min();
    match (lo, hi) {
        (Some(lo), hi) => {
            debug_assert!(hi.is_none_or(|h| lo <= h));
            lo
        }
        (None, Some(hi)) => hi,
        (None, None) => 0,
    }
}
