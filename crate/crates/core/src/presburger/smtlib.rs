//! SMT-LIB 2 text for quantifier-free linear integer arithmetic.

use std::fmt::Write as _;

use super::{Formula, LinearAtom, Var};

fn int(c: i64) -> String {
    if c < 0 {
        format!("(- {})", c.unsigned_abs())
    } else {
        c.to_string()
    }
}

fn atom_term(a: &LinearAtom) -> String {
    let mut terms: Vec<String> =
        a.coeffs.iter().map(|(v, &c)| if c == 1 { v.to_string() } else { format!("(* {} {v})", int(c)) }).collect();
    let lhs = match terms.len() {
        0 => int(a.constant),
        _ => {
            if a.constant != 0 {
                terms.push(int(a.constant));
            }
            if terms.len() == 1 {
                terms.pop().expect("one term")
            } else {
                format!("(+ {})", terms.join(" "))
            }
        }
    };
    format!("({} {lhs} 0)", a.rel.symbol())
}

impl Formula {
    /// The formula as one SMT-LIB term.
    pub fn smt_term(&self) -> String {
        match self {
            Formula::Atom(a) => atom_term(a),
            Formula::And(fs) if fs.is_empty() => "true".into(),
            Formula::Or(fs) if fs.is_empty() => "false".into(),
            Formula::And(fs) => format!("(and {})", fs.iter().map(Formula::smt_term).collect::<Vec<_>>().join(" ")),
            Formula::Or(fs) => format!("(or {})", fs.iter().map(Formula::smt_term).collect::<Vec<_>>().join(" ")),
        }
    }
}

/// A complete problem: declarations (loop counts, auxiliaries, counters),
/// one assertion and `check-sat`.
pub fn to_smtlib(f: &Formula) -> String {
    let mut out = String::from("(set-logic QF_LIA)\n");
    let vars: Vec<Var> = f.vars().into_iter().collect();
    for v in vars {
        let _ = writeln!(out, "(declare-fun {v} () Int)");
    }
    let _ = writeln!(out, "(assert {})", f.smt_term());
    out.push_str("(check-sat)\n");
    out
}

/// Several problems in one script, separated by `(reset)`.
pub fn to_smtlib_script(fs: &[Formula]) -> String {
    fs.iter().map(to_smtlib).collect::<Vec<_>>().join("(reset)\n")
}
