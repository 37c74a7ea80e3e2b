//! Line-oriented text format for thread transition diagrams.
//!
//! ```text
//! # comment
//! shared 2
//! local 1
//! initial 0 0
//! target 1 0
//! 0 0 -> 1 0      # real edge
//! 0 0 +> 1 0      # spawn edge
//! ```
//!
//! Directives come before the first edge line, in any order. There may be
//! several `initial` lines but exactly one `target` line.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Edge, EdgeKind, ModelError, ThreadState, Ttd};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("missing `{0}` directive")]
    Missing(&'static str),
}

/// A parsed diagram plus non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub ttd: Ttd,
    pub warnings: Vec<String>,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &line[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &line[s..], column: s + 1 });
    }
    tokens
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column, message: message.into() }
}

fn number(tok: &Token<'_>, line: usize) -> Result<usize, ParseError> {
    if !tok.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax(line, tok.column, format!("expected a decimal index, found `{}`", tok.text)));
    }
    tok.text.parse().map_err(|_| syntax(line, tok.column, format!("index `{}` too large", tok.text)))
}

fn expect_arity(tokens: &[Token<'_>], n: usize, line: usize, what: &str) -> Result<(), ParseError> {
    match tokens.len().cmp(&n) {
        std::cmp::Ordering::Equal => Ok(()),
        std::cmp::Ordering::Less => {
            let col = tokens.last().map_or(1, |t| t.column + t.text.len());
            Err(syntax(line, col, format!("`{what}` expects {} argument(s)", n - 1)))
        }
        std::cmp::Ordering::Greater => {
            Err(syntax(line, tokens[n].column, format!("unexpected token `{}`", tokens[n].text)))
        }
    }
}

fn positive(tok: &Token<'_>, line: usize) -> Result<usize, ParseError> {
    let n = number(tok, line)?;
    if n == 0 {
        return Err(syntax(line, tok.column, "state count must be positive"));
    }
    Ok(n)
}

fn check_state(state: ThreadState, line: usize, shared: Option<usize>, local: Option<usize>) -> Result<(), ParseError> {
    let (Some(s), Some(l)) = (shared, local) else {
        return Ok(());
    };
    if state.shared >= s || state.local >= l {
        return Err(ParseError::Invalid { line, source: ModelError::OutOfRange { state, shared: s, local: l } });
    }
    Ok(())
}

/// Parses the text format, validating indices and deduplicating edges.
pub fn parse_ttd(text: &str) -> Result<Parsed, ParseError> {
    let mut shared: Option<usize> = None;
    let mut local: Option<usize> = None;
    let mut initial: Vec<(ThreadState, usize)> = Vec::new();
    let mut target: Option<(ThreadState, usize)> = None;
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut seen_edge = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(head) = tokens.first() else {
            continue;
        };
        match head.text {
            "shared" | "local" | "initial" | "target" if seen_edge => {
                return Err(syntax(lineno, head.column, format!("`{}` directive after first edge line", head.text)));
            }
            "shared" | "local" => {
                expect_arity(&tokens, 2, lineno, head.text)?;
                let n = positive(&tokens[1], lineno)?;
                let slot = if head.text == "shared" { &mut shared } else { &mut local };
                if slot.is_some() {
                    return Err(syntax(lineno, head.column, format!("duplicate `{}` directive", head.text)));
                }
                *slot = Some(n);
            }
            "initial" | "target" => {
                expect_arity(&tokens, 3, lineno, head.text)?;
                let state = ThreadState::new(number(&tokens[1], lineno)?, number(&tokens[2], lineno)?);
                if head.text == "initial" {
                    initial.push((state, lineno));
                } else {
                    if target.is_some() {
                        return Err(syntax(lineno, head.column, "only one `target` directive is allowed"));
                    }
                    target = Some((state, lineno));
                }
            }
            _ => {
                seen_edge = true;
                expect_arity(&tokens, 5, lineno, "edge")?;
                let kind = match tokens[2].text {
                    "->" => EdgeKind::Real,
                    "+>" => EdgeKind::Spawn,
                    other => {
                        return Err(syntax(
                            lineno,
                            tokens[2].column,
                            format!("expected `->` or `+>`, found `{other}`"),
                        ));
                    }
                };
                let source = ThreadState::new(number(&tokens[0], lineno)?, number(&tokens[1], lineno)?);
                let dest = ThreadState::new(number(&tokens[3], lineno)?, number(&tokens[4], lineno)?);
                if shared.is_none() || local.is_none() {
                    return Err(ParseError::Missing(if shared.is_none() { "shared" } else { "local" }));
                }
                check_state(source, lineno, shared, local)?;
                check_state(dest, lineno, shared, local)?;
                let edge = Edge { source, target: dest, kind };
                if !edges.insert(edge) {
                    warnings.push(format!("line {lineno}: duplicate edge {edge} ignored"));
                }
            }
        }
    }

    let shared = shared.ok_or(ParseError::Missing("shared"))?;
    let local = local.ok_or(ParseError::Missing("local"))?;
    let (target, target_line) = target.ok_or(ParseError::Missing("target"))?;
    if initial.is_empty() {
        return Err(ParseError::Missing("initial"));
    }
    for &(state, line) in &initial {
        check_state(state, line, Some(shared), Some(local))?;
    }
    check_state(target, target_line, Some(shared), Some(local))?;

    let ttd = Ttd::new(shared, local, edges, initial.into_iter().map(|(s, _)| s), target)
        .map_err(|source| ParseError::Invalid { line: 0, source })?;
    Ok(Parsed { ttd, warnings })
}

/// Canonical text form: directives, then edges in ascending order.
pub fn serialize_ttd(d: &Ttd) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "shared {}", d.shared_count());
    let _ = writeln!(out, "local {}", d.local_count());
    for t in d.initial_states() {
        let _ = writeln!(out, "initial {} {}", t.shared, t.local);
    }
    let t = d.target();
    let _ = writeln!(out, "target {} {}", t.shared, t.local);
    for e in d.edges() {
        let arrow = match e.kind {
            EdgeKind::Real => "->",
            EdgeKind::Spawn => "+>",
        };
        let _ =
            writeln!(out, "{} {} {} {} {}", e.source.shared, e.source.local, arrow, e.target.shared, e.target.local);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_diagram() {
        let p = parse_ttd("shared 2\nlocal 1\ninitial 0 0\ntarget 1 0\n0 0 -> 1 0\n").unwrap();
        assert!(p.warnings.is_empty());
        let e: Vec<_> = p.ttd.edges().iter().copied().collect();
        assert_eq!(e, vec![Edge::real(ThreadState::new(0, 0), ThreadState::new(1, 0))]);
    }

    #[test]
    fn out_of_range_local() {
        let err = parse_ttd("shared 1\nlocal 1\ninitial 0 0\ntarget 0 0\n0 5 -> 0 0\n").unwrap_err();
        match err {
            ParseError::Invalid { line, source: ModelError::OutOfRange { state, .. } } => {
                assert_eq!(line, 5);
                assert_eq!(state.local, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_directives() {
        assert_eq!(parse_ttd("shared 1\nlocal 1\ninitial 0 0\n").unwrap_err(), ParseError::Missing("target"));
        assert_eq!(parse_ttd("shared 1\nlocal 1\ntarget 0 0\n").unwrap_err(), ParseError::Missing("initial"));
    }

    #[test]
    fn syntax_error_reports_column() {
        let err = parse_ttd("shared 2\nlocal 1\ninitial 0 0\ntarget 1 0\n0 0 => 1 0\n").unwrap_err();
        assert_eq!(err, ParseError::Syntax { line: 5, column: 5, message: "expected `->` or `+>`, found `=>`".into() });
        let err = parse_ttd("shared x\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, column: 8, .. }));
    }

    #[test]
    fn second_target_rejected() {
        let err = parse_ttd("shared 2\nlocal 1\ninitial 0 0\ntarget 1 0\ntarget 0 0\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 5, .. }));
    }

    #[test]
    fn directive_after_edge_rejected() {
        let err = parse_ttd("shared 2\nlocal 1\ninitial 0 0\n0 0 -> 1 0\ntarget 1 0\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 5, column: 1, .. }));
    }

    #[test]
    fn duplicates_warn_and_comments_ignored() {
        let text = "# header\nlocal 1\nshared 2\n\ntarget 1 0\ninitial 0 0\n0 0 -> 1 0 # first\n0 0 -> 1 0\n";
        let p = parse_ttd(text).unwrap();
        assert_eq!(p.ttd.edges().len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn serialize_sorts_and_keeps_spawn() {
        let text = "shared 2\nlocal 2\ninitial 0 0\ntarget 1 1\n1 0 -> 1 1\n0 0 +> 1 0\n";
        let out = serialize_ttd(&parse_ttd(text).unwrap().ttd);
        assert_eq!(out, "shared 2\nlocal 2\ninitial 0 0\ntarget 1 1\n0 0 +> 1 0\n1 0 -> 1 1\n");
    }
}
