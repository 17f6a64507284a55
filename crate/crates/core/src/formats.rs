//! Line-oriented text formats for networks, specifications, CNF formulas and
//! verdicts.
//!
//! Network:
//!
//! ```text
//! nn
//! inputs 1
//! layer
//! node relu bias 1/2 weights -1
//! node relu bias -1/2 weights 1
//! layer
//! node id bias -1/2 weights 1 1
//! end
//! ```
//!
//! Specification: one conjunct per line, `1*x0 + -1*x1 <= 0`, with `<=`,
//! `>=` or `=`. Variables are `x<i>` in input specifications and `y<i>` in
//! output specifications. `#` starts a comment in both formats.

use thiserror::Error;

use crate::cnf::{CnfError, CnfFormula};
use crate::model::{Activation, Constraint, Layer, ModelError, Network, Node, Specification, VarRef};
use crate::rational::Rational;
use crate::relu_lp::ActivationPattern;
use crate::search::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments removed, numbered from 1.
fn content_lines(text: &str, comment: char) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(move |(i, l)| {
        let l = l.split(comment).next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn rational(line: usize, token: &str) -> Result<Rational, FormatError> {
    token
        .parse()
        .map_err(|e| syntax(line, format!("bad rational {token:?}: {e}")))
}

pub fn parse_network(text: &str) -> Result<Network, FormatError> {
    let mut lines = content_lines(text, '#');
    let (l, header) = lines.next().ok_or_else(|| syntax(1, "empty document"))?;
    if header != "nn" {
        return Err(syntax(l, "expected `nn`"));
    }
    let (l, inputs) = lines.next().ok_or_else(|| syntax(l, "missing `inputs`"))?;
    let input_dim = match inputs.split_whitespace().collect::<Vec<_>>()[..] {
        ["inputs", n] => n.parse::<usize>().map_err(|_| syntax(l, "bad input count"))?,
        _ => return Err(syntax(l, "expected `inputs <n>`")),
    };
    let mut layers: Vec<Layer> = Vec::new();
    let mut width = input_dim;
    let mut ended = false;
    let mut last = l;
    for (l, line) in lines.by_ref() {
        last = l;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "end" if tokens.len() == 1 => {
                ended = true;
                break;
            }
            "layer" if tokens.len() == 1 => {
                if let Some(prev) = layers.last() {
                    width = prev.width();
                }
                layers.push(Layer::new(Vec::new()));
            }
            "node" => {
                let layer = layers.last_mut().ok_or_else(|| syntax(l, "node before first layer"))?;
                if tokens.len() < 5 || tokens[2] != "bias" || tokens[4] != "weights" {
                    return Err(syntax(l, "expected `node <relu|id> bias <r> weights <r>*`"));
                }
                let activation = match tokens[1] {
                    "relu" => Activation::Relu,
                    "id" => Activation::Identity,
                    other => return Err(syntax(l, format!("unknown activation {other:?}"))),
                };
                let bias = rational(l, tokens[3])?;
                let weights = tokens[5..]
                    .iter()
                    .map(|t| rational(l, t))
                    .collect::<Result<Vec<_>, _>>()?;
                if weights.len() != width {
                    return Err(syntax(
                        l,
                        format!("expected {width} weights, found {}", weights.len()),
                    ));
                }
                layer.nodes.push(Node::new(activation, bias, weights));
            }
            other => return Err(syntax(l, format!("unexpected {other:?}"))),
        }
    }
    if !ended {
        return Err(syntax(last, "missing `end`"));
    }
    if let Some((l, _)) = lines.next() {
        return Err(syntax(l, "content after `end`"));
    }
    Ok(Network::new(input_dim, layers)?)
}

pub fn serialize_network(net: &Network) -> String {
    let mut s = format!("nn\ninputs {}\n", net.input_dim());
    for layer in net.layers() {
        s.push_str("layer\n");
        for node in &layer.nodes {
            let act = match node.activation {
                Activation::Relu => "relu",
                Activation::Identity => "id",
            };
            s.push_str(&format!("node {act} bias {} weights", node.bias));
            for w in &node.weights {
                s.push_str(&format!(" {w}"));
            }
            s.push('\n');
        }
    }
    s.push_str("end\n");
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecRole {
    Input,
    Output,
}

fn parse_var(line: usize, token: &str, role: SpecRole) -> Result<VarRef, FormatError> {
    let (prefix, make): (char, fn(usize) -> VarRef) = match role {
        SpecRole::Input => ('x', VarRef::Input),
        SpecRole::Output => ('y', VarRef::Output),
    };
    let index = token
        .strip_prefix(prefix)
        .and_then(|i| i.parse::<usize>().ok())
        .ok_or_else(|| syntax(line, format!("expected variable {prefix}<i>, found {token:?}")))?;
    Ok(make(index))
}

pub fn parse_spec(text: &str, role: SpecRole) -> Result<Specification, FormatError> {
    let mut spec = Specification::top();
    for (l, line) in content_lines(text, '#') {
        let (lhs, op, rhs) = ["<=", ">=", "="]
            .iter()
            .find_map(|op| line.split_once(op).map(|(a, b)| (a, *op, b)))
            .ok_or_else(|| syntax(l, "expected `<=`, `>=` or `=`"))?;
        let bound = rational(l, rhs.trim())?;
        let mut terms = Vec::new();
        for term in lhs.split('+') {
            let (c, v) = term
                .trim()
                .split_once('*')
                .ok_or_else(|| syntax(l, format!("expected `<coeff>*<var>`, found {:?}", term.trim())))?;
            terms.push((rational(l, c.trim())?, parse_var(l, v.trim(), role)?));
        }
        match op {
            "<=" => spec.push_le(terms, bound),
            ">=" => spec.push_ge(terms, bound),
            _ => spec.push_eq(terms, bound),
        }
    }
    Ok(spec)
}

fn format_conjunct(c: &Constraint, op: &str) -> String {
    let lhs: Vec<String> = c.terms.iter().map(|(k, v)| format!("{k}*{v}")).collect();
    format!("{} {op} {}\n", lhs.join(" + "), c.bound)
}

/// Writes `=` for each adjacent pair that desugars an equality, `<=`
/// otherwise.
pub fn serialize_spec(spec: &Specification) -> String {
    let mut s = String::new();
    let cs = &spec.conjuncts;
    let mut i = 0;
    while i < cs.len() {
        if i + 1 < cs.len() && cs[i + 1] == cs[i].negated() {
            s.push_str(&format_conjunct(&cs[i], "="));
            i += 2;
        } else {
            s.push_str(&format_conjunct(&cs[i], "<="));
            i += 1;
        }
    }
    s
}

/// DIMACS CNF. Clauses shorter than three literals are padded by repeating
/// their last literal.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<[i32; 3]> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last = 1;
    for (i, raw) in text.lines().enumerate() {
        let l = i + 1;
        last = l;
        let line = raw.trim();
        if line.starts_with('%') {
            break;
        }
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(syntax(l, "second header"));
            }
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                ["p", "cnf", n, m] => {
                    let n = n.parse().map_err(|_| syntax(l, "bad variable count"))?;
                    let m = m.parse().map_err(|_| syntax(l, "bad clause count"))?;
                    header = Some((n, m));
                }
                _ => return Err(syntax(l, "expected `p cnf <vars> <clauses>`")),
            }
            continue;
        }
        let (n, _) = header.ok_or_else(|| syntax(l, "clause before header"))?;
        for tok in line.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| syntax(l, format!("bad literal {tok:?}")))?;
            if lit == 0 {
                clauses.push(pad(l, &current)?);
                current.clear();
                continue;
            }
            if lit.unsigned_abs() as usize > n {
                return Err(syntax(l, format!("literal {lit} exceeds {n} variables")));
            }
            current.push(lit);
            if current.len() > 3 {
                return Err(syntax(l, "clause has more than 3 literals"));
            }
        }
    }
    let (n, m) = header.ok_or_else(|| syntax(last, "missing header"))?;
    if !current.is_empty() {
        clauses.push(pad(last, &current)?);
    }
    if clauses.len() != m {
        return Err(syntax(last, format!("header declares {m} clauses, found {}", clauses.len())));
    }
    Ok(CnfFormula::new(n, clauses)?)
}

fn pad(line: usize, lits: &[i32]) -> Result<[i32; 3], FormatError> {
    let &last = lits.last().ok_or_else(|| syntax(line, "empty clause"))?;
    Ok([0, 1, 2].map(|i| lits.get(i).copied().unwrap_or(last)))
}

pub fn serialize_dimacs(cnf: &CnfFormula) -> String {
    let mut s = format!("p cnf {} {}\n", cnf.var_count(), cnf.clause_count());
    for [a, b, c] in cnf.clauses() {
        s.push_str(&format!("{a} {b} {c} 0\n"));
    }
    s
}

/// `UNREACHABLE`, or `REACHABLE` followed by `pattern` and `input` lines.
/// No trailing newline.
pub fn serialize_verdict(v: &Verdict) -> String {
    match v {
        Verdict::Unreachable => "UNREACHABLE".to_string(),
        Verdict::Reachable { input, pattern } => {
            let mut s = String::from("REACHABLE\npattern");
            for b in pattern.bits() {
                s.push_str(if *b { " 1" } else { " 0" });
            }
            s.push_str("\ninput");
            for x in input {
                s.push_str(&format!(" {x}"));
            }
            s
        }
    }
}

/// Ignores `stat` lines, so solver output with statistics parses.
pub fn parse_verdict(text: &str) -> Result<Verdict, FormatError> {
    let lines: Vec<(usize, &str)> = content_lines(text, '#')
        .filter(|(_, l)| !l.starts_with("stat "))
        .collect();
    match lines.as_slice() {
        [(_, "UNREACHABLE")] => Ok(Verdict::Unreachable),
        [(_, "REACHABLE"), (lp, pattern), (li, input)] => {
            let mut pt = pattern.split_whitespace();
            if pt.next() != Some("pattern") {
                return Err(syntax(*lp, "expected `pattern`"));
            }
            let bits = pt
                .map(|t| match t {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    _ => Err(syntax(*lp, format!("bad bit {t:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut it = input.split_whitespace();
            if it.next() != Some("input") {
                return Err(syntax(*li, "expected `input`"));
            }
            let input = it.map(|t| rational(*li, t)).collect::<Result<Vec<_>, _>>()?;
            Ok(Verdict::Reachable {
                input,
                pattern: ActivationPattern::new(bits),
            })
        }
        _ => Err(syntax(1, "expected `UNREACHABLE` or a `REACHABLE` block")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    const BOOL_STAR: &str = "nn\ninputs 1\nlayer\nnode relu bias 1/2 weights -1\nnode relu bias -1/2 weights 1\nlayer\nnode id bias -1/2 weights 1 1\nend\n";

    #[test]
    fn network_round_trip() {
        let net = parse_network(BOOL_STAR).unwrap();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.layers().len(), 2);
        assert_eq!(serialize_network(&net), BOOL_STAR);
        let commented = "# gadget\nnn\ninputs 1 # one\n\nlayer\nnode id bias 0 weights 1\nend\n";
        assert_eq!(parse_network(commented).unwrap().relu_count(), 0);
    }

    #[test]
    fn network_errors() {
        let relu_out = "nn\ninputs 1\nlayer\nnode relu bias 0 weights 1\nend\n";
        assert_eq!(
            parse_network(relu_out),
            Err(FormatError::Model(ModelError::ReluOutput { node: 0 }))
        );
        let dims = "nn\ninputs 2\nlayer\nnode id bias 0 weights 1\nend\n";
        assert!(matches!(parse_network(dims), Err(FormatError::Syntax { line: 4, .. })));
        assert!(parse_network("nn\ninputs 1\nlayer\nnode id bias 0 weights 1\n").is_err());
        assert!(matches!(
            parse_network("nn\ninputs 1\nlayer\nnode id bias x weights 1\nend"),
            Err(FormatError::Syntax { line: 4, .. })
        ));
    }

    #[test]
    fn spec_parsing() {
        let s = parse_spec("1*x0 >= 0\n1*x0 <= 1\n", SpecRole::Input).unwrap();
        assert_eq!(s.conjuncts.len(), 2);
        assert!(s.is_simple());
        let eq = parse_spec("1*y0 = 3", SpecRole::Output).unwrap();
        assert_eq!(
            eq.conjuncts,
            vec![
                Constraint::single(q(1, 1), VarRef::Output(0), q(3, 1)),
                Constraint::single(q(-1, 1), VarRef::Output(0), q(-3, 1)),
            ]
        );
        assert_eq!(serialize_spec(&eq), "1*y0 = 3\n");
        let pair = parse_spec("1*x0 + -1*x1 <= 0", SpecRole::Input).unwrap();
        assert!(!pair.is_simple());
        assert!(parse_spec("1*y0 <= 0", SpecRole::Input).is_err());
        assert!(parse_spec("y0 <= 0", SpecRole::Output).is_err());
        assert!(parse_spec("1*y0 <= z", SpecRole::Output).is_err());
        assert!(parse_spec("", SpecRole::Output).unwrap().is_top());
    }

    #[test]
    fn dimacs() {
        let psi = parse_dimacs("c example\np cnf 4 3\n1 2 2 0\n-1 2 -3 0\n-2 3 4 0\n").unwrap();
        assert_eq!(psi, CnfFormula::example());
        assert_eq!(parse_dimacs(&serialize_dimacs(&psi)).unwrap(), psi);
        assert_eq!(parse_dimacs("p cnf 1 1\n1 0\n").unwrap().clauses(), &[[1, 1, 1]]);
        assert_eq!(parse_dimacs("p cnf 2 1\n1 -2\n0\n").unwrap().clauses(), &[[1, -2, -2]]);
        assert!(parse_dimacs("p cnf 2 1\n1 2 -1 -2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n0\n").is_err());
        assert!(parse_dimacs("p cnf x 1\n1 0\n").is_err());
        assert_eq!(parse_dimacs("p cnf 2 1\n1 2 0\n%\n0\n").unwrap().clause_count(), 1);
    }

    #[test]
    fn verdicts() {
        assert_eq!(serialize_verdict(&Verdict::Unreachable), "UNREACHABLE");
        let v = Verdict::Reachable {
            input: vec![q(1, 1)],
            pattern: ActivationPattern::new(vec![true, false]),
        };
        assert_eq!(serialize_verdict(&v), "REACHABLE\npattern 1 0\ninput 1");
        assert_eq!(parse_verdict(&serialize_verdict(&v)).unwrap(), v);
        let empty = Verdict::Reachable {
            input: vec![q(-1, 3)],
            pattern: ActivationPattern::default(),
        };
        assert_eq!(parse_verdict(&serialize_verdict(&empty)).unwrap(), empty);
        assert!(parse_verdict("MAYBE").is_err());
    }
}
