//! Reusable network fragments with named ports.

use crate::eval::eval_network;
use crate::model::Activation;
use crate::rational::Rational;

use super::graph::{normalize_layered, NetworkGraph, Src};
use super::ReductionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    In(usize),
    Local(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetNode {
    pub activation: Activation,
    pub bias: Rational,
    pub inputs: Vec<(Port, Rational)>,
    /// Layer relative to the deepest bound input.
    pub pin: Option<isize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub name: String,
    pub inputs: Vec<String>,
    pub nodes: Vec<GadgetNode>,
    pub outputs: Vec<(String, usize)>,
}

struct Builder {
    nodes: Vec<GadgetNode>,
}

impl Builder {
    fn new() -> Self {
        Builder { nodes: Vec::new() }
    }

    fn node(&mut self, activation: Activation, bias: Rational, inputs: Vec<(Port, Rational)>, pin: Option<isize>) -> Port {
        self.nodes.push(GadgetNode {
            activation,
            bias,
            inputs,
            pin,
        });
        Port::Local(self.nodes.len() - 1)
    }

    fn relu(&mut self, bias: Rational, inputs: Vec<(Port, Rational)>) -> Port {
        self.node(Activation::Relu, bias, inputs, None)
    }

    fn id(&mut self, bias: Rational, inputs: Vec<(Port, Rational)>) -> Port {
        self.node(Activation::Identity, bias, inputs, None)
    }

    /// Constant `bias` on layer `pin` relative to the gadget's inputs.
    fn constant(&mut self, bias: Rational, pin: isize) -> Port {
        self.node(Activation::Identity, bias, Vec::new(), Some(pin))
    }

    fn finish(self, name: &str, inputs: &[&str], outputs: &[(&str, Port)]) -> Gadget {
        Gadget {
            name: name.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            nodes: self.nodes,
            outputs: outputs
                .iter()
                .map(|(n, p)| match p {
                    Port::Local(j) => (n.to_string(), *j),
                    Port::In(_) => panic!("outputs are gadget nodes"),
                })
                .collect(),
        }
    }
}

impl Gadget {
    /// Every bias and every nonzero weight.
    pub fn constants(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self
            .nodes
            .iter()
            .flat_map(|n| std::iter::once(n.bias.clone()).chain(n.inputs.iter().map(|(_, w)| w.clone())))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn relu_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.activation == Activation::Relu).count()
    }

    /// Output values on the given port values.
    pub fn eval(&self, x: &[Rational]) -> Vec<Rational> {
        let mut g = NetworkGraph::new(self.inputs.len());
        let bind: Vec<Src> = (0..self.inputs.len()).map(Src::Input).collect();
        g.outputs = g.instantiate(self, &bind);
        let n = normalize_layered(&g).expect("gadgets form valid networks");
        eval_network(&n.network, x).expect("port count matches")
    }
}

fn half() -> Rational {
    Rational::new(1, 2)
}

/// `z = max(0, 1/2 - x) + max(0, x - 1/2) - 1/2`, zero exactly at 0 and 1.
pub fn bool_star() -> Gadget {
    let mut b = Builder::new();
    let x = Port::In(0);
    let r1 = b.relu(half(), vec![(x, -Rational::one())]);
    let r2 = b.relu(-half(), vec![(x, Rational::one())]);
    let z = b.id(-half(), vec![(r1, Rational::one()), (r2, Rational::one())]);
    b.finish("bool*", &["x"], &[("z", z)])
}

/// `z = max(0, ε - x) + max(0, x - 1 + ε)`, which also vanishes at `x = 2ε`.
pub fn flawed_bool(eps: &Rational) -> Result<Gadget, ReductionError> {
    if !eps.is_positive() || *eps > half() {
        return Err(ReductionError::Epsilon(eps.clone()));
    }
    let mut b = Builder::new();
    let x = Port::In(0);
    let r1 = b.relu(eps.clone(), vec![(x, -Rational::one())]);
    let r2 = b.relu(eps - Rational::one(), vec![(x, Rational::one())]);
    let z = b.id(Rational::zero(), vec![(r1, Rational::one()), (r2, Rational::one())]);
    Ok(b.finish("flawed-bool", &["x"], &[("z", z)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BooleanKind {
    Not,
    /// `1 - max(0, 1 - Σ x)`.
    Or(usize),
    /// Plain sum.
    And(usize),
}

fn port_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn finish_named(b: Builder, name: &str, inputs: &[String], outputs: &[(&str, Port)]) -> Gadget {
    let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
    b.finish(name, &refs, outputs)
}

pub fn boolean(kind: BooleanKind) -> Gadget {
    let mut b = Builder::new();
    match kind {
        BooleanKind::Not => {
            let out = b.id(Rational::one(), vec![(Port::In(0), -Rational::one())]);
            b.finish("not", &["x"], &[("out", out)])
        }
        BooleanKind::Or(k) => {
            let o = b.relu(Rational::one(), (0..k).map(|i| (Port::In(i), -Rational::one())).collect());
            let out = b.id(Rational::one(), vec![(o, -Rational::one())]);
            finish_named(b, "or", &port_names("x", k), &[("out", out)])
        }
        BooleanKind::And(k) => {
            let out = b.id(Rational::zero(), (0..k).map(|i| (Port::In(i), Rational::one())).collect());
            finish_named(b, "and", &port_names("x", k), &[("out", out)])
        }
    }
}

pub fn or3() -> Gadget {
    boolean(BooleanKind::Or(3))
}

/// Gadgets over the constants `{-c, 0, d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestrictedKind {
    /// `d - c·max(0, d·x0) - c·max(0, -c·x1)`.
    Disc,
    /// `-c·(d - c·max(0, -c·x0))`.
    Norm,
    /// `-c·max(0, c²·x0)`.
    NormBar,
    /// Ports `pos = max(0, d·(x + x̄))` and `neg = max(0, -c·(x + x̄))`; both
    /// vanish iff `x + x̄ = 0`.
    Eq0,
    /// `dc⁴ - c·max(0, dc² + c²·Σ x)`.
    OrA(usize),
    /// `dc⁴ - c·max(0, dc⁴ + c²·Σ x)`.
    OrB(usize),
    /// `d·Σ x`.
    AndR(usize),
}

pub fn check_positive(name: &'static str, v: &Rational) -> Result<(), ReductionError> {
    if v.is_positive() {
        Ok(())
    } else {
        Err(ReductionError::NonPositive { name, value: v.clone() })
    }
}

pub fn restricted(kind: RestrictedKind, c: &Rational, d: &Rational) -> Result<Gadget, ReductionError> {
    check_positive("c", c)?;
    check_positive("d", d)?;
    let mc = -c;
    let zero = Rational::zero;
    let mut b = Builder::new();
    let g = match kind {
        RestrictedKind::Disc => {
            let a = b.relu(zero(), vec![(Port::In(0), d.clone())]);
            let n = b.relu(zero(), vec![(Port::In(1), mc.clone())]);
            let out = b.id(d.clone(), vec![(a, mc.clone()), (n, mc.clone())]);
            b.finish("disc", &["x0", "x1"], &[("out", out)])
        }
        RestrictedKind::Norm => {
            let a = b.relu(zero(), vec![(Port::In(0), mc.clone())]);
            let u = b.id(d.clone(), vec![(a, mc.clone())]);
            let out = b.id(zero(), vec![(u, mc.clone())]);
            b.finish("norm", &["x0"], &[("out", out)])
        }
        RestrictedKind::NormBar => {
            let t = b.id(zero(), vec![(Port::In(0), mc.clone())]);
            let a = b.relu(zero(), vec![(t, mc.clone())]);
            let out = b.id(zero(), vec![(a, mc.clone())]);
            b.finish("norm-bar", &["x0"], &[("out", out)])
        }
        RestrictedKind::Eq0 => {
            let pos = b.relu(zero(), vec![(Port::In(0), d.clone()), (Port::In(1), d.clone())]);
            let neg = b.relu(zero(), vec![(Port::In(0), mc.clone()), (Port::In(1), mc.clone())]);
            b.finish("eq0", &["x", "xbar"], &[("pos", pos), ("neg", neg)])
        }
        RestrictedKind::OrA(k) | RestrictedKind::OrB(k) => {
            // offset constant: d (OR_A) or c²d (OR_B) on the inputs' layer
            let k_node = if matches!(kind, RestrictedKind::OrA(_)) {
                b.constant(d.clone(), 0)
            } else {
                let k0 = b.constant(d.clone(), -2);
                let k1 = b.id(zero(), vec![(k0, mc.clone())]);
                b.id(zero(), vec![(k1, mc.clone())])
            };
            let mut s_in: Vec<(Port, Rational)> = (0..k).map(|i| (Port::In(i), mc.clone())).collect();
            s_in.push((k_node, mc.clone()));
            let s = b.id(zero(), s_in);
            let r = b.relu(zero(), vec![(s, mc.clone())]);
            // -c³d, arriving next to r
            let w0 = b.constant(d.clone(), -1);
            let w1 = b.id(zero(), vec![(w0, mc.clone())]);
            let w2 = b.id(zero(), vec![(w1, mc.clone())]);
            let w3 = b.id(zero(), vec![(w2, mc.clone())]);
            let out = b.id(zero(), vec![(r, mc.clone()), (w3, mc.clone())]);
            let name = if matches!(kind, RestrictedKind::OrA(_)) { "or-a" } else { "or-b" };
            finish_named(b, name, &port_names("x", k), &[("out", out)])
        }
        RestrictedKind::AndR(k) => {
            let out = b.id(zero(), (0..k).map(|i| (Port::In(i), d.clone())).collect());
            finish_named(b, "and-r", &port_names("x", k), &[("out", out)])
        }
    };
    Ok(g)
}
