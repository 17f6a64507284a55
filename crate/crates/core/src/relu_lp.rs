//! Linear programs with ReLU-equalities, built from a verification instance.

use std::fmt;

use thiserror::Error;

use crate::eval::{eval_layers, EvalError};
use crate::lp::{AffineExpr, LinearProgram, VarId};
use crate::model::{Activation, Instance, Network, Specification, VarRef};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReluLpError {
    #[error("pattern has {found} bits, program has {expected} ReLU-equalities")]
    PatternLength { expected: usize, found: usize },
    #[error("assignment has {found} values, program has {expected} variables")]
    MissingVariable { expected: usize, found: usize },
}

/// One bit per ReLU node in canonical order; `true` means active.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ActivationPattern {
    bits: Vec<bool>,
}

impl ActivationPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        ActivationPattern { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The pattern visited at position `index` when patterns of length `len`
    /// are listed lexicographically with 1 before 0.
    pub fn nth_in_order(len: usize, index: u64) -> Self {
        let bits = (0..len).map(|i| (index >> (len - 1 - i)) & 1 == 0).collect();
        ActivationPattern { bits }
    }
}

impl fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// `ReLU(expr) = target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReluEquality {
    pub expr: AffineExpr,
    pub target: VarId,
}

/// Program variables: inputs first, then every node layer by layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarLayout {
    input_dim: usize,
    offsets: Vec<usize>,
    total: usize,
}

impl VarLayout {
    pub fn of(net: &Network) -> Self {
        let mut offsets = Vec::with_capacity(net.layers().len());
        let mut next = net.input_dim();
        for layer in net.layers() {
            offsets.push(next);
            next += layer.width();
        }
        VarLayout {
            input_dim: net.input_dim(),
            offsets,
            total: next,
        }
    }

    pub fn var_count(&self) -> usize {
        self.total
    }

    pub fn input(&self, i: usize) -> VarId {
        i
    }

    /// Variable of node `node` in computed layer `layer` (1-based).
    pub fn node(&self, layer: usize, node: usize) -> VarId {
        self.offsets[layer - 1] + node
    }

    /// Variable of an entry of layer `layer`, where layer 0 is the input.
    pub fn entry(&self, layer: usize, node: usize) -> VarId {
        if layer == 0 {
            node
        } else {
            self.node(layer, node)
        }
    }

    pub fn output(&self, i: usize) -> VarId {
        self.node(self.offsets.len(), i)
    }

    pub fn spec_var(&self, v: VarRef) -> VarId {
        match v {
            VarRef::Input(i) => self.input(i),
            VarRef::Output(i) => self.output(i),
        }
    }

    pub fn name(&self, v: VarId) -> String {
        if v < self.input_dim {
            return format!("x{v}");
        }
        let l = self.offsets.partition_point(|&o| o <= v);
        format!("n{}_{}", l, v - self.offsets[l - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReluLinearProgram {
    pub layout: VarLayout,
    pub inequalities: Vec<AffineExpr>,
    pub relu_equalities: Vec<ReluEquality>,
}

/// `Σ c·v - bound` for each conjunct.
pub fn spec_rows(layout: &VarLayout, spec: &Specification) -> Vec<AffineExpr> {
    spec.conjuncts
        .iter()
        .map(|c| {
            AffineExpr::new(
                -&c.bound,
                c.terms.iter().map(|(k, v)| (layout.spec_var(*v), k.clone())),
            )
        })
        .collect()
}

/// `bias + Σ w · prev` for node `node` of computed layer `layer`.
pub fn node_expr(net: &Network, layout: &VarLayout, layer: usize, node: usize) -> AffineExpr {
    let n = &net.layers()[layer - 1].nodes[node];
    AffineExpr::new(
        n.bias.clone(),
        n.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (layout.entry(layer - 1, i), w.clone())),
    )
}

pub fn build_program(inst: &Instance) -> ReluLinearProgram {
    let net = &inst.network;
    let layout = VarLayout::of(net);
    let mut inequalities = spec_rows(&layout, &inst.input_spec);
    inequalities.extend(spec_rows(&layout, &inst.output_spec));
    let mut relu_equalities = Vec::with_capacity(net.relu_count());
    for ((l0, i), node) in net.nodes() {
        let layer = l0 + 1;
        let expr = node_expr(net, &layout, layer, i);
        let target = layout.node(layer, i);
        match node.activation {
            Activation::Relu => relu_equalities.push(ReluEquality { expr, target }),
            Activation::Identity => {
                let mut d = expr;
                d.add_scaled(&AffineExpr::var(target), &-Rational::one());
                inequalities.push(d.negated());
                inequalities.push(d);
            }
        }
    }
    ReluLinearProgram {
        layout,
        inequalities,
        relu_equalities,
    }
}

fn push_fixed(rows: &mut Vec<AffineExpr>, eq: &ReluEquality, active: bool) {
    let y = AffineExpr::var(eq.target);
    if active {
        rows.push(eq.expr.negated());
        let mut d = eq.expr.clone();
        d.add_scaled(&y, &-Rational::one());
        rows.push(d.clone());
        rows.push(d.negated());
    } else {
        rows.push(eq.expr.clone());
        rows.push(y.clone());
        rows.push(y.negated());
    }
}

impl ReluLinearProgram {
    pub fn var_count(&self) -> usize {
        self.layout.var_count()
    }

    pub fn relu_count(&self) -> usize {
        self.relu_equalities.len()
    }

    /// Checks every inequality and every ReLU-equality exactly.
    pub fn is_solved_by(&self, assignment: &[Rational]) -> bool {
        assignment.len() == self.var_count()
            && self.inequalities.iter().all(|e| !e.eval(assignment).is_positive())
            && self
                .relu_equalities
                .iter()
                .all(|r| r.expr.eval(assignment).relu() == assignment[r.target])
    }

    pub fn name(&self, v: VarId) -> String {
        self.layout.name(v)
    }

    /// One line per row: inequalities as `expr <= 0`, then
    /// `relu(expr) = var`.
    pub fn listing(&self) -> String {
        let mut s = String::new();
        for e in &self.inequalities {
            s.push_str(&format!("{} <= 0\n", e.display_with(|v| self.name(v))));
        }
        for r in &self.relu_equalities {
            s.push_str(&format!(
                "relu({}) = {}\n",
                r.expr.display_with(|v| self.name(v)),
                self.name(r.target)
            ));
        }
        s
    }

    /// Same format for a linear program over this program's variables.
    pub fn listing_of(&self, lp: &LinearProgram) -> String {
        lp.inequalities
            .iter()
            .map(|e| format!("{} <= 0\n", e.display_with(|v| self.name(v))))
            .collect()
    }
}

/// Replaces each ReLU-equality by the linear rows of its phase.
pub fn fix_pattern(p: &ReluLinearProgram, a: &ActivationPattern) -> Result<LinearProgram, ReluLpError> {
    if a.len() != p.relu_count() {
        return Err(ReluLpError::PatternLength {
            expected: p.relu_count(),
            found: a.len(),
        });
    }
    Ok(fix_prefix(p, a.bits()))
}

/// Fixes the first `bits.len()` ReLU-equalities and drops the others.
pub fn fix_prefix(p: &ReluLinearProgram, bits: &[bool]) -> LinearProgram {
    let mut rows = Vec::with_capacity(p.inequalities.len() + 3 * bits.len());
    rows.extend(p.inequalities.iter().cloned());
    for (eq, &b) in p.relu_equalities.iter().zip(bits) {
        push_fixed(&mut rows, eq, b);
    }
    LinearProgram {
        var_count: p.var_count(),
        inequalities: rows,
    }
}

/// The input coordinates of a full program assignment.
pub fn project_to_inputs(assignment: &[Rational], inst: &Instance) -> Result<Vec<Rational>, ReluLpError> {
    let expected = inst.network.input_dim() + inst.network.node_count();
    if assignment.len() != expected {
        return Err(ReluLpError::MissingVariable {
            expected,
            found: assignment.len(),
        });
    }
    Ok(assignment[..inst.network.input_dim()].to_vec())
}

/// The program assignment induced by evaluating the network on `x`.
pub fn extend_assignment(inst: &Instance, x: &[Rational]) -> Result<Vec<Rational>, EvalError> {
    Ok(eval_layers(&inst.network, x)?.into_iter().flatten().collect())
}
