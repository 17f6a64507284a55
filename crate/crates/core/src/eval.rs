//! Exact forward evaluation and specification truth.

use thiserror::Error;

use crate::model::{Activation, Instance, Network, Specification, VarRef};
use crate::rational::Rational;
use crate::relu_lp::ActivationPattern;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("expected {expected} input values, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("variable {0} has no value")]
    Unbound(VarRef),
}

/// Values for the variables of a specification.
#[derive(Debug, Clone, Copy)]
pub struct Valuation<'a> {
    pub inputs: &'a [Rational],
    pub outputs: &'a [Rational],
}

impl<'a> Valuation<'a> {
    pub fn get(&self, var: VarRef) -> Option<&'a Rational> {
        match var {
            VarRef::Input(i) => self.inputs.get(i),
            VarRef::Output(i) => self.outputs.get(i),
        }
    }
}

fn check_dim(net: &Network, x: &[Rational]) -> Result<(), EvalError> {
    if x.len() != net.input_dim() {
        return Err(EvalError::Dimension {
            expected: net.input_dim(),
            found: x.len(),
        });
    }
    Ok(())
}

/// All node values, one vector per layer; index 0 is the input itself.
pub fn eval_layers(net: &Network, x: &[Rational]) -> Result<Vec<Vec<Rational>>, EvalError> {
    check_dim(net, x)?;
    let mut values = Vec::with_capacity(net.layers().len() + 1);
    values.push(x.to_vec());
    for layer in net.layers() {
        let prev = values.last().expect("input layer present");
        let next = layer
            .nodes
            .iter()
            .map(|n| n.activation.apply(n.pre_activation(prev)))
            .collect();
        values.push(next);
    }
    Ok(values)
}

/// `N(x)`.
pub fn eval_network(net: &Network, x: &[Rational]) -> Result<Vec<Rational>, EvalError> {
    Ok(eval_layers(net, x)?.pop().expect("at least one layer"))
}

pub fn spec_holds(spec: &Specification, values: Valuation<'_>) -> Result<bool, EvalError> {
    for c in &spec.conjuncts {
        let mut lhs = Rational::zero();
        for (coeff, var) in &c.terms {
            let v = values.get(*var).ok_or(EvalError::Unbound(*var))?;
            lhs += coeff * v;
        }
        if lhs > c.bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `x` satisfies the input specification and `N(x)` the output one.
pub fn check_witness(inst: &Instance, x: &[Rational]) -> Result<bool, EvalError> {
    let out = eval_network(&inst.network, x)?;
    let values = Valuation {
        inputs: x,
        outputs: &out,
    };
    Ok(spec_holds(&inst.input_spec, values)? && spec_holds(&inst.output_spec, values)?)
}

/// One bit per ReLU node in canonical order: 1 iff its pre-activation is
/// non-negative. A pre-activation of exactly zero maps to 1.
pub fn activation_pattern_of(net: &Network, x: &[Rational]) -> Result<ActivationPattern, EvalError> {
    check_dim(net, x)?;
    let mut bits = Vec::with_capacity(net.relu_count());
    let mut prev = x.to_vec();
    for layer in net.layers() {
        let mut next = Vec::with_capacity(layer.width());
        for node in &layer.nodes {
            let pre = node.pre_activation(&prev);
            if node.activation == Activation::Relu {
                bits.push(!pre.is_negative());
            }
            next.push(node.activation.apply(pre));
        }
        prev = next;
    }
    Ok(ActivationPattern::new(bits))
}
