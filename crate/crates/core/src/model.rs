//! Networks, specifications and reachability instances.

use std::fmt;

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("network must have at least one input")]
    NoInputs,
    #[error("network must have at least one layer")]
    NoLayers,
    #[error("layer {layer} is empty")]
    EmptyLayer { layer: usize },
    #[error("node {node} of layer {layer} has {found} weights, expected {expected}")]
    WeightCount {
        layer: usize,
        node: usize,
        expected: usize,
        found: usize,
    },
    #[error("output node {node} uses ReLU activation; output nodes must be identity")]
    ReluOutput { node: usize },
    #[error("constraint has no terms")]
    EmptyConstraint,
    #[error("specification mixes input and output variables")]
    MixedSpecification,
    #[error("{role} specification refers to {var}, which is out of range or of the wrong kind")]
    BadVariable { role: &'static str, var: VarRef },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, v: Rational) -> Rational {
        match self {
            Activation::Relu => v.relu(),
            Activation::Identity => v,
        }
    }
}

/// One node: `activation(bias + Σ weights[j] · prev[j])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub activation: Activation,
    pub bias: Rational,
    /// One entry per node of the preceding layer; absent edges are explicit zeros.
    pub weights: Vec<Rational>,
}

impl Node {
    pub fn new(activation: Activation, bias: Rational, weights: Vec<Rational>) -> Self {
        Node {
            activation,
            bias,
            weights,
        }
    }

    /// Pre-activation value given the previous layer's outputs.
    pub fn pre_activation(&self, prev: &[Rational]) -> Rational {
        let mut acc = self.bias.clone();
        for (w, v) in self.weights.iter().zip(prev) {
            if !w.is_zero() && !v.is_zero() {
                acc += w * v;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub nodes: Vec<Node>,
}

impl Layer {
    pub fn new(nodes: Vec<Node>) -> Self {
        Layer { nodes }
    }

    pub fn width(&self) -> usize {
        self.nodes.len()
    }
}

/// Position of a ReLU node: `(layer index, node index)`, layers counted from
/// zero excluding the input layer.
pub type NodePos = (usize, usize);

/// A layered feed-forward network. The input layer is implicit; `layers`
/// holds the hidden layers followed by the output layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, ModelError> {
        if input_dim == 0 {
            return Err(ModelError::NoInputs);
        }
        if layers.is_empty() {
            return Err(ModelError::NoLayers);
        }
        let mut prev = input_dim;
        for (li, layer) in layers.iter().enumerate() {
            if layer.nodes.is_empty() {
                return Err(ModelError::EmptyLayer { layer: li });
            }
            for (ni, node) in layer.nodes.iter().enumerate() {
                if node.weights.len() != prev {
                    return Err(ModelError::WeightCount {
                        layer: li,
                        node: ni,
                        expected: prev,
                        found: node.weights.len(),
                    });
                }
            }
            prev = layer.width();
        }
        let last = layers.last().expect("non-empty");
        if let Some(node) = last
            .nodes
            .iter()
            .position(|n| n.activation != Activation::Identity)
        {
            return Err(ModelError::ReluOutput { node });
        }
        Ok(Network { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").width()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Width of layer `l` where `l = 0` is the input layer.
    pub fn width_with_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else {
            self.layers[l - 1].width()
        }
    }

    /// Nodes excluding inputs.
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    pub fn relu_count(&self) -> usize {
        self.nodes()
            .filter(|(_, n)| n.activation == Activation::Relu)
            .count()
    }

    /// ReLU nodes in canonical (layer-major, node-minor) order. This order
    /// fixes the bit order of activation patterns.
    pub fn relu_positions(&self) -> Vec<NodePos> {
        self.nodes()
            .filter(|(_, n)| n.activation == Activation::Relu)
            .map(|(pos, _)| pos)
            .collect()
    }

    /// All nodes with their positions, layer-major.
    pub fn nodes(&self) -> impl Iterator<Item = (NodePos, &Node)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| layer.nodes.iter().enumerate().map(move |(i, n)| ((l, i), n)))
    }

    /// Every weight and bias appearing in the network, deduplicated and sorted.
    pub fn constant_set(&self) -> Vec<Rational> {
        let mut all: Vec<Rational> = self
            .nodes()
            .flat_map(|(_, n)| n.weights.iter().chain(std::iter::once(&n.bias)).cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

/// A variable of an input or output specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Input(usize),
    Output(usize),
}

impl VarRef {
    pub fn index(self) -> usize {
        match self {
            VarRef::Input(i) | VarRef::Output(i) => i,
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Input(i) => write!(f, "x{i}"),
            VarRef::Output(i) => write!(f, "y{i}"),
        }
    }
}

/// `Σ coeff · var ≤ bound`. `≥` and `=` are desugared into this form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(Rational, VarRef)>,
    pub bound: Rational,
}

impl Constraint {
    pub fn new(terms: Vec<(Rational, VarRef)>, bound: Rational) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::EmptyConstraint);
        }
        Ok(Constraint { terms, bound })
    }

    /// Single-term constraint `coeff · var ≤ bound`.
    pub fn single(coeff: Rational, var: VarRef, bound: Rational) -> Self {
        Constraint {
            terms: vec![(coeff, var)],
            bound,
        }
    }

    /// `-t ≤ -b`, i.e. `t ≥ b`.
    pub fn negated(&self) -> Self {
        Constraint {
            terms: self.terms.iter().map(|(c, v)| (-c, *v)).collect(),
            bound: -&self.bound,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = VarRef> + '_ {
        self.terms.iter().map(|(_, v)| *v)
    }

    fn is_single_variable(&self) -> bool {
        let first = self.terms[0].1;
        self.terms.iter().all(|(_, v)| *v == first)
    }
}

/// A conjunction of linear constraints; the empty conjunction is ⊤.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Specification {
    pub conjuncts: Vec<Constraint>,
}

impl Specification {
    pub fn top() -> Self {
        Specification::default()
    }

    pub fn new(conjuncts: Vec<Constraint>) -> Result<Self, ModelError> {
        let spec = Specification { conjuncts };
        let mut kinds = spec
            .conjuncts
            .iter()
            .flat_map(Constraint::vars)
            .map(|v| matches!(v, VarRef::Input(_)));
        let mixed = match kinds.next() {
            Some(first) => kinds.any(|k| k != first),
            None => false,
        };
        drop(kinds);
        if mixed {
            return Err(ModelError::MixedSpecification);
        }
        Ok(spec)
    }

    /// Adds `t ≤ b` and `-t ≤ -b`.
    pub fn push_eq(&mut self, terms: Vec<(Rational, VarRef)>, bound: Rational) {
        let c = Constraint { terms, bound };
        let n = c.negated();
        self.conjuncts.push(c);
        self.conjuncts.push(n);
    }

    pub fn push_le(&mut self, terms: Vec<(Rational, VarRef)>, bound: Rational) {
        self.conjuncts.push(Constraint { terms, bound });
    }

    /// Adds `-t ≤ -b`.
    pub fn push_ge(&mut self, terms: Vec<(Rational, VarRef)>, bound: Rational) {
        self.conjuncts.push(Constraint { terms, bound }.negated());
    }

    pub fn is_top(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Every conjunct constrains exactly one variable. The two halves of a
    /// desugared `=` are each single-variable whenever the original was.
    pub fn is_simple(&self) -> bool {
        self.conjuncts.iter().all(Constraint::is_single_variable)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarRef> + '_ {
        self.conjuncts.iter().flat_map(Constraint::vars)
    }
}

/// A reachability question: is there an input satisfying `input_spec`
/// whose network output satisfies `output_spec`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub network: Network,
    pub input_spec: Specification,
    pub output_spec: Specification,
}

impl Instance {
    pub fn new(
        network: Network,
        input_spec: Specification,
        output_spec: Specification,
    ) -> Result<Self, ModelError> {
        for var in input_spec.vars() {
            match var {
                VarRef::Input(i) if i < network.input_dim() => {}
                _ => return Err(ModelError::BadVariable { role: "input", var }),
            }
        }
        for var in output_spec.vars() {
            match var {
                VarRef::Output(i) if i < network.output_dim() => {}
                _ => return Err(ModelError::BadVariable { role: "output", var }),
            }
        }
        Ok(Instance {
            network,
            input_spec,
            output_spec,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn id(bias: Rational, weights: Vec<Rational>) -> Node {
        Node::new(Activation::Identity, bias, weights)
    }

    fn relu(bias: Rational, weights: Vec<Rational>) -> Node {
        Node::new(Activation::Relu, bias, weights)
    }

    #[test]
    fn rejects_relu_output() {
        let err = Network::new(1, vec![Layer::new(vec![relu(q(0, 1), vec![q(1, 1)])])]);
        assert_eq!(err, Err(ModelError::ReluOutput { node: 0 }));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = Network::new(
            2,
            vec![Layer::new(vec![id(q(0, 1), vec![q(1, 1)])])],
        );
        assert!(matches!(err, Err(ModelError::WeightCount { expected: 2, found: 1, .. })));
        assert_eq!(Network::new(0, vec![]), Err(ModelError::NoInputs));
        assert_eq!(Network::new(1, vec![]), Err(ModelError::NoLayers));
    }

    #[test]
    fn relu_positions_are_layer_major() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![relu(q(0, 1), vec![q(1, 1)]), id(q(0, 1), vec![q(1, 1)]), relu(q(0, 1), vec![q(1, 1)])]),
                Layer::new(vec![relu(q(0, 1), vec![q(1, 1), q(1, 1), q(1, 1)])]),
                Layer::new(vec![id(q(0, 1), vec![q(1, 1)])]),
            ],
        )
        .unwrap();
        assert_eq!(net.relu_positions(), vec![(0, 0), (0, 2), (1, 0)]);
        assert_eq!(net.relu_count(), 3);
        assert_eq!(net.node_count(), 5);
    }

    #[test]
    fn simplicity() {
        let single = Specification::new(vec![Constraint::single(q(2, 1), VarRef::Input(0), q(1, 1))]).unwrap();
        assert!(single.is_simple());
        let two = Specification::new(vec![Constraint::new(
            vec![(q(1, 1), VarRef::Input(0)), (q(1, 1), VarRef::Input(1))],
            q(0, 1),
        )
        .unwrap()])
        .unwrap();
        assert!(!two.is_simple());
        assert!(Specification::top().is_simple());
        let mut eq = Specification::top();
        eq.push_eq(vec![(q(1, 1), VarRef::Output(0))], q(1, 1));
        assert!(eq.is_simple());
        assert_eq!(eq.conjuncts.len(), 2);
    }

    #[test]
    fn rejects_mixed_and_out_of_range_specs() {
        let mixed = Specification::new(vec![Constraint::new(
            vec![(q(1, 1), VarRef::Input(0)), (q(1, 1), VarRef::Output(0))],
            q(0, 1),
        )
        .unwrap()]);
        assert_eq!(mixed, Err(ModelError::MixedSpecification));

        let net = Network::new(1, vec![Layer::new(vec![id(q(0, 1), vec![q(1, 1)])])]).unwrap();
        let bad = Specification::new(vec![Constraint::single(q(1, 1), VarRef::Input(3), q(0, 1))]).unwrap();
        assert!(Instance::new(net.clone(), bad, Specification::top()).is_err());
        let wrong_kind = Specification::new(vec![Constraint::single(q(1, 1), VarRef::Output(0), q(0, 1))]).unwrap();
        assert!(Instance::new(net, wrong_kind, Specification::top()).is_err());
    }
}
