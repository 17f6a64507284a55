//! Networks as DAGs of nodes with arbitrary edge spans, and conversion to
//! strictly layered networks.

use std::collections::{BTreeSet, HashMap};

use crate::model::{Activation, Layer, ModelError, Network, Node};
use crate::rational::Rational;

use super::gadgets::{Gadget, Port};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Src {
    Input(usize),
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub activation: Activation,
    pub bias: Rational,
    pub inputs: Vec<(Src, Rational)>,
    /// Lowest layer the node may sit on.
    pub pin: Option<usize>,
}

/// Nodes only read inputs and earlier nodes. A node's layer is the larger of
/// its pin and one more than the deepest node it reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub input_dim: usize,
    pub nodes: Vec<GraphNode>,
    pub outputs: Vec<Src>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub network: Network,
    /// Identity pass-through nodes added to bridge skipped layers.
    pub dummies: usize,
}

impl NetworkGraph {
    pub fn new(input_dim: usize) -> Self {
        NetworkGraph {
            input_dim,
            nodes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add(&mut self, activation: Activation, bias: Rational, inputs: Vec<(Src, Rational)>) -> Src {
        self.push(activation, bias, inputs, None)
    }

    pub fn add_pinned(
        &mut self,
        activation: Activation,
        bias: Rational,
        inputs: Vec<(Src, Rational)>,
        layer: usize,
    ) -> Src {
        self.push(activation, bias, inputs, Some(layer))
    }

    fn push(&mut self, activation: Activation, bias: Rational, inputs: Vec<(Src, Rational)>, pin: Option<usize>) -> Src {
        let id = self.nodes.len();
        debug_assert!(inputs.iter().all(|(s, _)| match s {
            Src::Input(i) => *i < self.input_dim,
            Src::Node(k) => *k < id,
        }));
        self.nodes.push(GraphNode {
            activation,
            bias,
            inputs,
            pin,
        });
        Src::Node(id)
    }

    pub fn node(&self, src: Src) -> Option<&GraphNode> {
        match src {
            Src::Node(k) => self.nodes.get(k),
            Src::Input(_) => None,
        }
    }

    pub fn node_mut(&mut self, src: Src) -> Option<&mut GraphNode> {
        match src {
            Src::Node(k) => self.nodes.get_mut(k),
            Src::Input(_) => None,
        }
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let from_inputs = n
                .inputs
                .iter()
                .map(|(s, _)| match s {
                    Src::Input(_) => 1,
                    Src::Node(k) => d[*k] + 1,
                })
                .max()
                .unwrap_or(1);
            d.push(from_inputs.max(n.pin.unwrap_or(1)));
        }
        d
    }

    pub fn depth(&self, src: Src) -> usize {
        match src {
            Src::Input(_) => 0,
            Src::Node(k) => self.depths()[k],
        }
    }

    /// Adds a copy of `gadget` reading `bind` and returns its output ports.
    /// Relative pins are offset by the deepest bound source.
    pub fn instantiate(&mut self, gadget: &Gadget, bind: &[Src]) -> Vec<Src> {
        assert_eq!(bind.len(), gadget.inputs.len(), "port count of {}", gadget.name);
        let depths = self.depths();
        let depth_of = |s: &Src| match s {
            Src::Input(_) => 0,
            Src::Node(k) => depths[*k],
        };
        let base = bind.iter().map(depth_of).max().unwrap_or(0) as isize;
        let mut local = Vec::with_capacity(gadget.nodes.len());
        for gn in &gadget.nodes {
            let inputs = gn
                .inputs
                .iter()
                .map(|(p, w)| {
                    let s = match p {
                        Port::In(i) => bind[*i],
                        Port::Local(j) => local[*j],
                    };
                    (s, w.clone())
                })
                .collect();
            let pin = gn.pin.map(|rel| (base + rel).max(1) as usize);
            local.push(self.push(gn.activation, gn.bias.clone(), inputs, pin));
        }
        gadget.outputs.iter().map(|(_, j)| local[*j]).collect()
    }
}

impl From<&Network> for NetworkGraph {
    fn from(net: &Network) -> Self {
        let mut g = NetworkGraph::new(net.input_dim());
        let mut prev: Vec<Src> = (0..net.input_dim()).map(Src::Input).collect();
        for (l, layer) in net.layers().iter().enumerate() {
            let mut cur = Vec::with_capacity(layer.width());
            for node in &layer.nodes {
                let inputs = node
                    .weights
                    .iter()
                    .zip(&prev)
                    .filter(|(w, _)| !w.is_zero())
                    .map(|(w, s)| (*s, w.clone()))
                    .collect();
                cur.push(g.add_pinned(node.activation, node.bias.clone(), inputs, l + 1));
            }
            prev = cur;
        }
        g.outputs = prev;
        g
    }
}

/// Converts to a network in which every node reads only the previous layer
/// and the final layer holds exactly the outputs, in order. Edges that skip
/// layers are routed through chains of weight-1 identity nodes, shared per
/// source. Non-output nodes on the final layer have no consumers and are
/// dropped.
pub fn normalize_layered(g: &NetworkGraph) -> Result<Normalized, ModelError> {
    let depths = g.depths();
    let depth = |s: Src| match s {
        Src::Input(_) => 0,
        Src::Node(k) => depths[k],
    };
    let mut outputs_seen = BTreeSet::new();
    for o in &g.outputs {
        assert!(outputs_seen.insert(*o), "duplicate output {o:?}");
    }
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    let needs_extra_layer = g.outputs.iter().any(|&o| {
        depth(o) == max_depth && g.node(o).map_or(true, |n| n.activation == Activation::Relu)
    });
    let last = if needs_extra_layer { max_depth + 1 } else { max_depth }.max(1);
    let is_final = |s: Src| {
        depth(s) == last && g.node(s).is_some_and(|n| n.activation == Activation::Identity)
    };

    // (source, layer) pairs that need a pass-through node
    let mut dummies: BTreeSet<(usize, Src)> = BTreeSet::new();
    let bridge = |s: Src, upto: usize, set: &mut BTreeSet<(usize, Src)>| {
        for l in depth(s) + 1..upto {
            set.insert((l, s));
        }
    };
    for (k, n) in g.nodes.iter().enumerate() {
        if depths[k] == last {
            continue;
        }
        for (s, _) in &n.inputs {
            bridge(*s, depths[k], &mut dummies);
        }
    }
    for &o in &g.outputs {
        if !is_final(o) {
            bridge(o, last + 1, &mut dummies);
        }
        if let Some(n) = g.node(o) {
            if is_final(o) {
                for (s, _) in &n.inputs {
                    bridge(*s, last, &mut dummies);
                }
            }
        }
    }

    // a layer with nothing on it would cut the network; carry an input across
    let occupied: BTreeSet<usize> = depths
        .iter()
        .copied()
        .chain(dummies.iter().map(|(l, _)| *l))
        .collect();
    if let Some(top) = (1..last).rev().find(|l| !occupied.contains(l)) {
        assert!(g.input_dim > 0, "a network without inputs cannot bridge layers");
        for l in 1..=top {
            dummies.insert((l, Src::Input(0)));
        }
    }

    // positions
    enum Entry {
        Node(usize),
        Dummy(Src),
    }
    let mut layers: Vec<Vec<Entry>> = (0..=last).map(|_| Vec::new()).collect();
    let mut pos: HashMap<(usize, Src), usize> = HashMap::new();
    for i in 0..g.input_dim {
        pos.insert((0, Src::Input(i)), i);
    }
    for l in 1..last {
        for (k, _) in depths.iter().enumerate().filter(|(_, &d)| d == l) {
            pos.insert((l, Src::Node(k)), layers[l].len());
            layers[l].push(Entry::Node(k));
        }
        for &(_, s) in dummies.range((l, Src::Input(0))..(l + 1, Src::Input(0))) {
            pos.insert((l, s), layers[l].len());
            layers[l].push(Entry::Dummy(s));
        }
    }
    for &o in &g.outputs {
        layers[last].push(if is_final(o) {
            match o {
                Src::Node(k) => Entry::Node(k),
                Src::Input(_) => unreachable!("inputs are never final"),
            }
        } else {
            Entry::Dummy(o)
        });
    }

    let source_at = |s: Src, l: usize| -> usize {
        *pos.get(&(l, s)).unwrap_or_else(|| panic!("{s:?} not present on layer {l}"))
    };
    let mut net_layers = Vec::with_capacity(last);
    let mut dummy_count = 0;
    for l in 1..=last {
        let width = if l == 1 { g.input_dim } else { layers[l - 1].len() };
        let nodes = layers[l]
            .iter()
            .map(|e| match e {
                Entry::Node(k) => {
                    let n = &g.nodes[*k];
                    let mut w = vec![Rational::zero(); width];
                    for (s, c) in &n.inputs {
                        w[source_at(*s, l - 1)] += c;
                    }
                    Node::new(n.activation, n.bias.clone(), w)
                }
                Entry::Dummy(s) => {
                    dummy_count += 1;
                    let mut w = vec![Rational::zero(); width];
                    w[source_at(*s, l - 1)] = Rational::one();
                    Node::new(Activation::Identity, Rational::zero(), w)
                }
            })
            .collect();
        net_layers.push(Layer::new(nodes));
    }
    Ok(Normalized {
        network: Network::new(g.input_dim, net_layers)?,
        dummies: dummy_count,
    })
}

/// `normalize_layered` on a network's own graph.
pub fn normalize_network(net: &Network) -> Network {
    normalize_layered(&NetworkGraph::from(net))
        .expect("a valid network stays valid")
        .network
}
