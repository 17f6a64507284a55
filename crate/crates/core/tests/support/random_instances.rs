//! Small random instances for cross-checking solvers.

use nnreach::model::{Activation, Instance, Layer, Network, Node, Specification, VarRef};
use nnreach::rational::q;
use nnreach::Rational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn small(rng: &mut ChaCha8Rng) -> Rational {
    q(rng.gen_range(-4..=4), rng.gen_range(1..=2))
}

pub fn random_network(rng: &mut ChaCha8Rng, inputs: usize, max_relus: usize) -> Network {
    loop {
        let hidden = rng.gen_range(1..=3);
        let mut width = inputs;
        let mut layers = Vec::new();
        let mut relus = 0;
        for _ in 0..hidden {
            let w = rng.gen_range(1..=3);
            let nodes = (0..w)
                .map(|_| {
                    let act = if rng.gen_bool(0.75) { Activation::Relu } else { Activation::Identity };
                    relus += usize::from(act == Activation::Relu);
                    Node::new(act, small(rng), (0..width).map(|_| small(rng)).collect())
                })
                .collect();
            layers.push(Layer::new(nodes));
            width = w;
        }
        let outs = rng.gen_range(1..=2);
        layers.push(Layer::new(
            (0..outs)
                .map(|_| Node::new(Activation::Identity, small(rng), (0..width).map(|_| small(rng)).collect()))
                .collect(),
        ));
        if relus <= max_relus {
            return Network::new(inputs, layers).unwrap();
        }
    }
}

fn random_spec(rng: &mut ChaCha8Rng, dim: usize, input: bool) -> Specification {
    let var = |i| if input { VarRef::Input(i) } else { VarRef::Output(i) };
    let mut spec = Specification::top();
    for _ in 0..rng.gen_range(0..=2) {
        let mut terms: Vec<(Rational, VarRef)> = Vec::new();
        for i in 0..dim {
            let c = rng.gen_range(-2..=2);
            if c != 0 && rng.gen_bool(0.7) {
                terms.push((q(c, 1), var(i)));
            }
        }
        if terms.is_empty() {
            continue;
        }
        let b = small(rng);
        match rng.gen_range(0..4) {
            0 => spec.push_eq(terms, b),
            1 => spec.push_ge(terms, b),
            _ => spec.push_le(terms, b),
        }
    }
    spec
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_inputs: usize, max_relus: usize) -> Instance {
    let n = rng.gen_range(1..=max_inputs);
    let net = random_network(rng, n, max_relus);
    let input_spec = random_spec(rng, n, true);
    let output_spec = random_spec(rng, net.output_dim(), false);
    Instance::new(net, input_spec, output_spec).unwrap()
}

/// All points of `{-2, -3/2, …, 2}^n`.
pub fn grid(n: usize) -> Vec<Vec<Rational>> {
    let steps: Vec<Rational> = (-4..=4).map(|k| q(k, 2)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                steps.iter().map(move |s| {
                    let mut p = p.clone();
                    p.push(s.clone());
                    p
                })
            })
            .collect();
    }
    out
}
