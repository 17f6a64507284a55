//! Reduction onto networks whose every weight and bias is `c` or `-c`.
//!
//! Starts from the restricted network with `d = c` and no EQ0 gadgets, then
//! rewrites it so that a node on layer `ℓ` carries `2^ℓ` times its original
//! value:
//!
//! - every hidden node gets an identical twin, and a consumer reads the pair
//!   with `(s·c, s·c)`, contributing `2s·c` times the value, or with
//!   `(c, -c)`, contributing nothing;
//! - the inputs come in pairs `(a, ā)` with `a + ā = 0` required, read with
//!   `(s·c, -s·c)` or `(c, c)`;
//! - every bias is `c`; a node on layer `ℓ` cancels it through the rail
//!   `P_ℓ` (value `-1/2` on layer `ℓ-1`) and gets `2^ℓ` times its original
//!   bias through the rail `Q_ℓ` (value `2^{ℓ-1}` on layer `ℓ-1`);
//! - a rail is a chain of identity nodes `v ↦ c + 2c·v` started from a
//!   pinned input pair.

use crate::cnf::CnfFormula;
use crate::model::{Activation, Instance, Layer, Network, Node, Specification, VarRef};
use crate::rational::Rational;

use super::gadgets::check_positive;
use super::restricted::{input_names, layered, restricted_graph, OUTPUT_LAYER};
use super::{push_var_eq, ReductionError, ReductionOutput, VarMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Data(usize),
    P(usize),
    Q(usize),
}

/// A pair of positions on one layer.
struct Slot {
    item: Item,
    a: usize,
    b: usize,
}

struct Frame {
    slots: Vec<Slot>,
    width: usize,
    /// Input pairs hold opposite values, hidden pairs equal ones.
    anti: bool,
}

impl Frame {
    fn inputs(n: usize) -> Frame {
        let mut slots: Vec<Slot> = (0..n).map(|i| Slot { item: Item::Data(i), a: i, b: n + i }).collect();
        for k in 1..=OUTPUT_LAYER {
            let base = 2 * n + 4 * (k - 1);
            slots.push(Slot { item: Item::P(k), a: base, b: base + 1 });
            slots.push(Slot { item: Item::Q(k), a: base + 2, b: base + 3 });
        }
        Frame { slots, width: 2 * n + 4 * OUTPUT_LAYER, anti: true }
    }

    fn twins(items: Vec<Item>) -> Frame {
        let width = 2 * items.len();
        let slots = items.into_iter().enumerate().map(|(t, item)| Slot { item, a: 2 * t, b: 2 * t + 1 }).collect();
        Frame { slots, width, anti: false }
    }

    /// Incoming weights realizing multiplier `s(item)` on every pair.
    fn weights(&self, c: &Rational, s: impl Fn(Item) -> i64) -> Vec<Rational> {
        let mut w = vec![Rational::zero(); self.width];
        for slot in &self.slots {
            let (wa, wb) = match s(slot.item) {
                0 if self.anti => (c.clone(), c.clone()),
                0 => (c.clone(), -c),
                m => {
                    let v = Rational::from_int(m) * c;
                    let vb = if self.anti { -&v } else { v.clone() };
                    (v, vb)
                }
            };
            w[slot.a] = wa;
            w[slot.b] = wb;
        }
        w
    }
}

/// `v / c` for `v ∈ {-c, 0, c}`.
fn unit(v: &Rational, c: &Rational) -> i64 {
    let s = v / c;
    assert!(s.is_integer() && s.abs() <= Rational::one(), "weight {v} outside {{-c, 0, c}}");
    s.signum() as i64
}

/// Input value that the chain `v ↦ c + 2c·v` turns into `target` after
/// `steps` nodes.
fn rail_start(target: Rational, steps: usize, c: &Rational) -> Rational {
    let two_c = c + c;
    (0..steps).fold(target, |v, _| (v - c) / &two_c)
}

fn rail_target(item: Item) -> (usize, Rational) {
    match item {
        Item::P(k) => (k, Rational::new(-1, 2)),
        Item::Q(k) => (k, Rational::from_int(1i64 << (k - 1))),
        Item::Data(_) => unreachable!("data nodes are not rails"),
    }
}

/// Inputs: `x_i`, `x̄_i`, then per layer `k = 1…7` the rail inputs `p_k`,
/// `p̄_k`, `q_k`, `q̄_k`. Outputs `(z_0…, y)` with `z_i = 0` and
/// `y = 2⁷·m·c⁶` required; the input specification pins the rails and pairs
/// every input with its negation.
pub fn compile_no_zero(cnf: &CnfFormula, c: &Rational) -> Result<ReductionOutput, ReductionError> {
    check_positive("c", c)?;
    let rg = restricted_graph(cnf, c, c, false)?;
    let base = layered(&rg)?;
    let n = cnf.var_count();

    let mut frame = Frame::inputs(n);
    let mut layers = Vec::with_capacity(OUTPUT_LAYER);
    for (l0, orig) in base.layers().iter().enumerate() {
        let l = l0 + 1;
        let data_mult = |node: &Node, k: usize| -> i64 {
            if l == 1 {
                unit(&(&node.weights[k] - &node.weights[n + k]), c)
            } else {
                unit(&node.weights[k], c)
            }
        };
        let data_node = |node: &Node| {
            let bias_mult = unit(&node.bias, c);
            let w = frame.weights(c, |item| match item {
                Item::Data(k) => data_mult(node, k),
                Item::P(k) if k == l => 1,
                Item::Q(k) if k == l => bias_mult,
                _ => 0,
            });
            Node::new(node.activation, c.clone(), w)
        };
        let mut nodes = Vec::new();
        if l == OUTPUT_LAYER {
            nodes.extend(orig.nodes.iter().map(data_node));
        } else {
            let mut items = Vec::new();
            for (k, node) in orig.nodes.iter().enumerate() {
                let v = data_node(node);
                nodes.push(v.clone());
                nodes.push(v);
                items.push(Item::Data(k));
            }
            for k in l + 1..=OUTPUT_LAYER {
                for rail in [Item::P(k), Item::Q(k)] {
                    let w = frame.weights(c, |item| i64::from(item == rail));
                    let v = Node::new(Activation::Identity, c.clone(), w);
                    nodes.push(v.clone());
                    nodes.push(v);
                    items.push(rail);
                }
            }
            frame = Frame::twins(items);
        }
        layers.push(Layer::new(nodes));
    }
    let network = Network::new(2 * n + 4 * OUTPUT_LAYER, layers)?;
    assert_eq!(network.constant_set(), vec![-c, c.clone()], "constants are exactly {{-c, c}}");

    let one = Rational::one;
    let mut in_spec = Specification::top();
    for i in 0..n {
        in_spec.push_eq(vec![(one(), VarRef::Input(i)), (one(), VarRef::Input(n + i))], Rational::zero());
    }
    let mut inputs = input_names(n);
    for slot in Frame::inputs(n).slots.iter().skip(n) {
        let (k, target) = rail_target(slot.item);
        push_var_eq(&mut in_spec, VarRef::Input(slot.a), rail_start(target, k - 1, c));
        in_spec.push_eq(vec![(one(), VarRef::Input(slot.a)), (one(), VarRef::Input(slot.b))], Rational::zero());
        let name = if matches!(slot.item, Item::P(_)) { "p" } else { "q" };
        inputs.push(format!("{name}{k}"));
        inputs.push(format!("{name}bar{k}"));
    }

    let m = cnf.clause_count();
    let mut out_spec = Specification::top();
    for i in 0..n {
        push_var_eq(&mut out_spec, VarRef::Output(i), Rational::zero());
    }
    let target = Rational::from_int(128 * m as i64) * c.pow(6);
    push_var_eq(&mut out_spec, VarRef::Output(n), target);
    let mut outputs: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    outputs.push("y".into());

    Ok(ReductionOutput {
        instance: Instance::new(network, in_spec, out_spec)?,
        var_map: VarMap {
            inputs,
            outputs,
            var_inputs: (0..n).map(|i| vec![i, n + i]).collect(),
            true_value: c.recip(),
        },
        dummies: 0,
    })
}
