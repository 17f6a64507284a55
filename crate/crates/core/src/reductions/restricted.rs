//! Reduction onto networks whose weights and biases lie in `{-c, 0, d}`.
//!
//! Layout, with the input layer counted as layer 0:
//!
//! | layer | content |
//! |-------|---------|
//! | 1     | DISC and EQ0 ReLUs, NORM / NORM̄ first nodes, OR_B offset seeds |
//! | 2     | DISC outputs, first `-c` chain nodes |
//! | 3     | NORM / NORM̄ outputs (literal values `0` or `-dc`) and OR offsets |
//! | 4–6   | OR gadgets |
//! | 7     | `z_i`, `e_i` and `y` |
//!
//! Every edge spans exactly one layer, so no pass-through nodes are needed.

use std::collections::BTreeSet;

use crate::cnf::{var_of, CnfFormula};
use crate::model::{Activation, Instance, Network, Specification, VarRef};
use crate::rational::Rational;

use super::gadgets::{check_positive, restricted, RestrictedKind};
use super::graph::{normalize_layered, NetworkGraph, Src};
use super::{push_var_eq, ReductionError, ReductionOutput, VarMap};

pub(super) const OUTPUT_LAYER: usize = 7;

/// `−c·src` repeated `len` times; the first node may read several sources.
fn chain(g: &mut NetworkGraph, first: Vec<Src>, len: usize, c: &Rational) -> Src {
    let mc = -c;
    let mut cur = g.add(
        Activation::Identity,
        Rational::zero(),
        first.into_iter().map(|s| (s, mc.clone())).collect(),
    );
    for _ in 1..len {
        cur = g.add(Activation::Identity, Rational::zero(), vec![(cur, mc.clone())]);
    }
    cur
}

pub(super) struct RestrictedGraph {
    pub graph: NetworkGraph,
    pub z: Vec<Src>,
    pub e: Vec<Src>,
    pub y: Src,
}

/// The layered graph over inputs `x_0…x_{n-1}, x̄_0…x̄_{n-1}`. With
/// `with_eq0` false the `e_i` outputs are left out.
pub(super) fn restricted_graph(
    cnf: &CnfFormula,
    c: &Rational,
    d: &Rational,
    with_eq0: bool,
) -> Result<RestrictedGraph, ReductionError> {
    check_positive("c", c)?;
    check_positive("d", d)?;
    let n = cnf.var_count();
    if n == 0 {
        return Err(ReductionError::NoVariables);
    }
    let x = |i: usize| Src::Input(i);
    let xbar = |i: usize| Src::Input(n + i);
    let mut g = NetworkGraph::new(2 * n);

    let disc = restricted(RestrictedKind::Disc, c, d)?;
    let z: Vec<Src> = (0..n)
        .map(|i| {
            let out = g.instantiate(&disc, &[x(i), x(i)])[0];
            chain(&mut g, vec![out], 5, c)
        })
        .collect();

    let e: Vec<Src> = if with_eq0 {
        let eq0 = restricted(RestrictedKind::Eq0, c, d)?;
        (0..n)
            .map(|i| {
                let ports = g.instantiate(&eq0, &[x(i), xbar(i)]);
                chain(&mut g, ports, 6, c)
            })
            .collect()
    } else {
        Vec::new()
    };

    // literal value -dc when true, 0 when false; only polarities in use
    let used: BTreeSet<i32> = cnf.clauses().iter().flatten().copied().collect();
    let norm = restricted(RestrictedKind::Norm, c, d)?;
    let norm_bar = restricted(RestrictedKind::NormBar, c, d)?;
    let mut literal = std::collections::BTreeMap::new();
    for &lit in &used {
        let i = var_of(lit);
        let src = if lit > 0 {
            g.instantiate(&norm, &[x(i)])[0]
        } else {
            g.instantiate(&norm_bar, &[xbar(i)])[0]
        };
        literal.insert(lit, src);
    }

    let ors: Vec<Src> = cnf
        .clauses()
        .iter()
        .map(|clause| {
            let lits: BTreeSet<i32> = clause.iter().copied().collect();
            let srcs: Vec<Src> = lits.iter().map(|l| literal[l]).collect();
            let kind = if *c >= Rational::one() {
                RestrictedKind::OrA(srcs.len())
            } else {
                RestrictedKind::OrB(srcs.len())
            };
            let gadget = restricted(kind, c, d).expect("parameters checked");
            g.instantiate(&gadget, &srcs)[0]
        })
        .collect();
    let and = restricted(RestrictedKind::AndR(ors.len()), c, d)?;
    let y = g.instantiate(&and, &ors)[0];
    g.node_mut(y).expect("gadget node").pin = Some(OUTPUT_LAYER);

    g.outputs = z.iter().chain(&e).copied().chain([y]).collect();
    Ok(RestrictedGraph { graph: g, z, e, y })
}

/// Converts without adding pass-through nodes and checks the layout.
pub(super) fn layered(rg: &RestrictedGraph) -> Result<Network, ReductionError> {
    let depths = rg.graph.depths();
    debug_assert!(rg.z.iter().chain(&rg.e).chain([&rg.y]).all(|s| rg.graph.depth(*s) == OUTPUT_LAYER));
    assert!(depths.iter().all(|&l| l <= OUTPUT_LAYER));
    let norm = normalize_layered(&rg.graph)?;
    assert_eq!(norm.dummies, 0, "every edge spans one layer");
    assert_eq!(norm.network.layers().len(), OUTPUT_LAYER);
    Ok(norm.network)
}

pub(super) fn input_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("x{i} X{i}"))
        .chain((0..n).map(|i| format!("xbar{i} not X{i}")))
        .collect()
}

/// Inputs `x_i` and `x̄_i` per variable, `x_i = 1/c` for true and `-d/c²`
/// for false. Outputs `(z_0…, e_0…, y)` with `z_i = 0`, `e_i = 0` and
/// `y = m·d²·c⁴` required.
pub fn compile_restricted(cnf: &CnfFormula, c: &Rational, d: &Rational) -> Result<ReductionOutput, ReductionError> {
    let rg = restricted_graph(cnf, c, d, true)?;
    let network = layered(&rg)?;
    let allowed = [-c, Rational::zero(), d.clone()];
    assert!(
        network.constant_set().iter().all(|v| allowed.contains(v)),
        "constants stay within {{-c, 0, d}}"
    );
    let n = cnf.var_count();
    let m = cnf.clause_count();
    let mut out_spec = Specification::top();
    for i in 0..2 * n {
        push_var_eq(&mut out_spec, VarRef::Output(i), Rational::zero());
    }
    let target = Rational::from_int(m as i64) * d * d * c.pow(4);
    push_var_eq(&mut out_spec, VarRef::Output(2 * n), target);
    let mut outputs: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    outputs.extend((0..n).map(|i| format!("e{i}")));
    outputs.push("y".into());
    let instance = Instance::new(network, Specification::top(), out_spec)?;
    Ok(ReductionOutput {
        instance,
        var_map: VarMap {
            inputs: input_names(n),
            outputs,
            var_inputs: (0..n).map(|i| vec![i, n + i]).collect(),
            true_value: c.recip(),
        },
        dummies: 0,
    })
}
