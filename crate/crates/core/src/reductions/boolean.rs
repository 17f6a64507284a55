//! Reductions over Boolean-valued gadgets.

use crate::cnf::{var_of, CnfFormula};
use crate::model::{Activation, Instance, Specification, VarRef};
use crate::rational::Rational;

use super::gadgets::{bool_star, boolean, BooleanKind};
use super::graph::{normalize_layered, NetworkGraph, Src};
use super::{max_relu_fan_in, push_var_eq, ReductionError, ReductionOutput, VarMap};

fn input_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i} X{i}")).collect()
}

fn boolean_map(n: usize, outputs: Vec<String>) -> VarMap {
    VarMap {
        inputs: input_names(n),
        outputs,
        var_inputs: (0..n).map(|i| vec![i]).collect(),
        true_value: Rational::one(),
    }
}

fn check_vars(cnf: &CnfFormula) -> Result<usize, ReductionError> {
    match cnf.var_count() {
        0 => Err(ReductionError::NoVariables),
        n => Ok(n),
    }
}

/// One BOOL* per variable for the outputs `z_i`, and per clause the
/// literal sources: the input itself, or a fresh NOT for a negation.
fn literal_sources(g: &mut NetworkGraph, cnf: &CnfFormula) -> (Vec<Src>, Vec<Vec<Src>>) {
    let star = bool_star();
    let not = boolean(BooleanKind::Not);
    let z = (0..cnf.var_count())
        .map(|i| g.instantiate(&star, &[Src::Input(i)])[0])
        .collect();
    let lits = cnf
        .clauses()
        .iter()
        .map(|clause| {
            clause
                .iter()
                .map(|&lit| {
                    let x = Src::Input(var_of(lit));
                    if lit > 0 {
                        x
                    } else {
                        g.instantiate(&not, &[x])[0]
                    }
                })
                .collect()
        })
        .collect();
    (z, lits)
}

/// BOOL* per variable, NOT per negative occurrence, OR per clause and one
/// summing AND. Outputs `(z_0, …, z_{n-1}, y)`; the output specification is
/// `z_i = 0` and `y = m`.
pub fn compile_bool_star(cnf: &CnfFormula) -> Result<ReductionOutput, ReductionError> {
    let n = check_vars(cnf)?;
    let m = cnf.clause_count();
    let mut g = NetworkGraph::new(n);
    let (z, lits) = literal_sources(&mut g, cnf);
    let or = boolean(BooleanKind::Or(3));
    let ors: Vec<Src> = lits.iter().map(|l| g.instantiate(&or, l)[0]).collect();
    let y = g.instantiate(&boolean(BooleanKind::And(m)), &ors)[0];
    g.outputs = z.iter().copied().chain([y]).collect();

    let norm = normalize_layered(&g)?;
    let mut out_spec = Specification::top();
    for i in 0..n {
        push_var_eq(&mut out_spec, VarRef::Output(i), Rational::zero());
    }
    push_var_eq(&mut out_spec, VarRef::Output(n), Rational::from_int(m as i64));
    let mut outputs: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    outputs.push("y".into());
    let instance = Instance::new(norm.network, Specification::top(), out_spec)?;
    debug_assert!(instance.input_spec.is_simple() && instance.output_spec.is_simple());
    Ok(ReductionOutput {
        instance,
        var_map: boolean_map(n, outputs),
        dummies: norm.dummies,
    })
}

/// One hidden layer of `2n + m` ReLUs and the single output
/// `y = Σ max(0, 1/2 - x_i) + max(0, x_i - 1/2) - Σ_j max(0, 1 - Σ f(x))`
/// where `f` is `x` for a positive and `1 - x` for a negative literal.
/// Inputs are confined to `[0, 1]` and the output must equal `n/2`.
pub fn compile_single_layer(cnf: &CnfFormula) -> Result<ReductionOutput, ReductionError> {
    let n = check_vars(cnf)?;
    let one = Rational::one;
    let half = Rational::new(1, 2);
    let mut g = NetworkGraph::new(n);
    let mut terms = Vec::new();
    for i in 0..n {
        let x = Src::Input(i);
        let r1 = g.add_pinned(Activation::Relu, half.clone(), vec![(x, -one())], 1);
        let r2 = g.add_pinned(Activation::Relu, -&half, vec![(x, one())], 1);
        terms.push((r1, one()));
        terms.push((r2, one()));
    }
    for clause in cnf.clauses() {
        // 1 - Σ f = (1 - #negative) - Σ_pos x + Σ_neg x
        let mut bias = one();
        let mut inputs = Vec::new();
        for &lit in clause {
            let x = Src::Input(var_of(lit));
            if lit > 0 {
                inputs.push((x, -one()));
            } else {
                bias -= one();
                inputs.push((x, one()));
            }
        }
        let r = g.add_pinned(Activation::Relu, bias, inputs, 1);
        terms.push((r, -one()));
    }
    let y = g.add(Activation::Identity, Rational::zero(), terms);
    g.outputs = vec![y];

    let norm = normalize_layered(&g)?;
    assert_eq!(norm.network.layers().len(), 2, "exactly one hidden layer");
    assert_eq!(norm.network.layers()[0].width(), 2 * n + cnf.clause_count());
    let mut in_spec = Specification::top();
    for i in 0..n {
        in_spec.push_ge(vec![(one(), VarRef::Input(i))], Rational::zero());
        in_spec.push_le(vec![(one(), VarRef::Input(i))], one());
    }
    let mut out_spec = Specification::top();
    push_var_eq(&mut out_spec, VarRef::Output(0), Rational::new(n as i64, 2));
    let instance = Instance::new(norm.network, in_spec, out_spec)?;
    Ok(ReductionOutput {
        instance,
        var_map: boolean_map(n, vec!["y".into()]),
        dummies: norm.dummies,
    })
}

/// As the BOOL* reduction, but each clause becomes an identity sum `y_j` of
/// its literals, so every ReLU reads a single input. The output
/// specification is `z_i = 0` and `y_j ≥ 1`.
pub fn compile_one_input_relu(cnf: &CnfFormula) -> Result<ReductionOutput, ReductionError> {
    let n = check_vars(cnf)?;
    let m = cnf.clause_count();
    let mut g = NetworkGraph::new(n);
    let (z, lits) = literal_sources(&mut g, cnf);
    let ys: Vec<Src> = lits
        .iter()
        .map(|l| g.add(Activation::Identity, Rational::zero(), l.iter().map(|s| (*s, Rational::one())).collect()))
        .collect();
    g.outputs = z.iter().chain(&ys).copied().collect();

    let norm = normalize_layered(&g)?;
    assert!(max_relu_fan_in(&norm.network) <= 1, "every ReLU reads one input");
    let mut out_spec = Specification::top();
    for i in 0..n {
        push_var_eq(&mut out_spec, VarRef::Output(i), Rational::zero());
    }
    for j in 0..m {
        out_spec.push_ge(vec![(Rational::one(), VarRef::Output(n + j))], Rational::one());
    }
    let mut outputs: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    outputs.extend((0..m).map(|j| format!("y{j}")));
    let instance = Instance::new(norm.network, Specification::top(), out_spec)?;
    Ok(ReductionOutput {
        instance,
        var_map: boolean_map(n, outputs),
        dummies: norm.dummies,
    })
}
