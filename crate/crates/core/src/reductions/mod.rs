//! Compilers from 3-CNF formulas to reachability instances, and the gadgets
//! they are built from.
//!
//! Every compiler produces an instance that is reachable exactly when the
//! formula is satisfiable.

mod boolean;
pub mod gadgets;
pub mod graph;
mod no_zero;
mod restricted;

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::formats::{serialize_network, serialize_spec};
use crate::model::{Activation, Instance, ModelError, Network, Specification, VarRef};
use crate::rational::Rational;

pub use boolean::{compile_bool_star, compile_one_input_relu, compile_single_layer};
pub use gadgets::{BooleanKind, Gadget, RestrictedKind};
pub use graph::{normalize_layered, normalize_network, NetworkGraph, Normalized, Src};
pub use no_zero::compile_no_zero;
pub use restricted::compile_restricted;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: Rational },
    #[error("epsilon must lie in (0, 1/2], got {0}")]
    Epsilon(Rational),
    #[error("formula has no variables")]
    NoVariables,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Names of the instance's inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMap {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Input indices carrying each formula variable; the first one decides
    /// its truth value.
    pub var_inputs: Vec<Vec<usize>>,
    /// Input value that encodes "true".
    pub true_value: Rational,
}

impl VarMap {
    pub fn decode(&self, x: &[Rational]) -> Vec<bool> {
        self.var_inputs.iter().map(|ix| x[ix[0]] == self.true_value).collect()
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutput {
    pub instance: Instance,
    pub var_map: VarMap,
    /// Pass-through nodes inserted by layer normalization.
    pub dummies: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    BoolStar,
    SingleLayer,
    OneInputRelu,
    Restricted { c: Rational, d: Rational },
    NoZero { c: Rational },
}

impl Reduction {
    pub fn compile(&self, cnf: &CnfFormula) -> Result<ReductionOutput, ReductionError> {
        match self {
            Reduction::BoolStar => compile_bool_star(cnf),
            Reduction::SingleLayer => compile_single_layer(cnf),
            Reduction::OneInputRelu => compile_one_input_relu(cnf),
            Reduction::Restricted { c, d } => compile_restricted(cnf, c, d),
            Reduction::NoZero { c } => compile_no_zero(cnf, c),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reduction::BoolStar => "bool-star",
            Reduction::SingleLayer => "single-layer",
            Reduction::OneInputRelu => "one-input-relu",
            Reduction::Restricted { .. } => "restricted",
            Reduction::NoZero { .. } => "no-zero",
        }
    }

    /// Builds a reduction from its name and the optional `c`, `d`
    /// parameters; each reduction takes exactly the parameters it uses.
    pub fn from_parts(name: &str, c: Option<Rational>, d: Option<Rational>) -> Result<Self, ParseReductionError> {
        let r = match (name, c, d) {
            ("bool-star", None, None) => Reduction::BoolStar,
            ("single-layer", None, None) => Reduction::SingleLayer,
            ("one-input-relu", None, None) => Reduction::OneInputRelu,
            ("restricted", Some(c), Some(d)) => Reduction::Restricted { c, d },
            ("no-zero", Some(c), None) => Reduction::NoZero { c },
            ("bool-star" | "single-layer" | "one-input-relu" | "restricted" | "no-zero", _, _) => {
                return Err(ParseReductionError::Parameters(name.to_string()))
            }
            _ => return Err(ParseReductionError::Unknown(name.to_string())),
        };
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseReductionError {
    #[error("unknown reduction {0:?}")]
    Unknown(String),
    #[error("wrong parameters for {0}: restricted takes --c and --d, no-zero takes --c, others take none")]
    Parameters(String),
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::Restricted { c, d } => write!(f, "restricted c={c} d={d}"),
            Reduction::NoZero { c } => write!(f, "no-zero c={c}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Reduction {
    type Err = ParseReductionError;

    /// Parameter-free reductions only.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Reduction::from_parts(s, None, None)
    }
}

/// `coeff·var = value` as two conjuncts.
pub(crate) fn push_var_eq(spec: &mut Specification, var: VarRef, value: Rational) {
    spec.push_eq(vec![(Rational::one(), var)], value);
}

/// Largest number of nonzero weights into a ReLU node.
pub fn max_relu_fan_in(net: &Network) -> usize {
    net.nodes()
        .filter(|(_, n)| n.activation == Activation::Relu)
        .map(|(_, n)| n.weights.iter().filter(|w| !w.is_zero()).count())
        .max()
        .unwrap_or(0)
}

/// `.map` contents: one comment line per input and output.
pub fn map_text(out: &ReductionOutput, reduction: &Reduction) -> String {
    let mut s = format!("# reduction {reduction}\n");
    for (i, name) in out.var_map.inputs.iter().enumerate() {
        s.push_str(&format!("# input {i} {name}\n"));
    }
    for (i, name) in out.var_map.outputs.iter().enumerate() {
        s.push_str(&format!("# output {i} {name}\n"));
    }
    s.push_str(&format!("# true-value {}\n", out.var_map.true_value));
    s
}

/// Writes `<stem>.nn`, `<stem>.in.spec`, `<stem>.out.spec` and `<stem>.map`.
pub fn write_artifacts(out: &ReductionOutput, reduction: &Reduction, dir: &Path, stem: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{stem}.nn")), serialize_network(&out.instance.network))?;
    std::fs::write(dir.join(format!("{stem}.in.spec")), serialize_spec(&out.instance.input_spec))?;
    std::fs::write(dir.join(format!("{stem}.out.spec")), serialize_spec(&out.instance.output_spec))?;
    std::fs::write(dir.join(format!("{stem}.map")), map_text(out, reduction))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn reduction_parameters() {
        assert_eq!(Reduction::from_str("bool-star").unwrap(), Reduction::BoolStar);
        assert!(matches!(
            Reduction::from_parts("no-zero", None, None),
            Err(ParseReductionError::Parameters(_))
        ));
        assert!(Reduction::from_parts("restricted", Some(q(1, 1)), None).is_err());
        assert!(Reduction::from_parts("bool-star", Some(q(1, 1)), None).is_err());
        assert!(matches!(Reduction::from_str("xor"), Err(ParseReductionError::Unknown(_))));
        assert_eq!(
            Reduction::from_parts("restricted", Some(q(2, 1)), Some(q(3, 1))).unwrap().to_string(),
            "restricted c=2 d=3"
        );
    }
}
