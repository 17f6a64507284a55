//! Exact reachability analysis for ReLU networks and reductions from 3-SAT.

pub mod cnf;
pub mod eval;
pub mod formats;
pub mod lp;
pub mod model;
pub mod rational;
pub mod reductions;
pub mod relu_lp;
pub mod sat;
pub mod search;

pub use eval::{activation_pattern_of, check_witness, eval_network, EvalError};
pub use model::{Activation, Instance, Layer, Network, Node, Specification, VarRef};
pub use rational::Rational;
pub use relu_lp::{build_program, fix_pattern, ActivationPattern, ReluLinearProgram};
pub use search::{solve, solve_branch, solve_enumerate, Mode, SolveStats, Verdict};
pub use cnf::CnfFormula;
pub use sat::{brute_force_sat, SatResult};
