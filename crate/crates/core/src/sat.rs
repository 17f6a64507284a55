//! Exhaustive 3-SAT decision.

use std::fmt;

use thiserror::Error;

use crate::cnf::{var_of, CnfFormula};

pub const MAX_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("{0} variables exceed the limit of {MAX_VARS}")]
    TooManyVars(usize),
    #[error("assignment has {found} values, formula has {expected} variables")]
    Length { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// `SAT 0 1 …` or `UNSAT`.
impl fmt::Display for SatResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SatResult::Unsat => f.write_str("UNSAT"),
            SatResult::Sat(a) => {
                f.write_str("SAT")?;
                for b in a {
                    f.write_str(if *b { " 1" } else { " 0" })?;
                }
                Ok(())
            }
        }
    }
}

/// Scans assignments in lexicographic order, `X0` most significant and false
/// before true, and returns the first model.
pub fn brute_force_sat(cnf: &CnfFormula) -> Result<SatResult, SatError> {
    let n = cnf.var_count();
    if n > MAX_VARS {
        return Err(SatError::TooManyVars(n));
    }
    let bit = |v: usize| 1u32 << (n - 1 - v);
    let masks: Vec<(u32, u32)> = cnf
        .clauses()
        .iter()
        .map(|c| {
            c.iter().fold((0, 0), |(pos, neg), &lit| {
                if lit > 0 {
                    (pos | bit(var_of(lit)), neg)
                } else {
                    (pos, neg | bit(var_of(lit)))
                }
            })
        })
        .collect();
    for a in 0..(1u32 << n) {
        if masks.iter().all(|&(pos, neg)| a & pos != 0 || !a & neg != 0) {
            return Ok(SatResult::Sat((0..n).map(|v| a & bit(v) != 0).collect()));
        }
    }
    Ok(SatResult::Unsat)
}

pub fn check_assignment(cnf: &CnfFormula, a: &[bool]) -> Result<bool, SatError> {
    if a.len() != cnf.var_count() {
        return Err(SatError::Length {
            expected: cnf.var_count(),
            found: a.len(),
        });
    }
    Ok(cnf
        .clauses()
        .iter()
        .all(|c| c.iter().any(|&lit| a[var_of(lit)] == (lit > 0))))
}
