//! 3-CNF formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("literal {literal} is outside 1..={var_count}")]
    LiteralRange { literal: i32, var_count: usize },
}

/// Literals are signed 1-based variable indices: `k` is `X_{k-1}`, `-k` its
/// negation. Every clause has exactly three literals; repeats are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    var_count: usize,
    clauses: Vec<[i32; 3]>,
}

impl CnfFormula {
    pub fn new(var_count: usize, clauses: Vec<[i32; 3]>) -> Result<Self, CnfError> {
        for &literal in clauses.iter().flatten() {
            if literal == 0 || literal.unsigned_abs() as usize > var_count {
                return Err(CnfError::LiteralRange { literal, var_count });
            }
        }
        Ok(CnfFormula { var_count, clauses })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn clauses(&self) -> &[[i32; 3]] {
        &self.clauses
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    /// `(X0 ∨ X1 ∨ X1) ∧ (¬X0 ∨ X1 ∨ ¬X2) ∧ (¬X1 ∨ X2 ∨ X3)`.
    pub fn example() -> Self {
        CnfFormula::new(4, vec![[1, 2, 2], [-1, 2, -3], [-2, 3, 4]]).expect("valid literals")
    }
}

/// Zero-based variable of a literal.
pub fn var_of(literal: i32) -> usize {
    literal.unsigned_abs() as usize - 1
}

/// Uniform literals: variable uniform in `1..=vars`, sign a fair coin.
pub fn random_cnf(vars: usize, clauses: usize, seed: u64) -> CnfFormula {
    assert!(vars >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..clauses)
        .map(|_| {
            [(); 3].map(|_| {
                let v = rng.gen_range(1..=vars as i32);
                if rng.gen_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
        })
        .collect();
    CnfFormula::new(vars, clauses).expect("literals in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_literals() {
        assert!(CnfFormula::new(2, vec![[1, 0, 2]]).is_err());
        assert!(CnfFormula::new(2, vec![[1, -3, 2]]).is_err());
        assert!(CnfFormula::new(0, vec![]).is_ok());
    }

    #[test]
    fn generator_is_seeded() {
        assert_eq!(random_cnf(4, 6, 7), random_cnf(4, 6, 7));
        assert_ne!(random_cnf(4, 6, 7), random_cnf(4, 6, 8));
        assert_eq!(random_cnf(4, 6, 7).clause_count(), 6);
    }
}
