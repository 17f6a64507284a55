//! Exact feasibility of systems `expr ≤ 0` over unrestricted rational
//! variables.

mod expr;
mod presolve;
mod simplex;

use thiserror::Error;

pub use expr::{AffineExpr, VarId};
pub use presolve::{Contradiction, Eliminator};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("point has {found} coordinates, program has {expected} variables")]
    Dimension { expected: usize, found: usize },
}

/// Conjunction of `expr ≤ 0` rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearProgram {
    pub var_count: usize,
    pub inequalities: Vec<AffineExpr>,
}

impl LinearProgram {
    pub fn new(var_count: usize) -> Self {
        LinearProgram {
            var_count,
            inequalities: Vec::new(),
        }
    }

    pub fn push_le(&mut self, e: AffineExpr) {
        debug_assert!(e.max_var().map_or(true, |v| v < self.var_count));
        self.inequalities.push(e);
    }

    pub fn push_eq(&mut self, e: AffineExpr) {
        let neg = e.negated();
        self.push_le(e);
        self.push_le(neg);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityResult {
    Feasible(Vec<Rational>),
    Infeasible,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible(_))
    }

    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            FeasibilityResult::Feasible(p) => Some(p),
            FeasibilityResult::Infeasible => None,
        }
    }
}

/// Decides feasibility exactly. Equality pairs are eliminated by substitution
/// before the remaining rows go to the simplex method.
pub fn feasible(lp: &LinearProgram) -> FeasibilityResult {
    let mut elim = Eliminator::new(lp.var_count);
    let rows = match presolve::reduce(&mut elim, &lp.inequalities) {
        Ok(rows) => rows,
        Err(Contradiction) => return FeasibilityResult::Infeasible,
    };
    let mut point = vec![Rational::zero(); lp.var_count];
    if !rows.is_empty() {
        // compact the surviving variables into 0..k
        let mut cols: Vec<VarId> = rows.iter().flat_map(|r| r.terms().iter().map(|(v, _)| *v)).collect();
        cols.sort_unstable();
        cols.dedup();
        let mut index = vec![usize::MAX; lp.var_count];
        for (i, v) in cols.iter().enumerate() {
            index[*v] = i;
        }
        let dense: Vec<(Vec<Rational>, Rational)> = rows
            .iter()
            .map(|r| {
                let mut a = vec![Rational::zero(); cols.len()];
                for (v, c) in r.terms() {
                    a[index[*v]] = c.clone();
                }
                (a, -r.constant())
            })
            .collect();
        match simplex::phase_one(&dense, cols.len()) {
            Some(x) => {
                for (i, v) in cols.iter().enumerate() {
                    point[*v] = x[i].clone();
                }
            }
            None => return FeasibilityResult::Infeasible,
        }
    }
    elim.reconstruct(&mut point);
    debug_assert_eq!(check_point(lp, &point), Ok(true));
    FeasibilityResult::Feasible(point)
}

/// Eliminates every equality pair among `rows` into `elim` and returns the
/// remaining rows over live variables.
pub fn presolve_rows(elim: &mut Eliminator, rows: &[AffineExpr]) -> Result<Vec<AffineExpr>, Contradiction> {
    presolve::reduce(elim, rows)
}

pub fn check_point(lp: &LinearProgram, point: &[Rational]) -> Result<bool, LpError> {
    if point.len() != lp.var_count {
        return Err(LpError::Dimension {
            expected: lp.var_count,
            found: point.len(),
        });
    }
    Ok(lp.inequalities.iter().all(|e| !e.eval(point).is_positive()))
}
