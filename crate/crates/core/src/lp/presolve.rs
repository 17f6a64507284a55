use std::collections::HashMap;

use super::expr::{AffineExpr, VarId};
use crate::rational::Rational;

/// A row reduced to a positive constant, i.e. `c ≤ 0` with `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contradiction;

/// Gaussian elimination of equalities `e = 0`. Each eliminated variable is
/// kept as an affine form over variables that are still live.
#[derive(Debug, Clone)]
pub struct Eliminator {
    subst: Vec<Option<AffineExpr>>,
    order: Vec<VarId>,
    // eliminated variables whose form may mention the key variable
    uses: Vec<Vec<VarId>>,
}

impl Eliminator {
    pub fn new(var_count: usize) -> Self {
        Eliminator {
            subst: vec![None; var_count],
            order: Vec::new(),
            uses: vec![Vec::new(); var_count],
        }
    }

    pub fn var_count(&self) -> usize {
        self.subst.len()
    }

    pub fn is_eliminated(&self, v: VarId) -> bool {
        self.subst[v].is_some()
    }

    pub fn substitution(&self, v: VarId) -> Option<&AffineExpr> {
        self.subst[v].as_ref()
    }

    pub fn eliminated(&self) -> &[VarId] {
        &self.order
    }

    /// Rewrites `e` over live variables only.
    pub fn expand(&self, e: &AffineExpr) -> AffineExpr {
        if self.order.is_empty() || !e.terms().iter().any(|(v, _)| self.subst[*v].is_some()) {
            return e.clone();
        }
        let mut out = AffineExpr::constant_only(e.constant().clone());
        let mut live = Vec::new();
        for (v, c) in e.terms() {
            match &self.subst[*v] {
                Some(s) => out.add_scaled(s, c),
                None => live.push((*v, c.clone())),
            }
        }
        out.add_scaled(&AffineExpr::new(Rational::zero(), live), &Rational::one());
        out
    }

    /// Records `e = 0`, pivoting on its highest-index live variable. Returns
    /// the eliminated variable, or `None` when the equality is implied.
    pub fn add_equality(&mut self, e: &AffineExpr) -> Result<Option<VarId>, Contradiction> {
        let mut e = self.expand(e);
        let Some(p) = e.max_var() else {
            return if e.constant().is_zero() {
                Ok(None)
            } else {
                Err(Contradiction)
            };
        };
        let c = e.take_var(p).expect("pivot present");
        let form = e.scaled(&(-c.recip()));
        for q in std::mem::take(&mut self.uses[p]) {
            let Some(mut sq) = self.subst[q].take() else { continue };
            if let Some(k) = sq.take_var(p) {
                sq.add_scaled(&form, &k);
                for (v, _) in sq.terms() {
                    self.uses[*v].push(q);
                }
            }
            self.subst[q] = Some(sq);
        }
        for (v, _) in form.terms() {
            self.uses[*v].push(p);
        }
        self.subst[p] = Some(form);
        self.order.push(p);
        Ok(Some(p))
    }

    /// Fills in every eliminated coordinate from the live ones.
    pub fn reconstruct(&self, point: &mut [Rational]) {
        for &p in self.order.iter().rev() {
            point[p] = self.subst[p].as_ref().expect("eliminated").eval(point);
        }
    }
}

/// Scales `e` so its first coefficient is 1; returns the sign of the scale.
fn canonical(e: &AffineExpr) -> (AffineExpr, bool) {
    let lead = &e.terms()[0].1;
    let positive = lead.is_positive();
    if *lead == Rational::one() {
        return (e.clone(), true);
    }
    (e.scaled(&lead.recip()), positive)
}

const LE: u8 = 1;
const GE: u8 = 2;

/// Repeatedly extracts opposite row pairs as equalities, eliminates them and
/// rewrites the rest. Returns the remaining rows, deduplicated, over live
/// variables.
pub(crate) fn reduce(elim: &mut Eliminator, rows: &[AffineExpr]) -> Result<Vec<AffineExpr>, Contradiction> {
    let mut rows: Vec<AffineExpr> = rows.iter().map(|r| elim.expand(r)).collect();
    loop {
        let mut keys: Vec<(AffineExpr, u8)> = Vec::new();
        let mut index: HashMap<AffineExpr, usize> = HashMap::new();
        for r in rows {
            if r.is_constant() {
                if r.constant().is_positive() {
                    return Err(Contradiction);
                }
                continue;
            }
            let (key, positive) = canonical(&r);
            let flag = if positive { LE } else { GE };
            match index.get(&key) {
                Some(&i) => keys[i].1 |= flag,
                None => {
                    index.insert(key.clone(), keys.len());
                    keys.push((key, flag));
                }
            }
        }
        let mut equalities: Vec<&AffineExpr> =
            keys.iter().filter(|(_, f)| *f == LE | GE).map(|(k, _)| k).collect();
        if equalities.is_empty() {
            let mut out = Vec::with_capacity(keys.len());
            for (key, flags) in keys {
                if flags == GE {
                    out.push(key.negated());
                } else {
                    out.push(key);
                }
            }
            return Ok(out);
        }
        equalities.sort_by_key(|k| k.max_var());
        for e in equalities {
            elim.add_equality(e)?;
        }
        rows = Vec::new();
        for (key, flags) in &keys {
            if *flags == LE {
                rows.push(elim.expand(key));
            } else if *flags == GE {
                rows.push(elim.expand(&key.negated()));
            }
        }
    }
}
