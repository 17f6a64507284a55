use std::fmt;

use crate::rational::Rational;

pub type VarId = usize;

/// `constant + Σ coeff · var`, kept sorted by variable with no zero
/// coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    constant: Rational,
    terms: Vec<(VarId, Rational)>,
}

impl AffineExpr {
    pub fn new(constant: Rational, terms: impl IntoIterator<Item = (VarId, Rational)>) -> Self {
        let mut terms: Vec<(VarId, Rational)> = terms.into_iter().collect();
        terms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(VarId, Rational)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        AffineExpr {
            constant,
            terms: merged,
        }
    }

    pub fn constant_only(constant: Rational) -> Self {
        AffineExpr {
            constant,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        AffineExpr {
            constant: Rational::zero(),
            terms: vec![(v, Rational::one())],
        }
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn terms(&self) -> &[(VarId, Rational)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: VarId) -> Rational {
        self.terms
            .binary_search_by_key(&v, |(w, _)| *w)
            .map(|i| self.terms[i].1.clone())
            .unwrap_or_default()
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.terms.last().map(|(v, _)| *v)
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    /// `self + k · other`.
    pub fn add_scaled(&mut self, other: &AffineExpr, k: &Rational) {
        if k.is_zero() {
            return;
        }
        if !other.constant.is_zero() {
            self.constant += k * &other.constant;
        }
        if other.terms.is_empty() {
            return;
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut a = std::mem::take(&mut self.terms).into_iter().peekable();
        let mut b = other.terms.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some((va, _)), Some((vb, _))) if va == vb => {
                    let (v, ca) = a.next().unwrap();
                    let (_, cb) = b.next().unwrap();
                    let c = ca + k * cb;
                    if !c.is_zero() {
                        out.push((v, c));
                    }
                }
                (Some((va, _)), Some((vb, _))) if va < vb => out.push(a.next().unwrap()),
                (Some(_), Some(_)) | (None, Some(_)) => {
                    let (v, cb) = b.next().unwrap();
                    out.push((*v, k * cb));
                }
                (Some(_), None) => out.push(a.next().unwrap()),
                (None, None) => break,
            }
        }
        self.terms = out;
    }

    pub fn scaled(&self, k: &Rational) -> AffineExpr {
        if k.is_zero() {
            return AffineExpr::default();
        }
        AffineExpr {
            constant: &self.constant * k,
            terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn negated(&self) -> AffineExpr {
        AffineExpr {
            constant: -&self.constant,
            terms: self.terms.iter().map(|(v, c)| (*v, -c)).collect(),
        }
    }

    /// Removes `v` and returns its coefficient.
    pub fn take_var(&mut self, v: VarId) -> Option<Rational> {
        let i = self.terms.binary_search_by_key(&v, |(w, _)| *w).ok()?;
        Some(self.terms.remove(i).1)
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            let x = &point[*v];
            if !x.is_zero() {
                acc += c * x;
            }
        }
        acc
    }

    /// Formats as `c*name + … + constant`.
    pub fn display_with<'a, F>(&'a self, names: F) -> impl fmt::Display + 'a
    where
        F: Fn(VarId) -> String + 'a,
    {
        DisplayExpr { expr: self, names }
    }
}

struct DisplayExpr<'a, F> {
    expr: &'a AffineExpr,
    names: F,
}

impl<F: Fn(VarId) -> String> fmt::Display for DisplayExpr<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.expr.terms {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "{}*{}", c, (self.names)(*v))?;
            first = false;
        }
        if first {
            write!(f, "{}", self.expr.constant)
        } else if !self.expr.constant.is_zero() {
            write!(f, " + {}", self.expr.constant)
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(|v| format!("v{v}")))
    }
}
