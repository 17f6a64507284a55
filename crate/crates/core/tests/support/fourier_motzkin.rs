//! Feasibility of `expr ≤ 0` systems by Fourier–Motzkin elimination.
//!
//! Rows carry the set of original rows they combine. After eliminating `k`
//! variables a row built from more than `k + 1` originals is redundant
//! (Kohler's criterion) and is dropped.

use nnreach::lp::{AffineExpr, LinearProgram};
use nnreach::Rational;

#[derive(Clone)]
struct Row {
    expr: AffineExpr,
    origin: u128,
}

/// Scales so the largest absolute coefficient is 1.
fn normalize(e: AffineExpr) -> AffineExpr {
    let m = e.terms().iter().map(|(_, c)| c.abs()).max();
    match m {
        Some(m) if m != Rational::one() => e.scaled(&m.recip()),
        _ => e,
    }
}

pub fn fm_feasible(lp: &LinearProgram) -> bool {
    assert!(lp.inequalities.len() <= 128);
    let mut rows: Vec<Row> = lp
        .inequalities
        .iter()
        .enumerate()
        .map(|(i, e)| Row {
            expr: normalize(e.clone()),
            origin: 1 << i,
        })
        .collect();
    let mut live: Vec<usize> = (0..lp.var_count).collect();
    let mut eliminated = 0u32;
    while !live.is_empty() {
        // cheapest variable first
        let (pos, &v) = live
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| {
                let p = rows.iter().filter(|r| r.expr.coeff(v).is_positive()).count();
                let n = rows.iter().filter(|r| r.expr.coeff(v).is_negative()).count();
                p * n
            })
            .unwrap();
        live.remove(pos);
        eliminated += 1;
        let mut keep = Vec::new();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for r in rows {
            let c = r.expr.coeff(v);
            if c.is_zero() {
                keep.push(r);
            } else if c.is_positive() {
                upper.push((c, r));
            } else {
                lower.push((c, r));
            }
        }
        for (cu, u) in &upper {
            for (cl, l) in &lower {
                let origin = u.origin | l.origin;
                if origin.count_ones() > eliminated + 1 {
                    continue;
                }
                // (-cl)·u + cu·l cancels v and keeps the direction
                let mut combo = u.expr.scaled(&-cl);
                combo.add_scaled(&l.expr, cu);
                debug_assert!(combo.coeff(v).is_zero());
                keep.push(Row {
                    expr: normalize(combo),
                    origin,
                });
            }
        }
        keep.sort_by(|a, b| format!("{:?}", a.expr).cmp(&format!("{:?}", b.expr)).then(a.origin.count_ones().cmp(&b.origin.count_ones())));
        keep.dedup_by(|a, b| a.expr == b.expr);
        if keep.iter().any(|r| r.expr.is_constant() && r.expr.constant().is_positive()) {
            return false;
        }
        rows = keep;
    }
    rows.iter().all(|r| !r.expr.constant().is_positive())
}
