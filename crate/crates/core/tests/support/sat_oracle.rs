//! Satisfiability by recursive splitting with unit propagation, independent
//! of the library's enumeration.

use nnreach::cnf::CnfFormula;

fn lit_value(lit: i32, a: &[Option<bool>]) -> Option<bool> {
    let v = a[(lit.unsigned_abs() - 1) as usize]?;
    Some(if lit > 0 { v } else { !v })
}

fn solve(clauses: &[[i32; 3]], a: &mut Vec<Option<bool>>) -> bool {
    let mut branch = None;
    for clause in clauses {
        let mut open = Vec::new();
        let mut sat = false;
        for &lit in clause {
            match lit_value(lit, a) {
                Some(true) => sat = true,
                Some(false) => {}
                None => open.push(lit),
            }
        }
        if sat {
            continue;
        }
        open.dedup();
        match open.as_slice() {
            [] => return false,
            [unit] => {
                branch = Some((*unit, true));
                break;
            }
            [first, ..] if branch.is_none() => branch = Some((*first, false)),
            _ => {}
        }
    }
    let Some((lit, is_unit)) = branch else { return true };
    let var = (lit.unsigned_abs() - 1) as usize;
    let tries: &[bool] = if is_unit { &[true] } else { &[true, false] };
    for &want in tries {
        a[var] = Some(if lit > 0 { want } else { !want });
        if solve(clauses, a) {
            return true;
        }
    }
    a[var] = None;
    false
}

pub fn satisfiable(cnf: &CnfFormula) -> bool {
    let mut a = vec![None; cnf.var_count()];
    solve(cnf.clauses(), &mut a)
}

/// The non-tautological clauses over variables 1..=3 that mention two or
/// three distinct variables; a two-variable clause repeats its last literal.
pub fn clause_universe() -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for (x, y) in [(1, 2), (1, 3), (2, 3)] {
        for sx in [1, -1] {
            for sy in [1, -1] {
                out.push([sx * x, sy * y, sy * y]);
            }
        }
    }
    for s1 in [1, -1] {
        for s2 in [1, -1] {
            for s3 in [1, -1] {
                out.push([s1, 2 * s2, 3 * s3]);
            }
        }
    }
    out
}

/// Every formula over 3 variables whose clauses are 0 to `max` distinct
/// members of `clause_universe`.
pub fn all_small_formulas(max: usize) -> Vec<CnfFormula> {
    fn rec(u: &[[i32; 3]], start: usize, cur: &mut Vec<[i32; 3]>, max: usize, out: &mut Vec<CnfFormula>) {
        out.push(CnfFormula::new(3, cur.clone()).expect("literals in range"));
        if cur.len() == max {
            return;
        }
        for i in start..u.len() {
            cur.push(u[i]);
            rec(u, i + 1, cur, max, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&clause_universe(), 0, &mut Vec::new(), max, &mut out);
    out
}
