//! Dense tableau simplex over exact rationals with Bland's rule.

use crate::rational::Rational;

/// Finds `x` with `a_i · x ≤ b_i` for every row, `x` unrestricted in sign.
///
/// Each variable is split into `x⁺ - x⁻`, every row gets a slack, and rows
/// with `b_i < 0` get an artificial. Only the auxiliary problem
/// `min Σ artificials` is solved: there is no objective to optimize
/// afterwards.
pub(super) fn phase_one(rows: &[(Vec<Rational>, Rational)], k: usize) -> Option<Vec<Rational>> {
    if rows.iter().all(|(_, b)| !b.is_negative()) {
        return Some(vec![Rational::zero(); k]);
    }
    let m = rows.len();
    let art_count = rows.iter().filter(|(_, b)| b.is_negative()).count();
    let art0 = 2 * k + m;
    let n = art0 + art_count;
    let rhs = n;

    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut obj = vec![Rational::zero(); n + 1];
    let mut next_art = art0;
    for (i, (a, b)) in rows.iter().enumerate() {
        let neg = b.is_negative();
        let mut row = vec![Rational::zero(); n + 1];
        for (j, c) in a.iter().enumerate() {
            if !c.is_zero() {
                let c = if neg { -c } else { c.clone() };
                row[k + j] = -&c;
                row[j] = c;
            }
        }
        row[2 * k + i] = if neg { -Rational::one() } else { Rational::one() };
        row[rhs] = if neg { -b } else { b.clone() };
        if neg {
            row[next_art] = Rational::one();
            basis.push(next_art);
            next_art += 1;
            for j in 0..art0 {
                if !row[j].is_zero() {
                    obj[j] -= &row[j];
                }
            }
            obj[rhs] -= &row[rhs];
        } else {
            basis.push(2 * k + i);
        }
        t.push(row);
    }

    // obj[rhs] holds minus the current sum of artificials
    while !obj[rhs].is_zero() {
        let Some(enter) = (0..n).find(|&j| obj[j].is_negative()) else {
            return None;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in t.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[rhs] / &row[enter];
            let better = match &leave {
                None => true,
                Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (r, _) = leave.expect("auxiliary problem is bounded below");
        pivot(&mut t, &mut obj, r, enter);
        basis[r] = enter;
    }

    let mut value = vec![Rational::zero(); 2 * k];
    for (i, &col) in basis.iter().enumerate() {
        if col < 2 * k {
            value[col] = t[i][rhs].clone();
        }
    }
    Some((0..k).map(|j| &value[j] - &value[k + j]).collect())
}

fn pivot(t: &mut [Vec<Rational>], obj: &mut [Rational], r: usize, col: usize) {
    let inv = t[r][col].recip();
    let nz: Vec<usize> = (0..t[r].len()).filter(|&j| !t[r][j].is_zero()).collect();
    if inv != Rational::one() {
        for &j in &nz {
            t[r][j] *= &inv;
        }
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[col].is_zero() {
            continue;
        }
        let f = row[col].clone();
        for &j in &nz {
            row[j] -= &f * &prow[j];
        }
    }
    if !obj[col].is_zero() {
        let f = obj[col].clone();
        for &j in &nz {
            obj[j] -= &f * &prow[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn box_with_negative_bounds() {
        // x ≤ -1, -x ≤ 3, y - x ≤ 0, -y ≤ 5/2
        let rows = vec![
            (vec![q(1, 1), q(0, 1)], q(-1, 1)),
            (vec![q(-1, 1), q(0, 1)], q(3, 1)),
            (vec![q(-1, 1), q(1, 1)], q(0, 1)),
            (vec![q(0, 1), q(-1, 1)], q(5, 2)),
        ];
        let x = phase_one(&rows, 2).unwrap();
        for (a, b) in &rows {
            let lhs: Rational = a.iter().zip(&x).map(|(c, v)| c * v).sum();
            assert!(lhs <= *b);
        }
    }

    #[test]
    fn detects_infeasibility() {
        let rows = vec![(vec![q(1, 1)], q(-1, 1)), (vec![q(-1, 1)], q(0, 1))];
        assert_eq!(phase_one(&rows, 1), None);
    }
}
