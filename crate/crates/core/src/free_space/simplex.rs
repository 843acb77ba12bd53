//! Primal simplex for `maximize c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The slack basis is feasible from the start, so there is no phase one.
//! Tableau rows are stored sparsely: the LPs solved here come from graph
//! incidence structure and stay sparse under pivoting. Entering variables
//! follow Dantzig's rule until a run of degenerate pivots, after which
//! Bland's rule takes over for good, which rules out cycling.

use thiserror::Error;

use crate::scalar::Scalar;

const DEGENERATE_RUN_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimplexError {
    #[error("right-hand side entry {row} is negative")]
    InfeasibleStart { row: usize },
    #[error("objective is unbounded along column {column}")]
    Unbounded { column: usize },
    #[error("constraint row {row} references column {column} beyond {vars} variables")]
    BadColumn { row: usize, column: usize, vars: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
    pub pivots: usize,
}

type SparseRow<T> = Vec<(usize, T)>;

fn entry<T: Scalar>(row: &SparseRow<T>, col: usize) -> Option<&T> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|i| &row[i].1)
}

/// `target -= factor * source`, dropping entries that cancel.
fn axpy<T: Scalar>(target: &SparseRow<T>, factor: &T, source: &SparseRow<T>) -> SparseRow<T> {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < source.len() {
        let take_target = j >= source.len() || (i < target.len() && target[i].0 < source[j].0);
        let take_source = i >= target.len() || (j < source.len() && source[j].0 < target[i].0);
        if take_target {
            out.push(target[i].clone());
            i += 1;
        } else if take_source {
            out.push((source[j].0, -(factor.clone() * source[j].1.clone())));
            j += 1;
        } else {
            let v = target[i].1.clone() - factor.clone() * source[j].1.clone();
            if !v.negligible() {
                out.push((target[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Solves the LP. `rows[i]` lists `(column, coefficient)` pairs of row `i`.
pub fn maximize<T: Scalar>(
    objective: &[T],
    rows: &[Vec<(usize, T)>],
    rhs: &[T],
) -> Result<LpSolution<T>, SimplexError> {
    let vars = objective.len();
    let m = rows.len();
    assert_eq!(m, rhs.len(), "one right-hand side per row");
    let width = vars + m;

    let mut tableau: Vec<SparseRow<T>> = Vec::with_capacity(m);
    for (r, row) in rows.iter().enumerate() {
        if rhs[r] < T::zero() && !rhs[r].negligible() {
            return Err(SimplexError::InfeasibleStart { row: r });
        }
        let mut sparse: SparseRow<T> = Vec::with_capacity(row.len() + 1);
        for (c, v) in row {
            if *c >= vars {
                return Err(SimplexError::BadColumn {
                    row: r,
                    column: *c,
                    vars,
                });
            }
            if !v.negligible() {
                sparse.push((*c, v.clone()));
            }
        }
        sparse.sort_by_key(|(c, _)| *c);
        sparse.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.clone() + b.1.clone();
                true
            } else {
                false
            }
        });
        sparse.retain(|(_, v)| !v.negligible());
        sparse.push((vars + r, T::one()));
        tableau.push(sparse);
    }
    let mut b: Vec<T> = rhs.to_vec();
    let mut basis: Vec<usize> = (vars..width).collect();
    // reduced costs c_j - z_j, and -z in `neg_value`
    let mut reduced: Vec<T> = objective.iter().cloned().chain((0..m).map(|_| T::zero())).collect();
    let mut neg_value = T::zero();

    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut bland = false;
    loop {
        let entering = if bland {
            (0..width).find(|&j| reduced[j].strictly_positive())
        } else {
            let mut best: Option<usize> = None;
            for j in 0..width {
                if reduced[j].strictly_positive() && best.is_none_or(|k| reduced[j] > reduced[k]) {
                    best = Some(j);
                }
            }
            best
        };
        let Some(col) = entering else { break };

        let mut leaving: Option<(usize, T)> = None;
        for r in 0..m {
            let Some(a) = entry(&tableau[r], col) else { continue };
            if !a.strictly_positive() {
                continue;
            }
            let ratio = b[r].clone() / a.clone();
            let better = match &leaving {
                None => true,
                Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
            };
            if better {
                leaving = Some((r, ratio));
            }
        }
        let Some((pr, step)) = leaving else {
            return Err(SimplexError::Unbounded { column: col });
        };

        if step.negligible() {
            degenerate_run += 1;
            if degenerate_run >= DEGENERATE_RUN_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        let pivot = entry(&tableau[pr], col).expect("pivot entry present").clone();
        let pivot_row: SparseRow<T> = tableau[pr]
            .iter()
            .map(|(c, v)| (*c, v.clone() / pivot.clone()))
            .collect();
        let pivot_rhs = b[pr].clone() / pivot;
        for r in 0..m {
            if r == pr {
                continue;
            }
            let Some(factor) = entry(&tableau[r], col).cloned() else {
                continue;
            };
            tableau[r] = axpy(&tableau[r], &factor, &pivot_row);
            b[r] = b[r].clone() - factor * pivot_rhs.clone();
        }
        let factor = reduced[col].clone();
        for (c, v) in &pivot_row {
            reduced[*c] = reduced[*c].clone() - factor.clone() * v.clone();
        }
        reduced[col] = T::zero();
        neg_value = neg_value - factor * pivot_rhs.clone();
        tableau[pr] = pivot_row;
        b[pr] = pivot_rhs;
        basis[pr] = col;
        pivots += 1;
    }

    let mut x = vec![T::zero(); vars];
    for (r, &var) in basis.iter().enumerate() {
        if var < vars {
            x[var] = b[r].clone();
        }
    }
    Ok(LpSolution {
        value: -neg_value,
        x,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn textbook_example() {
        // max 3x + 5y  s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6)
        let sol = maximize(
            &[q(3), q(5)],
            &[vec![(0, q(1))], vec![(1, q(2))], vec![(0, q(3)), (1, q(2))]],
            &[q(4), q(12), q(18)],
        )
        .unwrap();
        assert_eq!(sol.value, q(36));
        assert_eq!(sol.x, vec![q(2), q(6)]);
    }

    #[test]
    fn rational_optimum() {
        // max x + y  s.t. 2x + y ≤ 1, x + 3y ≤ 1  → 3/5 at (2/5, 1/5)
        let sol = maximize(
            &[q(1), q(1)],
            &[vec![(0, q(2)), (1, q(1))], vec![(0, q(1)), (1, q(3))]],
            &[q(1), q(1)],
        )
        .unwrap();
        assert_eq!(sol.value, Rational::ratio(3, 5));
        assert_eq!(sol.x, vec![Rational::ratio(2, 5), Rational::ratio(1, 5)]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            maximize(&[q(1)], &[vec![(0, q(-1))]], &[q(1)]),
            Err(SimplexError::Unbounded { column: 0 })
        );
        assert_eq!(
            maximize(&[q(1)], &[vec![(0, q(1))]], &[q(-1)]),
            Err(SimplexError::InfeasibleStart { row: 0 })
        );
        assert!(matches!(
            maximize(&[q(1)], &[vec![(3, q(1))]], &[q(1)]),
            Err(SimplexError::BadColumn { .. })
        ));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig with bad tie-breaking.
        let obj = [Rational::ratio(3, 4), q(-150), Rational::ratio(1, 50), q(-6)];
        let rows = vec![
            vec![
                (0, Rational::ratio(1, 4)),
                (1, q(-60)),
                (2, Rational::ratio(-1, 25)),
                (3, q(9)),
            ],
            vec![
                (0, Rational::ratio(1, 2)),
                (1, q(-90)),
                (2, Rational::ratio(-1, 50)),
                (3, q(3)),
            ],
            vec![(2, q(1))],
        ];
        let sol = maximize(&obj, &rows, &[q(0), q(0), q(1)]).unwrap();
        assert_eq!(sol.value, Rational::ratio(1, 20));
    }

    #[test]
    fn float_instantiation() {
        let sol = maximize(
            &[1.0f64, 1.0],
            &[vec![(0, 2.0), (1, 1.0)], vec![(0, 1.0), (1, 3.0)]],
            &[1.0, 1.0],
        )
        .unwrap();
        assert!((sol.value - 0.6).abs() < 1e-12);
    }
}
