//! Exact linear solving by fraction-free elimination.
//!
//! Rows are cleared of denominators, forward elimination runs Bareiss-style
//! over integers (every division is exact), and back-substitution recovers a
//! rational solution with free variables pinned to zero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Solves A x = b for any solution, or returns `None` when the system is
/// inconsistent. `matrix` is row major with `cols` unknowns per row; `rhs`
/// has one entry per row.
pub fn solve(matrix: &[Vec<BigRational>], rhs: &[BigRational], cols: usize) -> Option<Vec<BigRational>> {
    assert_eq!(matrix.len(), rhs.len());
    // clear denominators row by row; the augmented column sits at index `cols`
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(matrix.len());
    for (row, b) in matrix.iter().zip(rhs) {
        assert_eq!(row.len(), cols);
        let mut lcm = BigInt::one();
        for entry in row.iter().chain(std::iter::once(b)) {
            lcm = num_integer::lcm(lcm, entry.denom().clone());
        }
        let mut cleared: Vec<BigInt> = Vec::with_capacity(cols + 1);
        for entry in row.iter().chain(std::iter::once(b)) {
            cleared.push(entry.numer() * (&lcm / entry.denom()));
        }
        rows.push(cleared);
    }

    // fraction-free forward elimination with row pivoting
    let mut prev_pivot = BigInt::one();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        // smallest nonzero pivot keeps the integers modest
        let pivot_row = (rank..rows.len())
            .filter(|&r| !rows[r][col].is_zero())
            .min_by_key(|&r| rows[r][col].abs());
        let Some(pivot_row) = pivot_row else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let pivot = rows[rank][col].clone();
        // Bareiss one-step update of every row below the pivot row; the
        // division by the previous pivot is exact for all of them
        let (upper, lower) = rows.split_at_mut(rank + 1);
        let pivot_row = &upper[rank];
        for row in lower.iter_mut() {
            let factor = row[col].clone();
            for (entry, pivot_entry) in row.iter_mut().zip(pivot_row) {
                *entry = (&pivot * &*entry - &factor * pivot_entry) / &prev_pivot;
            }
        }
        prev_pivot = pivot;
        pivot_cols.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }

    // consistency: a zero row must have a zero augmented entry
    for row in rows.iter().skip(rank) {
        if row[..cols].iter().all(|e| e.is_zero()) && !row[cols].is_zero() {
            return None;
        }
    }

    // back-substitution over rationals; free variables are zero
    let mut solution = vec![BigRational::zero(); cols];
    for r in (0..rank).rev() {
        let col = pivot_cols[r];
        let mut acc = BigRational::from_integer(rows[r][cols].clone());
        for c in (col + 1)..cols {
            if !rows[r][c].is_zero() {
                acc -= BigRational::from_integer(rows[r][c].clone()) * &solution[c];
            }
        }
        let pivot = BigRational::from_integer(rows[r][col].clone());
        solution[col] = acc / pivot;
    }

    // rows below the rank caught inconsistency only for fully-zero rows;
    // verify the remaining ones against the candidate solution
    for row in rows.iter().skip(rank) {
        let mut acc = BigRational::zero();
        for c in 0..cols {
            if !row[c].is_zero() {
                acc += BigRational::from_integer(row[c].clone()) * &solution[c];
            }
        }
        if acc != BigRational::from_integer(row[cols].clone()) {
            return None;
        }
    }
    Some(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn rq(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn solves_a_square_system() {
        // 2x + y = 5, x - y = 1 -> x = 2, y = 1
        let a = vec![vec![r(2), r(1)], vec![r(1), r(-1)]];
        let b = vec![r(5), r(1)];
        assert_eq!(solve(&a, &b, 2), Some(vec![r(2), r(1)]));
    }

    #[test]
    fn handles_rational_entries() {
        // x/2 + y/3 = 7/6 -> one solution with y = 0 is x = 7/3
        let a = vec![vec![rq(1, 2), rq(1, 3)]];
        let b = vec![rq(7, 6)];
        let sol = solve(&a, &b, 2).unwrap();
        assert_eq!(
            &sol[0] * rq(1, 2) + &sol[1] * rq(1, 3),
            rq(7, 6)
        );
    }

    #[test]
    fn underdetermined_systems_pick_a_solution() {
        let a = vec![vec![r(1), r(1), r(1)]];
        let b = vec![r(3)];
        let sol = solve(&a, &b, 3).unwrap();
        assert_eq!(sol.iter().cloned().sum::<BigRational>(), r(3));
    }

    #[test]
    fn detects_inconsistency() {
        let a = vec![vec![r(1), r(2)], vec![r(2), r(4)]];
        let b = vec![r(1), r(3)];
        assert_eq!(solve(&a, &b, 2), None);
        // overdetermined but consistent
        let a = vec![vec![r(1), r(0)], vec![r(0), r(1)], vec![r(1), r(1)]];
        let b = vec![r(2), r(3), r(5)];
        assert_eq!(solve(&a, &b, 2), Some(vec![r(2), r(3)]));
    }

    #[test]
    fn zero_system() {
        let a: Vec<Vec<BigRational>> = vec![];
        let b: Vec<BigRational> = vec![];
        assert_eq!(solve(&a, &b, 2), Some(vec![r(0), r(0)]));
    }
}
