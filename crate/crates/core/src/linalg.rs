//! Dense solve / determinant / inverse by Gaussian elimination, generic over
//! the coefficient field. Exact over `Rat` and `Gaussian<Rat>`, ordinary
//! partial pivoting over `f64`.

use crate::error::{Error, Result};
use crate::scalar::{Coeff, Pivot};

/// Solve `M x = rhs` for several right-hand sides at once, in place.
pub fn solve<T: Coeff + Pivot>(m: &[Vec<T>], rhs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = m.len();
    let k = rhs.len();
    let mut aug: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut row = m[i].clone();
            for r in rhs {
                row.push(r[i].clone());
            }
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                aug[i][col]
                    .pivot_score()
                    .partial_cmp(&aug[j][col].pivot_score())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if aug[pivot_row][col].is_zero() {
            return Err(Error::Singular {
                context: "generic solve",
                cond: f64::INFINITY,
            });
        }
        aug.swap(col, pivot_row);
        let inv = T::one() / aug[col][col].clone();
        for j in col..(n + k) {
            aug[col][j] = aug[col][j].clone() * inv.clone();
        }
        for i in 0..n {
            if i == col || aug[i][col].is_zero() {
                continue;
            }
            let f = aug[i][col].clone();
            for j in col..(n + k) {
                let delta = f.clone() * aug[col][j].clone();
                aug[i][j] = aug[i][j].clone() - delta;
            }
        }
    }
    Ok((0..k)
        .map(|r| (0..n).map(|i| aug[i][n + r].clone()).collect())
        .collect())
}

pub fn inverse<T: Coeff + Pivot>(m: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = m.len();
    let eye: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    // Columns of the inverse, as solves against unit vectors.
    let cols = solve(m, &eye)?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect())
}

pub fn determinant<T: Coeff + Pivot>(m: &[Vec<T>]) -> T {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .pivot_score()
                    .partial_cmp(&a[j][col].pivot_score())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot_row][col].is_zero() {
            return T::zero();
        }
        if pivot_row != col {
            a.swap(col, pivot_row);
            det = -det;
        }
        det = det * a[col][col].clone();
        let inv = T::one() / a[col][col].clone();
        for i in (col + 1)..n {
            if a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone() * inv.clone();
            for j in col..n {
                let delta = f.clone() * a[col][j].clone();
                a[i][j] = a[i][j].clone() - delta;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;
    use num_traits::{One, Zero};

    fn rat(p: i64, q: i64) -> Rat {
        Rat::new(p.into(), q.into())
    }

    #[test]
    fn exact_inverse_roundtrip() {
        let m = vec![
            vec![rat(2, 1), rat(1, 3)],
            vec![rat(-1, 2), rat(1, 1)],
        ];
        let inv = inverse(&m).unwrap();
        // m * inv = I exactly.
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Rat::zero();
                for k in 0..2 {
                    s += m[i][k].clone() * inv[k][j].clone();
                }
                assert_eq!(s, if i == j { Rat::one() } else { Rat::zero() });
            }
        }
        let d = determinant(&m);
        assert_eq!(d, rat(2, 1) + rat(1, 6));
    }

    #[test]
    fn f64_determinant() {
        let m = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!((determinant(&m) + 1.0).abs() < 1e-15);
    }
}
