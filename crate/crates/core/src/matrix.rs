//! 5×5 matrices over a [`Scalar`] plus the small dense elimination routines
//! used for rank and span checks.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Scalar;

pub const DIM: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct DkpMatrix<S> {
    entries: [[S; DIM]; DIM],
}

impl<S: Scalar> DkpMatrix<S> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> S) -> Self {
        Self {
            entries: std::array::from_fn(|r| std::array::from_fn(|c| f(r, c))),
        }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| S::zero())
    }

    pub fn identity() -> Self {
        Self::from_fn(|r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn diagonal(d: [i64; DIM]) -> Self {
        Self::from_fn(|r, c| if r == c { S::from_i64(d[r]) } else { S::zero() })
    }

    /// Outer product `u vᵀ` of column `u` and row `v`.
    pub fn outer(u: &[S; DIM], v: &[S; DIM]) -> Self {
        Self::from_fn(|r, c| u[r].clone() * v[c].clone())
    }

    pub fn trace(&self) -> S {
        (1..DIM).fold(self.entries[0][0].clone(), |acc, i| acc + self.entries[i][i].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|r, c| self.entries[c][r].clone())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(|r, c| self.entries[c][r].conj())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::from_fn(|r, c| self.entries[r][c].clone() * s.clone())
    }

    /// Largest entry modulus; the residual norm used throughout.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().map(S::modulus).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.entries.iter().flatten().all(|x| x.is_negligible(tol))
    }

    pub fn rank(&self, tol: f64) -> usize {
        rank(self.entries.iter().map(|r| r.to_vec()).collect(), tol)
    }

    /// Row-major flattening into a 25-vector.
    pub fn flatten(&self) -> Vec<S> {
        self.entries.iter().flatten().cloned().collect()
    }

    pub fn mul_vec(&self, v: &[S; DIM]) -> [S; DIM] {
        std::array::from_fn(|r| dot(&self.entries[r], v))
    }

    /// Row vector times matrix: `vᵀ M`.
    pub fn vec_mul(&self, v: &[S; DIM]) -> [S; DIM] {
        std::array::from_fn(|c| {
            (1..DIM).fold(v[0].clone() * self.entries[0][c].clone(), |acc, r| {
                acc + v[r].clone() * self.entries[r][c].clone()
            })
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DkpMatrix<T> {
        DkpMatrix::from_fn(|r, c| f(&self.entries[r][c]))
    }
}

pub fn dot<S: Scalar>(a: &[S; DIM], b: &[S; DIM]) -> S {
    (1..DIM).fold(a[0].clone() * b[0].clone(), |acc, i| acc + a[i].clone() * b[i].clone())
}

impl<S> Index<(usize, usize)> for DkpMatrix<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.entries[r][c]
    }
}

impl<S> IndexMut<(usize, usize)> for DkpMatrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.entries[r][c]
    }
}

impl<S: Scalar> Add for &DkpMatrix<S> {
    type Output = DkpMatrix<S>;
    fn add(self, rhs: Self) -> DkpMatrix<S> {
        DkpMatrix::from_fn(|r, c| self.entries[r][c].clone() + rhs.entries[r][c].clone())
    }
}

impl<S: Scalar> Sub for &DkpMatrix<S> {
    type Output = DkpMatrix<S>;
    fn sub(self, rhs: Self) -> DkpMatrix<S> {
        DkpMatrix::from_fn(|r, c| self.entries[r][c].clone() - rhs.entries[r][c].clone())
    }
}

impl<S: Scalar> Neg for &DkpMatrix<S> {
    type Output = DkpMatrix<S>;
    fn neg(self) -> DkpMatrix<S> {
        DkpMatrix::from_fn(|r, c| -self.entries[r][c].clone())
    }
}

impl<S: Scalar> Mul for &DkpMatrix<S> {
    type Output = DkpMatrix<S>;
    fn mul(self, rhs: Self) -> DkpMatrix<S> {
        DkpMatrix::from_fn(|r, c| {
            (1..DIM).fold(self.entries[r][0].clone() * rhs.entries[0][c].clone(), |acc, k| {
                acc + self.entries[r][k].clone() * rhs.entries[k][c].clone()
            })
        })
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<S: Scalar> $tr for DkpMatrix<S> {
            type Output = DkpMatrix<S>;
            fn $m(self, rhs: Self) -> DkpMatrix<S> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Row rank by Gaussian elimination with largest-modulus pivoting.
pub fn rank<S: Scalar>(mut rows: Vec<Vec<S>>, tol: f64) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let pivot = (rank..rows.len())
            .filter(|&r| !rows[r][col].is_negligible(tol))
            .max_by(|&a, &b| rows[a][col].modulus().total_cmp(&rows[b][col].modulus()));
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let pivot_val = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_negligible(0.0) {
                continue;
            }
            let factor = rows[r][col].clone() / pivot_val.clone();
            for c in col..ncols {
                let delta = factor.clone() * rows[rank][c].clone();
                rows[r][c] = rows[r][c].clone() - delta;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Solve `Σ_j x_j columns[j] = target` for a consistent system whose columns
/// are linearly independent. Returns `None` if the target is outside the span
/// or the columns are dependent.
pub fn solve_in_span<S: Scalar>(columns: &[Vec<S>], target: &[S], tol: f64) -> Option<Vec<S>> {
    let n = columns.len();
    let m = target.len();
    // augmented m × (n+1)
    let mut a: Vec<Vec<S>> = (0..m)
        .map(|r| {
            let mut row: Vec<S> = columns.iter().map(|c| c[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(n);
    for col in 0..n {
        let p = (pivot_row..m)
            .filter(|&r| !a[r][col].is_negligible(tol))
            .max_by(|&x, &y| a[x][col].modulus().total_cmp(&a[y][col].modulus()))?;
        a.swap(pivot_row, p);
        let inv = S::one() / a[pivot_row][col].clone();
        for c in col..=n {
            a[pivot_row][c] = a[pivot_row][c].clone() * inv.clone();
        }
        for r in 0..m {
            if r == pivot_row || a[r][col].is_negligible(0.0) {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..=n {
                let delta = factor.clone() * a[pivot_row][c].clone();
                a[r][c] = a[r][c].clone() - delta;
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if (pivot_row..m).any(|r| !a[r][n].is_negligible(tol)) {
        return None;
    }
    Some(pivots.into_iter().map(|r| a[r][n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;
    use num_complex::Complex64;

    #[test]
    fn identity_is_neutral() {
        let m = DkpMatrix::<Exact>::from_fn(|r, c| Exact::from_i64((r * 5 + c) as i64));
        let id = DkpMatrix::identity();
        assert_eq!(&m * &id, m);
        assert_eq!(&id * &m, m);
        assert_eq!(id.trace(), Exact::from_i64(5));
    }

    #[test]
    fn rank_of_integer_matrix() {
        let m = DkpMatrix::<Exact>::from_fn(|r, c| Exact::from_i64((r * 5 + c) as i64));
        assert_eq!(m.rank(0.0), 2);
        let f = m.map(|x| x.to_complex64());
        assert_eq!(f.rank(1e-9), 2);
        assert_eq!(DkpMatrix::<Complex64>::identity().rank(1e-12), 5);
    }

    #[test]
    fn span_solve() {
        let cols = vec![
            vec![Exact::from_i64(1), Exact::from_i64(0), Exact::from_i64(1)],
            vec![Exact::from_i64(0), Exact::from_i64(1), Exact::from_i64(1)],
        ];
        let target = vec![Exact::from_i64(2), Exact::from_i64(-3), Exact::from_i64(-1)];
        let x = solve_in_span(&cols, &target, 0.0).unwrap();
        assert_eq!(x, vec![Exact::from_i64(2), Exact::from_i64(-3)]);
        let off = vec![Exact::from_i64(1), Exact::from_i64(1), Exact::from_i64(0)];
        assert!(solve_in_span(&cols, &off, 0.0).is_none());
    }
}
