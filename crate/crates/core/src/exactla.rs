//! Exact linear algebra: rank, kernels and the strict-positivity feasibility
//! test behind conservation laws.

use serde::Serialize;
use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::Exact;
use crate::signfix::FixStep;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactlaError {
    #[error("fixed matrix is {got:?}, expected {expected:?} for a one-step fix")]
    Shape {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("fix step refers to entry ({row}, {col}) which is not a positive entry of S")]
    StepEntry { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis<T> {
    pub vectors: Vec<Vec<T>>,
    pub side: Side,
}

impl<T> KernelBasis<T> {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationResult<T> {
    pub conserving: bool,
    /// `m` with every entry ≥ 1 and `mᵗS = 0`.
    pub witness: Option<Vec<T>>,
}

/// Rank by fraction-free (Bareiss) elimination; the first nonzero entry in
/// each column is taken as pivot.
pub fn rank<T: Exact>(m: &Matrix<T>) -> usize {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut prev = T::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(p, r);
        let piv = a[(r, c)].clone();
        for i in r + 1..rows {
            let lead = a[(i, c)].clone();
            if lead.is_zero() {
                // the Bareiss update then reduces to a scaling by piv / prev
                for j in c + 1..cols {
                    if !a[(i, j)].is_zero() {
                        a[(i, j)] = piv.clone() * a[(i, j)].clone() / prev.clone();
                    }
                }
                continue;
            }
            for j in c + 1..cols {
                let v = (piv.clone() * a[(i, j)].clone() - lead.clone() * a[(r, j)].clone())
                    / prev.clone();
                a[(i, j)] = v;
            }
            a[(i, c)] = T::zero();
        }
        prev = piv;
        r += 1;
    }
    r
}

/// Reduced row echelon form and pivot columns.
pub fn rref<T: Exact>(m: &Matrix<T>) -> (Matrix<T>, Vec<usize>) {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        a.swap_rows(p, r);
        let piv = a[(r, c)].clone();
        for j in c..cols {
            if !a[(r, j)].is_zero() {
                a[(r, j)] = a[(r, j)].clone() / piv.clone();
            }
        }
        for i in 0..rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in c..cols {
                if a[(r, j)].is_zero() {
                    continue;
                }
                let v = a[(i, j)].clone() - f.clone() * a[(r, j)].clone();
                a[(i, j)] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

fn right_kernel<T: Exact>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let (reduced, pivots) = rref(m);
    let cols = m.cols();
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![T::zero(); cols];
        v[free] = T::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -reduced[(r, free)].clone();
        }
        out.push(T::primitive(&v));
    }
    out
}

/// Basis of `{v : Mv = 0}` (right) or `{u : uᵗM = 0}` (left), one vector per
/// free column, scaled to primitive integer form where the scalar allows.
pub fn kernel_basis<T: Exact>(m: &Matrix<T>, side: Side) -> KernelBasis<T> {
    let vectors = match side {
        Side::Right => right_kernel(m),
        Side::Left => right_kernel(&m.transpose()),
    };
    KernelBasis { vectors, side }
}

/// Does `span(a) == span(b)`? Both inputs are lists of vectors of equal length.
pub fn same_span<T: Exact>(a: &[Vec<T>], b: &[Vec<T>], len: usize) -> bool {
    let stack = |vs: &[Vec<T>]| -> usize {
        if vs.is_empty() {
            0
        } else {
            rank(&Matrix::from_rows(vs.to_vec()))
        }
    };
    let ra = stack(a);
    let rb = stack(b);
    if ra != rb {
        return false;
    }
    if len == 0 {
        return true;
    }
    let joint: Vec<Vec<T>> = a.iter().chain(b).cloned().collect();
    stack(&joint) == ra
}

/// Decides feasibility of `{m : Sᵗm = 0, m ≥ 1}` by exact phase-1 simplex
/// with Bland's rule.
pub fn is_conserving<T: Exact>(s: &Matrix<T>) -> ConservationResult<T> {
    // m = 1 + y, y ≥ 0:  Sᵗ y = -Sᵗ 1
    let st = s.transpose();
    let (m_rows, n) = st.shape();
    let ones = vec![T::one(); n];
    let rhs: Vec<T> = st.mul_vec(&ones).into_iter().map(|v| -v).collect();
    let width = n + m_rows + 1;
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m_rows + 1);
    for i in 0..m_rows {
        let flip = rhs[i].is_negative();
        let mut row = vec![T::zero(); width];
        for j in 0..n {
            row[j] = if flip {
                -st[(i, j)].clone()
            } else {
                st[(i, j)].clone()
            };
        }
        row[n + i] = T::one();
        row[width - 1] = if flip { -rhs[i].clone() } else { rhs[i].clone() };
        tab.push(row);
    }
    let mut obj = vec![T::zero(); width];
    for row in &tab {
        for j in 0..n {
            obj[j] = obj[j].clone() - row[j].clone();
        }
        obj[width - 1] = obj[width - 1].clone() - row[width - 1].clone();
    }
    tab.push(obj);
    let mut basis: Vec<usize> = (n..n + m_rows).collect();

    loop {
        let Some(enter) = (0..n).find(|&j| tab[m_rows][j].is_negative()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..m_rows {
            if !tab[i][enter].is_positive() {
                continue;
            }
            leave = match leave {
                None => Some(i),
                Some(l) => {
                    let ri = tab[i][width - 1].clone() / tab[i][enter].clone();
                    let rl = tab[l][width - 1].clone() / tab[l][enter].clone();
                    if ri < rl || (ri == rl && basis[i] < basis[l]) {
                        Some(i)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        // phase-1 objective is bounded below by zero
        let leave = leave.expect("phase-1 simplex cannot be unbounded");
        let piv = tab[leave][enter].clone();
        for v in tab[leave].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = tab[leave].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i == leave || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * p.clone();
            }
        }
        basis[leave] = enter;
    }

    if !tab[m_rows][width - 1].is_zero() {
        return ConservationResult {
            conserving: false,
            witness: None,
        };
    }
    let mut m = vec![T::one(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            m[b] = T::one() + tab[i][width - 1].clone();
        }
    }
    debug_assert!(s.vec_mul(&m).iter().all(|v| v.is_zero()));
    ConservationResult {
        conserving: true,
        witness: Some(m),
    }
}

fn all_positive<T: Exact>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_positive())
}

fn all_nonnegative<T: Exact>(v: &[T]) -> bool {
    v.iter().all(|x| !x.is_negative())
}

/// Checks that padding `v ↦ (v, v_ℓ)` is a bijection `ker S → ker Š`, that
/// `u ↦ (u, S_qℓ·u_q)` is one between left kernels, and that both maps keep
/// positivity, using exactly computed bases.
pub fn kernel_correspondence_check<T: Exact>(
    s: &Matrix<T>,
    s_check: &Matrix<T>,
    step: &FixStep,
) -> Result<bool, ExactlaError> {
    let (d, dp) = s.shape();
    let expected = (d + 1, dp + 1);
    if s_check.shape() != expected {
        return Err(ExactlaError::Shape {
            got: s_check.shape(),
            expected,
        });
    }
    let (q, l) = (step.zeroed_species, step.modified_column);
    if q >= d || l >= dp || !s[(q, l)].is_positive() {
        return Err(ExactlaError::StepEntry { row: q, col: l });
    }
    let s_ql = s[(q, l)].clone();

    let ker = kernel_basis(s, Side::Right);
    let ker_c = kernel_basis(s_check, Side::Right);
    let left = kernel_basis(s, Side::Left);
    let left_c = kernel_basis(s_check, Side::Left);
    if ker.dim() != ker_c.dim() || left.dim() != left_c.dim() {
        return Ok(false);
    }

    let zero = |v: &[T]| v.iter().all(|x| x.is_zero());
    for v in &ker.vectors {
        let mut lifted = v.clone();
        lifted.push(v[l].clone());
        if !zero(&s_check.mul_vec(&lifted)) {
            return Ok(false);
        }
        if all_positive(v) != all_positive(&lifted)
            || all_nonnegative(v) != all_nonnegative(&lifted)
        {
            return Ok(false);
        }
    }
    for w in &ker_c.vectors {
        if w[dp] != w[l] || !zero(&s.mul_vec(&w[..dp])) {
            return Ok(false);
        }
    }
    for u in &left.vectors {
        let mut lifted = u.clone();
        lifted.push(s_ql.clone() * u[q].clone());
        if !zero(&s_check.vec_mul(&lifted)) {
            return Ok(false);
        }
        if all_positive(u) != all_positive(&lifted)
            || all_nonnegative(u) != all_nonnegative(&lifted)
        {
            return Ok(false);
        }
    }
    for z in &left_c.vectors {
        if z[d] != s_ql.clone() * z[q].clone() || !zero(&s.vec_mul(&z[..d])) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::{Rational, RationalMatrix};
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_integer(x.into())).collect()
    }

    /// Rank from the dimension of the row space built greedily with
    /// independent floating-free integer elimination (no pivot-order rules).
    fn rank_oracle(rows: &[Vec<i64>]) -> usize {
        // exhaustive minors: largest k with a nonzero k×k minor
        let m = rows.len();
        let n = rows[0].len();
        fn det(a: &[Vec<i128>]) -> i128 {
            if a.len() == 1 {
                return a[0][0];
            }
            let mut acc = 0;
            for j in 0..a.len() {
                let minor: Vec<Vec<i128>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                acc += sign * a[0][j] * det(&minor);
            }
            acc
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if n < k {
                return vec![];
            }
            let mut out = subsets(n - 1, k);
            for mut s in subsets(n - 1, k - 1) {
                s.push(n - 1);
                out.push(s);
            }
            out
        }
        for k in (1..=m.min(n)).rev() {
            for rs in subsets(m, k) {
                for cs in subsets(n, k) {
                    let a: Vec<Vec<i128>> = rs
                        .iter()
                        .map(|&r| cs.iter().map(|&c| rows[r][c] as i128).collect())
                        .collect();
                    if det(&a) != 0 {
                        return k;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn rank_of_small_matrices() {
        let s1 = RationalMatrix::from_i64_rows(&[[-2, -1, 2], [3, -1, -3], [1, 1, -1]]);
        assert_eq!(rank(&s1), 2);
        assert_eq!(
            rank_oracle(&[vec![-2, -1, 2], vec![3, -1, -3], vec![1, 1, -1]]),
            2
        );
        assert_eq!(rank(&RationalMatrix::identity(3)), 3);
        assert_eq!(rank(&RationalMatrix::zeros(3, 4)), 0);
    }

    #[test]
    fn conserving_pair_kernels() {
        let s = RationalMatrix::from_i64_rows(&[
            [-2, -1, 4, 4, -4],
            [-12, 4, 4, 0, 0],
            [4, -1, -2, 0, 0],
            [10, -2, -6, -4, 4],
        ]);
        let k = kernel_basis(&s, Side::Right);
        assert!(same_span(
            &k.vectors,
            &[ints(&[0, 0, 0, 1, 1]), ints(&[1, 2, 1, 0, 0])],
            5
        ));
        let l = kernel_basis(&s, Side::Left);
        assert_eq!(l.vectors, vec![ints(&[1, 1, 1, 1])]);

        let st = RationalMatrix::from_i64_rows(&[
            [-2, -1, 0, 0, -4, 8],
            [-12, 0, 4, 0, 0, 4],
            [0, -1, -2, 0, 0, 4],
            [0, -2, -6, -4, 0, 14],
            [1, 1, 1, 1, 1, -5],
        ]);
        let k = kernel_basis(&st, Side::Right);
        assert_eq!(k.vectors, vec![ints(&[2, 0, 4, 1, 3, 2])]);
        assert_eq!(kernel_basis(&st, Side::Left).dim(), 0);
        assert_eq!(kernel_basis(&RationalMatrix::identity(4), Side::Right).dim(), 0);
    }

    #[test]
    fn conservation_examples() {
        let s = RationalMatrix::from_i64_rows(&[
            [-2, -1, 4, 4, -4],
            [-12, 4, 4, 0, 0],
            [4, -1, -2, 0, 0],
            [10, -2, -6, -4, 4],
        ]);
        let c = is_conserving(&s);
        assert!(c.conserving);
        assert_eq!(c.witness, Some(ints(&[1, 1, 1, 1])));

        let st = RationalMatrix::from_i64_rows(&[
            [-2, -1, 0, 0, -4, 8],
            [-12, 0, 4, 0, 0, 4],
            [0, -1, -2, 0, 0, 4],
            [0, -2, -6, -4, 0, 14],
            [1, 1, 1, 1, 1, -5],
        ]);
        assert!(!is_conserving(&st).conserving);

        let z = RationalMatrix::zeros(1, 1);
        assert_eq!(is_conserving(&z).witness, Some(ints(&[1])));

        // A -> B conserves A + B; A -> 2B needs 2A + B
        let ab = RationalMatrix::from_i64_rows(&[[-1], [2]]);
        let w = is_conserving(&ab).witness.unwrap();
        assert!(ab.vec_mul(&w).iter().all(|v| *v == Rational::from_integer(0.into())));
        // A -> 0 is not conserving
        assert!(!is_conserving(&RationalMatrix::from_i64_rows(&[[-1]])).conserving);
    }

    #[test]
    fn works_over_machine_rationals() {
        let m = Matrix::<Ratio<i64>>::from_i64_rows(&[[1, 2, 3], [2, 4, 6], [1, 0, 1]]);
        assert_eq!(rank(&m), 2);
        assert_eq!(kernel_basis(&m, Side::Right).dim(), 1);
    }

    proptest! {
        #[test]
        fn rank_nullity_and_exact_residuals(
            rows in 1usize..5, cols in 1usize..6,
            seed in proptest::collection::vec(-3i64..=3, 30)
        ) {
            let data: Vec<Vec<i64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * cols + j]).collect()).collect();
            let m = RationalMatrix::from_i64_rows(&data);
            let r = rank(&m);
            prop_assert_eq!(r, rank_oracle(&data));
            let right = kernel_basis(&m, Side::Right);
            let left = kernel_basis(&m, Side::Left);
            prop_assert_eq!(r + right.dim(), cols);
            prop_assert_eq!(r + left.dim(), rows);
            for v in &right.vectors {
                prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
            }
            for u in &left.vectors {
                prop_assert!(m.vec_mul(u).iter().all(|x| x.is_zero()));
            }
            let c = is_conserving(&m);
            if let Some(w) = c.witness {
                prop_assert!(m.vec_mul(&w).iter().all(|x| x.is_zero()));
                prop_assert!(w.iter().all(|x| *x >= Rational::from_integer(1.into())));
            }
        }
    }
}
