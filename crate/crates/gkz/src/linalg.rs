//! Exact integer and rational linear algebra: Smith normal form, kernel
//! lattices, fraction-free rank, rational solving, and polyhedral cone
//! membership. No floating point anywhere in this module.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::scalar::ExactScalar;
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("generators do not span the ambient space")]
    NotFullDimensional,
}

/// Dense row-major integer matrix with arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix<E: ExactScalar = Int> {
    rows: usize,
    cols: usize,
    entries: Vec<E>,
}

impl<E: ExactScalar> IntMatrix<E> {
    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self, LinalgError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LinalgError::DimensionMismatch(
                "matrix must have at least one row and one column".into(),
            ));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch(
                "rows have unequal lengths".into(),
            ));
        }
        let nrows = rows.len();
        Ok(Self {
            rows: nrows,
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| E::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![E::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = E::one();
        }
        Self {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &E {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn diagonal(&self) -> Vec<E> {
        (0..self.rows.min(self.cols))
            .map(|i| self.at(i, i).clone())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.at(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = E::zero();
                for k in 0..self.cols {
                    acc = acc + self.at(i, k).clone() * other.at(k, j).clone();
                }
                entries.push(acc);
            }
        }
        Self {
            rows: self.rows,
            cols: other.cols,
            entries,
        }
    }

    pub fn mul_vec(&self, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                let mut acc = E::zero();
                for j in 0..self.cols {
                    acc = acc + self.at(i, j).clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i -= q * row_t
    fn row_sub(&mut self, i: usize, t: usize, q: &E) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let delta = q.clone() * self.at(t, j).clone();
            let v = self.at(i, j).clone() - delta;
            self.set(i, j, v);
        }
    }

    /// col_j -= q * col_t
    fn col_sub(&mut self, j: usize, t: usize, q: &E) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let delta = q.clone() * self.at(i, t).clone();
            let v = self.at(i, j).clone() - delta;
            self.set(i, j, v);
        }
    }

    /// row_t += row_i
    fn row_add(&mut self, t: usize, i: usize) {
        for j in 0..self.cols {
            let v = self.at(t, j).clone() + self.at(i, j).clone();
            self.set(t, j, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.at(i, j).clone();
            self.set(i, j, v);
        }
    }
}

impl<E: ExactScalar> std::fmt::Debug for IntMatrix<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(
                f,
                "  {}",
                self.row(i)
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            )?;
        }
        write!(f, "]")
    }
}

/// U * M * V = S with U, V unimodular and S diagonal with a divisibility chain.
#[derive(Debug, Clone)]
pub struct SnfDecomposition<E: ExactScalar = Int> {
    pub s: IntMatrix<E>,
    pub u: IntMatrix<E>,
    pub v: IntMatrix<E>,
}

impl<E: ExactScalar> SnfDecomposition<E> {
    pub fn rank(&self) -> usize {
        self.s
            .diagonal()
            .iter()
            .take_while(|d| !d.is_zero())
            .count()
    }
}

fn pivot_position<E: ExactScalar>(m: &IntMatrix<E>, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(E, usize, usize)> = None;
    for i in t..m.rows() {
        for j in t..m.cols() {
            let v = m.at(i, j);
            if v.is_zero() {
                continue;
            }
            let a = v.abs();
            match &best {
                Some((cur, _, _)) if *cur <= a => {}
                _ => best = Some((a, i, j)),
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Smith normal form. Pivot: smallest absolute value in the trailing
/// submatrix, ties broken by lowest (row, col).
pub fn smith_normal_form<E: ExactScalar>(m: &IntMatrix<E>) -> SnfDecomposition<E> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = pivot_position(&s, t) else {
            break;
        };
        s.swap_rows(t, pi);
        u.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);
        'reduce: loop {
            // clear column t below the pivot; a nonzero remainder becomes the new pivot
            for i in t + 1..rows {
                if s.at(i, t).is_zero() {
                    continue;
                }
                let (q, r) = s.at(i, t).div_rem(s.at(t, t));
                s.row_sub(i, t, &q);
                u.row_sub(i, t, &q);
                if !r.is_zero() {
                    s.swap_rows(t, i);
                    u.swap_rows(t, i);
                    continue 'reduce;
                }
            }
            // clear row t right of the pivot
            for j in t + 1..cols {
                if s.at(t, j).is_zero() {
                    continue;
                }
                let (q, r) = s.at(t, j).div_rem(s.at(t, t));
                s.col_sub(j, t, &q);
                v.col_sub(j, t, &q);
                if !r.is_zero() {
                    s.swap_cols(t, j);
                    v.swap_cols(t, j);
                    continue 'reduce;
                }
            }
            // divisibility chain: fold a bad row into row t and keep reducing
            for i in t + 1..rows {
                for j in t + 1..cols {
                    if !s.at(i, j).mod_floor(s.at(t, t)).is_zero() {
                        s.row_add(t, i);
                        u.row_add(t, i);
                        continue 'reduce;
                    }
                }
            }
            break;
        }
        if s.at(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    SnfDecomposition { s, u, v }
}

/// Basis of the lattice { v : M v = 0 }: the trailing columns of the SNF
/// column transform.
pub fn integer_kernel_basis<E: ExactScalar>(m: &IntMatrix<E>) -> Vec<Vec<E>> {
    let snf = smith_normal_form(m);
    let rank = snf.rank();
    (rank..m.cols()).map(|j| snf.v.col(j)).collect()
}

fn div_exact<E: ExactScalar>(a: E, b: &E) -> E {
    let (q, r) = a.div_rem(b);
    debug_assert!(r.is_zero(), "fraction-free division must be exact");
    q
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
pub fn rational_rank<E: ExactScalar>(m: &IntMatrix<E>) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let mut rank = 0;
    let mut prev = E::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a.at(i, col).is_zero()) else {
            continue;
        };
        a.swap_rows(rank, p);
        for i in rank + 1..rows {
            for j in col + 1..cols {
                let num = a.at(rank, col).clone() * a.at(i, j).clone()
                    - a.at(i, col).clone() * a.at(rank, j).clone();
                a.set(i, j, div_exact(num, &prev));
            }
            a.set(i, col, E::zero());
        }
        prev = a.at(rank, col).clone();
        rank += 1;
    }
    rank
}

/// Determinant of a square matrix by fraction-free elimination.
pub fn determinant<E: ExactScalar>(m: &IntMatrix<E>) -> E {
    assert_eq!(m.rows(), m.cols(), "determinant of a non-square matrix");
    let mut a = m.clone();
    let n = a.rows();
    let mut prev = E::one();
    let mut negate = false;
    for t in 0..n {
        let Some(p) = (t..n).find(|&i| !a.at(i, t).is_zero()) else {
            return E::zero();
        };
        if p != t {
            a.swap_rows(t, p);
            negate = !negate;
        }
        for i in t + 1..n {
            for j in t + 1..n {
                let num =
                    a.at(t, t).clone() * a.at(i, j).clone() - a.at(i, t).clone() * a.at(t, j).clone();
                a.set(i, j, div_exact(num, &prev));
            }
            a.set(i, t, E::zero());
        }
        prev = a.at(t, t).clone();
    }
    let d = a.at(n - 1, n - 1).clone();
    if negate {
        -d
    } else {
        d
    }
}

/// One exact rational solution of M x = rhs (free variables set to zero),
/// or `None` if the system is inconsistent.
pub fn solve_rational<E: ExactScalar>(
    m: &IntMatrix<E>,
    rhs: &[Ratio<E>],
) -> Result<Option<Vec<Ratio<E>>>, LinalgError> {
    if rhs.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs length {} does not match row count {}",
            rhs.len(),
            m.rows()
        )));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<Ratio<E>>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| Ratio::from_integer(m.at(i, j).clone()))
                .collect()
        })
        .collect();
    let mut b: Vec<Ratio<E>> = rhs.to_vec();
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        b.swap(rank, p);
        let inv = a[rank][col].clone();
        for j in col..cols {
            a[rank][j] = a[rank][j].clone() / inv.clone();
        }
        b[rank] = b[rank].clone() / inv;
        for i in 0..rows {
            if i == rank || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in col..cols {
                a[i][j] = a[i][j].clone() - f.clone() * a[rank][j].clone();
            }
            b[i] = b[i].clone() - f * b[rank].clone();
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    for i in rank..rows {
        if !b[i].is_zero() {
            return Ok(None);
        }
    }
    let mut x = vec![Ratio::from_integer(E::zero()); cols];
    for (row, &col) in pivot_cols.iter().enumerate() {
        x[col] = b[row].clone();
    }
    Ok(Some(x))
}

fn primitive<E: ExactScalar>(mut v: Vec<E>) -> Vec<E> {
    let mut g = E::zero();
    for e in &v {
        g = g.gcd(e);
    }
    if g.is_zero() || g.is_one() {
        return v;
    }
    for e in &mut v {
        *e = div_exact(e.clone(), &g);
    }
    v
}

fn check_generators<E: ExactScalar>(generators: &[Vec<E>]) -> Result<usize, LinalgError> {
    if generators.is_empty() {
        return Err(LinalgError::NotFullDimensional);
    }
    let d = generators[0].len();
    if d == 0 || generators.iter().any(|g| g.len() != d) {
        return Err(LinalgError::DimensionMismatch(
            "generators must share a positive dimension".into(),
        ));
    }
    let m = IntMatrix::from_rows(generators.to_vec()).expect("nonempty generator matrix");
    if rational_rank(&m) != d {
        return Err(LinalgError::NotFullDimensional);
    }
    Ok(d)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Primitive inward normals of the facets of the cone spanned by the
/// generators. Brute force over (dim-1)-subsets; fine at desk scale
/// (the count is C(m, dim-1) with m <= ~12, dim <= ~4).
pub fn cone_facet_normals<E: ExactScalar>(
    generators: &[Vec<E>],
) -> Result<Vec<Vec<E>>, LinalgError> {
    let d = check_generators(generators)?;
    if d == 1 {
        // a full-dimensional cone on the line is a half-line or the whole line
        let pos = generators.iter().any(|g| g[0].is_positive());
        let neg = generators.iter().any(|g| g[0].is_negative());
        return Ok(match (pos, neg) {
            (true, false) => vec![vec![E::one()]],
            (false, true) => vec![vec![-E::one()]],
            _ => vec![],
        });
    }
    let mut normals = std::collections::BTreeSet::new();
    for subset in subsets(generators.len(), d - 1) {
        let rows: Vec<Vec<E>> = subset.iter().map(|&i| generators[i].clone()).collect();
        let m = IntMatrix::from_rows(rows).expect("subset matrix");
        if rational_rank(&m) != d - 1 {
            continue;
        }
        let kernel = integer_kernel_basis(&m);
        debug_assert_eq!(kernel.len(), 1);
        let n = primitive(kernel.into_iter().next().expect("corank-one kernel"));
        let mut pos = false;
        let mut neg = false;
        for g in generators {
            let mut dot = E::zero();
            for (a, b) in n.iter().zip(g) {
                dot = dot + a.clone() * b.clone();
            }
            if dot.is_positive() {
                pos = true;
            } else if dot.is_negative() {
                neg = true;
            }
        }
        match (pos, neg) {
            (true, false) => {
                normals.insert(n);
            }
            (false, true) => {
                normals.insert(n.into_iter().map(|e| -e).collect());
            }
            _ => {}
        }
    }
    Ok(normals.into_iter().collect())
}

/// Strict membership in the interior of the cone spanned by the generators:
/// positive pairing with every inward facet normal.
pub fn cone_interior_contains<E: ExactScalar>(
    generators: &[Vec<E>],
    point: &[Ratio<E>],
) -> Result<bool, LinalgError> {
    let d = check_generators(generators)?;
    if point.len() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "point has dimension {}, generators have {}",
            point.len(),
            d
        )));
    }
    let normals = cone_facet_normals(generators)?;
    Ok(normals.iter().all(|n| {
        let mut dot = Ratio::from_integer(E::zero());
        for (a, b) in n.iter().zip(point) {
            dot = dot + Ratio::from_integer(a.clone()) * b.clone();
        }
        dot.is_positive()
    }))
}
