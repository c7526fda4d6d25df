//! Assembly and validation of the hypergeometric datum: the block matrix, the
//! twist vector, the interior-cone check, and the two families of ideal
//! generators (Euler and box operators).

use num_rational::Ratio;
use num_traits::Zero;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

use crate::linalg::{cone_interior_contains, smith_normal_form, IntMatrix, LinalgError};
use crate::scalar::ExactScalar;
use crate::volume::{normalized_volume, PointConfiguration};
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("twist component {index} is an integer")]
    IntegralBeta { index: usize },
    #[error("matrix does not have full rank")]
    NotFullRank,
    #[error("columns generate a proper sublattice")]
    LatticeNotSpanned,
}

/// The validated datum: r weight blocks on an n-torus and a rational twist.
/// `matrix` caches the assembled (r+n) x m block matrix whose first r rows
/// are block indicators and whose last n rows stack the weight columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GkzSystem<E: ExactScalar = Int> {
    r: usize,
    n: usize,
    weight_blocks: Vec<Vec<Vec<E>>>,
    beta_head: Vec<Ratio<E>>,
    matrix: IntMatrix<E>,
}

impl<E: ExactScalar> GkzSystem<E> {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight_blocks(&self) -> &[Vec<Vec<E>>] {
        &self.weight_blocks
    }

    pub fn beta_head(&self) -> &[Ratio<E>] {
        &self.beta_head
    }

    pub fn matrix(&self) -> &IntMatrix<E> {
        &self.matrix
    }

    pub fn column_count(&self) -> usize {
        self.matrix.cols()
    }

    /// Twist extended by zeros to length r+n.
    pub fn beta_full(&self) -> Vec<Ratio<E>> {
        let mut beta = self.beta_head.clone();
        beta.resize(self.r + self.n, Ratio::zero());
        beta
    }

    pub fn columns(&self) -> Vec<Vec<E>> {
        (0..self.matrix.cols()).map(|j| self.matrix.col(j)).collect()
    }

    pub fn point_configuration(&self) -> PointConfiguration<E> {
        PointConfiguration::new(self.r + self.n, self.columns())
    }

    /// Block index of a column position.
    pub fn block_of_column(&self, j: usize) -> usize {
        let mut acc = 0;
        for (k, block) in self.weight_blocks.iter().enumerate() {
            acc += block.len();
            if j < acc {
                return k;
            }
        }
        panic!("column index out of range");
    }
}

/// Build and validate a system from its raw parts.
pub fn assemble_system<E: ExactScalar>(
    r: usize,
    n: usize,
    weight_blocks: Vec<Vec<Vec<E>>>,
    beta_head: Vec<Ratio<E>>,
) -> Result<GkzSystem<E>, SystemError> {
    if r == 0 {
        return Err(SystemError::ShapeError("r must be at least 1".into()));
    }
    if n == 0 {
        return Err(SystemError::ShapeError("n must be at least 1".into()));
    }
    if weight_blocks.len() != r {
        return Err(SystemError::ShapeError(format!(
            "expected {} weight blocks, got {}",
            r,
            weight_blocks.len()
        )));
    }
    if beta_head.len() != r {
        return Err(SystemError::ShapeError(format!(
            "expected {} twist components, got {}",
            r,
            beta_head.len()
        )));
    }
    for (k, block) in weight_blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(SystemError::ShapeError(format!("block {} is empty", k + 1)));
        }
        for w in block {
            if w.len() != n {
                return Err(SystemError::ShapeError(format!(
                    "weight vector in block {} has length {}, expected {}",
                    k + 1,
                    w.len(),
                    n
                )));
            }
        }
    }
    for (k, b) in beta_head.iter().enumerate() {
        if b.is_integer() {
            return Err(SystemError::IntegralBeta { index: k + 1 });
        }
    }
    let m: usize = weight_blocks.iter().map(|b| b.len()).sum();
    let mut rows = vec![vec![E::zero(); m]; r + n];
    let mut col = 0;
    for (k, block) in weight_blocks.iter().enumerate() {
        for w in block {
            rows[k][col] = E::one();
            for (i, entry) in w.iter().enumerate() {
                rows[r + i][col] = entry.clone();
            }
            col += 1;
        }
    }
    let matrix = IntMatrix::from_rows(rows).expect("assembled matrix");
    let snf = smith_normal_form(&matrix);
    if snf.rank() != r + n {
        return Err(SystemError::NotFullRank);
    }
    if !snf.s.diagonal().iter().all(|d| d.is_one()) {
        return Err(SystemError::LatticeNotSpanned);
    }
    Ok(GkzSystem {
        r,
        n,
        weight_blocks,
        beta_head,
        matrix,
    })
}

/// Whether the negated twist lies strictly inside the cone spanned by the
/// matrix columns.
pub fn check_semi_nonresonant<E: ExactScalar>(sys: &GkzSystem<E>) -> Result<bool, LinalgError> {
    let minus_beta: Vec<Ratio<E>> = sys.beta_full().into_iter().map(|b| -b).collect();
    cone_interior_contains(&sys.columns(), &minus_beta)
}

/// First-order generator: coefficients are one matrix row, paired with the
/// matching twist component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerOperator<E: ExactScalar = Int> {
    /// 1-based row index into the system matrix.
    pub row: usize,
    pub coefficients: Vec<E>,
    pub beta: Ratio<E>,
}

impl<E: ExactScalar> std::fmt::Display for EulerOperator<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (j, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if first {
                write!(f, "{}*x{}*D{}", c, j + 1, j + 1)?;
                first = false;
            } else if c.is_negative() {
                write!(f, " - {}*x{}*D{}", c.abs(), j + 1, j + 1)?;
            } else {
                write!(f, " + {}*x{}*D{}", c, j + 1, j + 1)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " - ({})", self.beta)
    }
}

/// The r+n Euler operators of the system, in row order.
pub fn euler_operators<E: ExactScalar>(sys: &GkzSystem<E>) -> Vec<EulerOperator<E>> {
    let beta = sys.beta_full();
    (0..sys.r() + sys.n())
        .map(|i| EulerOperator {
            row: i + 1,
            coefficients: sys.matrix().row(i).to_vec(),
            beta: beta[i].clone(),
        })
        .collect()
}

/// Higher-order generator from a lattice relation among the columns, split
/// into its positive and negative parts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoxOperator<E: ExactScalar = Int> {
    pub nu_plus: Vec<E>,
    pub nu_minus: Vec<E>,
}

fn monomial_side<E: ExactScalar>(f: &mut std::fmt::Formatter<'_>, nu: &[E]) -> std::fmt::Result {
    let mut first = true;
    for (j, e) in nu.iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        if e.is_one() {
            write!(f, "D{}", j + 1)?;
        } else {
            write!(f, "D{}^{}", j + 1, e)?;
        }
    }
    if first {
        write!(f, "1")?;
    }
    Ok(())
}

impl<E: ExactScalar> std::fmt::Display for BoxOperator<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        monomial_side(f, &self.nu_plus)?;
        write!(f, " - ")?;
        monomial_side(f, &self.nu_minus)
    }
}

fn enumerate_bounded<E: ExactScalar>(m: usize, bound: usize) -> Vec<Vec<E>> {
    let mut out = Vec::new();
    let mut cur = vec![E::zero(); m];
    fn rec<E: ExactScalar>(pos: usize, left: usize, cur: &mut Vec<E>, out: &mut Vec<Vec<E>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = E::from(v as i64);
            rec(pos + 1, left - v, cur, out);
        }
        cur[pos] = E::zero();
    }
    rec(0, bound, &mut cur, &mut out);
    out
}

/// Every box operator whose positive part has total degree at most
/// `degree_bound`, deduplicated up to global sign and sorted. The bound-zero
/// call returns an empty list.
pub fn box_operators<E: ExactScalar>(
    sys: &GkzSystem<E>,
    degree_bound: usize,
) -> Vec<BoxOperator<E>> {
    if degree_bound == 0 {
        return Vec::new();
    }
    let m = sys.column_count();
    // bucket the bounded nonnegative vectors by their image under the matrix;
    // the indicator rows force both sides of a relation to share block masses,
    // so a degree cap on one side caps the other
    let mut buckets: HashMap<Vec<E>, Vec<Vec<E>>> = HashMap::new();
    for v in enumerate_bounded::<E>(m, degree_bound) {
        buckets.entry(sys.matrix().mul_vec(&v)).or_default().push(v);
    }
    let mut out = BTreeSet::new();
    for group in buckets.values() {
        for p in group {
            for q in group {
                if p == q {
                    continue;
                }
                let disjoint = p
                    .iter()
                    .zip(q)
                    .all(|(a, b)| a.is_zero() || b.is_zero());
                if !disjoint {
                    continue;
                }
                // orient so the first nonzero entry of p - q is positive
                let leading = p.iter().zip(q).find(|(a, b)| a != b);
                let Some((a, _)) = leading else { continue };
                if a.is_zero() {
                    continue;
                }
                out.insert(BoxOperator {
                    nu_plus: p.clone(),
                    nu_minus: q.clone(),
                });
            }
        }
    }
    out.into_iter().collect()
}

/// Default enumeration cap: twice the largest column 1-norm.
pub fn default_degree_bound<E: ExactScalar>(sys: &GkzSystem<E>) -> usize {
    let mut best = 0usize;
    for col in sys.columns() {
        let mut norm = E::zero();
        for e in &col {
            norm = norm + e.abs();
        }
        best = best.max(norm.to_usize().unwrap_or(0));
    }
    2 * best
}

/// Validation flags, hypothesis check, operator counts, and the hull volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemReport<E: ExactScalar = Int> {
    pub valid: bool,
    pub hypothesis: bool,
    pub euler_count: usize,
    pub box_degree_bound: usize,
    pub box_count: usize,
    pub volume: E,
}

pub fn system_report<E: ExactScalar>(sys: &GkzSystem<E>) -> SystemReport<E> {
    let hypothesis = check_semi_nonresonant(sys).expect("valid system spans its space");
    let bound = default_degree_bound(sys);
    SystemReport {
        valid: true,
        hypothesis,
        euler_count: sys.r() + sys.n(),
        box_degree_bound: bound,
        box_count: box_operators(sys, bound).len(),
        volume: normalized_volume(&sys.point_configuration())
            .expect("valid system has a nondegenerate column configuration"),
    }
}
