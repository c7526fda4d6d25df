//! Twisted period integrals on the one-dimensional torus.
//!
//! Everything here is double precision. The integrand is a product of block
//! Laurent polynomials raised to rational exponents, integrated against dt/t
//! over circles or piecewise loops, with the branch of each logarithm
//! continued node to node. Exponent bookkeeping (which punctures a circle
//! encloses, whether a cycle is closed for the local system) stays exact.

mod cycles;
mod roots;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

use crate::scalar::{ratio_to_float, ExactScalar};
use crate::system::GkzSystem;
use crate::{Cplx, Rat, Real};

/// Default quadrature node count for freshly proposed cycles.
pub const DEFAULT_NODES: usize = 256;
/// Hard ceiling for automatic dyadic refinement.
pub const NODE_CAP: usize = 1 << 16;

const MODULUS_MARGIN: Real = 1e-3;
const MODULI_DISTINCT: Real = 1e-9;
const WINDING_TOLERANCE: Real = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodError {
    #[error("evaluation point does not fit the system: {0}")]
    ShapeMismatch(String),
    #[error("degenerate coefficients: {0}")]
    DegenerateCoefficients(String),
    #[error("root iteration failed to converge")]
    RootFindingDiverged,
    #[error("invalid integration cycle: {0}")]
    InvalidCycle(String),
    #[error("branch tracking lost at {nodes} nodes, refine the cycle")]
    BranchJump { nodes: usize },
    #[error("cycle is not closed for this twist")]
    CycleNotClosed,
    #[error("only {have} cycle rows available, need {need}")]
    InsufficientCycles { have: usize, need: usize },
}

/// Complex coefficients for every column, grouped like the weight blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationPoint {
    pub blocks: Vec<Vec<Cplx>>,
}

impl EvaluationPoint {
    pub fn new(blocks: Vec<Vec<Cplx>>) -> Self {
        EvaluationPoint { blocks }
    }

    /// Coefficients flattened in column order.
    pub fn column_values(&self) -> Vec<Cplx> {
        self.blocks.iter().flatten().copied().collect()
    }
}

/// A circle |t| = radius traversed once, sampled at `nodes` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleSpec {
    pub radius: Real,
    pub orientation: i8,
    pub nodes: usize,
}

/// Quadrature result together with the exact exponent bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodValue {
    pub value: Cplx,
    pub enclosed_exponent: Rat,
    pub closed: bool,
}

/// A proposed circle with its exponent data, one per modulus gap.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleCandidate {
    pub cycle: CycleSpec,
    pub enclosed_exponent: Rat,
    pub closed: bool,
}

/// One block of the integrand on a fixed affine chart: the polynomial part
/// (ascending coefficients, nonzero at both ends), its t-valuation, and the
/// exponent it is raised to.
pub(crate) struct Chart {
    pub polys: Vec<Vec<Cplx>>,
    pub minw: Vec<i64>,
    pub betas: Vec<Real>,
    /// (block, root), sorted by modulus then angle.
    pub zeros: Vec<(usize, Cplx)>,
}

impl Chart {
    pub fn sorted_moduli(&self) -> Vec<Real> {
        self.zeros.iter().map(|(_, z)| z.norm()).collect()
    }
}

/// Chart plus the exact data the chart's floats were derived from.
pub(crate) struct Prepared {
    pub chart: Chart,
    pub betas_exact: Vec<Rat>,
    pub col_block: Vec<usize>,
    pub col_weight: Vec<i64>,
    pub col_value: Vec<Cplx>,
}

fn rat_to_big<E: ExactScalar>(q: &Ratio<E>) -> Rat {
    let n = q.numer().to_i64().expect("exponent numerator out of range");
    let d = q.denom().to_i64().expect("exponent denominator out of range");
    Rat::new(BigInt::from(n), BigInt::from(d))
}

fn sort_key(z: &Cplx) -> (Real, Real) {
    (z.norm(), z.arg())
}

/// Builds the torus-side picture of the integrand at `x`: one polynomial per
/// block with its roots, plus flattened column data.
fn prepare<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
) -> Result<Prepared, PeriodError> {
    if sys.n() != 1 {
        return Err(PeriodError::ShapeMismatch(format!(
            "weights have dimension {}, period quadrature needs dimension 1",
            sys.n()
        )));
    }
    if x.blocks.len() != sys.r() {
        return Err(PeriodError::ShapeMismatch(format!(
            "{} coefficient blocks for {} weight blocks",
            x.blocks.len(),
            sys.r()
        )));
    }

    let mut polys = Vec::with_capacity(sys.r());
    let mut minws = Vec::with_capacity(sys.r());
    let mut zeros: Vec<(usize, Cplx)> = Vec::new();
    let mut col_block = Vec::new();
    let mut col_weight = Vec::new();
    let mut col_value = Vec::new();

    for (k, block) in sys.weight_blocks().iter().enumerate() {
        let coeffs = &x.blocks[k];
        if coeffs.len() != block.len() {
            return Err(PeriodError::ShapeMismatch(format!(
                "block {} has {} coefficients for {} weights",
                k + 1,
                coeffs.len(),
                block.len()
            )));
        }
        let weights: Vec<i64> = block
            .iter()
            .map(|w| w[0].to_i64().expect("weight out of i64 range"))
            .collect();
        for (j, &w) in weights.iter().enumerate() {
            let c = coeffs[j];
            if !c.is_finite() {
                return Err(PeriodError::DegenerateCoefficients(format!(
                    "nonfinite coefficient in block {}",
                    k + 1
                )));
            }
            col_block.push(k);
            col_weight.push(w);
            col_value.push(c);
        }
        let minw = *weights.iter().min().expect("blocks are nonempty");
        let maxw = *weights.iter().max().expect("blocks are nonempty");
        let deg = (maxw - minw) as usize;
        let mut poly = vec![Cplx::new(0.0, 0.0); deg + 1];
        for (j, &w) in weights.iter().enumerate() {
            poly[(w - minw) as usize] += coeffs[j];
        }
        if poly[0].is_zero() || poly[deg].is_zero() {
            return Err(PeriodError::DegenerateCoefficients(format!(
                "extreme coefficient of block {} vanishes",
                k + 1
            )));
        }
        let roots = roots::polynomial_roots(&poly)?;
        zeros.extend(roots.into_iter().map(|z| (k, z)));
        polys.push(poly);
        minws.push(minw);
    }

    zeros.sort_by(|a, b| sort_key(&a.1).partial_cmp(&sort_key(&b.1)).unwrap());
    for pair in zeros.windows(2) {
        let (m0, m1) = (pair[0].1.norm(), pair[1].1.norm());
        if m1 - m0 <= MODULI_DISTINCT * m1 {
            return Err(PeriodError::DegenerateCoefficients(format!(
                "zero moduli collide near |t| = {m1:.6e}"
            )));
        }
    }

    let betas_exact: Vec<Rat> = sys.beta_head().iter().map(rat_to_big).collect();
    let betas: Vec<Real> = sys.beta_head().iter().map(|b| ratio_to_float(b)).collect();

    Ok(Prepared {
        chart: Chart {
            polys,
            minw: minws,
            betas,
            zeros,
        },
        betas_exact,
        col_block,
        col_weight,
        col_value,
    })
}

/// Roots of the polynomial part of block `k` at `x`, sorted by modulus then
/// angle. Validates the whole evaluation point.
pub fn find_zeros<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    k: usize,
) -> Result<Vec<Cplx>, PeriodError> {
    if k >= sys.r() {
        return Err(PeriodError::ShapeMismatch(format!(
            "block index {} out of range",
            k + 1
        )));
    }
    let prep = prepare(sys, x)?;
    Ok(prep
        .chart
        .zeros
        .iter()
        .filter(|(block, _)| *block == k)
        .map(|(_, z)| *z)
        .collect())
}

/// Sum of the local exponents enclosed by |t| = radius: the t = 0 valuation
/// term plus one beta per enclosed zero. Exact.
fn enclosed_exponent_of(prep: &Prepared, radius: Real) -> Rat {
    let mut total = Rat::zero();
    for (k, beta) in prep.betas_exact.iter().enumerate() {
        let inside = prep
            .chart
            .zeros
            .iter()
            .filter(|(block, z)| *block == k && z.norm() < radius)
            .count() as i64;
        let weight = BigInt::from(prep.chart.minw[k] + inside);
        total += beta * Rat::from_integer(weight);
    }
    total
}

fn validate_cycle(prep: &Prepared, cycle: &CycleSpec) -> Result<(), PeriodError> {
    if cycle.orientation != 1 && cycle.orientation != -1 {
        return Err(PeriodError::InvalidCycle(format!(
            "orientation must be 1 or -1, got {}",
            cycle.orientation
        )));
    }
    if !(cycle.radius > 0.0) || !cycle.radius.is_finite() {
        return Err(PeriodError::InvalidCycle(format!(
            "radius must be positive and finite, got {}",
            cycle.radius
        )));
    }
    if cycle.nodes < DEFAULT_NODES || !cycle.nodes.is_power_of_two() {
        return Err(PeriodError::InvalidCycle(format!(
            "nodes must be a power of two >= {DEFAULT_NODES}, got {}",
            cycle.nodes
        )));
    }
    for (_, z) in &prep.chart.zeros {
        let m = z.norm();
        if (cycle.radius - m).abs() < MODULUS_MARGIN * m {
            return Err(PeriodError::InvalidCycle(format!(
                "radius {} is within the relative safety margin of the puncture modulus {m:.6e}",
                cycle.radius
            )));
        }
    }
    Ok(())
}

/// One circle candidate per modulus gap, including the gap below the smallest
/// modulus and the one above the largest. Gaps too narrow for the safety
/// margin produce no candidate.
pub fn admissible_circles<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
) -> Result<Vec<CircleCandidate>, PeriodError> {
    let prep = prepare(sys, x)?;
    let moduli = prep.chart.sorted_moduli();
    let mut radii = Vec::new();
    if moduli.is_empty() {
        radii.push(1.0);
    } else {
        radii.push(moduli[0] / 2.0);
        for pair in moduli.windows(2) {
            let r = (pair[0] * pair[1]).sqrt();
            if r - pair[0] >= MODULUS_MARGIN * pair[0] && pair[1] - r >= MODULUS_MARGIN * pair[1] {
                radii.push(r);
            }
        }
        radii.push(2.0 * moduli[moduli.len() - 1]);
    }
    Ok(radii
        .into_iter()
        .map(|radius| {
            let exponent = enclosed_exponent_of(&prep, radius);
            let closed = exponent.is_integer();
            CircleCandidate {
                cycle: CycleSpec {
                    radius,
                    orientation: 1,
                    nodes: DEFAULT_NODES,
                },
                enclosed_exponent: exponent,
                closed,
            }
        })
        .collect())
}

/// Trapezoid sample of the circle: N+1 points (the seam repeated) with
/// endpoint weights halved, normalized so the weighted sum is (1/2pi) dtheta.
fn circle_points(radius: Real, nodes: usize) -> (Vec<Cplx>, Vec<Cplx>) {
    let n = nodes;
    let mut points = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    let step = std::f64::consts::TAU / n as Real;
    for s in 0..=n {
        points.push(Cplx::from_polar(radius, step * s as Real));
        let w = if s == 0 || s == n {
            0.5 / n as Real
        } else {
            1.0 / n as Real
        };
        weights.push(Cplx::new(w, 0.0));
    }
    (points, weights)
}

/// Branch-continued circle sample with the winding consistency check: each
/// polynomial log must return to its start shifted by 2 pi i times the number
/// of its zeros inside the circle.
fn circle_track(
    chart: &Chart,
    radius: Real,
    nodes: usize,
) -> Result<(cycles::LogTrack, Vec<Cplx>), PeriodError> {
    let (points, weights) = circle_points(radius, nodes);
    let track = cycles::continue_logs(chart, &points).map_err(|e| match e {
        PeriodError::BranchJump { .. } => PeriodError::BranchJump { nodes },
        other => other,
    })?;
    for (k, logs) in track.logp.iter().enumerate() {
        let inside = chart
            .zeros
            .iter()
            .filter(|(block, z)| *block == k && z.norm() < radius)
            .count() as Real;
        let turns = (logs[logs.len() - 1].im - logs[0].im) / std::f64::consts::TAU;
        if (turns - inside).abs() > WINDING_TOLERANCE {
            return Err(PeriodError::BranchJump { nodes });
        }
    }
    Ok((track, weights))
}

/// (1/2 pi i) times the integral of the twisted form over the circle, with
/// exact closedness data. Open circles are legal; `closed` says which case
/// this is. Deterministic for a fixed node count.
pub fn twisted_period<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    cycle: &CycleSpec,
) -> Result<PeriodValue, PeriodError> {
    let prep = prepare(sys, x)?;
    validate_cycle(&prep, cycle)?;
    let (track, weights) = circle_track(&prep.chart, cycle.radius, cycle.nodes)?;
    let masses = vec![0usize; sys.r()];
    let mut value = cycles::eval_column(&prep.chart, &track, &weights, &masses, 0);
    if cycle.orientation < 0 {
        value = -value;
    }
    let enclosed_exponent = enclosed_exponent_of(&prep, cycle.radius);
    let closed = enclosed_exponent.is_integer();
    Ok(PeriodValue {
        value,
        enclosed_exponent,
        closed,
    })
}

/// `twisted_period` with automatic dyadic refinement: on a branch jump the
/// node count doubles, up to the cap.
pub fn twisted_period_refined<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    cycle: &CycleSpec,
) -> Result<PeriodValue, PeriodError> {
    let mut spec = *cycle;
    loop {
        match twisted_period(sys, x, &spec) {
            Err(PeriodError::BranchJump { .. }) if spec.nodes < NODE_CAP => spec.nodes *= 2,
            other => return other,
        }
    }
}

fn masses_and_tpow(prep: &Prepared, r: usize, alpha: &[usize]) -> (Vec<usize>, i64) {
    let mut masses = vec![0usize; r];
    let mut tpow = 0i64;
    for (j, &a) in alpha.iter().enumerate() {
        masses[prep.col_block[j]] += a;
        tpow += a as i64 * prep.col_weight[j];
    }
    (masses, tpow)
}

/// Quadrature of the alpha-th coefficient derivative of the twisted form:
/// falling factorials in the exponents, shifted block powers, and an extra
/// integer power of t. `alpha` is indexed by columns; alpha = 0 reproduces
/// `twisted_period`.
pub fn derivative_period<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    cycle: &CycleSpec,
    alpha: &[usize],
) -> Result<Cplx, PeriodError> {
    let prep = prepare(sys, x)?;
    if alpha.len() != sys.column_count() {
        return Err(PeriodError::ShapeMismatch(format!(
            "multi-index has {} entries for {} columns",
            alpha.len(),
            sys.column_count()
        )));
    }
    validate_cycle(&prep, cycle)?;
    let (track, weights) = circle_track(&prep.chart, cycle.radius, cycle.nodes)?;
    let (masses, tpow) = masses_and_tpow(&prep, sys.r(), alpha);
    let mut value = cycles::eval_column(&prep.chart, &track, &weights, &masses, tpow);
    if cycle.orientation < 0 {
        value = -value;
    }
    Ok(value)
}

/// Residual magnitude of each Euler operator row against the period of the
/// given closed cycle: |sum_j a_ij x_j D_j - beta_i P|. Decays spectrally in
/// the node count.
pub fn euler_residual<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    cycle: &CycleSpec,
) -> Result<Vec<Real>, PeriodError> {
    let prep = prepare(sys, x)?;
    validate_cycle(&prep, cycle)?;
    if !enclosed_exponent_of(&prep, cycle.radius).is_integer() {
        return Err(PeriodError::CycleNotClosed);
    }
    let (track, weights) = circle_track(&prep.chart, cycle.radius, cycle.nodes)?;
    let zero_masses = vec![0usize; sys.r()];
    let period = cycles::eval_column(&prep.chart, &track, &weights, &zero_masses, 0);
    let m = sys.column_count();
    let mut derivs = Vec::with_capacity(m);
    for j in 0..m {
        let mut masses = vec![0usize; sys.r()];
        masses[prep.col_block[j]] = 1;
        derivs.push(cycles::eval_column(
            &prep.chart,
            &track,
            &weights,
            &masses,
            prep.col_weight[j],
        ));
    }
    let beta_full: Vec<Real> = sys.beta_full().iter().map(|b| ratio_to_float(b)).collect();
    let matrix = sys.matrix();
    let mut residuals = Vec::with_capacity(matrix.rows());
    for i in 0..matrix.rows() {
        let mut acc = Cplx::new(0.0, 0.0);
        for j in 0..m {
            let a = matrix.at(i, j).to_f64().expect("matrix entry out of range");
            acc += prep.col_value[j] * derivs[j] * a;
        }
        acc -= period * beta_full[i];
        residuals.push(acc.norm());
    }
    Ok(residuals)
}

/// Distinct derivative columns up to `max_order`: multi-indices are bucketed
/// by (per-block mass, total t-power) since those determine the integrand.
pub(crate) struct ColumnSig {
    pub masses: Vec<usize>,
    pub tpow: i64,
}

fn column_signatures(prep: &Prepared, r: usize, columns: usize, max_order: usize) -> Vec<ColumnSig> {
    let mut sigs: Vec<ColumnSig> = Vec::new();
    let mut alpha = vec![0usize; columns];
    fn walk(
        prep: &Prepared,
        r: usize,
        alpha: &mut Vec<usize>,
        j: usize,
        left: usize,
        sigs: &mut Vec<ColumnSig>,
    ) {
        if j == alpha.len() {
            let mut masses = vec![0usize; r];
            let mut tpow = 0i64;
            for (col, &a) in alpha.iter().enumerate() {
                masses[prep.col_block[col]] += a;
                tpow += a as i64 * prep.col_weight[col];
            }
            if !sigs.iter().any(|s| s.masses == masses && s.tpow == tpow) {
                sigs.push(ColumnSig { masses, tpow });
            }
            return;
        }
        for a in 0..=left {
            alpha[j] = a;
            walk(prep, r, alpha, j + 1, left - a, sigs);
        }
        alpha[j] = 0;
    }
    walk(prep, r, &mut alpha, 0, max_order, &mut sigs);
    sigs
}

/// Row of derivative-column values for one circle, with dyadic refinement on
/// branch jumps up to the node cap.
/// Row convergence target. Trapezoid error on a circle decays like
/// exp(-d*N) with d the log-distance to the nearest zero modulus, so a
/// circle passing the admissibility margin always reaches this before the
/// node cap.
const ROW_TOLERANCE: Real = 1e-9;

fn circle_row(
    chart: &Chart,
    cycle: &CycleSpec,
    columns: &[ColumnSig],
) -> Result<Vec<Cplx>, PeriodError> {
    let evaluate = |nodes: usize| -> Result<Vec<Cplx>, PeriodError> {
        let (track, weights) = circle_track(chart, cycle.radius, nodes)?;
        Ok(columns
            .iter()
            .map(|sig| {
                let v = cycles::eval_column(chart, &track, &weights, &sig.masses, sig.tpow);
                if cycle.orientation < 0 {
                    -v
                } else {
                    v
                }
            })
            .collect())
    };
    let mut nodes = cycle.nodes;
    let mut last: Option<Vec<Cplx>> = None;
    loop {
        match evaluate(nodes) {
            Ok(row) => {
                if nodes >= NODE_CAP {
                    return Ok(row);
                }
                if let Some(prev) = &last {
                    let scale = row.iter().map(|v| v.norm()).fold(1.0, Real::max);
                    let drift = prev
                        .iter()
                        .zip(&row)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, Real::max);
                    if drift <= ROW_TOLERANCE * scale {
                        return Ok(row);
                    }
                }
                last = Some(row);
            }
            Err(PeriodError::BranchJump { .. }) if nodes < NODE_CAP => last = None,
            Err(e) => return Err(e),
        }
        nodes *= 2;
    }
}

/// Numerical rank by full-pivot elimination with a relative threshold.
fn numeric_rank(mut rows: Vec<Vec<Cplx>>, tol: Real) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let scale = rows
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0_f64, Real::max);
    if scale == 0.0 {
        return 0;
    }
    let mut used_col = vec![false; cols];
    let mut rank = 0;
    while rank < rows.len() {
        let mut best = (0.0_f64, rank, 0usize);
        for (i, row) in rows.iter().enumerate().skip(rank) {
            for (j, v) in row.iter().enumerate() {
                if !used_col[j] && v.norm() > best.0 {
                    best = (v.norm(), i, j);
                }
            }
        }
        let (pivot, pi, pj) = best;
        if !(pivot > 0.0) || !(pivot >= tol * scale) {
            break;
        }
        rows.swap(rank, pi);
        used_col[pj] = true;
        let pivot_value = rows[rank][pj];
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let factor = row[pj] / pivot_value;
            for (j, v) in row.iter_mut().enumerate() {
                *v -= factor * pivot_row[j];
            }
        }
        rank += 1;
    }
    rank
}

/// Numerical rank of the period matrix: rows are closed cycles (the supplied
/// circles plus a composite loop inventory), columns are the distinct
/// derivative signatures up to `max_order`. Matches the predicted solution
/// rank for generic coefficients.
pub fn period_matrix_rank<E: ExactScalar>(
    sys: &GkzSystem<E>,
    x: &EvaluationPoint,
    cycles_in: &[CycleSpec],
    max_order: usize,
    tol: Real,
) -> Result<usize, PeriodError> {
    let prep = prepare(sys, x)?;
    let need: usize = prep.chart.polys.iter().map(|p| p.len() - 1).sum();
    let columns = column_signatures(&prep, sys.r(), sys.column_count(), max_order);
    let mut rows = Vec::new();
    for cycle in cycles_in {
        validate_cycle(&prep, cycle)?;
        if !enclosed_exponent_of(&prep, cycle.radius).is_integer() {
            // open circles are not cycles; they pair with nothing
            continue;
        }
        rows.push(circle_row(&prep.chart, cycle, &columns)?);
    }
    rows.extend(cycles::inventory_rows(&prep, &columns)?);
    if rows.len() < need {
        return Err(PeriodError::InsufficientCycles {
            have: rows.len(),
            need,
        });
    }
    Ok(numeric_rank(rows, tol))
}
