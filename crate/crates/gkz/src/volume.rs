//! Lattice volume of a point configuration: affine reduction to the lattice
//! spanned by the differences, then an incremental placing triangulation with
//! exact integer orientation tests.

use std::collections::HashMap;
use thiserror::Error;

use crate::linalg::{determinant, rational_rank, smith_normal_form, IntMatrix};
use crate::scalar::ExactScalar;
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VolumeError {
    #[error("points do not span a positive-dimensional affine space")]
    DegenerateConfiguration,
}

/// A finite list of integer points in a fixed ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointConfiguration<E: ExactScalar = Int> {
    pub dim: usize,
    pub points: Vec<Vec<E>>,
}

impl<E: ExactScalar> PointConfiguration<E> {
    pub fn new(dim: usize, points: Vec<Vec<E>>) -> Self {
        assert!(points.iter().all(|p| p.len() == dim), "point dimension");
        Self { dim, points }
    }

    pub fn from_i64(dim: usize, points: &[Vec<i64>]) -> Self {
        Self::new(
            dim,
            points
                .iter()
                .map(|p| p.iter().map(|&x| E::from(x)).collect())
                .collect(),
        )
    }
}

/// Result of expressing the points in a basis of the lattice their
/// differences generate. `basis` holds that lattice basis in the original
/// ambient coordinates; `points` are the coordinates of each input point
/// with respect to it (the first point maps to the origin).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineReduction<E: ExactScalar = Int> {
    pub dim: usize,
    pub points: Vec<Vec<E>>,
    pub basis: Vec<Vec<E>>,
}

/// Translate by the first point and rewrite all differences in a lattice
/// basis of their span. The reduced dimension is the rank of the difference
/// lattice; repeated single points reduce to dimension zero.
pub fn affine_reduce<E: ExactScalar>(config: &PointConfiguration<E>) -> AffineReduction<E> {
    let pts = &config.points;
    assert!(!pts.is_empty(), "empty configuration");
    if pts.len() == 1 || config.dim == 0 {
        return AffineReduction {
            dim: 0,
            points: vec![Vec::new(); pts.len()],
            basis: Vec::new(),
        };
    }
    let diffs: Vec<Vec<E>> = pts[1..]
        .iter()
        .map(|p| {
            p.iter()
                .zip(&pts[0])
                .map(|(a, b)| a.clone() - b.clone())
                .collect()
        })
        .collect();
    let d = IntMatrix::from_rows(diffs).expect("difference matrix");
    let snf = smith_normal_form(&d);
    let rank = snf.rank();
    let basis_rows = snf.u.mul(&d);
    let basis: Vec<Vec<E>> = (0..rank).map(|i| basis_rows.row(i).to_vec()).collect();
    let diag = snf.s.diagonal();
    let mut reduced = vec![vec![E::zero(); rank]];
    for i in 0..d.rows() {
        // coordinates come from one row of D*V divided by the elementary divisors
        let mut coords = Vec::with_capacity(rank);
        for j in 0..rank {
            let mut acc = E::zero();
            for t in 0..config.dim {
                acc = acc + d.at(i, t).clone() * snf.v.at(t, j).clone();
            }
            let (q, r) = acc.div_rem(&diag[j]);
            debug_assert!(r.is_zero(), "difference lies in the lattice");
            coords.push(q);
        }
        reduced.push(coords);
    }
    AffineReduction {
        dim: rank,
        points: reduced,
        basis,
    }
}

/// Triangulation of the convex hull of a full-dimensional point list.
/// Simplices are (dim+1)-subsets of point indices; volumes are the
/// normalized (determinant) volumes of the simplices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation<E: ExactScalar = Int> {
    pub simplices: Vec<Vec<usize>>,
    pub volumes: Vec<E>,
}

impl<E: ExactScalar> Triangulation<E> {
    pub fn total_volume(&self) -> E {
        let mut acc = E::zero();
        for v in &self.volumes {
            acc = acc + v.clone();
        }
        acc
    }
}

fn orientation<E: ExactScalar>(facet: &[usize], points: &[Vec<E>], last_row: Vec<E>) -> i8 {
    let d = points[0].len();
    let base = &points[facet[0]];
    let mut rows: Vec<Vec<E>> = facet[1..]
        .iter()
        .map(|&v| {
            points[v]
                .iter()
                .zip(base)
                .map(|(a, b)| a.clone() - b.clone())
                .collect()
        })
        .collect();
    rows.push(last_row);
    debug_assert_eq!(rows.len(), d);
    let det = determinant(&IntMatrix::from_rows(rows).expect("orientation matrix"));
    if det.is_zero() {
        0
    } else if det.is_positive() {
        1
    } else {
        -1
    }
}

fn simplex_volume<E: ExactScalar>(vertices: &[usize], points: &[Vec<E>]) -> E {
    let base = &points[vertices[0]];
    let rows: Vec<Vec<E>> = vertices[1..]
        .iter()
        .map(|&v| {
            points[v]
                .iter()
                .zip(base)
                .map(|(a, b)| a.clone() - b.clone())
                .collect()
        })
        .collect();
    determinant(&IntMatrix::from_rows(rows).expect("edge matrix")).abs()
}

/// Incremental (placing) triangulation in input order: a greedy initial
/// simplex, then each remaining point is coned over the boundary facets it
/// strictly sees. Deterministic for a fixed input order.
pub fn placing_triangulation<E: ExactScalar>(
    points: &[Vec<E>],
) -> Result<Triangulation<E>, VolumeError> {
    if points.is_empty() {
        return Err(VolumeError::DegenerateConfiguration);
    }
    let d = points[0].len();
    if d == 0 {
        return Err(VolumeError::DegenerateConfiguration);
    }
    assert!(points.iter().all(|p| p.len() == d), "point dimension");

    // greedy initial simplex: take a point whenever it raises the affine rank
    let mut initial = vec![0usize];
    for i in 1..points.len() {
        if initial.len() == d + 1 {
            break;
        }
        let mut trial = initial.clone();
        trial.push(i);
        let rows: Vec<Vec<E>> = trial[1..]
            .iter()
            .map(|&v| {
                points[v]
                    .iter()
                    .zip(&points[trial[0]])
                    .map(|(a, b)| a.clone() - b.clone())
                    .collect()
            })
            .collect();
        let m = IntMatrix::from_rows(rows).expect("rank probe");
        if rational_rank(&m) == trial.len() - 1 {
            initial = trial;
        }
    }
    if initial.len() != d + 1 {
        return Err(VolumeError::DegenerateConfiguration);
    }

    // integer interior witness: the vertex sum, which is (d+1) times the centroid
    let mut witness = vec![E::zero(); d];
    for &v in &initial {
        for (w, x) in witness.iter_mut().zip(&points[v]) {
            *w = w.clone() + x.clone();
        }
    }
    let witness_row = |facet: &[usize]| -> Vec<E> {
        let base = &points[facet[0]];
        let mut scale = E::zero();
        for _ in 0..d + 1 {
            scale = scale + E::one();
        }
        witness
            .iter()
            .zip(base)
            .map(|(w, b)| w.clone() - scale.clone() * b.clone())
            .collect()
    };

    let mut simplices = vec![initial.clone()];
    let mut volumes = vec![simplex_volume(&initial, points)];

    for q in 0..points.len() {
        if initial.contains(&q) {
            continue;
        }
        // boundary facets are those carried by exactly one simplex
        let mut facet_count: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in &simplices {
            for drop in 0..s.len() {
                let mut f = s.clone();
                f.remove(drop);
                *facet_count.entry(f).or_insert(0) += 1;
            }
        }
        let mut boundary: Vec<Vec<usize>> = facet_count
            .into_iter()
            .filter_map(|(f, c)| (c == 1).then_some(f))
            .collect();
        boundary.sort();
        for f in boundary {
            let sign_inside = orientation(&f, points, witness_row(&f));
            debug_assert_ne!(sign_inside, 0, "witness stays off boundary hyperplanes");
            let base = &points[f[0]];
            let q_row: Vec<E> = points[q]
                .iter()
                .zip(base)
                .map(|(a, b)| a.clone() - b.clone())
                .collect();
            let sign_q = orientation(&f, points, q_row);
            if sign_q != 0 && sign_q != sign_inside {
                let mut s = f.clone();
                s.push(q);
                s.sort_unstable();
                volumes.push(simplex_volume(&s, points));
                simplices.push(s);
            }
        }
    }
    Ok(Triangulation { simplices, volumes })
}

/// Total lattice volume of the convex hull of the configuration, measured in
/// the lattice generated by the point differences (a unit simplex has volume
/// one). The triangulation order does not affect the sum.
pub fn normalized_volume<E: ExactScalar>(
    config: &PointConfiguration<E>,
) -> Result<E, VolumeError> {
    let reduced = affine_reduce(config);
    let tri = placing_triangulation(&reduced.points)?;
    Ok(tri.total_volume())
}
