//! Problem-file parsing and validation.
//!
//! A problem file is a JSON object with the exact arithmetic data (`r`, `n`,
//! `weights`, `beta`) plus optional numeric settings. Unknown keys are
//! rejected so typos fail loudly. Every diagnostic names the offending field
//! by its JSON path.

use std::io::Read as _;
use std::str::FromStr;

use gkz::periods::{EvaluationPoint, NODE_CAP};
use gkz::system::{assemble_system, GkzSystem, SystemError};
use gkz::{Cplx, Int, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Seed used for the sampled evaluation point when the file has neither
/// `x` nor `seed`.
pub const DEFAULT_SEED: u64 = 17;

pub const MAX_ORDER_CAP: usize = 8;
pub const DEGREE_BOUND_CAP: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub r: usize,
    pub n: usize,
    /// `r` blocks, each a list of integer weight vectors of length `n`.
    pub weights: Vec<Vec<Vec<i64>>>,
    /// `r` rational strings, `"p/q"` or plain integers.
    pub beta: Vec<String>,
    /// Optional evaluation point: one `[re, im]` pair per weight vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Reads a problem source: a path, or `-` for stdin.
pub fn read_input(input: &str) -> Result<Vec<u8>, Failure> {
    if input == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::Parse(format!("stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read(input).map_err(|e| Failure::Parse(format!("{input}: {e}")))
    }
}

pub fn parse_problem(bytes: &[u8]) -> Result<ProblemFile, Failure> {
    let problem: ProblemFile =
        serde_json::from_slice(bytes).map_err(|e| Failure::Parse(e.to_string()))?;
    validate_shape(&problem)?;
    Ok(problem)
}

pub fn check_nodes(nodes: usize, field: &str) -> Result<(), Failure> {
    if nodes < 256 || !nodes.is_power_of_two() || nodes > NODE_CAP {
        return Err(Failure::Validation(format!(
            "{field}: must be a power of two between 256 and {NODE_CAP}"
        )));
    }
    Ok(())
}

pub fn check_tol(tol: f64, field: &str) -> Result<(), Failure> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::Validation(format!(
            "{field}: must be a finite positive number"
        )));
    }
    Ok(())
}

pub fn check_max_order(order: usize, field: &str) -> Result<(), Failure> {
    if order > MAX_ORDER_CAP {
        return Err(Failure::Validation(format!(
            "{field}: at most {MAX_ORDER_CAP}"
        )));
    }
    Ok(())
}

pub fn check_degree_bound(bound: usize, field: &str) -> Result<(), Failure> {
    if bound > DEGREE_BOUND_CAP {
        return Err(Failure::Validation(format!(
            "{field}: at most {DEGREE_BOUND_CAP}"
        )));
    }
    Ok(())
}

fn validate_shape(p: &ProblemFile) -> Result<(), Failure> {
    if p.r == 0 {
        return Err(Failure::Validation("r: must be at least 1".into()));
    }
    if p.n == 0 {
        return Err(Failure::Validation("n: must be at least 1".into()));
    }
    if p.weights.len() != p.r {
        return Err(Failure::Validation(format!(
            "weights: expected r = {} blocks, found {}",
            p.r,
            p.weights.len()
        )));
    }
    for (k, block) in p.weights.iter().enumerate() {
        if block.is_empty() {
            return Err(Failure::Validation(format!(
                "weights[{k}]: block must contain at least one weight vector"
            )));
        }
        for (i, w) in block.iter().enumerate() {
            if w.len() != p.n {
                return Err(Failure::Validation(format!(
                    "weights[{k}][{i}]: expected n = {} coordinates, found {}",
                    p.n,
                    w.len()
                )));
            }
        }
    }
    if p.beta.len() != p.r {
        return Err(Failure::Validation(format!(
            "beta: expected r = {} entries, found {}",
            p.r,
            p.beta.len()
        )));
    }
    if let Some(x) = &p.x {
        if x.len() != p.r {
            return Err(Failure::Validation(format!(
                "x: expected r = {} blocks, found {}",
                p.r,
                x.len()
            )));
        }
        for (k, block) in x.iter().enumerate() {
            if block.len() != p.weights[k].len() {
                return Err(Failure::Validation(format!(
                    "x[{k}]: expected {} coefficients, found {}",
                    p.weights[k].len(),
                    block.len()
                )));
            }
            for (i, c) in block.iter().enumerate() {
                if !(c[0].is_finite() && c[1].is_finite()) {
                    return Err(Failure::Validation(format!(
                        "x[{k}][{i}]: coefficients must be finite"
                    )));
                }
            }
        }
    }
    if let Some(nodes) = p.nodes {
        check_nodes(nodes, "nodes")?;
    }
    if let Some(tol) = p.tol {
        check_tol(tol, "tol")?;
    }
    if let Some(order) = p.max_order {
        check_max_order(order, "max_order")?;
    }
    if let Some(bound) = p.degree_bound {
        check_degree_bound(bound, "degree_bound")?;
    }
    Ok(())
}

/// Assembles the validated exact system, rephrasing construction errors as
/// field diagnostics.
pub fn build_system(p: &ProblemFile) -> Result<GkzSystem<Int>, Failure> {
    let mut betas = Vec::with_capacity(p.r);
    for (k, s) in p.beta.iter().enumerate() {
        let q = Rat::from_str(s.trim()).map_err(|_| {
            Failure::Validation(format!(
                "beta[{k}]: not a rational number (write \"p/q\" or an integer)"
            ))
        })?;
        betas.push(q);
    }
    let blocks = p
        .weights
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|w| w.iter().map(|&e| Int::from(e)).collect())
                .collect()
        })
        .collect();
    assemble_system(p.r, p.n, blocks, betas).map_err(|e| match e {
        SystemError::IntegralBeta { index } => Failure::Validation(format!(
            "beta[{}]: twist component must be non-integral",
            index - 1
        )),
        SystemError::NotFullRank => Failure::Validation(
            "weights: the assembled matrix does not have full rank".into(),
        ),
        SystemError::LatticeNotSpanned => Failure::Validation(
            "weights: the columns generate a proper sublattice; rescale the weights".into(),
        ),
        SystemError::ShapeError(msg) => Failure::Validation(format!("weights: {msg}")),
    })
}

fn point_from_pairs(pairs: &[Vec<[f64; 2]>]) -> EvaluationPoint {
    EvaluationPoint::new(
        pairs
            .iter()
            .map(|block| block.iter().map(|c| Cplx::new(c[0], c[1])).collect())
            .collect(),
    )
}

/// Coefficients with moduli in `[1/2, 2)` and uniform phase, drawn from a
/// fixed-seed generator so repeated runs agree byte for byte.
pub fn sampled_point(p: &ProblemFile) -> EvaluationPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(DEFAULT_SEED));
    let blocks = p
        .weights
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|_| {
                    let modulus = rng.gen_range(0.5..2.0);
                    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                    Cplx::from_polar(modulus, angle)
                })
                .collect()
        })
        .collect();
    EvaluationPoint::new(blocks)
}

/// Resolves the evaluation point: `--at` file, then the problem's `x`, then
/// a seeded sample.
pub fn evaluation_point(
    p: &ProblemFile,
    at: Option<&std::path::Path>,
) -> Result<EvaluationPoint, Failure> {
    if let Some(path) = at {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
        let pairs: Vec<Vec<[f64; 2]>> = serde_json::from_slice(&bytes)
            .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
        if pairs.len() != p.r {
            return Err(Failure::Validation(format!(
                "--at: expected r = {} blocks, found {}",
                p.r,
                pairs.len()
            )));
        }
        for (k, block) in pairs.iter().enumerate() {
            if block.len() != p.weights[k].len() {
                return Err(Failure::Validation(format!(
                    "--at: block {k} expects {} coefficients, found {}",
                    p.weights[k].len(),
                    block.len()
                )));
            }
        }
        return Ok(point_from_pairs(&pairs));
    }
    if let Some(x) = &p.x {
        return Ok(point_from_pairs(x));
    }
    Ok(sampled_point(p))
}
