//! Report construction: one JSON object per subcommand, fixed key order,
//! `schema_version` first. Reports for the same input and seed are byte
//! identical across runs.

use gkz::cokernel::{
    apply_twisted_derivation, functional_l, solve_preimage, CokernelError, QuotientElement,
    TwistContext,
};
use gkz::curve::{toric_curve_report, CurveError, PunctureKind, ToricCurveReport};
use gkz::periods::{
    admissible_circles, euler_residual, find_zeros, period_matrix_rank, twisted_period,
    CycleSpec, EvaluationPoint, PeriodError, DEFAULT_NODES, NODE_CAP,
};
use gkz::system::{
    box_operators, check_semi_nonresonant, default_degree_bound, euler_operators, GkzSystem,
};
use gkz::volume::normalized_volume;
use gkz::{Cplx, Int, Rat};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::str::FromStr;

use crate::problem::ProblemFile;
use crate::Failure;

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ORDER: usize = 2;

fn period_failure(e: PeriodError) -> Failure {
    match e {
        PeriodError::ShapeMismatch(_)
        | PeriodError::DegenerateCoefficients(_)
        | PeriodError::InvalidCycle(_) => Failure::Validation(e.to_string()),
        PeriodError::RootFindingDiverged
        | PeriodError::BranchJump { .. }
        | PeriodError::CycleNotClosed
        | PeriodError::InsufficientCycles { .. } => Failure::Numeric(e.to_string()),
    }
}

fn curve_failure(e: CurveError) -> Failure {
    Failure::Validation(e.to_string())
}

fn int_to_i64(v: &Int) -> Result<i64, Failure> {
    v.to_i64()
        .ok_or_else(|| Failure::Internal("integer exceeds the reporting range".into()))
}

fn int_to_u64(v: &Int) -> Result<u64, Failure> {
    v.to_u64()
        .ok_or_else(|| Failure::Internal("integer exceeds the reporting range".into()))
}

fn pair(c: Cplx) -> [f64; 2] {
    [c.re, c.im]
}

#[derive(Serialize)]
pub struct ValidateReport {
    schema_version: &'static str,
    valid: bool,
    r: usize,
    n: usize,
    columns: usize,
    hypothesis: bool,
    volume: u64,
}

pub fn validate_report(sys: &GkzSystem<Int>) -> Result<ValidateReport, Failure> {
    let hypothesis = check_semi_nonresonant(sys)
        .map_err(|e| Failure::Internal(e.to_string()))?;
    let volume = normalized_volume(&sys.point_configuration())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(ValidateReport {
        schema_version: SCHEMA_VERSION,
        valid: true,
        r: sys.r(),
        n: sys.n(),
        columns: sys.column_count(),
        hypothesis,
        volume: int_to_u64(&volume)?,
    })
}

#[derive(Serialize)]
pub struct OperatorsReport {
    schema_version: &'static str,
    euler: Vec<String>,
    degree_bound: usize,
    #[serde(rename = "box")]
    box_ops: Vec<String>,
}

pub fn operators_report(
    sys: &GkzSystem<Int>,
    bound: Option<usize>,
) -> Result<OperatorsReport, Failure> {
    let degree_bound = bound.unwrap_or_else(|| default_degree_bound(sys));
    Ok(OperatorsReport {
        schema_version: SCHEMA_VERSION,
        euler: euler_operators(sys).iter().map(|o| o.to_string()).collect(),
        degree_bound,
        box_ops: box_operators(sys, degree_bound)
            .iter()
            .map(|o| o.to_string())
            .collect(),
    })
}

#[derive(Serialize)]
pub struct VolumeReport {
    schema_version: &'static str,
    volume: u64,
}

pub fn volume_report(sys: &GkzSystem<Int>) -> Result<VolumeReport, Failure> {
    let volume = normalized_volume(&sys.point_configuration())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(VolumeReport {
        schema_version: SCHEMA_VERSION,
        volume: int_to_u64(&volume)?,
    })
}

#[derive(Serialize)]
struct DivisorReport {
    a_zero: Vec<i64>,
    a_inf: Vec<i64>,
    lengths: Vec<i64>,
}

#[derive(Serialize)]
struct PunctureReport {
    at: String,
    exponent: String,
    multiplicity: usize,
}

#[derive(Serialize)]
pub struct ToricReport {
    schema_version: &'static str,
    divisor: DivisorReport,
    #[serde(rename = "I")]
    integral: Vec<String>,
    #[serde(rename = "J")]
    complement: Vec<String>,
    punctures: Vec<PunctureReport>,
    les: [usize; 6],
    rank: usize,
    lifted: Vec<Vec<i64>>,
}

fn les_array(report: &ToricCurveReport<Int>) -> [usize; 6] {
    let t = report.les.as_tuple();
    [t.0, t.1, t.2, t.3, t.4, t.5]
}

fn toric_from(report: &ToricCurveReport<Int>) -> Result<ToricReport, Failure> {
    let ivec = |v: &[Int]| v.iter().map(int_to_i64).collect::<Result<Vec<_>, _>>();
    let punctures = report
        .profile
        .punctures
        .iter()
        .map(|p| PunctureReport {
            at: match &p.kind {
                PunctureKind::ZeroOfBlock(k) => format!("zeros_of_block_{k}"),
                PunctureKind::AtRay(ray) => ray.to_string(),
            },
            exponent: p.exponent.to_string(),
            multiplicity: p.multiplicity,
        })
        .collect();
    Ok(ToricReport {
        schema_version: SCHEMA_VERSION,
        divisor: DivisorReport {
            a_zero: ivec(&report.divisor.a_zero)?,
            a_inf: ivec(&report.divisor.a_inf)?,
            lengths: ivec(&report.divisor.lengths)?,
        },
        integral: report.integral_set.iter().map(|r| r.to_string()).collect(),
        complement: report.complement.iter().map(|r| r.to_string()).collect(),
        punctures,
        les: les_array(report),
        rank: report.rank,
        lifted: report
            .lifted
            .iter()
            .map(|v| ivec(v))
            .collect::<Result<Vec<_>, _>>()?,
    })
}

pub fn toric_report(sys: &GkzSystem<Int>) -> Result<ToricReport, Failure> {
    toric_from(&toric_curve_report(sys).map_err(curve_failure)?)
}

#[derive(Serialize)]
pub struct RankReport {
    schema_version: &'static str,
    rank: usize,
    volume: u64,
    #[serde(rename = "I")]
    integral: Vec<String>,
    les: [usize; 6],
}

pub fn rank_report(sys: &GkzSystem<Int>) -> Result<RankReport, Failure> {
    let report = toric_curve_report(sys).map_err(curve_failure)?;
    let volume = normalized_volume(&sys.point_configuration())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(RankReport {
        schema_version: SCHEMA_VERSION,
        rank: report.rank,
        volume: int_to_u64(&volume)?,
        integral: report.integral_set.iter().map(|r| r.to_string()).collect(),
        les: les_array(&report),
    })
}

#[derive(Serialize)]
struct CircleReport {
    radius: f64,
    nodes: usize,
    enclosed_exponent: String,
    closed: bool,
    value: [f64; 2],
    euler_residual_max: Option<f64>,
}

#[derive(Serialize)]
pub struct PeriodsReport {
    schema_version: &'static str,
    x: Vec<Vec<[f64; 2]>>,
    zeros: Vec<Vec<[f64; 2]>>,
    nodes: usize,
    auto_refine: bool,
    max_order: usize,
    tol: f64,
    circles: Vec<CircleReport>,
    rank: usize,
    predicted_rank: Option<usize>,
}

pub struct PeriodSettings {
    pub nodes: usize,
    /// Doubling on branch jumps is enabled only when no node count was
    /// requested explicitly.
    pub auto_refine: bool,
    pub max_order: usize,
    pub tol: f64,
}

impl PeriodSettings {
    pub fn resolve(
        p: &ProblemFile,
        nodes: Option<usize>,
        tol: Option<f64>,
        max_order: Option<usize>,
    ) -> Self {
        let requested = nodes.or(p.nodes);
        PeriodSettings {
            nodes: requested.unwrap_or(DEFAULT_NODES),
            auto_refine: requested.is_none(),
            max_order: max_order.or(p.max_order).unwrap_or(DEFAULT_MAX_ORDER),
            tol: tol.or(p.tol).unwrap_or(DEFAULT_TOL),
        }
    }
}

fn circle_value(
    sys: &GkzSystem<Int>,
    x: &EvaluationPoint,
    base: &CycleSpec,
    auto: bool,
) -> Result<(gkz::periods::PeriodValue, usize), Failure> {
    let mut spec = *base;
    loop {
        match twisted_period(sys, x, &spec) {
            Err(PeriodError::BranchJump { .. }) if auto && spec.nodes < NODE_CAP => {
                spec.nodes *= 2;
            }
            Err(e) => return Err(period_failure(e)),
            Ok(v) => return Ok((v, spec.nodes)),
        }
    }
}

pub fn periods_report(
    sys: &GkzSystem<Int>,
    x: &EvaluationPoint,
    settings: &PeriodSettings,
) -> Result<PeriodsReport, Failure> {
    let mut zeros = Vec::with_capacity(sys.r());
    for k in 0..sys.r() {
        let block = find_zeros(sys, x, k).map_err(period_failure)?;
        zeros.push(block.into_iter().map(pair).collect());
    }
    let candidates = admissible_circles(sys, x).map_err(period_failure)?;
    let mut circles = Vec::with_capacity(candidates.len());
    let mut specs = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let base = CycleSpec {
            nodes: settings.nodes,
            ..cand.cycle
        };
        let (value, used) = circle_value(sys, x, &base, settings.auto_refine)?;
        let euler_residual_max = if cand.closed {
            let spec = CycleSpec { nodes: used, ..base };
            let residuals = euler_residual(sys, x, &spec).map_err(period_failure)?;
            Some(residuals.into_iter().fold(0.0, f64::max))
        } else {
            None
        };
        circles.push(CircleReport {
            radius: base.radius,
            nodes: used,
            enclosed_exponent: value.enclosed_exponent.to_string(),
            closed: value.closed,
            value: pair(value.value),
            euler_residual_max,
        });
        specs.push(base);
    }
    let rank = period_matrix_rank(sys, x, &specs, settings.max_order, settings.tol)
        .map_err(period_failure)?;
    let predicted_rank = toric_curve_report(sys).ok().map(|r| r.rank);
    Ok(PeriodsReport {
        schema_version: SCHEMA_VERSION,
        x: x.blocks.iter().map(|b| b.iter().copied().map(pair).collect()).collect(),
        zeros,
        nodes: settings.nodes,
        auto_refine: settings.auto_refine,
        max_order: settings.max_order,
        tol: settings.tol,
        circles,
        rank,
        predicted_rank,
    })
}

#[derive(Serialize)]
struct ElementReport {
    derivation: Vec<String>,
    series: Vec<String>,
}

fn element_report(u: &QuotientElement<Int>) -> ElementReport {
    ElementReport {
        derivation: u.derivation_part().iter().map(|q| q.to_string()).collect(),
        series: u.series_part().iter().map(|q| q.to_string()).collect(),
    }
}

#[derive(Serialize)]
pub struct CokernelReport {
    schema_version: &'static str,
    beta: String,
    g: String,
    element: ElementReport,
    image: ElementReport,
    functional_of_image: String,
    preimage: ElementReport,
    round_trip_exact: bool,
}

/// Applies the twisted derivation to the sample class d + s, checks that the
/// obstruction functional kills the image, and solves back.
pub fn cokernel_report(beta: &str, g: &str) -> Result<CokernelReport, Failure> {
    let parse = |s: &str, field: &str| {
        Rat::from_str(s.trim()).map_err(|_| {
            Failure::Validation(format!(
                "{field}: not a rational number (write \"p/q\" or an integer)"
            ))
        })
    };
    let beta_q = parse(beta, "--beta")?;
    let g_q = parse(g, "--g")?;
    let ctx = TwistContext::new(beta_q.clone(), g_q.clone()).map_err(|e| match e {
        CokernelError::IntegralBeta => {
            Failure::Validation("--beta: twist must be non-integral".into())
        }
        other => Failure::Internal(other.to_string()),
    })?;
    let sample = QuotientElement::new(
        vec![Rat::from_integer(Int::from(0)), Rat::from_integer(Int::from(1))],
        vec![Rat::from_integer(Int::from(1))],
    );
    let image = apply_twisted_derivation(&ctx, &sample);
    let map_err = |e: CokernelError| match e {
        CokernelError::GIsZero => {
            Failure::Validation("--g: must be nonzero to evaluate the functional".into())
        }
        other => Failure::Internal(other.to_string()),
    };
    let functional = functional_l(&ctx, &image).map_err(map_err)?;
    let preimage = solve_preimage(&ctx, &image).map_err(map_err)?;
    Ok(CokernelReport {
        schema_version: SCHEMA_VERSION,
        beta: beta_q.to_string(),
        g: g_q.to_string(),
        element: element_report(&sample),
        image: element_report(&image),
        functional_of_image: functional.to_string(),
        preimage: element_report(&preimage),
        round_trip_exact: preimage == sample,
    })
}

#[derive(Serialize)]
pub struct FullReport {
    schema_version: &'static str,
    validate: ValidateReport,
    operators: OperatorsReport,
    volume: VolumeReport,
    /// Curve data; present only for one-dimensional tori.
    toric: Option<ToricReport>,
    /// Quadrature results; present only when the file supplies `x`.
    periods: Option<PeriodsReport>,
}

pub fn full_report(sys: &GkzSystem<Int>, p: &ProblemFile) -> Result<FullReport, Failure> {
    let toric = if sys.n() == 1 {
        Some(toric_report(sys)?)
    } else {
        None
    };
    let periods = match (&p.x, sys.n()) {
        (Some(_), 1) => {
            let settings = PeriodSettings::resolve(p, None, None, None);
            let point = crate::problem::evaluation_point(p, None)?;
            Some(periods_report(sys, &point, &settings)?)
        }
        _ => None,
    };
    Ok(FullReport {
        schema_version: SCHEMA_VERSION,
        validate: validate_report(sys)?,
        operators: operators_report(sys, p.degree_bound)?,
        volume: volume_report(sys)?,
        toric,
        periods,
    })
}
