//! Piecewise integration paths and the composite cycle inventory.
//!
//! Circles alone do not span the twisted homology once a ray carries an
//! integral exponent or several punctures share a modulus shell. The rank
//! computation therefore adds two families of composite rows: absolute
//! cycles built from base-point loops around single punctures, combined so
//! the boundary terms cancel, and relative classes realized as loops based
//! at a toric point with integral exponent. Paths are integrated with
//! composite 16-point Gauss-Legendre panels; branch continuation works the
//! same way as on circles, with panel doubling on a branch jump.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_traits::{ToPrimitive, Zero};

use super::{Chart, ColumnSig, PeriodError, Prepared};
use crate::{Cplx, Rat, Real};

const BASE_PANELS: usize = 48;
const PANEL_CAP: usize = 768;
const RADIAL_EPS: Real = 1e-14;
const LOOP_RADIUS_FACTOR: Real = 0.3;
const BIG_RADIUS_FACTOR: Real = 3.5;

/// 16-point Gauss-Legendre rule on [-1, 1], positive nodes only.
const GL_NODES: [Real; 8] = [
    0.09501250983763744,
    0.28160355077925891,
    0.45801677765722739,
    0.61787624440264375,
    0.75540440835500303,
    0.86563120238783174,
    0.94457502307323258,
    0.98940093499164993,
];
const GL_WEIGHTS: [Real; 8] = [
    0.18945061045506850,
    0.18260341504492359,
    0.16915651939500254,
    0.14959598881657673,
    0.12462897125553387,
    0.09515851168249278,
    0.06225352393864789,
    0.02715245941175409,
];

/// The rule with nodes in ascending order, so sampled points advance
/// monotonically along each panel.
fn gl16() -> [(Real, Real); 16] {
    let mut rule = [(0.0, 0.0); 16];
    for i in 0..8 {
        rule[i] = (-GL_NODES[7 - i], GL_WEIGHTS[7 - i]);
        rule[8 + i] = (GL_NODES[i], GL_WEIGHTS[i]);
    }
    rule
}

/// Branch-continued logarithms along a sampled path: one track per block
/// polynomial plus one for t itself.
pub(crate) struct LogTrack {
    pub logp: Vec<Vec<Cplx>>,
    pub logt: Vec<Cplx>,
}

fn horner(poly: &[Cplx], t: Cplx) -> Cplx {
    let mut v = Cplx::new(0.0, 0.0);
    for c in poly.iter().rev() {
        v = v * t + c;
    }
    v
}

/// Nearest-branch continuation of a principal logarithm; the adjusted phase
/// step must stay under pi/2 or the sampling is too coarse to trust.
fn continue_one(principal: Cplx, prev: Option<Cplx>, nodes: usize) -> Result<Cplx, PeriodError> {
    let Some(prev) = prev else {
        return Ok(principal);
    };
    let turns = ((prev.im - principal.im) / TAU).round();
    let adjusted = principal + Cplx::new(0.0, TAU * turns);
    if (adjusted.im - prev.im).abs() >= FRAC_PI_2 {
        return Err(PeriodError::BranchJump { nodes });
    }
    Ok(adjusted)
}

pub(crate) fn continue_logs(chart: &Chart, points: &[Cplx]) -> Result<LogTrack, PeriodError> {
    let nodes = points.len();
    let mut logp: Vec<Vec<Cplx>> = chart
        .polys
        .iter()
        .map(|_| Vec::with_capacity(nodes))
        .collect();
    let mut logt = Vec::with_capacity(nodes);
    for &t in points {
        logt.push(continue_one(t.ln(), logt.last().copied(), nodes)?);
        for (k, poly) in chart.polys.iter().enumerate() {
            let v = horner(poly, t);
            let prev = logp[k].last().copied();
            logp[k].push(continue_one(v.ln(), prev, nodes)?);
        }
    }
    Ok(LogTrack { logp, logt })
}

/// Weighted sum of the derivative integrand over a sampled path. `masses`
/// shifts each block exponent down and scales by the falling factorial;
/// `tpow` is the extra integer power of t the derivative brings in.
pub(crate) fn eval_column(
    chart: &Chart,
    track: &LogTrack,
    weights: &[Cplx],
    masses: &[usize],
    tpow: i64,
) -> Cplx {
    let mut fall = 1.0;
    for (k, &m) in masses.iter().enumerate() {
        for i in 0..m {
            fall *= chart.betas[k] - i as Real;
        }
    }
    let shifts: Vec<Real> = chart
        .betas
        .iter()
        .zip(masses)
        .map(|(b, &m)| b - m as Real)
        .collect();
    let mut tcoef = tpow as Real;
    for (k, sh) in shifts.iter().enumerate() {
        tcoef += sh * chart.minw[k] as Real;
    }
    let mut acc = Cplx::new(0.0, 0.0);
    for s in 0..track.logt.len() {
        let mut exponent = track.logt[s] * tcoef;
        for (k, sh) in shifts.iter().enumerate() {
            exponent += track.logp[k][s] * *sh;
        }
        acc += weights[s] * exponent.exp();
    }
    acc * fall
}

/// A sampled path: points plus weights such that sum_s f(t_s) w_s
/// approximates (1/2 pi i) times the integral of f(t) dt/t.
pub(crate) struct Path {
    pub points: Vec<Cplx>,
    pub weights: Vec<Cplx>,
}

impl Path {
    fn new() -> Self {
        Path {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }
}

fn two_pi_i() -> Cplx {
    Cplx::new(0.0, TAU)
}

/// Straight segment from `a` to `b`.
fn line_piece(path: &mut Path, a: Cplx, b: Cplx, panels: usize) {
    let jump = b - a;
    let rule = gl16();
    for p in 0..panels {
        let lo = p as Real / panels as Real;
        let hi = (p + 1) as Real / panels as Real;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (node, w) in rule {
            let t = a + jump * (mid + half * node);
            path.points.push(t);
            path.weights.push(jump / t * (w * half) / two_pi_i());
        }
    }
}

/// Circular arc around `center`: angle runs from `phi0` through a signed
/// sweep of `dphi`.
fn arc_piece(path: &mut Path, center: Cplx, radius: Real, phi0: Real, dphi: Real, panels: usize) {
    let rule = gl16();
    for p in 0..panels {
        let lo = p as Real / panels as Real;
        let hi = (p + 1) as Real / panels as Real;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (node, w) in rule {
            let phi = phi0 + dphi * (mid + half * node);
            let offset = Cplx::from_polar(radius, phi);
            let t = center + offset;
            let dt = Cplx::new(0.0, 1.0) * offset * dphi;
            path.points.push(t);
            path.weights.push(dt / t * (w * half) / two_pi_i());
        }
    }
}

/// Radial ray t = u * outer with u running over [eps, 1] on geometrically
/// graded panels; dt/t = du/u regardless of the direction `outer`.
fn radial_piece(path: &mut Path, outer: Cplx, panels: usize, outward: bool) {
    let rule = gl16();
    let mut us = Vec::with_capacity(panels * 16);
    let mut ws = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let u_lo = RADIAL_EPS.powf(1.0 - p as Real / panels as Real);
        let u_hi = RADIAL_EPS.powf(1.0 - (p + 1) as Real / panels as Real);
        let mid = 0.5 * (u_lo + u_hi);
        let half = 0.5 * (u_hi - u_lo);
        for (node, w) in rule {
            let u = mid + half * node;
            us.push(u);
            ws.push(w * half / u);
        }
    }
    if outward {
        for (u, w) in us.into_iter().zip(ws) {
            path.points.push(outer * u);
            path.weights.push(Cplx::new(w, 0.0) / two_pi_i());
        }
    } else {
        for (u, w) in us.into_iter().zip(ws).rev() {
            path.points.push(outer * u);
            path.weights.push(-Cplx::new(w, 0.0) / two_pi_i());
        }
    }
}

fn unit(z: Cplx) -> Cplx {
    z / z.norm()
}

/// Loop from the base point out to a puncture, once around it, and back.
fn based_loop(t0: Cplx, center: Cplx, radius: Real, panels: usize) -> Path {
    let entry = center + unit(t0 - center) * radius;
    let mut path = Path::new();
    line_piece(&mut path, t0, entry, panels);
    arc_piece(&mut path, center, radius, (entry - center).arg(), TAU, panels);
    line_piece(&mut path, entry, t0, panels);
    path
}

/// Loop from the base point out to a large circle, once around it clockwise
/// (a positive loop in the chart at infinity), and back.
fn infinity_loop(t0: Cplx, big_radius: Real, panels: usize) -> Path {
    let entry = unit(t0) * big_radius;
    let mut path = Path::new();
    line_piece(&mut path, t0, entry, panels);
    arc_piece(&mut path, Cplx::new(0.0, 0.0), big_radius, entry.arg(), -TAU, panels);
    line_piece(&mut path, entry, t0, panels);
    path
}

/// Relative loop based at the chart origin: radially out to a puncture,
/// around it, and radially back.
fn marked_loop(center: Cplx, radius: Real, panels: usize) -> Path {
    let entry = center - unit(center) * radius;
    let mut path = Path::new();
    radial_piece(&mut path, entry, panels, true);
    arc_piece(&mut path, center, radius, (entry - center).arg(), TAU, panels);
    radial_piece(&mut path, entry, panels, false);
    path
}

/// Evaluates every column along a path, doubling the panel density on a
/// branch jump up to the cap.
fn path_row(
    chart: &Chart,
    columns: &[ColumnSig],
    negate_tpow: bool,
    build: impl Fn(usize) -> Path,
) -> Result<Vec<Cplx>, PeriodError> {
    let mut panels = BASE_PANELS;
    loop {
        let path = build(panels);
        match continue_logs(chart, &path.points) {
            Ok(track) => {
                return Ok(columns
                    .iter()
                    .map(|sig| {
                        let tpow = if negate_tpow { -sig.tpow } else { sig.tpow };
                        eval_column(chart, &track, &path.weights, &sig.masses, tpow)
                    })
                    .collect());
            }
            Err(PeriodError::BranchJump { .. }) if panels < PANEL_CAP => panels *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// The same integrand viewed in the chart at infinity: u = 1/t reverses each
/// polynomial, the valuation becomes minus the top weight, and the punctures
/// invert.
fn flipped(chart: &Chart) -> Chart {
    let polys: Vec<Vec<Cplx>> = chart
        .polys
        .iter()
        .map(|p| p.iter().rev().copied().collect())
        .collect();
    let minw = chart
        .polys
        .iter()
        .zip(&chart.minw)
        .map(|(p, &m)| -(m + (p.len() as i64 - 1)))
        .collect();
    let mut zeros: Vec<(usize, Cplx)> = chart
        .zeros
        .iter()
        .map(|(k, z)| (*k, z.finv()))
        .collect();
    zeros.sort_by(|a, b| {
        (a.1.norm(), a.1.arg())
            .partial_cmp(&(b.1.norm(), b.1.arg()))
            .unwrap()
    });
    Chart {
        polys,
        minw,
        betas: chart.betas.clone(),
        zeros,
    }
}

/// Distance from one puncture to the nearest other singular point (another
/// puncture or the chart origin), for choosing a safe loop radius.
fn clearance(zeros: &[(usize, Cplx)], idx: usize) -> Real {
    let z = zeros[idx].1;
    let mut best = z.norm();
    for (j, (_, other)) in zeros.iter().enumerate() {
        if j != idx {
            best = best.min((z - *other).norm());
        }
    }
    best
}

/// Composite rows for the period matrix: absolute cycles from base-point
/// loop differences, then relative classes through each marked ray whose
/// exponent admits a convergent radial approach.
pub(crate) fn inventory_rows(
    prep: &Prepared,
    columns: &[ColumnSig],
) -> Result<Vec<Vec<Cplx>>, PeriodError> {
    let chart = &prep.chart;
    if chart.zeros.is_empty() {
        return Ok(Vec::new());
    }

    let mut pairing_zero = Rat::zero();
    let mut pairing_inf = Rat::zero();
    for (k, beta) in prep.betas_exact.iter().enumerate() {
        let deg = chart.polys[k].len() as i64 - 1;
        pairing_zero += beta * Rat::from_integer((-chart.minw[k]).into());
        pairing_inf += beta * Rat::from_integer((chart.minw[k] + deg).into());
    }

    let moduli = chart.sorted_moduli();
    let (mu_min, mu_max) = (moduli[0], moduli[moduli.len() - 1]);
    let t0 = if chart.zeros.len() == 1 {
        Cplx::from_polar(1.7 * mu_min, 0.9)
    } else {
        Cplx::from_polar((mu_min * mu_max).sqrt(), 0.9)
    };

    // local exponent and loop builder per absolute puncture
    let mut exponents: Vec<Real> = Vec::new();
    let mut raw_rows: Vec<Vec<Cplx>> = Vec::new();
    for idx in 0..chart.zeros.len() {
        let (k, z) = chart.zeros[idx];
        let radius = LOOP_RADIUS_FACTOR * clearance(&chart.zeros, idx);
        exponents.push(chart.betas[k]);
        raw_rows.push(path_row(chart, columns, false, |panels| {
            based_loop(t0, z, radius, panels)
        })?);
    }
    let exponent_at = |pairing: &Rat| -> Real {
        let n = pairing.numer().to_f64().expect("pairing numerator");
        let d = pairing.denom().to_f64().expect("pairing denominator");
        -(n / d)
    };
    if !pairing_zero.is_integer() {
        exponents.push(exponent_at(&pairing_zero));
        raw_rows.push(path_row(chart, columns, false, |panels| {
            based_loop(
                t0,
                Cplx::new(0.0, 0.0),
                LOOP_RADIUS_FACTOR * mu_min,
                panels,
            )
        })?);
    }
    if !pairing_inf.is_integer() {
        exponents.push(exponent_at(&pairing_inf));
        raw_rows.push(path_row(chart, columns, false, |panels| {
            infinity_loop(t0, BIG_RADIUS_FACTOR * mu_max, panels)
        })?);
    }

    let monodromy = |e: Real| Cplx::from_polar(1.0, TAU * e) - Cplx::new(1.0, 0.0);
    let mut rows = Vec::new();
    let c0 = monodromy(exponents[0]);
    for i in 1..raw_rows.len() {
        let ci = monodromy(exponents[i]);
        let row: Vec<Cplx> = raw_rows[i]
            .iter()
            .zip(&raw_rows[0])
            .map(|(vi, v0)| c0 * vi - ci * v0)
            .collect();
        rows.push(row);
    }

    for (at_infinity, pairing) in [(false, &pairing_zero), (true, &pairing_inf)] {
        if !pairing.is_integer() {
            continue;
        }
        let exponent = (-pairing)
            .to_integer()
            .to_i64()
            .expect("ray exponent out of range");
        if exponent < 1 {
            // the radial approach only converges for positive exponents
            continue;
        }
        let marked_chart;
        let view = if at_infinity {
            marked_chart = flipped(chart);
            &marked_chart
        } else {
            chart
        };
        for idx in 0..view.zeros.len() {
            let (_, z) = view.zeros[idx];
            let radius = LOOP_RADIUS_FACTOR * clearance(&view.zeros, idx);
            rows.push(path_row(view, columns, at_infinity, |panels| {
                marked_loop(z, radius, panels)
            })?);
        }
    }

    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: Real, im: Real) -> Cplx {
        Cplx::new(re, im)
    }

    fn empty_chart() -> Chart {
        Chart {
            polys: vec![],
            minw: vec![],
            betas: vec![],
            zeros: vec![],
        }
    }

    fn value_on(chart: &Chart, path: &Path, masses: &[usize], tpow: i64) -> Cplx {
        let track = continue_logs(chart, &path.points).unwrap();
        eval_column(chart, &track, &path.weights, masses, tpow)
    }

    #[test]
    fn line_integral_of_dlog_matches_the_logarithm() {
        let chart = empty_chart();
        let mut path = Path::new();
        line_piece(&mut path, cx(1.0, 0.0), cx(std::f64::consts::E, 0.0), 8);
        let v = value_on(&chart, &path, &[], 0);
        let expected = cx(1.0, 0.0) / two_pi_i();
        assert!((v - expected).norm() < 1e-13);
    }

    #[test]
    fn radial_piece_integrates_powers_of_t() {
        let chart = empty_chart();
        let outer = cx(0.4, 0.7);
        let mut path = Path::new();
        radial_piece(&mut path, outer, BASE_PANELS, true);
        // integral of t dt/t from (almost) 0 to outer is outer
        let v = value_on(&chart, &path, &[], 1);
        assert!((v - outer / two_pi_i()).norm() < 1e-12);
    }

    #[test]
    fn radial_out_and_back_cancel_exactly_for_single_valued_integrands() {
        let chart = empty_chart();
        let outer = cx(0.9, -0.2);
        let mut path = Path::new();
        radial_piece(&mut path, outer, BASE_PANELS, true);
        radial_piece(&mut path, outer, BASE_PANELS, false);
        let v = value_on(&chart, &path, &[], 2);
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn full_arc_recovers_the_residue_of_dlog() {
        let chart = empty_chart();
        let mut path = Path::new();
        arc_piece(&mut path, cx(0.0, 0.0), 2.0, 0.3, TAU, BASE_PANELS);
        let v = value_on(&chart, &path, &[], 0);
        assert!((v - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_block_integrates_to_its_power() {
        let c = Cplx::from_polar(2.0, std::f64::consts::FRAC_PI_4);
        let beta = 1.0 / 3.0;
        let chart = Chart {
            polys: vec![vec![c]],
            minw: vec![0],
            betas: vec![beta],
            zeros: vec![],
        };
        let mut path = Path::new();
        arc_piece(&mut path, cx(0.0, 0.0), 1.0, 0.0, TAU, BASE_PANELS);
        let v = value_on(&chart, &path, &[0], 0);
        let expected = (c.ln() * beta).exp();
        assert!((v - expected).norm() < 1e-10);
    }

    #[test]
    fn based_loop_recovers_a_simple_residue() {
        // integrand (t - 1)^(-1) dt/t has residue 1 at t = 1
        let chart = Chart {
            polys: vec![vec![cx(-1.0, 0.0), cx(1.0, 0.0)]],
            minw: vec![0],
            betas: vec![-1.0],
            zeros: vec![(0, cx(1.0, 0.0))],
        };
        let t0 = Cplx::from_polar(1.7, 0.9);
        let path = based_loop(t0, cx(1.0, 0.0), 0.3, BASE_PANELS);
        let v = value_on(&chart, &path, &[0], 0);
        assert!((v - cx(1.0, 0.0)).norm() < 1e-9, "got {v}");
    }

    #[test]
    fn marked_loop_recovers_the_same_residue() {
        let chart = Chart {
            polys: vec![vec![cx(-1.0, 0.0), cx(1.0, 0.0)]],
            minw: vec![0],
            betas: vec![-1.0],
            zeros: vec![(0, cx(1.0, 0.0))],
        };
        let path = marked_loop(cx(1.0, 0.0), 0.3, BASE_PANELS);
        let v = value_on(&chart, &path, &[0], 0);
        assert!((v - cx(1.0, 0.0)).norm() < 1e-9, "got {v}");
    }

    #[test]
    fn continued_log_winds_once_around_an_enclosed_zero() {
        let chart = Chart {
            polys: vec![vec![cx(-1.0, 0.0), cx(1.0, 0.0)]],
            minw: vec![0],
            betas: vec![-0.5],
            zeros: vec![(0, cx(1.0, 0.0))],
        };
        let mut path = Path::new();
        arc_piece(&mut path, cx(1.0, 0.0), 0.25, 0.0, TAU, BASE_PANELS);
        let track = continue_logs(&chart, &path.points).unwrap();
        let sweep = track.logp[0][track.logp[0].len() - 1].im - track.logp[0][0].im;
        // interior Gauss nodes span just under a full turn
        assert!((sweep - TAU).abs() < 0.1, "sweep {sweep}");
    }

    #[test]
    fn flipping_the_chart_twice_is_the_identity() {
        let chart = Chart {
            polys: vec![vec![cx(1.0, 0.5), cx(2.0, 0.0), cx(0.0, -1.0)]],
            minw: vec![-1],
            betas: vec![-0.5],
            zeros: vec![(0, cx(0.5, 0.5)), (0, cx(-1.0, 1.5))],
        };
        let back = flipped(&flipped(&chart));
        assert_eq!(back.polys, chart.polys);
        assert_eq!(back.minw, chart.minw);
        for (a, b) in back.zeros.iter().zip(&chart.zeros) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).norm() < 1e-15);
        }
    }

    #[test]
    fn flipped_chart_evaluates_the_inverted_points() {
        // b(t) = 2 + t with valuation 0; in the u-chart the polynomial is
        // 1 + 2u with valuation -1 and puncture at u = -1/2
        let chart = Chart {
            polys: vec![vec![cx(2.0, 0.0), cx(1.0, 0.0)]],
            minw: vec![0],
            betas: vec![-0.5],
            zeros: vec![(0, cx(-2.0, 0.0))],
        };
        let flip = flipped(&chart);
        assert_eq!(flip.polys, vec![vec![cx(1.0, 0.0), cx(2.0, 0.0)]]);
        assert_eq!(flip.minw, vec![-1]);
        assert!((flip.zeros[0].1 - cx(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn origin_loop_monodromy_matches_the_stored_ray_exponent() {
        use crate::curve::{toric_curve_report, PunctureKind, Ray};
        use crate::scalar::ratio_to_float;
        use crate::system::assemble_system;
        use crate::Int;
        use num_rational::Ratio;

        let block: Vec<Vec<Int>> = [0i64, 1, -1].iter().map(|&w| vec![Int::from(w)]).collect();
        let sys = assemble_system(
            1,
            1,
            vec![block],
            vec![Ratio::new(Int::from(-1), Int::from(2))],
        )
        .unwrap();
        let report = toric_curve_report(&sys).unwrap();
        let stored: Real = report
            .profile
            .punctures
            .iter()
            .find(|p| p.kind == PunctureKind::AtRay(Ray::Rho0))
            .map(|p| ratio_to_float(&p.exponent))
            .unwrap();

        // the same system at x = (3, 1, 1), looped once around t = 0
        let chart = Chart {
            polys: vec![vec![cx(1.0, 0.0), cx(3.0, 0.0), cx(1.0, 0.0)]],
            minw: vec![-1],
            betas: vec![-0.5],
            zeros: vec![(0, cx(-0.3819660113, 0.0)), (0, cx(-2.6180339887, 0.0))],
        };
        let path = based_loop(Cplx::from_polar(1.0, 0.9), cx(0.0, 0.0), 0.1, BASE_PANELS);
        let track = continue_logs(&chart, &path.points).unwrap();
        let last = track.logt.len() - 1;
        let t_turns = (track.logt[last].im - track.logt[0].im) / TAU;
        let p_turns = (track.logp[0][last].im - track.logp[0][0].im) / TAU;
        // t winds once, the polynomial part not at all, so the branch of the
        // integrand picks up exactly the ray exponent
        let measured = chart.betas[0] * (chart.minw[0] as Real * t_turns + p_turns);
        assert!((measured - stored).abs() < 5e-3, "measured {measured}, stored {stored}");
    }

    #[test]
    fn crossing_the_principal_cut_is_not_a_branch_jump() {
        let chart = empty_chart();
        let points = [cx(-1.0, 0.1), cx(-1.0, -0.1)];
        let track = continue_logs(&chart, &points).unwrap();
        // the continued phase keeps increasing past pi instead of snapping back
        assert!(track.logt[1].im > track.logt[0].im);
    }

    #[test]
    fn a_quarter_turn_per_step_is_a_branch_jump() {
        let chart = empty_chart();
        let points = [cx(1.0, 0.0), cx(0.0, 1.0)];
        match continue_logs(&chart, &points) {
            Err(PeriodError::BranchJump { nodes }) => assert_eq!(nodes, 2),
            Err(other) => panic!("expected a branch jump, got {other:?}"),
            Ok(_) => panic!("expected a branch jump"),
        }
    }
}
