//! Topological side of the rank prediction on the projective line: divisor
//! coefficients of the weight blocks, the integral/nonintegral ray split,
//! local monodromy exponents, and the homology dimension table.

use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

use crate::scalar::ExactScalar;
use crate::system::GkzSystem;
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("only one-dimensional tori are supported, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("block {0} is constant (lattice length zero)")]
    ConstantBlock(usize),
    #[error("fewer than two punctures")]
    TooFewPunctures,
    #[error("every monodromy exponent is integral")]
    TrivialLocalSystem,
}

/// The two torus-fixed points of the line, as primitive rays +1 and -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ray {
    Rho0,
    RhoInf,
}

impl Ray {
    pub fn primitive(self) -> i64 {
        match self {
            Ray::Rho0 => 1,
            Ray::RhoInf => -1,
        }
    }
}

impl std::fmt::Display for Ray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ray::Rho0 => write!(f, "rho_0"),
            Ray::RhoInf => write!(f, "rho_inf"),
        }
    }
}

/// Per-block divisor coefficients at the two rays, plus the block lattice
/// lengths. `a_zero[k] + a_inf[k] = lengths[k]` for every block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorData<E: ExactScalar = Int> {
    pub a_zero: Vec<E>,
    pub a_inf: Vec<E>,
    pub lengths: Vec<E>,
}

impl<E: ExactScalar> DivisorData<E> {
    pub fn a(&self, ray: Ray, block: usize) -> &E {
        match ray {
            Ray::Rho0 => &self.a_zero[block],
            Ray::RhoInf => &self.a_inf[block],
        }
    }

    /// Sum of a_{ray,k} * beta_k over blocks.
    pub fn pairing(&self, ray: Ray, beta_head: &[Ratio<E>]) -> Ratio<E> {
        let mut acc = Ratio::zero();
        for (k, b) in beta_head.iter().enumerate() {
            acc = acc + Ratio::from_integer(self.a(ray, k).clone()) * b.clone();
        }
        acc
    }
}

/// a_{rho_0,k} = -min_j w_{k,j} and a_{rho_inf,k} = max_j w_{k,j}.
pub fn divisor_coefficients<E: ExactScalar>(
    sys: &GkzSystem<E>,
) -> Result<DivisorData<E>, CurveError> {
    if sys.n() != 1 {
        return Err(CurveError::UnsupportedDimension(sys.n()));
    }
    let mut a_zero = Vec::with_capacity(sys.r());
    let mut a_inf = Vec::with_capacity(sys.r());
    let mut lengths = Vec::with_capacity(sys.r());
    for (k, block) in sys.weight_blocks().iter().enumerate() {
        let min = block.iter().map(|w| w[0].clone()).min().expect("nonempty block");
        let max = block.iter().map(|w| w[0].clone()).max().expect("nonempty block");
        let len = max.clone() - min.clone();
        if len.is_zero() {
            return Err(CurveError::ConstantBlock(k + 1));
        }
        a_zero.push(-min);
        a_inf.push(max);
        lengths.push(len);
    }
    Ok(DivisorData {
        a_zero,
        a_inf,
        lengths,
    })
}

/// Rays whose twist pairing is an integer, and the complement.
pub fn split_integral_rays<E: ExactScalar>(
    div: &DivisorData<E>,
    beta_head: &[Ratio<E>],
) -> (Vec<Ray>, Vec<Ray>) {
    let mut integral = Vec::new();
    let mut complement = Vec::new();
    for ray in [Ray::Rho0, Ray::RhoInf] {
        if div.pairing(ray, beta_head).is_integer() {
            integral.push(ray);
        } else {
            complement.push(ray);
        }
    }
    (integral, complement)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PunctureKind {
    /// Zeros of block k (1-based), all sharing one exponent.
    ZeroOfBlock(usize),
    AtRay(Ray),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Puncture<E: ExactScalar = Int> {
    pub kind: PunctureKind,
    pub exponent: Ratio<E>,
    pub multiplicity: usize,
}

/// Local monodromy data: each block's zeros carry its twist component, each
/// ray carries the negated pairing, and the exponents sum to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentProfile<E: ExactScalar = Int> {
    pub punctures: Vec<Puncture<E>>,
    pub integral_set: Vec<Ray>,
    pub complement: Vec<Ray>,
}

impl<E: ExactScalar> ExponentProfile<E> {
    /// Punctures of the open curve: all block zeros plus the rays outside
    /// the integral set.
    pub fn open_curve_punctures(&self) -> usize {
        self.punctures
            .iter()
            .filter(|p| match &p.kind {
                PunctureKind::ZeroOfBlock(_) => true,
                PunctureKind::AtRay(ray) => self.complement.contains(ray),
            })
            .map(|p| p.multiplicity)
            .sum()
    }

    pub fn exponent_sum(&self) -> Ratio<E> {
        let mut acc = Ratio::zero();
        for p in &self.punctures {
            let mut mult = E::zero();
            for _ in 0..p.multiplicity {
                mult = mult + E::one();
            }
            acc = acc + p.exponent.clone() * Ratio::from_integer(mult);
        }
        acc
    }
}

pub fn monodromy_profile<E: ExactScalar>(
    sys: &GkzSystem<E>,
    div: &DivisorData<E>,
    integral_set: &[Ray],
    complement: &[Ray],
) -> ExponentProfile<E> {
    let mut punctures = Vec::new();
    for (k, b) in sys.beta_head().iter().enumerate() {
        punctures.push(Puncture {
            kind: PunctureKind::ZeroOfBlock(k + 1),
            exponent: b.clone(),
            multiplicity: div.lengths[k].to_usize().expect("desk-scale length"),
        });
    }
    for ray in [Ray::Rho0, Ray::RhoInf] {
        punctures.push(Puncture {
            kind: PunctureKind::AtRay(ray),
            exponent: -div.pairing(ray, sys.beta_head()),
            multiplicity: 1,
        });
    }
    ExponentProfile {
        punctures,
        integral_set: integral_set.to_vec(),
        complement: complement.to_vec(),
    }
}

/// Dimensions of the homology long exact sequence of the punctured line
/// relative to the retained torus-fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LesTable {
    pub h1_int: usize,
    pub h1_open: usize,
    pub h1_rel: usize,
    pub h0_int: usize,
    pub h0_open: usize,
    pub h0_rel: usize,
}

impl LesTable {
    pub fn as_tuple(&self) -> (usize, usize, usize, usize, usize, usize) {
        (
            self.h1_int,
            self.h1_open,
            self.h1_rel,
            self.h0_int,
            self.h0_open,
            self.h0_rel,
        )
    }
}

pub fn les_dimensions<E: ExactScalar>(profile: &ExponentProfile<E>) -> Result<LesTable, CurveError> {
    let n = profile.open_curve_punctures();
    if n < 2 {
        return Err(CurveError::TooFewPunctures);
    }
    let nontrivial = profile.punctures.iter().any(|p| {
        let open = match &p.kind {
            PunctureKind::ZeroOfBlock(_) => true,
            PunctureKind::AtRay(ray) => profile.complement.contains(ray),
        };
        open && p.multiplicity > 0 && !p.exponent.is_integer()
    });
    if !nontrivial {
        return Err(CurveError::TrivialLocalSystem);
    }
    let i = profile.integral_set.len();
    Ok(LesTable {
        h1_int: 0,
        h1_open: n - 2,
        h1_rel: n - 2 + i,
        h0_int: i,
        h0_open: 0,
        h0_rel: 0,
    })
}

/// Predicted dimension of the local solution space: the relative h1 of the
/// generic dimension table.
pub fn solution_rank<E: ExactScalar>(sys: &GkzSystem<E>) -> Result<usize, CurveError> {
    let div = divisor_coefficients(sys)?;
    let (i_set, j_set) = split_integral_rays(&div, sys.beta_head());
    let profile = monodromy_profile(sys, &div, &i_set, &j_set);
    Ok(les_dimensions(&profile)?.h1_rel)
}

/// The rays lifted by their divisor coefficients: (ray, a_{ray,1..r}).
pub fn lifted_rays<E: ExactScalar>(sys: &GkzSystem<E>, div: &DivisorData<E>) -> Vec<Vec<E>> {
    let mut out = Vec::with_capacity(2);
    for ray in [Ray::Rho0, Ray::RhoInf] {
        let mut v = Vec::with_capacity(1 + sys.r());
        v.push(E::from(ray.primitive()));
        for k in 0..sys.r() {
            v.push(div.a(ray, k).clone());
        }
        out.push(v);
    }
    out
}

/// Aggregated curve-side data in reporting order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToricCurveReport<E: ExactScalar = Int> {
    pub divisor: DivisorData<E>,
    pub integral_set: Vec<Ray>,
    pub complement: Vec<Ray>,
    pub profile: ExponentProfile<E>,
    pub les: LesTable,
    pub rank: usize,
    pub lifted: Vec<Vec<E>>,
}

pub fn toric_curve_report<E: ExactScalar>(
    sys: &GkzSystem<E>,
) -> Result<ToricCurveReport<E>, CurveError> {
    let div = divisor_coefficients(sys)?;
    let (i_set, j_set) = split_integral_rays(&div, sys.beta_head());
    let profile = monodromy_profile(sys, &div, &i_set, &j_set);
    let les = les_dimensions(&profile)?;
    let lifted = lifted_rays(sys, &div);
    Ok(ToricCurveReport {
        divisor: div,
        integral_set: i_set,
        complement: j_set,
        profile,
        les,
        rank: les.h1_rel,
        lifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::assemble_system;
    use crate::Int;

    fn segment(weights: &[i64], beta: (i64, i64)) -> GkzSystem<Int> {
        assemble_system(
            1,
            1,
            vec![weights.iter().map(|&w| vec![Int::from(w)]).collect()],
            vec![Ratio::new(Int::from(beta.0), Int::from(beta.1))],
        )
        .unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| Int::from(x)).collect()
    }

    #[test]
    fn divisor_coefficients_from_weight_extremes() {
        let div = divisor_coefficients(&segment(&[0, 1, -1], (-1, 2))).unwrap();
        assert_eq!(div.a_zero, ints(&[1]));
        assert_eq!(div.a_inf, ints(&[1]));
        assert_eq!(div.lengths, ints(&[2]));

        let div = divisor_coefficients(&segment(&[0, 1, 2, -1], (-1, 2))).unwrap();
        assert_eq!((div.a_zero, div.a_inf, div.lengths), (ints(&[1]), ints(&[2]), ints(&[3])));

        let div = divisor_coefficients(&segment(&[0, 1, 2, -1, -2], (-1, 2))).unwrap();
        assert_eq!((div.a_zero, div.a_inf, div.lengths), (ints(&[2]), ints(&[2]), ints(&[4])));
    }

    #[test]
    fn rejects_higher_dimensional_tori() {
        let sys = assemble_system::<Int>(
            1,
            2,
            vec![vec![ints(&[0, 0]), ints(&[1, 0]), ints(&[0, 1])]],
            vec![Ratio::new(Int::from(-1), Int::from(2))],
        )
        .unwrap();
        assert_eq!(
            divisor_coefficients(&sys).unwrap_err(),
            CurveError::UnsupportedDimension(2)
        );
    }

    #[test]
    fn rejects_constant_blocks() {
        let sys = assemble_system::<Int>(
            2,
            1,
            vec![
                vec![ints(&[0]), ints(&[1])],
                vec![ints(&[5])],
            ],
            vec![
                Ratio::new(Int::from(-1), Int::from(2)),
                Ratio::new(Int::from(-1), Int::from(3)),
            ],
        )
        .unwrap();
        assert_eq!(divisor_coefficients(&sys).unwrap_err(), CurveError::ConstantBlock(2));
    }

    #[test]
    fn ray_split_matches_pairing_integrality() {
        let sys = segment(&[0, 1, -1], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        let (i, j) = split_integral_rays(&div, sys.beta_head());
        assert!(i.is_empty());
        assert_eq!(j, vec![Ray::Rho0, Ray::RhoInf]);

        let sys = segment(&[0, 1, 2, -1], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        let (i, j) = split_integral_rays(&div, sys.beta_head());
        assert_eq!(i, vec![Ray::RhoInf]);
        assert_eq!(j, vec![Ray::Rho0]);

        let sys = segment(&[0, 1, 2, -1, -2], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        let (i, j) = split_integral_rays(&div, sys.beta_head());
        assert_eq!(i, vec![Ray::Rho0, Ray::RhoInf]);
        assert!(j.is_empty());
    }

    fn full_profile(weights: &[i64], beta: (i64, i64)) -> ExponentProfile<Int> {
        let sys = segment(weights, beta);
        let div = divisor_coefficients(&sys).unwrap();
        let (i, j) = split_integral_rays(&div, sys.beta_head());
        monodromy_profile(&sys, &div, &i, &j)
    }

    #[test]
    fn profile_exponents_and_balance() {
        let p = full_profile(&[0, 1, 2, -1], (-1, 2));
        assert_eq!(p.punctures.len(), 3);
        assert_eq!(p.punctures[0].kind, PunctureKind::ZeroOfBlock(1));
        assert_eq!(p.punctures[0].multiplicity, 3);
        assert_eq!(p.punctures[0].exponent, Ratio::new(Int::from(-1), Int::from(2)));
        assert_eq!(p.punctures[1].exponent, Ratio::new(Int::from(1), Int::from(2)));
        assert_eq!(p.punctures[2].exponent, Ratio::from_integer(Int::from(1)));
        assert!(p.exponent_sum().is_zero());
        assert_eq!(p.open_curve_punctures(), 4);
    }

    #[test]
    fn dimension_tables_for_the_worked_segments() {
        let les = les_dimensions(&full_profile(&[0, 1, -1], (-1, 2))).unwrap();
        assert_eq!(les.as_tuple(), (0, 2, 2, 0, 0, 0));
        let les = les_dimensions(&full_profile(&[0, 1, 2, -1], (-1, 2))).unwrap();
        assert_eq!(les.as_tuple(), (0, 2, 3, 1, 0, 0));
        let les = les_dimensions(&full_profile(&[0, 1, 2, -1, -2], (-1, 2))).unwrap();
        assert_eq!(les.as_tuple(), (0, 2, 4, 2, 0, 0));
    }

    #[test]
    fn les_alternating_sum_vanishes() {
        for (w, b) in [
            (vec![0i64, 1, -1], (-1i64, 2i64)),
            (vec![0, 1, 2, -1], (-1, 2)),
            (vec![0, 1, 2, -1, -2], (-1, 2)),
            (vec![0, 3, 1, -2], (-1, 4)),
        ] {
            let les = les_dimensions(&full_profile(&w, b)).unwrap();
            let (a, b_, c, d, e, f) = les.as_tuple();
            assert_eq!(
                a as i64 - b_ as i64 + c as i64 - d as i64 + e as i64 - f as i64,
                0
            );
        }
    }

    #[test]
    fn degenerate_profiles_are_rejected() {
        let err = les_dimensions::<Int>(&ExponentProfile {
            punctures: vec![Puncture {
                kind: PunctureKind::ZeroOfBlock(1),
                exponent: Ratio::new(Int::from(-1), Int::from(2)),
                multiplicity: 1,
            }],
            integral_set: vec![Ray::Rho0, Ray::RhoInf],
            complement: vec![],
        })
        .unwrap_err();
        assert_eq!(err, CurveError::TooFewPunctures);

        let err = les_dimensions::<Int>(&ExponentProfile {
            punctures: vec![
                Puncture {
                    kind: PunctureKind::ZeroOfBlock(1),
                    exponent: Ratio::from_integer(Int::from(1)),
                    multiplicity: 2,
                },
                Puncture {
                    kind: PunctureKind::AtRay(Ray::Rho0),
                    exponent: Ratio::from_integer(Int::from(-2)),
                    multiplicity: 1,
                },
            ],
            integral_set: vec![],
            complement: vec![Ray::Rho0, Ray::RhoInf],
        })
        .unwrap_err();
        assert_eq!(err, CurveError::TrivialLocalSystem);
    }

    #[test]
    fn ranks_of_the_worked_segments() {
        assert_eq!(solution_rank(&segment(&[0, 1, -1], (-1, 2))).unwrap(), 2);
        assert_eq!(solution_rank(&segment(&[0, 1, 2, -1], (-1, 2))).unwrap(), 3);
        assert_eq!(solution_rank(&segment(&[0, 1, 2, -1, -2], (-1, 2))).unwrap(), 4);
    }

    #[test]
    fn lifted_rays_carry_divisor_coefficients() {
        let sys = segment(&[0, 1, 2, -1], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        assert_eq!(lifted_rays(&sys, &div), vec![ints(&[1, 1]), ints(&[-1, 2])]);
        let sys = segment(&[0, 1, -1], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        assert_eq!(lifted_rays(&sys, &div), vec![ints(&[1, 1]), ints(&[-1, 1])]);
        let sys = segment(&[0, 1, 2, -1, -2], (-1, 2));
        let div = divisor_coefficients(&sys).unwrap();
        assert_eq!(lifted_rays(&sys, &div), vec![ints(&[1, 2]), ints(&[-1, 2])]);
    }

    #[test]
    fn report_aggregates_consistently() {
        let rep = toric_curve_report(&segment(&[0, 1, 2, -1], (-1, 2))).unwrap();
        assert_eq!(rep.rank, 3);
        assert_eq!(rep.les.h1_rel, 3);
        assert_eq!(rep.integral_set, vec![Ray::RhoInf]);
        assert_eq!(rep.divisor.a_zero, ints(&[1]));
        assert_eq!(rep.lifted.len(), 2);
    }

    #[test]
    fn two_block_rank_sums_lengths() {
        let sys = assemble_system::<Int>(
            2,
            1,
            vec![
                vec![ints(&[0]), ints(&[1])],
                vec![ints(&[0]), ints(&[-1])],
            ],
            vec![
                Ratio::new(Int::from(-1), Int::from(2)),
                Ratio::new(Int::from(-1), Int::from(3)),
            ],
        )
        .unwrap();
        assert_eq!(solution_rank(&sys).unwrap(), 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_weights() -> impl Strategy<Value = Vec<i64>> {
            proptest::collection::vec(-4i64..=4, 2..=6)
        }

        fn arb_beta() -> impl Strategy<Value = (i64, i64)> {
            prop_oneof![
                Just((-1, 2)),
                Just((1, 2)),
                Just((-1, 3)),
                Just((2, 3)),
                Just((-1, 4)),
                Just((-2, 3)),
            ]
        }

        fn try_segment(w: &[i64], beta: (i64, i64)) -> Option<GkzSystem<Int>> {
            assemble_system(
                1,
                1,
                vec![w.iter().map(|&x| vec![Int::from(x)]).collect()],
                vec![Ratio::new(Int::from(beta.0), Int::from(beta.1))],
            )
            .ok()
        }

        proptest! {
            #[test]
            fn degree_identity_holds(w in arb_weights(), beta in arb_beta()) {
                let Some(sys) = try_segment(&w, beta) else { return Ok(()) };
                let Ok(div) = divisor_coefficients(&sys) else { return Ok(()) };
                for k in 0..sys.r() {
                    prop_assert_eq!(
                        div.a_zero[k].clone() + div.a_inf[k].clone(),
                        div.lengths[k].clone()
                    );
                }
            }

            #[test]
            fn exponent_sum_vanishes(w in arb_weights(), beta in arb_beta()) {
                let Some(sys) = try_segment(&w, beta) else { return Ok(()) };
                let Ok(div) = divisor_coefficients(&sys) else { return Ok(()) };
                let (i, j) = split_integral_rays(&div, sys.beta_head());
                let profile = monodromy_profile(&sys, &div, &i, &j);
                prop_assert!(profile.exponent_sum().is_zero());
            }

            #[test]
            fn rank_survives_weight_translation(w in arb_weights(), beta in arb_beta(), c in -3i64..=3) {
                let Some(sys) = try_segment(&w, beta) else { return Ok(()) };
                let Ok(rank) = solution_rank(&sys) else { return Ok(()) };
                let shifted: Vec<i64> = w.iter().map(|&x| x + c).collect();
                // translation preserves validity and the rank; I and J may move
                let sys2 = try_segment(&shifted, beta).expect("translation keeps validity");
                prop_assert_eq!(solution_rank(&sys2).unwrap(), rank);
            }

            #[test]
            fn rank_survives_weight_negation(w in arb_weights(), beta in arb_beta()) {
                let Some(sys) = try_segment(&w, beta) else { return Ok(()) };
                let Ok(rank) = solution_rank(&sys) else { return Ok(()) };
                let negated: Vec<i64> = w.iter().map(|&x| -x).collect();
                let sys2 = try_segment(&negated, beta).expect("negation keeps validity");
                let div = divisor_coefficients(&sys2).unwrap();
                // the rays swap roles
                let old_div = divisor_coefficients(&sys).unwrap();
                prop_assert_eq!(div.a_zero, old_div.a_inf);
                prop_assert_eq!(solution_rank(&sys2).unwrap(), rank);
            }
        }
    }
}
