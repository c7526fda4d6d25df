//! Cross-module properties: the combinatorial identities that tie the
//! volume, curve, and operator layers together on randomized systems.

use gkz::curve::{divisor_coefficients, split_integral_rays, toric_curve_report, Ray};
use gkz::system::{assemble_system, box_operators, default_degree_bound, GkzSystem};
use gkz::volume::normalized_volume;
use gkz::{Int, Rat};
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

type Blocks = Vec<Vec<i64>>;
type Betas = Vec<(i64, i64)>;

fn arb_problem() -> impl Strategy<Value = (Blocks, Betas)> {
    (1usize..=2).prop_flat_map(|r| {
        (
            prop::collection::vec(prop::collection::vec(-4i64..=4, 2..=4), r..=r),
            prop::collection::vec((-5i64..=5, 2i64..=4), r..=r),
        )
    })
}

fn try_build(blocks: &Blocks, betas: &Betas) -> Option<GkzSystem<Int>> {
    let wb = blocks
        .iter()
        .map(|b| b.iter().map(|&w| vec![Int::from(w)]).collect())
        .collect();
    let bh = betas
        .iter()
        .map(|&(p, q)| Rat::new(Int::from(p), Int::from(q)))
        .collect();
    assemble_system(blocks.len(), 1, wb, bh).ok()
}

fn volume_of(sys: &GkzSystem<Int>) -> usize {
    normalized_volume(&sys.point_configuration())
        .unwrap()
        .to_usize()
        .unwrap()
}

proptest! {
    #[test]
    fn predicted_rank_equals_normalized_volume((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        prop_assume!(divisor_coefficients(&sys).is_ok());
        let report = toric_curve_report(&sys).unwrap();
        prop_assert_eq!(report.rank, volume_of(&sys));
    }

    #[test]
    fn volume_equals_the_total_block_length((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let div = divisor_coefficients(&sys);
        prop_assume!(div.is_ok());
        let total: Int = div.unwrap().lengths.iter().cloned().sum();
        prop_assert_eq!(Int::from(volume_of(&sys) as i64), total);
    }

    #[test]
    fn divisor_coefficients_split_each_length((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let div = divisor_coefficients(&sys);
        prop_assume!(div.is_ok());
        let div = div.unwrap();
        for k in 0..sys.r() {
            prop_assert_eq!(
                div.a_zero[k].clone() + div.a_inf[k].clone(),
                div.lengths[k].clone()
            );
        }
        let (i_set, j_set) = split_integral_rays(&div, sys.beta_head());
        let mut all: Vec<Ray> = i_set.iter().chain(j_set.iter()).copied().collect();
        all.sort();
        prop_assert_eq!(all, vec![Ray::Rho0, Ray::RhoInf]);
    }

    #[test]
    fn dimension_table_is_exact((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let report = toric_curve_report(&sys);
        prop_assume!(report.is_ok());
        let report = report.unwrap();
        let t = report.les.as_tuple();
        let alternating =
            t.0 as i64 - t.1 as i64 + t.2 as i64 - t.3 as i64 + t.4 as i64 - t.5 as i64;
        prop_assert_eq!(alternating, 0);
        prop_assert_eq!(report.rank, t.2);
        prop_assert!(report.profile.exponent_sum().is_zero());
    }

    #[test]
    fn volume_and_rank_ignore_weight_translation(
        (blocks, betas) in arb_problem(),
        shift in -3i64..=3,
    ) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        prop_assume!(divisor_coefficients(&sys).is_ok());

        let mut shifted = blocks.clone();
        for w in &mut shifted[0] {
            *w += shift;
        }
        let moved = try_build(&shifted, &betas);
        prop_assume!(moved.is_some());
        let moved = moved.unwrap();
        prop_assert_eq!(volume_of(&sys), volume_of(&moved));
        prop_assert_eq!(
            toric_curve_report(&sys).unwrap().rank,
            toric_curve_report(&moved).unwrap().rank
        );
    }

    #[test]
    fn weight_negation_swaps_the_two_rays((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let div = divisor_coefficients(&sys);
        prop_assume!(div.is_ok());
        let div = div.unwrap();

        let negated: Blocks = blocks
            .iter()
            .map(|b| b.iter().map(|&w| -w).collect())
            .collect();
        let flipped = try_build(&negated, &betas).unwrap();
        let flipped_div = divisor_coefficients(&flipped).unwrap();
        prop_assert_eq!(&div.a_zero, &flipped_div.a_inf);
        prop_assert_eq!(&div.a_inf, &flipped_div.a_zero);
        prop_assert_eq!(volume_of(&sys), volume_of(&flipped));

        let swap = |rays: &[Ray]| {
            let mut out: Vec<Ray> = rays
                .iter()
                .map(|r| match r {
                    Ray::Rho0 => Ray::RhoInf,
                    Ray::RhoInf => Ray::Rho0,
                })
                .collect();
            out.sort();
            out
        };
        let (i_set, _) = split_integral_rays(&div, sys.beta_head());
        let (flipped_i, _) = split_integral_rays(&flipped_div, flipped.beta_head());
        let mut flipped_i = flipped_i;
        flipped_i.sort();
        prop_assert_eq!(swap(&i_set), flipped_i);
    }

    #[test]
    fn box_relations_balance_the_matrix((blocks, betas) in arb_problem()) {
        let sys = try_build(&blocks, &betas);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let bound = default_degree_bound(&sys).min(6);
        for op in box_operators(&sys, bound) {
            prop_assert_eq!(
                sys.matrix().mul_vec(&op.nu_plus),
                sys.matrix().mul_vec(&op.nu_minus)
            );
        }
    }
}
