//! Simultaneous root finding for the block polynomials.
//!
//! Aberth-Ehrlich iteration with a deterministic starting ring. The caller
//! guarantees nonzero extreme coefficients, so every root is finite and
//! nonzero and the starting radius |c0/cL|^(1/L) is well defined.

use super::PeriodError;
use crate::{Cplx, Real};
use std::f64::consts::PI;

const MAX_SWEEPS: usize = 200;
const REL_RESIDUAL: Real = 1e-12;

/// Evaluates the polynomial and its derivative at `z` by a joint Horner pass.
fn eval_with_derivative(coeffs: &[Cplx], z: Cplx) -> (Cplx, Cplx) {
    let mut p = Cplx::new(0.0, 0.0);
    let mut dp = Cplx::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Magnitude of the coefficient sum at |z|, the natural scale for a relative
/// residual test.
fn residual_scale(coeffs: &[Cplx], z: Cplx) -> Real {
    let r = z.norm();
    let mut scale = 0.0;
    let mut pw = 1.0;
    for c in coeffs {
        scale += c.norm() * pw;
        pw *= r;
    }
    scale.max(Real::MIN_POSITIVE)
}

/// All complex roots of the polynomial with ascending coefficients `coeffs`.
///
/// Converges when every root has relative residual below 1e-12; a degree-zero
/// input has no roots. Fails with `RootFindingDiverged` after 200 sweeps.
pub(crate) fn polynomial_roots(coeffs: &[Cplx]) -> Result<Vec<Cplx>, PeriodError> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let radius = (coeffs[0].norm() / coeffs[deg].norm()).powf(1.0 / deg as Real);
    let mut z: Vec<Cplx> = (0..deg)
        .map(|i| {
            // offset angles so no starting point sits on a symmetry axis
            let angle = 2.0 * PI * (i as Real + 0.376) / deg as Real + 0.5;
            Cplx::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut settled = true;
        for i in 0..deg {
            let (p, dp) = eval_with_derivative(coeffs, z[i]);
            if p.norm() > REL_RESIDUAL * residual_scale(coeffs, z[i]) {
                settled = false;
            }
            let newton = if dp.norm() > 0.0 {
                p / dp
            } else {
                // flat spot: nudge off it instead of dividing by zero
                z[i] += Cplx::new(1e-6 * (1.0 + radius), 1e-6);
                continue;
            };
            let mut repulsion = Cplx::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    repulsion += (z[i] - z[j]).finv();
                }
            }
            let step = newton / (Cplx::new(1.0, 0.0) - newton * repulsion);
            if step.is_finite() {
                z[i] -= step;
            } else {
                z[i] -= newton;
            }
        }
        if settled {
            return Ok(z);
        }
    }
    Err(PeriodError::RootFindingDiverged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: Real, im: Real) -> Cplx {
        Cplx::new(re, im)
    }

    fn residual(coeffs: &[Cplx], z: Cplx) -> Real {
        eval_with_derivative(coeffs, z).0.norm() / residual_scale(coeffs, z)
    }

    #[test]
    fn quadratic_roots_match_the_closed_form() {
        // 3 + t + t^2 ... wrong way round: t^2 + 3t + 1 has roots (-3 +- sqrt(5))/2
        let coeffs = [cx(1.0, 0.0), cx(3.0, 0.0), cx(1.0, 0.0)];
        let mut roots = polynomial_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        let s5 = 5.0_f64.sqrt();
        assert!((roots[0] - cx((-3.0 + s5) / 2.0, 0.0)).norm() < 1e-9);
        assert!((roots[1] - cx((-3.0 - s5) / 2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn linear_root_is_the_ratio() {
        let coeffs = [cx(-1.0, 0.0), cx(1.0, 0.0)];
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(polynomial_roots(&[cx(7.0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn roots_of_unity_come_back_complete() {
        // t^8 - 1
        let mut coeffs = vec![cx(0.0, 0.0); 9];
        coeffs[0] = cx(-1.0, 0.0);
        coeffs[8] = cx(1.0, 0.0);
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 8);
        for r in &roots {
            assert!((r.norm() - 1.0).abs() < 1e-10);
        }
        // every eighth root of unity is hit by exactly one iterate
        for k in 0..8 {
            let target = Cplx::from_polar(1.0, 2.0 * PI * k as Real / 8.0);
            let hits = roots.iter().filter(|r| (**r - target).norm() < 1e-8).count();
            assert_eq!(hits, 1, "missing root {target}");
        }
    }

    #[test]
    fn random_coefficients_reach_the_residual_target() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let deg = rng.gen_range(1..=6);
            let coeffs: Vec<Cplx> = (0..=deg)
                .map(|i| {
                    let r = if i == 0 || i == deg {
                        rng.gen_range(0.5..2.0)
                    } else {
                        rng.gen_range(0.0..2.0)
                    };
                    Cplx::from_polar(r, rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            let roots = polynomial_roots(&coeffs).unwrap();
            assert_eq!(roots.len(), deg);
            for z in &roots {
                assert!(residual(&coeffs, *z) <= REL_RESIDUAL * 1.01);
            }
        }
    }

    #[test]
    fn clustered_high_degree_polynomial_converges() {
        // 1 + t^80 + 1.1 t^81 with a phase twist: eighty near-unit roots plus one stray
        let mut coeffs = vec![cx(0.0, 0.0); 82];
        coeffs[0] = cx(1.0, 0.3);
        coeffs[80] = cx(0.9, -0.2);
        coeffs[81] = cx(1.1, 0.15);
        let roots = polynomial_roots(&coeffs).unwrap();
        assert_eq!(roots.len(), 81);
        for z in &roots {
            assert!(residual(&coeffs, *z) <= REL_RESIDUAL * 1.01);
        }
    }
}
