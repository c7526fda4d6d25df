//! Exact calculus in the quotient module O[s, d/ds] / (s*d/ds - beta + 1):
//! the twisted derivation, the obstruction functional, preimage recursions,
//! and the induced-connection residue. All scalars are exact rationals
//! sampled at a point; Gamma functions only ever appear as rising-factorial
//! ratios.

use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::ExactScalar;
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CokernelError {
    #[error("twist must be non-integral")]
    IntegralBeta,
    #[error("g vanishes at the sample point")]
    GIsZero,
    #[error("element is not in the image (functional value {0})")]
    NotInImage(String),
    #[error("no gradient stored in the context")]
    MissingGradient,
}

/// Class c_0 + c_1 d + ... + c_p d^p + d_1 s + ... + d_q s^q, with d the
/// derivation symbol. Trailing zero coefficients are trimmed so equality is
/// canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientElement<E: ExactScalar = Int> {
    c: Vec<Ratio<E>>,
    d: Vec<Ratio<E>>,
}

fn trim<E: ExactScalar>(v: &mut Vec<Ratio<E>>) {
    while v.last().is_some_and(|x| x.is_zero()) {
        v.pop();
    }
}

impl<E: ExactScalar> QuotientElement<E> {
    pub fn new(mut c: Vec<Ratio<E>>, mut d: Vec<Ratio<E>>) -> Self {
        trim(&mut c);
        trim(&mut d);
        Self { c, d }
    }

    pub fn zero() -> Self {
        Self {
            c: Vec::new(),
            d: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self::new(vec![Ratio::one()], Vec::new())
    }

    /// Coefficients of the derivation powers d^0..d^p.
    pub fn derivation_part(&self) -> &[Ratio<E>] {
        &self.c
    }

    /// Coefficients of s^1..s^q.
    pub fn series_part(&self) -> &[Ratio<E>] {
        &self.d
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty() && self.d.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut c = vec![Ratio::zero(); self.c.len().max(other.c.len())];
        for (i, x) in self.c.iter().enumerate() {
            c[i] = c[i].clone() + x.clone();
        }
        for (i, x) in other.c.iter().enumerate() {
            c[i] = c[i].clone() + x.clone();
        }
        let mut d = vec![Ratio::zero(); self.d.len().max(other.d.len())];
        for (i, x) in self.d.iter().enumerate() {
            d[i] = d[i].clone() + x.clone();
        }
        for (i, x) in other.d.iter().enumerate() {
            d[i] = d[i].clone() + x.clone();
        }
        Self::new(c, d)
    }

    pub fn scale(&self, f: &Ratio<E>) -> Self {
        Self::new(
            self.c.iter().map(|x| x.clone() * f.clone()).collect(),
            self.d.iter().map(|x| x.clone() * f.clone()).collect(),
        )
    }
}

/// Point values entering the calculus: the twist, g, and optionally the
/// gradient of g. g may be zero for derivation application but not for the
/// functional or the preimage recursions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistContext<E: ExactScalar = Int> {
    beta: Ratio<E>,
    g: Ratio<E>,
    dg: Option<Vec<Ratio<E>>>,
}

impl<E: ExactScalar> TwistContext<E> {
    pub fn new(beta: Ratio<E>, g: Ratio<E>) -> Result<Self, CokernelError> {
        if beta.is_integer() {
            return Err(CokernelError::IntegralBeta);
        }
        Ok(Self { beta, g, dg: None })
    }

    pub fn with_gradient(mut self, dg: Vec<Ratio<E>>) -> Self {
        self.dg = Some(dg);
        self
    }

    pub fn beta(&self) -> &Ratio<E> {
        &self.beta
    }

    pub fn g(&self) -> &Ratio<E> {
        &self.g
    }

    fn nonzero_g(&self) -> Result<&Ratio<E>, CokernelError> {
        if self.g.is_zero() {
            Err(CokernelError::GIsZero)
        } else {
            Ok(&self.g)
        }
    }
}

/// u -> d*u + g*u, using d*s^j = (beta-1+j) s^(j-1) to reduce the mixed
/// terms (in particular d*s = beta).
pub fn apply_twisted_derivation<E: ExactScalar>(
    ctx: &TwistContext<E>,
    u: &QuotientElement<E>,
) -> QuotientElement<E> {
    let g = &ctx.g;
    let beta = &ctx.beta;
    let p = u.c.len();
    let q = u.d.len();
    let mut c = vec![Ratio::zero(); p + 1];
    for (i, x) in u.c.iter().enumerate() {
        // shift from the derivation, plus the multiplication by g
        c[i + 1] = c[i + 1].clone() + x.clone();
        c[i] = c[i].clone() + g.clone() * x.clone();
    }
    if q >= 1 {
        c[0] = c[0].clone() + beta.clone() * u.d[0].clone();
    }
    let mut d = vec![Ratio::zero(); q];
    for j in 0..q {
        d[j] = d[j].clone() + g.clone() * u.d[j].clone();
        if j + 1 < q {
            let factor = beta.clone() + Ratio::from_integer(E::from((j + 1) as i64));
            d[j] = d[j].clone() + factor * u.d[j + 1].clone();
        }
    }
    QuotientElement::new(c, d)
}

/// Rising-factorial ratio (beta+1)(beta+2)...(beta+k-1).
fn gamma_ratio<E: ExactScalar>(beta: &Ratio<E>, k: usize) -> Ratio<E> {
    let mut acc = Ratio::one();
    for i in 1..k {
        acc = acc * (beta.clone() + Ratio::from_integer(E::from(i as i64)));
    }
    acc
}

/// The obstruction functional, normalized so the class of 1 maps to 1:
/// sum_l (-g)^l c_l + beta * sum_k ratio_k(beta) (-g)^(-k) d_k.
pub fn functional_l<E: ExactScalar>(
    ctx: &TwistContext<E>,
    u: &QuotientElement<E>,
) -> Result<Ratio<E>, CokernelError> {
    let g = ctx.nonzero_g()?;
    let neg_g = -g.clone();
    let mut acc = Ratio::zero();
    let mut pow = Ratio::one();
    for x in &u.c {
        acc = acc + pow.clone() * x.clone();
        pow = pow * neg_g.clone();
    }
    let mut inv_pow = Ratio::one();
    for (idx, x) in u.d.iter().enumerate() {
        let k = idx + 1;
        inv_pow = inv_pow / neg_g.clone();
        acc = acc + ctx.beta.clone() * gamma_ratio(&ctx.beta, k) * inv_pow.clone() * x.clone();
    }
    Ok(acc)
}

/// Solve D(u) = r by the backward recursions
/// a_k = c_{k+1} - g c_{k+2} + g^2 c_{k+3} - ... and
/// b_j = sum_{t=j..q} (-1)^{t-j} (beta+j)...(beta+t-1) d_t g^{j-t-1};
/// requires the functional to vanish on r.
pub fn solve_preimage<E: ExactScalar>(
    ctx: &TwistContext<E>,
    r: &QuotientElement<E>,
) -> Result<QuotientElement<E>, CokernelError> {
    let g = ctx.nonzero_g()?.clone();
    let obstruction = functional_l(ctx, r)?;
    if !obstruction.is_zero() {
        return Err(CokernelError::NotInImage(obstruction.to_string()));
    }
    let p = r.c.len();
    let mut a = vec![Ratio::zero(); p.saturating_sub(1)];
    for k in 0..a.len() {
        let mut acc = Ratio::zero();
        let mut pow = Ratio::one();
        for t in k + 1..p {
            acc = acc + pow.clone() * r.c[t].clone();
            pow = pow * -g.clone();
        }
        a[k] = acc;
    }
    let q = r.d.len();
    let mut b = vec![Ratio::zero(); q];
    for j in 1..=q {
        let mut acc = Ratio::zero();
        for t in j..=q {
            let mut coeff = Ratio::one();
            for i in j..t {
                coeff = coeff * (ctx.beta.clone() + Ratio::from_integer(E::from(i as i64)));
            }
            if (t - j) % 2 == 1 {
                coeff = -coeff;
            }
            // g^(j-t-1) with j-t-1 <= -1
            let mut gpow = Ratio::one();
            for _ in 0..t + 1 - j {
                gpow = gpow / g.clone();
            }
            acc = acc + coeff * gpow * r.d[t - 1].clone();
        }
        b[j - 1] = acc;
    }
    Ok(QuotientElement::new(a, b))
}

/// Functional value of the class of the x_i-derivative of 1, namely
/// s * dg_i; equals -beta * dg_i / g.
pub fn connection_residue<E: ExactScalar>(
    ctx: &TwistContext<E>,
    i: usize,
) -> Result<Ratio<E>, CokernelError> {
    ctx.nonzero_g()?;
    let dg = ctx.dg.as_ref().ok_or(CokernelError::MissingGradient)?;
    let dgi = dg.get(i).ok_or(CokernelError::MissingGradient)?;
    functional_l(ctx, &QuotientElement::new(Vec::new(), vec![dgi.clone()]))
}
