//! Exponent algebra for the admissibility conditions and the integrability
//! exponents that the estimate auditor targets.
//!
//! All formulas are closed under field operations, so the calculator is
//! generic over an [`ExponentScalar`]. Instantiated with
//! [`num_rational::BigRational`] every derived value is exact; instantiated
//! with `f64` strict inequalities are decided with a 1e-12 margin.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed};

/// Arithmetic required by the exponent formulas.
pub trait ExponentScalar:
    Num + Signed + Clone + PartialOrd + std::fmt::Debug + std::fmt::Display
{
    fn from_int(v: i64) -> Self;

    /// Decides a strict inequality `self > 0`; the floating-point
    /// instantiation demands clearance 1e-12.
    fn strictly_positive(&self) -> bool;
}

impl ExponentScalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn strictly_positive(&self) -> bool {
        *self > 1e-12
    }
}

impl ExponentScalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn strictly_positive(&self) -> bool {
        self > &BigRational::from_integer(BigInt::from(0))
    }
}

/// Growth and drag exponents feeding the calculator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentInputs<S> {
    pub d: u32,
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub eta: S,
    pub zeta: S,
    pub theta: S,
}

/// Integrability exponents derived from the parameter set.
///
/// `r_u` and `rho_k` are the natural velocity and TKE integrabilities of
/// the energy estimates; `r_k` caps the admissible viscosity growth. The
/// `sigma*` family governs the velocity time derivative, the `rho*` family
/// the TKE time derivative. `rho0` takes the minimum over `rho1..rho4`;
/// `rho0_omitting_rho1` drops the `rho1 = d/(d-1)` entry, and both are
/// reported because the two published displays of this minimum disagree.
/// `q_gradient` is the TKE gradient integrability; `q_gradient_attained`
/// tells whether that exponent is reached or only approached from below.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedExponents<S> {
    pub r_u: S,
    pub rho_k: S,
    pub r_k: S,
    pub sigma0: S,
    pub sigma1: S,
    pub sigma2: S,
    pub sigma3: S,
    pub sigma4: S,
    pub sigma5: S,
    pub rho0: S,
    pub rho0_omitting_rho1: S,
    pub rho1: S,
    pub rho2: S,
    pub rho3: S,
    pub rho4: S,
    pub rho5: S,
    pub q_gradient: S,
    pub q_gradient_attained: bool,
    /// True when the drag exponent dominates the convective integrability
    /// (`r_u = alpha` branch).
    pub drag_dominated: bool,
}

fn max_s<S: ExponentScalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

fn min_s<S: ExponentScalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Computes every derived exponent for a validated parameter set.
pub fn derive_exponents<S: ExponentScalar>(inputs: &ExponentInputs<S>) -> DerivedExponents<S> {
    let d = S::from_int(inputs.d as i64);
    let one = S::one();
    let two = S::from_int(2);
    let alpha = inputs.alpha.clone();
    let beta = inputs.beta.clone();
    let gamma = inputs.gamma.clone();
    let eta = inputs.eta.clone();
    let zeta = inputs.zeta.clone();
    let theta = inputs.theta.clone();

    // 2(d+2)/d, the convective integrability floor
    let conv = two.clone() * (d.clone() + two.clone()) / d.clone();
    let drag_dominated = alpha > conv;
    let r_u = max_s(conv.clone(), alpha.clone());
    let rho_k = max_s(conv.clone(), theta.clone() + two.clone());
    let r_k = zeta.clone() + one.clone() + two.clone() / d.clone();

    // dz2 = d*zeta + d + 2 shows up in most denominators
    let dz2 = d.clone() * zeta.clone() + d.clone() + two.clone();

    let sigma1 = max_s(
        two.clone() * (theta.clone() + one.clone())
            / (theta.clone() + one.clone() + eta.clone()),
        two.clone() * dz2.clone() / (dz2.clone() + d.clone() * eta.clone()),
    );
    let sigma2 = if drag_dominated {
        alpha.clone() / two.clone()
    } else {
        one.clone() + two.clone() / d.clone()
    };
    let sigma3 = r_u.clone();
    let sigma4 = r_u.clone() / (alpha.clone() - one.clone());
    let sigma5 = two.clone();
    let sigma0 = min_s(
        min_s(
            two.clone() * dz2.clone() / (dz2.clone() + d.clone() * eta.clone()),
            sigma2.clone(),
        ),
        sigma4.clone(),
    );

    let rho1 = d.clone() / (d.clone() - one.clone());
    let rho2 = dz2.clone() / (dz2.clone() - one.clone());
    let rho3 = if drag_dominated {
        alpha.clone() * dz2.clone() / (dz2.clone() + d.clone() * alpha.clone())
    } else {
        two.clone() * dz2.clone() * (d.clone() + two.clone())
            / (d.clone() * (dz2.clone() + two.clone() * d.clone() + S::from_int(4)))
    };
    let rho4 = if drag_dominated {
        dz2.clone() * alpha.clone()
            / (beta.clone() * dz2.clone() + gamma.clone() * d.clone() * alpha.clone())
    } else {
        two.clone() * dz2.clone() * (d.clone() + two.clone())
            / (d.clone() * beta.clone() * dz2.clone()
                + two.clone() * gamma.clone() * d.clone() * (d.clone() + two.clone()))
    };
    let rho5 = dz2.clone() / (d.clone() * (theta.clone() + one.clone()));
    let rho0 = min_s(
        min_s(rho1.clone(), rho2.clone()),
        min_s(rho3.clone(), rho4.clone()),
    );
    let rho0_omitting_rho1 = min_s(rho2.clone(), min_s(rho3.clone(), rho4.clone()));

    let (q_gradient, q_gradient_attained) = if zeta > one {
        (two.clone(), true)
    } else {
        (
            one.clone()
                + (d.clone() * zeta.clone() + one.clone()) / (d.clone() + one.clone()),
            false,
        )
    };

    DerivedExponents {
        r_u,
        rho_k,
        r_k,
        sigma0,
        sigma1,
        sigma2,
        sigma3,
        sigma4,
        sigma5,
        rho0,
        rho0_omitting_rho1,
        rho1,
        rho2,
        rho3,
        rho4,
        rho5,
        q_gradient,
        q_gradient_attained,
        drag_dominated,
    }
}

/// Outcome of the three admissibility conditions, with slacks.
///
/// Cond1: viscosity growth `eta < zeta + 1 + 2/d`.
/// Cond2: dissipation growth `theta < zeta + 2/d`.
/// Cond3: production balance `gamma/(theta+1) + beta/r_u < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport<S> {
    pub admissible: bool,
    pub cond1_ok: bool,
    pub cond2_ok: bool,
    pub cond3_ok: bool,
    /// `r_k - eta`
    pub slack1: S,
    /// `zeta + 2/d - theta`
    pub slack2: S,
    /// `1 - gamma/(theta+1) - beta/r_u`
    pub slack3: S,
    /// One line per violated condition, naming both sides.
    pub violations: Vec<String>,
}

/// Evaluates the admissibility conditions for a parameter set.
pub fn check_admissibility<S: ExponentScalar>(
    inputs: &ExponentInputs<S>,
) -> AdmissibilityReport<S> {
    let d = S::from_int(inputs.d as i64);
    let one = S::one();
    let two = S::from_int(2);
    let ex = derive_exponents(inputs);

    let slack1 = ex.r_k.clone() - inputs.eta.clone();
    let slack2 = inputs.zeta.clone() + two.clone() / d.clone() - inputs.theta.clone();
    let slack3 = one.clone()
        - inputs.gamma.clone() / (inputs.theta.clone() + one.clone())
        - inputs.beta.clone() / ex.r_u.clone();

    let cond1_ok = slack1.strictly_positive();
    let cond2_ok = slack2.strictly_positive();
    let cond3_ok = slack3.strictly_positive();

    let mut violations = Vec::new();
    if !cond1_ok {
        violations.push(format!(
            "Cond1 violated: eta = {} must be < zeta + 1 + 2/d = {}",
            inputs.eta, ex.r_k
        ));
    }
    if !cond2_ok {
        violations.push(format!(
            "Cond2 violated: theta = {} must be < zeta + 2/d = {}",
            inputs.theta,
            inputs.zeta.clone() + two / d
        ));
    }
    if !cond3_ok {
        violations.push(format!(
            "Cond3 violated: gamma/(theta+1) + beta/r_u = {} must be < 1",
            inputs.gamma.clone() / (inputs.theta.clone() + one) + inputs.beta.clone() / ex.r_u
        ));
    }

    AdmissibilityReport {
        admissible: cond1_ok && cond2_ok && cond3_ok,
        cond1_ok,
        cond2_ok,
        cond3_ok,
        slack1,
        slack2,
        slack3,
        violations,
    }
}

/// Exact rational reconstructed from the shortest decimal form of `x`.
///
/// Returns `None` for non-finite input. The result reproduces the printed
/// decimal exactly and round-trips to the same `f64`, which is the contract
/// configuration files rely on (`0.3` means 3/10, not the nearest binary).
pub fn rational_from_decimal(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x}"))
}

/// Parses `a/b`, integer, decimal or scientific notation into an exact
/// rational. Accepts the formats the CLI exposes for exponent flags.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp10) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (text, 0),
    };
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches(['-', '+']);
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let mut numer: BigInt = if joined.is_empty() {
        return None;
    } else {
        joined.parse().ok()?
    };
    if negative {
        numer = -numer;
    }
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(numer * ten.pow(shift as u32))
    } else {
        BigRational::new(numer, ten.pow((-shift) as u32))
    })
}
