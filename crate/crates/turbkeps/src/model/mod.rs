//! Continuous model data: parameters, coefficient laws and the auxiliary
//! scalar functions used by the regularized system and by the auditor.
//!
//! The four coefficient laws share one polynomial shape. Viscosity,
//! diffusion and production follow `scale * (1 + k)^exponent`; dissipation
//! follows `scale * k^(exponent + 1)`. The solver never evaluates a law at
//! negative turbulent energy: callers clamp first (see
//! [`CoefficientLaw::value_floored`]).

pub mod exponents;

use crate::error::ModelError;
use crate::scalar::Real;

/// Parameters of the coupled mean-flow / turbulent-energy system.
///
/// `alpha` is the drag growth exponent, `beta`/`gamma` shape the production
/// term, `eta`/`zeta` the viscosity and diffusion growth, and `theta` the
/// dissipation growth (`eps(k) = c_eps * k^(theta + 1)`). `c0` is the
/// uniform positive floor required of initial turbulent energy and
/// `t_final` the integration horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters<T> {
    pub d: u32,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub eta: T,
    pub zeta: T,
    pub theta: T,
    pub c_t: T,
    pub c_d: T,
    pub c_p: T,
    pub c_eps: T,
    pub c_da: T,
    pub c_fo: T,
    pub c0: T,
    pub t_final: T,
}

impl<T: Real> ModelParameters<T> {
    /// Validates ranges: `d` in `2..=4`, `alpha >= 2`, `beta > 0`,
    /// `gamma, eta, zeta, theta >= 0`, all scales positive, `c0 > 0`,
    /// `t_final > 0`. Drag scales may be zero (drag-free runs).
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(2..=4).contains(&self.d) {
            return Err(ModelError::InvalidDimension(self.d));
        }
        let two = T::of(2.0);
        let zero = T::zero();
        let checks: [(&'static str, T, T, &'static str); 13] = [
            ("alpha", self.alpha, two, ">= 2"),
            ("beta", self.beta, zero, "> 0"),
            ("gamma", self.gamma, zero, ">= 0"),
            ("eta", self.eta, zero, ">= 0"),
            ("zeta", self.zeta, zero, ">= 0"),
            ("theta", self.theta, zero, ">= 0"),
            ("c_t", self.c_t, zero, "> 0"),
            ("c_d", self.c_d, zero, "> 0"),
            ("c_p", self.c_p, zero, "> 0"),
            ("c_eps", self.c_eps, zero, "> 0"),
            ("c_da", self.c_da, zero, ">= 0"),
            ("c_fo", self.c_fo, zero, ">= 0"),
            ("c0", self.c0, zero, "> 0"),
        ];
        for (name, value, bound, requirement) in checks {
            if !value.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name,
                    requirement: "finite",
                    value: value.to_f64_lossy(),
                });
            }
            let ok = match requirement {
                ">= 2" | ">= 0" => value >= bound,
                "> 0" => value > bound,
                _ => unreachable!(),
            };
            if !ok {
                return Err(ModelError::InvalidParameter {
                    name,
                    requirement,
                    value: value.to_f64_lossy(),
                });
            }
        }
        if !(self.t_final.is_finite() && self.t_final > T::zero()) {
            return Err(ModelError::InvalidParameter {
                name: "t_final",
                requirement: "> 0",
                value: self.t_final.to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn viscosity(&self) -> CoefficientLaw<T> {
        CoefficientLaw {
            kind: CoefficientKind::TurbViscosity,
            scale: self.c_t,
            exponent: self.eta,
        }
    }

    pub fn diffusion(&self) -> CoefficientLaw<T> {
        CoefficientLaw {
            kind: CoefficientKind::TurbDiffusion,
            scale: self.c_d,
            exponent: self.zeta,
        }
    }

    pub fn production(&self) -> CoefficientLaw<T> {
        CoefficientLaw {
            kind: CoefficientKind::TurbProduction,
            scale: self.c_p,
            exponent: self.gamma,
        }
    }

    pub fn dissipation(&self) -> CoefficientLaw<T> {
        CoefficientLaw {
            kind: CoefficientKind::TurbDissipation,
            scale: self.c_eps,
            exponent: self.theta,
        }
    }
}

/// Which physical coefficient a law models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    TurbViscosity,
    TurbDiffusion,
    TurbProduction,
    TurbDissipation,
}

/// One polynomial coefficient law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientLaw<T> {
    pub kind: CoefficientKind,
    pub scale: T,
    pub exponent: T,
}

impl<T: Real> CoefficientLaw<T> {
    /// Evaluates the law at turbulent energy `k >= 0`.
    ///
    /// Viscosity, diffusion and production return `scale * (1 + k)^exponent`
    /// (so exactly `scale` at `k = 0`); dissipation returns
    /// `scale * k^(exponent + 1)` (so exactly `0` at `k = 0`).
    pub fn value(&self, k: T) -> Result<T, ModelError> {
        if !(k >= T::zero()) {
            return Err(ModelError::InvalidParameter {
                name: "k",
                requirement: ">= 0",
                value: k.to_f64_lossy(),
            });
        }
        Ok(self.value_floored(k))
    }

    /// Infallible evaluation used in assembly loops: clamps `k` at zero
    /// before applying the law.
    #[inline]
    pub fn value_floored(&self, k: T) -> T {
        let k = if k > T::zero() { k } else { T::zero() };
        match self.kind {
            CoefficientKind::TurbDissipation => {
                self.scale * k.powf(self.exponent + T::one())
            }
            _ => {
                if self.exponent == T::zero() {
                    // exponent 0 must be exact so inactive growth cannot
                    // perturb bit-reproducible sweeps
                    self.scale
                } else {
                    self.scale * (T::one() + k).powf(self.exponent)
                }
            }
        }
    }

    /// Evaluation with the growth argument truncated at height `level`.
    ///
    /// The three sandwich laws read the truncated energy, which bounds them
    /// by `scale * (1 + level)^exponent`; the dissipation law is always
    /// evaluated untruncated. Negative `k` is clamped at zero first.
    #[inline]
    pub fn value_truncated(&self, level: u32, k: T) -> T {
        match self.kind {
            CoefficientKind::TurbDissipation => self.value_floored(k),
            _ => {
                let k = if k > T::zero() { k } else { T::zero() };
                self.value_floored(truncate(level, k))
            }
        }
    }
}

/// Truncation at height `level`: the identity on `[-level, level]`,
/// saturating at `level * sign(k)` outside.
#[inline]
pub fn truncate<T: Real>(level: u32, k: T) -> T {
    let n = T::from_u32(level).expect("truncation level fits scalar");
    if k > n {
        n
    } else if k < -n {
        -n
    } else {
        k
    }
}

/// Smooth transition used by the convective cutoff: 1 on `(-inf, 1]`,
/// 0 on `[2, inf)`, strictly decreasing in between with value 1/2 at 3/2.
#[inline]
pub fn cutoff_profile<T: Real>(s: T) -> T {
    let one = T::one();
    let two = T::of(2.0);
    if s <= one {
        one
    } else if s >= two {
        T::zero()
    } else {
        let rise = bump_edge(two - s);
        let fall = bump_edge(s - one);
        rise / (rise + fall)
    }
}

// exp(-1/x) extended by zero; smooth at the origin from the right
#[inline]
fn bump_edge<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

/// Convective cutoff at regularization level `n`: `cutoff_profile(tau / n)`.
///
/// The plateau is exact: any `tau <= n` returns exactly 1, so runs whose
/// velocity magnitude never leaves the plateau are bit-identical across `n`.
#[inline]
pub fn smooth_cutoff<T: Real>(level: u32, tau: T) -> T {
    let n = T::from_u32(level).expect("cutoff level fits scalar");
    cutoff_profile(tau / n)
}

/// Primitive of the height-1 truncation: `k^2/2` on `[0, 1]`, `k - 1/2`
/// beyond, extended evenly to negative arguments.
///
/// Satisfies `max(k - 1/2, k^2/2 * [k<=1]) <= value <= |k|` for `k >= 0`.
#[inline]
pub fn truncation_primitive<T: Real>(k: T) -> T {
    let a = k.abs();
    if a <= T::one() {
        T::of(0.5) * a * a
    } else {
        a - T::of(0.5)
    }
}

/// Saturating weight of strength `delta > 0` evaluated at `k >= 0`:
/// value `1 - (1+k)^(-delta)`, slope `delta * (1+k)^(-delta-1)` and
/// primitive `k - ((1+k)^(1-delta) - 1) / (1-delta)` (log form at
/// `delta = 1`). The primitive is bounded by `k` in absolute value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturatingWeight<T> {
    pub value: T,
    pub slope: T,
    pub primitive: T,
}

pub fn saturating_weight<T: Real>(delta: T, k: T) -> SaturatingWeight<T> {
    debug_assert!(delta > T::zero() && k >= T::zero());
    let one = T::one();
    let base = one + k;
    let value = one - base.powf(-delta);
    let slope = delta * base.powf(-(delta + one));
    let primitive = if delta == one {
        k - base.ln()
    } else {
        k - (base.powf(one - delta) - one) / (one - delta)
    };
    SaturatingWeight {
        value,
        slope,
        primitive,
    }
}

/// Primitive of the gradient weight `(1+s)^((zeta-delta-1)/2)`:
/// `2 ((1+k)^((zeta-delta+1)/2) - 1) / (zeta-delta+1)`, with the log branch
/// `ln(1+k)` when `zeta - delta + 1 = 0`.
///
/// For positive `zeta - delta + 1` this is sandwiched between
/// `C ((1+k)^((zeta-delta+1)/2) - 1)` and `C (1+k)^((zeta-delta+1)/2)` with
/// the same constant `C = 2 / (zeta-delta+1)` on both sides.
pub fn gradient_weight_primitive<T: Real>(zeta: T, delta: T, k: T) -> T {
    debug_assert!(k >= T::zero());
    let one = T::one();
    let two = T::of(2.0);
    let p = zeta - delta + one;
    if p == T::zero() {
        (one + k).ln()
    } else {
        two * ((one + k).powf(p / two) - one) / p
    }
}

/// Integrand of [`gradient_weight_primitive`], exposed so audits can apply
/// the chain rule through an independent code path.
#[inline]
pub fn gradient_weight<T: Real>(zeta: T, delta: T, k: T) -> T {
    let one = T::one();
    (one + k).powf((zeta - delta - one) / T::of(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params_f64() -> ModelParameters<f64> {
        ModelParameters {
            d: 2,
            alpha: 2.0,
            beta: 1.0,
            gamma: 0.0,
            eta: 0.0,
            zeta: 0.0,
            theta: 0.0,
            c_t: 1.0,
            c_d: 1.0,
            c_p: 1.0,
            c_eps: 1.0,
            c_da: 0.0,
            c_fo: 0.0,
            c0: 0.5,
            t_final: 1.0,
        }
    }

    // adaptive Simpson oracle, local to the tests
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, 0.5 * tol, depth - 1)
                    + rec(f, m, b, right, 0.5 * tol, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn parameter_validation_catches_each_range() {
        assert!(params_f64().validate().is_ok());
        let mut p = params_f64();
        p.d = 5;
        assert!(matches!(p.validate(), Err(ModelError::InvalidDimension(5))));
        let mut p = params_f64();
        p.alpha = 1.5;
        assert!(p.validate().is_err());
        let mut p = params_f64();
        p.beta = 0.0;
        assert!(p.validate().is_err());
        let mut p = params_f64();
        p.c_eps = -1.0;
        assert!(p.validate().is_err());
        let mut p = params_f64();
        p.c0 = 0.0;
        assert!(p.validate().is_err());
        let mut p = params_f64();
        p.t_final = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn coefficient_values_match_closed_forms() {
        let visc = CoefficientLaw {
            kind: CoefficientKind::TurbViscosity,
            scale: 2.0,
            exponent: 1.5,
        };
        assert_relative_eq!(visc.value(3.0).unwrap(), 2.0 * 4.0f64.powf(1.5));
        assert_eq!(visc.value(0.0).unwrap(), 2.0);
        let diss = CoefficientLaw {
            kind: CoefficientKind::TurbDissipation,
            scale: 0.7,
            exponent: 1.0,
        };
        assert_relative_eq!(diss.value(2.0).unwrap(), 0.7 * 4.0);
        assert_eq!(diss.value(0.0).unwrap(), 0.0);
        assert!(visc.value(-0.1).is_err());
    }

    #[test]
    fn truncated_evaluation_is_inactive_below_level_and_bounded_above() {
        let visc = CoefficientLaw {
            kind: CoefficientKind::TurbViscosity,
            scale: 1.3,
            exponent: 2.0,
        };
        // inactive truncation must be bit-exact
        for &k in &[0.0, 0.5, 3.999, 4.0] {
            assert_eq!(visc.value_truncated(4, k), visc.value(k).unwrap());
        }
        let cap = 1.3 * 5.0f64.powi(2);
        for &k in &[4.0001, 10.0, 1e12] {
            assert_eq!(visc.value_truncated(4, k), cap);
        }
        // dissipation ignores the truncation level
        let diss = CoefficientLaw {
            kind: CoefficientKind::TurbDissipation,
            scale: 1.0,
            exponent: 0.5,
        };
        assert_relative_eq!(diss.value_truncated(4, 100.0), 100.0f64.powf(1.5));
    }

    #[test]
    fn cutoff_profile_edges_and_midpoint() {
        assert_eq!(cutoff_profile(0.0), 1.0);
        assert_eq!(cutoff_profile(1.0), 1.0);
        assert_eq!(cutoff_profile(2.0), 0.0);
        assert_eq!(cutoff_profile(3.0), 0.0);
        // the ramp is antisymmetric about 3/2, so the midpoint is exact
        assert_eq!(cutoff_profile(1.5), 0.5);
        assert_eq!(smooth_cutoff(4, 6.0), 0.5);
    }

    #[test]
    fn cutoff_profile_is_monotone_and_c1_on_a_dense_scan() {
        let m = 20_000;
        let mut prev = 1.0f64;
        let mut prev_slope: Option<f64> = None;
        let h = 3.0 / m as f64;
        for i in 1..=m {
            let s = i as f64 * h;
            let v: f64 = cutoff_profile(s);
            assert!(v <= prev + 1e-15, "not monotone at s={s}");
            // difference quotients stay uniformly continuous across the seams
            let slope = (v - prev) / h;
            if let Some(ps) = prev_slope {
                assert!((slope - ps).abs() < 60.0 * h.sqrt() + 1e-3);
            }
            prev = v;
            prev_slope = Some(slope);
        }
    }

    #[test]
    fn truncation_primitive_matches_quadrature_oracle() {
        for &k in &[0.0, 0.3, 1.0, 1.7, 6.0] {
            let oracle = adaptive_simpson(&|s| truncate(1, s), 0.0, k, 1e-13);
            assert_relative_eq!(truncation_primitive(k), oracle, max_relative = 1e-10, epsilon = 1e-12);
        }
        assert_eq!(truncation_primitive(-2.0), truncation_primitive(2.0));
    }

    #[test]
    fn saturating_weight_log_branch_and_primitive() {
        let w = saturating_weight(1.0, 3.0);
        assert_relative_eq!(w.primitive, 3.0 - 4.0f64.ln());
        let oracle = adaptive_simpson(&|s| saturating_weight(1.0, s).value, 0.0, 3.0, 1e-13);
        assert_relative_eq!(w.primitive, oracle, max_relative = 1e-10);
    }

    #[test]
    fn gradient_weight_primitive_examples() {
        // zeta = 0, delta -> 0, k = 3: 2 (sqrt(4) - 1) = 2
        assert_relative_eq!(gradient_weight_primitive(0.0, 0.0, 3.0), 2.0);
        assert_relative_eq!(gradient_weight_primitive(0.0, 1.0, 3.0), 4.0f64.ln());
    }

    proptest! {
        #[test]
        fn truncate_properties(level in 1u32..64, k in -1e6f64..1e6, k2 in -1e6f64..1e6) {
            let n = level as f64;
            let t = truncate(level, k);
            prop_assert!(t.abs() <= n);
            if k.abs() <= n {
                prop_assert_eq!(t, k);
            }
            // odd, idempotent, 1-Lipschitz
            prop_assert_eq!(truncate(level, -k), -t);
            prop_assert_eq!(truncate(level, t), t);
            prop_assert!((t - truncate(level, k2)).abs() <= (k - k2).abs() + 1e-12);
        }

        #[test]
        fn cutoff_plateau_is_exact(level in 1u32..64, frac in 0.0f64..=1.0) {
            let tau = frac * level as f64;
            prop_assert_eq!(smooth_cutoff(level, tau), 1.0);
            prop_assert_eq!(smooth_cutoff(level, 2.0 * level as f64 + tau), 0.0);
        }

        #[test]
        fn truncation_primitive_sandwich(k in 0.0f64..1e6) {
            let h = truncation_primitive(k);
            prop_assert!(h <= k + 1e-12);
            prop_assert!(h >= k - 0.5 - 1e-12);
            prop_assert!(h >= 0.0);
        }

        #[test]
        fn saturating_weight_bounds(delta in 0.01f64..0.99, k in 0.0f64..1e5) {
            let w = saturating_weight(delta, k);
            prop_assert!((0.0..1.0).contains(&w.value));
            prop_assert!(w.slope > 0.0);
            prop_assert!(w.primitive.abs() <= k + 1e-12);
            prop_assert!(w.primitive >= 0.0);
        }

        #[test]
        fn saturating_weight_primitive_vs_quadrature(delta in 0.05f64..0.95, k in 0.0f64..50.0) {
            let oracle = adaptive_simpson(&|s| saturating_weight(delta, s).value, 0.0, k, 1e-13);
            prop_assert!((saturating_weight(delta, k).primitive - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()));
        }

        #[test]
        fn gradient_weight_primitive_vs_quadrature_and_sandwich(
            zeta in 0.0f64..3.0,
            delta in 0.01f64..0.99,
            k in 0.0f64..50.0,
        ) {
            let lam = gradient_weight_primitive(zeta, delta, k);
            let oracle = adaptive_simpson(&|s| gradient_weight(zeta, delta, s), 0.0, k, 1e-13);
            prop_assert!((lam - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()));
            let p = zeta - delta + 1.0;
            if p > 0.0 {
                let c = 2.0 / p;
                let grown = (1.0 + k).powf(p / 2.0);
                prop_assert!(lam >= c * (grown - 1.0) - 1e-12);
                prop_assert!(lam <= c * grown + 1e-12);
            }
        }
    }
}
