//! Galerkin right-hand-side assembly.  Coefficient vectors are expanded to
//! nodal fields, the pointwise factors of every weak-form term are formed
//! once per node, and each mode's rate is a single quadrature pass.  All
//! loops run in a fixed order so reruns are bit-identical.

use crate::domain::Basis;
use crate::error::SolverError;
use crate::model::{smooth_cutoff, CoefficientLaw, ModelParameters};
use crate::scalar::Real;

use super::{Forcing, PositivityPolicy};

/// Dissipative pieces of the kinetic-energy balance at the most recent
/// evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct EnergyPieces<T> {
    /// `∫ nu_T(k) |grad u|^2`
    pub viscous: T,
    /// `∫ (c_Da + c_Fo |u|^(alpha-2)) |u|^2`
    pub drag: T,
}

struct Workspace<T> {
    ux: Vec<T>,
    uy: Vec<T>,
    grad_u: [Vec<T>; 4],
    k: Vec<T>,
    kx: Vec<T>,
    ky: Vec<T>,
    grad_sq: Vec<T>,
    visc: Vec<T>,
    // combined tensor weight of the convective and viscous terms
    a_xx: Vec<T>,
    a_xy: Vec<T>,
    a_yx: Vec<T>,
    a_yy: Vec<T>,
    drag_x: Vec<T>,
    drag_y: Vec<T>,
    // combined vector weight of the TKE transport and diffusion terms
    flux_x: Vec<T>,
    flux_y: Vec<T>,
    source: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(nodes: usize) -> Self {
        let z = || vec![T::zero(); nodes];
        Workspace {
            ux: z(),
            uy: z(),
            grad_u: [z(), z(), z(), z()],
            k: z(),
            kx: z(),
            ky: z(),
            grad_sq: z(),
            visc: z(),
            a_xx: z(),
            a_xy: z(),
            a_yx: z(),
            a_yy: z(),
            drag_x: z(),
            drag_y: z(),
            flux_x: z(),
            flux_y: z(),
            source: z(),
        }
    }
}

/// Right-hand-side evaluator for the coupled coefficient system.
///
/// The state vector is `[velocity coefficients, tke coefficients]`.  After
/// each evaluation the nodal fields of that state remain cached, which the
/// run loop uses to read off diagnostics at accepted states (the embedded
/// integrator's final stage is the accepted state).
pub struct Assembler<T> {
    pub basis: Basis<T>,
    pub params: ModelParameters<T>,
    pub level: u32,
    pub policy: PositivityPolicy,
    /// Forcing projected onto the velocity modes.
    pub forcing_coeffs: Vec<T>,
    visc_law: CoefficientLaw<T>,
    diff_law: CoefficientLaw<T>,
    prod_law: CoefficientLaw<T>,
    diss_law: CoefficientLaw<T>,
    ws: Workspace<T>,
    /// Number of evaluations that saw a negative nodal TKE value.
    pub positivity_events: u64,
    /// Most negative nodal TKE value seen over the whole run.
    pub min_k_seen: T,
    /// Minimum nodal TKE at the most recent evaluation.
    pub last_min_k: T,
    /// Largest mass removed by a single flooring pass (floor policy only).
    pub max_discarded_mass: T,
}

/// Projects a forcing description onto the velocity modes.
pub fn forcing_coefficients<T: Real>(
    basis: &Basis<T>,
    forcing: &Forcing<T>,
) -> Result<Vec<T>, SolverError> {
    let j = basis.velocity.len();
    match forcing {
        Forcing::Zero => Ok(vec![T::zero(); j]),
        Forcing::Constant([gx, gy]) => {
            let nodes = basis.grid.node_count();
            Ok(basis.project_velocity(&vec![*gx; nodes], &vec![*gy; nodes]))
        }
        Forcing::SingleMode { index, amplitude } => {
            if *index >= j {
                return Err(SolverError::Config(format!(
                    "forcing mode {index} outside the {j} velocity modes"
                )));
            }
            let mut f = vec![T::zero(); j];
            f[*index] = *amplitude;
            Ok(f)
        }
    }
}

impl<T: Real> Assembler<T> {
    pub fn new(
        basis: Basis<T>,
        params: ModelParameters<T>,
        level: u32,
        forcing: &Forcing<T>,
        policy: PositivityPolicy,
    ) -> Result<Self, SolverError> {
        let forcing_coeffs = forcing_coefficients(&basis, forcing)?;
        let nodes = basis.grid.node_count();
        Ok(Assembler {
            visc_law: params.viscosity(),
            diff_law: params.diffusion(),
            prod_law: params.production(),
            diss_law: params.dissipation(),
            basis,
            params,
            level,
            policy,
            forcing_coeffs,
            ws: Workspace::new(nodes),
            positivity_events: 0,
            min_k_seen: T::infinity(),
            last_min_k: T::infinity(),
            max_discarded_mass: T::zero(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.velocity.len() + self.basis.scalar.len()
    }

    /// Assembles `d/dt` of the full coefficient vector.
    pub fn rhs_into(&mut self, t: T, y: &[T], dydt: &mut [T]) -> Result<(), SolverError> {
        let j = self.basis.velocity.len();
        let (a, c) = y.split_at(j);
        self.expand_state(a, c);
        self.apply_positivity_policy();
        self.pointwise_factors();

        let (da, dc) = dydt.split_at_mut(j);
        self.velocity_rates(da);
        self.tke_rates(dc);
        for (f, r) in self.forcing_coeffs.iter().zip(da.iter_mut()) {
            *r = *r + *f;
        }

        if dydt.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteState {
                t: t.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn expand_state(&mut self, a: &[T], c: &[T]) {
        let ws = &mut self.ws;
        self.basis.eval_velocity(a, &mut ws.ux, &mut ws.uy);
        self.basis.eval_velocity_gradient(a, &mut ws.grad_u);
        self.basis.eval_scalar(c, &mut ws.k);
        self.basis.eval_scalar_gradient(c, &mut ws.kx, &mut ws.ky);
    }

    fn apply_positivity_policy(&mut self) {
        let mut min_k = T::infinity();
        for &k in &self.ws.k {
            if k < min_k {
                min_k = k;
            }
        }
        self.last_min_k = min_k;
        if min_k < self.min_k_seen {
            self.min_k_seen = min_k;
        }
        if min_k < T::zero() {
            self.positivity_events += 1;
            if self.policy == PositivityPolicy::Floor {
                let ws = &mut self.ws;
                let clipped = self.basis.grid.integrate_with(|q| {
                    if ws.k[q] < T::zero() {
                        -ws.k[q]
                    } else {
                        T::zero()
                    }
                });
                if clipped > self.max_discarded_mass {
                    self.max_discarded_mass = clipped;
                }
                for k in &mut self.ws.k {
                    if *k < T::zero() {
                        *k = T::zero();
                    }
                }
            }
        }
    }

    fn pointwise_factors(&mut self) {
        let p = &self.params;
        let two = T::of(2.0);
        let alpha_is_two = p.alpha == two;
        let beta_is_two = p.beta == two;
        let drag_exp = (p.alpha - two) / two;
        let half_beta = p.beta / two;
        let no_forch = p.c_fo == T::zero();

        let ws = &mut self.ws;
        for q in 0..ws.k.len() {
            let ux = ws.ux[q];
            let uy = ws.uy[q];
            let sq = ux * ux + uy * uy;

            let kq = ws.k[q];
            let visc = self.visc_law.value_truncated(self.level, kq);
            let diff = self.diff_law.value_truncated(self.level, kq);
            let prod = self.prod_law.value_truncated(self.level, kq);
            let eps = self.diss_law.value_floored(kq);
            ws.visc[q] = visc;

            let g0 = ws.grad_u[0][q];
            let g1 = ws.grad_u[1][q];
            let g2 = ws.grad_u[2][q];
            let g3 = ws.grad_u[3][q];
            let grad_sq = g0 * g0 + g1 * g1 + g2 * g2 + g3 * g3;
            ws.grad_sq[q] = grad_sq;

            // the cutoff plateau multiplies by exactly one, so bounded runs
            // are insensitive to the regularization level at the bit level
            let cut = smooth_cutoff(self.level, sq);
            let cxx = cut * ux * ux;
            let cxy = cut * ux * uy;
            let cyy = cut * uy * uy;
            ws.a_xx[q] = cxx - visc * g0;
            ws.a_xy[q] = cxy - visc * g1;
            ws.a_yx[q] = cxy - visc * g2;
            ws.a_yy[q] = cyy - visc * g3;

            let drag = if no_forch {
                p.c_da
            } else if alpha_is_two {
                p.c_da + p.c_fo
            } else {
                p.c_da + p.c_fo * sq.powf(drag_exp)
            };
            ws.drag_x[q] = drag * ux;
            ws.drag_y[q] = drag * uy;

            let speed_beta = if beta_is_two { sq } else { sq.powf(half_beta) };
            ws.source[q] = visc * grad_sq + prod * speed_beta - eps;
            ws.flux_x[q] = kq * ux - diff * ws.kx[q];
            ws.flux_y[q] = kq * uy - diff * ws.ky[q];
        }
    }

    fn velocity_rates(&self, da: &mut [T]) {
        let ws = &self.ws;
        for (i, mode) in self.basis.velocity.iter().enumerate() {
            da[i] = self.basis.grid.integrate_with(|q| {
                ws.a_xx[q] * mode.grad[0][q]
                    + ws.a_xy[q] * mode.grad[1][q]
                    + ws.a_yx[q] * mode.grad[2][q]
                    + ws.a_yy[q] * mode.grad[3][q]
                    - ws.drag_x[q] * mode.vx[q]
                    - ws.drag_y[q] * mode.vy[q]
            });
        }
    }

    fn tke_rates(&self, dc: &mut [T]) {
        let ws = &self.ws;
        for (i, mode) in self.basis.scalar.iter().enumerate() {
            dc[i] = self.basis.grid.integrate_with(|q| {
                ws.flux_x[q] * mode.gx[q] + ws.flux_y[q] * mode.gy[q] + ws.source[q] * mode.w[q]
            });
        }
    }

    /// Dissipation quadratures at the most recent evaluation point.
    pub fn energy_pieces(&self) -> EnergyPieces<T> {
        let ws = &self.ws;
        EnergyPieces {
            viscous: self
                .basis
                .grid
                .integrate_with(|q| ws.visc[q] * ws.grad_sq[q]),
            drag: self
                .basis
                .grid
                .integrate_with(|q| ws.drag_x[q] * ws.ux[q] + ws.drag_y[q] * ws.uy[q]),
        }
    }

    /// Defect of the semidiscrete kinetic-energy identity at the most
    /// recent evaluation point `(a, da)`: rate of change plus dissipation
    /// minus forcing work.  Up to roundoff this isolates the convective
    /// contribution, which vanishes on the dealiased torus.
    pub fn energy_residual(&self, a: &[T], da: &[T]) -> T {
        let rate: T = a.iter().zip(da).map(|(&x, &d)| x * d).sum();
        let work: T = self
            .forcing_coeffs
            .iter()
            .zip(a)
            .map(|(&f, &x)| f * x)
            .sum();
        let pieces = self.energy_pieces();
        rate + pieces.viscous + pieces.drag - work
    }

    /// Convective integrals alone, with or without the cutoff multiplier.
    /// Diagnostic used to check that the cutoff is the identity wherever
    /// the squared speed stays at or below the regularization level.
    pub fn convective_terms(&mut self, a: &[T], with_cutoff: bool) -> Vec<T> {
        let ws = &mut self.ws;
        self.basis.eval_velocity(a, &mut ws.ux, &mut ws.uy);
        let ws = &self.ws;
        self.basis
            .velocity
            .iter()
            .map(|mode| {
                self.basis.grid.integrate_with(|q| {
                    let ux = ws.ux[q];
                    let uy = ws.uy[q];
                    let cut = if with_cutoff {
                        smooth_cutoff(self.level, ux * ux + uy * uy)
                    } else {
                        T::one()
                    };
                    let cxx = cut * ux * ux;
                    let cxy = cut * ux * uy;
                    let cyy = cut * uy * uy;
                    cxx * mode.grad[0][q]
                        + cxy * (mode.grad[1][q] + mode.grad[2][q])
                        + cyy * mode.grad[3][q]
                })
            })
            .collect()
    }
}
