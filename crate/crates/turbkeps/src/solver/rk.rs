//! Embedded explicit Runge-Kutta 5(4) pair with PI step-size control and
//! a fifth-order dense interpolant.  The first-same-as-last structure means
//! six right-hand-side evaluations per accepted step, and the derivative at
//! every accepted state comes for free.

use crate::error::SolverError;
use crate::scalar::Real;

/// Integrator tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_dt: T,
    /// First trial step; nonpositive selects an automatic choice.
    pub dt_init: T,
    pub t_end: T,
}

/// Work counters for a completed integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RkStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// An accepted step handed to the problem's observer, with dense output
/// over `[t0, t1]`.
pub struct AcceptedStep<'a, T> {
    pub t0: T,
    pub t1: T,
    pub dt: T,
    pub local_error: T,
    pub y1: &'a [T],
    /// Derivative at `(t1, y1)` (the reused final stage).
    pub y1_deriv: &'a [T],
    rcont: &'a [Vec<T>; 5],
}

impl<T: Real> AcceptedStep<'_, T> {
    /// Evaluates the quintic interpolant at `t` in `[t0, t1]`; the ends
    /// reproduce the step states exactly.
    pub fn eval_dense(&self, t: T, out: &mut [T]) {
        let theta = (t - self.t0) / self.dt;
        let omt = T::one() - theta;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + omt * (r3[i] + theta * (r4[i] + omt * r5[i])));
        }
    }
}

/// The ODE system plus its per-step observer.
pub trait OdeProblem<T: Real> {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: T, y: &[T], dydt: &mut [T]) -> Result<(), SolverError>;
    fn on_accepted(&mut self, step: &AcceptedStep<'_, T>) -> Result<(), SolverError>;
}

// Dormand-Prince coefficients: stage nodes, stage weights, fifth-order
// solution weights, embedded error weights and dense-output weights.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const MIN_SCALE: f64 = 0.2; // a step may shrink at most fivefold
const MAX_SCALE: f64 = 10.0; // and grow at most tenfold

/// Integrates from `t = 0` to `cfg.t_end`, invoking the observer after
/// every accepted step.  Aborts when the controller drives the step below
/// `1e-14 * t_end`.
pub fn integrate<T: Real, P: OdeProblem<T>>(
    problem: &mut P,
    cfg: &RkConfig<T>,
    y0: &[T],
) -> Result<RkStats, SolverError> {
    let dim = problem.dim();
    assert_eq!(y0.len(), dim, "initial state length");
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteState { t: 0.0 });
    }

    let mut y = y0.to_vec();
    let mut ynew = vec![T::zero(); dim];
    let mut ytmp = vec![T::zero(); dim];
    let mut stages: [Vec<T>; 7] = std::array::from_fn(|_| vec![T::zero(); dim]);
    let mut rcont: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); dim]);

    let mut stats = RkStats::default();
    let mut t = T::zero();
    let floor = T::of(1e-14) * cfg.t_end;

    problem.rhs(t, &y, &mut stages[0])?;
    stats.rhs_evals += 1;

    let mut h = if cfg.dt_init > T::zero() {
        cfg.dt_init.min(cfg.max_dt).min(cfg.t_end)
    } else {
        (cfg.t_end / T::of(100.0)).min(cfg.max_dt)
    };
    let mut facold = T::of(1e-4);
    let mut last_rejected = false;

    let a_rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];

    while t < cfg.t_end {
        let remaining = cfg.t_end - t;
        let hit_end = h >= remaining;
        if hit_end {
            h = remaining;
        }
        if h <= floor {
            return Err(SolverError::StepUnderflow {
                t: t.to_f64_lossy(),
                dt: h.to_f64_lossy(),
                floor: floor.to_f64_lossy(),
            });
        }

        for (s, row) in a_rows.iter().enumerate() {
            for i in 0..dim {
                let mut acc = T::zero();
                for (q, &aq) in row.iter().enumerate() {
                    if aq != 0.0 {
                        acc = acc + T::of(aq) * stages[q][i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            let (head, tail) = stages.split_at_mut(s + 1);
            let _ = head;
            problem.rhs(t + T::of(C[s + 1]) * h, &ytmp, &mut tail[0])?;
            stats.rhs_evals += 1;
        }

        for i in 0..dim {
            let mut acc = T::zero();
            for (q, &bq) in B.iter().enumerate() {
                if bq != 0.0 {
                    acc = acc + T::of(bq) * stages[q][i];
                }
            }
            ynew[i] = y[i] + h * acc;
        }
        let t1 = if hit_end { cfg.t_end } else { t + h };
        {
            let (head, tail) = stages.split_at_mut(6);
            let _ = head;
            problem.rhs(t1, &ynew, &mut tail[0])?;
            stats.rhs_evals += 1;
        }

        let mut errsum = T::zero();
        for i in 0..dim {
            let mut e = T::zero();
            for (q, &eq) in E.iter().enumerate() {
                if eq != 0.0 {
                    e = e + T::of(eq) * stages[q][i];
                }
            }
            e = e * h;
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            let r = e / scale;
            errsum = errsum + r * r;
        }
        let mut err = (errsum / T::of(dim as f64)).sqrt();
        if !err.is_finite() {
            err = T::of(1e10);
        }

        let fac11 = err.powf(T::of(EXPO1));
        if err <= T::one() {
            stats.accepted += 1;
            // the factor mixes this error with the previous accepted one,
            // so it must read facold before the update
            let fac = (fac11 / facold.powf(T::of(BETA)) / T::of(SAFETY))
                .max(T::of(1.0 / MAX_SCALE))
                .min(T::of(1.0 / MIN_SCALE));
            facold = err.max(T::of(1e-4));

            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * stages[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * stages[6][i] - bspl;
                let mut acc = T::zero();
                for (q, &dq) in D.iter().enumerate() {
                    if dq != 0.0 {
                        acc = acc + T::of(dq) * stages[q][i];
                    }
                }
                rcont[4][i] = h * acc;
            }

            problem.on_accepted(&AcceptedStep {
                t0: t,
                t1,
                dt: h,
                local_error: err,
                y1: &ynew,
                y1_deriv: &stages[6],
                rcont: &rcont,
            })?;

            t = t1;
            std::mem::swap(&mut y, &mut ynew);
            stages.swap(0, 6);

            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew.min(cfg.max_dt);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = h / (fac11 / T::of(SAFETY)).min(T::of(1.0 / MIN_SCALE));
        }
    }
    Ok(stats)
}
