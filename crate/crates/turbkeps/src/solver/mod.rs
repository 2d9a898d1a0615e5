//! Time integration of the Galerkin coefficient system: configuration,
//! initial-data preparation, the adaptive run loop and the sampled
//! trajectory it produces.

pub mod assembly;
pub mod rk;

pub use assembly::{forcing_coefficients, Assembler, EnergyPieces};
pub use rk::{RkConfig, RkStats};

use crate::domain::{mollify::mollify_field, Basis, DomainSpec};
use crate::error::{SetupError, SolverError};
use crate::model::exponents::{check_admissibility, AdmissibilityReport, ExponentInputs};
use crate::model::ModelParameters;
use crate::scalar::Real;

/// Number of equispaced trajectory samples kept for the auditor's
/// composite-Simpson time integrals (a power-of-two interval count).
pub const AUDIT_SAMPLES: usize = 513;

/// Body force, constant in time.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing<T> {
    Zero,
    Constant([T; 2]),
    SingleMode { index: usize, amplitude: T },
}

/// What to do when nodal turbulent energy turns negative during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityPolicy {
    /// Record the excursion; coefficient laws clamp internally.
    Monitor,
    /// Additionally zero the negative nodal values before use and record
    /// the removed mass.
    Floor,
}

/// Initial mean-flow data.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityInit<T> {
    Zero,
    /// Direct mode coefficients, zero-padded to the basis size.
    Coefficients(Vec<T>),
    /// Nodal field, projected onto the velocity modes.
    Nodal { x: Vec<T>, y: Vec<T> },
}

/// Initial turbulent-energy data.  Nodal data is smoothed at the
/// regularization level before projection; a constant is its own
/// smoothing, so it skips the convolution and stays exact.
#[derive(Debug, Clone, PartialEq)]
pub enum TkeInit<T> {
    Constant(T),
    Coefficients(Vec<T>),
    Nodal(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData<T> {
    pub velocity: VelocityInit<T>,
    pub tke: TkeInit<T>,
}

/// Integrator tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_dt: T,
    /// Nonpositive selects an automatic first step.
    pub dt_init: T,
}

/// Complete description of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub params: ModelParameters<T>,
    pub spec: DomainSpec<T>,
    /// Regularization level: truncation height, cutoff level and inverse
    /// mollification radius.
    pub level: u32,
    pub n_velocity: usize,
    pub n_scalar: usize,
    pub forcing: Forcing<T>,
    pub integrator: IntegratorConfig<T>,
    pub initial: InitialData<T>,
    /// Extra output times (strictly increasing, within `[0, t_final]`).
    pub sample_times: Vec<T>,
    pub positivity: PositivityPolicy,
    /// Run even when the growth-exponent conditions fail.
    pub override_admissibility: bool,
}

impl<T: Real> RunConfig<T> {
    /// Checks parameter ranges, grid limits, integrator settings and
    /// sample-time ordering.  Admissibility is checked separately.
    pub fn validate(&self) -> Result<(), SolverError> {
        self.params.validate()?;
        self.spec.validate()?;
        if self.level < 1 {
            return Err(SolverError::Config("regularization level must be >= 1".into()));
        }
        if self.n_velocity < 1 || self.n_scalar < 1 {
            return Err(SolverError::Config(
                "need at least one velocity and one scalar mode".into(),
            ));
        }
        let ig = &self.integrator;
        for (name, v, strictly) in [
            ("rel_tol", ig.rel_tol, true),
            ("abs_tol", ig.abs_tol, true),
            ("max_dt", ig.max_dt, true),
            ("dt_init", ig.dt_init, false),
        ] {
            if !v.is_finite() || (strictly && v <= T::zero()) {
                return Err(SolverError::Config(format!(
                    "integrator.{name} must be positive and finite, got {}",
                    v.to_f64_lossy()
                )));
            }
        }
        let mut prev: Option<T> = None;
        for &t in &self.sample_times {
            if !(t.is_finite() && t >= T::zero() && t <= self.params.t_final) {
                return Err(SolverError::Config(format!(
                    "sample time {} outside [0, {}]",
                    t.to_f64_lossy(),
                    self.params.t_final.to_f64_lossy()
                )));
            }
            if let Some(p) = prev {
                if t <= p {
                    return Err(SolverError::Config(
                        "sample times must increase strictly".into(),
                    ));
                }
            }
            prev = Some(t);
        }
        Ok(())
    }

    /// Growth-exponent admissibility of the parameter set.
    pub fn admissibility(&self) -> AdmissibilityReport<f64> {
        check_admissibility(&ExponentInputs {
            d: self.params.d,
            alpha: self.params.alpha.to_f64_lossy(),
            beta: self.params.beta.to_f64_lossy(),
            gamma: self.params.gamma.to_f64_lossy(),
            eta: self.params.eta.to_f64_lossy(),
            zeta: self.params.zeta.to_f64_lossy(),
            theta: self.params.theta.to_f64_lossy(),
        })
    }
}

/// Coefficient snapshot at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub velocity: Vec<T>,
    pub tke: Vec<T>,
}

/// Per-accepted-step health record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics<T> {
    pub t: T,
    pub dt: T,
    pub local_error: T,
    pub min_k: T,
    pub energy_residual: T,
}

/// Output of one run: user samples, the dense audit grid, per-step
/// diagnostics and positivity accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    /// `AUDIT_SAMPLES` equispaced snapshots over `[0, t_final]`.
    pub audit: Vec<Sample<T>>,
    pub diagnostics: Vec<StepDiagnostics<T>>,
    pub stats: RkStats,
    pub positivity_events: u64,
    pub min_k_seen: T,
    pub max_discarded_mass: T,
    /// Smoothing radius fell below the grid spacing when preparing the
    /// initial turbulent energy.
    pub mollifier_under_resolved: bool,
    /// Initial turbulent energy dipped below the configured floor `c0`.
    /// Recorded rather than rejected: the auditor reports it.
    pub initial_below_floor: bool,
}

/// A run's trajectory plus the basis that produced it.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub trajectory: Trajectory<T>,
    pub basis: Basis<T>,
    pub admissibility: AdmissibilityReport<f64>,
}

/// The audit sample grid for a horizon.
pub fn audit_times<T: Real>(t_final: T) -> Vec<T> {
    let m = T::of((AUDIT_SAMPLES - 1) as f64);
    (0..AUDIT_SAMPLES)
        .map(|i| t_final * (T::of(i as f64) / m))
        .collect()
}

struct Runner<T: Real> {
    asm: Assembler<T>,
    n_velocity: usize,
    pending_user: Vec<T>,
    user_idx: usize,
    pending_audit: Vec<T>,
    audit_idx: usize,
    samples: Vec<Sample<T>>,
    audit: Vec<Sample<T>>,
    diagnostics: Vec<StepDiagnostics<T>>,
    scratch: Vec<T>,
    final_state: Vec<T>,
}

impl<T: Real> Runner<T> {
    fn push_sample(list: &mut Vec<Sample<T>>, n_velocity: usize, t: T, y: &[T]) {
        let (a, c) = y.split_at(n_velocity);
        list.push(Sample {
            t,
            velocity: a.to_vec(),
            tke: c.to_vec(),
        });
    }
}

impl<T: Real> rk::OdeProblem<T> for Runner<T> {
    fn dim(&self) -> usize {
        self.asm.dim()
    }

    fn rhs(&mut self, t: T, y: &[T], dydt: &mut [T]) -> Result<(), SolverError> {
        self.asm.rhs_into(t, y, dydt)
    }

    fn on_accepted(&mut self, step: &rk::AcceptedStep<'_, T>) -> Result<(), SolverError> {
        while self.user_idx < self.pending_user.len() && self.pending_user[self.user_idx] <= step.t1
        {
            let t = self.pending_user[self.user_idx];
            step.eval_dense(t, &mut self.scratch);
            Self::push_sample(&mut self.samples, self.n_velocity, t, &self.scratch);
            self.user_idx += 1;
        }
        while self.audit_idx < self.pending_audit.len()
            && self.pending_audit[self.audit_idx] <= step.t1
        {
            let t = self.pending_audit[self.audit_idx];
            step.eval_dense(t, &mut self.scratch);
            Self::push_sample(&mut self.audit, self.n_velocity, t, &self.scratch);
            self.audit_idx += 1;
        }

        // the integrator's last stage evaluated the accepted state, so the
        // assembler's cached fields and min-k belong to (t1, y1)
        let a1 = &step.y1[..self.n_velocity];
        let da1 = &step.y1_deriv[..self.n_velocity];
        self.diagnostics.push(StepDiagnostics {
            t: step.t1,
            dt: step.dt,
            local_error: step.local_error,
            min_k: self.asm.last_min_k,
            energy_residual: self.asm.energy_residual(a1, da1),
        });
        self.final_state.clear();
        self.final_state.extend_from_slice(step.y1);
        Ok(())
    }
}

/// Integrates a configured run from its prepared initial data.
///
/// The admissibility conditions are enforced up front unless the config
/// overrides them.  The returned trajectory is a pure function of the
/// configuration: reruns are bit-identical.
pub fn run<T: Real>(cfg: &RunConfig<T>) -> Result<RunOutput<T>, SolverError> {
    cfg.validate()?;
    let admissibility = cfg.admissibility();
    if !admissibility.admissible && !cfg.override_admissibility {
        return Err(crate::error::ModelError::Inadmissible {
            condition: {
                let mut names = Vec::new();
                if !admissibility.cond1_ok {
                    names.push("Cond1");
                }
                if !admissibility.cond2_ok {
                    names.push("Cond2");
                }
                if !admissibility.cond3_ok {
                    names.push("Cond3");
                }
                names.join(", ")
            },
            detail: admissibility.violations.join("; "),
        }
        .into());
    }

    let basis = Basis::build(&cfg.spec, cfg.n_velocity, cfg.n_scalar)?;
    let (a0, c0, under_resolved, below_floor) = prepare_initial(cfg, &basis)?;

    let asm = Assembler::new(
        basis,
        cfg.params,
        cfg.level,
        &cfg.forcing,
        cfg.positivity,
    )?;

    let t_final = cfg.params.t_final;
    let mut y0 = a0;
    y0.extend_from_slice(&c0);

    let mut runner = Runner {
        n_velocity: cfg.n_velocity,
        pending_user: cfg.sample_times.clone(),
        user_idx: 0,
        pending_audit: audit_times(t_final),
        audit_idx: 0,
        samples: Vec::with_capacity(cfg.sample_times.len()),
        audit: Vec::with_capacity(AUDIT_SAMPLES),
        diagnostics: Vec::new(),
        scratch: vec![T::zero(); asm.dim()],
        final_state: y0.clone(),
        asm,
    };

    // emit the time-zero snapshots directly from the initial state
    while runner.user_idx < runner.pending_user.len()
        && runner.pending_user[runner.user_idx] <= T::zero()
    {
        Runner::push_sample(&mut runner.samples, cfg.n_velocity, T::zero(), &y0);
        runner.user_idx += 1;
    }
    Runner::push_sample(&mut runner.audit, cfg.n_velocity, T::zero(), &y0);
    runner.audit_idx = 1;

    let rk_cfg = RkConfig {
        rel_tol: cfg.integrator.rel_tol,
        abs_tol: cfg.integrator.abs_tol,
        max_dt: cfg.integrator.max_dt,
        dt_init: cfg.integrator.dt_init,
        t_end: t_final,
    };
    let stats = rk::integrate(&mut runner, &rk_cfg, &y0)?;

    // anything still pending sits within rounding of the horizon
    while runner.user_idx < runner.pending_user.len() {
        let t = runner.pending_user[runner.user_idx];
        Runner::push_sample(&mut runner.samples, cfg.n_velocity, t, &runner.final_state);
        runner.user_idx += 1;
    }
    while runner.audit_idx < runner.pending_audit.len() {
        let t = runner.pending_audit[runner.audit_idx];
        Runner::push_sample(&mut runner.audit, cfg.n_velocity, t, &runner.final_state);
        runner.audit_idx += 1;
    }

    let trajectory = Trajectory {
        samples: runner.samples,
        audit: runner.audit,
        diagnostics: runner.diagnostics,
        stats,
        positivity_events: runner.asm.positivity_events,
        min_k_seen: runner.asm.min_k_seen,
        max_discarded_mass: runner.asm.max_discarded_mass,
        mollifier_under_resolved: under_resolved,
        initial_below_floor: below_floor,
    };
    Ok(RunOutput {
        trajectory,
        basis: runner.asm.basis,
        admissibility,
    })
}

type PreparedInitial<T> = (Vec<T>, Vec<T>, bool, bool);

fn prepare_initial<T: Real>(
    cfg: &RunConfig<T>,
    basis: &Basis<T>,
) -> Result<PreparedInitial<T>, SolverError> {
    let nodes = basis.grid.node_count();
    let j = cfg.n_velocity;
    let l = cfg.n_scalar;

    let a0 = match &cfg.initial.velocity {
        VelocityInit::Zero => vec![T::zero(); j],
        VelocityInit::Coefficients(v) => pad_coefficients(v, j)?,
        VelocityInit::Nodal { x, y } => {
            for f in [x, y] {
                if f.len() != nodes {
                    return Err(SetupError::FieldLength {
                        expected: nodes,
                        found: f.len(),
                    }
                    .into());
                }
            }
            basis.project_velocity(x, y)
        }
    };

    let mut under_resolved = false;
    let mut below_floor = false;
    let c0 = match &cfg.initial.tke {
        TkeInit::Constant(value) => {
            below_floor = *value < cfg.params.c0;
            basis.project_scalar(&vec![*value; nodes])
        }
        TkeInit::Coefficients(v) => pad_coefficients(v, l)?,
        TkeInit::Nodal(f) => {
            if f.len() != nodes {
                return Err(SetupError::FieldLength {
                    expected: nodes,
                    found: f.len(),
                }
                .into());
            }
            let min = f.iter().cloned().fold(T::infinity(), T::min);
            below_floor = min < cfg.params.c0;
            let res = mollify_field(&basis.grid, cfg.level, f)?;
            under_resolved = res.under_resolved;
            basis.project_scalar(&res.field)
        }
    };
    Ok((a0, c0, under_resolved, below_floor))
}

fn pad_coefficients<T: Real>(v: &[T], dim: usize) -> Result<Vec<T>, SolverError> {
    if v.len() > dim {
        return Err(SetupError::FieldLength {
            expected: dim,
            found: v.len(),
        }
        .into());
    }
    let mut out = v.to_vec();
    out.resize(dim, T::zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridMode;
    use crate::error::ModelError;

    fn base_params() -> ModelParameters<f64> {
        ModelParameters {
            d: 2,
            alpha: 2.0,
            beta: 1.0,
            gamma: 0.3,
            eta: 0.0,
            zeta: 0.0,
            theta: 0.0,
            c_t: 1.0,
            c_d: 1.0,
            c_p: 1.0,
            c_eps: 1.0,
            c_da: 0.0,
            c_fo: 0.0,
            c0: 1e-8,
            t_final: 1.0,
        }
    }

    fn base_config() -> RunConfig<f64> {
        RunConfig {
            params: base_params(),
            spec: DomainSpec {
                mode: GridMode::PeriodicTorus2D,
                extent: [1.0, 1.0],
                grid_n: 16,
            },
            level: 4,
            n_velocity: 2,
            n_scalar: 3,
            forcing: Forcing::Zero,
            integrator: IntegratorConfig {
                rel_tol: 1e-8,
                abs_tol: 1e-10,
                max_dt: 0.05,
                dt_init: 0.0,
            },
            initial: InitialData {
                velocity: VelocityInit::Zero,
                tke: TkeInit::Constant(1.0),
            },
            sample_times: vec![1.0],
            positivity: PositivityPolicy::Monitor,
            override_admissibility: false,
        }
    }

    #[test]
    fn zero_data_zero_forcing_yields_the_zero_trajectory() {
        let mut cfg = base_config();
        cfg.initial.tke = TkeInit::Constant(0.0);
        let out = run(&cfg).unwrap();
        for s in out.trajectory.audit.iter().chain(&out.trajectory.samples) {
            assert!(s.velocity.iter().all(|&v| v == 0.0));
            assert!(s.tke.iter().all(|&v| v == 0.0));
        }
        // the controller opens the step up to its cap on a fixed point
        assert!(out
            .trajectory
            .diagnostics
            .iter()
            .any(|d| (d.dt - 0.05).abs() < 1e-12));
        assert!(out.trajectory.initial_below_floor);
    }

    #[test]
    fn constant_tke_decays_exponentially() {
        let cfg = base_config();
        let out = run(&cfg).unwrap();
        let last = out.trajectory.samples.last().unwrap();
        assert_eq!(last.t, 1.0);
        let expect = (-1.0f64).exp();
        assert!(
            (last.tke[0] - expect).abs() < 1e-7,
            "constant mode {} vs {expect}",
            last.tke[0]
        );
        assert!(last.tke[1..].iter().all(|&v| v.abs() < 1e-9));
        assert_eq!(out.trajectory.audit.len(), AUDIT_SAMPLES);
    }

    #[test]
    fn quadratic_tke_decay_tracks_the_closed_form() {
        let mut cfg = base_config();
        cfg.params.theta = 1.0;
        // keep theta < zeta + 2/d; the diffusion law never acts on a
        // spatially constant state
        cfg.params.zeta = 1.0;
        cfg.sample_times = vec![0.25, 0.5, 1.0];
        let out = run(&cfg).unwrap();
        for s in &out.trajectory.samples {
            let expect = 1.0 / (1.0 + s.t);
            assert!(
                (s.tke[0] - expect).abs() < 1e-7,
                "at t = {}: {} vs {expect}",
                s.t,
                s.tke[0]
            );
        }
    }

    #[test]
    fn single_mode_decay_with_bounded_tke_drift() {
        let mut cfg = base_config();
        cfg.params.c_p = 1e-12;
        cfg.params.c_eps = 1e-12;
        cfg.params.t_final = 0.05;
        cfg.integrator.max_dt = 0.01;
        cfg.initial.velocity = VelocityInit::Coefficients(vec![0.1]);
        cfg.initial.tke = TkeInit::Constant(0.5);
        cfg.sample_times = vec![0.05];
        let out = run(&cfg).unwrap();
        let eig = out.basis.velocity[0].eigenvalue;
        let last = out.trajectory.samples.last().unwrap();
        let expect = 0.1 * (-eig * 0.05f64).exp();
        assert!(
            (last.velocity[0] - expect).abs() < 1e-7,
            "{} vs {expect}",
            last.velocity[0]
        );
        // generation feeds the dissipated kinetic energy into the TKE
        let injected = 0.5 * 0.1f64.powi(2) * (1.0 - (-2.0 * eig * 0.05f64).exp());
        let drift = last.tke[0] - 0.5;
        assert!(drift > 0.0, "drift {drift}");
        assert!(drift <= injected * 1.001, "drift {drift} vs injected {injected}");
    }

    #[test]
    fn first_samples_match_projected_initial_data() {
        let mut cfg = base_config();
        cfg.sample_times = vec![0.0, 1.0];
        let grid_nodes = 16 * 16;
        let x: Vec<f64> = (0..grid_nodes).map(|q| (q as f64 * 0.11).sin() * 0.1).collect();
        let y: Vec<f64> = (0..grid_nodes).map(|q| (q as f64 * 0.07).cos() * 0.1).collect();
        let k: Vec<f64> = (0..grid_nodes).map(|q| 1.0 + 0.2 * (q as f64 * 0.05).sin()).collect();
        cfg.initial.velocity = VelocityInit::Nodal {
            x: x.clone(),
            y: y.clone(),
        };
        cfg.initial.tke = TkeInit::Nodal(k.clone());
        let out = run(&cfg).unwrap();
        let first = &out.trajectory.samples[0];
        assert_eq!(first.t, 0.0);
        assert_eq!(first.velocity, out.basis.project_velocity(&x, &y));
        let smoothed = mollify_field(&out.basis.grid, cfg.level, &k).unwrap();
        assert_eq!(first.tke, out.basis.project_scalar(&smoothed.field));
        assert!(!out.trajectory.mollifier_under_resolved);
        assert!(!out.trajectory.initial_below_floor);
    }

    #[test]
    fn bounded_runs_are_bit_identical_across_regularization_levels() {
        let runs: Vec<Trajectory<f64>> = [4u32, 8, 16]
            .iter()
            .map(|&level| {
                let mut cfg = base_config();
                cfg.level = level;
                cfg.params.eta = 0.5;
                cfg.params.zeta = 0.3;
                cfg.params.gamma = 0.2;
                cfg.params.t_final = 0.25;
                cfg.sample_times = vec![0.25];
                cfg.initial.velocity = VelocityInit::Coefficients(vec![0.1, -0.05]);
                run(&cfg).unwrap().trajectory
            })
            .collect();
        // the trajectory never nears the lowest truncation height, so every
        // level sees identical coefficient laws and an identity cutoff
        for other in &runs[1..] {
            assert_eq!(runs[0].audit.len(), other.audit.len());
            for (a, b) in runs[0].audit.iter().zip(&other.audit) {
                assert_eq!(a.t.to_bits(), b.t.to_bits());
                for (x, y) in a.velocity.iter().zip(&b.velocity) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
                for (x, y) in a.tke.iter().zip(&b.tke) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut cfg = base_config();
        cfg.initial.velocity = VelocityInit::Coefficients(vec![0.2, 0.1]);
        cfg.forcing = Forcing::SingleMode {
            index: 1,
            amplitude: 0.3,
        };
        cfg.params.t_final = 0.3;
        cfg.sample_times = vec![0.3];
        let a = run(&cfg).unwrap().trajectory;
        let b = run(&cfg).unwrap().trajectory;
        assert_eq!(a.stats, b.stats);
        for (x, y) in a.audit.iter().zip(&b.audit) {
            assert_eq!(x.velocity, y.velocity);
            assert_eq!(x.tke, y.tke);
        }
    }

    #[test]
    fn cumulative_energy_residual_respects_the_tolerance_budget() {
        let mut cfg = base_config();
        cfg.params.c_da = 0.1;
        cfg.params.c_fo = 0.2;
        cfg.params.alpha = 3.0;
        cfg.params.eta = 0.2;
        cfg.params.t_final = 0.5;
        cfg.n_velocity = 4;
        cfg.integrator.rel_tol = 1e-7;
        cfg.integrator.abs_tol = 1e-9;
        cfg.initial.velocity = VelocityInit::Coefficients(vec![0.3, -0.2, 0.1, 0.05]);
        cfg.forcing = Forcing::SingleMode {
            index: 0,
            amplitude: 0.4,
        };
        cfg.sample_times = vec![0.5];
        let out = run(&cfg).unwrap();

        let cumulative: f64 = out
            .trajectory
            .diagnostics
            .iter()
            .map(|d| d.energy_residual.abs() * d.dt)
            .sum();
        let initial_energy = 0.5 * (0.3f64.powi(2) + 0.2f64.powi(2) + 0.1f64.powi(2) + 0.05f64.powi(2));
        // forcing work from the dense samples, coarse trapezoid is enough
        let mut work = 0.0;
        let audit = &out.trajectory.audit;
        for w in audit.windows(2) {
            let f0 = 0.4 * w[0].velocity[0];
            let f1 = 0.4 * w[1].velocity[0];
            work += 0.5 * (f0 + f1) * (w[1].t - w[0].t);
        }
        let budget = 100.0 * 1e-7 * (initial_energy + work.abs());
        assert!(
            cumulative <= budget,
            "residual {cumulative} exceeds budget {budget}"
        );
    }

    #[test]
    fn inadmissible_parameters_require_the_override() {
        let mut cfg = base_config();
        cfg.params.gamma = 2.0; // Cond3 fails: 2/1 + 1/r_u >= 1
        let err = run(&cfg).unwrap_err();
        match err {
            SolverError::Model(ModelError::Inadmissible { condition, .. }) => {
                assert!(condition.contains("Cond3"), "{condition}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        cfg.override_admissibility = true;
        cfg.params.t_final = 0.05;
        cfg.sample_times = vec![0.05];
        run(&cfg).unwrap();
    }

    #[test]
    fn runs_are_generic_over_the_scalar_type() {
        let cfg32 = RunConfig::<f32> {
            params: ModelParameters {
                d: 2,
                alpha: 2.0,
                beta: 1.0,
                gamma: 0.3,
                eta: 0.0,
                zeta: 0.0,
                theta: 0.0,
                c_t: 1.0,
                c_d: 1.0,
                c_p: 1.0,
                c_eps: 1.0,
                c_da: 0.0,
                c_fo: 0.0,
                c0: 1e-4,
                t_final: 1.0,
            },
            spec: DomainSpec {
                mode: GridMode::PeriodicTorus2D,
                extent: [1.0, 1.0],
                grid_n: 16,
            },
            level: 4,
            n_velocity: 1,
            n_scalar: 1,
            forcing: Forcing::Zero,
            integrator: IntegratorConfig {
                rel_tol: 1e-5,
                abs_tol: 1e-6,
                max_dt: 0.05,
                dt_init: 0.0,
            },
            initial: InitialData {
                velocity: VelocityInit::Zero,
                tke: TkeInit::Constant(1.0),
            },
            sample_times: vec![1.0],
            positivity: PositivityPolicy::Monitor,
            override_admissibility: false,
        };
        let out = run(&cfg32).unwrap();
        let last = out.trajectory.samples.last().unwrap();
        assert!((last.tke[0] - (-1.0f32).exp()).abs() < 1e-3);
    }
}
