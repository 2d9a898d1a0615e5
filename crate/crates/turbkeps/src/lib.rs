//! Desk-scale spectral Galerkin solver and a-priori-estimate auditor for a
//! one-equation turbulence model in permeable media.
//!
//! The model couples an incompressible mean flow with Darcy-Forchheimer drag
//! to a turbulent-kinetic-energy (TKE) transport equation whose viscosity,
//! diffusion, production and dissipation coefficients grow polynomially in
//! the TKE. The solver integrates the regularized Galerkin system (truncated
//! coefficients, convective cutoff) with an embedded Runge-Kutta 5(4) pair;
//! the auditor then measures the quantities controlled by the a-priori
//! estimates of the underlying existence theory and reports the margins.
//!
//! Field arithmetic is generic over the scalar type (see [`scalar::Real`]);
//! the aliases below fix the default `f64` instantiation. Exponent algebra
//! runs in exact rational arithmetic whenever the inputs are rational.

pub mod audit;
pub mod config;
pub mod domain;
pub mod error;
pub mod io;
pub mod model;
pub mod orchestrate;
pub mod scalar;
pub mod solver;

pub use error::{ConfigError, IoError, ModelError, SetupError, SolverError};
pub use scalar::Real;

/// Default scalar type for solver runs.
pub type Scalar = f64;

/// Model parameters over the default scalar.
pub type ModelParameters = model::ModelParameters<Scalar>;

/// Domain description over the default scalar.
pub type DomainSpec = domain::DomainSpec<Scalar>;

/// Discrete mode sets over the default scalar.
pub type Basis = domain::Basis<Scalar>;

/// Solver run description over the default scalar.
pub type RunConfig = solver::RunConfig<Scalar>;

/// Solver run output over the default scalar.
pub type Trajectory = solver::Trajectory<Scalar>;

/// Exponent set in exact rational arithmetic.
pub type ExactExponents = model::exponents::DerivedExponents<num_rational::BigRational>;
/// Exponent set in floating-point arithmetic.
pub type FloatExponents = model::exponents::DerivedExponents<f64>;
