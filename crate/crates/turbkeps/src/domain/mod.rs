//! Spatial discretization: grids, quadrature, divergence-free velocity
//! modes and scalar modes for the turbulent energy.
//!
//! Two grid modes are supported. `PeriodicTorus2D` uses Fourier modes
//! projected onto the divergence-free subspace; it is exactly solenoidal
//! and quadrature of polynomial mode products is exact, which makes it the
//! reference geometry for conservation checks (it deviates from the wall
//! boundary conditions and is flagged as a surrogate in reports).
//! `DirichletBox2D` honors the homogeneous Dirichlet conditions: velocity
//! modes are discrete Stokes eigenfunctions obtained from a finite
//! difference eigenproblem in stream-function form, scalar modes are tensor
//! sine functions.

pub mod mollify;
mod stokes;

use crate::error::SetupError;
use crate::scalar::Real;

/// Geometry selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    PeriodicTorus2D,
    DirichletBox2D,
}

impl GridMode {
    #[inline]
    pub fn is_periodic(self) -> bool {
        matches!(self, GridMode::PeriodicTorus2D)
    }
}

/// Domain description: geometry, side lengths and grid resolution.
///
/// `grid_n` counts grid intervals per side and must be an even integer
/// of at least 8. The torus carries `grid_n` nodes per side (the periodic
/// image is not duplicated), the box `grid_n + 1` including the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec<T> {
    pub mode: GridMode,
    pub extent: [T; 2],
    pub grid_n: u32,
}

impl<T: Real> DomainSpec<T> {
    pub fn validate(&self) -> Result<(), SetupError> {
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return Err(SetupError::InvalidResolution(self.grid_n));
        }
        for &side in &self.extent {
            if !(side.is_finite() && side > T::zero()) {
                return Err(SetupError::InvalidExtent(side.to_f64_lossy()));
            }
        }
        Ok(())
    }
}

/// Quadrature grid: node coordinates and weights.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    pub mode: GridMode,
    pub grid_n: u32,
    pub extent: [T; 2],
    /// Nodes per side: `grid_n` on the torus, `grid_n + 1` on the box.
    pub nodes_per_side: usize,
    /// Node coordinates along each axis.
    pub axis: [Vec<T>; 2],
    /// Quadrature weight per node, row-major (x fastest).
    pub weights: Vec<T>,
    /// Grid spacing per axis.
    pub h: [T; 2],
}

impl<T: Real> Grid<T> {
    pub fn build(spec: &DomainSpec<T>) -> Result<Self, SetupError> {
        spec.validate()?;
        let n = spec.grid_n as usize;
        match spec.mode {
            GridMode::PeriodicTorus2D => {
                let hx = spec.extent[0] / T::of(n as f64);
                let hy = spec.extent[1] / T::of(n as f64);
                let axis_x: Vec<T> = (0..n).map(|i| hx * T::of(i as f64)).collect();
                let axis_y: Vec<T> = (0..n).map(|i| hy * T::of(i as f64)).collect();
                let w = hx * hy;
                Ok(Grid {
                    mode: spec.mode,
                    grid_n: spec.grid_n,
                    extent: spec.extent,
                    nodes_per_side: n,
                    axis: [axis_x, axis_y],
                    weights: vec![w; n * n],
                    h: [hx, hy],
                })
            }
            GridMode::DirichletBox2D => {
                let m = n + 1;
                let hx = spec.extent[0] / T::of(n as f64);
                let hy = spec.extent[1] / T::of(n as f64);
                let axis_x: Vec<T> = (0..m).map(|i| hx * T::of(i as f64)).collect();
                let axis_y: Vec<T> = (0..m).map(|i| hy * T::of(i as f64)).collect();
                let mut weights = Vec::with_capacity(m * m);
                let edge = |i: usize| i == 0 || i == n;
                for iy in 0..m {
                    for ix in 0..m {
                        let mut w = hx * hy;
                        if edge(ix) {
                            w = w * T::of(0.5);
                        }
                        if edge(iy) {
                            w = w * T::of(0.5);
                        }
                        weights.push(w);
                    }
                }
                Ok(Grid {
                    mode: spec.mode,
                    grid_n: spec.grid_n,
                    extent: spec.extent,
                    nodes_per_side: m,
                    axis: [axis_x, axis_y],
                    weights,
                    h: [hx, hy],
                })
            }
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes_per_side * self.nodes_per_side
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> [T; 2] {
        let ix = idx % self.nodes_per_side;
        let iy = idx / self.nodes_per_side;
        [self.axis[0][ix], self.axis[1][iy]]
    }

    /// Quadrature of nodal values.
    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights
            .iter()
            .zip(values)
            .map(|(&w, &v)| w * v)
            .sum()
    }

    /// Quadrature of a nodal integrand given as a closure over node index.
    pub fn integrate_with<F: FnMut(usize) -> T>(&self, mut f: F) -> T {
        self.weights
            .iter()
            .enumerate()
            .map(|(q, &w)| w * f(q))
            .sum()
    }

    pub fn area(&self) -> T {
        self.extent[0] * self.extent[1]
    }

    /// Fills a nodal scalar field from a coordinate closure.
    pub fn field_from_fn<F: FnMut([T; 2]) -> T>(&self, mut f: F) -> Vec<T> {
        (0..self.node_count()).map(|q| f(self.coord(q))).collect()
    }
}

/// One divergence-free velocity mode: nodal values and nodal gradient.
///
/// Gradient layout: `[d(ux)/dx, d(ux)/dy, d(uy)/dx, d(uy)/dy]`.
#[derive(Debug, Clone)]
pub struct VelocityMode<T> {
    pub vx: Vec<T>,
    pub vy: Vec<T>,
    pub grad: [Vec<T>; 4],
    pub eigenvalue: T,
}

/// One scalar mode: nodal values and nodal gradient.
#[derive(Debug, Clone)]
pub struct ScalarMode<T> {
    pub w: Vec<T>,
    pub gx: Vec<T>,
    pub gy: Vec<T>,
    pub eigenvalue: T,
}

/// Orthonormal mode sets over a quadrature grid, with build diagnostics.
#[derive(Debug, Clone)]
pub struct Basis<T> {
    pub grid: Grid<T>,
    pub velocity: Vec<VelocityMode<T>>,
    pub scalar: Vec<ScalarMode<T>>,
    /// Worst quadrature L2 norm of the discrete divergence over the
    /// velocity modes.
    pub divergence_l2: T,
    /// Max deviation of the combined Gram matrix from the identity.
    pub gram_defect: T,
    /// Relative eigen-residual of the velocity eigenproblem (box only).
    pub eigen_residual: Option<T>,
    /// Largest integer frequency per axis used by torus modes.
    pub max_freq: u32,
}

/// Integer wavevector representatives ordered by squared magnitude with
/// lexicographic tie-break; each yields a cosine and a sine mode.
fn torus_representatives(limit: i32) -> Vec<[i32; 2]> {
    let mut reps = Vec::new();
    for m1 in 0..=limit {
        let lo = if m1 == 0 { 1 } else { -limit };
        for m2 in lo..=limit {
            reps.push([m1, m2]);
        }
    }
    reps.sort_by_key(|m| (m[0] * m[0] + m[1] * m[1], m[0], m[1]));
    reps
}

impl<T: Real> Basis<T> {
    /// Builds the mode sets: `n_velocity` velocity and `n_scalar` scalar
    /// modes ordered by increasing eigenvalue.
    pub fn build(
        spec: &DomainSpec<T>,
        n_velocity: usize,
        n_scalar: usize,
    ) -> Result<Self, SetupError> {
        let grid = Grid::build(spec)?;
        match spec.mode {
            GridMode::PeriodicTorus2D => Self::build_torus(grid, n_velocity, n_scalar),
            GridMode::DirichletBox2D => Self::build_box(grid, n_velocity, n_scalar),
        }
    }

    fn build_torus(grid: Grid<T>, n_velocity: usize, n_scalar: usize) -> Result<Self, SetupError> {
        let n = grid.grid_n;
        // cubic mode products must stay below the sampling limit so that
        // quadrature of the polynomial weak-form terms is exact
        let cap = ((n - 1) / 3).max(1) as i32;
        let reps = torus_representatives(cap);
        let vel_capacity = 2 * reps.len();
        let scal_capacity = 2 * reps.len() + 1;
        if n_velocity > vel_capacity {
            return Err(SetupError::ModeCapacity {
                kind: "velocity",
                requested: n_velocity,
                capacity: vel_capacity,
                n,
            });
        }
        if n_scalar > scal_capacity {
            return Err(SetupError::ModeCapacity {
                kind: "scalar",
                requested: n_scalar,
                capacity: scal_capacity,
                n,
            });
        }

        let nodes = grid.node_count();
        let area = grid.area();
        let two_pi = T::of(std::f64::consts::TAU);
        let amp = (T::of(2.0) / area).sqrt();

        let mut velocity = Vec::with_capacity(n_velocity);
        let mut scalar = Vec::with_capacity(n_scalar);

        // constant scalar mode comes first (eigenvalue 0)
        if n_scalar > 0 {
            let c = T::one() / area.sqrt();
            scalar.push(ScalarMode {
                w: vec![c; nodes],
                gx: vec![T::zero(); nodes],
                gy: vec![T::zero(); nodes],
                eigenvalue: T::zero(),
            });
        }

        let mut max_freq = 0u32;
        'outer: for rep in &reps {
            let need_vel = velocity.len() < n_velocity;
            let need_scal = scalar.len() < n_scalar;
            if !need_vel && !need_scal {
                break 'outer;
            }
            max_freq = max_freq.max(rep[0].unsigned_abs()).max(rep[1].unsigned_abs());
            let kx = two_pi * T::of(rep[0] as f64) / grid.extent[0];
            let ky = two_pi * T::of(rep[1] as f64) / grid.extent[1];
            let knorm = (kx * kx + ky * ky).sqrt();
            // divergence-free direction, perpendicular to the wavevector
            let tx = -ky / knorm;
            let ty = kx / knorm;
            let eig = knorm * knorm;

            // phase per node
            let mut cos_v = Vec::with_capacity(nodes);
            let mut sin_v = Vec::with_capacity(nodes);
            for q in 0..nodes {
                let [x, y] = grid.coord(q);
                let phase = kx * x + ky * y;
                cos_v.push(phase.cos());
                sin_v.push(phase.sin());
            }

            for &is_sin in &[false, true] {
                let (val, dval): (&[T], Vec<T>) = if is_sin {
                    // d sin = +cos
                    (&sin_v, cos_v.iter().map(|&c| c).collect())
                } else {
                    // d cos = -sin
                    (&cos_v, sin_v.iter().map(|&s| -s).collect())
                };
                if velocity.len() < n_velocity {
                    let vx: Vec<T> = val.iter().map(|&v| amp * v * tx).collect();
                    let vy: Vec<T> = val.iter().map(|&v| amp * v * ty).collect();
                    let gxx: Vec<T> = dval.iter().map(|&d| amp * d * kx * tx).collect();
                    let gxy: Vec<T> = dval.iter().map(|&d| amp * d * ky * tx).collect();
                    let gyx: Vec<T> = dval.iter().map(|&d| amp * d * kx * ty).collect();
                    let gyy: Vec<T> = dval.iter().map(|&d| amp * d * ky * ty).collect();
                    velocity.push(VelocityMode {
                        vx,
                        vy,
                        grad: [gxx, gxy, gyx, gyy],
                        eigenvalue: eig,
                    });
                }
                if scalar.len() < n_scalar {
                    let w: Vec<T> = val.iter().map(|&v| amp * v).collect();
                    let gx: Vec<T> = dval.iter().map(|&d| amp * d * kx).collect();
                    let gy: Vec<T> = dval.iter().map(|&d| amp * d * ky).collect();
                    scalar.push(ScalarMode {
                        w,
                        gx,
                        gy,
                        eigenvalue: eig,
                    });
                }
            }
        }

        let mut basis = Basis {
            grid,
            velocity,
            scalar,
            divergence_l2: T::zero(),
            gram_defect: T::zero(),
            eigen_residual: None,
            max_freq,
        };
        basis.divergence_l2 = basis.measure_divergence();
        basis.gram_defect = basis.measure_gram_defect();
        Ok(basis)
    }

    fn build_box(grid: Grid<T>, n_velocity: usize, n_scalar: usize) -> Result<Self, SetupError> {
        let n = grid.grid_n;
        let interior = (n as usize - 1) * (n as usize - 1);
        let scal_capacity = (n as usize - 1) * (n as usize - 1);
        if n_scalar > scal_capacity {
            return Err(SetupError::ModeCapacity {
                kind: "scalar",
                requested: n_scalar,
                capacity: scal_capacity,
                n,
            });
        }
        if n_velocity > interior / 2 {
            return Err(SetupError::ModeCapacity {
                kind: "velocity",
                requested: n_velocity,
                capacity: interior / 2,
                n,
            });
        }

        let nodes = grid.node_count();
        let pi = T::of(std::f64::consts::PI);
        let amp = T::of(2.0) / grid.area().sqrt();

        // scalar modes: tensor sines ordered by eigenvalue, lexicographic ties
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for p in 1..n as usize {
            for q in 1..n as usize {
                pairs.push((p, q));
            }
        }
        let eig_of = |p: usize, q: usize| -> T {
            let kp = pi * T::of(p as f64) / grid.extent[0];
            let kq = pi * T::of(q as f64) / grid.extent[1];
            kp * kp + kq * kq
        };
        pairs.sort_by(|&(p1, q1), &(p2, q2)| {
            eig_of(p1, q1)
                .partial_cmp(&eig_of(p2, q2))
                .unwrap()
                .then(p1.cmp(&p2))
                .then(q1.cmp(&q2))
        });

        let mut scalar = Vec::with_capacity(n_scalar);
        for &(p, q) in pairs.iter().take(n_scalar) {
            let kp = pi * T::of(p as f64) / grid.extent[0];
            let kq = pi * T::of(q as f64) / grid.extent[1];
            let mut w = Vec::with_capacity(nodes);
            let mut gx = Vec::with_capacity(nodes);
            let mut gy = Vec::with_capacity(nodes);
            for idx in 0..nodes {
                let [x, y] = grid.coord(idx);
                let sx = (kp * x).sin();
                let cx = (kp * x).cos();
                let sy = (kq * y).sin();
                let cy = (kq * y).cos();
                w.push(amp * sx * sy);
                gx.push(amp * kp * cx * sy);
                gy.push(amp * kq * sx * cy);
            }
            scalar.push(ScalarMode {
                w,
                gx,
                gy,
                eigenvalue: eig_of(p, q),
            });
        }

        let (mut velocity, residual) = stokes::velocity_modes(&grid, n_velocity)?;
        orthonormalize_velocity(&grid, &mut velocity);

        let mut basis = Basis {
            grid,
            velocity,
            scalar,
            divergence_l2: T::zero(),
            gram_defect: T::zero(),
            eigen_residual: Some(T::of(residual)),
            max_freq: 0,
        };
        basis.divergence_l2 = basis.measure_divergence();
        basis.gram_defect = basis.measure_gram_defect();
        Ok(basis)
    }

    /// Discrete inner product of two velocity mode value sets.
    fn vel_inner(&self, a: &VelocityMode<T>, b: &VelocityMode<T>) -> T {
        self.grid
            .integrate_with(|q| a.vx[q] * b.vx[q] + a.vy[q] * b.vy[q])
    }

    fn scal_inner(&self, a: &ScalarMode<T>, b: &ScalarMode<T>) -> T {
        self.grid.integrate_with(|q| a.w[q] * b.w[q])
    }

    fn measure_gram_defect(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.velocity.iter().enumerate() {
            for (j, b) in self.velocity.iter().enumerate().skip(i) {
                let expect = if i == j { T::one() } else { T::zero() };
                let dev = (self.vel_inner(a, b) - expect).abs();
                if dev > worst {
                    worst = dev;
                }
            }
        }
        for (i, a) in self.scalar.iter().enumerate() {
            for (j, b) in self.scalar.iter().enumerate().skip(i) {
                let expect = if i == j { T::one() } else { T::zero() };
                let dev = (self.scal_inner(a, b) - expect).abs();
                if dev > worst {
                    worst = dev;
                }
            }
        }
        worst
    }

    fn measure_divergence(&self) -> T {
        let mut worst = T::zero();
        for mode in &self.velocity {
            let mass = self
                .grid
                .integrate_with(|q| {
                    let div = mode.grad[0][q] + mode.grad[3][q];
                    div * div
                })
                .sqrt();
            if mass > worst {
                worst = mass;
            }
        }
        worst
    }

    /// Least-squares coefficients of a nodal velocity field.
    pub fn project_velocity(&self, fx: &[T], fy: &[T]) -> Vec<T> {
        self.velocity
            .iter()
            .map(|m| {
                self.grid
                    .integrate_with(|q| fx[q] * m.vx[q] + fy[q] * m.vy[q])
            })
            .collect()
    }

    /// Least-squares coefficients of a nodal scalar field.
    pub fn project_scalar(&self, f: &[T]) -> Vec<T> {
        self.scalar
            .iter()
            .map(|m| self.grid.integrate_with(|q| f[q] * m.w[q]))
            .collect()
    }

    /// Nodal values of a velocity coefficient vector.
    pub fn eval_velocity(&self, coeffs: &[T], out_x: &mut [T], out_y: &mut [T]) {
        out_x.fill(T::zero());
        out_y.fill(T::zero());
        for (c, mode) in coeffs.iter().zip(&self.velocity) {
            if c.is_zero() {
                continue;
            }
            for q in 0..out_x.len() {
                out_x[q] = out_x[q] + *c * mode.vx[q];
                out_y[q] = out_y[q] + *c * mode.vy[q];
            }
        }
    }

    /// Nodal velocity gradient of a coefficient vector
    /// (`[dux/dx, dux/dy, duy/dx, duy/dy]`).
    pub fn eval_velocity_gradient(&self, coeffs: &[T], out: &mut [Vec<T>; 4]) {
        for g in out.iter_mut() {
            g.fill(T::zero());
        }
        for (c, mode) in coeffs.iter().zip(&self.velocity) {
            if c.is_zero() {
                continue;
            }
            for k in 0..4 {
                let src = &mode.grad[k];
                let dst = &mut out[k];
                for q in 0..src.len() {
                    dst[q] = dst[q] + *c * src[q];
                }
            }
        }
    }

    /// Nodal values of a scalar coefficient vector.
    pub fn eval_scalar(&self, coeffs: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for (c, mode) in coeffs.iter().zip(&self.scalar) {
            if c.is_zero() {
                continue;
            }
            for q in 0..out.len() {
                out[q] = out[q] + *c * mode.w[q];
            }
        }
    }

    /// Nodal gradient of a scalar coefficient vector.
    pub fn eval_scalar_gradient(&self, coeffs: &[T], out_x: &mut [T], out_y: &mut [T]) {
        out_x.fill(T::zero());
        out_y.fill(T::zero());
        for (c, mode) in coeffs.iter().zip(&self.scalar) {
            if c.is_zero() {
                continue;
            }
            for q in 0..out_x.len() {
                out_x[q] = out_x[q] + *c * mode.gx[q];
                out_y[q] = out_y[q] + *c * mode.gy[q];
            }
        }
    }
}

/// Modified Gram-Schmidt in the discrete inner product; run twice for
/// orthogonality at working precision.
fn orthonormalize_velocity<T: Real>(grid: &Grid<T>, modes: &mut [VelocityMode<T>]) {
    let inner = |a: &VelocityMode<T>, b: &VelocityMode<T>| -> T {
        grid.integrate_with(|q| a.vx[q] * b.vx[q] + a.vy[q] * b.vy[q])
    };
    for _pass in 0..2 {
        for i in 0..modes.len() {
            for jj in 0..i {
                let (head, tail) = modes.split_at_mut(i);
                let prev = &head[jj];
                let cur = &mut tail[0];
                let r = inner(prev, cur);
                for q in 0..cur.vx.len() {
                    cur.vx[q] = cur.vx[q] - r * prev.vx[q];
                    cur.vy[q] = cur.vy[q] - r * prev.vy[q];
                    for k in 0..4 {
                        cur.grad[k][q] = cur.grad[k][q] - r * prev.grad[k][q];
                    }
                }
            }
            let norm = inner(&modes[i], &modes[i]).sqrt();
            let inv = T::one() / norm;
            let cur = &mut modes[i];
            for q in 0..cur.vx.len() {
                cur.vx[q] = cur.vx[q] * inv;
                cur.vy[q] = cur.vy[q] * inv;
                for k in 0..4 {
                    cur.grad[k][q] = cur.grad[k][q] * inv;
                }
            }
        }
    }
}
