//! Discrete Stokes eigenmodes on the box, built from the stream-function
//! form of the eigenproblem: find psi with biharmonic(psi) = lambda *
//! (-laplace(psi)), psi and its normal derivative vanishing on the walls.
//! The velocity (d_y psi, -d_x psi) of each eigenfunction is then
//! divergence-free up to the commutation error of the difference stencils.

use nalgebra::{DMatrix, DVector};

use super::{Grid, VelocityMode};
use crate::error::SetupError;
use crate::scalar::Real;

/// Solves for the `count` lowest eigenmodes and returns nodal velocity
/// data on the full grid plus the worst relative eigen-residual.
pub(super) fn velocity_modes<T: Real>(
    grid: &Grid<T>,
    count: usize,
) -> Result<(Vec<VelocityMode<T>>, f64), SetupError> {
    if count == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let n = grid.grid_n as usize;
    let m = n - 1;
    let dim = m * m;
    let hx = grid.h[0].to_f64_lossy();
    let hy = grid.h[1].to_f64_lossy();

    // interior Dirichlet Laplacian, row-major over interior nodes
    let idx = |jx: usize, jy: usize| (jy - 1) * m + (jx - 1);
    let mut lap = DMatrix::<f64>::zeros(dim, dim);
    for jy in 1..=m {
        for jx in 1..=m {
            let p = idx(jx, jy);
            lap[(p, p)] = -2.0 / (hx * hx) - 2.0 / (hy * hy);
            if jx > 1 {
                lap[(p, idx(jx - 1, jy))] = 1.0 / (hx * hx);
            }
            if jx < m {
                lap[(p, idx(jx + 1, jy))] = 1.0 / (hx * hx);
            }
            if jy > 1 {
                lap[(p, idx(jx, jy - 1))] = 1.0 / (hy * hy);
            }
            if jy < m {
                lap[(p, idx(jx, jy + 1))] = 1.0 / (hy * hy);
            }
        }
    }

    // clamped biharmonic: square of the Laplacian plus the ghost-node
    // correction that turns the simply-supported wall into a clamped one
    let mut biharm = &lap * &lap;
    for jy in 1..=m {
        for jx in 1..=m {
            let p = idx(jx, jy);
            if jx == 1 || jx == m {
                biharm[(p, p)] += 2.0 / (hx * hx * hx * hx);
            }
            if jy == 1 || jy == m {
                biharm[(p, p)] += 2.0 / (hy * hy * hy * hy);
            }
        }
    }
    let stiff = -lap; // positive definite

    let chol = nalgebra::Cholesky::new(stiff.clone())
        .ok_or_else(|| SetupError::EigenSolve("stiffness factorization failed".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&biharm)
        .ok_or_else(|| SetupError::EigenSolve("singular triangular factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| SetupError::EigenSolve("singular triangular factor".into()))?;
    let c = 0.5 * (&c + &c.transpose());
    let eigen = nalgebra::SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].partial_cmp(&eigen.eigenvalues[b]).unwrap());
    if count > dim {
        return Err(SetupError::EigenSolve(format!(
            "requested {count} modes from a {dim}-dimensional problem"
        )));
    }

    let lt = l.transpose();
    let mut modes = Vec::with_capacity(count);
    let mut worst_residual = 0.0f64;
    for &col in order.iter().take(count) {
        let y = eigen.eigenvectors.column(col).into_owned();
        let lambda = eigen.eigenvalues[col];
        let psi = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| SetupError::EigenSolve("singular triangular factor".into()))?;

        let lhs = &biharm * &psi;
        let rhs = &stiff * &psi;
        let resid = (&lhs - lambda * &rhs).norm() / (lhs.norm() + lambda.abs() * rhs.norm());
        worst_residual = worst_residual.max(resid);

        modes.push(mode_from_stream(grid, &psi, lambda));
    }
    Ok((modes, worst_residual))
}

/// Builds nodal velocity values and gradients from an interior stream
/// function (zero on and outside the boundary).
fn mode_from_stream<T: Real>(grid: &Grid<T>, psi: &DVector<f64>, lambda: f64) -> VelocityMode<T> {
    let n = grid.grid_n as usize;
    let side = grid.nodes_per_side;
    let nodes = grid.node_count();
    let m = n - 1;
    let hx = grid.h[0].to_f64_lossy();
    let hy = grid.h[1].to_f64_lossy();

    let psi_at = |ix: isize, iy: isize| -> f64 {
        if ix <= 0 || iy <= 0 || ix >= n as isize || iy >= n as isize {
            0.0
        } else {
            psi[(iy as usize - 1) * m + (ix as usize - 1)]
        }
    };

    let mut vx = vec![0.0f64; nodes];
    let mut vy = vec![0.0f64; nodes];
    for iy in 1..n {
        for ix in 1..n {
            let q = iy * side + ix;
            let (ix, iy) = (ix as isize, iy as isize);
            vx[q] = (psi_at(ix, iy + 1) - psi_at(ix, iy - 1)) / (2.0 * hy);
            vy[q] = -(psi_at(ix + 1, iy) - psi_at(ix - 1, iy)) / (2.0 * hx);
        }
    }

    let dx = |f: &[f64], ix: usize, iy: usize| -> f64 {
        let at = |i: usize| f[iy * side + i];
        if ix == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * hx)
        } else if ix == n {
            (3.0 * at(n) - 4.0 * at(n - 1) + at(n - 2)) / (2.0 * hx)
        } else {
            (at(ix + 1) - at(ix - 1)) / (2.0 * hx)
        }
    };
    let dy = |f: &[f64], ix: usize, iy: usize| -> f64 {
        let at = |j: usize| f[j * side + ix];
        if iy == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * hy)
        } else if iy == n {
            (3.0 * at(n) - 4.0 * at(n - 1) + at(n - 2)) / (2.0 * hy)
        } else {
            (at(iy + 1) - at(iy - 1)) / (2.0 * hy)
        }
    };

    let mut grad = [
        vec![0.0f64; nodes],
        vec![0.0f64; nodes],
        vec![0.0f64; nodes],
        vec![0.0f64; nodes],
    ];
    for iy in 0..side {
        for ix in 0..side {
            let q = iy * side + ix;
            grad[0][q] = dx(&vx, ix, iy);
            grad[1][q] = dy(&vx, ix, iy);
            grad[2][q] = dx(&vy, ix, iy);
            grad[3][q] = dy(&vy, ix, iy);
        }
    }

    VelocityMode {
        vx: vx.iter().map(|&v| T::of(v)).collect(),
        vy: vy.iter().map(|&v| T::of(v)).collect(),
        grad: grad
            .iter()
            .map(|g| g.iter().map(|&v| T::of(v)).collect())
            .collect::<Vec<_>>()
            .try_into()
            .unwrap(),
        eigenvalue: T::of(lambda),
    }
}
