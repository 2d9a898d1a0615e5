//! Mollification of nodal scalar fields at the approximation level's
//! resolution: a compactly supported bump kernel of radius 1/level,
//! applied as a discrete convolution that is renormalized by the local
//! kernel mass.  The renormalization keeps two invariants exact that the
//! rest of the scheme leans on: constants are reproduced (bit-for-bit
//! when the constant is a power of two) and the output is a convex
//! combination of nodal values, so lower bounds on the input survive.

use super::Grid;
use crate::error::SetupError;
use crate::scalar::Real;

/// Outcome of smoothing a nodal field.
#[derive(Debug, Clone)]
pub struct MollifyResult<T> {
    pub field: Vec<T>,
    /// True when the kernel radius falls below the grid spacing, in which
    /// case smoothing degenerates toward the identity.
    pub under_resolved: bool,
}

/// Smooths `field` with a radius-1/`level` bump kernel.  On the torus the
/// distance wraps; on the box the kernel mass outside the domain is simply
/// dropped (the renormalization absorbs it).  Levels below 1 are treated
/// as 1.
pub fn mollify_field<T: Real>(
    grid: &Grid<T>,
    level: u32,
    field: &[T],
) -> Result<MollifyResult<T>, SetupError> {
    let nodes = grid.node_count();
    if field.len() != nodes {
        return Err(SetupError::FieldLength {
            expected: nodes,
            found: field.len(),
        });
    }
    let radius = 1.0 / f64::from(level.max(1));
    let hx = grid.h[0].to_f64_lossy();
    let hy = grid.h[1].to_f64_lossy();

    if radius <= hx.min(hy) {
        // no node other than the center can fall inside the open support
        return Ok(MollifyResult {
            field: field.to_vec(),
            under_resolved: true,
        });
    }
    let under_resolved = radius <= hx.max(hy);

    let side = grid.nodes_per_side;
    let wrap = grid.mode.is_periodic();
    let lx = grid.extent[0].to_f64_lossy();
    let ly = grid.extent[1].to_f64_lossy();

    let axis_x: Vec<f64> = grid.axis[0].iter().map(|&v| v.to_f64_lossy()).collect();
    let axis_y: Vec<f64> = grid.axis[1].iter().map(|&v| v.to_f64_lossy()).collect();

    let mut out = Vec::with_capacity(nodes);
    for iy in 0..side {
        for ix in 0..side {
            let mut num = T::zero();
            let mut den = T::zero();
            // fixed node order keeps reruns bit-identical
            for jy in 0..side {
                let mut dy = (axis_y[jy] - axis_y[iy]).abs();
                if wrap {
                    dy = dy.min(ly - dy);
                }
                if dy >= radius {
                    continue;
                }
                for jx in 0..side {
                    let mut dx = (axis_x[jx] - axis_x[ix]).abs();
                    if wrap {
                        dx = dx.min(lx - dx);
                    }
                    let rho2 = (dx * dx + dy * dy) / (radius * radius);
                    if rho2 >= 1.0 {
                        continue;
                    }
                    let kern = (-1.0 / (1.0 - rho2)).exp();
                    let j = jy * side + jx;
                    let wk = grid.weights[j] * T::of(kern);
                    num = num + wk * field[j];
                    den = den + wk;
                }
            }
            out.push(num / den);
        }
    }
    Ok(MollifyResult {
        field: out,
        under_resolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainSpec, Grid, GridMode};

    fn torus(n: u32) -> Grid<f64> {
        Grid::build(&DomainSpec {
            mode: GridMode::PeriodicTorus2D,
            extent: [1.0, 1.0],
            grid_n: n,
        })
        .unwrap()
    }

    fn boxgrid(n: u32) -> Grid<f64> {
        Grid::build(&DomainSpec {
            mode: GridMode::DirichletBox2D,
            extent: [1.0, 1.0],
            grid_n: n,
        })
        .unwrap()
    }

    #[test]
    fn power_of_two_constants_are_reproduced_exactly() {
        for grid in [torus(16), boxgrid(16)] {
            for c in [1.0f64, 0.5, 2.0, 4.0] {
                let field = vec![c; grid.node_count()];
                let res = mollify_field(&grid, 4, &field).unwrap();
                assert!(!res.under_resolved);
                assert!(res.field.iter().all(|&v| v == c), "constant {c} drifted");
            }
        }
    }

    #[test]
    fn general_constants_are_reproduced_to_rounding() {
        let grid = torus(16);
        let field = vec![3.0f64; grid.node_count()];
        let res = mollify_field(&grid, 4, &field).unwrap();
        for &v in &res.field {
            assert!((v - 3.0).abs() <= 3.0 * 32.0 * f64::EPSILON, "{v}");
        }
    }

    #[test]
    fn output_stays_inside_the_input_range() {
        let grid = boxgrid(20);
        let field: Vec<f64> = (0..grid.node_count())
            .map(|q| 0.2 + 4.8 * ((q as f64 * 0.7391).sin().abs()))
            .collect();
        let lo = field.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let res = mollify_field(&grid, 3, &field).unwrap();
        for &v in &res.field {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn sharper_kernels_track_a_step_profile_more_closely() {
        let grid = torus(64);
        let field: Vec<f64> = (0..grid.node_count())
            .map(|q| {
                let [x, _] = grid.coord(q);
                if x < 0.5 {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        let l1 = |level: u32| {
            let res = mollify_field(&grid, level, &field).unwrap();
            let diff: Vec<f64> = res
                .field
                .iter()
                .zip(&field)
                .map(|(&a, &b)| (a - b).abs())
                .collect();
            grid.integrate(&diff)
        };
        let errs: Vec<f64> = [2, 4, 8, 16].iter().map(|&n| l1(n)).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-14, "smoothing error rose: {errs:?}");
        }
        assert!(errs[3] < 0.5 * errs[0]);
    }

    #[test]
    fn radius_below_spacing_returns_the_field_unchanged() {
        let grid = torus(16);
        let field: Vec<f64> = (0..grid.node_count()).map(|q| 1.0 + q as f64).collect();
        let res = mollify_field(&grid, 64, &field).unwrap();
        assert!(res.under_resolved);
        assert_eq!(res.field, field);
    }

    #[test]
    fn torus_smoothing_respects_the_wraparound_symmetry() {
        let grid = torus(32);
        let side = grid.nodes_per_side;
        // even bump centered on the x = 0 seam
        let field: Vec<f64> = (0..grid.node_count())
            .map(|q| {
                let [x, _] = grid.coord(q);
                let d = x.min(1.0 - x);
                (-40.0 * d * d).exp()
            })
            .collect();
        let res = mollify_field(&grid, 4, &field).unwrap();
        for ix in 1..side / 2 {
            let a = res.field[ix];
            let b = res.field[side - ix];
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "asymmetry at column {ix}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn wrong_field_length_is_rejected() {
        let grid = torus(16);
        let err = mollify_field(&grid, 4, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            crate::error::SetupError::FieldLength { expected: _, found: 2 }
        ));
    }
}
