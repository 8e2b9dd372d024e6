//! Reference solver for `−Δu = 1` in a domain with `u = 0` on its boundary.
//!
//! Shortley–Weller finite differences on a uniform grid over `[0, 2]²`:
//! a node adjacent to the boundary uses the exact distance to the boundary
//! crossing in each axis direction, where `u = 0` is imposed. The resulting
//! matrix is not symmetric and is factored by sparse LU.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::{DatagenError, GridSolution};
use crate::geometry::DomainSpec;

pub const BOX_SIZE: f64 = 2.0;
pub const DEFAULT_GRID_N: usize = 201;
pub const MIN_DOMAIN_AREA: f64 = 0.05;
pub const MIN_INTERIOR_NODES: usize = 9;
const RESIDUAL_TOL: f64 = 1e-10;

/// Node coordinates `2i/(n − 1)` of the box grid.
pub fn box_axis(grid_n: usize) -> Vec<f64> {
    (0..grid_n).map(|i| BOX_SIZE * i as f64 / (grid_n - 1) as f64).collect()
}

/// Solves with unit source and permeability. Values are indexed
/// `ix·n + iy` and are NaN at nodes outside the domain (including nodes
/// exactly on the boundary).
pub fn solve_darcy(domain: &DomainSpec, grid_n: usize) -> Result<GridSolution, DatagenError> {
    solve_poisson(domain, grid_n, |_, _| 1.0)
}

/// `−Δu = f` with homogeneous Dirichlet data.
pub fn solve_poisson(
    domain: &DomainSpec,
    grid_n: usize,
    source: impl Fn(f64, f64) -> f64,
) -> Result<GridSolution, DatagenError> {
    if grid_n < 5 {
        return Err(DatagenError::InvalidParameter(format!("grid size {grid_n} is below 5")));
    }
    if domain.area() < MIN_DOMAIN_AREA {
        return Err(DatagenError::InvalidParameter(format!(
            "domain area {} is below {MIN_DOMAIN_AREA}",
            domain.area()
        )));
    }
    let axis = box_axis(grid_n);
    let h = BOX_SIZE / (grid_n - 1) as f64;
    let n = grid_n;
    let mut index = vec![usize::MAX; n * n];
    let mut nodes = Vec::new();
    for ix in 0..n {
        for iy in 0..n {
            if domain.contains(axis[ix], axis[iy]) {
                index[ix * n + iy] = nodes.len();
                nodes.push((ix, iy));
            }
        }
    }
    if nodes.len() < MIN_INTERIOR_NODES {
        return Err(DatagenError::DegenerateDomain(nodes.len()));
    }

    let mut triplets = Vec::with_capacity(5 * nodes.len());
    let mut rhs = Mat::<f64>::zeros(nodes.len(), 1);
    for (row, &(ix, iy)) in nodes.iter().enumerate() {
        let p = [axis[ix], axis[iy]];
        let mut diag = 0.0;
        // per axis: (negative neighbor, positive neighbor)
        for dim in 0..2 {
            let mut arms = [(0.0, None); 2];
            for (side, sign) in [-1.0f64, 1.0].into_iter().enumerate() {
                let (jx, jy) = if dim == 0 {
                    (ix as isize + sign as isize, iy as isize)
                } else {
                    (ix as isize, iy as isize + sign as isize)
                };
                let neighbor = if (0..n as isize).contains(&jx) && (0..n as isize).contains(&jy) {
                    index[jx as usize * n + jy as usize]
                } else {
                    usize::MAX
                };
                arms[side] = if neighbor != usize::MAX {
                    (h, Some(neighbor))
                } else {
                    let dir = if dim == 0 { [sign, 0.0] } else { [0.0, sign] };
                    let s = domain.boundary_distance(p, dir, h).unwrap_or(h);
                    (s.max(1e-6 * h), None)
                };
            }
            let (hm, hp) = (arms[0].0, arms[1].0);
            // −u'' ≈ −2/(hm+hp)·[(u₊ − u)/hp − (u − u₋)/hm]
            diag += 2.0 / (hm * hp);
            for (len, nb) in arms {
                if let Some(col) = nb {
                    triplets.push(Triplet::new(row, col, -2.0 / (len * (hm + hp))));
                }
            }
        }
        triplets.push(Triplet::new(row, row, diag));
        rhs[(row, 0)] = source(p[0], p[1]);
    }
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(nodes.len(), nodes.len(), &triplets)
        .map_err(|e| DatagenError::LinearSolve(format!("{e:?}")))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| DatagenError::LinearSolve(format!("{e:?}")))?;
    let mut sol = lu.solve(&rhs);
    // iterative refinement while the residual is above tolerance
    let bnorm = rhs.norm_l2();
    for _ in 0..2 {
        let resid = &rhs - &matrix * &sol;
        if resid.norm_l2() <= RESIDUAL_TOL * bnorm {
            break;
        }
        sol += lu.solve(&resid);
    }
    let resid = (&rhs - &matrix * &sol).norm_l2();
    if !(resid <= RESIDUAL_TOL * bnorm) {
        return Err(DatagenError::LinearSolve(format!("relative residual {:e}", resid / bnorm)));
    }

    let mut values = vec![f64::NAN; n * n];
    for (row, &(ix, iy)) in nodes.iter().enumerate() {
        values[ix * n + iy] = sol[(row, 0)];
    }
    Ok(GridSolution {
        axes: vec![axis.clone(), axis],
        values,
    })
}
