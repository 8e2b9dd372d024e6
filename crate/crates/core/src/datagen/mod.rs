//! Input-function sampling, reference solvers and dataset assembly.

pub mod build;
pub mod burgers;
pub mod darcy;
mod dataset;
pub mod diffusion_reaction;
pub mod grf;

pub use build::{build_dataset, DatasetSpec, Layout};
pub use burgers::solve_burgers;
pub use darcy::solve_darcy;
pub use dataset::{Dataset, ExampleId, PointKind};
pub use diffusion_reaction::{solve_diffusion_reaction, solve_diffusion_reaction_with_source};
pub use grf::{sample_grf_periodic_riesz, sample_grf_rbf, PeriodicField, RbfGrf};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error("unknown example id `{0}`")]
    UnknownExample(String),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("covariance factorization failed after jitter {0:e}")]
    FactorizationFailure(f64),
    #[error("Newton iteration diverged at time step {step} (update norm {update:e})")]
    NewtonDivergence { step: usize, update: f64 },
    #[error("time step violates the CFL bound (Courant number {0})")]
    CflViolation(f64),
    #[error("domain has too few interior grid nodes ({0})")]
    DegenerateDomain(usize),
    #[error("sparse solve failed: {0}")]
    LinearSolve(String),
}

/// Values on a tensor grid. `values` is row-major over `axes`, the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl GridSolution {
    /// Value at node `(i, j)` of a two-axis grid.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axes[1].len() + j]
    }

    /// Bilinear interpolation on a two-axis grid with ascending nodes.
    /// Non-finite node values count as zero. Points outside the grid are
    /// clamped to it.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let locate = |axis: &[f64], v: f64| -> (usize, f64) {
            let n = axis.len();
            let i = axis.partition_point(|&a| a <= v).clamp(1, n - 1) - 1;
            let w = ((v - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
            (i, w)
        };
        let (i, wx) = locate(&self.axes[0], x);
        let (j, wy) = locate(&self.axes[1], y);
        let v = |a: usize, b: usize| {
            let u = self.at(a, b);
            if u.is_finite() {
                u
            } else {
                0.0
            }
        };
        // exact node values when a weight vanishes
        let lo = if wy == 0.0 { v(i, j) } else { (1.0 - wy) * v(i, j) + wy * v(i, j + 1) };
        if wx == 0.0 {
            return lo;
        }
        let hi = if wy == 0.0 {
            v(i + 1, j)
        } else {
            (1.0 - wy) * v(i + 1, j) + wy * v(i + 1, j + 1)
        };
        (1.0 - wx) * lo + wx * hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSolution {
        let axes = vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 0.5, 1.0]];
        let values = (0..3)
            .flat_map(|i| (0..4).map(move |j| (i * 10 + j) as f64 + 0.125))
            .collect();
        GridSolution { axes, values }
    }

    #[test]
    fn nodes_are_reproduced_exactly() {
        let g = grid();
        for (i, &x) in g.axes[0].iter().enumerate() {
            for (j, &y) in g.axes[1].iter().enumerate() {
                assert_eq!(g.interpolate(x, y), g.at(i, j));
            }
        }
    }

    #[test]
    fn bilinear_between_nodes() {
        let g = grid();
        // a cell center takes the mean of the four corners
        let want = 0.25 * (g.at(0, 1) + g.at(0, 2) + g.at(1, 1) + g.at(1, 2));
        assert!((g.interpolate(0.25, 0.375) - want).abs() < 1e-14);
    }

    #[test]
    fn missing_values_count_as_zero() {
        let mut g = grid();
        g.values[0] = f64::NAN;
        assert_eq!(g.interpolate(0.0, 0.0), 0.0);
        assert!(g.interpolate(0.1, 0.1).is_finite());
    }
}
