//! Solvers for `-Δu = λ f(u)` on a ball with a radial boundary closure.

mod energy;
mod monotone;
mod newton;
mod shooting;

pub use energy::{energy, energy_constants, lambda_bar, EnergyConstants};
pub use monotone::{
    apply_k, monotone_iterate, monotone_iterate_with, MonotoneOptions, MonotoneOutcome,
};
pub use newton::{newton_refine, newton_refine_with, NewtonOptions, DEFLATION_SHIFT};
pub use shooting::{
    boundary_mismatch, find_radial_solutions, find_radial_solutions_with, has_admitted_solution,
    shoot, shoot_with, ScanConfig, ShootError,
};

use serde::Serialize;
use thiserror::Error;

use crate::discretization::{BoundaryKind, DiscreteOperator, DiscretizationError, Grid};
use crate::expr::EvalError;
use crate::nonlinearity::Reaction;
use crate::quadrature::QuadratureError;

/// Distance from `alpha` a sup-norm must keep to count as a nontrivial solution.
pub const ADMIT_MARGIN: f64 = 1e-6;
/// Profiles whose minimum is below this are discarded as sign-changing.
pub const NONNEG_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error("iteration limit {iterations} reached (last increment {increment:e})")]
    IterationLimit { iterations: usize, increment: f64 },
    #[error("newton stalled after {iterations} iterations at residual {residual:e}: {reason}")]
    NewtonStalled {
        iterations: usize,
        residual: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Monotone,
    Shooting,
    Newton,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Monotone => "monotone",
            Source::Shooting => "shooting",
            Source::Newton => "newton",
        }
    }
}

/// A radial solution sampled at increasing radii from 0 to R.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionProfile {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `u'(r)` at the nodes, when the producer knows it.
    pub slopes: Option<Vec<f64>>,
    pub source: Source,
    pub sup_norm: f64,
    pub min_value: f64,
    /// `beta - sup_norm`, computed without cancellation when possible.
    pub beta_gap: f64,
    /// Boundary mismatch for shooting, discrete residual sup-norm otherwise.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SolutionProfile {
    pub fn center_value(&self) -> f64 {
        self.values[0]
    }

    pub fn boundary_value(&self) -> f64 {
        *self.values.last().expect("profile is never empty")
    }

    pub fn boundary_slope(&self) -> Option<f64> {
        self.slopes.as_ref().and_then(|s| s.last().copied())
    }

    /// Sup-norm strictly inside `(alpha, beta)`: `alpha` with a `1e-6` margin,
    /// `beta` by the certified gap.
    pub fn in_oab(&self, alpha: f64) -> bool {
        self.sup_norm > alpha + ADMIT_MARGIN && self.beta_gap > 0.0 && self.min_value >= NONNEG_TOL
    }

    /// Builds a profile from grid values; `beta` is the reaction's upper zero.
    pub fn from_grid(grid: &Grid, values: Vec<f64>, beta: f64, source: Source) -> SolutionProfile {
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        SolutionProfile {
            nodes: grid.nodes.clone(),
            values,
            slopes: None,
            source,
            sup_norm: sup,
            min_value: min,
            beta_gap: beta - sup,
            residual: f64::NAN,
            converged: false,
            iterations: 0,
        }
    }

    /// Values at the grid nodes. Uses cubic Hermite interpolation when slopes
    /// are known and linear interpolation otherwise.
    pub fn sample_on(&self, grid: &Grid) -> Vec<f64> {
        if self.nodes.len() == grid.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&grid.nodes)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * grid.domain.radius)
        {
            return self.values.clone();
        }
        grid.nodes.iter().map(|&r| self.value_at(r)).collect()
    }

    /// Interpolated value at radius `r` (clamped to the profile's range).
    pub fn value_at(&self, r: f64) -> f64 {
        let m = self.nodes.len();
        let r_max = self.nodes[m - 1];
        if r <= 0.0 {
            return self.values[0];
        }
        if r >= r_max {
            return self.values[m - 1];
        }
        // Nodes are uniform for every producer in this crate.
        let h = r_max / (m - 1) as f64;
        let mut k = ((r / h).floor() as usize).min(m - 2);
        while k > 0 && self.nodes[k] > r {
            k -= 1;
        }
        while k + 2 < m && self.nodes[k + 1] < r {
            k += 1;
        }
        let (r0, r1) = (self.nodes[k], self.nodes[k + 1]);
        let dh = r1 - r0;
        let t = (r - r0) / dh;
        let (u0, u1) = (self.values[k], self.values[k + 1]);
        match &self.slopes {
            Some(s) => {
                let (m0, m1) = (s[k] * dh, s[k + 1] * dh);
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * u0
                    + (t3 - 2.0 * t2 + t) * m0
                    + (-2.0 * t3 + 3.0 * t2) * u1
                    + (t3 - t2) * m1
            }
            None => u0 + t * (u1 - u0),
        }
    }
}

/// Sup-norm of the discrete residual `A u - λ f(u)` with the boundary row.
///
/// The Dirichlet row contributes `|u_n|`.
pub fn discrete_residual<R: Reaction + ?Sized>(
    op: &DiscreteOperator,
    reaction: &R,
    lambda: f64,
    u: &[f64],
) -> Result<f64, SolverError> {
    let au = op.apply(u)?;
    let free = op.free_len();
    let mut worst = 0.0f64;
    for i in 0..free {
        worst = worst.max((au[i] - lambda * reaction.value(u[i])?).abs());
    }
    if op.bc.is_dirichlet() {
        worst = worst.max(u[u.len() - 1].abs());
    }
    Ok(worst)
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), SolverError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidParameter(format!(
            "lambda = {lambda} must be positive and finite"
        )))
    }
}

pub(crate) fn check_bc(bc: BoundaryKind) -> Result<(), SolverError> {
    bc.validate().map_err(SolverError::from)
}

/// Sup-norm distance between two equally sized vectors.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
