//! Monotone iteration from the constant supersolution `beta`.

use super::{check_bc, check_lambda, discrete_residual, SolutionProfile, SolverError, Source};
use crate::discretization::{radial_laplacian, BoundaryKind, Grid};
use crate::nonlinearity::{Nonlinearity, Reaction};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneOptions {
    pub max_iter: usize,
    /// Stop when the sup-norm increment falls below this.
    pub tol: f64,
    /// Keep every `k`-th iterate (and the last one).
    pub trace_stride: Option<usize>,
    /// Abort as soon as an iterate dips below this value somewhere.
    pub stop_below: Option<f64>,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions {
            max_iter: 100_000,
            tol: 1e-9,
            trace_stride: None,
            stop_below: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonotoneOutcome {
    pub profile: SolutionProfile,
    pub trace: Vec<Vec<f64>>,
    /// Set when `stop_below` triggered; the profile is then the last iterate.
    pub dipped_below: bool,
}

fn effective_shift(nl: &Nonlinearity, lambda: f64) -> f64 {
    // Any M works when f is already nondecreasing; keep the operator invertible.
    let m = if nl.shift_m() > 0.0 {
        nl.shift_m()
    } else {
        1.0
    };
    lambda * m
}

/// One application of `K`: solves `(-Δ + λM) w2 = λ f(w1) + λ M w1`.
pub fn apply_k(
    nl: &Nonlinearity,
    lambda: f64,
    w1: &[f64],
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<Vec<f64>, SolverError> {
    check_lambda(lambda)?;
    check_bc(bc)?;
    let c = effective_shift(nl, lambda);
    let op = radial_laplacian(grid, c, bc)?;
    let mut rhs = Vec::with_capacity(w1.len());
    for &w in w1 {
        rhs.push(lambda * nl.value(w)? + c * w);
    }
    if bc.is_dirichlet() {
        if let Some(last) = rhs.last_mut() {
            *last = 0.0;
        }
    }
    Ok(op.solve(&rhs)?)
}

/// The maximal solution below `beta`, as the limit of `K^k(beta)`.
pub fn monotone_iterate(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<SolutionProfile, SolverError> {
    Ok(monotone_iterate_with(nl, lambda, grid, bc, &MonotoneOptions::default())?.profile)
}

pub fn monotone_iterate_with(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
    opts: &MonotoneOptions,
) -> Result<MonotoneOutcome, SolverError> {
    check_lambda(lambda)?;
    check_bc(bc)?;
    let c = effective_shift(nl, lambda);
    let op = radial_laplacian(grid, c, bc)?;
    let factored = op.matrix.factor()?;
    let beta = nl.beta();
    let len = grid.len();
    let mut u = vec![beta; len];
    let mut rhs = vec![0.0; len];
    let mut trace = Vec::new();
    if opts.trace_stride.is_some() {
        trace.push(u.clone());
    }
    let mut increment = f64::INFINITY;
    for k in 1..=opts.max_iter {
        for i in 0..len {
            rhs[i] = lambda * nl.value(u[i])? + c * u[i];
        }
        if bc.is_dirichlet() {
            rhs[len - 1] = 0.0;
        }
        let next = factored.solve(&rhs);
        increment = super::sup_distance(&next, &u);
        u = next;
        let done = increment < opts.tol;
        if let Some(stride) = opts.trace_stride {
            if done || k % stride.max(1) == 0 {
                trace.push(u.clone());
            }
        }
        if let Some(floor) = opts.stop_below {
            if u.iter().any(|&v| v < floor) {
                let mut profile = SolutionProfile::from_grid(grid, u, beta, Source::Monotone);
                profile.iterations = k;
                return Ok(MonotoneOutcome {
                    profile,
                    trace,
                    dipped_below: true,
                });
            }
        }
        if done {
            let op0 = radial_laplacian(grid, 0.0, bc)?;
            let residual = discrete_residual(&op0, nl, lambda, &u)?;
            let mut profile = SolutionProfile::from_grid(grid, u, beta, Source::Monotone);
            profile.residual = residual;
            profile.converged = true;
            profile.iterations = k;
            return Ok(MonotoneOutcome {
                profile,
                trace,
                dipped_below: false,
            });
        }
    }
    Err(SolverError::IterationLimit {
        iterations: opts.max_iter,
        increment,
    })
}
