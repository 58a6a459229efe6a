//! Damped Newton on the discrete problem, optionally deflated.
//!
//! With known solutions `u_j` the merit is `‖F(u)‖ Π_j 1/(‖u - u_j‖² + η)`
//! and the Newton step is rescaled by the Sherman–Morrison factor of that
//! multiplier, which pushes iterates away from the `u_j`.

use super::{check_bc, check_lambda, SolutionProfile, SolverError, Source};
use crate::discretization::{radial_laplacian, BoundaryKind, DiscreteOperator, Grid};
use crate::nonlinearity::Nonlinearity;
use crate::nonlinearity::Reaction;

/// The `η` in the deflation multiplier.
pub const DEFLATION_SHIFT: f64 = 1e-4;
/// A converged iterate this close to a deflated solution counts as a failure.
const KNOWN_ROOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Residual target; raised to the round-off floor of the operator if needed.
    pub tol: f64,
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 100,
            tol: 1e-10,
            min_damping: 1e-10,
        }
    }
}

struct System<'a> {
    op: DiscreteOperator,
    nl: &'a Nonlinearity,
    lambda: f64,
}

impl System<'_> {
    fn residual(&self, u: &[f64]) -> Option<Vec<f64>> {
        let mut f = self.op.matrix.apply(u);
        let free = self.op.free_len();
        for i in 0..free {
            f[i] -= self.lambda * self.nl.value(u[i]).ok()?;
        }
        if f.iter().all(|v| v.is_finite()) {
            Some(f)
        } else {
            None
        }
    }

    fn row_norm(&self) -> f64 {
        let t = &self.op.matrix;
        (0..t.len())
            .map(|i| t.lower[i].abs() + t.diag[i].abs() + t.upper[i].abs())
            .fold(0.0, f64::max)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `(‖u - u_j‖, index of the max, sign of u - u_j there)`.
fn distance(u: &[f64], known: &[f64]) -> (f64, usize, f64) {
    let mut best = (0.0, 0, 0.0);
    for (i, (a, b)) in u.iter().zip(known).enumerate() {
        let d = (a - b).abs();
        if d > best.0 {
            best = (d, i, (a - b).signum());
        }
    }
    best
}

fn multiplier(u: &[f64], deflate: &[Vec<f64>]) -> f64 {
    deflate
        .iter()
        .map(|k| 1.0 / (distance(u, k).0.powi(2) + DEFLATION_SHIFT))
        .product()
}

pub fn newton_refine(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
    initial: &[f64],
    deflate: &[Vec<f64>],
) -> Result<SolutionProfile, SolverError> {
    newton_refine_with(
        nl,
        lambda,
        grid,
        bc,
        initial,
        deflate,
        &NewtonOptions::default(),
    )
}

pub fn newton_refine_with(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
    initial: &[f64],
    deflate: &[Vec<f64>],
    opts: &NewtonOptions,
) -> Result<SolutionProfile, SolverError> {
    check_lambda(lambda)?;
    check_bc(bc)?;
    if initial.len() != grid.len() || deflate.iter().any(|d| d.len() != grid.len()) {
        return Err(SolverError::InvalidParameter(
            "initial guess and deflated solutions must match the grid".into(),
        ));
    }
    let sys = System {
        op: radial_laplacian(grid, 0.0, bc)?,
        nl,
        lambda,
    };
    let row_norm = sys.row_norm();
    let free = sys.op.free_len();
    let mut u = initial.to_vec();
    let stalled = |iterations, residual, reason| SolverError::NewtonStalled {
        iterations,
        residual,
        reason,
    };
    let mut f = sys.residual(&u).ok_or(stalled(
        0,
        f64::NAN,
        "residual not finite at the initial guess",
    ))?;
    for it in 0..=opts.max_iter {
        let res = sup(&f);
        let floor = 64.0 * f64::EPSILON * row_norm * sup(&u).max(1.0);
        if res <= opts.tol.max(floor) {
            if deflate.iter().any(|k| distance(&u, k).0 < KNOWN_ROOT_TOL) {
                return Err(stalled(it, res, "converged to a deflated solution"));
            }
            let beta = nl.beta();
            let mut profile = SolutionProfile::from_grid(grid, u, beta, Source::Newton);
            profile.residual = res;
            profile.converged = true;
            profile.iterations = it;
            return Ok(profile);
        }
        if it == opts.max_iter {
            return Err(stalled(it, res, "iteration limit"));
        }
        let mut jac = sys.op.matrix.clone();
        let mut shift = vec![0.0; u.len()];
        for i in 0..free {
            shift[i] = -lambda * nl.derivative(u[i])?;
        }
        jac.add_diagonal(&shift);
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let mut delta = jac
            .solve(&neg_f)
            .map_err(|_| stalled(it, res, "singular Jacobian"))?;

        if !deflate.is_empty() {
            // d ln m / du · delta
            let mut g = 0.0;
            for k in deflate {
                let (d, idx, sign) = distance(&u, k);
                g -= 2.0 * d * sign * delta[idx] / (d * d + DEFLATION_SHIFT);
            }
            let mut denom = 1.0 - g;
            if denom.abs() < 1e-3 {
                denom = 1e-3f64.copysign(denom);
            }
            let tau = 1.0 / denom;
            for v in &mut delta {
                *v *= tau;
            }
        }

        let merit0 = multiplier(&u, deflate) * res;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            if let Some(ft) = sys.residual(&trial) {
                let merit = multiplier(&trial, deflate) * sup(&ft);
                if merit < (1.0 - 1e-4 * t) * merit0 {
                    u = trial;
                    f = ft;
                    break;
                }
            }
            t *= 0.5;
            if t < opts.min_damping {
                return Err(stalled(it, res, "line search failed"));
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}
