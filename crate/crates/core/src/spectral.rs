//! First eigenvalue of the linearization `-Δ - V` with `V = λ f'(u)`.
//!
//! The radial operator is similar to a symmetric tridiagonal matrix, so its
//! spectrum is real and Sturm counts of the LU pivots locate `μ₁`. The shift
//! found that way drives an inverse power iteration for the eigenvector.

use serde::Serialize;
use thiserror::Error;

use crate::discretization::{
    radial_laplacian, BoundaryKind, DiscretizationError, Grid, Tridiagonal,
};
use crate::expr::EvalError;
use crate::nonlinearity::Reaction;
use crate::solvers::SolutionProfile;

pub const MAX_ITER: usize = 10_000;
/// Eigenvalue increment that ends the power iteration.
pub const EIG_TOL: f64 = 1e-10;
/// Sup-norm of `Lφ - μ₁φ` required on top of the increment test.
pub const RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("inverse iteration stalled after {iterations} iterations (increment {increment:e}, residual {residual:e})")]
    PowerIterationStalled {
        iterations: usize,
        increment: f64,
        residual: f64,
    },
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityIndex {
    pub mu1: f64,
    /// Grid values, positive, with `∫ φ² = 1`. Zero on a Dirichlet boundary node.
    pub eigenvector: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm of `Lφ - μ₁φ` on the free unknowns.
    pub residual: f64,
}

impl StabilityIndex {
    /// `+1`, `-1` or `0` for `μ₁` above, below or within `tol` of zero.
    pub fn sign(&self, tol: f64) -> i8 {
        if self.mu1 > tol {
            1
        } else if self.mu1 < -tol {
            -1
        } else {
            0
        }
    }
}

/// The matrix `A - diag(V)` restricted to the free unknowns.
fn linearized(
    grid: &Grid,
    bc: BoundaryKind,
    potential: &[f64],
) -> Result<Tridiagonal, SpectralError> {
    if potential.len() != grid.len() {
        return Err(DiscretizationError::LengthMismatch {
            expected: grid.len(),
            got: potential.len(),
        }
        .into());
    }
    let mut t = radial_laplacian(grid, 0.0, bc)?.free_block();
    let neg: Vec<f64> = potential[..t.len()].iter().map(|v| -v).collect();
    t.add_diagonal(&neg);
    Ok(t)
}

/// Number of eigenvalues below `x`, from the signs of the pivots of `T - x`.
fn sturm_count(t: &Tridiagonal, x: f64, floor: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..t.len() {
        let coupling = if i == 0 {
            0.0
        } else {
            t.lower[i] * t.upper[i - 1] / q
        };
        q = t.diag[i] - x - coupling;
        if q.abs() < floor {
            q = -floor;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin bounds of the symmetric form.
fn gershgorin(t: &Tridiagonal) -> (f64, f64) {
    let m = t.len();
    let off = |i: usize| {
        if i == 0 || i >= m {
            0.0
        } else {
            (t.lower[i] * t.upper[i - 1]).abs().sqrt()
        }
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = off(i) + off(i + 1);
        lo = lo.min(t.diag[i] - r);
        hi = hi.max(t.diag[i] + r);
    }
    (lo, hi)
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// `⟨φ, Lφ⟩ / ⟨φ, φ⟩` in the inner product that makes `L = -Δ - V` self-adjoint.
pub fn rayleigh_quotient(
    grid: &Grid,
    bc: BoundaryKind,
    potential: &[f64],
    phi: &[f64],
) -> Result<f64, SpectralError> {
    let t = linearized(grid, bc, potential)?;
    if phi.len() != grid.len() {
        return Err(DiscretizationError::LengthMismatch {
            expected: grid.len(),
            got: phi.len(),
        }
        .into());
    }
    let x = &phi[..t.len()];
    let w: Vec<f64> = t.symmetrizer().iter().map(|d| d * d).collect();
    Ok(weighted_dot(&w, x, &t.apply(x)) / weighted_dot(&w, x, x))
}

/// `μ₁` of `-Δ - V` for a given potential on the grid.
pub fn mu1_potential(
    grid: &Grid,
    bc: BoundaryKind,
    potential: &[f64],
) -> Result<StabilityIndex, SpectralError> {
    let t = linearized(grid, bc, potential)?;
    let m = t.len();
    let w: Vec<f64> = t.symmetrizer().iter().map(|d| d * d).collect();
    let (mut lo, mut hi) = gershgorin(&t);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let floor = f64::EPSILON * scale;
    // Bisect until the bracket [lo, hi] holding μ₁ is tight.
    for _ in 0..200 {
        if hi - lo <= 1e-13 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count(&t, mid, floor) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Just below μ₁ the shifted matrix is positive definite and nearly singular.
    let shift = lo - 1e-9 * scale;
    let mut shifted = t.clone();
    shifted.add_diagonal(&vec![-shift; m]);
    let factored = shifted.factor()?;

    let mut x = vec![1.0; m];
    let mut mu = f64::INFINITY;
    let mut increment = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let mut y = factored.solve(&x);
        let norm = weighted_dot(&w, &y, &y).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let ty = t.apply(&y);
        let next = weighted_dot(&w, &y, &ty);
        increment = (next - mu).abs();
        residual = ty
            .iter()
            .zip(&y)
            .fold(0.0f64, |r, (a, b)| r.max((a - next * b).abs()));
        mu = next;
        x = y;
        if increment < EIG_TOL * mu.abs().max(1.0) && residual < RESIDUAL_TOL * mu.abs().max(1.0) {
            return finish(grid, x, mu, it, residual);
        }
    }
    Err(SpectralError::PowerIterationStalled {
        iterations: MAX_ITER,
        increment,
        residual,
    })
}

fn finish(
    grid: &Grid,
    x: Vec<f64>,
    mu: f64,
    iterations: usize,
    residual: f64,
) -> Result<StabilityIndex, SpectralError> {
    let mut phi = x;
    phi.resize(grid.len(), 0.0);
    let sq: Vec<f64> = phi.iter().map(|v| v * v).collect();
    let norm = grid.integrate(&sq)?.sqrt();
    let sign = if phi.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    phi.iter_mut().for_each(|v| *v *= sign / norm);
    Ok(StabilityIndex {
        mu1: mu,
        eigenvector: phi,
        converged: true,
        iterations,
        residual,
    })
}

/// `μ₁(γ, λ f'(u))` for a solution profile, sampled onto `grid`.
pub fn mu1<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    profile: &SolutionProfile,
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<StabilityIndex, SpectralError> {
    let u = profile.sample_on(grid);
    mu1_values(reaction, lambda, &u, grid, bc)
}

/// As [`mu1`], for values already on the grid.
pub fn mu1_values<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    u: &[f64],
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<StabilityIndex, SpectralError> {
    let potential = u
        .iter()
        .map(|&s| reaction.derivative(s).map(|d| lambda * d))
        .collect::<Result<Vec<f64>, EvalError>>()?;
    mu1_potential(grid, bc, &potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::RadialDomain;
    use crate::nonlinearity::from_source;

    fn grid(dim: usize, n: usize) -> Grid {
        Grid::new(RadialDomain::new(dim, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn neumann_constant_potential_shifts() {
        for dim in 1..=3 {
            let g = grid(dim, 256);
            let s = mu1_potential(&g, BoundaryKind::Neumann, &vec![2.5; g.len()]).unwrap();
            assert!((s.mu1 + 2.5).abs() < 1e-8, "{}", s.mu1);
            assert!(s
                .eigenvector
                .iter()
                .all(|v| (v - s.eigenvector[0]).abs() < 1e-6));
        }
    }

    #[test]
    fn cubic_at_beta() {
        let nl = from_source("s*(s-1)*(3-s)", 1.0, 3.0, 0.0).unwrap();
        let g = grid(1, 256);
        let s = mu1_values(&nl, 1.0, &vec![3.0; g.len()], &g, BoundaryKind::Neumann).unwrap();
        assert!((s.mu1 - 6.0).abs() < 1e-8);
        let r = mu1_values(&nl, 1.0, &vec![3.0; g.len()], &g, BoundaryKind::Robin(1.0)).unwrap();
        assert!(r.mu1 > 6.0);
    }

    #[test]
    fn dirichlet_interval_matches_sine_mode() {
        // -φ'' = μφ on (-1, 1), φ(±1) = 0: μ = (π/2)².
        let g = grid(1, 512);
        let s = mu1_potential(&g, BoundaryKind::Dirichlet, &vec![0.0; g.len()]).unwrap();
        let exact = (std::f64::consts::PI / 2.0).powi(2);
        assert!((s.mu1 - exact).abs() < 1e-4, "{}", s.mu1);
        assert_eq!(*s.eigenvector.last().unwrap(), 0.0);
        let n = s.eigenvector.len();
        assert!(s.eigenvector[..n - 1].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn robin_interval_matches_transcendental_root() {
        // cos mode: k tan k = γ on (-1, 1).
        let gamma = 1.0;
        let (mut a, mut b) = (0.0f64, std::f64::consts::FRAC_PI_2 - 1e-12);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m * m.tan() < gamma {
                a = m;
            } else {
                b = m;
            }
        }
        let g = grid(1, 1024);
        let s = mu1_potential(&g, BoundaryKind::Robin(gamma), &vec![0.0; g.len()]).unwrap();
        assert!((s.mu1 - a * a).abs() < 1e-5, "{} vs {}", s.mu1, a * a);
    }

    #[test]
    fn eigenvector_is_normalized_and_reproduced() {
        let g = grid(2, 256);
        let v: Vec<f64> = g.nodes.iter().map(|r| 5.0 * (1.0 - r * r)).collect();
        let s = mu1_potential(&g, BoundaryKind::Robin(2.0), &v).unwrap();
        let sq: Vec<f64> = s.eigenvector.iter().map(|x| x * x).collect();
        assert!((g.integrate(&sq).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.residual < 1e-7);
        assert!(s.eigenvector.iter().all(|&x| x > 0.0));
    }
}
