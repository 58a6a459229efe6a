//! Radial finite differences on `[0, R]` for `-Δu + c u`.
//!
//! The center row uses the symmetric limit `-2N (u_1 - u_0) / h^2`. A Robin
//! condition `u'(R) + γ u(R) = 0` is closed with a ghost node; Dirichlet pins
//! the last node to zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_N: usize = 1024;
pub const MIN_N: usize = 16;
/// Relative pivot threshold for the tridiagonal solve.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizationError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("singular operator")]
    SingularOperator,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    pub dim: usize,
    pub radius: f64,
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

impl RadialDomain {
    pub fn new(dim: usize, radius: f64) -> Result<RadialDomain, DiscretizationError> {
        if dim == 0 {
            return Err(DiscretizationError::InvalidDomain(
                "dimension must be at least 1".into(),
            ));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(DiscretizationError::InvalidDomain(format!(
                "radius {radius} is not positive"
            )));
        }
        Ok(RadialDomain { dim, radius })
    }

    /// `|Ω|`; the interval `(-R, R)` when `N = 1`.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim) * self.radius.powi(self.dim as i32)
    }

    /// `|∂Ω|`; two points when `N = 1`.
    pub fn boundary_measure(&self) -> f64 {
        self.dim as f64 * unit_ball_volume(self.dim) * self.radius.powi(self.dim as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Robin(f64),
    Neumann,
    Dirichlet,
}

impl BoundaryKind {
    /// The Robin coefficient; `None` stands for Dirichlet.
    pub fn gamma(&self) -> Option<f64> {
        match *self {
            BoundaryKind::Robin(g) => Some(g),
            BoundaryKind::Neumann => Some(0.0),
            BoundaryKind::Dirichlet => None,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryKind::Dirichlet)
    }

    pub fn validate(&self) -> Result<(), DiscretizationError> {
        if let BoundaryKind::Robin(g) = *self {
            if !(g.is_finite() && g >= 0.0) {
                return Err(DiscretizationError::InvalidDomain(format!(
                    "gamma {g} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform nodes `r_i = i R / n` with quadrature weights for radial functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: RadialDomain,
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn new(domain: RadialDomain, n: usize) -> Result<Grid, DiscretizationError> {
        if n < MIN_N {
            return Err(DiscretizationError::InvalidGrid(format!(
                "n = {n} is below {MIN_N}"
            )));
        }
        let h = domain.radius / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let weights = hat_weights(domain, &nodes);
        Ok(Grid {
            domain,
            n,
            h,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `∫_Ω φ` for a radial φ given at the nodes.
    pub fn integrate(&self, values: &[f64]) -> Result<f64, DiscretizationError> {
        if values.len() != self.len() {
            return Err(DiscretizationError::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }
}

/// Weights `N ω_N ∫ r^{N-1} λ_i(r) dr` for the hat functions `λ_i`.
///
/// This integrates the piecewise-linear interpolant of φ against `r^{N-1}`
/// exactly, so constants integrate to `|Ω|` in every dimension.
fn hat_weights(domain: RadialDomain, nodes: &[f64]) -> Vec<f64> {
    let m = domain.dim as i32 - 1;
    let scale = domain.dim as f64 * unit_ball_volume(domain.dim);
    // ∫_a^b r^m (r - a) dr and ∫_a^b r^m (b - r) dr
    let rising = |a: f64, b: f64| {
        (b.powi(m + 2) - a.powi(m + 2)) / f64::from(m + 2)
            - a * (b.powi(m + 1) - a.powi(m + 1)) / f64::from(m + 1)
    };
    let falling = |a: f64, b: f64| {
        b * (b.powi(m + 1) - a.powi(m + 1)) / f64::from(m + 1)
            - (b.powi(m + 2) - a.powi(m + 2)) / f64::from(m + 2)
    };
    let n = nodes.len() - 1;
    let mut w = vec![0.0; n + 1];
    for k in 0..n {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let h = b - a;
        w[k] += falling(a, b) / h;
        w[k + 1] += rising(a, b) / h;
    }
    w.iter().map(|x| x * scale).collect()
}

/// Tridiagonal matrix stored by diagonals; `lower[0]` and `upper[m-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < m {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Adds `d[i]` to the diagonal.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    /// Thomas algorithm with a relative pivot check.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
        if rhs.len() != self.len() {
            return Err(DiscretizationError::LengthMismatch {
                expected: self.len(),
                got: rhs.len(),
            });
        }
        Ok(self.factor()?.solve(rhs))
    }

    /// LU factors for repeated solves with the same matrix.
    pub fn factor(&self) -> Result<FactoredTridiagonal, DiscretizationError> {
        let m = self.len();
        let scale = self
            .diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let mut c = vec![0.0; m];
        let mut pivots = vec![0.0; m];
        for i in 0..m {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * c[i - 1]
            };
            if pivot.abs() < tol {
                return Err(DiscretizationError::SingularOperator);
            }
            pivots[i] = pivot;
            c[i] = if i + 1 < m {
                self.upper[i] / pivot
            } else {
                0.0
            };
        }
        Ok(FactoredTridiagonal {
            lower: self.lower.clone(),
            c,
            pivots,
        })
    }

    /// Positive weights `d` with `d_i a_{i,i+1} = d_{i+1} a_{i+1,i}`.
    ///
    /// Requires off-diagonal products to be positive.
    pub fn symmetrizer(&self) -> Vec<f64> {
        let m = self.len();
        let mut d = vec![1.0; m];
        for i in 0..m - 1 {
            d[i + 1] = d[i] * self.upper[i] / self.lower[i + 1];
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredTridiagonal {
    lower: Vec<f64>,
    c: Vec<f64>,
    pivots: Vec<f64>,
}

impl FactoredTridiagonal {
    /// Solves with a right-hand side of matching length.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.pivots.len();
        let mut d = vec![0.0; m];
        d[0] = rhs[0] / self.pivots[0];
        for i in 1..m {
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / self.pivots[i];
        }
        for i in (0..m - 1).rev() {
            d[i] -= self.c[i] * d[i + 1];
        }
        d
    }
}

/// `-Δ + c` on a grid with boundary closure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub matrix: Tridiagonal,
    pub c: f64,
    pub bc: BoundaryKind,
    pub grid: Grid,
}

/// `∫ r^{N-1}` over the control volume of node `i`.
fn cell_volume(dim: usize, a: f64, b: f64) -> f64 {
    (b.powi(dim as i32) - a.max(0.0).powi(dim as i32)) / dim as f64
}

/// Assembles `-Δ + c` on `grid` with the given boundary condition.
///
/// Rows are fluxes through the faces `r_{i±1/2}` divided by the exact cell
/// volume. This is exact on quadratics, gives the `-2N (u_1 - u_0)/h^2`
/// center row, and for `N = 1` coincides with the ghost-node Robin row.
pub fn radial_laplacian(
    grid: &Grid,
    c: f64,
    bc: BoundaryKind,
) -> Result<DiscreteOperator, DiscretizationError> {
    bc.validate()?;
    if !c.is_finite() {
        return Err(DiscretizationError::InvalidGrid(format!(
            "shift c = {c} is not finite"
        )));
    }
    let n = grid.n;
    let dim = grid.domain.dim;
    let h = grid.h;
    let face = |r: f64| r.powi(dim as i32 - 1) / h;
    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];

    for i in 0..n {
        let r = grid.nodes[i];
        let vol = cell_volume(dim, r - 0.5 * h, r + 0.5 * h);
        let right = face(r + 0.5 * h) / vol;
        let left = if i == 0 { 0.0 } else { face(r - 0.5 * h) / vol };
        lower[i] = -left;
        upper[i] = -right;
        diag[i] = left + right + c;
    }
    match bc {
        BoundaryKind::Dirichlet => {
            diag[n] = 1.0;
        }
        _ => {
            let gamma = bc.gamma().unwrap_or(0.0);
            let r_end = grid.domain.radius;
            let vol = cell_volume(dim, r_end - 0.5 * h, r_end);
            let left = face(r_end - 0.5 * h) / vol;
            lower[n] = -left;
            diag[n] = left + gamma * r_end.powi(dim as i32 - 1) / vol + c;
        }
    }
    Ok(DiscreteOperator {
        matrix: Tridiagonal { lower, diag, upper },
        c,
        bc,
        grid: grid.clone(),
    })
}

impl DiscreteOperator {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
        self.check_len(x.len())?;
        Ok(self.matrix.apply(x))
    }

    fn check_len(&self, got: usize) -> Result<(), DiscretizationError> {
        if got != self.matrix.len() {
            return Err(DiscretizationError::LengthMismatch {
                expected: self.matrix.len(),
                got,
            });
        }
        Ok(())
    }

    /// Solves `op x = rhs`. For Dirichlet the last row reads `x_n = rhs_n`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
        self.check_len(rhs.len())?;
        if matches!(self.bc, BoundaryKind::Neumann | BoundaryKind::Robin(0.0)) && self.c == 0.0 {
            return Err(DiscretizationError::SingularOperator);
        }
        let lu = self.matrix.factor()?;
        let mut x = lu.solve(rhs);
        // Refinement steps; kept only while the residual shrinks.
        let mut res = sup_residual(&self.matrix, &x, rhs);
        for _ in 0..3 {
            let r: Vec<f64> = self
                .matrix
                .apply(&x)
                .iter()
                .zip(rhs)
                .map(|(a, b)| b - a)
                .collect();
            let dx = lu.solve(&r);
            let y: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let next = sup_residual(&self.matrix, &y, rhs);
            if next >= res {
                break;
            }
            x = y;
            res = next;
        }
        Ok(x)
    }

    /// Number of unknowns that are not pinned by a Dirichlet row.
    pub fn free_len(&self) -> usize {
        if self.bc.is_dirichlet() {
            self.matrix.len() - 1
        } else {
            self.matrix.len()
        }
    }

    /// The block acting on the free unknowns.
    pub fn free_block(&self) -> Tridiagonal {
        let m = self.free_len();
        let mut t = Tridiagonal {
            lower: self.matrix.lower[..m].to_vec(),
            diag: self.matrix.diag[..m].to_vec(),
            upper: self.matrix.upper[..m].to_vec(),
        };
        t.upper[m - 1] = 0.0;
        t
    }
}

fn sup_residual(m: &Tridiagonal, x: &[f64], rhs: &[f64]) -> f64 {
    m.apply(x)
        .iter()
        .zip(rhs)
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Free-function form of [`DiscreteOperator::solve`].
pub fn solve_tridiagonal(
    op: &DiscreteOperator,
    rhs: &[f64],
) -> Result<Vec<f64>, DiscretizationError> {
    op.solve(rhs)
}
