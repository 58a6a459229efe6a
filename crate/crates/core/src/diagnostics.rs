//! Independent checks on computed solutions: the radial Pohozaev identity,
//! the harmonic extension of a ball solution into a subsolution, ordering of
//! monotone iterates, and the Neumann compatibility integral.

use serde::Serialize;
use thiserror::Error;

use crate::discretization::{BoundaryKind, DiscretizationError, Grid, RadialDomain};
use crate::expr::EvalError;
use crate::nonlinearity::{Nonlinearity, Reaction, ShiftedReaction};
use crate::quadrature::QuadratureError;
use crate::solvers::{find_radial_solutions_with, ScanConfig, SolutionProfile, SolverError};

/// Boundary values above this are not Dirichlet profiles.
pub const DIRICHLET_TOL: f64 = 1e-6;
/// Slack allowed by [`comparison_check`].
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("profile is not a Dirichlet solution (boundary value {boundary_value:e})")]
    NotDirichlet { boundary_value: f64 },
    #[error("profile carries no boundary slope")]
    MissingSlope,
    #[error("no inner solution for lambda = {lambda}, eps = {eps}, R1 = {r1}")]
    NoInnerSolution { lambda: f64, eps: f64, r1: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

fn check_eps(nl: &Nonlinearity, eps: f64) -> Result<(), DiagnosticsError> {
    if eps > 0.0 && eps < nl.beta() - nl.alpha() {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidParameter(format!(
            "eps = {eps} must lie in (0, beta - alpha)"
        )))
    }
}

/// Positive Dirichlet solutions of `-Δv = λ g(v)` with `g(v) = f~(v + beta - eps)`,
/// sorted by sup-norm.
pub fn solve_shifted_dirichlet(
    nl: &Nonlinearity,
    lambda: f64,
    domain: &RadialDomain,
    eps: f64,
    scan: &ScanConfig,
) -> Result<Vec<SolutionProfile>, DiagnosticsError> {
    check_eps(nl, eps)?;
    let g = ShiftedReaction::new(nl, eps);
    let all = find_radial_solutions_with(&g, lambda, domain, BoundaryKind::Dirichlet, scan)?;
    Ok(all.into_iter().filter(|p| p.sup_norm > 0.0).collect())
}

/// `G(s) = ∫_0^s g` at every entry of `values`, accumulated from the last
/// entry inward with 5-point Gauss-Legendre on each gap.
fn primitive_along<R: Reaction + ?Sized>(
    g: &R,
    values: &[f64],
) -> Result<Vec<f64>, DiagnosticsError> {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683,
        0.538_469_310_105_683,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let breaks = g.breakpoints();
    let piece = |a: f64, b: f64| -> Result<f64, EvalError> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut sum = 0.0;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            sum += w * g.value(mid + half * x)?;
        }
        Ok(half * sum)
    };
    let gauss = |a: f64, b: f64| -> Result<f64, EvalError> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut left = lo;
        for c in cuts.into_iter().chain([hi]) {
            total += piece(left, c)?;
            left = c;
        }
        Ok(if a <= b { total } else { -total })
    };
    let m = values.len();
    let mut out = vec![0.0; m];
    let mut acc = gauss(0.0, values[m - 1])?;
    out[m - 1] = acc;
    for j in (0..m - 1).rev() {
        acc += gauss(values[j + 1], values[j])?;
        out[j] = acc;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevReport {
    /// `v'(R)²`
    pub lhs: f64,
    /// `2 R^{-N} λ ∫_0^R r^{N-1} h(v(r)) dr`
    pub rhs: f64,
    pub rel_error: f64,
}

/// Both sides of the radial Pohozaev identity along a shifted Dirichlet profile.
///
/// `h(s) = N G(s) - (N-2)/2 s g(s)`; the integral uses the trapezoid rule on
/// the profile nodes.
pub fn pohozaev_check(
    nl: &Nonlinearity,
    lambda: f64,
    domain: &RadialDomain,
    v: &SolutionProfile,
    eps: f64,
) -> Result<PohozaevReport, DiagnosticsError> {
    check_eps(nl, eps)?;
    let boundary_value = v.boundary_value();
    if boundary_value.abs() > DIRICHLET_TOL {
        return Err(DiagnosticsError::NotDirichlet { boundary_value });
    }
    let slope = match v.boundary_slope() {
        Some(s) => s,
        None if v.values.iter().all(|&x| x == 0.0) => 0.0,
        None => return Err(DiagnosticsError::MissingSlope),
    };
    let g = ShiftedReaction::new(nl, eps);
    let n = domain.dim as f64;
    let big_g = primitive_along(&g, &v.values)?;
    let integrand = v
        .nodes
        .iter()
        .zip(&v.values)
        .zip(&big_g)
        .map(|((&r, &s), &gs)| {
            let h = n * gs - 0.5 * (n - 2.0) * s * g.value(s)?;
            Ok(r.powi(domain.dim as i32 - 1) * h)
        })
        .collect::<Result<Vec<f64>, DiagnosticsError>>()?;
    let integral: f64 = integrand
        .windows(2)
        .zip(v.nodes.windows(2))
        .map(|(y, x)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum();
    let lhs = slope * slope;
    let rhs = 2.0 * domain.radius.powi(-(domain.dim as i32)) * lambda * integral;
    Ok(PohozaevReport {
        lhs,
        rhs,
        rel_error: (lhs - rhs).abs() / lhs.abs().max(1e-14),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `log(r / R1)`, for `N = 2`.
    Log,
    /// `r^{2-N}`, for `N >= 3`.
    Power,
}

/// `w_λ` on `B_{R1}`, continued harmonically to `R2` and constant beyond.
#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionProfile {
    pub r1: f64,
    pub r2: f64,
    pub epsilon: f64,
    pub dim: usize,
    /// Anchor value `beta - eps` at `R1`.
    pub base: f64,
    /// The inner solution in the original variable `w = v + beta - eps`.
    #[serde(skip)]
    pub inner: SolutionProfile,
    pub extension: Extension,
    pub slope_r1: f64,
    pub tail_value: f64,
}

impl SubsolutionProfile {
    /// The harmonic piece on `[R1, R2]`.
    fn harmonic(&self, r: f64) -> f64 {
        match self.extension {
            Extension::Log => self.base + self.r1 * self.slope_r1 * (r / self.r1).ln(),
            Extension::Power => {
                let p = 2 - self.dim as i32;
                self.base
                    + self.slope_r1 * self.r1.powi(self.dim as i32 - 1) / f64::from(p)
                        * (r.powi(p) - self.r1.powi(p))
            }
        }
    }

    pub fn value_at(&self, r: f64) -> f64 {
        if r <= self.r1 {
            self.inner.value_at(r)
        } else if r <= self.r2 {
            self.harmonic(r)
        } else {
            self.tail_value
        }
    }

    /// `|w(R1⁻) - w(R1⁺)|`
    pub fn continuity_gap(&self) -> f64 {
        (self.inner.boundary_value() - self.base).abs()
    }

    /// Sup of a conservative radial Laplacian of the extension at `samples`
    /// interior points of `(R1, R2)`. Face conductances are `1 / ∫ s^{1-N} ds`,
    /// so radial harmonics are reproduced up to rounding.
    pub fn extension_laplacian_sup(&self, samples: usize) -> f64 {
        let h = (self.r2 - self.r1) / (samples + 1) as f64;
        let dim = self.dim as i32;
        let inv_face = |a: f64, b: f64| {
            if dim == 2 {
                (b / a).ln()
            } else {
                (b.powi(2 - dim) - a.powi(2 - dim)) / f64::from(2 - dim)
            }
        };
        (1..=samples)
            .map(|k| {
                let r = self.r1 + h * k as f64;
                let flux = (self.harmonic(r + h) - self.harmonic(r)) / inv_face(r, r + h)
                    - (self.harmonic(r) - self.harmonic(r - h)) / inv_face(r - h, r);
                let vol = ((r + 0.5 * h).powi(dim) - (r - 0.5 * h).powi(dim)) / f64::from(dim);
                (flux / vol).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the extended subsolution from the largest shifted Dirichlet solution on `B_{R1}`.
pub fn build_subsolution(
    nl: &Nonlinearity,
    lambda: f64,
    eps: f64,
    r1: f64,
    r2: f64,
    dim: usize,
    scan: &ScanConfig,
) -> Result<SubsolutionProfile, DiagnosticsError> {
    if dim < 2 {
        return Err(DiagnosticsError::InvalidParameter(
            "the extension needs N >= 2".into(),
        ));
    }
    if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
        return Err(DiagnosticsError::InvalidParameter(format!(
            "need 0 < R1 < R2, got {r1}, {r2}"
        )));
    }
    let domain = RadialDomain::new(dim, r1).map_err(SolverError::from)?;
    let sols = solve_shifted_dirichlet(nl, lambda, &domain, eps, scan)?;
    let v = sols
        .into_iter()
        .next_back()
        .ok_or(DiagnosticsError::NoInnerSolution { lambda, eps, r1 })?;
    let slope_r1 = v.boundary_slope().ok_or(DiagnosticsError::MissingSlope)?;
    let base = nl.beta() - eps;
    let mut inner = v;
    for x in &mut inner.values {
        *x += base;
    }
    inner.sup_norm += base;
    inner.min_value += base;
    let mut profile = SubsolutionProfile {
        r1,
        r2,
        epsilon: eps,
        dim,
        base,
        inner,
        extension: if dim == 2 {
            Extension::Log
        } else {
            Extension::Power
        },
        slope_r1,
        tail_value: 0.0,
    };
    profile.tail_value = profile.harmonic(r2);
    Ok(profile)
}

/// `½ (R1/R2)^{N-1} w'(R1) + γ (beta - eps) < 0`.
pub fn robin_subsolution_slope_test(profile: &SubsolutionProfile, gamma: f64) -> bool {
    let ratio = (profile.r1 / profile.r2).powi(profile.dim as i32 - 1);
    0.5 * ratio * profile.slope_r1 + gamma * profile.base < 0.0
}

/// Whether consecutive vectors are ordered the same way throughout, within `1e-9`.
pub fn comparison_check(seq: &[Vec<f64>]) -> bool {
    let ordered = |up: bool| {
        seq.windows(2).all(|w| {
            w[0].len() == w[1].len()
                && w[0].iter().zip(&w[1]).all(|(a, b)| {
                    if up {
                        *b >= a - ORDER_TOL
                    } else {
                        *b <= a + ORDER_TOL
                    }
                })
        })
    };
    ordered(false) || ordered(true)
}

/// `∫_Ω f~(u)` by the grid quadrature.
pub fn neumann_compatibility(
    nl: &Nonlinearity,
    u: &[f64],
    grid: &Grid,
) -> Result<f64, DiagnosticsError> {
    let t = if nl.is_truncated() {
        nl.clone()
    } else {
        nl.truncate()
    };
    let values = u
        .iter()
        .map(|&s| t.value(s))
        .collect::<Result<Vec<f64>, EvalError>>()?;
    Ok(grid.integrate(&values)?)
}
