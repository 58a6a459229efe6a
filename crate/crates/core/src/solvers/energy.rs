//! The truncated energy `½∫|∇u|² + (γ/2)|∂Ω|u(R)² - λ∫F~(u)`.

use serde::Serialize;

use super::SolverError;
use crate::discretization::{BoundaryKind, DiscretizationError, Grid, RadialDomain};
use crate::nonlinearity::Nonlinearity;

/// Evaluates the energy of grid values `u`; `F~` is the primitive of the truncation.
pub fn energy(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
    u: &[f64],
) -> Result<f64, SolverError> {
    let len = grid.len();
    if u.len() != len {
        return Err(DiscretizationError::LengthMismatch {
            expected: len,
            got: u.len(),
        }
        .into());
    }
    let h = grid.h;
    let n = grid.n;
    let mut grad2 = vec![0.0; len];
    for i in 1..n {
        let d = (u[i + 1] - u[i - 1]) / (2.0 * h);
        grad2[i] = d * d;
    }
    let d_end = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    grad2[n] = d_end * d_end;
    let gradient = 0.5 * grid.integrate(&grad2)?;

    let boundary = match bc {
        BoundaryKind::Robin(gamma) => 0.5 * gamma * grid.domain.boundary_measure() * u[n] * u[n],
        _ => 0.0,
    };
    let mut potential = vec![0.0; len];
    for (p, &v) in potential.iter_mut().zip(u) {
        *p = nl.truncated_primitive(v)?;
    }
    Ok(gradient + boundary - lambda * grid.integrate(&potential)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyConstants {
    /// `β² |∂Ω| / 2`
    pub c1: f64,
    /// `|Ω| F~(β)`
    pub c2: f64,
}

pub fn energy_constants(
    nl: &Nonlinearity,
    domain: &RadialDomain,
) -> Result<EnergyConstants, SolverError> {
    let beta = nl.beta();
    Ok(EnergyConstants {
        c1: beta * beta * domain.boundary_measure() / 2.0,
        c2: domain.volume() * nl.truncated_primitive(beta)?,
    })
}

/// `λ̄ = C1 γ / C2`: above it the constant `β` has negative energy.
pub fn lambda_bar(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    gamma: f64,
) -> Result<f64, SolverError> {
    let k = energy_constants(nl, domain)?;
    Ok(k.c1 * gamma / k.c2)
}
