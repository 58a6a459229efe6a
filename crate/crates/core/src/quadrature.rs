//! Composite Simpson quadrature with global halving.

use thiserror::Error;

use crate::expr::EvalError;

pub const ABS_TOL: f64 = 1e-10;
pub const REL_TOL: f64 = 1e-8;
pub const MAX_HALVINGS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge after {MAX_HALVINGS} halvings")]
    NotConverged,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integrates `f` over `[a, b]` (either orientation) to the default tolerances.
pub fn simpson<F>(f: F, a: f64, b: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    if a == b {
        return Ok(0.0);
    }
    let width = b - a;
    let fa = f(a)?;
    let fb = f(b)?;
    // Running sums of interior odd/even samples.
    let mut panels = 2usize;
    let mut even_sum = 0.0;
    let mut odd_sum = f(a + 0.5 * width)?;
    let mut prev = width / 6.0 * (fa + fb + 4.0 * odd_sum);
    for _ in 0..MAX_HALVINGS {
        panels *= 2;
        even_sum += odd_sum;
        let h = width / panels as f64;
        let mut s = 0.0;
        for k in 0..panels / 2 {
            s += f(a + (2 * k + 1) as f64 * h)?;
        }
        odd_sum = s;
        let est = h / 3.0 * (fa + fb + 4.0 * odd_sum + 2.0 * even_sum);
        let diff = (est - prev).abs();
        if diff <= ABS_TOL || diff <= REL_TOL * est.abs() {
            return Ok(est);
        }
        prev = est;
    }
    Err(QuadratureError::NotConverged)
}
