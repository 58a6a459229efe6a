//! Bistable nonlinearities `f` with certified zeros `alpha < beta`.
//!
//! A [`Nonlinearity`] is either the raw `f` or its truncation, which vanishes
//! outside `(alpha, beta)`. Solvers work against the [`Reaction`] trait so the
//! same machinery also drives shifted problems.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ExprError, Program};
use crate::quadrature::{self, QuadratureError};

/// Samples used for zero, positivity and Lipschitz checks.
pub const CHECK_SAMPLES: usize = 10_001;
pub const ZERO_TOL: f64 = 1e-10;
/// Below this distance from `beta` evaluation switches to a Taylor expansion.
pub const TAYLOR_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearityError {
    #[error(transparent)]
    Parse(#[from] ExprError),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("f({which}) = {value:e} is not zero to within {ZERO_TOL:e}")]
    ZeroCertificationFailed { which: &'static str, value: f64 },
    #[error("f({at}) = {value} is not positive inside (alpha, beta)")]
    PositivityFailed { at: f64, value: f64 },
    #[error("f(s) + M s decreases near s = {at}")]
    MonotonicityFailed { at: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A scalar reaction term with an upper equilibrium, as seen by the solvers.
pub trait Reaction: Sync {
    fn value(&self, s: f64) -> Result<f64, EvalError>;
    fn derivative(&self, s: f64) -> Result<f64, EvalError>;
    fn lower_zero(&self) -> f64;
    fn upper_zero(&self) -> f64;
    /// Smallest state of interest; trajectories below `floor - 0.1` escape.
    fn floor(&self) -> f64;
    /// Points where the reaction may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64>;
    /// Evaluates at `upper_zero() - w`, accurately for tiny `w`.
    fn value_below_upper(&self, w: f64) -> Result<f64, EvalError>;
    /// One-sided derivative at the upper equilibrium, from below.
    fn slope_at_upper(&self) -> f64;
}

#[derive(Debug, Clone)]
pub struct Nonlinearity {
    expr: Expr,
    derivative: Expr,
    f: Program,
    fp: Program,
    alpha: f64,
    beta: f64,
    domain_floor: f64,
    shift_m: f64,
    truncated: bool,
    /// Coefficients of `w, w^2, w^3` in `f(beta - w)`.
    taylor: [f64; 3],
    taylor_ok: bool,
}

/// Builds and certifies a nonlinearity from a parsed expression.
pub fn make_nonlinearity(
    f: Expr,
    alpha: f64,
    beta: f64,
    domain_floor: f64,
) -> Result<Nonlinearity, NonlinearityError> {
    if !(alpha.is_finite() && beta.is_finite() && domain_floor.is_finite()) {
        return Err(NonlinearityError::InvalidParameters(
            "non-finite parameter".into(),
        ));
    }
    if !(0.0 < alpha && alpha < beta) {
        return Err(NonlinearityError::InvalidParameters(format!(
            "need 0 < alpha < beta, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if domain_floor > alpha {
        return Err(NonlinearityError::InvalidParameters(format!(
            "domain_floor {domain_floor} exceeds alpha {alpha}"
        )));
    }
    let derivative = f.derivative();
    let fp = Program::compile(&derivative);
    let prog = Program::compile(&f);

    for (which, at) in [("alpha", alpha), ("beta", beta)] {
        let value = prog.eval(at)?;
        if value.abs() > ZERO_TOL {
            return Err(NonlinearityError::ZeroCertificationFailed { which, value });
        }
    }
    for i in 1..=CHECK_SAMPLES {
        let s = alpha + (beta - alpha) * i as f64 / (CHECK_SAMPLES + 1) as f64;
        let value = prog.eval(s)?;
        if value <= 0.0 {
            return Err(NonlinearityError::PositivityFailed { at: s, value });
        }
    }

    let second = derivative.derivative();
    let third = second.derivative();
    let (taylor, taylor_ok) = match (fp.eval(beta), second.eval(beta), third.eval(beta)) {
        (Ok(d1), Ok(d2), Ok(d3)) => ([-d1, 0.5 * d2, -d3 / 6.0], true),
        _ => ([0.0; 3], false),
    };

    let mut nl = Nonlinearity {
        expr: f,
        derivative,
        f: prog,
        fp,
        alpha,
        beta,
        domain_floor,
        shift_m: 0.0,
        truncated: false,
        taylor,
        taylor_ok,
    };
    nl.shift_m = nl.compute_shift()?;
    nl.check_monotone_shift()?;
    Ok(nl)
}

/// Parses `src` and certifies the result.
pub fn from_source(
    src: &str,
    alpha: f64,
    beta: f64,
    domain_floor: f64,
) -> Result<Nonlinearity, NonlinearityError> {
    make_nonlinearity(expr::parse(src)?, alpha, beta, domain_floor)
}

impl Nonlinearity {
    fn sample_points(&self) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = (self.domain_floor, self.beta);
        (0..CHECK_SAMPLES).map(move |i| lo + (hi - lo) * i as f64 / (CHECK_SAMPLES - 1) as f64)
    }

    fn compute_shift(&self) -> Result<f64, EvalError> {
        let mut min_slope = 0.0f64;
        if self.truncated {
            // One-sided slopes at the kinks.
            min_slope = min_slope
                .min(self.fp.eval(self.alpha)?)
                .min(self.fp.eval(self.beta)?);
        }
        for s in self.sample_points() {
            min_slope = min_slope.min(self.derivative(s)?);
        }
        Ok(1.1 * (-min_slope).max(0.0))
    }

    fn check_monotone_shift(&self) -> Result<(), NonlinearityError> {
        let m = self.shift_m;
        let mut prev: Option<(f64, f64)> = None;
        for s in self.sample_points() {
            let g = self.value(s)? + m * s;
            if let Some((_, pg)) = prev {
                if g < pg - 1e-12 * (1.0 + pg.abs()) {
                    return Err(NonlinearityError::MonotonicityFailed { at: s });
                }
            }
            prev = Some((s, g));
        }
        Ok(())
    }

    /// The truncation: equal to `f` on `(alpha, beta)` and zero elsewhere.
    pub fn truncate(&self) -> Nonlinearity {
        let mut t = self.clone();
        t.truncated = true;
        // Cannot fail: the truncated slope set is a subset of the raw one plus zero.
        t.shift_m = t.compute_shift().unwrap_or(self.shift_m);
        t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    /// Shift `M` making `s -> f(s) + M s` nondecreasing on `[floor, beta]`.
    pub fn shift_m(&self) -> f64 {
        self.shift_m
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.derivative
    }

    #[inline]
    fn outside(&self, s: f64) -> bool {
        self.truncated && !(s > self.alpha && s < self.beta)
    }

    /// `int_0^s` of the truncation, the potential used by the energy.
    pub fn truncated_primitive(&self, s: f64) -> Result<f64, QuadratureError> {
        if s <= self.alpha {
            return Ok(0.0);
        }
        let top = s.min(self.beta);
        let f = &self.f;
        quadrature::simpson(|x| f.eval(x), self.alpha, top)
    }
}

impl Reaction for Nonlinearity {
    #[inline]
    fn value(&self, s: f64) -> Result<f64, EvalError> {
        if self.outside(s) {
            Ok(0.0)
        } else {
            self.f.eval(s)
        }
    }

    #[inline]
    fn derivative(&self, s: f64) -> Result<f64, EvalError> {
        if self.outside(s) {
            Ok(0.0)
        } else {
            self.fp.eval(s)
        }
    }

    fn lower_zero(&self) -> f64 {
        self.alpha
    }

    fn upper_zero(&self) -> f64 {
        self.beta
    }

    fn floor(&self) -> f64 {
        self.domain_floor
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.truncated {
            vec![self.alpha, self.beta]
        } else {
            Vec::new()
        }
    }

    #[inline(always)]
    fn value_below_upper(&self, w: f64) -> Result<f64, EvalError> {
        if self.truncated && w <= 0.0 {
            return Ok(0.0);
        }
        if self.taylor_ok && w.abs() < TAYLOR_RADIUS {
            let [c1, c2, c3] = self.taylor;
            return Ok(w * (c1 + w * (c2 + w * c3)));
        }
        self.value(self.beta - w)
    }

    fn slope_at_upper(&self) -> f64 {
        -self.taylor[0]
    }
}

/// `g(v) = f~(v + beta - eps)`: the truncation moved so its upper zero sits at `eps`.
#[derive(Debug, Clone)]
pub struct ShiftedReaction {
    base: Nonlinearity,
    offset: f64,
    eps: f64,
}

impl ShiftedReaction {
    pub fn new(nl: &Nonlinearity, eps: f64) -> ShiftedReaction {
        ShiftedReaction {
            base: nl.truncate(),
            offset: nl.beta() - eps,
            eps,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Reaction for ShiftedReaction {
    fn value(&self, s: f64) -> Result<f64, EvalError> {
        self.base.value(s + self.offset)
    }

    fn derivative(&self, s: f64) -> Result<f64, EvalError> {
        self.base.derivative(s + self.offset)
    }

    fn lower_zero(&self) -> f64 {
        self.base.alpha - self.offset
    }

    fn upper_zero(&self) -> f64 {
        self.eps
    }

    fn floor(&self) -> f64 {
        self.base.domain_floor - self.offset
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base
            .breakpoints()
            .into_iter()
            .map(|b| b - self.offset)
            .collect()
    }

    fn value_below_upper(&self, w: f64) -> Result<f64, EvalError> {
        self.base.value_below_upper(w)
    }

    fn slope_at_upper(&self) -> f64 {
        self.base.slope_at_upper()
    }
}

/// `int_a^b` of the reaction, split at its breakpoints.
pub fn antiderivative<R: Reaction + ?Sized>(r: &R, a: f64, b: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = r
        .breakpoints()
        .into_iter()
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut left = lo;
    for right in cuts.into_iter().chain(std::iter::once(hi)) {
        total += quadrature::simpson(|x| r.value(x), left, right)?;
        left = right;
    }
    Ok(sign * total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaReport {
    /// Whether `int_s^beta f > 0` for every `s` in `[0, alpha]`.
    pub holds: bool,
    pub r_alpha: Option<f64>,
    pub worst_s: f64,
    pub worst_value: f64,
    /// Set when the only admissible radius is `beta` itself.
    pub degenerate: bool,
}

const AREA_SCAN: usize = 2001;

/// Checks the area condition and finds the smallest radius `r_alpha`.
///
/// For `s` in `[alpha, beta)` the integral is positive automatically, so the
/// scan runs over `[max(0, floor), alpha]`.
pub fn area_condition(nl: &Nonlinearity) -> Result<AreaReport, NonlinearityError> {
    let lo = nl.domain_floor.max(0.0);
    let alpha = nl.alpha;
    let step = (alpha - lo) / (AREA_SCAN - 1) as f64;
    let nodes: Vec<f64> = (0..AREA_SCAN).map(|j| lo + step * j as f64).collect();
    // tail[j] = int_{s_j}^alpha f
    let mut tail = vec![0.0; AREA_SCAN];
    for j in (0..AREA_SCAN - 1).rev() {
        tail[j] = tail[j + 1] + antiderivative(nl, nodes[j], nodes[j + 1])?;
    }
    let (mut j_best, mut best) = (AREA_SCAN - 1, tail[AREA_SCAN - 1]);
    for (j, &v) in tail.iter().enumerate() {
        if v < best {
            best = v;
            j_best = j;
        }
    }
    let mut worst_s = nodes[j_best];
    if step > 0.0 {
        let a = nodes[j_best.saturating_sub(1)];
        let b = nodes[(j_best + 1).min(AREA_SCAN - 1)];
        let objective = |s: f64| antiderivative(nl, s, alpha);
        let s_star = golden_section_min(&objective, a, b, 1e-10)?;
        let v_star = objective(s_star)?;
        if v_star < best {
            best = v_star;
            worst_s = s_star;
        }
    }
    let upper = antiderivative(nl, alpha, nl.beta)?;
    let worst_value = best + upper;
    let holds = worst_value > 0.0;

    let mut r_alpha = None;
    let mut degenerate = false;
    if holds {
        let m = best;
        if m > 0.0 {
            r_alpha = Some(alpha);
        } else {
            let (mut a, mut b) = (alpha, nl.beta);
            while b - a > 1e-12 {
                let mid = 0.5 * (a + b);
                if antiderivative(nl, alpha, mid)? + m > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            if b >= nl.beta - 1e-9 {
                degenerate = true;
                r_alpha = Some(nl.beta);
            } else {
                r_alpha = Some(b);
            }
        }
    }
    Ok(AreaReport {
        holds,
        r_alpha,
        worst_s,
        worst_value,
        degenerate,
    })
}

fn golden_section_min<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, QuadratureError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [a, mid, b];
    let mut best = (mid, f(mid)?);
    for &x in &candidates {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best.0)
}
