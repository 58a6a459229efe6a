//! Radial shooting with RK4.
//!
//! Integration runs in the deviation `w = beta - u`, so profiles that sit
//! exponentially close to `beta` keep their relative accuracy. Besides the
//! uniform scan over center values, two extra seed families cover that
//! regime: log-spaced center gaps down to `W_START`, and "departure" seeds
//! that stay on the linearization at `beta` up to a radius `rho` and only then
//! switch to the nonlinear equation.

use thiserror::Error;

use super::{
    check_bc, check_lambda, sup_distance, SolutionProfile, SolverError, Source, NONNEG_TOL,
};
use crate::discretization::{BoundaryKind, RadialDomain};
use crate::expr::EvalError;
use crate::nonlinearity::Reaction;

/// Smallest center gap; departure seeds start from this deviation.
pub const W_START: f64 = 1e-10;
const ESCAPE_MARGIN: f64 = 0.1;
const DEDUP_TOL: f64 = 1e-8;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ShootError {
    #[error("trajectory fell below the domain floor at r = {radius}")]
    EscapeBelow { radius: f64 },
    #[error("trajectory rose above beta at r = {radius}")]
    EscapeAbove { radius: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// RK4 steps over `[0, R]`.
    pub steps: usize,
    /// Uniform center values in `(0, beta)`.
    pub uniform: usize,
    /// Log-spaced center gaps below the uniform spacing.
    pub log_points: usize,
    /// Departure radii in `[0, R)`.
    pub departure_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            steps: 4096,
            uniform: 2000,
            log_points: 200,
            departure_points: 256,
        }
    }
}

struct Ode<'a, R: ?Sized> {
    reaction: &'a R,
    lambda: f64,
    dim: f64,
    beta: f64,
    w_below: f64,
}

impl<'a, R: Reaction + ?Sized> Ode<'a, R> {
    fn new(reaction: &'a R, lambda: f64, domain: &RadialDomain) -> Self {
        let beta = reaction.upper_zero();
        Ode {
            reaction,
            lambda,
            dim: domain.dim as f64,
            beta,
            w_below: beta - (reaction.floor() - ESCAPE_MARGIN),
        }
    }

    /// `(N-1)/r`, with the center handled by the caller.
    #[inline(always)]
    fn damping(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            (self.dim - 1.0) / r
        }
    }

    #[inline(always)]
    fn acc(&self, damping: f64, w: f64, p: f64) -> Result<f64, EvalError> {
        Ok(self.lambda * self.reaction.value_below_upper(w)? - damping * p)
    }

    #[inline]
    fn step(&self, r: f64, w: f64, p: f64, dr: f64) -> Result<(f64, f64), EvalError> {
        let half = 0.5 * dr;
        let d_mid = self.damping(r + half);
        let d_end = self.damping(r + dr);
        let k1w = p;
        let k1p = if r == 0.0 {
            self.lambda * self.reaction.value_below_upper(w)? / self.dim
        } else {
            self.acc(self.damping(r), w, p)?
        };
        let k2w = p + half * k1p;
        let k2p = self.acc(d_mid, w + half * k1w, p + half * k1p)?;
        let k3w = p + half * k2p;
        let k3p = self.acc(d_mid, w + half * k2w, p + half * k2p)?;
        let k4w = p + dr * k3p;
        let k4p = self.acc(d_end, w + dr * k3w, p + dr * k3p)?;
        Ok((
            w + dr / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
            p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        ))
    }

    fn check(&self, r: f64, w: f64, p: f64) -> Result<(), ShootError> {
        if !(w.is_finite() && p.is_finite()) {
            return Err(ShootError::Eval(EvalError::NonFinite));
        }
        if w > self.w_below {
            return Err(ShootError::EscapeBelow { radius: r });
        }
        if w < -ESCAPE_MARGIN {
            return Err(ShootError::EscapeAbove { radius: r });
        }
        Ok(())
    }
}

/// `q = w'/w` and `L = ∫ q` for the linearization `w'' + (N-1)/r w' = k² w`.
struct Riccati {
    k2: f64,
    dim: f64,
    h: f64,
    q: Vec<f64>,
    l: Vec<f64>,
}

impl Riccati {
    fn build(k2: f64, dim: f64, radius: f64, steps: usize) -> Riccati {
        let h = radius / steps as f64;
        let mut q = vec![0.0; steps + 1];
        let mut l = vec![0.0; steps + 1];
        let mut this = Riccati {
            k2,
            dim,
            h,
            q: Vec::new(),
            l: Vec::new(),
        };
        for j in 0..steps {
            let (qn, ln) = this.advance(j as f64 * h, q[j], l[j], h);
            q[j + 1] = qn;
            l[j + 1] = ln;
        }
        this.q = q;
        this.l = l;
        this
    }

    fn rhs(&self, r: f64, q: f64) -> f64 {
        if r == 0.0 {
            self.k2 / self.dim
        } else {
            self.k2 - q * q - (self.dim - 1.0) / r * q
        }
    }

    fn advance(&self, r: f64, q: f64, l: f64, dr: f64) -> (f64, f64) {
        let half = 0.5 * dr;
        let a1 = self.rhs(r, q);
        let a2 = self.rhs(r + half, q + half * a1);
        let a3 = self.rhs(r + half, q + half * a2);
        let a4 = self.rhs(r + dr, q + dr * a3);
        let b1 = q;
        let b2 = q + half * a1;
        let b3 = q + half * a2;
        let b4 = q + dr * a3;
        (
            q + dr / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            l + dr / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        )
    }

    /// `(j, q(rho), L(rho))` with `j` the last node not after `rho`.
    fn at(&self, rho: f64) -> (usize, f64, f64) {
        let j = ((rho / self.h).floor() as usize).min(self.q.len() - 1);
        let rj = j as f64 * self.h;
        if rho <= rj {
            return (j, self.q[j], self.l[j]);
        }
        let (q, l) = self.advance(rj, self.q[j], self.l[j], rho - rj);
        (j, q, l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Seed {
    Center(f64),
    Departure(f64),
}

struct Endpoint {
    w: f64,
    p: f64,
    min_w: f64,
    max_w: f64,
}

struct Shooter<'a, R: ?Sized> {
    ode: Ode<'a, R>,
    riccati: Option<Riccati>,
    steps: usize,
    radius: f64,
    bc: BoundaryKind,
}

impl<'a, R: Reaction + ?Sized> Shooter<'a, R> {
    fn new(
        reaction: &'a R,
        lambda: f64,
        domain: &RadialDomain,
        bc: BoundaryKind,
        steps: usize,
    ) -> Self {
        let ode = Ode::new(reaction, lambda, domain);
        let k2 = -lambda * reaction.slope_at_upper();
        let riccati =
            (k2 > 0.0).then(|| Riccati::build(k2, domain.dim as f64, domain.radius, steps));
        Shooter {
            ode,
            riccati,
            steps,
            radius: domain.radius,
            bc,
        }
    }

    fn run(
        &self,
        seed: Seed,
        mut keep: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
    ) -> Result<Endpoint, ShootError> {
        let h = self.radius / self.steps as f64;
        let (mut j, mut r, mut w, mut p, mut min_w, mut max_w);
        match seed {
            Seed::Center(w0) => {
                j = 0;
                r = 0.0;
                w = w0;
                p = 0.0;
                min_w = w0;
                max_w = w0;
                if let Some((ws, ps)) = keep.as_mut() {
                    ws.push(w);
                    ps.push(p);
                }
            }
            Seed::Departure(rho) => {
                let ric = self
                    .riccati
                    .as_ref()
                    .expect("departure seeds need a linearization");
                let (j0, q_rho, l_rho) = ric.at(rho);
                min_w = (W_START * (-l_rho).exp()).max(f64::MIN_POSITIVE);
                max_w = W_START;
                if let Some((ws, ps)) = keep.as_mut() {
                    for k in 0..=j0 {
                        let wk = W_START * (ric.l[k] - l_rho).exp();
                        ws.push(wk);
                        ps.push(ric.q[k] * wk);
                    }
                }
                w = W_START;
                p = W_START * q_rho;
                let rj = j0 as f64 * h;
                if rho > rj && j0 < self.steps {
                    let next = (j0 + 1) as f64 * h;
                    let (wn, pn) = self.ode.step(rho, w, p, next - rho)?;
                    w = wn;
                    p = pn;
                    self.ode.check(next, w, p)?;
                    min_w = min_w.min(w);
                    max_w = max_w.max(w);
                    if let Some((ws, ps)) = keep.as_mut() {
                        ws.push(w);
                        ps.push(p);
                    }
                    j = j0 + 1;
                } else {
                    j = j0;
                    // The node at rho was stored from the linearization; overwrite
                    // with the exact start state.
                    if let Some((ws, ps)) = keep.as_mut() {
                        ws[j0] = w;
                        ps[j0] = p;
                    }
                }
                r = j as f64 * h;
            }
        }
        while j < self.steps {
            let (wn, pn) = self.ode.step(r, w, p, h)?;
            j += 1;
            r = j as f64 * h;
            w = wn;
            p = pn;
            self.ode.check(r, w, p)?;
            min_w = min_w.min(w);
            max_w = max_w.max(w);
            if let Some((ws, ps)) = keep.as_mut() {
                ws.push(w);
                ps.push(p);
            }
        }
        Ok(Endpoint { w, p, min_w, max_w })
    }

    fn mismatch(&self, end: &Endpoint) -> f64 {
        mismatch(self.bc, self.ode.beta - end.w, -end.p)
    }

    /// Mismatch with escapes mapped to signed infinities and failures to NaN.
    fn signed_mismatch(&self, seed: Seed) -> f64 {
        match self.run(seed, None) {
            Ok(end) => self.mismatch(&end),
            Err(ShootError::EscapeBelow { .. }) => f64::NEG_INFINITY,
            Err(ShootError::EscapeAbove { .. }) => f64::INFINITY,
            Err(ShootError::Eval(_)) => f64::NAN,
        }
    }

    fn profile(&self, seed: Seed) -> Result<SolutionProfile, ShootError> {
        let mut ws = Vec::with_capacity(self.steps + 1);
        let mut ps = Vec::with_capacity(self.steps + 1);
        let end = self.run(seed, Some((&mut ws, &mut ps)))?;
        let beta = self.ode.beta;
        let h = self.radius / self.steps as f64;
        Ok(SolutionProfile {
            nodes: (0..=self.steps).map(|j| j as f64 * h).collect(),
            values: ws.iter().map(|w| beta - w).collect(),
            slopes: Some(ps.iter().map(|p| -p).collect()),
            source: Source::Shooting,
            sup_norm: beta - end.min_w,
            min_value: beta - end.max_w,
            beta_gap: end.min_w,
            residual: self.mismatch(&end).abs(),
            converged: false,
            iterations: 0,
        })
    }

    fn seeds(&self, cfg: &ScanConfig) -> Vec<Seed> {
        let beta = self.ode.beta;
        let n = cfg.uniform;
        let mut seeds: Vec<Seed> = (1..=n)
            .map(|i| Seed::Center(beta * (n + 1 - i) as f64 / (n + 1) as f64))
            .collect();
        let w_hi = beta / (n + 1) as f64;
        if w_hi > W_START && cfg.log_points > 0 {
            let ratio = (W_START / w_hi).ln();
            for k in 1..=cfg.log_points {
                let w = if k == cfg.log_points {
                    W_START
                } else {
                    w_hi * (ratio * k as f64 / cfg.log_points as f64).exp()
                };
                seeds.push(Seed::Center(w));
            }
        }
        if self.riccati.is_some() {
            let m = cfg.departure_points;
            for j in 1..m {
                seeds.push(Seed::Departure(self.radius * j as f64 / m as f64));
            }
        }
        seeds
    }

    /// Refines a sign change between consecutive seeds.
    fn bisect(&self, a: (Seed, f64), b: (Seed, f64)) -> Option<Seed> {
        let as_departure = |s: Seed| match s {
            Seed::Center(w) if w == W_START => Some(0.0),
            Seed::Departure(rho) => Some(rho),
            Seed::Center(_) => None,
        };
        let ((mut x0, mut f0), (mut x1, mut f1), departure) = match (a.0, b.0) {
            (Seed::Center(wa), Seed::Center(wb)) => ((wa, a.1), (wb, b.1), false),
            _ => {
                let ra = as_departure(a.0)?;
                let rb = as_departure(b.0)?;
                ((ra, a.1), (rb, b.1), true)
            }
        };
        let make = |x: f64| {
            if departure {
                Seed::Departure(x)
            } else {
                Seed::Center(x)
            }
        };
        for _ in 0..MAX_BISECTIONS {
            let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
            // Refine to working precision: Dirichlet traces and Pohozaev
            // closure are sensitive to the root well below 1e-10.
            let scale = if departure { self.radius } else { hi };
            if hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
            let mid = if !departure && lo > 0.0 && lo < 1e-4 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.signed_mismatch(make(mid));
            if fm.is_nan() {
                return None;
            }
            if fm == 0.0 {
                return Some(make(mid));
            }
            if (fm > 0.0) == (f0 > 0.0) {
                x0 = mid;
                f0 = fm;
            } else {
                x1 = mid;
                f1 = fm;
            }
        }
        // An escape on either side means the sign change is a jump, not a root.
        if !(f0.is_finite() && f1.is_finite()) {
            return None;
        }
        Some(if f0.abs() <= f1.abs() {
            make(x0)
        } else {
            make(x1)
        })
    }

    /// Scans all seeds and hands each refined root to `visit`; stops when it
    /// returns `true`.
    fn scan(
        &self,
        cfg: &ScanConfig,
        mut visit: impl FnMut(SolutionProfile) -> bool,
    ) -> Result<(), SolverError> {
        let mut prev: Option<(Seed, f64)> = None;
        for seed in self.seeds(cfg) {
            let phi = self.signed_mismatch(seed);
            let mut root = None;
            if phi == 0.0 {
                root = Some(seed);
            } else if let Some((ps, pphi)) = prev {
                if (pphi > 0.0 && phi < 0.0) || (pphi < 0.0 && phi > 0.0) {
                    root = self.bisect((ps, pphi), (seed, phi));
                }
            }
            if let Some(root) = root {
                if let Ok(mut profile) = self.profile(root) {
                    profile.converged = true;
                    if visit(profile) {
                        return Ok(());
                    }
                }
            }
            prev = Some((seed, phi));
        }
        Ok(())
    }
}

fn mismatch(bc: BoundaryKind, u: f64, du: f64) -> f64 {
    match bc {
        BoundaryKind::Robin(gamma) => du + gamma * u,
        BoundaryKind::Neumann => du,
        BoundaryKind::Dirichlet => u,
    }
}

/// Boundary-condition mismatch `φ` of a shooting trajectory.
pub fn boundary_mismatch(profile: &SolutionProfile, bc: BoundaryKind) -> Option<f64> {
    Some(mismatch(
        bc,
        profile.boundary_value(),
        profile.boundary_slope()?,
    ))
}

/// Integrates from `u(0) = s0`, `u'(0) = 0` with `R / 4096` steps.
pub fn shoot<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    domain: &RadialDomain,
    s0: f64,
) -> Result<SolutionProfile, SolverError> {
    shoot_with(reaction, lambda, domain, s0, ScanConfig::default().steps)
}

pub fn shoot_with<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    domain: &RadialDomain,
    s0: f64,
    steps: usize,
) -> Result<SolutionProfile, SolverError> {
    check_lambda(lambda)?;
    if steps == 0 {
        return Err(SolverError::InvalidParameter(
            "steps must be positive".into(),
        ));
    }
    let shooter = Shooter::new(reaction, lambda, domain, BoundaryKind::Neumann, steps);
    let mut profile = shooter.profile(Seed::Center(reaction.upper_zero() - s0))?;
    profile.residual = f64::NAN;
    Ok(profile)
}

/// All nonnegative radial solutions found by scanning center values, sorted by sup-norm.
pub fn find_radial_solutions<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    domain: &RadialDomain,
    bc: BoundaryKind,
) -> Result<Vec<SolutionProfile>, SolverError> {
    find_radial_solutions_with(reaction, lambda, domain, bc, &ScanConfig::default())
}

pub fn find_radial_solutions_with<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    domain: &RadialDomain,
    bc: BoundaryKind,
    cfg: &ScanConfig,
) -> Result<Vec<SolutionProfile>, SolverError> {
    check_lambda(lambda)?;
    check_bc(bc)?;
    let shooter = Shooter::new(reaction, lambda, domain, bc, cfg.steps);
    let mut found: Vec<SolutionProfile> = Vec::new();

    if matches!(bc, BoundaryKind::Neumann | BoundaryKind::Robin(0.0)) {
        let beta = reaction.upper_zero();
        let alpha = reaction.lower_zero();
        for s in [alpha, beta] {
            let certified = reaction.value(s).map(|v| v.abs() <= 1e-10).unwrap_or(false);
            if s > 0.0 && s <= beta && certified {
                found.push(constant_profile(s, beta, cfg.steps, domain.radius));
            }
        }
    }

    shooter.scan(cfg, |p| {
        if p.min_value >= NONNEG_TOL
            && !found
                .iter()
                .any(|q| sup_distance(&q.values, &p.values) < DEDUP_TOL)
        {
            found.push(p);
        }
        false
    })?;
    found.sort_by(|a, b| {
        a.sup_norm
            .total_cmp(&b.sup_norm)
            .then(b.beta_gap.total_cmp(&a.beta_gap))
            .then(a.min_value.total_cmp(&b.min_value))
    });
    Ok(found)
}

/// Whether the scan finds a nonnegative solution with sup-norm in `(alpha, beta)`.
/// Stops at the first one.
pub fn has_admitted_solution<R: Reaction + ?Sized>(
    reaction: &R,
    lambda: f64,
    domain: &RadialDomain,
    bc: BoundaryKind,
    cfg: &ScanConfig,
) -> Result<Option<SolutionProfile>, SolverError> {
    check_lambda(lambda)?;
    check_bc(bc)?;
    let alpha = reaction.lower_zero();
    let shooter = Shooter::new(reaction, lambda, domain, bc, cfg.steps);
    let mut hit = None;
    shooter.scan(cfg, |p| {
        if p.in_oab(alpha) {
            hit = Some(p);
            true
        } else {
            false
        }
    })?;
    Ok(hit)
}

fn constant_profile(s: f64, beta: f64, steps: usize, radius: f64) -> SolutionProfile {
    let h = radius / steps as f64;
    SolutionProfile {
        nodes: (0..=steps).map(|j| j as f64 * h).collect(),
        values: vec![s; steps + 1],
        slopes: Some(vec![0.0; steps + 1]),
        source: Source::Shooting,
        sup_norm: s,
        min_value: s,
        beta_gap: beta - s,
        residual: 0.0,
        converged: true,
        iterations: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{from_source, Nonlinearity};

    fn cubic() -> Nonlinearity {
        from_source("s*(s-1)*(3-s)", 1.0, 3.0, 0.0).unwrap()
    }

    fn ball(dim: usize) -> RadialDomain {
        RadialDomain::new(dim, 1.0).unwrap()
    }

    #[test]
    fn equilibrium_start_stays_put() {
        let p = shoot(&cubic(), 5.0, &ball(2), 3.0).unwrap();
        assert!(p.values.iter().all(|&v| v == 3.0));
        let p = shoot(&cubic(), 5.0, &ball(2), 1.0).unwrap();
        assert!(p.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn escape_below_is_reported() {
        let r = shoot(&cubic(), 400.0, &ball(1), 2.5);
        assert!(
            matches!(r, Err(SolverError::Shoot(ShootError::EscapeBelow { .. }))),
            "{r:?}"
        );
    }

    #[test]
    fn step_halving_changes_little() {
        let nl = from_source("(s - 0.5) * (1 - s)", 0.5, 1.0, 0.0).unwrap();
        let p = shoot(&nl, 1.0, &ball(1), 0.9).unwrap();
        let q = shoot_with(&nl, 1.0, &ball(1), 0.9, 8192).unwrap();
        assert!((p.boundary_value() - q.boundary_value()).abs() < 1e-12);
    }

    #[test]
    fn neumann_contains_constants() {
        let sols = find_radial_solutions(&cubic(), 1.0, &ball(1), BoundaryKind::Neumann).unwrap();
        assert!(sols.iter().any(|p| p.values.iter().all(|&v| v == 1.0)));
        assert!(sols.iter().any(|p| p.values.iter().all(|&v| v == 3.0)));
    }

    #[test]
    fn departure_profile_is_continuous() {
        let nl = cubic();
        let sh = Shooter::new(&nl, 200.0, &ball(2), BoundaryKind::Robin(1.0), 4096);
        let p = sh.profile(Seed::Departure(0.3001)).unwrap();
        assert_eq!(p.values.len(), 4097);
        for w in p.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(p.beta_gap > 0.0 && p.beta_gap < W_START);
    }
}
