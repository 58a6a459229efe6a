//! Parameter sweeps, threshold searches and the two γ-limit experiments.
//!
//! Every λ point merges the shooting enumeration on the raw `f` with the
//! monotone limit of the truncation. The monotone limit is kept as a solution
//! only when a Newton polish on the raw problem lands on it.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::discretization::{BoundaryKind, DiscretizationError, Grid, RadialDomain, DEFAULT_N};
use crate::nonlinearity::{area_condition, Nonlinearity, NonlinearityError, Reaction};
use crate::solvers::{
    find_radial_solutions_with, has_admitted_solution, monotone_iterate_with, newton_refine,
    sup_distance, MonotoneOptions, ScanConfig, SolutionProfile, SolverError, Source,
};
use crate::spectral::{mu1, SpectralError};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "ROBIN_BIFURCATE_THREADS";
/// Doubling searches give up above this λ.
pub const LAMBDA_CAP: f64 = 1_048_576.0;
/// Two profiles from different solvers closer than this are the same solution.
pub const CROSS_SOURCE_TOL: f64 = 1e-3;
/// A polished monotone limit must stay this close to the unpolished one.
const POLISH_TOL: f64 = 1e-6;
/// `|μ₁|` below this is reported as sign 0.
pub const MU1_SIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no solution found for any lambda up to {cap}")]
    NoUpperBracket { cap: f64 },
    #[error("expected two solutions in O_ab at lambda = {lambda}, found {found}")]
    MultiplicityNotObserved { lambda: f64, found: usize },
    #[error("area condition fails (worst value {worst_value})")]
    AreaConditionFails { worst_value: f64 },
    #[error("branch lost at gamma = {gamma} (last good gamma {last_good:?})")]
    BranchLost { gamma: f64, last_good: Option<f64> },
    #[error("f' is positive at s = {at} inside the declared monotonicity band")]
    HypMonFails { at: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Grid resolution for monotone iteration and `μ₁`.
    pub n: usize,
    pub scan: ScanConfig,
    pub with_mu1: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n: DEFAULT_N,
            scan: ScanConfig::default(),
            with_mu1: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub sup_norm: f64,
    pub center_value: f64,
    pub boundary_value: f64,
    pub min_value: f64,
    pub mu1: Option<f64>,
    pub mu1_sign: Option<i8>,
    pub source: Source,
    pub in_oab: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub param: f64,
    /// Sorted by sup-norm.
    pub solutions: Vec<SolutionSummary>,
    pub count_in_oab: usize,
    /// Sup-norm of the maximal solution of the truncated problem.
    pub maximal_sup: Option<f64>,
    pub error: Option<String>,
}

/// A point together with the full profiles behind it.
#[derive(Debug, Clone)]
pub struct PointSolve {
    pub point: BranchPoint,
    /// Same order as `point.solutions`.
    pub profiles: Vec<SolutionProfile>,
    /// Monotone limit of the truncation, whether or not it solves the raw problem.
    pub maximal: Option<SolutionProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepMode {
    SweepLambda { bc: BoundaryKind },
    SweepGamma { lambda: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Thresholds {
    pub lambda_min: Option<f64>,
    pub lambda_mult: Option<f64>,
    pub lambda_infty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchDiagram {
    pub mode: SweepMode,
    pub points: Vec<BranchPoint>,
    pub thresholds: Thresholds,
}

impl BranchDiagram {
    /// Whether the maximal branch never decreases along the sweep, up to `tol`.
    pub fn maximal_nondecreasing(&self, tol: f64) -> bool {
        let sups: Vec<f64> = self.points.iter().filter_map(|p| p.maximal_sup).collect();
        sups.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// A rayon pool honoring `ROBIN_BIFURCATE_THREADS`.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if k > 0 {
            builder = builder.num_threads(k);
        }
    }
    builder.build().expect("thread pool")
}

fn summarize(
    nl: &Nonlinearity,
    lambda: f64,
    p: &SolutionProfile,
    grid: &Grid,
    bc: BoundaryKind,
    with_mu1: bool,
) -> SolutionSummary {
    let m = if with_mu1 {
        mu1(nl, lambda, p, grid, bc)
            .ok()
            .map(|s| (s.mu1, s.sign(MU1_SIGN_TOL)))
    } else {
        None
    };
    SolutionSummary {
        sup_norm: p.sup_norm,
        center_value: p.center_value(),
        boundary_value: p.boundary_value(),
        min_value: p.min_value,
        mu1: m.map(|x| x.0),
        mu1_sign: m.map(|x| x.1),
        source: p.source,
        in_oab: p.in_oab(nl.alpha()),
    }
}

/// Maximal solution of the truncated problem, by monotone iteration from `beta`.
pub fn maximal_truncated(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<SolutionProfile, SolverError> {
    let t = nl.truncate();
    Ok(monotone_iterate_with(&t, lambda, grid, bc, &MonotoneOptions::default())?.profile)
}

/// Newton on the raw problem from `p`; `Some` when it stays on `p`.
fn polish(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
    p: &SolutionProfile,
) -> Option<SolutionProfile> {
    let mut q = newton_refine(nl, lambda, grid, bc, &p.values, &[]).ok()?;
    if sup_distance(&q.values, &p.values) > POLISH_TOL {
        return None;
    }
    q.source = Source::Monotone;
    Some(q)
}

/// All solutions at one `(λ, bc)`: shooting roots plus the polished monotone limit.
pub fn solve_point(
    nl: &Nonlinearity,
    lambda: f64,
    domain: &RadialDomain,
    bc: BoundaryKind,
    opts: &SolveOptions,
) -> Result<PointSolve, ContinuationError> {
    let grid = Grid::new(*domain, opts.n)?;
    let mut profiles = find_radial_solutions_with(nl, lambda, domain, bc, &opts.scan)?;
    let maximal = maximal_truncated(nl, lambda, &grid, bc)?;
    if let Some(q) = polish(nl, lambda, &grid, bc, &maximal) {
        let dup = profiles
            .iter()
            .any(|p| sup_distance(&p.sample_on(&grid), &q.values) < CROSS_SOURCE_TOL);
        if !dup {
            profiles.push(q);
        }
    }
    profiles.sort_by(|a, b| {
        a.sup_norm
            .total_cmp(&b.sup_norm)
            .then(a.source.cmp(&b.source))
    });
    let solutions: Vec<SolutionSummary> = profiles
        .iter()
        .map(|p| summarize(nl, lambda, p, &grid, bc, opts.with_mu1))
        .collect();
    let count_in_oab = solutions.iter().filter(|s| s.in_oab).count();
    Ok(PointSolve {
        point: BranchPoint {
            param: lambda,
            solutions,
            count_in_oab,
            maximal_sup: Some(maximal.sup_norm),
            error: None,
        },
        profiles,
        maximal: Some(maximal),
    })
}

fn failed_point(param: f64, e: ContinuationError) -> BranchPoint {
    BranchPoint {
        param,
        solutions: Vec::new(),
        count_in_oab: 0,
        maximal_sup: None,
        error: Some(e.to_string()),
    }
}

fn check_increasing(grid: &[f64], what: &str, increasing: bool) -> Result<(), ContinuationError> {
    if grid.is_empty() {
        return Err(ContinuationError::InvalidParameter(format!(
            "{what} grid is empty"
        )));
    }
    if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(ContinuationError::InvalidParameter(format!(
            "{what} grid must be finite and nonnegative"
        )));
    }
    let ordered = grid
        .windows(2)
        .all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] });
    if !ordered {
        let dir = if increasing {
            "increasing"
        } else {
            "decreasing"
        };
        return Err(ContinuationError::InvalidParameter(format!(
            "{what} grid must be strictly {dir}"
        )));
    }
    Ok(())
}

/// Solutions along a λ grid at a fixed boundary condition. Failing points
/// are recorded, not fatal.
pub fn sweep_lambda(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    bc: BoundaryKind,
    lambdas: &[f64],
    opts: &SolveOptions,
) -> Result<BranchDiagram, ContinuationError> {
    check_increasing(lambdas, "lambda", true)?;
    if lambdas[0] <= 0.0 {
        return Err(ContinuationError::InvalidParameter(
            "lambda values must be positive".into(),
        ));
    }
    bc.validate()?;
    let points = thread_pool().install(|| {
        lambdas
            .par_iter()
            .map(|&l| match solve_point(nl, l, domain, bc, opts) {
                Ok(s) => s.point,
                Err(e) => failed_point(l, e),
            })
            .collect()
    });
    Ok(BranchDiagram {
        mode: SweepMode::SweepLambda { bc },
        points,
        thresholds: Thresholds::default(),
    })
}

/// Solutions along a γ grid at fixed λ.
pub fn sweep_gamma(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    lambda: f64,
    gammas: &[f64],
    opts: &SolveOptions,
) -> Result<BranchDiagram, ContinuationError> {
    check_increasing(gammas, "gamma", true)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ContinuationError::InvalidParameter(
            "lambda must be positive".into(),
        ));
    }
    let points = thread_pool().install(|| {
        gammas
            .par_iter()
            .map(|&g| {
                let mut point = match solve_point(nl, lambda, domain, BoundaryKind::Robin(g), opts)
                {
                    Ok(s) => s.point,
                    Err(e) => failed_point(lambda, e),
                };
                point.param = g;
                point
            })
            .collect()
    });
    Ok(BranchDiagram {
        mode: SweepMode::SweepGamma { lambda },
        points,
        thresholds: Thresholds::default(),
    })
}

#[derive(Debug, Clone)]
pub struct Threshold {
    /// Midpoint of the final bracket.
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// Predicate evaluations spent.
    pub evaluations: usize,
    /// A solution at `hi`, when the predicate produces one.
    pub witness: Option<SolutionProfile>,
}

/// Bisection on a predicate that is false at `lo` and turns true for large λ.
fn threshold_search<P>(tol: f64, mut pred: P) -> Result<Threshold, ContinuationError>
where
    P: FnMut(f64) -> Result<Option<SolutionProfile>, ContinuationError>,
{
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ContinuationError::InvalidParameter(format!(
            "tol = {tol} must be positive"
        )));
    }
    let mut evaluations = 0;
    let mut hi = 1.0f64.max(2.0 * tol);
    let mut witness;
    loop {
        evaluations += 1;
        witness = pred(hi)?;
        if witness.is_some() {
            break;
        }
        if hi >= LAMBDA_CAP {
            return Err(ContinuationError::NoUpperBracket { cap: LAMBDA_CAP });
        }
        hi *= 2.0;
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { tol };
    if hi <= 1.0 {
        evaluations += 1;
        if let Some(w) = pred(lo)? {
            return Ok(Threshold {
                value: 0.5 * lo,
                lo: 0.0,
                hi: lo,
                evaluations,
                witness: Some(w),
            });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        match pred(mid)? {
            Some(w) => {
                hi = mid;
                witness = Some(w);
            }
            None => lo = mid,
        }
    }
    Ok(Threshold {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
        witness,
    })
}

/// Smallest λ with a solution in `O_ab`, to width `tol`.
pub fn lambda_min(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    bc: BoundaryKind,
    tol: f64,
    scan: &ScanConfig,
) -> Result<Threshold, ContinuationError> {
    bc.validate()?;
    threshold_search(tol, |l| Ok(has_admitted_solution(nl, l, domain, bc, scan)?))
}

#[derive(Debug, Clone)]
pub struct MultResult {
    pub threshold: Threshold,
    /// Solutions in `O_ab` at `1.05·hi`.
    pub count_at_check: usize,
    pub check: PointSolve,
}

/// Smallest λ whose truncated maximal solution stays at or above `alpha`.
///
/// Fails with `MultiplicityNotObserved` unless two solutions in `O_ab` show
/// up at `1.05` times the upper end of the final bracket.
pub fn lambda_mult(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    bc: BoundaryKind,
    tol: f64,
    opts: &SolveOptions,
) -> Result<MultResult, ContinuationError> {
    bc.validate()?;
    let grid = Grid::new(*domain, opts.n)?;
    let t = nl.truncate();
    let alpha = nl.alpha();
    let stop = MonotoneOptions {
        stop_below: Some(alpha),
        ..MonotoneOptions::default()
    };
    let threshold = threshold_search(tol, |l| {
        let out = monotone_iterate_with(&t, l, &grid, bc, &stop)?;
        Ok((!out.dipped_below && out.profile.min_value >= alpha).then_some(out.profile))
    })?;
    // The upper end is certified; the midpoint can sit below the fold when tol is coarse.
    let at = 1.05 * threshold.hi;
    let check = solve_point(nl, at, domain, bc, opts)?;
    let count = check.point.count_in_oab;
    if count < 2 {
        return Err(ContinuationError::MultiplicityNotObserved {
            lambda: at,
            found: count,
        });
    }
    Ok(MultResult {
        threshold,
        count_at_check: count,
        check,
    })
}

/// `λ_min` under Dirichlet conditions; requires the area condition.
pub fn lambda_infty(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    tol: f64,
    scan: &ScanConfig,
) -> Result<Threshold, ContinuationError> {
    let area = area_condition(nl)?;
    if !area.holds {
        return Err(ContinuationError::AreaConditionFails {
            worst_value: area.worst_value,
        });
    }
    lambda_min(nl, domain, BoundaryKind::Dirichlet, tol, scan)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    pub solve: SolveOptions,
    pub assume_no_patterns: bool,
    /// Width of the band below `beta` where `f' <= 0` is claimed.
    pub hyp_mon_delta: Option<f64>,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            solve: SolveOptions::default(),
            assume_no_patterns: true,
            hyp_mon_delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaZeroPoint {
    pub gamma: f64,
    /// `‖ū_γ - beta‖`
    pub maximal_distance: f64,
    pub maximal_sup: f64,
    pub second_sup: f64,
    /// `|sup ũ_γ - alpha|`
    pub second_alpha_distance: f64,
    pub second_center: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaZeroReport {
    pub lambda: f64,
    pub points: Vec<GammaZeroPoint>,
    /// Largest `ū_{γ_k}(x) - ū_{γ_{k+1}}(x)` with `γ_{k+1} < γ_k`; nonpositive when ū decreases in γ.
    pub ordering_violation: f64,
    /// `|∫ f~(ũ)|` at the last γ.
    pub compatibility_residual: f64,
    /// `"alpha"`, or `"alpha or pattern"` without the no-pattern assumption.
    pub second_limit: String,
    #[serde(skip)]
    pub maximal_profiles: Vec<SolutionProfile>,
    #[serde(skip)]
    pub second_profiles: Vec<SolutionProfile>,
    /// Every solution computed along the way.
    #[serde(skip)]
    pub all_profiles: Vec<(f64, SolutionProfile)>,
}

/// Checks `f' <= 0` on a sample of `(beta - delta, beta)`.
pub fn check_hyp_mon(nl: &Nonlinearity, delta: f64) -> Result<(), ContinuationError> {
    let beta = nl.beta();
    if !(delta > 0.0 && delta <= beta - nl.alpha()) {
        return Err(ContinuationError::InvalidParameter(format!(
            "hyp_mon_delta = {delta} out of range"
        )));
    }
    let k = 1000;
    for j in 1..k {
        let s = beta - delta + delta * j as f64 / k as f64;
        if nl.derivative(s).map_err(SolverError::from)? > 0.0 {
            return Err(ContinuationError::HypMonFails { at: s });
        }
    }
    Ok(())
}

/// Follows ū_γ and the lower solution ũ_γ as γ decreases toward 0.
pub fn gamma_limit_zero(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    lambda: f64,
    gammas: &[f64],
    opts: &LimitOptions,
) -> Result<GammaZeroReport, ContinuationError> {
    check_increasing(gammas, "gamma", false)?;
    if let Some(delta) = opts.hyp_mon_delta {
        check_hyp_mon(nl, delta)?;
    }
    let alpha = nl.alpha();
    let beta = nl.beta();
    let grid = Grid::new(*domain, opts.solve.n)?;
    let t = nl.truncate();

    let solves: Vec<Result<PointSolve, ContinuationError>> = thread_pool().install(|| {
        gammas
            .par_iter()
            .map(|&g| solve_point(nl, lambda, domain, BoundaryKind::Robin(g), &opts.solve))
            .collect()
    });

    let mut points = Vec::new();
    let mut maximal_profiles = Vec::new();
    let mut second_profiles: Vec<SolutionProfile> = Vec::new();
    let mut all_profiles = Vec::new();
    let mut last_good = None;
    for (k, (&g, solve)) in gammas.iter().zip(solves).enumerate() {
        let solve = solve?;
        let maximal = solve
            .maximal
            .clone()
            .expect("solve_point sets the maximal profile");
        if k == 0 && maximal.min_value < alpha {
            return Err(ContinuationError::Precondition(format!(
                "lambda = {lambda} is below lambda_mult at gamma = {g}"
            )));
        }
        for p in &solve.profiles {
            all_profiles.push((g, p.clone()));
        }
        let candidates: Vec<&SolutionProfile> = solve
            .profiles
            .iter()
            .filter(|p| {
                p.in_oab(alpha)
                    && sup_distance(&p.sample_on(&grid), &maximal.values) >= CROSS_SOURCE_TOL
            })
            .collect();
        let pick = match second_profiles.last() {
            None => candidates.first().copied(),
            Some(prev) => candidates.iter().copied().min_by(|a, b| {
                (a.sup_norm - prev.sup_norm)
                    .abs()
                    .total_cmp(&(b.sup_norm - prev.sup_norm).abs())
            }),
        };
        let Some(second) = pick else {
            return Err(ContinuationError::BranchLost {
                gamma: g,
                last_good,
            });
        };
        points.push(GammaZeroPoint {
            gamma: g,
            maximal_distance: sup_distance(&maximal.values, &vec![beta; maximal.values.len()]),
            maximal_sup: maximal.sup_norm,
            second_sup: second.sup_norm,
            second_alpha_distance: (second.sup_norm - alpha).abs(),
            second_center: second.center_value(),
        });
        second_profiles.push(second.clone());
        maximal_profiles.push(maximal);
        last_good = Some(g);
    }

    let ordering_violation = maximal_profiles
        .windows(2)
        .map(|w| {
            w[0].values
                .iter()
                .zip(&w[1].values)
                .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let last = second_profiles.last().expect("gamma grid is nonempty");
    let ft: Vec<f64> = last
        .sample_on(&grid)
        .iter()
        .map(|&s| t.value(s))
        .collect::<Result<_, _>>()
        .map_err(SolverError::from)?;
    let compatibility_residual = grid.integrate(&ft)?.abs();
    Ok(GammaZeroReport {
        lambda,
        points,
        ordering_violation,
        compatibility_residual,
        second_limit: if opts.assume_no_patterns {
            "alpha"
        } else {
            "alpha or pattern"
        }
        .to_string(),
        maximal_profiles,
        second_profiles,
        all_profiles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaInftyPoint {
    pub gamma: f64,
    /// Sup distance between the Robin and Dirichlet maximal solutions.
    pub distance: f64,
    pub boundary_value: f64,
    pub maximal_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaInftyReport {
    pub lambda: f64,
    pub dirichlet_sup: f64,
    pub points: Vec<GammaInftyPoint>,
    pub distance_decreasing: bool,
    #[serde(skip)]
    pub dirichlet: SolutionProfile,
    #[serde(skip)]
    pub robin: Vec<SolutionProfile>,
}

/// Maximal solution of the raw problem in `[0, beta]`, by monotone iteration.
pub fn maximal_raw(
    nl: &Nonlinearity,
    lambda: f64,
    grid: &Grid,
    bc: BoundaryKind,
) -> Result<SolutionProfile, SolverError> {
    Ok(monotone_iterate_with(nl, lambda, grid, bc, &MonotoneOptions::default())?.profile)
}

/// Compares Robin maximal solutions with the Dirichlet one as γ grows.
pub fn gamma_limit_infty(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    lambda: f64,
    gammas: &[f64],
    n: usize,
) -> Result<GammaInftyReport, ContinuationError> {
    check_increasing(gammas, "gamma", true)?;
    let area = area_condition(nl)?;
    if !area.holds {
        return Err(ContinuationError::AreaConditionFails {
            worst_value: area.worst_value,
        });
    }
    let grid = Grid::new(*domain, n)?;
    let dirichlet = maximal_raw(nl, lambda, &grid, BoundaryKind::Dirichlet)?;
    if dirichlet.sup_norm <= nl.alpha() {
        return Err(ContinuationError::BranchLost {
            gamma: f64::INFINITY,
            last_good: None,
        });
    }
    let robin: Vec<Result<SolutionProfile, SolverError>> = thread_pool().install(|| {
        gammas
            .par_iter()
            .map(|&g| maximal_raw(nl, lambda, &grid, BoundaryKind::Robin(g)))
            .collect()
    });
    let mut points = Vec::new();
    let mut profiles = Vec::new();
    let mut last_good = None;
    for (&g, r) in gammas.iter().zip(robin) {
        let p = r?;
        if p.sup_norm <= nl.alpha() {
            return Err(ContinuationError::BranchLost {
                gamma: g,
                last_good,
            });
        }
        points.push(GammaInftyPoint {
            gamma: g,
            distance: sup_distance(&p.values, &dirichlet.values),
            boundary_value: p.boundary_value(),
            maximal_sup: p.sup_norm,
        });
        profiles.push(p);
        last_good = Some(g);
    }
    let distance_decreasing = points.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(GammaInftyReport {
        lambda,
        dirichlet_sup: dirichlet.sup_norm,
        points,
        distance_decreasing,
        dirichlet,
        robin: profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::from_source;

    fn cubic() -> Nonlinearity {
        from_source("s*(s-1)*(3-s)", 1.0, 3.0, 0.0).unwrap()
    }

    fn interval() -> RadialDomain {
        RadialDomain::new(1, 1.0).unwrap()
    }

    #[test]
    fn threshold_search_brackets_a_step() {
        let t = threshold_search(1e-4, |l| {
            Ok((l > 3.7).then(|| {
                SolutionProfile::from_grid(
                    &Grid::new(interval(), 16).unwrap(),
                    vec![0.0; 17],
                    1.0,
                    Source::Monotone,
                )
            }))
        })
        .unwrap();
        assert!(t.hi - t.lo <= 1e-4 && t.lo <= 3.7 && t.hi >= 3.7);
        assert!((t.value - 3.7).abs() <= 1e-4);
    }

    #[test]
    fn threshold_search_reports_missing_bracket() {
        let r = threshold_search(1e-3, |_| Ok(None));
        assert!(matches!(r, Err(ContinuationError::NoUpperBracket { .. })));
    }

    #[test]
    fn neumann_point_contains_both_constants() {
        let opts = SolveOptions {
            n: 256,
            ..SolveOptions::default()
        };
        let s = solve_point(&cubic(), 2.0, &interval(), BoundaryKind::Neumann, &opts).unwrap();
        let sups: Vec<f64> = s.point.solutions.iter().map(|x| x.sup_norm).collect();
        assert!(sups.iter().any(|v| (v - 1.0).abs() < 1e-12), "{sups:?}");
        assert!(sups.iter().any(|v| (v - 3.0).abs() < 1e-12), "{sups:?}");
    }

    #[test]
    fn grids_are_validated() {
        let opts = SolveOptions::default();
        assert!(sweep_lambda(&cubic(), &interval(), BoundaryKind::Robin(1.0), &[], &opts).is_err());
        assert!(sweep_lambda(
            &cubic(),
            &interval(),
            BoundaryKind::Robin(1.0),
            &[2.0, 1.0],
            &opts
        )
        .is_err());
        let lim = LimitOptions::default();
        assert!(gamma_limit_zero(&cubic(), &interval(), 2.0, &[0.1, 1.0], &lim).is_err());
    }

    #[test]
    fn hyp_mon_band() {
        assert!(check_hyp_mon(&cubic(), 0.7).is_ok());
        assert!(matches!(
            check_hyp_mon(&cubic(), 0.9),
            Err(ContinuationError::HypMonFails { .. })
        ));
    }
}
