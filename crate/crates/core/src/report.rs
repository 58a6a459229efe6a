//! Run configuration, experiment dispatch and file output for the CLI.
//!
//! A run writes up to three files into the output directory: `diagram.csv`
//! for modes that produce solution lists, `report.json` with the numerical
//! results, and `summary.json` with the config echo, per-experiment status
//! and wall time. The first two are byte-stable across identical runs; the
//! summary is not, because of the clock.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::continuation::{
    check_hyp_mon, gamma_limit_infty, gamma_limit_zero, lambda_infty, lambda_min, lambda_mult,
    solve_point, sweep_gamma, sweep_lambda, BranchDiagram, ContinuationError, LimitOptions,
    SolveOptions, SweepMode, Threshold, Thresholds,
};
use crate::diagnostics::{pohozaev_check, solve_shifted_dirichlet};
use crate::discretization::{BoundaryKind, RadialDomain, DEFAULT_N, MIN_N};
use crate::nonlinearity::{area_condition, from_source, Nonlinearity};
use crate::solvers::{ScanConfig, SolutionProfile};

pub const CONFIG_VERSION: u32 = 1;
pub const SUMMARY_VERSION: &str = "1";
pub const CSV_HEADER: &str = "param,sup_norm,center_value,mu1_sign,source,in_Oab";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    SweepLambda,
    SweepGamma,
    Thresholds,
    LimitsZero,
    LimitsInfty,
    Area,
    Pohozaev,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::SweepLambda => "sweep-lambda",
            Mode::SweepGamma => "sweep-gamma",
            Mode::Thresholds => "thresholds",
            Mode::LimitsZero => "limits-zero",
            Mode::LimitsInfty => "limits-infty",
            Mode::Area => "area",
            Mode::Pohozaev => "pohozaev",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BcSpec {
    Robin { gamma: f64 },
    Neumann,
    Dirichlet,
}

impl BcSpec {
    pub fn kind(self) -> BoundaryKind {
        match self {
            BcSpec::Robin { gamma } => BoundaryKind::Robin(gamma),
            BcSpec::Neumann => BoundaryKind::Neumann,
            BcSpec::Dirichlet => BoundaryKind::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            csv: default_csv(),
            report: default_report(),
            summary: default_summary(),
        }
    }
}

fn default_dir() -> String {
    "out".into()
}
fn default_csv() -> String {
    "diagram.csv".into()
}
fn default_report() -> String {
    "report.json".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_dim() -> usize {
    1
}
fn default_radius() -> f64 {
    1.0
}
fn default_n() -> usize {
    DEFAULT_N
}
fn default_true() -> bool {
    true
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_min_tol() -> f64 {
    1e-4
}
fn default_mult_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub f_expr: String,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub domain_floor: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub bc: BcSpec,
    /// Must agree with the command line when given.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub gamma_grid: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_true")]
    pub assume_no_patterns: bool,
    #[serde(default)]
    pub hyp_mon_delta: Option<f64>,
    /// Shift used by the Pohozaev mode.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Attach threshold values to a λ sweep.
    #[serde(default)]
    pub thresholds: bool,
    #[serde(default = "default_min_tol")]
    pub lambda_min_tol: f64,
    #[serde(default = "default_mult_tol")]
    pub lambda_mult_tol: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

/// Parses a config; unknown keys are rejected with their path.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::at(".", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(l) = o.lambda {
            self.lambda = Some(l);
        }
        if let Some(g) = o.gamma {
            self.bc = BcSpec::Robin { gamma: g };
        }
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.to_string_lossy().into_owned();
        }
    }

    pub fn domain(&self) -> Result<RadialDomain, ConfigError> {
        RadialDomain::new(self.dim, self.radius).map_err(|e| ConfigError::at("dim", e.to_string()))
    }

    fn lambda_value(&self) -> Result<f64, ConfigError> {
        self.lambda
            .ok_or_else(|| ConfigError::at("lambda", "required by this mode"))
    }

    /// Checks everything that does not need the nonlinearity.
    pub fn validate(&self, mode: Mode) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::at(
                "version",
                format!("unsupported version {}", self.version),
            ));
        }
        if let Some(m) = self.mode {
            if m != mode {
                return Err(ConfigError::at(
                    "mode",
                    format!(
                        "config says {} but the command line says {}",
                        m.as_str(),
                        mode.as_str()
                    ),
                ));
            }
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("domain_floor", self.domain_floor),
            ("radius", self.radius),
            ("epsilon", self.epsilon),
            ("lambda_min_tol", self.lambda_min_tol),
            ("lambda_mult_tol", self.lambda_mult_tol),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::at(key, "must be finite"));
            }
        }
        if self.alpha >= self.beta {
            return Err(ConfigError::at("alpha", "alpha must be < beta"));
        }
        if self.alpha <= 0.0 {
            return Err(ConfigError::at("alpha", "alpha must be > 0"));
        }
        if self.dim == 0 {
            return Err(ConfigError::at("dim", "must be at least 1"));
        }
        if self.radius <= 0.0 {
            return Err(ConfigError::at("radius", "must be positive"));
        }
        if self.n < MIN_N {
            return Err(ConfigError::at("n", format!("must be at least {MIN_N}")));
        }
        if let BcSpec::Robin { gamma } = self.bc {
            if !(gamma.is_finite() && gamma >= 0.0) {
                return Err(ConfigError::at("bc.gamma", "must be finite and >= 0"));
            }
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(ConfigError::at("lambda", "must be positive and finite"));
            }
        }
        if self.lambda_min_tol <= 0.0 || self.lambda_mult_tol <= 0.0 {
            return Err(ConfigError::at(
                "lambda_min_tol",
                "tolerances must be positive",
            ));
        }
        if let Some(d) = self.hyp_mon_delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(ConfigError::at(
                    "hyp_mon_delta",
                    "must be positive and finite",
                ));
            }
        }
        check_grid("lambda_grid", &self.lambda_grid, true)?;
        check_grid("gamma_grid", &self.gamma_grid, false)?;
        match mode {
            Mode::Solve | Mode::Pohozaev => {
                self.lambda_value()?;
            }
            Mode::SweepLambda => {
                if self.lambda_grid.is_empty() {
                    return Err(ConfigError::at(
                        "lambda_grid",
                        "must be nonempty for sweep-lambda",
                    ));
                }
            }
            Mode::SweepGamma | Mode::LimitsZero | Mode::LimitsInfty => {
                self.lambda_value()?;
                if self.gamma_grid.is_empty() {
                    return Err(ConfigError::at(
                        "gamma_grid",
                        format!("must be nonempty for {}", mode.as_str()),
                    ));
                }
            }
            Mode::Thresholds | Mode::Area => {}
        }
        if mode == Mode::Pohozaev && !(self.epsilon > 0.0 && self.epsilon < self.beta - self.alpha)
        {
            return Err(ConfigError::at("epsilon", "must lie in (0, beta - alpha)"));
        }
        Ok(())
    }

    /// Builds and certifies the nonlinearity.
    pub fn nonlinearity(&self) -> Result<Nonlinearity, ConfigError> {
        from_source(&self.f_expr, self.alpha, self.beta, self.domain_floor)
            .map_err(|e| ConfigError::at("f_expr", e.to_string()))
    }
}

fn check_grid(key: &str, grid: &[f64], positive: bool) -> Result<(), ConfigError> {
    for (i, v) in grid.iter().enumerate() {
        let ok = v.is_finite() && if positive { *v > 0.0 } else { *v >= 0.0 };
        if !ok {
            return Err(ConfigError::at(
                &format!("{key}[{i}]"),
                "must be finite and in range",
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The computation finished but a predicted property failed.
    Violation,
    /// A numerical failure.
    Failed,
    /// A documented non-result such as an empty upper bracket.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub name: String,
    pub status: Status,
    pub message: Option<String>,
}

impl Experiment {
    fn new(name: &str, status: Status, message: Option<String>) -> Experiment {
        Experiment {
            name: name.to_string(),
            status,
            message,
        }
    }

    fn check(name: &str, ok: bool, message: String) -> Experiment {
        if ok {
            Experiment::new(name, Status::Ok, None)
        } else {
            Experiment::new(name, Status::Violation, Some(message))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub tool_version: &'static str,
    pub mode: Mode,
    pub config: RunConfig,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub experiments: Vec<Experiment>,
    pub outputs: Vec<String>,
}

/// What a mode produced, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub csv: Option<String>,
    pub report: Value,
    pub experiments: Vec<Experiment>,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        if self.experiments.iter().any(|e| e.status == Status::Failed) {
            EXIT_NUMERICAL
        } else if self
            .experiments
            .iter()
            .any(|e| e.status == Status::Violation)
        {
            EXIT_VIOLATION
        } else {
            EXIT_OK
        }
    }
}

/// `printf("%.{sig}g")`.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Diagram rows sorted by `(param, sup_norm)`, header first, newline-terminated.
pub fn diagram_csv(diagram: &BranchDiagram) -> String {
    let mut rows: Vec<(f64, f64, String)> = Vec::new();
    for p in &diagram.points {
        for s in &p.solutions {
            let sign = s.mu1_sign.map(|v| v.to_string()).unwrap_or_default();
            let line = format!(
                "{},{},{},{},{},{}",
                format_sig(p.param, 12),
                format_sig(s.sup_norm, 12),
                format_sig(s.center_value, 12),
                sign,
                s.source.as_str(),
                s.in_oab
            );
            rows.push((p.param, s.sup_norm, line));
        }
    }
    rows.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (_, _, line) in rows {
        let _ = writeln!(out, "{line}");
    }
    out
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        n: cfg.n,
        ..SolveOptions::default()
    }
}

fn classify(name: &str, e: &ContinuationError) -> Experiment {
    let status = match e {
        ContinuationError::NoUpperBracket { .. } | ContinuationError::AreaConditionFails { .. } => {
            Status::NotFound
        }
        ContinuationError::MultiplicityNotObserved { .. }
        | ContinuationError::BranchLost { .. }
        | ContinuationError::HypMonFails { .. }
        | ContinuationError::Precondition(_) => Status::Violation,
        _ => Status::Failed,
    };
    Experiment::new(name, status, Some(e.to_string()))
}

fn threshold_json(t: &Threshold) -> Value {
    json!({
        "value": t.value,
        "lo": t.lo,
        "hi": t.hi,
        "evaluations": t.evaluations,
    })
}

fn error_json(e: &ContinuationError) -> Value {
    json!({ "error": e.to_string() })
}

fn sweep_experiments(diagram: &BranchDiagram, name: &str) -> Vec<Experiment> {
    let mut out = Vec::new();
    let failed: Vec<String> = diagram
        .points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| format!("{}: {e}", p.param)))
        .collect();
    out.push(if failed.is_empty() {
        Experiment::new(name, Status::Ok, None)
    } else {
        Experiment::new(name, Status::Failed, Some(failed.join("; ")))
    });
    out
}

/// Computes `λ_min`, `λ_mult` and `λ_∞` and checks their ordering.
fn thresholds_for(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    bc: BoundaryKind,
    cfg: &RunConfig,
    experiments: &mut Vec<Experiment>,
) -> (Thresholds, Value) {
    let scan = ScanConfig::default();
    let mut th = Thresholds::default();
    let min = lambda_min(nl, domain, bc, cfg.lambda_min_tol, &scan);
    let mult = lambda_mult(nl, domain, bc, cfg.lambda_mult_tol, &solve_options(cfg));
    let inf = lambda_infty(nl, domain, cfg.lambda_min_tol, &scan);
    let min_json = match &min {
        Ok(t) => {
            th.lambda_min = Some(t.value);
            experiments.push(Experiment::new("lambda_min", Status::Ok, None));
            threshold_json(t)
        }
        Err(e) => {
            experiments.push(classify("lambda_min", e));
            error_json(e)
        }
    };
    let mult_json = match &mult {
        Ok(m) => {
            th.lambda_mult = Some(m.threshold.value);
            experiments.push(Experiment::new("lambda_mult", Status::Ok, None));
            let mut v = threshold_json(&m.threshold);
            v["count_at_check"] = json!(m.count_at_check);
            v
        }
        Err(e) => {
            experiments.push(classify("lambda_mult", e));
            error_json(e)
        }
    };
    let inf_json = match &inf {
        Ok(t) => {
            th.lambda_infty = Some(t.value);
            experiments.push(Experiment::new("lambda_infty", Status::Ok, None));
            threshold_json(t)
        }
        Err(e) => {
            experiments.push(classify("lambda_infty", e));
            error_json(e)
        }
    };
    if let (Some(a), Some(b)) = (th.lambda_min, th.lambda_mult) {
        experiments.push(Experiment::check(
            "threshold_ordering",
            a <= b + 2.0 * cfg.lambda_mult_tol,
            format!("lambda_min = {a} exceeds lambda_mult = {b} by more than 2 tol"),
        ));
    }
    let value = json!({
        "lambda_min": min_json,
        "lambda_mult": mult_json,
        "lambda_infty": inf_json,
    });
    (th, value)
}

fn pohozaev_run(
    nl: &Nonlinearity,
    domain: &RadialDomain,
    cfg: &RunConfig,
    lambda: f64,
) -> RunResult {
    let eps = cfg.epsilon;
    let mut experiments = Vec::new();
    let coarse = ScanConfig::default();
    let fine = ScanConfig {
        steps: 2 * coarse.steps,
        ..coarse
    };
    let solve = |l: f64, scan: &ScanConfig| solve_shifted_dirichlet(nl, l, domain, eps, scan);
    let (a, b, c) = match (
        solve(lambda, &coarse),
        solve(lambda, &fine),
        solve(4.0 * lambda, &coarse),
    ) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            experiments.push(Experiment::new(
                "pohozaev",
                Status::Failed,
                Some(e.to_string()),
            ));
            return RunResult {
                csv: None,
                report: json!({ "mode": "pohozaev", "error": e.to_string() }),
                experiments,
            };
        }
    };
    if a.is_empty() || c.is_empty() {
        experiments.push(Experiment::new(
            "pohozaev",
            Status::Failed,
            Some("no shifted Dirichlet solution".into()),
        ));
        return RunResult {
            csv: None,
            report: json!({ "mode": "pohozaev", "error": "no shifted Dirichlet solution" }),
            experiments,
        };
    }
    let mut rows = Vec::new();
    let mut closure_ok = true;
    let mut order_ok = true;
    for p in &a {
        let nearest = b.iter().min_by(|x, y| {
            (x.sup_norm - p.sup_norm)
                .abs()
                .total_cmp(&(y.sup_norm - p.sup_norm).abs())
        });
        let r1 = pohozaev_check(nl, lambda, domain, p, eps);
        let r2 = nearest.map(|q| pohozaev_check(nl, lambda, domain, q, eps));
        match (r1, r2) {
            (Ok(r1), Some(Ok(r2))) => {
                closure_ok &= r1.rel_error < 1e-3;
                let ratio = r1.rel_error / r2.rel_error.max(f64::MIN_POSITIVE);
                order_ok &= ratio >= 3.0;
                rows.push(json!({
                    "sup_norm": p.sup_norm,
                    "slope": p.boundary_slope(),
                    "coarse": r1,
                    "fine": r2,
                    "improvement": ratio,
                }));
            }
            (Err(e), _) | (_, Some(Err(e))) => {
                experiments.push(Experiment::new(
                    "pohozaev",
                    Status::Failed,
                    Some(e.to_string()),
                ));
                closure_ok = false;
            }
            (Ok(_), None) => {
                closure_ok = false;
            }
        }
    }
    let slope = |v: &[SolutionProfile]| {
        v.last()
            .and_then(|p| p.boundary_slope())
            .unwrap_or(0.0)
            .abs()
    };
    let (s1, s4) = (slope(&a), slope(&c));
    experiments.push(Experiment::check(
        "pohozaev_closure",
        closure_ok,
        "relative error at or above 1e-3".into(),
    ));
    experiments.push(Experiment::check(
        "pohozaev_second_order",
        order_ok,
        "refinement gained less than 3x".into(),
    ));
    experiments.push(Experiment::check(
        "slope_divergence",
        s4 >= 1.5 * s1,
        format!(
            "|slope(4 lambda)| = {s4} < 1.5 |slope(lambda)| = {}",
            1.5 * s1
        ),
    ));
    RunResult {
        csv: None,
        report: json!({
            "mode": "pohozaev",
            "lambda": lambda,
            "epsilon": eps,
            "solutions": rows,
            "slope_lambda": s1,
            "slope_4lambda": s4,
        }),
        experiments,
    }
}

/// Runs one mode on a validated config.
pub fn execute(cfg: &RunConfig, mode: Mode) -> Result<RunResult, ConfigError> {
    cfg.validate(mode)?;
    let nl = cfg.nonlinearity()?;
    let domain = cfg.domain()?;
    if let Some(d) = cfg.hyp_mon_delta {
        if mode == Mode::LimitsZero {
            check_hyp_mon(&nl, d).map_err(|e| ConfigError::at("hyp_mon_delta", e.to_string()))?;
        }
    }
    let bc = cfg.bc.kind();
    let opts = solve_options(cfg);
    let mut experiments = Vec::new();
    let result = match mode {
        Mode::Area => {
            let r = area_condition(&nl).map_err(|e| ConfigError::at("f_expr", e.to_string()))?;
            experiments.push(Experiment::new("area_condition", Status::Ok, None));
            RunResult {
                csv: None,
                report: json!({
                    "mode": "area",
                    "holds": r.holds,
                    "r_alpha": r.r_alpha,
                    "worst_s": r.worst_s,
                    "worst_value": r.worst_value,
                    "degenerate": r.degenerate,
                    "shift_m": nl.shift_m(),
                }),
                experiments,
            }
        }
        Mode::Solve => {
            let lambda = cfg.lambda_value()?;
            match solve_point(&nl, lambda, &domain, bc, &opts) {
                Ok(s) => {
                    experiments.push(Experiment::new("solve", Status::Ok, None));
                    let diagram = BranchDiagram {
                        mode: SweepMode::SweepLambda { bc },
                        points: vec![s.point],
                        thresholds: Thresholds::default(),
                    };
                    RunResult {
                        csv: Some(diagram_csv(&diagram)),
                        report: json!({ "mode": "solve", "diagram": diagram }),
                        experiments,
                    }
                }
                Err(e) => {
                    experiments.push(classify("solve", &e));
                    RunResult {
                        csv: None,
                        report: json!({ "mode": "solve", "error": e.to_string() }),
                        experiments,
                    }
                }
            }
        }
        Mode::SweepLambda => match sweep_lambda(&nl, &domain, bc, &cfg.lambda_grid, &opts) {
            Ok(mut diagram) => {
                experiments.extend(sweep_experiments(&diagram, "sweep_lambda"));
                experiments.push(Experiment::check(
                    "maximal_branch_monotone",
                    diagram.maximal_nondecreasing(1e-8),
                    "maximal branch sup-norm decreased along the sweep".into(),
                ));
                let mut extra = Value::Null;
                if cfg.thresholds {
                    let (th, v) = thresholds_for(&nl, &domain, bc, cfg, &mut experiments);
                    diagram.thresholds = th;
                    extra = v;
                }
                RunResult {
                    csv: Some(diagram_csv(&diagram)),
                    report: json!({ "mode": "sweep-lambda", "diagram": diagram, "thresholds_detail": extra }),
                    experiments,
                }
            }
            Err(e) => return Err(ConfigError::at("lambda_grid", e.to_string())),
        },
        Mode::SweepGamma => {
            let lambda = cfg.lambda_value()?;
            match sweep_gamma(&nl, &domain, lambda, &cfg.gamma_grid, &opts) {
                Ok(diagram) => {
                    experiments.extend(sweep_experiments(&diagram, "sweep_gamma"));
                    RunResult {
                        csv: Some(diagram_csv(&diagram)),
                        report: json!({ "mode": "sweep-gamma", "diagram": diagram }),
                        experiments,
                    }
                }
                Err(e) => return Err(ConfigError::at("gamma_grid", e.to_string())),
            }
        }
        Mode::Thresholds => {
            let (th, v) = thresholds_for(&nl, &domain, bc, cfg, &mut experiments);
            RunResult {
                csv: None,
                report: json!({ "mode": "thresholds", "thresholds": th, "detail": v }),
                experiments,
            }
        }
        Mode::LimitsZero => {
            let lambda = cfg.lambda_value()?;
            let lim = LimitOptions {
                solve: opts,
                assume_no_patterns: cfg.assume_no_patterns,
                hyp_mon_delta: cfg.hyp_mon_delta,
            };
            match gamma_limit_zero(&nl, &domain, lambda, &cfg.gamma_grid, &lim) {
                Ok(r) => {
                    experiments.push(Experiment::check(
                        "maximal_monotone_in_gamma",
                        r.ordering_violation <= 1e-8,
                        format!(
                            "maximal solution grew with gamma by {:e}",
                            r.ordering_violation
                        ),
                    ));
                    RunResult {
                        csv: None,
                        report: json!({ "mode": "limits-zero", "result": r }),
                        experiments,
                    }
                }
                Err(ContinuationError::InvalidParameter(m)) => {
                    return Err(ConfigError::at("gamma_grid", m))
                }
                Err(e) => {
                    experiments.push(classify("gamma_limit_zero", &e));
                    RunResult {
                        csv: None,
                        report: json!({ "mode": "limits-zero", "error": e.to_string() }),
                        experiments,
                    }
                }
            }
        }
        Mode::LimitsInfty => {
            let lambda = cfg.lambda_value()?;
            match gamma_limit_infty(&nl, &domain, lambda, &cfg.gamma_grid, cfg.n) {
                Ok(r) => {
                    experiments.push(Experiment::check(
                        "distance_decreasing",
                        r.distance_decreasing,
                        "distance to the Dirichlet solution did not decrease".into(),
                    ));
                    RunResult {
                        csv: None,
                        report: json!({ "mode": "limits-infty", "result": r }),
                        experiments,
                    }
                }
                Err(ContinuationError::InvalidParameter(m)) => {
                    return Err(ConfigError::at("gamma_grid", m))
                }
                Err(e) => {
                    let mut ex = classify("gamma_limit_infty", &e);
                    if ex.status == Status::NotFound {
                        ex.status = Status::Violation;
                    }
                    experiments.push(ex);
                    RunResult {
                        csv: None,
                        report: json!({ "mode": "limits-infty", "error": e.to_string() }),
                        experiments,
                    }
                }
            }
        }
        Mode::Pohozaev => pohozaev_run(&nl, &domain, cfg, cfg.lambda_value()?),
    };
    Ok(result)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// Runs a mode and writes its files; returns the exit code.
pub fn run(cfg: &RunConfig, mode: Mode) -> i32 {
    let start = Instant::now();
    let result = match execute(cfg, mode) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let dir = PathBuf::from(&cfg.output.dir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return EXIT_NUMERICAL;
    }
    let mut outputs = Vec::new();
    let mut files = Vec::new();
    if let Some(csv) = &result.csv {
        files.push((dir.join(&cfg.output.csv), csv.clone()));
    }
    files.push((dir.join(&cfg.output.report), to_json_text(&result.report)));
    for (path, text) in &files {
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("cannot write {}: {e}", path.display());
            return EXIT_NUMERICAL;
        }
        outputs.push(path.to_string_lossy().into_owned());
    }
    let code = result.exit_code();
    for e in &result.experiments {
        if e.status != Status::Ok {
            eprintln!(
                "{}: {:?}{}",
                e.name,
                e.status,
                e.message
                    .as_ref()
                    .map(|m| format!(" ({m})"))
                    .unwrap_or_default()
            );
        }
    }
    let summary_path = dir.join(&cfg.output.summary);
    outputs.push(summary_path.to_string_lossy().into_owned());
    let summary = Summary {
        version: SUMMARY_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        mode,
        config: cfg.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        exit_code: code,
        experiments: result.experiments,
        outputs,
    };
    if let Err(e) = std::fs::write(&summary_path, to_json_text(&summary)) {
        eprintln!("cannot write {}: {e}", summary_path.display());
        return EXIT_NUMERICAL;
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"f_expr": "s*(s-1)*(3-s)", "alpha": 1, "beta": 3, "bc": {"kind": "robin", "gamma": 1}, "lambda": 50}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.n, 1024);
        assert_eq!(c.dim, 1);
        assert_eq!(c.radius, 1.0);
        assert!(c.assume_no_patterns);
        assert_eq!(c.output, OutputSpec::default());
        c.validate(Mode::Solve).unwrap();
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse_config(
            r#"{"f_expr": "s", "alpha": 1, "beta": 3, "bc": {"kind": "neumann"}, "gama": 1}"#,
        )
        .unwrap_err();
        assert!(e.message.contains("gama"), "{e}");
        let e = parse_config(
            r#"{"f_expr": "s", "alpha": 1, "beta": 3, "bc": {"kind": "robin", "gama": 1}}"#,
        )
        .unwrap_err();
        assert!(e.message.contains("gama"), "{e}");
        assert!(e.path.starts_with("bc"), "{e:?}");
    }

    #[test]
    fn alpha_must_be_below_beta() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.alpha = 3.0;
        let e = c.validate(Mode::Solve).unwrap_err();
        assert_eq!(e.message, "alpha must be < beta");
    }

    #[test]
    fn sweeps_need_grids() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(
            c.validate(Mode::SweepLambda).unwrap_err().path,
            "lambda_grid"
        );
        assert_eq!(c.validate(Mode::SweepGamma).unwrap_err().path, "gamma_grid");
    }

    #[test]
    fn mode_conflict_is_rejected() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.mode = Some(Mode::Area);
        assert_eq!(c.validate(Mode::Solve).unwrap_err().path, "mode");
        assert!(c.validate(Mode::Area).is_ok());
    }

    #[test]
    fn overrides_win() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.apply(&Overrides {
            lambda: Some(7.0),
            gamma: Some(0.5),
            n: Some(64),
            out: Some(PathBuf::from("x")),
        });
        assert_eq!(
            (c.lambda, c.bc, c.n, c.output.dir.as_str()),
            (Some(7.0), BcSpec::Robin { gamma: 0.5 }, 64, "x")
        );
    }

    #[test]
    fn sig_formatting_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (2.5, "2.5"),
            (-3.25, "-3.25"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0 * 1e-5, "6.66666666667e-06"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0001, "0.0001"),
            (0.99999999999999, "1"),
            (100.0, "100"),
        ];
        for (x, s) in cases {
            assert_eq!(format_sig(x, 12), s, "{x}");
        }
    }

    #[test]
    fn area_mode_reports_r_alpha() {
        let c = parse_config(MINIMAL).unwrap();
        let r = execute(&c, Mode::Area).unwrap();
        assert_eq!(r.report["holds"], json!(true));
        let ra = r.report["r_alpha"].as_f64().unwrap();
        assert!((ra - (16.0 - 40f64.sqrt()) / 6.0).abs() < 1e-4);
        assert_eq!(r.exit_code(), EXIT_OK);
    }

    #[test]
    fn numerical_failures_outrank_violations() {
        let mk = |status| Experiment::new("x", status, None);
        let r = |v: Vec<Experiment>| RunResult {
            csv: None,
            report: Value::Null,
            experiments: v,
        };
        assert_eq!(
            r(vec![mk(Status::Ok), mk(Status::NotFound)]).exit_code(),
            EXIT_OK
        );
        assert_eq!(
            r(vec![mk(Status::Violation), mk(Status::Ok)]).exit_code(),
            EXIT_VIOLATION
        );
        assert_eq!(
            r(vec![mk(Status::Violation), mk(Status::Failed)]).exit_code(),
            EXIT_NUMERICAL
        );
    }
}
