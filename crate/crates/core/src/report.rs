//! Report assembly for the command-line front end.
//!
//! Each command returns a typed result; [`Report`] wraps it with the tool version,
//! seed, tolerances and exponent convention. Everything nondeterministic lives in
//! the `metadata` block so that two runs with the same input and seed serialize
//! identically once that block is removed.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bergman::{self, BergmanReport, JetIdealProblem};
use crate::error::{Error, Result};
use crate::family::{self, CurvatureReport, ConvexityReport, GrowthFit, MetricFamily, Region};
use crate::filtration::{self, build_filtration, DirectionProbe, DirectionReport, Filtration, TheoremReport};
use crate::fit::TailFit;
use crate::flow::{self, check_lambda_monotone, compute_flow, flat_limit_from_flow, FlatMetricJson, MonotoneReport, SpectralFlow};
use crate::hermitian::json::{matrix_to_json, vector_from_json, MatrixJson, VectorJson};
use crate::hermitian::{FiberVector, C64};
use crate::openness::{self, identity_grid, openness_interval, IdentityCheck, ModelWeight, OpennessConfig, OpennessDemo};
use crate::quad::Quadrature;
use crate::radial::RadialProfile;
use crate::synth::{gaussian_vector, rng};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exponent convention of the family commands.
pub const FAMILY_EXPONENT_CONVENTION: &str =
    "alpha(u) = lim log(||u||_t^2) / t; beta(v) = -lim log(||v||_{-t}^2) / t with ||.||_{-t} dual to h(t)";

/// Random directions sampled per filtration level when no directions file is given.
pub const SAMPLED_DUALS_PER_LEVEL: usize = 2;
pub const SAMPLED_VECTORS: usize = 4;
/// Directions used by `validate` for the convexity and growth probes.
pub const VALIDATION_DIRECTIONS: usize = 16;
pub const CURVATURE_SECTIONS: usize = 4;
/// Stencil spacing of the curvature check.
pub const CURVATURE_STEP: f64 = 0.05;

const IDENTITY_XS: [f64; 5] = [-3.0, -2.0, -1.0, -0.5, 0.0];
const IDENTITY_PS: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 1.9];
const IDENTITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    ValidationFailure,
    NonConvergent,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ValidationFailure => 2,
            Status::NonConvergent => 3,
        }
    }

    fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Pass => 0,
            Status::ValidationFailure => 1,
            Status::NonConvergent => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

/// Run parameters shared by every command.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub grid_points: usize,
    /// Truncation of the family (or jet-norm family) horizon, if any.
    pub t_max: Option<f64>,
    pub cluster_tol: f64,
    pub fit: TailFit,
    pub decay_fit: TailFit,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            grid_points: flow::DEFAULT_GRID_POINTS,
            t_max: None,
            cluster_tol: flow::CLUSTER_TOL,
            fit: TailFit::default(),
            decay_fit: TailFit::decay(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(Error::schema("grid_points", format!("need at least 16, got {}", self.grid_points)));
        }
        if !(self.cluster_tol > 0.0 && self.cluster_tol.is_finite()) {
            return Err(Error::schema("cluster_tol", "must be positive"));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::schema("t_max", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Thresholds in force for a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub cluster_tol: f64,
    pub fit_drift: f64,
    pub decay_fit_drift: f64,
    pub trust_ratio: f64,
    pub convexity: f64,
    pub growth_slope: f64,
    pub lambda_monotone: f64,
    pub domination: f64,
    pub annihilation: f64,
    pub separation: f64,
    pub integrability_margin: f64,
    pub exponent_match: f64,
    pub model_rel: f64,
    pub identity: f64,
    pub moment_rel: f64,
    pub kernel_tail: f64,
}

impl Tolerances {
    pub fn new(cfg: &RunConfig) -> Self {
        Tolerances {
            cluster_tol: cfg.cluster_tol,
            fit_drift: cfg.fit.tol,
            decay_fit_drift: cfg.decay_fit.tol,
            trust_ratio: cfg.fit.trust_ratio,
            convexity: family::CONVEXITY_TOL,
            growth_slope: family::GROWTH_SLOPE_TOL,
            lambda_monotone: flow::MONOTONE_TOL,
            domination: flow::DOMINATION_TOL,
            annihilation: filtration::ANNIHILATION_TOL,
            separation: filtration::SEPARATION_TOL,
            integrability_margin: filtration::INTEGRABILITY_MARGIN,
            exponent_match: filtration::EXPONENT_MATCH_TOL,
            model_rel: openness::MODEL_REL_TOL,
            identity: IDENTITY_TOL,
            moment_rel: bergman::MOMENT_REL_TOL,
            kernel_tail: bergman::KERNEL_TAIL_TOL,
        }
    }
}

/// Nondeterministic run information; excluded from reproducibility comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

impl Metadata {
    pub fn now(elapsed_seconds: f64) -> Self {
        let generated_unix_seconds = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Metadata { generated_unix_seconds, elapsed_seconds }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub exponent_convention: String,
    pub config: RunConfig,
    pub tolerances: Tolerances,
    pub status: Status,
    pub result: T,
    pub metadata: Metadata,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, cfg: &RunConfig, convention: &str, status: Status, result: T, metadata: Metadata) -> Self {
        Report {
            command: command.into(),
            tool_version: TOOL_VERSION.into(),
            seed: cfg.seed,
            exponent_convention: convention.into(),
            config: *cfg,
            tolerances: Tolerances::new(cfg),
            status,
            result,
            metadata,
        }
    }
}

/// Optional user-supplied directions: vectors for `alpha(u)`, dual vectors for the
/// equivalence checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsFile {
    #[serde(default)]
    pub vectors: Vec<VectorJson>,
    #[serde(default)]
    pub duals: Vec<VectorJson>,
}

impl DirectionsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    fn check(&self, n: usize) -> Result<(Vec<FiberVector>, Vec<FiberVector>)> {
        let conv = |list: &[VectorJson], field: &str| {
            list.iter()
                .enumerate()
                .map(|(i, v)| {
                    if v.len() != n {
                        return Err(Error::schema(format!("{field}[{i}]"), format!("expected {n} entries, got {}", v.len())));
                    }
                    let f = FiberVector::new(vector_from_json(v));
                    if f.is_zero() {
                        return Err(Error::schema(format!("{field}[{i}]"), "zero vector"));
                    }
                    Ok(f)
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok((conv(&self.vectors, "vectors")?, conv(&self.duals, "duals")?))
    }
}

/// Applies the `t_max` override.
pub fn prepare_family(fam: MetricFamily, cfg: &RunConfig) -> Result<MetricFamily> {
    match cfg.t_max {
        Some(t) if t < fam.t_max() => fam.truncated(t),
        Some(t) if t > fam.t_max() => Err(Error::OutOfRange { t, t_max: fam.t_max() }),
        _ => Ok(fam),
    }
}

fn random_vectors(seed: u64, n: usize, count: usize) -> Vec<FiberVector> {
    let mut r = rng(seed);
    (0..count).map(|_| FiberVector::new(gaussian_vector(&mut r, n))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub kind: String,
    pub t_max: f64,
    pub convexity: ConvexityReport,
    /// `None` when the horizon is too short for the stencil.
    pub curvature: Option<CurvatureReport>,
    /// `None` when the horizon is too short for a growth fit.
    pub growth: Option<GrowthFit>,
    pub pass: bool,
}

pub fn validate_family(fam: &MetricFamily, cfg: &RunConfig) -> Result<(Status, ValidationReport)> {
    let n = fam.dim();
    let dirs = random_vectors(cfg.seed, n, VALIDATION_DIRECTIONS);
    let grid = family::closed_grid(0.0, fam.t_max(), cfg.grid_points);
    let convexity = fam.check_convexity(&dirs, &grid)?;
    let curvature = if fam.t_max() > 3.0 {
        let t_hi = (fam.t_max() - 1.0).min(5.0);
        let region = Region { t_min: 1.0, t_max: t_hi, y_min: -2.0, y_max: 2.0 };
        let sections: Vec<_> = dirs.chunks(2).take(CURVATURE_SECTIONS).map(|c| (c[0].clone(), c[1].clone())).collect();
        Some(fam.check_negative_curvature(&sections, &region, CURVATURE_STEP)?)
    } else {
        None
    };
    let growth = if fam.t_max() >= 10.0 { Some(fam.check_moderate_growth(&dirs, cfg.grid_points)?) } else { None };
    let pass = convexity.pass && curvature.as_ref().is_none_or(|c| c.pass) && growth.as_ref().is_none_or(|g| g.moderate);
    let status = if pass { Status::Pass } else { Status::ValidationFailure };
    Ok((
        status,
        ValidationReport { n, kind: fam.kind().into(), t_max: fam.t_max(), convexity, curvature, growth, pass },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatLimitReport {
    pub grid: Vec<f64>,
    pub lambdas: Vec<Vec<f64>>,
    pub lambda_monotonicity: MonotoneReport,
    /// Flagged clusters of the final grid point, as index ranges.
    pub clusters: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat: Option<FlatMetricJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Flow and flat limit. A non-convergent exponent fit yields a partial report.
fn flat_stage(fam: &MetricFamily, cfg: &RunConfig) -> Result<(SpectralFlow, FlatLimitReport, Option<flow::FlatMetric>)> {
    let flow = compute_flow(fam, &fam.default_grid(cfg.grid_points))?;
    let mut report = FlatLimitReport {
        grid: flow.grid.clone(),
        lambdas: flow.lambdas.clone(),
        lambda_monotonicity: check_lambda_monotone(&flow),
        clusters: flow.clusters.last().cloned().unwrap_or_default(),
        flat: None,
        error: None,
    };
    match flat_limit_from_flow(fam, &flow, &cfg.fit) {
        Ok(flat) => {
            report.flat = Some(flat.report());
            Ok((flow, report, Some(flat)))
        }
        Err(e @ Error::NonConvergent { .. }) => {
            log::warn!("flat limit: {e}");
            report.error = Some(e.to_string());
            Ok((flow, report, None))
        }
        Err(e) => Err(e),
    }
}

pub fn flat_limit_report(fam: &MetricFamily, cfg: &RunConfig) -> Result<(Status, FlatLimitReport)> {
    let (_, report, flat) = flat_stage(fam, cfg)?;
    let status = match (&flat, report.lambda_monotonicity.pass) {
        (None, _) => Status::NonConvergent,
        (Some(_), false) => Status::ValidationFailure,
        (Some(_), true) => Status::Pass,
    };
    Ok((status, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiltrationJson {
    pub jumps: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub v_dims: Vec<usize>,
    pub v_spaces: Vec<MatrixJson>,
    pub f_spaces: Vec<MatrixJson>,
}

impl FiltrationJson {
    pub fn new(f: &Filtration) -> Self {
        FiltrationJson {
            jumps: f.jumps.clone(),
            multiplicities: f.multiplicities.clone(),
            v_dims: f.v_dims(),
            v_spaces: f.v_spaces.iter().map(matrix_to_json).collect(),
            f_spaces: f.f_spaces.iter().map(matrix_to_json).collect(),
        }
    }
}

/// One direction's outcome; failed fits keep the vector and the error message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum Probed<T> {
    Ok(T),
    Failed { vector: VectorJson, error: String },
}

impl<T> Probed<T> {
    fn status(&self) -> Status {
        match self {
            Probed::Ok(_) => Status::Pass,
            Probed::Failed { .. } => Status::NonConvergent,
        }
    }
}

fn probed<T>(v: &FiberVector, r: Result<T>) -> Result<Probed<T>> {
    match r {
        Ok(x) => Ok(Probed::Ok(x)),
        Err(e @ Error::NonConvergent { .. }) => {
            log::warn!("direction fit: {e}");
            Ok(Probed::Failed { vector: crate::hermitian::json::vector_to_json(v.coords()), error: e.to_string() })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub flow: FlatLimitReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filtration: Option<FiltrationJson>,
    /// Whether the directions came from a file or from the seeded sampler.
    pub directions_source: String,
    pub vectors: Vec<Probed<DirectionReport>>,
    pub theorem: Vec<Probed<TheoremReport>>,
}

/// Seeded duals: `SAMPLED_DUALS_PER_LEVEL` random elements of each `F_{alpha_j}`,
/// plus one generic dual (level 0).
fn sampled_duals(filt: &Filtration, seed: u64) -> Vec<FiberVector> {
    let mut r = rng(seed.wrapping_add(1));
    let n = filt.dim();
    let mut out = Vec::new();
    for j in 0..filt.len() {
        for _ in 0..SAMPLED_DUALS_PER_LEVEL {
            let coeffs: Vec<C64> = gaussian_vector(&mut r, n).iter().copied().collect();
            if let Some(v) = filt.dual_in(j, &coeffs) {
                out.push(v);
            }
        }
    }
    out
}

pub fn analyze(fam: &MetricFamily, dirs: Option<&DirectionsFile>, cfg: &RunConfig) -> Result<(Status, AnalyzeReport)> {
    let (flow, flow_report, flat) = flat_stage(fam, cfg)?;
    let n = fam.dim();
    let Some(flat) = flat else {
        return Ok((
            Status::NonConvergent,
            AnalyzeReport { flow: flow_report, filtration: None, directions_source: String::new(), vectors: vec![], theorem: vec![] },
        ));
    };
    let filt = build_filtration(&flat, cfg.cluster_tol);
    let (vectors, duals, source) = match dirs {
        Some(d) => {
            let (v, w) = d.check(n)?;
            (v, w, "file")
        }
        None => (random_vectors(cfg.seed, n, SAMPLED_VECTORS), sampled_duals(&filt, cfg.seed), "seeded"),
    };
    let vec_probe = DirectionProbe::with_flow(fam, flow.clone(), cfg.fit);
    let dual_probe = DirectionProbe::with_flow(fam, flow, cfg.decay_fit);
    let vectors = vectors.iter().map(|u| probed(u, vec_probe.alpha_of(u))).collect::<Result<Vec<_>>>()?;
    let theorem = duals.iter().map(|v| probed(v, dual_probe.verify_theorem(v, &filt))).collect::<Result<Vec<_>>>()?;
    let mut status = if flow_report.lambda_monotonicity.pass { Status::Pass } else { Status::ValidationFailure };
    for p in vectors.iter().map(Probed::status).chain(theorem.iter().map(Probed::status)) {
        status = status.worst(p);
    }
    Ok((
        status,
        AnalyzeReport {
            flow: flow_report,
            filtration: Some(FiltrationJson::new(&filt)),
            directions_source: source.into(),
            vectors,
            theorem,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremSuiteReport {
    pub alpha_list: Vec<f64>,
    pub directions_source: String,
    pub reports: Vec<Probed<TheoremReport>>,
    pub consistent: usize,
    pub total: usize,
}

/// Equivalence checks only; inconsistent verdicts count as validation failures.
pub fn verify_theorem(fam: &MetricFamily, dirs: Option<&DirectionsFile>, cfg: &RunConfig) -> Result<(Status, TheoremSuiteReport)> {
    let (status, a) = analyze(fam, dirs, cfg)?;
    let alpha_list = a.filtration.as_ref().map(|f| f.jumps.clone()).unwrap_or_default();
    let consistent = a.theorem.iter().filter(|p| matches!(p, Probed::Ok(r) if r.verdicts.consistent)).count();
    let total = a.theorem.len();
    let status = if status == Status::Pass && consistent < total { Status::ValidationFailure } else { status };
    Ok((status, TheoremSuiteReport { alpha_list, directions_source: a.directions_source, reports: a.theorem, consistent, total }))
}

/// Input of the openness command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpennessInput {
    #[serde(default = "zero_profile")]
    pub phi: RadialProfile,
    pub c: f64,
    #[serde(default)]
    pub m: u32,
}

fn zero_profile() -> RadialProfile {
    RadialProfile::Zero
}

impl OpennessInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessCommandReport {
    pub p_max: f64,
    pub demo: OpennessDemo,
    pub identity_residuals: Vec<IdentityCheck>,
    pub max_identity_residual: f64,
}

pub fn openness(input: &OpennessInput, cfg: &RunConfig) -> Result<(Status, OpennessCommandReport)> {
    let w = ModelWeight::new(input.phi.clone(), input.c)?;
    let quad = Quadrature::default();
    let mut ocfg = OpennessConfig { grid_points: cfg.grid_points, ..OpennessConfig::default() };
    if let Some(t) = cfg.t_max {
        ocfg.s_max = t;
    }
    let demo = openness_interval(&w, input.m, &ocfg, &quad)?;
    let identity_residuals = identity_grid(&IDENTITY_XS, &IDENTITY_PS, &quad)?;
    let max_identity_residual = identity_residuals.iter().map(|c| c.relative_residual).fold(0.0, f64::max);
    let pass = demo.pass && max_identity_residual <= IDENTITY_TOL;
    Ok((
        if pass { Status::Pass } else { Status::ValidationFailure },
        OpennessCommandReport { p_max: demo.p_max, demo, identity_residuals, max_identity_residual },
    ))
}

pub fn bergman(p: &JetIdealProblem, cfg: &RunConfig) -> Result<(Status, BergmanReport)> {
    let r = bergman::analyze_problem(p, cfg.t_max.unwrap_or(200.0), cfg.grid_points, &cfg.fit)?;
    let pass = r.monotonicity.pass && r.jumping_numbers.jumps.len() == p.n + 1;
    Ok((if pass { Status::Pass } else { Status::ValidationFailure }, r))
}

/// `t, lambda_1, ..., lambda_n` rows.
pub fn lambda_csv(grid: &[f64], lambdas: &[Vec<f64>]) -> String {
    let n = lambdas.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for j in 1..=n {
        out.push_str(&format!(",lambda_{j}"));
    }
    out.push('\n');
    for (t, row) in grid.iter().zip(lambdas) {
        out.push_str(&t.to_string());
        for x in row {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}
