//! Configuration-driven experiment runner: builds topologies and problem
//! instances from JSON specs, computes centralized reference optima, runs
//! the configured algorithms over replicated seeds, averages traces in log
//! space, fits linear rates, and emits CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, Algorithm, RunConfig, Trace};
use crate::graph::{self, Topology, TopologyError};
use crate::norms::{rate_certificate, NormError, RateCertificate};
use crate::objective::{DualObjective, ObjectiveError, ParallelObjective, SetwiseObjective};
use crate::problems::{
    lls_family, logistic_family, standard_normal, LeastSquares, LocalProblem, Logistic,
    ProblemError, Quadratic, Separable,
};
use crate::sim::{ActivationProcess, BusyPeerPolicy, SimConfig, TimedTrace};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("reference solve did not converge (gradient norm {0:e})")]
    ReferenceSolve(f64),
    #[error("rate fit window is empty after discarding non-positive values")]
    EmptyFitWindow,
    #[error("no perfect matching found for the crafted initialization")]
    NoPerfectMatching,
    #[error("csv matrix: {0}")]
    CsvMatrix(String),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Regular { n: usize, degree: usize, seed: u64 },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    Circulant { n: usize, offsets: Vec<usize> },
    Edges { n: usize, edges: Vec<(usize, usize)> },
    File { path: String },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, ExperimentError> {
        Ok(match self {
            TopologySpec::Regular { n, degree, seed } => graph::generate_regular(*n, *degree, *seed)?,
            TopologySpec::ErdosRenyi { n, p, seed } => graph::generate_erdos_renyi(*n, *p, *seed)?,
            TopologySpec::Circulant { n, offsets } => graph::circulant(*n, offsets)?,
            TopologySpec::Edges { n, edges } => Topology::new(*n, edges.clone())?,
            TopologySpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                Topology::from_json(&text).map_err(ExperimentError::Config)?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum CoeffSpec {
    Normal { mean: f64, std: f64 },
    /// Normal draw with one coordinate pinned to a large value, which sets
    /// the global smoothness constant well above the typical curvature.
    NormalHot {
        mean: f64,
        std: f64,
        hot_index: usize,
        hot_value: f64,
    },
    UniformInt { lo: u64, hi: u64 },
    Values { values: Vec<f64> },
}

impl CoeffSpec {
    fn draw(&self, count: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        match self {
            CoeffSpec::Normal { mean, std } => (0..count)
                .map(|_| (mean + std * standard_normal(&mut rng)).abs().max(1e-3))
                .collect(),
            CoeffSpec::NormalHot {
                mean,
                std,
                hot_index,
                hot_value,
            } => {
                let mut a: Vec<f64> = (0..count)
                    .map(|_| (mean + std * standard_normal(&mut rng)).abs().max(1e-3))
                    .collect();
                a[*hot_index] = *hot_value;
                a
            }
            CoeffSpec::UniformInt { lo, hi } => (0..count)
                .map(|_| rng.random_range(*lo..=*hi) as f64)
                .collect(),
            CoeffSpec::Values { values } => values.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Constant { value: f64 },
    /// One coordinate per set starts far from the optimum, the rest near:
    /// the far coordinates form a perfect matching of the worker graph.
    PerSetCrafted { near: f64, far: f64 },
    Values { values: Vec<f64> },
}

/// Problem family specification: `{"kind": ..., "params": {...}, "seed": n}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub params: ProblemParams,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProblemParams {
    /// Isotropic quadratics `c_i theta^T theta`, with one hot node whose
    /// curvature is `c_hot`.
    Quadratic {
        d: usize,
        c_base: f64,
        c_hot: f64,
        hot_node: usize,
    },
    /// Synthetic least squares from a shared linear model.
    Lls {
        d: usize,
        m: usize,
        noise_std: f64,
        scale_by_index: bool,
    },
    /// Least squares read from per-node CSV matrices.
    LlsFiles { x_paths: Vec<String>, y_paths: Vec<String> },
    /// Synthetic ridge-regularized logistic regression.
    Logistic { d: usize, m: usize, ridge: f64 },
    /// Separable polynomial for the parallel distributed mode.
    Separable {
        exponent: u8,
        coeffs: CoeffSpec,
        offset: f64,
        init: InitSpec,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum RateSpec {
    Equal,
    Zipf { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Iterations {
        budget: usize,
    },
    Timed {
        horizon: f64,
        kappa: f64,
        tau: f64,
        rates: RateSpec,
        #[serde(default = "default_busy_policy")]
        busy_policy: BusyPeerPolicy,
        #[serde(default)]
        sequential_gather: bool,
    },
}

fn default_busy_policy() -> BusyPeerPolicy {
    BusyPeerPolicy::Drop
}

fn default_window() -> (f64, f64) {
    (0.3, 0.7)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: TopologySpec,
    pub problem: ProblemSpec,
    pub algorithms: Vec<Algorithm>,
    pub mode: RunMode,
    pub seeds: Vec<u64>,
    /// Fraction of the trace used for the rate fit.
    #[serde(default = "default_window")]
    pub fit_window: (f64, f64),
    /// Standard deviation of the random dual starting point; zero starts
    /// at the origin. Drawn from the problem seed so every algorithm and
    /// every replication seed shares the same starting point.
    #[serde(default)]
    pub dual_init_scale: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if config.seeds.is_empty() {
            return Err(ExperimentError::Config("seeds must be non-empty".into()));
        }
        Ok(config)
    }
}

// ---------------------------------------------------------------------------
// Problem construction and reference optima
// ---------------------------------------------------------------------------

pub enum BuiltProblem {
    Quadratic(Vec<Quadratic<f64>>),
    LeastSquares(Vec<LeastSquares<f64>>),
    Logistic(Vec<Logistic<f64>>),
    Separable { primal: Separable<f64>, init: Vec<f64> },
}

/// Reads a dense matrix from comma-separated text, one row per line.
pub fn read_csv_matrix(path: &str) -> Result<DMatrix<f64>, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            ExperimentError::CsvMatrix(format!("{path}:{}: {e}", lineno + 1))
        })?);
    }
    if rows.is_empty() {
        return Err(ExperimentError::CsvMatrix(format!("{path}: empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ExperimentError::CsvMatrix(format!("{path}: ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

impl ProblemSpec {
    pub fn build(&self, topology: &Topology) -> Result<BuiltProblem, ExperimentError> {
        let n = topology.num_nodes();
        Ok(match &self.params {
            ProblemParams::Quadratic {
                d,
                c_base,
                c_hot,
                hot_node,
            } => {
                let mut oracles = Vec::with_capacity(n);
                for i in 0..n {
                    let c = if i == *hot_node { *c_hot } else { *c_base };
                    oracles.push(Quadratic::isotropic(*d, c)?);
                }
                BuiltProblem::Quadratic(oracles)
            }
            ProblemParams::Lls {
                d,
                m,
                noise_std,
                scale_by_index,
            } => BuiltProblem::LeastSquares(lls_family(
                n,
                *d,
                *m,
                *noise_std,
                *scale_by_index,
                self.seed,
            )?),
            ProblemParams::LlsFiles { x_paths, y_paths } => {
                if x_paths.len() != n || y_paths.len() != n {
                    return Err(ExperimentError::Config(format!(
                        "need one X and one Y file per node ({n})"
                    )));
                }
                let mut oracles = Vec::with_capacity(n);
                for (xp, yp) in x_paths.iter().zip(y_paths) {
                    let x = read_csv_matrix(xp)?;
                    let y = read_csv_matrix(yp)?;
                    if y.ncols() != 1 {
                        return Err(ExperimentError::CsvMatrix(format!(
                            "{yp}: targets must be a single column"
                        )));
                    }
                    oracles.push(LeastSquares::new(x, y.column(0).into_owned())?);
                }
                BuiltProblem::LeastSquares(oracles)
            }
            ProblemParams::Logistic { d, m, ridge } => {
                BuiltProblem::Logistic(logistic_family(n, *d, *m, *ridge, self.seed)?)
            }
            ProblemParams::Separable {
                exponent,
                coeffs,
                offset,
                init,
            } => {
                let e = topology.num_edges();
                let a = coeffs.draw(e, self.seed);
                if a.len() != e {
                    return Err(ExperimentError::Config(format!(
                        "separable problem needs {e} coefficients, got {}",
                        a.len()
                    )));
                }
                let primal = Separable::new(a, *exponent, *offset)?;
                let init = match init {
                    InitSpec::Constant { value } => vec![*value; e],
                    InitSpec::Values { values } => {
                        if values.len() != e {
                            return Err(ExperimentError::Config(format!(
                                "initial point needs {e} entries, got {}",
                                values.len()
                            )));
                        }
                        values.clone()
                    }
                    InitSpec::PerSetCrafted { near, far } => {
                        crafted_initial(topology, *near, *far)?
                    }
                };
                BuiltProblem::Separable { primal, init }
            }
        })
    }
}

/// Greedy perfect matching; the matched coordinates start far from the
/// optimum so every worker set holds exactly one far coordinate.
fn crafted_initial(topology: &Topology, near: f64, far: f64) -> Result<Vec<f64>, ExperimentError> {
    let n = topology.num_nodes();
    let mut matched = vec![false; n];
    let mut init = vec![near; topology.num_edges()];
    let mut pairs = 0;
    for i in 0..n {
        if matched[i] {
            continue;
        }
        for &l in topology.node_set(i) {
            let (a, b) = topology.edge(l);
            let other = if a == i { b } else { a };
            if !matched[other] {
                matched[i] = true;
                matched[other] = true;
                init[l] = far;
                pairs += 1;
                break;
            }
        }
    }
    if 2 * pairs != n {
        return Err(ExperimentError::NoPerfectMatching);
    }
    Ok(init)
}

/// Centralized optimum of the aggregate problem, solved by damped Newton on
/// exact Hessians to gradient norm `1e-12`.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceOptimum {
    pub primal_value: f64,
    pub theta: Vec<f64>,
    /// Optimal value of the dual objective (negated primal optimum).
    pub dual_value: f64,
}

pub fn reference_optimum<P: LocalProblem<f64>>(
    problems: &[P],
) -> Result<ReferenceOptimum, ExperimentError> {
    let d = problems[0].dim();
    let mut theta = DVector::<f64>::zeros(d);
    let tol = 1e-12;
    let mut converged = false;
    for _ in 0..200 {
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for p in problems {
            grad += p.gradient(&theta);
            hess += p.hessian(&theta);
        }
        if grad.norm() <= tol {
            converged = true;
            break;
        }
        let step = hess
            .cholesky()
            .map(|ch| ch.solve(&grad))
            .unwrap_or_else(|| grad.clone());
        // plain Newton converges here: the aggregate is smooth and strongly
        // convex and the quadratic kinds solve in one step
        let mut t = 1.0;
        let value = |th: &DVector<f64>| problems.iter().map(|p| p.value(th)).sum::<f64>();
        let current = value(&theta);
        let mut best = theta.clone() - &step;
        for _ in 0..40 {
            let cand = &theta - &step * t;
            if value(&cand) <= current || grad.norm() < 1e-6 {
                best = cand;
                break;
            }
            t *= 0.5;
        }
        theta = best;
    }
    let grad_norm = problems
        .iter()
        .fold(DVector::<f64>::zeros(d), |acc, p| acc + p.gradient(&theta))
        .norm();
    if !converged && grad_norm > tol {
        return Err(ExperimentError::ReferenceSolve(grad_norm));
    }
    let primal_value = problems.iter().map(|p| p.value(&theta)).sum();
    Ok(ReferenceOptimum {
        primal_value,
        theta: theta.as_slice().to_vec(),
        dual_value: -primal_value,
    })
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Least-squares slope of `ln(subopt)` against the x axis.
    pub slope: f64,
    /// Per-step contraction `1 - exp(slope)` (meaningful for unit-spaced x).
    pub rho: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Fits the linear convergence rate over the given fractional window of the
/// trace. Non-positive suboptimalities (numerical floor) are discarded,
/// shrinking the window; an empty window is an error.
pub fn fit_rate(xs: &[f64], subopt: &[f64], window: (f64, f64)) -> Result<RateFit, ExperimentError> {
    assert_eq!(xs.len(), subopt.len());
    let len = xs.len();
    if len == 0 {
        return Err(ExperimentError::EmptyFitWindow);
    }
    let lo = ((window.0 * len as f64).floor() as usize).min(len - 1);
    let hi = ((window.1 * len as f64).ceil() as usize).clamp(lo + 1, len);
    let pts: Vec<(f64, f64)> = (lo..hi)
        .filter(|&k| subopt[k] > 0.0 && subopt[k].is_finite())
        .map(|k| (xs[k], subopt[k].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(ExperimentError::EmptyFitWindow);
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let fit = mean_y + slope * (p.0 - mean_x);
            (p.1 - fit) * (p.1 - fit)
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * n {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        rho: 1.0 - slope.exp(),
        r_squared,
        points_used: pts.len(),
    })
}

/// Index of the first entry that has decayed `RELATIVE_FLOOR_DECADES`
/// below the trace start (or hit zero): past it the plateau is floating
/// point granularity, not convergence, and rate fits must stop there.
pub fn decay_prefix_len(subopt: &[f64]) -> usize {
    let scale = subopt.first().copied().unwrap_or(0.0);
    if scale <= 0.0 {
        return 0;
    }
    let floor = scale * 1e-12;
    subopt
        .iter()
        .position(|&v| v <= floor)
        .unwrap_or(subopt.len())
}

/// Entry-wise geometric mean across seed traces, with a floor guarding the
/// logarithm.
pub fn geometric_mean_traces(traces: &[Vec<f64>]) -> Vec<f64> {
    let len = traces.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        if traces.iter().any(|t| t[k] <= 0.0) {
            // one replication at the numerical floor floors the mean
            out.push(0.0);
            continue;
        }
        let mut acc = 0.0;
        for t in traces {
            acc += t[k].ln();
        }
        out.push((acc / traces.len() as f64).exp());
    }
    out
}

// ---------------------------------------------------------------------------
// Summary assembly
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    /// Fit against update index.
    pub rho: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Fit of log-suboptimality against simulated time (timed mode only).
    pub time_slope: Option<f64>,
    pub mean_updates: Option<f64>,
    pub final_subopt: f64,
    pub vectors_transmitted: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub seeds: Vec<u64>,
    pub fit_window: (f64, f64),
    pub reference_primal: f64,
    pub algorithms: Vec<AlgorithmSummary>,
    /// Rate ratios `algo/su` when uniform selection is present.
    pub ratios: BTreeMap<String, f64>,
    pub certificate: Option<RateCertificate>,
    pub checks: Vec<CheckResult>,
}

impl SummaryReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn algorithm(&self, label: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.algorithm == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

enum RunOutput {
    Iterations(Trace),
    Timed(TimedTrace),
}

fn drive<O: SetwiseObjective<f64>>(
    objective: &mut O,
    config: &ExperimentConfig,
    algorithm: Algorithm,
    seed: u64,
    reference: f64,
) -> Result<RunOutput, ExperimentError> {
    match &config.mode {
        RunMode::Iterations { budget } => {
            let run: RunConfig = algorithm.config(seed, *budget);
            Ok(RunOutput::Iterations(engine::run_iterations(
                objective, &run, reference,
            )?))
        }
        RunMode::Timed {
            horizon,
            kappa,
            tau,
            rates,
            busy_policy,
            sequential_gather,
        } => {
            let n = objective.num_sets();
            let process = match rates {
                RateSpec::Equal => ActivationProcess::equal(n, *kappa),
                RateSpec::Zipf { seed: rate_seed } => {
                    ActivationProcess::zipf_skewed(n, *kappa, *rate_seed)
                }
            };
            let mut sim = SimConfig::new(algorithm.rule(), algorithm.stepsize(), seed, *tau, *horizon);
            sim.busy_policy = *busy_policy;
            sim.sequential_gather = *sequential_gather;
            Ok(RunOutput::Timed(crate::sim::simulate(
                objective, &sim, &process, reference,
            )?))
        }
    }
}

/// Shared random dual starting point, drawn from the problem seed.
fn dual_start(config: &ExperimentConfig, edges: usize, dim: usize) -> Option<Vec<f64>> {
    use rand::SeedableRng;
    if config.dual_init_scale == 0.0 {
        return None;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.problem.seed);
    rng.set_stream(7);
    Some(
        (0..edges * dim)
            .map(|_| config.dual_init_scale * standard_normal(&mut rng))
            .collect(),
    )
}

fn build_and_drive(
    topology: &Topology,
    spec: &ProblemSpec,
    config: &ExperimentConfig,
    algorithm: Algorithm,
    seed: u64,
    reference: f64,
) -> Result<RunOutput, ExperimentError> {
    match spec.build(topology)? {
        BuiltProblem::Quadratic(oracles) => {
            let dim = oracles[0].dim();
            let mut obj = DualObjective::new(topology.clone(), oracles)?;
            if let Some(start) = dual_start(config, topology.num_edges(), dim) {
                obj.set_lambda(&start)?;
            }
            drive(&mut obj, config, algorithm, seed, reference)
        }
        BuiltProblem::LeastSquares(oracles) => {
            let dim = oracles[0].dim();
            let mut obj = DualObjective::new(topology.clone(), oracles)?;
            if let Some(start) = dual_start(config, topology.num_edges(), dim) {
                obj.set_lambda(&start)?;
            }
            drive(&mut obj, config, algorithm, seed, reference)
        }
        BuiltProblem::Logistic(oracles) => {
            let dim = oracles[0].dim();
            let mut obj = DualObjective::new(topology.clone(), oracles)?;
            if let Some(start) = dual_start(config, topology.num_edges(), dim) {
                obj.set_lambda(&start)?;
            }
            drive(&mut obj, config, algorithm, seed, reference)
        }
        BuiltProblem::Separable { primal, init } => {
            let mut obj = ParallelObjective::from_topology(primal, topology, init)?;
            drive(&mut obj, config, algorithm, seed, reference)
        }
    }
}

/// Reference value the traces measure suboptimality against: the dual
/// optimum for consensus problems, the primal optimum for separable ones.
pub fn compute_reference(
    topology: &Topology,
    spec: &ProblemSpec,
) -> Result<(f64, ReferenceOptimum), ExperimentError> {
    match spec.build(topology)? {
        BuiltProblem::Quadratic(oracles) => {
            let opt = reference_optimum(&oracles)?;
            Ok((opt.dual_value, opt))
        }
        BuiltProblem::LeastSquares(oracles) => {
            let opt = reference_optimum(&oracles)?;
            Ok((opt.dual_value, opt))
        }
        BuiltProblem::Logistic(oracles) => {
            let opt = reference_optimum(&oracles)?;
            Ok((opt.dual_value, opt))
        }
        BuiltProblem::Separable { primal, .. } => {
            let value = primal.optimum_value();
            let opt = ReferenceOptimum {
                primal_value: value,
                theta: vec![0.0; primal.num_coords()],
                dual_value: value,
            };
            Ok((value, opt))
        }
    }
}

/// Certificate ingredients: extreme local constants and exact coordinate
/// smoothness, available for the closed-form dual kinds.
pub fn certificate_for_config(
    topology: &Topology,
    spec: &ProblemSpec,
) -> Result<Option<RateCertificate>, ExperimentError> {
    certificate_for(topology, spec)
}

fn certificate_for(
    topology: &Topology,
    spec: &ProblemSpec,
) -> Result<Option<RateCertificate>, ExperimentError> {
    let (mu_min, m_max, hessians): (f64, f64, Vec<DMatrix<f64>>) = match spec.build(topology)? {
        BuiltProblem::Quadratic(oracles) => (
            oracles.iter().map(|o| o.strong_convexity()).fold(f64::INFINITY, f64::min),
            oracles.iter().map(|o| o.smoothness()).fold(0.0, f64::max),
            oracles.iter().map(|o| o.conjugate_hessian().expect("closed form")).collect(),
        ),
        BuiltProblem::LeastSquares(oracles) => (
            oracles.iter().map(|o| o.strong_convexity()).fold(f64::INFINITY, f64::min),
            oracles.iter().map(|o| o.smoothness()).fold(0.0, f64::max),
            oracles.iter().map(|o| o.conjugate_hessian().expect("closed form")).collect(),
        ),
        _ => return Ok(None),
    };
    let lips: Vec<f64> = topology
        .edges()
        .iter()
        .map(|&(i, j)| {
            let sum = &hessians[i] + &hessians[j];
            let eig = sum.symmetric_eigen();
            eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
        })
        .collect();
    Ok(Some(rate_certificate(topology, mu_min, m_max, &lips)?))
}

/// Uniform grid over `[0, horizon]` with the step-function value of each
/// timed trace sampled at every grid point.
fn resample_timed(trace: &TimedTrace, horizon: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut times = Vec::with_capacity(points);
    let mut values = Vec::with_capacity(points);
    let updates: Vec<(f64, f64)> = trace.updates().map(|e| (e.sim_time, e.subopt)).collect();
    let mut k = 0usize;
    let mut current = trace.initial_subopt;
    for g in 0..points {
        let t = horizon * (g + 1) as f64 / points as f64;
        while k < updates.len() && updates[k].0 <= t {
            current = updates[k].1;
            k += 1;
        }
        times.push(t);
        values.push(current);
    }
    (times, values)
}

const TIMED_GRID_POINTS: usize = 400;

/// Runs every configured algorithm over every seed, averages the seed
/// traces in log space, fits rates, runs the theorem-bound checks, and
/// (optionally) writes the CSV/JSON artifacts under `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<SummaryReport, ExperimentError> {
    let topology = config.topology.build()?;
    let (reference, opt) = compute_reference(&topology, &config.problem)?;
    let certificate = certificate_for(&topology, &config.problem)?;

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        if let Some(cert) = &certificate {
            std::fs::write(
                dir.join(format!("{}_certificate.json", config.name)),
                serde_json::to_string_pretty(cert).expect("certificate serializes"),
            )?;
        }
    }

    let mut summaries = Vec::new();
    for &algorithm in &config.algorithms {
        let mut iter_traces: Vec<Vec<f64>> = Vec::new();
        let mut time_traces: Vec<Vec<f64>> = Vec::new();
        let mut time_grid: Vec<f64> = Vec::new();
        let mut updates_total = 0f64;
        let mut vectors_last = 0u64;
        for &seed in &config.seeds {
            let output = build_and_drive(
                &topology,
                &config.problem,
                config,
                algorithm,
                seed,
                reference,
            )?;
            match output {
                RunOutput::Iterations(trace) => {
                    vectors_last = trace.final_row().map(|r| r.vectors_tx_cum).unwrap_or(0);
                    updates_total += trace.rows.len() as f64;
                    iter_traces.push(trace.suboptimalities());
                }
                RunOutput::Timed(trace) => {
                    let horizon = match &config.mode {
                        RunMode::Timed { horizon, .. } => *horizon,
                        RunMode::Iterations { .. } => unreachable!(),
                    };
                    updates_total += trace.update_count() as f64;
                    vectors_last = trace
                        .events
                        .last()
                        .map(|e| e.vectors_tx_cum)
                        .unwrap_or(0);
                    iter_traces.push(trace.updates().map(|e| e.subopt).collect());
                    let (grid, values) = resample_timed(&trace, horizon, TIMED_GRID_POINTS);
                    time_grid = grid;
                    time_traces.push(values);
                }
            }
        }
        let averaged = geometric_mean_traces(&iter_traces);
        let xs: Vec<f64> = (1..=averaged.len()).map(|k| k as f64).collect();
        // fit on this algorithm's own decay prefix: fast variants reach the
        // floating-point floor long before slow ones
        let eff = decay_prefix_len(&averaged).max(2.min(averaged.len()));
        let fit = fit_rate(&xs[..eff], &averaged[..eff], config.fit_window)?;
        let time_slope = if time_traces.is_empty() {
            None
        } else {
            let avg_t = geometric_mean_traces(&time_traces);
            let eff_t = decay_prefix_len(&avg_t).max(2.min(avg_t.len()));
            Some(fit_rate(&time_grid[..eff_t], &avg_t[..eff_t], config.fit_window)?.slope)
        };
        if let Some(dir) = out_dir {
            let path = dir.join(format!("{}_{}.csv", config.name, algorithm.label()));
            let mut file = std::fs::File::create(path)?;
            writeln!(file, "step,subopt_geomean")?;
            for (x, v) in xs.iter().zip(&averaged) {
                writeln!(file, "{},{}", x, engine::format_float(*v))?;
            }
        }
        summaries.push(AlgorithmSummary {
            algorithm: algorithm.label().to_string(),
            rho: fit.rho,
            slope: fit.slope,
            r_squared: fit.r_squared,
            time_slope,
            mean_updates: Some(updates_total / config.seeds.len() as f64),
            final_subopt: *averaged.last().unwrap_or(&f64::NAN),
            vectors_transmitted: vectors_last,
        });
    }

    let mut ratios = BTreeMap::new();
    if let Some(su) = summaries.iter().find(|s| s.algorithm == "su") {
        let su_rho = su.rho;
        for s in &summaries {
            if s.algorithm != "su" && su_rho > 0.0 {
                ratios.insert(format!("{}/su", s.algorithm), s.rho / su_rho);
            }
        }
    }

    let checks = run_checks(&topology, &summaries, &ratios, certificate.as_ref());
    let report = SummaryReport {
        name: config.name.clone(),
        nodes: topology.num_nodes(),
        edges: topology.num_edges(),
        max_degree: topology.max_degree(),
        seeds: config.seeds.clone(),
        fit_window: config.fit_window,
        reference_primal: opt.primal_value,
        algorithms: summaries,
        ratios,
        certificate,
        checks,
    };
    if let Some(dir) = out_dir {
        std::fs::write(dir.join(format!("{}_summary.json", config.name)), report.to_json())?;
    }
    Ok(report)
}

/// Theorem-bound checks evaluated whenever their ingredients are present:
/// uniform selection beats its guaranteed factor, the greedy/uniform rate
/// ratio stays within `[1, N_max]`, Lipschitz sampling is no slower than
/// uniform, and greedy Lipschitz is the fastest variant.
fn run_checks(
    topology: &Topology,
    summaries: &[AlgorithmSummary],
    ratios: &BTreeMap<String, f64>,
    certificate: Option<&RateCertificate>,
) -> Vec<CheckResult> {
    const REL_TOL: f64 = 0.05;
    let mut checks = Vec::new();
    let find = |label: &str| summaries.iter().find(|s| s.algorithm == label);

    if let (Some(su), Some(cert)) = (find("su"), certificate) {
        let bound = cert.su_factor;
        checks.push(CheckResult {
            name: "su_rate_above_guarantee".into(),
            passed: su.rho >= bound * (1.0 - REL_TOL),
            detail: format!("fitted rho {:.3e} vs guaranteed factor {:.3e}", su.rho, bound),
        });
    }
    if let Some(ratio) = ratios.get("sgs/su") {
        let n_max = topology.max_degree() as f64;
        checks.push(CheckResult {
            name: "sgs_speedup_within_max_degree".into(),
            passed: *ratio >= 1.0 - REL_TOL && *ratio <= n_max * (1.0 + REL_TOL),
            detail: format!("rho_G/rho_U = {ratio:.3} with N_max = {n_max}"),
        });
    }
    if let (Some(sl), Some(su)) = (find("sl"), find("su")) {
        checks.push(CheckResult {
            name: "sl_at_least_su".into(),
            passed: sl.rho >= su.rho * (1.0 - REL_TOL),
            detail: format!("rho_SL {:.3e} vs rho_SU {:.3e}", sl.rho, su.rho),
        });
    }
    if let Some(sgsl) = find("sgsl") {
        let floor = find("sgs").map(|s| s.rho).unwrap_or(0.0).max(
            find("sl").map(|s| s.rho).unwrap_or(0.0),
        );
        if floor > 0.0 {
            checks.push(CheckResult {
                name: "sgsl_fastest".into(),
                passed: sgsl.rho >= floor * (1.0 - REL_TOL),
                detail: format!("rho_SGSL {:.3e} vs max(rho_SGS, rho_SL) {:.3e}", sgsl.rho, floor),
            });
        }
    }
    checks
}

// ---------------------------------------------------------------------------
// Preset catalog
// ---------------------------------------------------------------------------

fn default_seeds(count: u64) -> Vec<u64> {
    (1..=count).collect()
}

/// Built-in experiment presets.
pub fn preset(name: &str) -> Result<ExperimentConfig, ExperimentError> {
    let quadratic_hot = ProblemSpec {
        params: ProblemParams::Quadratic {
            d: 5,
            c_base: 1.0,
            c_hot: 10.0,
            hot_node: 0,
        },
        seed: 0,
    };
    let lls = |seed: u64| ProblemSpec {
        params: ProblemParams::Lls {
            d: 5,
            m: 30,
            noise_std: 0.25,
            scale_by_index: true,
        },
        seed,
    };
    let config = match name {
        "decen-quadratic-N8" => ExperimentConfig {
            name: name.into(),
            topology: TopologySpec::Regular { n: 32, degree: 8, seed: 8 },
            problem: quadratic_hot,
            algorithms: vec![Algorithm::Su, Algorithm::Sgs],
            mode: RunMode::Iterations { budget: 12_000 },
            seeds: default_seeds(10),
            fit_window: default_window(),
            dual_init_scale: 1.0,
        },
        "decen-quadratic-N12" => ExperimentConfig {
            name: name.into(),
            topology: TopologySpec::Regular { n: 32, degree: 12, seed: 12 },
            problem: quadratic_hot,
            algorithms: vec![Algorithm::Su, Algorithm::Sgs],
            mode: RunMode::Iterations { budget: 12_000 },
            seeds: default_seeds(10),
            fit_window: default_window(),
            dual_init_scale: 1.0,
        },
        "scaling-n16" | "scaling-n32" | "scaling-n64" => {
            let n: usize = name["scaling-n".len()..].parse().expect("preset name");
            ExperimentConfig {
                name: name.into(),
                topology: TopologySpec::Regular { n, degree: 8, seed: 5 },
                problem: quadratic_hot,
                algorithms: vec![Algorithm::Su, Algorithm::Sgs],
                mode: RunMode::Iterations { budget: 2_000 * n },
                seeds: default_seeds(10),
                fit_window: default_window(),
                dual_init_scale: 1.0,
            }
        }
        "parallel-crafted-N8" | "parallel-crafted-N4" => {
            let (n, offsets, n_max) = if name.ends_with("N8") {
                (12, vec![1, 2, 3, 4], 8)
            } else {
                (24, vec![1, 2], 4)
            };
            ExperimentConfig {
                name: name.into(),
                topology: TopologySpec::Circulant { n, offsets },
                problem: ProblemSpec {
                    params: ProblemParams::Separable {
                        exponent: 2,
                        coeffs: CoeffSpec::NormalHot {
                            mean: 10.0,
                            std: 3.0,
                            hot_index: 1,
                            hot_value: 100.0,
                        },
                        offset: 0.0,
                        init: InitSpec::PerSetCrafted { near: 1.0, far: 100.0 },
                    },
                    seed: 48,
                },
                algorithms: vec![Algorithm::Su, Algorithm::Sgs],
                mode: RunMode::Iterations {
                    budget: if n_max == 8 { 400 } else { 600 },
                },
                seeds: default_seeds(30),
                fit_window: (0.05, 0.45),
                dual_init_scale: 0.0,
            }
        }
        "exact-vs-estimated-quadratic" | "exact-vs-estimated-quartic" => ExperimentConfig {
            name: name.into(),
            topology: TopologySpec::Circulant { n: 12, offsets: vec![1, 2, 3, 4] },
            problem: ProblemSpec {
                params: ProblemParams::Separable {
                    exponent: if name.ends_with("quartic") { 4 } else { 2 },
                    coeffs: CoeffSpec::UniformInt { lo: 1, hi: 100 },
                    offset: 1.0,
                    init: InitSpec::Constant { value: 1.0 },
                },
                seed: 7,
            },
            algorithms: vec![Algorithm::Sl, Algorithm::Sel],
            mode: RunMode::Iterations { budget: 2_000 },
            seeds: default_seeds(10),
            fit_window: default_window(),
            dual_init_scale: 0.0,
        },
        "lls-p0.1" | "lls-p0.5" => {
            let p = if name.ends_with("0.1") { 0.1 } else { 0.5 };
            ExperimentConfig {
                name: name.into(),
                topology: TopologySpec::ErdosRenyi { n: 32, p, seed: 17 },
                problem: lls(3),
                algorithms: Algorithm::ALL.to_vec(),
                mode: RunMode::Iterations { budget: 30_000 },
                seeds: default_seeds(10),
                fit_window: default_window(),
                dual_init_scale: 0.0,
            }
        }
        "async-t0" | "async-t1" | "async-t1-zipf" => {
            let tau = if name == "async-t0" { 0.0 } else { 1.0 };
            let rates = if name.ends_with("zipf") {
                RateSpec::Zipf { seed: 2 }
            } else {
                RateSpec::Equal
            };
            ExperimentConfig {
                name: name.into(),
                topology: TopologySpec::Regular { n: 32, degree: 16, seed: 16 },
                problem: quadratic_hot,
                algorithms: vec![Algorithm::Su, Algorithm::Sgs],
                // the activation interval of 10 time units dwarfs tau = 1,
                // matching the mild-contention regime the blocking effects
                // are measured in
                mode: RunMode::Timed {
                    horizon: 60_000.0,
                    kappa: 0.1,
                    tau,
                    rates,
                    busy_policy: BusyPeerPolicy::Drop,
                    sequential_gather: false,
                },
                seeds: default_seeds(10),
                fit_window: default_window(),
                dual_init_scale: 1.0,
            }
        }
        "logistic-p0.1" | "logistic-p0.5" => {
            let p = if name.ends_with("0.1") { 0.1 } else { 0.5 };
            ExperimentConfig {
                name: name.into(),
                topology: TopologySpec::ErdosRenyi { n: 32, p, seed: 17 },
                problem: ProblemSpec {
                    params: ProblemParams::Logistic { d: 5, m: 30, ridge: 0.1 },
                    seed: 9,
                },
                algorithms: vec![Algorithm::Sel, Algorithm::Sgsel],
                mode: RunMode::Iterations { budget: 6_000 },
                seeds: default_seeds(10),
                fit_window: default_window(),
                dual_init_scale: 0.0,
            }
        }
        other => return Err(ExperimentError::UnknownPreset(other.into())),
    };
    Ok(config)
}

pub fn preset_names() -> Vec<&'static str> {
    vec![
        "decen-quadratic-N8",
        "decen-quadratic-N12",
        "scaling-n16",
        "scaling-n32",
        "scaling-n64",
        "parallel-crafted-N8",
        "parallel-crafted-N4",
        "exact-vs-estimated-quadratic",
        "exact-vs-estimated-quartic",
        "lls-p0.1",
        "lls-p0.5",
        "async-t0",
        "async-t1",
        "async-t1-zipf",
        "logistic-p0.1",
        "logistic-p0.5",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_rate_exact_geometric_decay() {
        let xs = [1.0, 2.0, 3.0];
        let fit = fit_rate(&xs, &[1.0, 0.5, 0.25], (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.rho, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rate_constant_trace() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let fit = fit_rate(&xs, &[2.0, 2.0, 2.0, 2.0], (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.rho, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rate_noisy_geometric() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<f64> = (1..=400).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&k| 0.9_f64.powf(k) * (1.0 + 0.01 * standard_normal(&mut rng)))
            .collect();
        let fit = fit_rate(&xs, &ys, (0.0, 1.0)).unwrap();
        assert!((fit.rho - 0.1).abs() <= 0.01, "rho = {}", fit.rho);
    }

    #[test]
    fn fit_rate_shrinks_past_numerical_floor() {
        let xs: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let ys = [1.0, 0.5, 0.25, 0.0, -1e-18, 0.0];
        let fit = fit_rate(&xs, &ys, (0.0, 1.0)).unwrap();
        assert_eq!(fit.points_used, 3);
        assert_relative_eq!(fit.rho, 0.5, epsilon = 1e-12);
        assert!(fit_rate(&xs, &[0.0; 6], (0.0, 1.0)).is_err());
    }

    #[test]
    fn reference_optimum_two_node() {
        let oracles = vec![
            Quadratic::<f64>::scalar(1.0, 1.0).unwrap(),
            Quadratic::<f64>::scalar(1.0, -1.0).unwrap(),
        ];
        let opt = reference_optimum(&oracles).unwrap();
        assert_relative_eq!(opt.primal_value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(opt.dual_value, -1.0, epsilon = 1e-12);
        assert_relative_eq!(opt.theta[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_optimum_lls_residual() {
        let oracles = lls_family::<f64>(4, 3, 10, 0.3, true, 11).unwrap();
        let opt = reference_optimum(&oracles).unwrap();
        let theta = DVector::from_column_slice(&opt.theta);
        let grad: DVector<f64> = oracles
            .iter()
            .fold(DVector::zeros(3), |acc, o| acc + o.gradient(&theta));
        assert!(grad.norm() <= 1e-10);
    }

    #[test]
    fn crafted_initialization_structure() {
        let topo = graph::circulant(12, &[1, 2, 3, 4]).unwrap();
        let init = crafted_initial(&topo, 1.0, 100.0).unwrap();
        let far: Vec<usize> = init
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 100.0)
            .map(|(l, _)| l)
            .collect();
        assert_eq!(far.len(), 6);
        // every worker set holds exactly one far coordinate
        for i in 0..12 {
            let count = topo.node_set(i).iter().filter(|l| far.contains(l)).count();
            assert_eq!(count, 1, "node {i}");
        }
    }

    #[test]
    fn config_json_round_trip() {
        let config = preset("lls-p0.5").unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.name, "lls-p0.5");
        assert_eq!(back.algorithms.len(), 6);
        assert!(matches!(back.mode, RunMode::Iterations { budget: 30_000 }));
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(
            preset("nope"),
            Err(ExperimentError::UnknownPreset(_))
        ));
        for name in preset_names() {
            assert!(preset(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn two_node_experiment_end_to_end() {
        let config = ExperimentConfig {
            name: "fixture".into(),
            topology: TopologySpec::Edges { n: 2, edges: vec![(0, 1)] },
            problem: ProblemSpec {
                params: ProblemParams::Quadratic {
                    d: 1,
                    c_base: 0.5,
                    c_hot: 2.0,
                    hot_node: 0,
                },
                seed: 0,
            },
            algorithms: vec![Algorithm::Su, Algorithm::Sgs],
            mode: RunMode::Iterations { budget: 50 },
            seeds: vec![1, 2],
            fit_window: (0.0, 0.5),
            dual_init_scale: 1.0,
        };
        let report = run_experiment(&config, None).unwrap();
        assert_eq!(report.nodes, 2);
        // single edge, global step 1/2 against coordinate curvature 5/4:
        // the energy contracts by (1 - 5/8)^2 per iteration
        let su = report.algorithm("su").unwrap();
        assert!((su.rho - (1.0 - 0.140625)).abs() < 1e-9, "rho {}", su.rho);
        assert!(su.final_subopt < 1e-12);
    }
}
