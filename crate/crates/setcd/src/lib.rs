//! Setwise coordinate descent for asynchronous decentralized optimization
//! (via dual decomposition over a graph) and parallel distributed
//! optimization (separable objectives shared by workers).
//!
//! Each agent owns a small set of coordinates and every coordinate belongs
//! to exactly two sets; an activated agent updates one coordinate from its
//! set, picked uniformly, greedily by gradient magnitude, by
//! smoothness-weighted sampling, or by the greedy Lipschitz rule, with
//! exact or estimated stepsizes.
//!
//! The crate provides:
//! - [`graph`]: communication graphs, incidence structure, spectra, and the
//!   global smoothness / strong-convexity constants of the dual.
//! - [`problems`]: per-node oracles (quadratic, least squares, logistic)
//!   with conjugate oracles, plus separable primal objectives.
//! - [`objective`] / [`engine`]: the coordinate-oracle abstraction and the
//!   iteration driver with communication accounting.
//! - [`norms`]: the norm machinery behind the rate guarantees, with exact
//!   brute-force dual oracles on small graphs, and rate certificates.
//! - [`sim`]: a discrete-event simulator of the realistic asynchronous
//!   setting (exponential activations, blocking communication).
//! - [`experiment`]: config-driven experiment presets, reference optima,
//!   rate fitting, and CSV/JSON artifacts.
//!
//! The numeric core is generic over the scalar type through [`Scalar`];
//! the aliases below fix `f64`, which is what the CLI and the test suites
//! use.

pub mod engine;
pub mod experiment;
pub mod graph;
pub mod norms;
pub mod objective;
pub mod problems;
pub mod scalar;
pub mod sim;

pub use engine::{Algorithm, RunConfig, SelectionRule, StepsizePolicy, Trace};
pub use graph::Topology;
pub use scalar::Scalar;

/// `f64` spectral summary of a graph Laplacian.
pub type SpectralSummary = graph::SpectralSummary<f64>;
/// `f64` quadratic local problem.
pub type Quadratic = problems::Quadratic<f64>;
/// `f64` least-squares local problem.
pub type LeastSquares = problems::LeastSquares<f64>;
/// `f64` logistic local problem.
pub type Logistic = problems::Logistic<f64>;
/// `f64` separable primal objective.
pub type Separable = problems::Separable<f64>;
/// `f64` dual-consensus objective over quadratics.
pub type QuadraticDual = objective::DualObjective<f64, problems::Quadratic<f64>>;
/// `f64` dual-consensus objective over least-squares problems.
pub type LeastSquaresDual = objective::DualObjective<f64, problems::LeastSquares<f64>>;
/// `f64` dual-consensus objective over logistic problems.
pub type LogisticDual = objective::DualObjective<f64, problems::Logistic<f64>>;
/// `f64` parallel distributed objective.
pub type ParallelObjective = objective::ParallelObjective<f64>;
/// `f64` row-space projector defining the incidence semi-norm.
pub type RowSpaceProjector = norms::RowSpaceProjector<f64>;
