//! Setwise objectives: a coordinate oracle where every coordinate belongs to
//! exactly two of the per-agent sets `S_i`, realized either as the
//! dual-consensus objective over a graph or as a separable primal objective
//! shared by parallel workers.

use nalgebra::DVector;
use thiserror::Error;

use crate::graph::Topology;
use crate::problems::{LocalProblem, ProblemError, Separable};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("expected {expected} local oracles, got {got}")]
    OracleCount { expected: usize, got: usize },
    #[error("local oracle {index} has dimension {got}, expected {expected}")]
    MixedDimensions {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("coordinate {coord} belongs to {count} sets; every coordinate must belong to exactly 2")]
    CoverageViolation { coord: usize, count: usize },
    #[error("initial point has length {got}, expected {expected}")]
    BadInitialPoint { expected: usize, got: usize },
    #[error(transparent)]
    Oracle(#[from] ProblemError),
}

/// Coordinate oracle over which the setwise algorithms run.
///
/// Coordinates are blocks of `block_dim` scalars; `set(i)` lists the
/// coordinates agent `i` may update. `set_coord` must leave the internal
/// caches consistent with the new point.
pub trait SetwiseObjective<S: Scalar> {
    fn num_coords(&self) -> usize;
    fn block_dim(&self) -> usize;
    fn num_sets(&self) -> usize;
    fn set(&self, i: usize) -> &[usize];
    /// The two agents whose sets contain coordinate `l`.
    fn coord_owners(&self, l: usize) -> (usize, usize);
    /// Current value of coordinate block `l`.
    fn coord(&self, l: usize) -> &[S];
    fn set_coord(&mut self, l: usize, value: &[S]) -> Result<(), ProblemError>;
    fn value(&self) -> S;
    fn coord_gradient(&self, l: usize) -> DVector<S>;
    /// Exact coordinate smoothness constant, when known in closed form.
    fn coord_lipschitz(&self, l: usize) -> Option<S>;
    /// Smoothness constant of the whole objective.
    fn global_smoothness(&self) -> S;
    /// Largest disagreement between the two owners of any coordinate; zero
    /// for objectives without a consensus interpretation.
    fn consensus_residual(&self) -> S {
        S::zero()
    }
    /// Value of the underlying primal objective at the recovered consensus
    /// point, for dual objectives.
    fn recovered_primal_value(&self) -> Option<S> {
        None
    }
    /// Coordinate-gradient magnitude below which values are inner-solver
    /// noise; the estimator treats such gradients as zero.
    fn gradient_resolution(&self) -> S {
        S::zero()
    }
}

/// Dual of the edge-consensus problem: `F(lambda) = sum_i f_i*((A lambda)_i)`
/// with one block variable per edge.
///
/// Per-node conjugate maximizers `g_i` and conjugate values are cached;
/// updating an edge refreshes only its two endpoints.
pub struct DualObjective<S: Scalar, P: LocalProblem<S>> {
    topology: Topology,
    oracles: Vec<P>,
    dim: usize,
    lambda: Vec<S>,
    node_arg: Vec<DVector<S>>,
    node_grad: Vec<DVector<S>>,
    node_value: Vec<S>,
    coord_lip: Option<Vec<S>>,
    smoothness: S,
}

impl<S: Scalar, P: LocalProblem<S>> DualObjective<S, P> {
    pub fn new(topology: Topology, mut oracles: Vec<P>) -> Result<Self, ObjectiveError> {
        let n = topology.num_nodes();
        if oracles.len() != n {
            return Err(ObjectiveError::OracleCount {
                expected: n,
                got: oracles.len(),
            });
        }
        let dim = oracles[0].dim();
        for (index, o) in oracles.iter().enumerate() {
            if o.dim() != dim {
                return Err(ObjectiveError::MixedDimensions {
                    index,
                    expected: dim,
                    got: o.dim(),
                });
            }
        }
        let mu_min = oracles
            .iter()
            .map(|o| o.strong_convexity())
            .fold(oracles[0].strong_convexity(), |a, b| a.min(b));
        let spectrum = topology
            .laplacian_spectrum::<S>()
            .expect("validated topology is connected");
        let smoothness = spectrum.gamma_max / mu_min;
        let coord_lip = exact_coordinate_lipschitz(&topology, &oracles);

        let lambda = vec![S::zero(); topology.num_edges() * dim];
        let mut node_arg = Vec::with_capacity(n);
        let mut node_grad = Vec::with_capacity(n);
        let mut node_value = Vec::with_capacity(n);
        for i in 0..n {
            let y = DVector::zeros(dim);
            let (fstar, g) = oracles[i].conjugate_pair(&y)?;
            node_arg.push(y);
            node_grad.push(g);
            node_value.push(fstar);
        }
        Ok(DualObjective {
            topology,
            oracles,
            dim,
            lambda,
            node_arg,
            node_grad,
            node_value,
            coord_lip,
            smoothness,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn lambda(&self) -> &[S] {
        &self.lambda
    }

    /// Recovered per-node primal iterates `theta_i = g_i`.
    pub fn primal_recovery(&self) -> Vec<DVector<S>> {
        self.node_grad.clone()
    }

    /// Replaces the whole dual point and rebuilds every cache.
    pub fn set_lambda(&mut self, lambda: &[S]) -> Result<(), ProblemError> {
        assert_eq!(lambda.len(), self.lambda.len());
        self.lambda.copy_from_slice(lambda);
        for i in 0..self.topology.num_nodes() {
            self.refresh_node(i)?;
        }
        Ok(())
    }

    fn node_argument(&self, i: usize) -> DVector<S> {
        let mut y = DVector::zeros(self.dim);
        for &l in self.topology.node_set(i) {
            let sign = self.topology.sign(i, l);
            let block = &self.lambda[l * self.dim..(l + 1) * self.dim];
            for t in 0..self.dim {
                if sign > 0 {
                    y[t] += block[t];
                } else {
                    y[t] -= block[t];
                }
            }
        }
        y
    }

    fn refresh_node(&mut self, i: usize) -> Result<(), ProblemError> {
        let y = self.node_argument(i);
        let (fstar, g) = self.oracles[i].conjugate_pair(&y)?;
        self.node_arg[i] = y;
        self.node_grad[i] = g;
        self.node_value[i] = fstar;
        Ok(())
    }

    /// Recomputes every node cache from `lambda`; returns the largest entry
    /// change, which should stay within the inner solver tolerance.
    pub fn refresh_all(&mut self) -> Result<S, ProblemError> {
        let mut worst = S::zero();
        for i in 0..self.topology.num_nodes() {
            let before = self.node_grad[i].clone();
            self.refresh_node(i)?;
            let diff = (&self.node_grad[i] - &before).amax();
            worst = worst.max(diff);
        }
        Ok(worst)
    }

    /// Primal objective evaluated at the average of the recovered iterates.
    pub fn primal_value_at_mean(&self) -> S {
        let n = self.topology.num_nodes();
        let mut mean = DVector::zeros(self.dim);
        for g in &self.node_grad {
            mean += g;
        }
        mean /= S::from_f64(n as f64).expect("node count");
        self.oracles.iter().map(|o| o.value(&mean)).fold(S::zero(), |a, b| a + b)
    }
}

/// Exact per-edge smoothness constants `lambda_max(H_i* + H_j*)` when every
/// oracle exposes a constant conjugate Hessian.
fn exact_coordinate_lipschitz<S: Scalar, P: LocalProblem<S>>(
    topology: &Topology,
    oracles: &[P],
) -> Option<Vec<S>> {
    let hessians: Option<Vec<_>> = oracles.iter().map(LocalProblem::conjugate_hessian).collect();
    let hessians = hessians?;
    let mut lip = Vec::with_capacity(topology.num_edges());
    for &(i, j) in topology.edges() {
        let sum = &hessians[i] + &hessians[j];
        let eig = sum.symmetric_eigen();
        let mut top = eig.eigenvalues[0];
        for &v in eig.eigenvalues.iter() {
            top = top.max(v);
        }
        lip.push(top);
    }
    Some(lip)
}

impl<S: Scalar, P: LocalProblem<S>> SetwiseObjective<S> for DualObjective<S, P> {
    fn num_coords(&self) -> usize {
        self.topology.num_edges()
    }

    fn block_dim(&self) -> usize {
        self.dim
    }

    fn num_sets(&self) -> usize {
        self.topology.num_nodes()
    }

    fn set(&self, i: usize) -> &[usize] {
        self.topology.node_set(i)
    }

    fn coord_owners(&self, l: usize) -> (usize, usize) {
        self.topology.edge(l)
    }

    fn coord(&self, l: usize) -> &[S] {
        &self.lambda[l * self.dim..(l + 1) * self.dim]
    }

    fn set_coord(&mut self, l: usize, value: &[S]) -> Result<(), ProblemError> {
        self.lambda[l * self.dim..(l + 1) * self.dim].copy_from_slice(value);
        let (i, j) = self.topology.edge(l);
        self.refresh_node(i)?;
        self.refresh_node(j)
    }

    fn value(&self) -> S {
        self.node_value.iter().fold(S::zero(), |a, &b| a + b)
    }

    fn coord_gradient(&self, l: usize) -> DVector<S> {
        let (i, j) = self.topology.edge(l);
        &self.node_grad[i] - &self.node_grad[j]
    }

    fn coord_lipschitz(&self, l: usize) -> Option<S> {
        self.coord_lip.as_ref().map(|v| v[l])
    }

    fn global_smoothness(&self) -> S {
        self.smoothness
    }

    fn consensus_residual(&self) -> S {
        (0..self.num_coords())
            .map(|l| self.coord_gradient(l).norm())
            .fold(S::zero(), |a, b| a.max(b))
    }

    fn recovered_primal_value(&self) -> Option<S> {
        Some(self.primal_value_at_mean())
    }

    fn gradient_resolution(&self) -> S {
        // a coordinate gradient differences two conjugate maximizers
        let worst = self
            .oracles
            .iter()
            .map(LocalProblem::gradient_resolution)
            .fold(S::zero(), |a, b| a.max(b));
        worst + worst
    }
}

/// Separable primal objective split across workers: worker `i` owns the
/// scalar coordinates in `sets[i]`, and every coordinate is owned by exactly
/// two workers.
pub struct ParallelObjective<S: Scalar> {
    primal: Separable<S>,
    sets: Vec<Vec<usize>>,
    owners: Vec<(usize, usize)>,
    x: Vec<S>,
}

impl<S: Scalar> ParallelObjective<S> {
    pub fn new(
        mut primal: Separable<S>,
        sets: Vec<Vec<usize>>,
        x0: Vec<S>,
    ) -> Result<Self, ObjectiveError> {
        let e = primal.num_coords();
        if x0.len() != e {
            return Err(ObjectiveError::BadInitialPoint {
                expected: e,
                got: x0.len(),
            });
        }
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); e];
        for (i, set) in sets.iter().enumerate() {
            for &l in set {
                holders[l].push(i);
            }
        }
        if let Some((coord, h)) = holders.iter().enumerate().find(|(_, h)| h.len() != 2) {
            return Err(ObjectiveError::CoverageViolation {
                coord,
                count: h.len(),
            });
        }
        let owners = holders.iter().map(|h| (h[0], h[1])).collect();
        primal.init_box(&x0);
        Ok(ParallelObjective {
            primal,
            sets,
            owners,
            x: x0,
        })
    }

    /// Worker sets taken from a graph: worker `i` owns the coordinates of
    /// its incident edges, which covers every coordinate exactly twice.
    pub fn from_topology(
        primal: Separable<S>,
        topology: &Topology,
        x0: Vec<S>,
    ) -> Result<Self, ObjectiveError> {
        Self::new(primal, topology.node_sets().to_vec(), x0)
    }

    pub fn point(&self) -> &[S] {
        &self.x
    }

    pub fn primal(&self) -> &Separable<S> {
        &self.primal
    }
}

impl<S: Scalar> SetwiseObjective<S> for ParallelObjective<S> {
    fn num_coords(&self) -> usize {
        self.x.len()
    }

    fn block_dim(&self) -> usize {
        1
    }

    fn num_sets(&self) -> usize {
        self.sets.len()
    }

    fn set(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    fn coord_owners(&self, l: usize) -> (usize, usize) {
        self.owners[l]
    }

    fn coord(&self, l: usize) -> &[S] {
        &self.x[l..=l]
    }

    fn set_coord(&mut self, l: usize, value: &[S]) -> Result<(), ProblemError> {
        self.x[l] = value[0];
        self.primal.observe(l, value[0]);
        Ok(())
    }

    fn value(&self) -> S {
        self.primal.value(&self.x)
    }

    fn coord_gradient(&self, l: usize) -> DVector<S> {
        DVector::from_element(1, self.primal.coord_gradient(l, self.x[l]))
    }

    fn coord_lipschitz(&self, l: usize) -> Option<S> {
        Some(self.primal.coord_lipschitz(l))
    }

    fn global_smoothness(&self) -> S {
        (0..self.x.len())
            .map(|l| self.primal.coord_lipschitz(l))
            .fold(S::zero(), |a, b| a.max(b))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::problems::Quadratic;

    /// Two nodes joined by one edge, `f_1 = (theta-1)^2/2`,
    /// `f_2 = (theta+1)^2/2`; dual `F(lambda) = lambda^2 + 2 lambda`.
    pub fn two_node() -> DualObjective<f64, Quadratic<f64>> {
        let topo = Topology::new(2, vec![(0, 1)]).unwrap();
        let oracles = vec![
            Quadratic::scalar(1.0, 1.0).unwrap(),
            Quadratic::scalar(1.0, -1.0).unwrap(),
        ];
        DualObjective::new(topo, oracles).unwrap()
    }

    /// Star with center 0 and leaf targets `b = (3, 1, -1)`.
    pub fn star() -> DualObjective<f64, Quadratic<f64>> {
        let topo = Topology::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let oracles = vec![
            Quadratic::scalar(1.0, 0.0).unwrap(),
            Quadratic::scalar(1.0, 3.0).unwrap(),
            Quadratic::scalar(1.0, 1.0).unwrap(),
            Quadratic::scalar(1.0, -1.0).unwrap(),
        ];
        DualObjective::new(topo, oracles).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{star, two_node};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_node_dual_values() {
        let mut obj = two_node();
        assert_relative_eq!(obj.value(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(obj.coord_gradient(0)[0], 2.0, epsilon = 1e-14);
        obj.set_coord(0, &[-1.0]).unwrap();
        assert_relative_eq!(obj.value(), -1.0, epsilon = 1e-14);
        assert_relative_eq!(obj.coord_gradient(0)[0], 0.0, epsilon = 1e-14);
        // value is a pure function of the point
        let v = obj.value();
        obj.set_coord(0, &[-1.0]).unwrap();
        assert_eq!(obj.value(), v);
    }

    #[test]
    fn two_node_exact_coordinate_step() {
        let mut obj = two_node();
        assert_relative_eq!(obj.coord_lipschitz(0).unwrap(), 2.0, epsilon = 1e-12);
        let g = obj.coord_gradient(0)[0];
        let new = obj.coord(0)[0] - g / 2.0;
        obj.set_coord(0, &[new]).unwrap();
        assert_relative_eq!(obj.coord(0)[0], -1.0, epsilon = 1e-14);
        let theta = obj.primal_recovery();
        assert_relative_eq!(theta[0][0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(theta[1][0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(obj.consensus_residual(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gradient_cancels_for_equal_nodes() {
        use crate::problems::Quadratic;
        let topo = Topology::new(2, vec![(0, 1)]).unwrap();
        let oracles = vec![
            Quadratic::scalar(1.0, 0.5).unwrap(),
            Quadratic::scalar(1.0, 0.5).unwrap(),
        ];
        let obj = DualObjective::new(topo, oracles).unwrap();
        assert_relative_eq!(obj.coord_gradient(0)[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn star_gradients() {
        let obj = star();
        let g: Vec<f64> = (0..3).map(|l| obj.coord_gradient(l)[0]).collect();
        assert_relative_eq!(g[0], -3.0, epsilon = 1e-14);
        assert_relative_eq!(g[1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(g[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn descent_inequality_along_coordinates() {
        let mut obj = star();
        for l in 0..3 {
            let lip = obj.coord_lipschitz(l).unwrap();
            for eta_frac in [0.25, 0.5, 1.0] {
                let eta = eta_frac / lip;
                let before = obj.value();
                let g = obj.coord_gradient(l);
                let old = obj.coord(l).to_vec();
                obj.set_coord(l, &[old[0] - eta * g[0]]).unwrap();
                let after = obj.value();
                let bound = before - (eta - eta * eta * lip / 2.0) * g.norm_squared();
                assert!(after <= bound + 1e-12);
                obj.set_coord(l, &old).unwrap();
            }
        }
    }

    #[test]
    fn cache_refresh_is_noop_for_closed_form() {
        let mut obj = star();
        obj.set_coord(1, &[0.7]).unwrap();
        obj.set_coord(2, &[-0.3]).unwrap();
        let drift = obj.refresh_all().unwrap();
        assert!(drift <= 1e-14);
    }

    #[test]
    fn parallel_coverage_enforced() {
        let primal = Separable::new(vec![1.0_f64; 3], 2, 0.0).unwrap();
        let bad = ParallelObjective::new(
            primal.clone(),
            vec![vec![0, 1], vec![1, 2], vec![2]],
            vec![0.0; 3],
        );
        assert!(matches!(
            bad,
            Err(ObjectiveError::CoverageViolation { coord: 0, count: 1 })
        ));
        let ok = ParallelObjective::new(
            primal,
            vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            vec![1.0; 3],
        )
        .unwrap();
        assert_eq!(ok.num_sets(), 3);
        assert_relative_eq!(ok.value(), 3.0);
    }

    #[test]
    fn parallel_from_regular_layout() {
        let topo = crate::graph::circulant(12, &[1, 2, 3, 4]).unwrap();
        let primal = Separable::new(vec![2.0_f64; 48], 2, 0.0).unwrap();
        let mut obj = ParallelObjective::from_topology(primal, &topo, vec![1.0; 48]).unwrap();
        assert_eq!(obj.num_coords(), 48);
        assert_eq!(obj.num_sets(), 12);
        // one exact step per coordinate lands on its optimum
        let g = obj.coord_gradient(7)[0];
        let lip = obj.coord_lipschitz(7).unwrap();
        obj.set_coord(7, &[1.0 - g / lip]).unwrap();
        assert_relative_eq!(obj.point()[7], 0.0);
    }
}
