//! The norm machinery behind the convergence rates, with exact brute-force
//! dual oracles on small graphs, plus the rate certificate that collects the
//! theoretical per-iteration factors of every algorithm variant.
//!
//! The set-max dual oracle reduces `sup { z^T x : ||x||_SM <= 1 }` to
//! maximizing `sum_l |z_l| min(t_i, t_j)` over the nonnegative unit ball of
//! per-node magnitudes `t`, then solves that exactly by enumerating node
//! orderings and projecting onto each ordered cone (isotonic regression).

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Topology;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("brute-force dual oracle limited to {limit} edges, got {got}")]
    TooManyEdges { got: usize, limit: usize },
    #[error("vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("edge {edge} assigned to node {owner}, which is not an endpoint")]
    BadOwner { edge: usize, owner: usize },
    #[error("weights must be positive")]
    BadWeight,
}

pub const SET_MAX_DUAL_EDGE_LIMIT: usize = 7;
pub const ASSIGNMENT_ENUMERATION_EDGE_LIMIT: usize = 12;

fn check_len<S>(topology: &Topology, x: &[S]) -> Result<(), NormError> {
    if x.len() != topology.num_edges() {
        return Err(NormError::BadLength {
            expected: topology.num_edges(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Semi-norm `(x^T P x)^(1/2)` with `P` the orthogonal projector onto the
/// row space of the incidence operator. Vanishes exactly on cycle space.
pub struct RowSpaceProjector<S: Scalar> {
    basis: Vec<DVector<S>>,
    edges: usize,
}

impl<S: Scalar> RowSpaceProjector<S> {
    pub fn new(topology: &Topology) -> Self {
        let a = topology.incidence::<S>();
        let gram = a.transpose() * &a;
        let eig = gram.symmetric_eigen();
        let top = eig
            .eigenvalues
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v));
        let cutoff = top * S::from_config(crate::graph::ZERO_EIGENVALUE_CUTOFF);
        let mut basis = Vec::new();
        for (k, &v) in eig.eigenvalues.iter().enumerate() {
            if v > cutoff {
                basis.push(eig.eigenvectors.column(k).into_owned());
            }
        }
        RowSpaceProjector {
            basis,
            edges: topology.num_edges(),
        }
    }

    /// Rank of the incidence operator (`n - 1` for a connected graph).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, x: &[S]) -> Result<Vec<S>, NormError> {
        if x.len() != self.edges {
            return Err(NormError::BadLength {
                expected: self.edges,
                got: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        let mut out = DVector::zeros(self.edges);
        for b in &self.basis {
            out += b * b.dot(&v);
        }
        Ok(out.as_slice().to_vec())
    }

    pub fn norm(&self, x: &[S]) -> Result<S, NormError> {
        if x.len() != self.edges {
            return Err(NormError::BadLength {
                expected: self.edges,
                got: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        let mut acc = S::zero();
        for b in &self.basis {
            let c = b.dot(&v);
            acc += c * c;
        }
        Ok(acc.sqrt())
    }
}

/// `(x^T A^+ A x)^(1/2)` for an edge vector `x`.
pub fn norm_a<S: Scalar>(topology: &Topology, x: &[S]) -> Result<S, NormError> {
    RowSpaceProjector::new(topology).norm(x)
}

/// Set-max norm: `sqrt(sum_i max_{l in S_i} x_l^2)`.
pub fn norm_sm<S: Scalar>(topology: &Topology, x: &[S]) -> Result<S, NormError> {
    check_len(topology, x)?;
    let mut acc = S::zero();
    for i in 0..topology.num_nodes() {
        let m = topology
            .node_set(i)
            .iter()
            .map(|&l| x[l] * x[l])
            .fold(S::zero(), |a, b| a.max(b));
        acc += m;
    }
    Ok(acc.sqrt())
}

/// Set-max Lipschitz norm: `sqrt(sum_i max_{l in S_i} x_l^2 / L_l)`.
pub fn norm_sml<S: Scalar>(topology: &Topology, x: &[S], lips: &[S]) -> Result<S, NormError> {
    check_len(topology, x)?;
    check_len(topology, lips)?;
    if lips.iter().any(|&w| w <= S::zero()) {
        return Err(NormError::BadWeight);
    }
    let mut acc = S::zero();
    for i in 0..topology.num_nodes() {
        let m = topology
            .node_set(i)
            .iter()
            .map(|&l| x[l] * x[l] / lips[l])
            .fold(S::zero(), |a, b| a.max(b));
        acc += m;
    }
    Ok(acc.sqrt())
}

/// Weighted Euclidean norm `sqrt(sum w_l x_l^2)`.
pub fn weighted_norm<S: Scalar>(x: &[S], weights: &[S]) -> Result<S, NormError> {
    if weights.len() != x.len() {
        return Err(NormError::BadLength {
            expected: x.len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| w <= S::zero()) {
        return Err(NormError::BadWeight);
    }
    let mut acc = S::zero();
    for (&xi, &wi) in x.iter().zip(weights) {
        acc += wi * xi * xi;
    }
    Ok(acc.sqrt())
}

/// Dual of [`weighted_norm`]: same form with reciprocal weights.
pub fn weighted_norm_dual<S: Scalar>(z: &[S], weights: &[S]) -> Result<S, NormError> {
    let inv: Vec<S> = weights.iter().map(|&w| S::one() / w).collect();
    weighted_norm(z, &inv)
}

/// Exact dual of the set-max norm on small graphs (`E <= 7`).
pub fn norm_sm_dual_bruteforce<S: Scalar>(topology: &Topology, z: &[S]) -> Result<S, NormError> {
    check_len(topology, z)?;
    if topology.num_edges() > SET_MAX_DUAL_EDGE_LIMIT {
        return Err(NormError::TooManyEdges {
            got: topology.num_edges(),
            limit: SET_MAX_DUAL_EDGE_LIMIT,
        });
    }
    let c: Vec<S> = z.iter().map(|&v| v.abs()).collect();
    let n = topology.num_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = S::zero();
    permute(&mut order, 0, &mut |perm| {
        // rank_of[v] = position of node v in the ordering t_first >= ... >= 0
        let mut rank_of = vec![0usize; n];
        for (pos, &v) in perm.iter().enumerate() {
            rank_of[v] = pos;
        }
        // each edge contributes its weight to whichever endpoint comes later
        let mut w = vec![S::zero(); n];
        for (l, &(i, j)) in topology.edges().iter().enumerate() {
            let later = if rank_of[i] > rank_of[j] { i } else { j };
            w[later] += c[l];
        }
        let seq: Vec<S> = perm.iter().map(|&v| w[v]).collect();
        let fitted = isotonic_decreasing(&seq);
        let norm = fitted
            .iter()
            .map(|&v| v.max(S::zero()))
            .fold(S::zero(), |a, v| a + v * v)
            .sqrt();
        if norm > best {
            best = norm;
        }
    });
    Ok(best)
}

/// Exact dual of the set-max Lipschitz norm on small graphs: reweighting by
/// `sqrt(L_l)` reduces it to the plain set-max dual.
pub fn norm_sml_dual_bruteforce<S: Scalar>(
    topology: &Topology,
    z: &[S],
    lips: &[S],
) -> Result<S, NormError> {
    check_len(topology, lips)?;
    if lips.iter().any(|&w| w <= S::zero()) {
        return Err(NormError::BadWeight);
    }
    let scaled: Vec<S> = z
        .iter()
        .zip(lips)
        .map(|(&zi, &li)| zi * li.sqrt())
        .collect();
    norm_sm_dual_bruteforce(topology, &scaled)
}

fn permute<F: FnMut(&[usize])>(order: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == order.len() {
        visit(order);
        return;
    }
    for swap in k..order.len() {
        order.swap(k, swap);
        permute(order, k + 1, visit);
        order.swap(k, swap);
    }
}

/// Projection of `seq` onto nonincreasing sequences (pool adjacent
/// violators).
fn isotonic_decreasing<S: Scalar>(seq: &[S]) -> Vec<S> {
    let mut blocks: Vec<(S, S)> = Vec::with_capacity(seq.len()); // (sum, count)
    for &v in seq {
        blocks.push((v, S::one()));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 < s2 / c2 {
                blocks.pop();
                blocks.pop();
                blocks.push((s1 + s2, c1 + c2));
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(seq.len());
    for (s, c) in blocks {
        let mean = s / c;
        let len = c.to_config().round() as usize;
        out.extend(std::iter::repeat_n(mean, len));
    }
    out
}

/// Ownership of every edge by one of its endpoints; the induced sets
/// `S_i' = { l : owner(l) = i }` are disjoint with `S_i' subset of S_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetAssignment {
    owner: Vec<usize>,
}

impl SetAssignment {
    pub fn new(topology: &Topology, owner: Vec<usize>) -> Result<Self, NormError> {
        if owner.len() != topology.num_edges() {
            return Err(NormError::BadLength {
                expected: topology.num_edges(),
                got: owner.len(),
            });
        }
        for (edge, &o) in owner.iter().enumerate() {
            let (i, j) = topology.edge(edge);
            if o != i && o != j {
                return Err(NormError::BadOwner { edge, owner: o });
            }
        }
        Ok(SetAssignment { owner })
    }

    /// Every edge owned by its lower-index endpoint.
    pub fn all_lower(topology: &Topology) -> Self {
        SetAssignment {
            owner: topology.edges().iter().map(|&(i, _)| i).collect(),
        }
    }

    pub fn owner(&self, l: usize) -> usize {
        self.owner[l]
    }

    /// Swaps every edge to its opposite endpoint.
    pub fn complement(&self, topology: &Topology) -> Self {
        SetAssignment {
            owner: self
                .owner
                .iter()
                .enumerate()
                .map(|(l, &o)| {
                    let (i, j) = topology.edge(l);
                    if o == i {
                        j
                    } else {
                        i
                    }
                })
                .collect(),
        }
    }

    /// The disjoint owned sets, indexed by node.
    pub fn induced_sets(&self, topology: &Topology) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); topology.num_nodes()];
        for (l, &o) in self.owner.iter().enumerate() {
            sets[o].push(l);
        }
        sets
    }
}

/// Non-overlapping set-max norm for a fixed assignment:
/// `sqrt(sum_i max_{l in S_i'} x_l^2)`.
pub fn norm_smno<S: Scalar>(
    topology: &Topology,
    x: &[S],
    assignment: &SetAssignment,
) -> Result<S, NormError> {
    check_len(topology, x)?;
    let mut per_node = vec![S::zero(); topology.num_nodes()];
    for (l, &xi) in x.iter().enumerate() {
        let o = assignment.owner(l);
        per_node[o] = per_node[o].max(xi * xi);
    }
    Ok(per_node.iter().fold(S::zero(), |a, &b| a + b).sqrt())
}

/// Closed-form dual of the non-overlapping set-max norm for a fixed
/// assignment: `sqrt(sum_i ||T_i' z||_1^2)`.
pub fn norm_smno_dual<S: Scalar>(
    topology: &Topology,
    z: &[S],
    assignment: &SetAssignment,
) -> Result<S, NormError> {
    check_len(topology, z)?;
    let mut sums = vec![S::zero(); topology.num_nodes()];
    for (l, &zi) in z.iter().enumerate() {
        sums[assignment.owner(l)] += zi.abs();
    }
    Ok(sums.iter().fold(S::zero(), |a, &b| a + b * b).sqrt())
}

/// Enumerates all `2^E` assignments and returns the one maximizing the
/// closed-form dual value, with that value.
pub fn best_assignment_bruteforce<S: Scalar>(
    topology: &Topology,
    z: &[S],
) -> Result<(SetAssignment, S), NormError> {
    check_len(topology, z)?;
    let e = topology.num_edges();
    if e > ASSIGNMENT_ENUMERATION_EDGE_LIMIT {
        return Err(NormError::TooManyEdges {
            got: e,
            limit: ASSIGNMENT_ENUMERATION_EDGE_LIMIT,
        });
    }
    let mut best_value = -S::one();
    let mut best_owner = vec![0usize; e];
    for mask in 0u32..(1u32 << e) {
        let owner: Vec<usize> = (0..e)
            .map(|l| {
                let (i, j) = topology.edge(l);
                if mask & (1 << l) == 0 {
                    i
                } else {
                    j
                }
            })
            .collect();
        let assignment = SetAssignment { owner };
        let value = norm_smno_dual(topology, z, &assignment)?;
        if value > best_value {
            best_value = value;
            best_owner = assignment.owner;
        }
    }
    Ok((SetAssignment { owner: best_owner }, best_value))
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Theoretical constants and per-iteration contraction factors. Strong
/// convexity constants in the exotic norms are only ever bounded, so the
/// certificate carries intervals, never invented point values.
#[derive(Debug, Clone, Serialize)]
pub struct RateCertificate {
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    /// Global dual smoothness `L`.
    pub smoothness: f64,
    /// Strong convexity in the incidence semi-norm.
    pub sigma_a: f64,
    /// Set-max strong convexity bounds `[sigma_a / N_max, 2 sigma_a]`.
    pub sigma_set_max: Interval,
    /// Weighted-norm strong convexity bounds from the extreme `1/L^(i) +
    /// 1/L^(j)` values.
    pub sigma_weighted: Interval,
    /// Lower bound on the set-max-Lipschitz strong convexity.
    pub sigma_set_max_lipschitz_lower: f64,
    /// Per-iteration contraction factor of uniform selection.
    pub su_factor: f64,
    /// Factor interval for greedy selection.
    pub sgs_factor: Interval,
    /// Factor interval for Lipschitz sampling.
    pub sl_factor: Interval,
    /// Factor lower bound for greedy Lipschitz selection.
    pub sgsl_factor_lower: f64,
    /// Exact coordinate smoothness constants `L_l`.
    pub coordinate_smoothness: Vec<f64>,
    /// Per-edge `1/L^(i) + 1/L^(j)`.
    pub inverse_set_sums: Vec<f64>,
    /// `min_l (1/L^(i) + 1/L^(j)) >= 2 / (L_max N_max)`.
    pub weighted_min_consistent: bool,
    /// `max_l L_l <= L`.
    pub coordinate_le_global: bool,
}

/// Assembles the certificate from the graph spectrum, the extreme local
/// constants, and the exact coordinate smoothness values.
pub fn rate_certificate<S: Scalar>(
    topology: &Topology,
    mu_min: S,
    m_max: S,
    coordinate_smoothness: &[S],
) -> Result<RateCertificate, NormError> {
    check_len(topology, coordinate_smoothness)?;
    if coordinate_smoothness.iter().any(|&l| l <= S::zero()) {
        return Err(NormError::BadWeight);
    }
    let spectrum = topology
        .laplacian_spectrum::<S>()
        .expect("certificates need a connected graph");
    let (smoothness, sigma_a) = crate::graph::global_constants(&spectrum, mu_min, m_max)
        .expect("constants validated by caller");
    let smoothness = smoothness.to_config();
    let sigma_a = sigma_a.to_config();
    let n = topology.num_nodes();
    let n_max = topology.max_degree();

    let set_sums: Vec<f64> = (0..n)
        .map(|i| {
            topology
                .node_set(i)
                .iter()
                .map(|&l| coordinate_smoothness[l].to_config())
                .sum()
        })
        .collect();
    let inverse_set_sums: Vec<f64> = topology
        .edges()
        .iter()
        .map(|&(i, j)| 1.0 / set_sums[i] + 1.0 / set_sums[j])
        .collect();
    let w_min = inverse_set_sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_max = inverse_set_sums.iter().cloned().fold(0.0, f64::max);
    let lip_max = coordinate_smoothness
        .iter()
        .map(|l| l.to_config())
        .fold(0.0, f64::max);

    let sigma_set_max = Interval {
        lower: sigma_a / n_max as f64,
        upper: 2.0 * sigma_a,
    };
    let sigma_weighted = Interval {
        lower: sigma_a * w_min,
        upper: sigma_a * w_max,
    };
    let sigma_set_max_lipschitz_lower = sigma_set_max.lower / smoothness;
    let nf = n as f64;
    Ok(RateCertificate {
        nodes: n,
        edges: topology.num_edges(),
        max_degree: n_max,
        smoothness,
        sigma_a,
        sigma_set_max,
        sigma_weighted,
        sigma_set_max_lipschitz_lower,
        su_factor: 2.0 * sigma_a / (smoothness * nf * n_max as f64),
        sgs_factor: Interval {
            lower: sigma_set_max.lower / (smoothness * nf),
            upper: sigma_set_max.upper / (smoothness * nf),
        },
        sl_factor: Interval {
            lower: sigma_weighted.lower / nf,
            upper: sigma_weighted.upper / nf,
        },
        sgsl_factor_lower: sigma_set_max_lipschitz_lower / nf,
        coordinate_smoothness: coordinate_smoothness.iter().map(|l| l.to_config()).collect(),
        inverse_set_sums,
        weighted_min_consistent: w_min >= 2.0 / (lip_max * n_max as f64) * (1.0 - 1e-12),
        coordinate_le_global: lip_max <= smoothness * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Topology;
    use approx::assert_relative_eq;

    fn triangle() -> Topology {
        Topology::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn projection_norm_on_triangle() {
        let t = triangle();
        let proj = RowSpaceProjector::<f64>::new(&t);
        assert_eq!(proj.rank(), 2);
        let p = proj.project(&[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(p[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(p[1], 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(p[2], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            proj.norm(&[1.0, 1.0, 1.0]).unwrap(),
            2.0 * 6.0_f64.sqrt() / 3.0,
            epsilon = 1e-12
        );
        // the cycle vector spans the kernel
        assert_relative_eq!(proj.norm(&[1.0, -1.0, 1.0]).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn projection_is_identity_on_row_space() {
        let t = triangle();
        let a = t.incidence::<f64>();
        let v = nalgebra::DVector::from_vec(vec![0.3, -1.2, 0.9]);
        let x = (a.transpose() * v).as_slice().to_vec();
        let n2 = nalgebra::DVector::from_column_slice(&x).norm();
        assert_relative_eq!(norm_a(&t, &x).unwrap(), n2, epsilon = 1e-12);
    }

    #[test]
    fn set_max_norm_examples() {
        let t = triangle();
        assert_relative_eq!(norm_sm(&t, &[2.0, 1.0, 0.0]).unwrap(), 3.0);
        assert_relative_eq!(norm_sm(&t, &[1.0, 1.0, 1.0]).unwrap(), 3.0_f64.sqrt());
        let x = [0.4, -1.7, 0.8];
        let two_x = [0.8, -3.4, 1.6];
        assert_relative_eq!(
            norm_sm(&t, &two_x).unwrap(),
            2.0 * norm_sm(&t, &x).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn set_max_dual_single_edge() {
        let t = Topology::new(2, vec![(0, 1)]).unwrap();
        // both per-node maxima are the single coordinate: |x| <= 1/sqrt(2)
        assert_relative_eq!(
            norm_sm_dual_bruteforce(&t, &[5.0]).unwrap(),
            5.0 / 2.0_f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn set_max_dual_symmetric_cases() {
        let t = triangle();
        assert_relative_eq!(
            norm_sm_dual_bruteforce(&t, &[1.0, 1.0, 1.0]).unwrap(),
            3.0_f64.sqrt(),
            epsilon = 1e-12
        );
        let path3 = Topology::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_relative_eq!(
            norm_sm_dual_bruteforce(&path3, &[1.0, 1.0]).unwrap(),
            2.0 / 3.0_f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn set_max_dual_size_guard() {
        let t = crate::graph::circulant(8, &[1]).unwrap();
        assert!(matches!(
            norm_sm_dual_bruteforce(&t, &[1.0; 8]),
            Err(NormError::TooManyEdges { got: 8, limit: 7 })
        ));
    }

    #[test]
    fn smno_closed_form_examples() {
        let t = triangle();
        let lower = SetAssignment::all_lower(&t);
        // sets {e0, e1} at node 0, {e2} at node 1: sqrt(4 + 1)
        assert_relative_eq!(
            norm_smno_dual(&t, &[1.0, 1.0, 1.0], &lower).unwrap(),
            5.0_f64.sqrt()
        );
        let single = Topology::new(2, vec![(0, 1)]).unwrap();
        let a = SetAssignment::all_lower(&single);
        assert_relative_eq!(norm_smno_dual(&single, &[-3.0], &a).unwrap(), 3.0);
        assert_relative_eq!(
            norm_smno_dual(&single, &[-3.0], &a.complement(&single)).unwrap(),
            3.0
        );
    }

    #[test]
    fn assignment_bookkeeping() {
        let t = triangle();
        let a = SetAssignment::all_lower(&t);
        let sets = a.induced_sets(&t);
        assert_eq!(sets[0], vec![0, 1]);
        assert_eq!(sets[1], vec![2]);
        assert!(sets[2].is_empty());
        let comp = a.complement(&t);
        let csets = comp.induced_sets(&t);
        assert!(csets[0].is_empty());
        assert_eq!(csets[1], vec![0]);
        assert_eq!(csets[2], vec![1, 2]);
        assert_eq!(comp.complement(&t), a);
        assert!(SetAssignment::new(&t, vec![2, 0, 1]).is_err());
    }

    #[test]
    fn best_assignment_on_triangle() {
        let t = triangle();
        let (_, value) = best_assignment_bruteforce(&t, &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(value, 5.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn weighted_norm_pair() {
        let w = [1.0, 4.0];
        assert_relative_eq!(weighted_norm(&[1.0, 1.0], &w).unwrap(), 5.0_f64.sqrt());
        assert_relative_eq!(
            weighted_norm_dual(&[1.0, 1.0], &w).unwrap(),
            1.25_f64.sqrt()
        );
        // unit weights reduce to the Euclidean norm
        assert_relative_eq!(
            weighted_norm(&[3.0, 4.0], &[1.0, 1.0]).unwrap(),
            5.0
        );
        assert!(weighted_norm(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn sml_reduces_to_sm_for_unit_constants() {
        let t = triangle();
        let x = [0.5, -2.0, 1.0];
        assert_relative_eq!(
            norm_sml(&t, &x, &[1.0, 1.0, 1.0]).unwrap(),
            norm_sm(&t, &x).unwrap()
        );
        assert_relative_eq!(
            norm_sml_dual_bruteforce(&t, &x, &[1.0, 1.0, 1.0]).unwrap(),
            norm_sm_dual_bruteforce(&t, &x).unwrap()
        );
    }

    #[test]
    fn certificate_two_node_fixture() {
        let t = Topology::new(2, vec![(0, 1)]).unwrap();
        let cert = rate_certificate(&t, 1.0, 1.0, &[2.0]).unwrap();
        assert_relative_eq!(cert.smoothness, 2.0);
        assert_relative_eq!(cert.sigma_a, 2.0);
        // one-step convergence predicted for uniform selection
        assert_relative_eq!(cert.su_factor, 1.0);
        assert!(cert.weighted_min_consistent);
        assert!(cert.coordinate_le_global);
    }

    #[test]
    fn certificate_interval_sanity() {
        let t = crate::graph::generate_regular(32, 8, 7).unwrap();
        let lips = vec![1.0; t.num_edges()];
        let cert = rate_certificate(&t, 1.0, 2.0, &lips).unwrap();
        assert!(cert.sigma_set_max.lower > 0.0);
        assert!(cert.sigma_set_max.upper <= 2.0 * cert.sigma_a + 1e-15);
        assert!(cert.su_factor > 0.0 && cert.su_factor < 1.0);
        assert!(cert.sl_factor.lower <= cert.sl_factor.upper);
        assert!(cert.sgsl_factor_lower > 0.0);
    }

    #[test]
    fn isotonic_projection_basics() {
        assert_eq!(
            isotonic_decreasing(&[3.0, 2.0, 1.0]),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(
            isotonic_decreasing(&[0.0, 1.0, 2.0]),
            vec![1.0, 1.0, 1.0]
        );
        assert_eq!(
            isotonic_decreasing(&[2.0, 0.0, 1.0]),
            vec![2.0, 0.5, 0.5]
        );
    }
}
