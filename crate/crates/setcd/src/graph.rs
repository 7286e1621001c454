//! Communication graphs: incidence structure, per-node edge sets, Laplacian
//! spectrum, and the global constants of the dual objective.
//!
//! Edges are stored as `(i, j)` pairs with `i < j`. The incidence operator
//! puts `+1` at the lower-index endpoint and `-1` at the other; the sign
//! choice is arbitrary for the algorithms, fixing it makes runs reproducible.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Relative cutoff under which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) out of range for {2} nodes")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("spectrum reports more than one zero eigenvalue (disconnected graph)")]
    SpectralDisconnection,
    #[error("regular graph requires n*degree even, got n={n}, degree={degree}")]
    OddStubCount { n: usize, degree: usize },
    #[error("degree {degree} not in 1..n={n}")]
    BadDegree { n: usize, degree: usize },
    #[error("edge probability {0} not in (0, 1]")]
    BadProbability(f64),
    #[error("no valid graph found after {0} seed retries")]
    RetriesExhausted(usize),
    #[error("constants must satisfy 0 < mu_min <= m_max, got mu_min={mu_min}, m_max={m_max}")]
    BadConstants { mu_min: f64, m_max: f64 },
}

/// Connected undirected graph with indexed, oriented edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    node_sets: Vec<Vec<usize>>,
}

/// On-disk form: `{"n": ..., "edges": [[i, j], ...]}`. Edge order in the
/// file fixes the edge indices.
#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Validates and builds a topology. Edge endpoints may be given in any
    /// order; they are stored as `(min, max)`.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoop(a, b));
            }
            if a >= n || b >= n {
                return Err(TopologyError::EdgeOutOfRange(a, b, n));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(TopologyError::DuplicateEdge(e.0, e.1));
            }
            normalized.push(e);
        }
        let mut node_sets = vec![Vec::new(); n];
        for (idx, &(i, j)) in normalized.iter().enumerate() {
            node_sets[i].push(idx);
            node_sets[j].push(idx);
        }
        let topo = Topology {
            n,
            edges: normalized,
            node_sets,
        };
        if !topo.is_connected() {
            return Err(TopologyError::Disconnected);
        }
        Ok(topo)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, l: usize) -> (usize, usize) {
        self.edges[l]
    }

    /// Edge indices incident to node `i` (the set the node may update).
    pub fn node_set(&self, i: usize) -> &[usize] {
        &self.node_sets[i]
    }

    pub fn node_sets(&self) -> &[Vec<usize>] {
        &self.node_sets
    }

    pub fn degree(&self, i: usize) -> usize {
        self.node_sets[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.node_sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Neighbors of `i`, ordered like `node_set(i)`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.node_sets[i]
            .iter()
            .map(|&l| {
                let (a, b) = self.edges[l];
                if a == i {
                    b
                } else {
                    a
                }
            })
            .collect()
    }

    /// Incidence sign of node `i` on edge `l`: `+1` at the lower endpoint,
    /// `-1` at the upper, `0` if not incident.
    pub fn sign(&self, i: usize, l: usize) -> i8 {
        let (a, b) = self.edges[l];
        if i == a {
            1
        } else if i == b {
            -1
        } else {
            0
        }
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &l in &self.node_sets[i] {
                let (a, b) = self.edges[l];
                let other = if a == i { b } else { a };
                if !seen[other] {
                    seen[other] = true;
                    count += 1;
                    stack.push(other);
                }
            }
        }
        count == self.n
    }

    /// Signed node-by-edge incidence operator.
    pub fn incidence<S: Scalar>(&self) -> DMatrix<S> {
        let mut a = DMatrix::zeros(self.n, self.edges.len());
        for (l, &(i, j)) in self.edges.iter().enumerate() {
            a[(i, l)] = S::one();
            a[(j, l)] = -S::one();
        }
        a
    }

    /// Extreme Laplacian eigenvalues `(gamma_max, gamma_min_plus)`.
    ///
    /// Eigenvalues below `ZERO_EIGENVALUE_CUTOFF * gamma_max` count as zero;
    /// a connected graph must produce exactly one of those.
    pub fn laplacian_spectrum<S: Scalar>(&self) -> Result<SpectralSummary<S>, TopologyError> {
        let a = self.incidence::<S>();
        let lap = &a * a.transpose();
        let eig = lap.symmetric_eigen();
        let mut vals: Vec<S> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
        let gamma_max = *vals.last().expect("n >= 2");
        let cutoff = gamma_max * S::from_config(ZERO_EIGENVALUE_CUTOFF);
        let zeros = vals.iter().filter(|&&v| v < cutoff).count();
        if zeros != 1 {
            return Err(TopologyError::SpectralDisconnection);
        }
        let gamma_min_plus = vals[1];
        Ok(SpectralSummary {
            gamma_max,
            gamma_min_plus,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TopologyFile {
            n: self.n,
            edges: self.edges.clone(),
        })
        .expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: TopologyFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Topology::new(file.n, file.edges).map_err(|e| e.to_string())
    }
}

impl Serialize for Topology {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        TopologyFile {
            n: self.n,
            edges: self.edges.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let file = TopologyFile::deserialize(de)?;
        Topology::new(file.n, file.edges).map_err(serde::de::Error::custom)
    }
}

/// Extreme eigenvalues of the graph Laplacian.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralSummary<S> {
    pub gamma_max: S,
    pub gamma_min_plus: S,
}

/// Smoothness and semi-norm strong-convexity constants of the dual
/// objective: `L = gamma_max / mu_min`, `sigma_a = gamma_min_plus / m_max`.
pub fn global_constants<S: Scalar>(
    spectrum: &SpectralSummary<S>,
    mu_min: S,
    m_max: S,
) -> Result<(S, S), TopologyError> {
    if mu_min <= S::zero() || m_max < mu_min {
        return Err(TopologyError::BadConstants {
            mu_min: mu_min.to_config(),
            m_max: m_max.to_config(),
        });
    }
    Ok((
        spectrum.gamma_max / mu_min,
        spectrum.gamma_min_plus / m_max,
    ))
}

const GENERATOR_RETRIES: usize = 1000;

/// Random `degree`-regular graph via configuration-model pairing. A draw
/// with loops, multi-edges, or disconnection retries with `seed + 1`.
pub fn generate_regular(n: usize, degree: usize, seed: u64) -> Result<Topology, TopologyError> {
    if degree == 0 || degree >= n {
        return Err(TopologyError::BadDegree { n, degree });
    }
    if n * degree % 2 != 0 {
        return Err(TopologyError::OddStubCount { n, degree });
    }
    for attempt in 0..GENERATOR_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        if let Some(edges) = pair_stubs(n, degree, &mut rng) {
            if let Ok(topo) = Topology::new(n, edges) {
                return Ok(topo);
            }
        }
    }
    Err(TopologyError::RetriesExhausted(GENERATOR_RETRIES))
}

/// One configuration-model draw. Each stub pairs with a uniformly random
/// stub that creates neither a loop nor a multi-edge; `None` when the draw
/// gets stuck with only invalid partners left.
fn pair_stubs(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, degree)).collect();
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(n * degree / 2);
    while !stubs.is_empty() {
        let u = stubs[0];
        let candidates: Vec<usize> = (1..stubs.len())
            .filter(|&k| {
                let v = stubs[k];
                v != u && !present.contains(&(u.min(v), u.max(v)))
            })
            .collect();
        let &k = candidates.get(rng.random_range(0..candidates.len().max(1)))?;
        let v = stubs[k];
        stubs.swap_remove(k);
        stubs.swap_remove(0);
        let e = (u.min(v), u.max(v));
        present.insert(e);
        edges.push(e);
    }
    Some(edges)
}

/// Erdos-Renyi graph: each pair drawn independently with probability `p`.
/// Disconnected draws retry with `seed + 1`.
pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Topology, TopologyError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(TopologyError::BadProbability(p));
    }
    for attempt in 0..GENERATOR_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if let Ok(topo) = Topology::new(n, edges) {
            return Ok(topo);
        }
    }
    Err(TopologyError::RetriesExhausted(GENERATOR_RETRIES))
}

/// Named catalog of small connected graphs (paths, stars, cycles, complete
/// graphs) with at most `max_edges` edges, for exhaustive verification.
pub fn small_connected_graphs(max_edges: usize) -> Vec<(String, Topology)> {
    let mut out = Vec::new();
    for n in 2..=(max_edges + 1) {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        out.push((format!("path{n}"), Topology::new(n, edges).unwrap()));
    }
    for leaves in 2..=max_edges {
        let edges: Vec<_> = (1..=leaves).map(|j| (0, j)).collect();
        out.push((
            format!("star{leaves}"),
            Topology::new(leaves + 1, edges).unwrap(),
        ));
    }
    for n in 3..=max_edges {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        out.push((format!("cycle{n}"), Topology::new(n, edges).unwrap()));
    }
    for n in [3usize, 4] {
        if n * (n - 1) / 2 <= max_edges {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            out.push((format!("complete{n}"), Topology::new(n, edges).unwrap()));
        }
    }
    out
}

/// Circulant graph: node `i` linked to `i +- o (mod n)` for each offset.
/// Deterministic; used for the crafted coordinate-set layouts.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<Topology, TopologyError> {
    let mut edges = Vec::new();
    for i in 0..n {
        for &o in offsets {
            let j = (i + o) % n;
            if j != i {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Topology::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn path2() -> Topology {
        Topology::new(2, vec![(0, 1)]).unwrap()
    }

    pub(crate) fn triangle() -> Topology {
        Topology::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn star4() -> Topology {
        Topology::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn incidence_signs_path() {
        let a = path2().incidence::<f64>();
        assert_eq!((a[(0, 0)], a[(1, 0)]), (1.0, -1.0));
    }

    #[test]
    fn incidence_signs_triangle() {
        let a = triangle().incidence::<f64>();
        let cols: Vec<Vec<f64>> = (0..3).map(|l| (0..3).map(|i| a[(i, l)]).collect()).collect();
        assert_eq!(cols[0], vec![1.0, -1.0, 0.0]);
        assert_eq!(cols[1], vec![1.0, 0.0, -1.0]);
        assert_eq!(cols[2], vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn incidence_signs_star() {
        let a = star4().incidence::<f64>();
        for l in 0..3 {
            assert_eq!(a[(0, l)], 1.0);
            assert_eq!(a[(l + 1, l)], -1.0);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            Topology::new(3, vec![(0, 0)]),
            Err(TopologyError::SelfLoop(0, 0))
        ));
        assert!(matches!(
            Topology::new(3, vec![(0, 1), (1, 0)]),
            Err(TopologyError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Topology::new(4, vec![(0, 1), (2, 3)]),
            Err(TopologyError::Disconnected)
        ));
    }

    #[test]
    fn spectrum_path() {
        let s = path2().laplacian_spectrum::<f64>().unwrap();
        assert_relative_eq!(s.gamma_max, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.gamma_min_plus, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_triangle() {
        let s = triangle().laplacian_spectrum::<f64>().unwrap();
        assert_relative_eq!(s.gamma_max, 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.gamma_min_plus, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_star() {
        let s = star4().laplacian_spectrum::<f64>().unwrap();
        assert_relative_eq!(s.gamma_max, 4.0, epsilon = 1e-12);
        assert_relative_eq!(s.gamma_min_plus, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constants_from_spectrum() {
        let s = path2().laplacian_spectrum::<f64>().unwrap();
        let (l, sigma) = global_constants(&s, 1.0, 1.0).unwrap();
        assert_relative_eq!(l, 2.0);
        assert_relative_eq!(sigma, 2.0);

        let t = triangle().laplacian_spectrum::<f64>().unwrap();
        let (l, sigma) = global_constants(&t, 1.0, 2.0).unwrap();
        assert_relative_eq!(l, 3.0);
        assert_relative_eq!(sigma, 1.5);

        // with mu_min == m_max the ratio collapses to the eigenvalue ratio
        let (l, sigma) = global_constants(&t, 2.0, 2.0).unwrap();
        assert_relative_eq!(l / sigma, 3.0 / 3.0);
        assert!(global_constants(&t, 0.0, 1.0).is_err());
        assert!(global_constants(&t, 2.0, 1.0).is_err());
    }

    #[test]
    fn regular_4_2_is_cycle() {
        let t = generate_regular(4, 2, 11).unwrap();
        assert_eq!(t.num_edges(), 4);
        for i in 0..4 {
            assert_eq!(t.degree(i), 2);
        }
    }

    #[test]
    fn regular_32_8_degree_bookkeeping() {
        let t = generate_regular(32, 8, 3).unwrap();
        assert_eq!(t.num_edges(), 128);
        let total: usize = (0..32).map(|i| t.degree(i)).sum();
        assert_eq!(total, 2 * t.num_edges());
        assert_eq!(t.max_degree(), 8);
    }

    #[test]
    fn erdos_renyi_p1_is_complete() {
        let t = generate_erdos_renyi(2, 1.0, 5).unwrap();
        assert_eq!(t.num_edges(), 1);
        let t = generate_erdos_renyi(5, 1.0, 5).unwrap();
        assert_eq!(t.num_edges(), 10);
    }

    #[test]
    fn generators_deterministic() {
        let a = generate_erdos_renyi(12, 0.3, 42).unwrap();
        let b = generate_erdos_renyi(12, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_regular(12, 4, 42).unwrap();
        let d = generate_regular(12, 4, 42).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn circulant_layout() {
        let t = circulant(12, &[1, 2, 3, 4]).unwrap();
        assert_eq!(t.num_edges(), 48);
        assert_eq!(t.max_degree(), 8);
        for i in 0..12 {
            assert_eq!(t.degree(i), 8);
        }
        let t = circulant(24, &[1, 2]).unwrap();
        assert_eq!(t.num_edges(), 48);
        assert_eq!(t.max_degree(), 4);
    }

    #[test]
    fn json_round_trip_preserves_edge_order() {
        let t = triangle();
        let text = t.to_json();
        let back = Topology::from_json(&text).unwrap();
        assert_eq!(t, back);
        assert!(Topology::from_json("{\"n\":4,\"edges\":[[0,1]]}").is_err());
    }
}
