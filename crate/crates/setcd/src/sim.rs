//! Discrete-event simulation of the realistic asynchronous setting: nodes
//! activate on exponential clocks (equal or skewed rates), every message
//! exchange blocks its participants for `tau` time units, and non-conflicting
//! pairs update in parallel.
//!
//! Semantics per activation of node `i`:
//! - `i` busy: the activation is dropped.
//! - randomized rules: pick the peer; if it is busy the activation is
//!   dropped (or queued, behind a config switch), otherwise both nodes block
//!   for one exchange round and the update applies at its completion.
//! - greedy rules: `i` reserves itself and waits until all neighbors are
//!   simultaneously idle (without reserving them), runs a gather round, then
//!   one more round with the chosen peer. An activation that finds a
//!   *waiting* neighbor is dropped, which keeps waiters non-adjacent and
//!   mutual waits impossible.
//!
//! The loop is single threaded and deterministic given `(config, seed)`;
//! parallelism of disjoint pairs is modeled in simulated time, not executed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    estimate_lipschitz_step, format_float, select_gs, select_gsl, select_lipschitz,
    vectors_per_update, EngineError, SelectionRule, StepsizePolicy, TieBreak,
};
use crate::objective::SetwiseObjective;
use crate::scalar::Scalar;

/// Per-node activation rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationProcess {
    rates: Vec<f64>,
}

impl ActivationProcess {
    /// Every node activates at rate `kappa`.
    pub fn equal(n: usize, kappa: f64) -> Self {
        ActivationProcess {
            rates: vec![kappa; n],
        }
    }

    /// Skewed rates modeling stragglers: draw ranks from a Zipf law with
    /// exponent 2 on `{1..n}`, set rates proportional to the reciprocal
    /// rank, and rescale so the mean rate is exactly `kappa`. Most nodes end
    /// up faster than `kappa`, a few much slower.
    pub fn zipf_skewed(n: usize, kappa: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let weights: Vec<f64> = (1..=n).map(|k| 1.0 / (k as f64 * k as f64)).collect();
        let total: f64 = weights.iter().sum();
        let mut rates: Vec<f64> = (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut rank = n;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        rank = k + 1;
                        break;
                    }
                }
                1.0 / rank as f64
            })
            .collect();
        let mean: f64 = rates.iter().sum::<f64>() / n as f64;
        for r in &mut rates {
            *r *= kappa / mean;
        }
        ActivationProcess { rates }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len() as f64
    }
}

/// What happens when a randomized-rule activation finds its peer busy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusyPeerPolicy {
    /// Drop the activation (default).
    Drop,
    /// Reserve the activated node until the chosen peer frees up.
    Queue,
    /// Restrict the draw to coordinates whose peer is idle; drop only when
    /// the whole neighborhood is busy.
    IdleOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub rule: SelectionRule,
    pub stepsize: StepsizePolicy,
    pub seed: u64,
    /// Duration of one communication round.
    pub tau: f64,
    /// Simulated-time horizon.
    pub horizon: f64,
    pub busy_policy: BusyPeerPolicy,
    /// Model the gather as one round per neighbor instead of one parallel
    /// round.
    pub sequential_gather: bool,
    pub initial_estimate: f64,
    pub tie_break: TieBreak,
    /// Hard cap on processed events; hitting it sets the truncation flag.
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(rule: SelectionRule, stepsize: StepsizePolicy, seed: u64, tau: f64, horizon: f64) -> Self {
        SimConfig {
            rule,
            stepsize,
            seed,
            tau,
            horizon,
            busy_policy: BusyPeerPolicy::Drop,
            sequential_gather: false,
            initial_estimate: crate::engine::DEFAULT_INITIAL_ESTIMATE,
            tie_break: TieBreak::LowestIndex,
            max_events: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Update,
    Drop,
}

#[derive(Debug, Clone, Copy)]
pub struct TimedEvent {
    pub sim_time: f64,
    pub kind: EventKind,
    pub node_i: usize,
    pub node_j: Option<usize>,
    pub f_value: f64,
    pub subopt: f64,
    pub vectors_tx_cum: u64,
    /// Estimator loop count for update events.
    pub inner_loops: u32,
    /// Degree of the activated node, for communication accounting.
    pub degree: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TimedTrace {
    pub events: Vec<TimedEvent>,
    pub activation_counts: Vec<u64>,
    pub initial_value: f64,
    pub initial_subopt: f64,
    pub truncated: bool,
}

impl TimedTrace {
    pub fn updates(&self) -> impl Iterator<Item = &TimedEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Update)
    }

    pub fn update_count(&self) -> usize {
        self.updates().count()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sim_time,event,node_i,node_j,F_value,subopt,vectors_tx_cum")?;
        for e in &self.events {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                format_float(e.sim_time),
                match e.kind {
                    EventKind::Update => "update",
                    EventKind::Drop => "drop",
                },
                e.node_i,
                e.node_j.map(|j| j.to_string()).unwrap_or_default(),
                format_float(e.f_value),
                format_float(e.subopt),
                e.vectors_tx_cum,
            )?;
        }
        Ok(())
    }
}

/// Communication totals recomputed from the per-update formulas.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LedgerTotals {
    pub updates: u64,
    pub vectors_transmitted: u64,
    pub vectors_expected: u64,
    pub consistent: bool,
}

/// Checks the cumulative transmitted-vector counter of a timed trace
/// against the per-update cost formula (integer equality).
pub fn communication_ledger(trace: &TimedTrace, rule: SelectionRule) -> LedgerTotals {
    let mut expected = 0u64;
    let mut updates = 0u64;
    let mut last_cum = 0u64;
    for e in trace.updates() {
        expected += vectors_per_update(rule, e.degree) + 2 * u64::from(e.inner_loops);
        updates += 1;
        last_cum = e.vectors_tx_cum;
    }
    LedgerTotals {
        updates,
        vectors_transmitted: last_cum,
        vectors_expected: expected,
        consistent: last_cum == expected,
    }
}

/// Same check for an iteration-mode trace.
pub fn iteration_ledger<S: Scalar, O: SetwiseObjective<S>>(
    trace: &crate::engine::Trace,
    rule: SelectionRule,
    objective: &O,
) -> LedgerTotals {
    let mut expected = 0u64;
    let mut last_cum = 0u64;
    for r in &trace.rows {
        let degree = objective.set(r.activated_node).len();
        expected += vectors_per_update(rule, degree) + 2 * u64::from(r.inner_loops);
        last_cum = r.vectors_tx_cum;
    }
    LedgerTotals {
        updates: trace.rows.len() as u64,
        vectors_transmitted: last_cum,
        vectors_expected: expected,
        consistent: last_cum == expected,
    }
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum QueuedEvent {
    Activation { node: usize },
    GatherDone { update: usize },
    UpdateDone { update: usize },
}

struct Scheduled {
    time: f64,
    seq: u64,
    event: QueuedEvent,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .expect("finite times")
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeState {
    Idle,
    /// Reserved while waiting for peers (does not reserve them).
    Waiting,
    /// Participating in an exchange, gather, or final round.
    Busy { update: usize },
}

/// A pending pairwise update: the new coordinate value is captured when the
/// participants' gradients are read and applied atomically at completion.
struct PendingUpdate {
    initiator: usize,
    peer: usize,
    coord: usize,
    degree: usize,
    new_value: Option<Vec<f64>>,
    inner_loops: u32,
    vectors: u64,
    participants: Vec<usize>,
}

enum Waiter {
    /// Greedy initiator waiting for all neighbors to go idle.
    Gather { node: usize },
    /// Randomized initiator queued on one busy peer.
    Peer { node: usize, peer: usize, coord: usize },
}

/// Runs the asynchronous simulation of one algorithm over `objective`.
pub fn simulate<O: SetwiseObjective<f64>>(
    objective: &mut O,
    config: &SimConfig,
    activation: &ActivationProcess,
    reference: f64,
) -> Result<TimedTrace, EngineError> {
    let n = objective.num_sets();
    assert_eq!(activation.len(), n, "one activation rate per agent");
    let mut clocks: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(config.seed);
            r.set_stream(2 + i as u64);
            r
        })
        .collect();
    let mut selection = ChaCha8Rng::seed_from_u64(config.seed);
    selection.set_stream(1);
    let mut estimates: Vec<Option<f64>> = vec![None; objective.num_coords()];

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Scheduled>, seq: &mut u64, time: f64, event: QueuedEvent| {
        *seq += 1;
        heap.push(Scheduled {
            time,
            seq: *seq,
            event,
        });
    };
    for (i, clock) in clocks.iter_mut().enumerate() {
        let t = exponential(clock, activation.rates()[i]);
        push(&mut heap, &mut seq, t, QueuedEvent::Activation { node: i });
    }

    let mut state = vec![NodeState::Idle; n];
    let mut pending: Vec<PendingUpdate> = Vec::new();
    let mut waiters: Vec<Waiter> = Vec::new();
    let mut trace = TimedTrace {
        events: Vec::new(),
        activation_counts: vec![0; n],
        initial_value: objective.value(),
        initial_subopt: objective.value() - reference,
        truncated: false,
    };
    let mut vectors: u64 = 0;
    let mut processed = 0usize;

    while let Some(Scheduled { time, event, .. }) = heap.pop() {
        if time > config.horizon {
            break;
        }
        processed += 1;
        if processed > config.max_events {
            trace.truncated = true;
            break;
        }
        match event {
            QueuedEvent::Activation { node } => {
                trace.activation_counts[node] += 1;
                let next = time + exponential(&mut clocks[node], activation.rates()[node]);
                push(&mut heap, &mut seq, next, QueuedEvent::Activation { node });

                if config.tau == 0.0 {
                    // instantaneous updates: nothing ever blocks
                    let (coord, peer) =
                        choose_coordinate(objective, node, config, &mut selection, &estimates)?;
                    let (new_value, inner) =
                        capture_update(objective, coord, config, &mut estimates)?;
                    objective.set_coord(coord, &new_value)?;
                    vectors += vectors_per_update(config.rule, objective.set(node).len())
                        + 2 * u64::from(inner);
                    trace.events.push(update_event(
                        objective, reference, time, node, peer, coord, vectors, inner,
                    ));
                    continue;
                }

                if state[node] != NodeState::Idle {
                    trace.events.push(drop_event(objective, reference, time, node, vectors));
                    continue;
                }
                if config.rule.is_greedy() {
                    let adjacent_waiter = objective.set(node).iter().any(|&l| {
                        let (a, b) = objective.coord_owners(l);
                        let other = if a == node { b } else { a };
                        state[other] == NodeState::Waiting
                    });
                    if adjacent_waiter {
                        trace.events.push(drop_event(objective, reference, time, node, vectors));
                        continue;
                    }
                    state[node] = NodeState::Waiting;
                    waiters.push(Waiter::Gather { node });
                    start_eligible_waiters(
                        objective,
                        config,
                        &mut state,
                        &mut waiters,
                        &mut pending,
                        &mut heap,
                        &mut seq,
                        &mut push,
                        &mut estimates,
                        time,
                    )?;
                } else {
                    let idle_filter = (config.busy_policy == BusyPeerPolicy::IdleOnly)
                        .then(|| idle_subset(objective, node, &state));
                    if let Some(subset) = &idle_filter {
                        if subset.is_empty() {
                            trace.events.push(drop_event(objective, reference, time, node, vectors));
                            continue;
                        }
                    }
                    let (coord, peer) = choose_coordinate_in(
                        objective,
                        node,
                        idle_filter.as_deref(),
                        config,
                        &mut selection,
                        &estimates,
                    )?;
                    let peer = peer.expect("randomized rules always name a peer");
                    match state[peer] {
                        NodeState::Idle => {
                            start_exchange(
                                objective, config, &mut state, &mut pending, &mut heap, &mut seq,
                                &mut push, &mut estimates, time, node, peer, coord,
                            )?;
                        }
                        NodeState::Busy { .. } if config.busy_policy == BusyPeerPolicy::Queue => {
                            state[node] = NodeState::Waiting;
                            waiters.push(Waiter::Peer { node, peer, coord });
                        }
                        _ => {
                            // busy peer under the drop policy, or a waiting
                            // peer under either policy (mutual-wait guard)
                            trace.events.push(drop_event(objective, reference, time, node, vectors));
                        }
                    }
                }
            }
            QueuedEvent::GatherDone { update } => {
                // gradients are frozen: all participants blocked since the
                // gather began. Select the peer, release the others, run the
                // final round.
                let initiator = pending[update].initiator;
                let weights: Vec<f64> = match config.stepsize {
                    StepsizePolicy::Estimated => objective
                        .set(initiator)
                        .iter()
                        .map(|&l| estimates[l].unwrap_or(config.initial_estimate))
                        .collect(),
                    _ => objective
                        .set(initiator)
                        .iter()
                        .map(|&l| {
                            objective
                                .coord_lipschitz(l)
                                .ok_or(EngineError::UnknownLipschitz { coord: l })
                        })
                        .collect::<Result<_, _>>()?,
                };
                let coord = match config.rule {
                    SelectionRule::GaussSouthwell => select_gs(objective, initiator, config.tie_break),
                    _ => select_gsl(objective, initiator, &weights, config.tie_break),
                };
                let (a, b) = objective.coord_owners(coord);
                let peer = if a == initiator { b } else { a };
                let (new_value, inner) = capture_update(objective, coord, config, &mut estimates)?;
                let released: Vec<usize> = pending[update]
                    .participants
                    .iter()
                    .copied()
                    .filter(|&h| h != initiator && h != peer)
                    .collect();
                for h in released {
                    state[h] = NodeState::Idle;
                }
                pending[update].participants = vec![initiator, peer];
                pending[update].peer = peer;
                pending[update].coord = coord;
                pending[update].new_value = Some(new_value);
                pending[update].inner_loops = inner;
                // one send to the peer plus one extra exchange per estimator
                // trial
                pending[update].vectors += 1 + 2 * u64::from(inner);
                let done = time + config.tau * (1.0 + f64::from(inner));
                push(&mut heap, &mut seq, done, QueuedEvent::UpdateDone { update });
                start_eligible_waiters(
                    objective, config, &mut state, &mut waiters, &mut pending, &mut heap,
                    &mut seq, &mut push, &mut estimates, time,
                )?;
            }
            QueuedEvent::UpdateDone { update } => {
                let new_value = pending[update].new_value.take().expect("captured update");
                objective.set_coord(pending[update].coord, &new_value)?;
                vectors += pending[update].vectors;
                for &h in &pending[update].participants {
                    state[h] = NodeState::Idle;
                }
                trace.events.push(update_event(
                    objective,
                    reference,
                    time,
                    pending[update].initiator,
                    Some(pending[update].peer),
                    pending[update].coord,
                    vectors,
                    pending[update].inner_loops,
                ));
                // intentionally shadow the degree recorded by update_event:
                // communication cost follows the initiator's degree
                let deg = pending[update].degree;
                trace.events.last_mut().expect("just pushed").degree = deg;
                start_eligible_waiters(
                    objective, config, &mut state, &mut waiters, &mut pending, &mut heap,
                    &mut seq, &mut push, &mut estimates, time,
                )?;
            }
        }
    }
    Ok(trace)
}

fn idle_subset<O: SetwiseObjective<f64>>(
    objective: &O,
    node: usize,
    state: &[NodeState],
) -> Vec<usize> {
    objective
        .set(node)
        .iter()
        .copied()
        .filter(|&l| {
            let (a, b) = objective.coord_owners(l);
            let other = if a == node { b } else { a };
            state[other] == NodeState::Idle
        })
        .collect()
}

/// Picks `(coordinate, peer)` for a randomized-rule activation, or for any
/// rule when `tau = 0`.
fn choose_coordinate<O: SetwiseObjective<f64>>(
    objective: &O,
    node: usize,
    config: &SimConfig,
    selection: &mut ChaCha8Rng,
    estimates: &[Option<f64>],
) -> Result<(usize, Option<usize>), EngineError> {
    choose_coordinate_in(objective, node, None, config, selection, estimates)
}

/// Same, restricted to an explicit candidate subset when given.
fn choose_coordinate_in<O: SetwiseObjective<f64>>(
    objective: &O,
    node: usize,
    subset: Option<&[usize]>,
    config: &SimConfig,
    selection: &mut ChaCha8Rng,
    estimates: &[Option<f64>],
) -> Result<(usize, Option<usize>), EngineError> {
    let set = subset.unwrap_or_else(|| objective.set(node));
    if set.is_empty() {
        return Err(EngineError::EmptySet { node });
    }
    let weights = |needed: bool| -> Result<Vec<f64>, EngineError> {
        if !needed {
            return Ok(Vec::new());
        }
        match config.stepsize {
            StepsizePolicy::Estimated => Ok(set
                .iter()
                .map(|&l| estimates[l].unwrap_or(config.initial_estimate))
                .collect()),
            _ => set
                .iter()
                .map(|&l| {
                    objective
                        .coord_lipschitz(l)
                        .ok_or(EngineError::UnknownLipschitz { coord: l })
                })
                .collect(),
        }
    };
    let coord = match config.rule {
        SelectionRule::Uniform => crate::engine::select_uniform::<f64>(set, selection),
        SelectionRule::Lipschitz => select_lipschitz(set, &weights(true)?, selection),
        SelectionRule::GaussSouthwell => select_gs(objective, node, config.tie_break),
        SelectionRule::GaussSouthwellLipschitz => {
            select_gsl(objective, node, &weights(true)?, config.tie_break)
        }
    };
    let (a, b) = objective.coord_owners(coord);
    let peer = if a == node { b } else { a };
    Ok((coord, Some(peer)))
}

/// Computes the post-update coordinate value (and estimator loop count)
/// without leaving the objective mutated.
fn capture_update<O: SetwiseObjective<f64>>(
    objective: &mut O,
    coord: usize,
    config: &SimConfig,
    estimates: &mut [Option<f64>],
) -> Result<(Vec<f64>, u32), EngineError> {
    match config.stepsize {
        StepsizePolicy::GlobalSmoothness | StepsizePolicy::PerCoordinate => {
            let eta = match config.stepsize {
                StepsizePolicy::GlobalSmoothness => 1.0 / objective.global_smoothness(),
                _ => {
                    1.0 / objective
                        .coord_lipschitz(coord)
                        .ok_or(EngineError::UnknownLipschitz { coord })?
                }
            };
            let g = objective.coord_gradient(coord);
            let new = objective
                .coord(coord)
                .iter()
                .zip(g.iter())
                .map(|(&x, &gi)| x - eta * gi)
                .collect();
            Ok((new, 0))
        }
        StepsizePolicy::Estimated => {
            let origin = objective.coord(coord).to_vec();
            let start = estimates[coord].unwrap_or(config.initial_estimate);
            let outcome = estimate_lipschitz_step(objective, coord, start)?;
            let new = objective.coord(coord).to_vec();
            objective.set_coord(coord, &origin)?;
            estimates[coord] = Some(outcome.estimate);
            Ok((new, outcome.inner_loops))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn start_exchange<O: SetwiseObjective<f64>>(
    objective: &mut O,
    config: &SimConfig,
    state: &mut [NodeState],
    pending: &mut Vec<PendingUpdate>,
    heap: &mut BinaryHeap<Scheduled>,
    seq: &mut u64,
    push: &mut impl FnMut(&mut BinaryHeap<Scheduled>, &mut u64, f64, QueuedEvent),
    estimates: &mut [Option<f64>],
    time: f64,
    node: usize,
    peer: usize,
    coord: usize,
) -> Result<(), EngineError> {
    let (new_value, inner) = capture_update(objective, coord, config, estimates)?;
    let update = pending.len();
    pending.push(PendingUpdate {
        initiator: node,
        peer,
        coord,
        degree: objective.set(node).len(),
        new_value: Some(new_value),
        inner_loops: inner,
        vectors: 2 + 2 * u64::from(inner),
        participants: vec![node, peer],
    });
    state[node] = NodeState::Busy { update };
    state[peer] = NodeState::Busy { update };
    let done = time + config.tau * (1.0 + f64::from(inner));
    push(heap, seq, done, QueuedEvent::UpdateDone { update });
    Ok(())
}

/// Starts every waiter whose wait condition now holds, in reservation
/// (FIFO) order.
#[allow(clippy::too_many_arguments)]
fn start_eligible_waiters<O: SetwiseObjective<f64>>(
    objective: &mut O,
    config: &SimConfig,
    state: &mut [NodeState],
    waiters: &mut Vec<Waiter>,
    pending: &mut Vec<PendingUpdate>,
    heap: &mut BinaryHeap<Scheduled>,
    seq: &mut u64,
    push: &mut impl FnMut(&mut BinaryHeap<Scheduled>, &mut u64, f64, QueuedEvent),
    estimates: &mut [Option<f64>],
    time: f64,
) -> Result<(), EngineError> {
    let mut idx = 0;
    while idx < waiters.len() {
        let ready = match &waiters[idx] {
            Waiter::Gather { node } => {
                let node = *node;
                let all_idle = objective.set(node).iter().all(|&l| {
                    let (a, b) = objective.coord_owners(l);
                    let other = if a == node { b } else { a };
                    state[other] == NodeState::Idle
                });
                if all_idle {
                    let update = pending.len();
                    let mut participants = vec![node];
                    for &l in objective.set(node) {
                        let (a, b) = objective.coord_owners(l);
                        participants.push(if a == node { b } else { a });
                    }
                    let degree = objective.set(node).len();
                    for &h in &participants {
                        state[h] = NodeState::Busy { update };
                    }
                    pending.push(PendingUpdate {
                        initiator: node,
                        peer: node,
                        coord: usize::MAX,
                        degree,
                        new_value: None,
                        inner_loops: 0,
                        vectors: degree as u64,
                        participants,
                    });
                    let gather = if config.sequential_gather {
                        config.tau * degree as f64
                    } else {
                        config.tau
                    };
                    push(heap, seq, time + gather, QueuedEvent::GatherDone { update });
                    true
                } else {
                    false
                }
            }
            Waiter::Peer { node, peer, coord } => {
                let (node, peer, coord) = (*node, *peer, *coord);
                if state[peer] == NodeState::Idle {
                    state[node] = NodeState::Idle;
                    start_exchange(
                        objective, config, state, pending, heap, seq, push, estimates, time,
                        node, peer, coord,
                    )?;
                    true
                } else {
                    false
                }
            }
        };
        if ready {
            waiters.remove(idx);
        } else {
            idx += 1;
        }
    }
    Ok(())
}

fn update_event<O: SetwiseObjective<f64>>(
    objective: &O,
    reference: f64,
    time: f64,
    node: usize,
    peer: Option<usize>,
    coord: usize,
    vectors: u64,
    inner: u32,
) -> TimedEvent {
    let _ = coord;
    let f = objective.value();
    TimedEvent {
        sim_time: time,
        kind: EventKind::Update,
        node_i: node,
        node_j: peer,
        f_value: f,
        subopt: f - reference,
        vectors_tx_cum: vectors,
        inner_loops: inner,
        degree: objective.set(node).len(),
    }
}

fn drop_event<O: SetwiseObjective<f64>>(
    objective: &O,
    reference: f64,
    time: f64,
    node: usize,
    vectors: u64,
) -> TimedEvent {
    let f = objective.value();
    TimedEvent {
        sim_time: time,
        kind: EventKind::Drop,
        node_i: node,
        node_j: None,
        f_value: f,
        subopt: f - reference,
        vectors_tx_cum: vectors,
        inner_loops: 0,
        degree: objective.set(node).len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Algorithm;
    use crate::graph::Topology;
    use crate::objective::fixtures::two_node;
    use crate::objective::DualObjective;
    use crate::problems::Quadratic;

    fn sim_config(algo: Algorithm, seed: u64, tau: f64, horizon: f64) -> SimConfig {
        SimConfig::new(algo.rule(), algo.stepsize(), seed, tau, horizon)
    }

    #[test]
    fn zipf_rates_mean_and_skew() {
        let proc = ActivationProcess::zipf_skewed(32, 10.0, 7);
        assert!((proc.mean_rate() - 10.0).abs() < 1e-9);
        // stragglers: some node well below the mean, most above
        let below: Vec<f64> = proc.rates().iter().copied().filter(|&r| r < 10.0).collect();
        let above = proc.rates().iter().filter(|&&r| r > 10.0).count();
        assert!(above > 16, "most nodes faster than the mean");
        assert!(below.iter().cloned().fold(f64::INFINITY, f64::min) < 7.0);
    }

    #[test]
    fn activation_counts_match_poisson_rates() {
        let mut obj = two_node();
        let proc = ActivationProcess::equal(2, 3.0);
        let config = sim_config(Algorithm::Su, 11, 0.0, 500.0);
        let trace = simulate(&mut obj, &config, &proc, -1.0).unwrap();
        for i in 0..2 {
            let expected = 3.0_f64 * 500.0;
            let sigma = expected.sqrt();
            assert!(
                (trace.activation_counts[i] as f64 - expected).abs() <= 3.0 * sigma,
                "node {i}: {}",
                trace.activation_counts[i]
            );
        }
    }

    #[test]
    fn tau_zero_never_drops() {
        let mut obj = two_node();
        let proc = ActivationProcess::equal(2, 1.0);
        let config = sim_config(Algorithm::Sgs, 3, 0.0, 50.0);
        let trace = simulate(&mut obj, &config, &proc, -1.0).unwrap();
        assert!(trace.events.iter().all(|e| e.kind == EventKind::Update));
        assert!(trace.update_count() > 50);
        let last = trace.events.last().unwrap();
        assert!(last.subopt.abs() < 1e-12);
    }

    #[test]
    fn renewal_oracle_for_single_pair() {
        // two nodes at rate 1, tau = 1: idle Exp(2) then blocked 1; the
        // completed-update count follows that renewal process
        let horizon = 400.0;
        let mut obj = two_node();
        let proc = ActivationProcess::equal(2, 1.0);
        let config = sim_config(Algorithm::Su, 21, 1.0, horizon);
        let trace = simulate(&mut obj, &config, &proc, -1.0).unwrap();
        let observed = trace.update_count() as f64;

        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let reps = 400;
        let mut counts = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut t = 0.0;
            let mut c = 0u64;
            loop {
                t += exponential(&mut rng, 2.0);
                if t > horizon {
                    break;
                }
                // the update completes at t + 1; it counts if it finishes
                // inside the horizon and blocks both nodes until then
                t += 1.0;
                if t > horizon {
                    break;
                }
                c += 1;
            }
            counts.push(c as f64);
        }
        let mean: f64 = counts.iter().sum::<f64>() / reps as f64;
        let var: f64 = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / reps as f64;
        assert!(
            (observed - mean).abs() <= 3.0 * var.sqrt(),
            "observed {observed}, renewal mean {mean}, sd {}",
            var.sqrt()
        );
    }

    #[test]
    fn busy_nodes_drop_and_blocking_slows_updates() {
        let mut obj = two_node();
        let proc = ActivationProcess::equal(2, 5.0);
        let config = sim_config(Algorithm::Su, 5, 1.0, 100.0);
        let trace = simulate(&mut obj, &config, &proc, -1.0).unwrap();
        let drops = trace.events.iter().filter(|e| e.kind == EventKind::Drop).count();
        assert!(drops > 0, "high rate with blocking must drop activations");
        // updates take 1 time unit and block both nodes: at most ~horizon
        assert!(trace.update_count() as f64 <= 101.0);
    }

    #[test]
    fn deterministic_trace_bytes() {
        let run = || {
            let mut obj = two_node();
            let proc = ActivationProcess::zipf_skewed(2, 4.0, 9);
            let config = sim_config(Algorithm::Sgs, 17, 0.5, 30.0);
            let trace = simulate(&mut obj, &config, &proc, -1.0).unwrap();
            let mut buf = Vec::new();
            trace.write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn ledger_matches_table_formulas() {
        let topo = Topology::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let oracles = (0..4)
            .map(|i| Quadratic::scalar(1.0 + i as f64, i as f64 - 1.5).unwrap())
            .collect();
        let mut obj = DualObjective::new(topo, oracles).unwrap();
        let proc = ActivationProcess::equal(4, 2.0);
        let config = sim_config(Algorithm::Sgs, 13, 0.4, 60.0);
        let trace = simulate(&mut obj, &config, &proc, 0.0).unwrap();
        let ledger = communication_ledger(&trace, SelectionRule::GaussSouthwell);
        assert!(ledger.updates > 20);
        assert!(ledger.consistent, "{ledger:?}");
    }

    #[test]
    fn greedy_waits_preserve_single_membership() {
        // star: center updates conflict with every leaf; run long enough to
        // exercise waiting and verify the final state is consistent
        let topo = Topology::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let oracles = (0..4)
            .map(|i| Quadratic::scalar(2.0, i as f64).unwrap())
            .collect();
        let mut obj = DualObjective::new(topo, oracles).unwrap();
        let proc = ActivationProcess::equal(4, 3.0);
        let config = sim_config(Algorithm::Sgs, 29, 0.7, 80.0);
        let trace = simulate(&mut obj, &config, &proc, -100.0).unwrap();
        assert!(trace.update_count() > 10);
        // monotone descent via atomic updates at completion
        let mut prev = f64::INFINITY;
        for e in trace.updates() {
            assert!(e.f_value <= prev + 1e-9);
            prev = e.f_value;
        }
    }
}
