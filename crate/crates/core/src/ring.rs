//! Discrete-time Bernoulli ring model and Monte Carlo harness.
//!
//! One time step routes the packets already in the network, then
//! inserts new arrivals, and the state is measured after the arrivals.
//! A node's packet "in the ring" (its hot potato) is the one about to
//! move; everything else at the node is in queue. The model is
//! non-blocking: when a hot potato reaches its destination it is
//! removed immediately and a queued packet at that node may be
//! promoted on the same step.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::{StreamRng, SALT_ARRIVAL, SALT_DEST, SALT_GEO};
use crate::stats::{mean_and_se, Kahan};
use crate::Result;

/// Arrival process of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arrival {
    /// A packet arrives at each node with probability `p` per step;
    /// its destination is uniform over the `L` nodes downstream.
    Bernoulli { p: f64 },
    /// Arrival probability `lambda / N` per node per step; a traveling
    /// packet departs with probability `mu / N` on each step it moves.
    GeometricRing { lambda: f64, mu: f64 },
}

/// Greedy routing protocols. All of them emit a packet from every
/// non-empty node on every step; they differ in which packet goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    /// Greedy Hot Potato: in-ring packets beat queued ones.
    Ghp,
    /// First In, First Out by arrival time at the current node.
    Fifo,
    /// Exogenous Packets First: a just-inserted packet beats internal
    /// ones.
    Epf,
    /// Shortest In System: most recent insertion first.
    Sis,
    /// Closest To Origin: least distance traveled first.
    Cto,
    /// Farthest To Go: greatest remaining distance first; an exogenous
    /// packet beats an internal one at equal distance.
    Ftg,
    /// Longest In System: earliest insertion first.
    Lis,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Ghp,
        Protocol::Fifo,
        Protocol::Epf,
        Protocol::Sis,
        Protocol::Cto,
        Protocol::Ftg,
        Protocol::Lis,
    ];
}

/// Network parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    /// Node count `N >= 1`.
    pub nodes: usize,
    /// Maximum path length `L >= 1`; `L = N - 1` is the standard ring.
    pub max_path: usize,
    pub arrival: Arrival,
    pub protocol: Protocol,
}

impl RingSpec {
    /// Standard Bernoulli ring: destinations uniform over the other
    /// `N - 1` nodes.
    pub fn standard(nodes: usize, p: f64, protocol: Protocol) -> Result<Self> {
        Self::new(nodes, nodes.saturating_sub(1).max(1), Arrival::Bernoulli { p }, protocol)
    }

    /// Nonstandard Bernoulli ring with maximum path length `l`.
    pub fn nonstandard(nodes: usize, l: usize, p: f64, protocol: Protocol) -> Result<Self> {
        Self::new(nodes, l, Arrival::Bernoulli { p }, protocol)
    }

    pub fn new(nodes: usize, max_path: usize, arrival: Arrival, protocol: Protocol) -> Result<Self> {
        if nodes < 1 {
            return Err(Error::InvalidSpec("need at least one node".into()));
        }
        if max_path < 1 {
            return Err(Error::InvalidSpec("max path length must be >= 1".into()));
        }
        match arrival {
            Arrival::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidSpec(format!("arrival probability {p} outside [0, 1]")));
                }
            }
            Arrival::GeometricRing { lambda, mu } => {
                let n = nodes as f64;
                if !(lambda / n > 0.0 && lambda / n <= 1.0) {
                    return Err(Error::InvalidSpec(format!("lambda/N = {} outside (0, 1]", lambda / n)));
                }
                if !(mu / n > 0.0 && mu / n <= 1.0) {
                    return Err(Error::InvalidSpec(format!("mu/N = {} outside (0, 1]", mu / n)));
                }
                if protocol == Protocol::Ftg {
                    return Err(Error::InvalidSpec(
                        "FTG needs remaining distances; geometric packets have none".into(),
                    ));
                }
            }
        }
        Ok(RingSpec { nodes, max_path, arrival, protocol })
    }

    /// Nominal load `r`: `(L + 1) p / 2` for Bernoulli arrivals (equal
    /// to `N p / 2` on a standard ring). For the geometric ring this
    /// returns `lambda / mu` instead.
    pub fn nominal_load(&self) -> f64 {
        match self.arrival {
            Arrival::Bernoulli { p } => (self.max_path as f64 + 1.0) / 2.0 * p,
            Arrival::GeometricRing { lambda, mu } => lambda / mu,
        }
    }
}

/// Instability threshold of the standard ring: the system is unstable
/// for `p > 2 / N`.
pub fn critical_rate(nodes: usize) -> Result<f64> {
    if nodes < 2 {
        return Err(Error::InvalidSpec("critical rate needs N >= 2".into()));
    }
    Ok(2.0 / nodes as f64)
}

/// Split an odd bidirectional ring into its clockwise and
/// counterclockwise halves: two nonstandard rings with `L = (N - 1) / 2`
/// at rate `p / 2` each. Summing their expected queue lengths gives the
/// bidirectional ring's by linearity of expectation.
pub fn decompose_bidirectional(nodes: usize, p: f64, protocol: Protocol) -> Result<(RingSpec, RingSpec)> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!(
            "bidirectional decomposition needs odd N >= 3 (got {nodes}); shortest paths must be unique"
        )));
    }
    let half = RingSpec::nonstandard(nodes, (nodes - 1) / 2, p / 2.0, protocol)?;
    Ok((half, half))
}

/// How far a packet still has to travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Destination fixed at insertion; `remaining` counts edges left
    /// from the packet's current node.
    Fixed { remaining: u32 },
    /// Geometric ring packet: departs with probability `mu / N` on each
    /// step it travels.
    Geometric,
}

/// A packet in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub origin: u32,
    pub route: Route,
    /// Step on which the packet was inserted.
    pub inserted_at: u64,
    /// Step on which the packet entered its current node.
    pub arrived_at: u64,
    /// Edges traveled so far.
    pub moved: u32,
    /// Global insertion sequence number; simultaneous arrivals are
    /// numbered by ascending node index.
    pub seq: u64,
}

impl Packet {
    fn is_exogenous(&self) -> bool {
        self.moved == 0
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Node {
    /// The hot potato: the packet about to move.
    ring: Option<Packet>,
    queue: VecDeque<Packet>,
}

impl Node {
    fn count(&self) -> usize {
        self.queue.len() + usize::from(self.ring.is_some())
    }
}

/// Full state of a ring at a measurement point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingState {
    pub spec: RingSpec,
    nodes: Vec<Node>,
    pub t: u64,
    pub insertions: u64,
    pub departures: u64,
    next_seq: u64,
    delay_sum: u64,
    delay_count: u64,
}

/// Ground state: all queues and slots empty, `t = 0`.
pub fn new_ring(spec: RingSpec) -> RingState {
    RingState {
        nodes: vec![Node::default(); spec.nodes],
        spec,
        t: 0,
        insertions: 0,
        departures: 0,
        next_seq: 0,
        delay_sum: 0,
        delay_count: 0,
    }
}

impl RingState {
    /// Queue length at `node` (the hot potato is not counted).
    pub fn queue_len(&self, node: usize) -> usize {
        self.nodes[node].queue.len()
    }

    /// Total packets at `node`, hot potato included.
    pub fn packets_at(&self, node: usize) -> usize {
        self.nodes[node].count()
    }

    /// The packet in the ring at `node`, if any.
    pub fn hot_potato(&self, node: usize) -> Option<&Packet> {
        self.nodes[node].ring.as_ref()
    }

    /// Queued packets at `node` in insertion order.
    pub fn queued(&self, node: usize) -> impl Iterator<Item = &Packet> {
        self.nodes[node].queue.iter()
    }

    /// Packets currently in the system.
    pub fn total_packets(&self) -> usize {
        self.nodes.iter().map(Node::count).sum()
    }

    /// Insert a queued packet at its origin with a fixed destination.
    /// Used to seed constructed states for drift experiments; the
    /// resulting configurations are reachable under GHP.
    pub fn push_queued(&mut self, origin: usize, remaining: u32) {
        assert!(remaining >= 1 && remaining as usize <= self.spec.max_path);
        let pkt = Packet {
            origin: origin as u32,
            route: Route::Fixed { remaining },
            inserted_at: self.t,
            arrived_at: self.t,
            moved: 0,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.insertions += 1;
        let node = &mut self.nodes[origin];
        if node.ring.is_none() && node.queue.is_empty() && self.spec.protocol == Protocol::Ghp {
            node.ring = Some(pkt);
        } else {
            node.queue.push_back(pkt);
        }
    }

    /// Place a hot potato that has already traveled `moved` edges from
    /// `origin` and has `remaining` edges to go. Panics if the slot at
    /// the packet's current node is taken.
    pub fn place_hot_potato(&mut self, origin: usize, moved: u32, remaining: u32) {
        assert!(remaining >= 1);
        assert!((moved + remaining) as usize <= self.spec.max_path);
        let at = (origin + moved as usize) % self.spec.nodes;
        let node = &mut self.nodes[at];
        assert!(node.ring.is_none(), "slot at node {at} already holds a hot potato");
        node.ring = Some(Packet {
            origin: origin as u32,
            route: Route::Fixed { remaining },
            inserted_at: self.t,
            arrived_at: self.t,
            moved,
            seq: self.next_seq,
        });
        self.next_seq += 1;
        self.insertions += 1;
    }

    /// All packets in the system, with their current node.
    pub fn packets(&self) -> impl Iterator<Item = (usize, &Packet)> {
        self.nodes.iter().enumerate().flat_map(|(i, n)| {
            n.ring.iter().map(move |p| (i, p)).chain(n.queue.iter().map(move |p| (i, p)))
        })
    }
}

/// Priority key: the packet with the smallest key moves. Lower tuple
/// components win; ties fall back to insertion order (or reverse
/// insertion order for SIS, which prefers the newest packet).
fn priority_key(protocol: Protocol, pkt: &Packet, in_ring: bool) -> (u64, u64, u64) {
    let exo = u64::from(!pkt.is_exogenous());
    match protocol {
        Protocol::Ghp => (u64::from(!in_ring), pkt.seq, 0),
        Protocol::Fifo => (pkt.arrived_at, pkt.seq, 0),
        Protocol::Epf => (exo, pkt.arrived_at, pkt.seq),
        Protocol::Sis => (u64::MAX - pkt.inserted_at, u64::MAX - pkt.seq, 0),
        Protocol::Cto => (pkt.moved as u64, pkt.seq, 0),
        Protocol::Ftg => {
            let remaining = match pkt.route {
                Route::Fixed { remaining } => remaining as u64,
                Route::Geometric => unreachable!("FTG rejected for geometric rings"),
            };
            (u64::MAX - remaining, exo, pkt.seq)
        }
        Protocol::Lis => (pkt.inserted_at, pkt.seq, 0),
    }
}

/// Advance the state by one time step: route, then insert arrivals.
/// Deterministic given `(rng, state.t)`.
pub fn step(state: &mut RingState, rng: &StreamRng) {
    let n = state.spec.nodes;
    let l = state.spec.max_path as u32;
    let protocol = state.spec.protocol;
    let t = state.t;

    // Selection: each non-empty node picks the packet that moves now.
    // An unselected in-ring packet is demoted to the queue (never
    // happens under GHP).
    let mut moving: Vec<Option<Packet>> = Vec::with_capacity(n);
    for node in state.nodes.iter_mut() {
        if node.ring.is_none() && node.queue.is_empty() {
            moving.push(None);
            continue;
        }
        debug_assert!(
            protocol != Protocol::Ghp || node.ring.is_some(),
            "GHP invariant: a non-empty node always has a hot potato"
        );
        if protocol == Protocol::Ghp {
            // In-ring packets always win; no queue scan needed.
            moving.push(node.ring.take());
            continue;
        }
        let ring_key = node.ring.as_ref().map(|p| priority_key(protocol, p, true));
        let queue_best = node
            .queue
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| priority_key(protocol, p, false))
            .map(|(i, p)| (i, priority_key(protocol, p, false)));
        let take_ring = match (ring_key, &queue_best) {
            (Some(rk), Some((_, qk))) => rk <= *qk,
            (Some(_), None) => true,
            (None, _) => false,
        };
        let selected = if take_ring {
            node.ring.take().unwrap()
        } else {
            let (idx, _) = queue_best.unwrap();
            node.queue.remove(idx).unwrap()
        };
        // Vacate the slot: a leftover in-ring packet waits in queue.
        if let Some(displaced) = node.ring.take() {
            node.queue.push_back(displaced);
        }
        moving.push(Some(selected));
    }

    // Movement: all selected packets cross one edge simultaneously.
    for (i, slot) in moving.into_iter().enumerate() {
        let Some(mut pkt) = slot else { continue };
        let dest = (i + 1) % n;
        pkt.moved += 1;
        pkt.arrived_at = t + 1;
        let departs = match pkt.route {
            Route::Fixed { remaining } => {
                debug_assert!(remaining >= 1);
                pkt.route = Route::Fixed { remaining: remaining - 1 };
                remaining == 1
            }
            Route::Geometric => {
                let Arrival::GeometricRing { mu, .. } = state.spec.arrival else { unreachable!() };
                rng.unit(dest as u32, t, SALT_GEO) < mu / n as f64
            }
        };
        if departs {
            state.departures += 1;
            state.delay_sum += t + 1 - pkt.inserted_at;
            state.delay_count += 1;
        } else {
            debug_assert!(state.nodes[dest].ring.is_none());
            state.nodes[dest].ring = Some(pkt);
        }
    }

    // GHP promotion: a freed slot takes the head of the local queue on
    // the same step; a promoted packet never returns to queue, so
    // queued packets always sit at their origin.
    if protocol == Protocol::Ghp {
        for (i, node) in state.nodes.iter_mut().enumerate() {
            if node.ring.is_none() && !node.queue.is_empty() {
                node.ring = node.queue.pop_front();
                let promoted = node.ring.as_ref().unwrap();
                debug_assert_eq!(promoted.moved, 0, "GHP promoted a traveled packet");
                debug_assert_eq!(promoted.origin as usize, i, "GHP queued packet away from origin");
            }
        }
    }

    // Arrivals, independently per node, numbered by ascending node
    // index.
    let (p_arr, dest_draw) = match state.spec.arrival {
        Arrival::Bernoulli { p } => (p, true),
        Arrival::GeometricRing { lambda, .. } => (lambda / n as f64, false),
    };
    for i in 0..n {
        if rng.unit(i as u32, t, SALT_ARRIVAL) >= p_arr {
            continue;
        }
        let route = if dest_draw {
            Route::Fixed { remaining: rng.uniform_1_to(i as u32, t, SALT_DEST, l) }
        } else {
            Route::Geometric
        };
        let pkt = Packet {
            origin: i as u32,
            route,
            inserted_at: t + 1,
            arrived_at: t + 1,
            moved: 0,
            seq: state.next_seq,
        };
        state.next_seq += 1;
        state.insertions += 1;
        let node = &mut state.nodes[i];
        if protocol == Protocol::Ghp && node.ring.is_none() {
            debug_assert!(node.queue.is_empty());
            node.ring = Some(pkt);
        } else {
            node.queue.push_back(pkt);
        }
    }

    state.t += 1;
    debug_assert_eq!(
        state.insertions - state.departures,
        state.total_packets() as u64,
        "conservation: insertions - departures must equal packets present"
    );
}

/// Measured queue length at a node: packets present minus the one
/// about to move.
pub fn measured_queue_len(state: &RingState, node: usize) -> usize {
    state.packets_at(node).saturating_sub(1)
}

/// Summary statistics of a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStats {
    pub spec: RingSpec,
    pub steps: u64,
    pub warmup: u64,
    pub replications: u32,
    pub seed: u64,
    pub nominal_load: f64,
    /// True when the nominal load is below one.
    pub stable: bool,
    pub mean_queue_per_node: f64,
    pub se_queue: f64,
    pub mean_packets_per_node: f64,
    pub se_packets: f64,
    pub idle_fraction: f64,
    pub se_idle: f64,
    pub mean_delay: f64,
    pub se_delay: f64,
    pub insertions: u64,
    pub departures: u64,
}

impl SimStats {
    /// CSV header matching [`SimStats::to_csv_row`].
    pub fn csv_header() -> &'static str {
        "nodes,max_path,protocol,steps,warmup,replications,seed,nominal_load,\
         mean_queue_per_node,se_queue,mean_packets_per_node,se_packets,\
         idle_fraction,se_idle,mean_delay,se_delay"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:?},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.spec.nodes,
            self.spec.max_path,
            self.spec.protocol,
            self.steps,
            self.warmup,
            self.replications,
            self.seed,
            self.nominal_load,
            self.mean_queue_per_node,
            self.se_queue,
            self.mean_packets_per_node,
            self.se_packets,
            self.idle_fraction,
            self.se_idle,
            self.mean_delay,
            self.se_delay
        )
    }
}

/// Options for [`simulate`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimOptions {
    pub steps: u64,
    pub replications: u32,
    pub seed: u64,
    /// Steps discarded before averaging starts.
    pub warmup: u64,
    /// Worker threads for replications. Results are identical for any
    /// value: streams are keyed by replication and aggregation runs in
    /// replication order.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl SimOptions {
    pub fn new(steps: u64, replications: u32, seed: u64) -> Self {
        SimOptions { steps, replications, seed, warmup: 1000.min(steps / 10), workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Clone)]
struct RepResult {
    queue_mean: f64,
    packet_mean: f64,
    idle_mean: f64,
    delay_mean: f64,
    insertions: u64,
    departures: u64,
}

fn run_replication(spec: RingSpec, options: SimOptions, rep: u32) -> RepResult {
    let n = spec.nodes as f64;
    let rng = StreamRng::new(options.seed, rep as u64);
    let mut state = new_ring(spec);
    let mut queue_sum = Kahan::default();
    let mut packet_sum = Kahan::default();
    let mut idle_sum = 0u64;
    let mut measured = 0u64;
    for _ in 0..options.steps {
        step(&mut state, &rng);
        if state.t <= options.warmup {
            continue;
        }
        measured += 1;
        let mut q = 0usize;
        let mut tot = 0usize;
        for i in 0..spec.nodes {
            let c = state.packets_at(i);
            tot += c;
            q += c.saturating_sub(1);
            idle_sum += u64::from(c == 0);
        }
        queue_sum.add(q as f64);
        packet_sum.add(tot as f64);
    }
    let steps_f = measured as f64;
    RepResult {
        queue_mean: queue_sum.sum() / steps_f / n,
        packet_mean: packet_sum.sum() / steps_f / n,
        idle_mean: idle_sum as f64 / steps_f / n,
        delay_mean: if state.delay_count > 0 {
            state.delay_sum as f64 / state.delay_count as f64
        } else {
            0.0
        },
        insertions: state.insertions,
        departures: state.departures,
    }
}

/// Run `replications` independent runs of `steps` steps each and
/// aggregate time averages. Identical `(spec, options)` produce
/// bit-identical results regardless of thread count or call order.
pub fn simulate(spec: RingSpec, options: SimOptions) -> Result<SimStats> {
    if options.steps == 0 || options.replications == 0 {
        return Err(Error::InvalidSpec("steps and replications must both be nonzero".into()));
    }
    let reps: Vec<u32> = (0..options.replications).collect();
    let per_rep: Vec<RepResult> = if options.workers <= 1 {
        reps.iter().map(|&rep| run_replication(spec, options, rep)).collect()
    } else {
        let workers = options.workers.min(reps.len());
        let chunk = reps.len().div_ceil(workers);
        let mut slots: Vec<Option<RepResult>> = vec![None; reps.len()];
        std::thread::scope(|scope| {
            let handles: Vec<_> = reps
                .chunks(chunk)
                .map(|chunk_reps| {
                    scope.spawn(move || {
                        chunk_reps
                            .iter()
                            .map(|&rep| (rep, run_replication(spec, options, rep)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for handle in handles {
                for (rep, result) in handle.join().expect("replication worker panicked") {
                    slots[rep as usize] = Some(result);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("all replications filled")).collect()
    };
    let mut queue_means = Vec::new();
    let mut packet_means = Vec::new();
    let mut idle_means = Vec::new();
    let mut delay_means = Vec::new();
    let mut insertions = 0u64;
    let mut departures = 0u64;
    for r in per_rep {
        queue_means.push(r.queue_mean);
        packet_means.push(r.packet_mean);
        idle_means.push(r.idle_mean);
        delay_means.push(r.delay_mean);
        insertions += r.insertions;
        departures += r.departures;
    }
    let (mean_queue, se_queue) = mean_and_se(&queue_means);
    let (mean_packets, se_packets) = mean_and_se(&packet_means);
    let (idle, se_idle) = mean_and_se(&idle_means);
    let (delay, se_delay) = mean_and_se(&delay_means);
    let r = spec.nominal_load();
    Ok(SimStats {
        spec,
        steps: options.steps,
        warmup: options.warmup,
        replications: options.replications,
        seed: options.seed,
        nominal_load: r,
        stable: r < 1.0,
        mean_queue_per_node: mean_queue,
        se_queue,
        mean_packets_per_node: mean_packets,
        se_packets,
        idle_fraction: idle,
        se_idle,
        mean_delay: delay,
        se_delay,
        insertions,
        departures,
    })
}

/// Histogram of per-node packet counts, thinned to reduce
/// autocorrelation: one node is sampled every `thin` steps, rotating
/// through the ring. Counts above `max_n` land in the last bin.
pub fn marginal_histogram(
    spec: RingSpec,
    options: SimOptions,
    thin: u64,
    max_n: usize,
) -> Result<Vec<u64>> {
    if options.steps == 0 || options.replications == 0 {
        return Err(Error::InvalidSpec("steps and replications must both be nonzero".into()));
    }
    let mut hist = vec![0u64; max_n + 1];
    for rep in 0..options.replications {
        let rng = StreamRng::new(options.seed, rep as u64);
        let mut state = new_ring(spec);
        let mut sample_idx = 0u64;
        for _ in 0..options.steps {
            step(&mut state, &rng);
            if state.t <= options.warmup || !state.t.is_multiple_of(thin) {
                continue;
            }
            let node = (sample_idx % spec.nodes as u64) as usize;
            sample_idx += 1;
            let c = state.packets_at(node).min(max_n);
            hist[c] += 1;
        }
    }
    Ok(hist)
}

/// Per-step total packet counts of a single run, for growth-rate fits.
pub fn total_packet_trace(spec: RingSpec, steps: u64, seed: u64) -> Vec<u64> {
    let rng = StreamRng::new(seed, 0);
    let mut state = new_ring(spec);
    let mut trace = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        step(&mut state, &rng);
        trace.push(state.total_packets() as u64);
    }
    trace
}

/// Queue-length vectors after every step for each protocol, all runs
/// driven by the same arrival stream (same seed, same draws). Used to
/// check that EPF, SIS, CTO, and FTG make identical decisions on
/// `L = 2` rings.
pub fn queue_trajectories(
    base: RingSpec,
    protocols: &[Protocol],
    steps: u64,
    seed: u64,
) -> Result<Vec<Vec<Vec<u32>>>> {
    let mut out = Vec::with_capacity(protocols.len());
    for &protocol in protocols {
        let spec = RingSpec { protocol, ..base };
        let rng = StreamRng::new(seed, 0);
        let mut state = new_ring(spec);
        let mut traj = Vec::with_capacity(steps as usize);
        for _ in 0..steps {
            step(&mut state, &rng);
            traj.push((0..spec.nodes).map(|i| measured_queue_len(&state, i) as u32).collect());
        }
        out.push(traj);
    }
    Ok(out)
}
