//! Potential-function machinery for drift experiments on rings.
//!
//! Packet lifetimes are imagined uniform on `1..(1+δ)N` instead of
//! `1..L`; under that inflation, `f(i, z)` is the probability that
//! packet `z` still crosses node `i`, `φ(i)` sums `f` over the packets
//! that can reach `i`, and `Φ = max_i φ(i)`. The trick inequality
//! `Q_i >= φ(i) - φ(i-1)/ζ - 1` is a theorem: any violation on any
//! state is an implementation bug, not noise.

use serde::Serialize;

use crate::error::Error;
use crate::ring::{new_ring, step, Packet, RingSpec, RingState};
use crate::rng::StreamRng;
use crate::stats::mean_and_se;
use crate::Result;

/// Parameters of the potential function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiParams {
    pub nodes: usize,
    pub r: f64,
    pub delta: f64,
    /// Inflated load `r̂ = r (1 + δ/(1+δ))`, required below one.
    pub r_hat: f64,
    /// `ζ = 1 + 1/((1+δ)N - 1)`.
    pub zeta: f64,
    /// Inflated lifetime span `(1+δ)N`.
    pub span: f64,
}

impl PhiParams {
    pub fn new(nodes: usize, r: f64, delta: f64) -> Result<Self> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::OutOfDomain(format!("need 0 < δ < 1, got {delta}")));
        }
        if !(0.0..1.0).contains(&r) {
            return Err(Error::OutOfDomain(format!("need 0 <= r < 1, got {r}")));
        }
        let r_hat = r * (1.0 + delta / (1.0 + delta));
        if r_hat >= 1.0 {
            return Err(Error::OutOfDomain(format!("r̂ = {r_hat} >= 1; shrink δ")));
        }
        let span = (1.0 + delta) * nodes as f64;
        let zeta = 1.0 + 1.0 / (span - 1.0);
        Ok(PhiParams { nodes, r, delta, r_hat, zeta, span })
    }

    /// Default inflation: δ = 0.5 for `r <= 1/2`, otherwise the
    /// midpoint of the feasible range `(0, (1-r)/(2r-1))` capped at 1.
    pub fn with_default_delta(nodes: usize, r: f64) -> Result<Self> {
        let delta = if r > 0.5 { 0.5 * (1.0f64).min((1.0 - r) / (2.0 * r - 1.0)) } else { 0.5 };
        Self::new(nodes, r, delta)
    }
}

/// Reach weight of a packet from `origin`, currently at `at`, toward
/// node `i`: zero if the packet has already passed `i` or can never
/// cross it under the true `L`-bounded lifetime; otherwise
/// `((1+δ)N - d_i) / ((1+δ)N - t)` where `d_i` is the forward distance
/// origin → `i` and `t` the distance already traveled.
pub fn f_reach(spec: &RingSpec, params: &PhiParams, i: usize, origin: usize, at: usize) -> f64 {
    let n = spec.nodes;
    let d_i = (i + n - origin % n) % n;
    let traveled = (at + n - origin % n) % n;
    if d_i < traveled || d_i >= spec.max_path {
        return 0.0;
    }
    (params.span - d_i as f64) / (params.span - traveled as f64)
}

fn packet_f(spec: &RingSpec, params: &PhiParams, i: usize, at: usize, pkt: &Packet) -> f64 {
    f_reach(spec, params, i, pkt.origin as usize, at)
}

/// Expected congestion at node `i` under the inflated lifetimes:
/// `φ(i) = Σ_z f(i, z)`.
pub fn phi(state: &RingState, params: &PhiParams, i: usize) -> f64 {
    state
        .packets()
        .map(|(at, pkt)| packet_f(&state.spec, params, i, at, pkt))
        .sum()
}

/// `Φ(σ) = max_i φ(i, σ)`.
pub fn phi_max(state: &RingState, params: &PhiParams) -> f64 {
    (0..state.spec.nodes)
        .map(|i| phi(state, params, i))
        .fold(0.0, f64::max)
}

/// A violation of the trick inequality, surfaced with the node and
/// the three quantities involved.
#[derive(Debug, Clone, Serialize)]
pub struct TrickViolation {
    pub node: usize,
    pub queue_len: usize,
    pub phi_i: f64,
    pub phi_prev: f64,
    pub bound: f64,
}

/// Check `Q_i >= φ(i) - φ(i-1)/ζ - 1` at every node. Returns the first
/// violation, if any; a violation is a bug signal.
pub fn trick_violation(state: &RingState, params: &PhiParams) -> Option<TrickViolation> {
    let n = state.spec.nodes;
    // Tiny slack for float roundoff; the inequality itself is exact.
    const EPS: f64 = 1e-9;
    for i in 0..n {
        let phi_i = phi(state, params, i);
        let phi_prev = phi(state, params, (i + n - 1) % n);
        let bound = phi_i - phi_prev / params.zeta - 1.0;
        let q = state.queue_len(i);
        if (q as f64) < bound - EPS {
            return Some(TrickViolation { node: i, queue_len: q, phi_i, phi_prev, bound });
        }
    }
    None
}

/// True when the trick inequality holds on every node.
pub fn trick_check(state: &RingState, params: &PhiParams) -> bool {
    trick_violation(state, params).is_none()
}

/// Decomposition oracle for φ: congestion from hot potatoes plus
/// weighted queue contributions,
/// `φ(i) = C_i + Σ_{j=2}^{N} ((j + δN)/((1+δ)N)) Q_{i+j}`.
/// Exposed for cross-validation against the packet-sum definition.
pub fn phi_from_decomposition(state: &RingState, params: &PhiParams, i: usize) -> f64 {
    let n = state.spec.nodes;
    let mut acc = 0.0;
    for (at, pkt) in state.packets() {
        let in_ring = state.hot_potato(at).map(|p| p.seq) == Some(pkt.seq);
        if in_ring {
            acc += packet_f(&state.spec, params, i, at, pkt);
        }
    }
    let delta_n = params.delta * n as f64;
    for j in 2..=n {
        let node = (i + j) % n;
        acc += (j as f64 + delta_n) / params.span * state.queue_len(node) as f64;
    }
    acc
}

/// Build a GHP state whose potential is at least `target` by seeding
/// queued packets at uniformly drawn origins. The construction is
/// reachable: it consists of queued packets at their origins.
pub fn state_with_phi_at_least(spec: &RingSpec, params: &PhiParams, target: f64, seed: u64) -> RingState {
    let mut state = new_ring(*spec);
    let rng = StreamRng::new(seed, u64::MAX);
    let mut draw = 0u64;
    while phi_max(&state, params) < target {
        let origin = (rng.draw(0, draw, 7) % spec.nodes as u64) as usize;
        let dist = rng.uniform_1_to(1, draw, 8, spec.max_path as u32);
        state.push_queued(origin, dist);
        draw += 1;
    }
    state
}

/// Random reachable state: queued packets at random origins plus hot
/// potatoes in flight (at most one per node).
pub fn random_state(spec: &RingSpec, queued: usize, potatoes: usize, seed: u64) -> RingState {
    let mut state = new_ring(*spec);
    let rng = StreamRng::new(seed, u64::MAX - 1);
    let n = spec.nodes;
    let l = spec.max_path as u32;
    let mut draw = 0u64;
    let mut placed = 0usize;
    let mut occupied = vec![false; n];
    while placed < potatoes && n > 1 {
        let origin = (rng.draw(0, draw, 1) % n as u64) as usize;
        let total = rng.uniform_1_to(1, draw, 2, l);
        let moved = rng.draw(2, draw, 3) % total as u64;
        draw += 1;
        let at = (origin + moved as usize) % n;
        if occupied[at] || state.hot_potato(at).is_some() {
            continue;
        }
        occupied[at] = true;
        state.place_hot_potato(origin, moved as u32, total - moved as u32);
        placed += 1;
    }
    for _ in 0..queued {
        let origin = (rng.draw(3, draw, 4) % n as u64) as usize;
        let dist = rng.uniform_1_to(4, draw, 5, l);
        draw += 1;
        state.push_queued(origin, dist);
    }
    state
}

/// Monte Carlo estimate of the `T`-step drift `E[Φ(τ)] - Φ(σ)`.
#[derive(Debug, Clone, Serialize)]
pub struct DriftEstimate {
    pub start_phi: f64,
    pub estimate: f64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    pub horizon: u64,
    pub replications: u32,
}

/// Estimate the expected change of `Φ` over `horizon` steps starting
/// from `state`, across `replications` seeded runs. No claim is made
/// about the underlying theorem's unspecified constants; the answer is
/// a confidence interval.
pub fn drift_probe(
    state: &RingState,
    params: &PhiParams,
    horizon: u64,
    replications: u32,
    seed: u64,
) -> Result<DriftEstimate> {
    if replications < 2 {
        return Err(Error::InsufficientReplications(
            "drift confidence interval needs at least 2 replications".into(),
        ));
    }
    let start_phi = phi_max(state, params);
    let mut finals = Vec::with_capacity(replications as usize);
    for rep in 0..replications {
        let rng = StreamRng::new(seed, rep as u64);
        let mut run = state.clone();
        for _ in 0..horizon {
            step(&mut run, &rng);
        }
        finals.push(phi_max(&run, params) - start_phi);
    }
    let (estimate, std_err) = mean_and_se(&finals);
    Ok(DriftEstimate {
        start_phi,
        estimate,
        std_err,
        ci95: (estimate - 1.96 * std_err, estimate + 1.96 * std_err),
        horizon,
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Protocol;

    fn spec(n: usize) -> RingSpec {
        RingSpec::standard(n, 2.0 * 0.8 / n as f64, Protocol::Ghp).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PhiParams::new(10, 0.8, 0.0).is_err());
        assert!(PhiParams::new(10, 0.8, 1.0).is_err());
        assert!(PhiParams::new(10, 0.9, 0.9).is_err()); // r_hat >= 1
        let p = PhiParams::with_default_delta(10, 0.9).unwrap();
        assert!(p.r_hat < 1.0 && p.delta > 0.0);
        let p = PhiParams::with_default_delta(10, 0.3).unwrap();
        assert!((p.delta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f_reach_examples() {
        // Packet at its origin, i = origin: weight 1.
        let sp = spec(10);
        let params = PhiParams::new(10, 0.8, 0.2).unwrap();
        assert_eq!(f_reach(&sp, &params, 0, 0, 0), 1.0);
        // Worked case: N = 10, δ = 0.2, origin 0, at 3, target 7:
        // (12 - 7) / (12 - 3) = 5/9.
        let got = f_reach(&sp, &params, 7, 0, 3);
        assert!((got - 5.0 / 9.0).abs() < 1e-12, "{got}");
        // Already passed the target: zero.
        assert_eq!(f_reach(&sp, &params, 1, 0, 3), 0.0);
        // Target at distance L = N-1: unreachable (the packet would
        // depart there, not cross).
        assert_eq!(f_reach(&sp, &params, 9, 0, 0), 0.0);
    }

    #[test]
    fn f_reach_monotone_along_ring() {
        // For a fixed packet, crossing i-1 is at least as likely as
        // crossing i whenever both are ahead of it.
        let sp = spec(12);
        let params = PhiParams::new(12, 0.8, 0.3).unwrap();
        for at in 0..4 {
            for i in at.max(1)..11 {
                let fi = f_reach(&sp, &params, i, 0, at);
                let fprev = f_reach(&sp, &params, i - 1, 0, at);
                if fi > 0.0 && fprev > 0.0 {
                    assert!(fprev >= fi, "at {at} i {i}: {fprev} < {fi}");
                }
            }
        }
    }

    #[test]
    fn phi_ground_state_is_zero() {
        let sp = spec(8);
        let params = PhiParams::with_default_delta(8, 0.8).unwrap();
        let state = new_ring(sp);
        assert_eq!(phi_max(&state, &params), 0.0);
    }

    #[test]
    fn phi_single_potato_hand_computed() {
        let sp = spec(10);
        let params = PhiParams::new(10, 0.8, 0.2).unwrap();
        let mut state = new_ring(sp);
        // Freshly inserted packet in node 0's slot (origin 0, moved 0).
        state.place_hot_potato(0, 0, 4);
        for i in 0..10 {
            let expect = if i < 9 { (12.0 - i as f64) / 12.0 } else { 0.0 };
            let got = phi(&state, &params, i);
            assert!((got - expect).abs() < 1e-12, "i = {i}: {got} vs {expect}");
        }
    }

    #[test]
    fn phi_matches_decomposition_oracle() {
        let sp = spec(9);
        let params = PhiParams::with_default_delta(9, 0.8).unwrap();
        for seed in 0..20u64 {
            let state = random_state(&sp, 12, 4, seed);
            for i in 0..9 {
                let direct = phi(&state, &params, i);
                let decomposed = phi_from_decomposition(&state, &params, i);
                assert!(
                    (direct - decomposed).abs() < 1e-9,
                    "seed {seed} node {i}: {direct} vs {decomposed}"
                );
            }
        }
    }

    #[test]
    fn phi_dominates_weighted_queue_sum() {
        // φ(i) >= Σ_{j=1}^{N-1} (j/(N-1)) Q at distance N-1-j upstream;
        // the bound used to convert E[Φ] = O(N) into E[Q] = O(1).
        let sp = spec(9);
        let n = 9;
        let params = PhiParams::with_default_delta(n, 0.8).unwrap();
        for seed in 0..10u64 {
            let state = random_state(&sp, 15, 3, seed);
            for i in 0..n {
                let mut sum = 0.0;
                for j in 1..n {
                    let node = (i + 1 + j) % n;
                    sum += j as f64 / (n as f64 - 1.0) * state.queue_len(node) as f64;
                }
                let got = phi(&state, &params, i);
                assert!(got >= sum - 1e-9, "seed {seed} i {i}: φ = {got} < {sum}");
            }
        }
    }

    #[test]
    fn trick_holds_on_ground_and_random_states() {
        let sp = spec(5);
        let params = PhiParams::with_default_delta(5, 0.8).unwrap();
        assert!(trick_check(&new_ring(sp), &params));
        for seed in 0..200u64 {
            let state = random_state(&sp, (seed % 17) as usize, (seed % 3) as usize, seed);
            assert!(trick_violation(&state, &params).is_none(), "seed {seed}");
        }
    }

    #[test]
    fn trick_holds_with_one_huge_queue() {
        let sp = spec(6);
        let params = PhiParams::with_default_delta(6, 0.8).unwrap();
        let mut state = new_ring(sp);
        for _ in 0..500 {
            state.push_queued(2, 3);
        }
        assert!(trick_check(&state, &params));
    }

    #[test]
    fn packet_at_its_node_contributes_exactly_one() {
        // Bookkeeping identity: any packet at node i that has not yet
        // crossed it adds exactly 1 to φ(i), so a departure past the
        // argmax node drops Φ's witness by that packet's full weight.
        let sp = spec(7);
        let params = PhiParams::with_default_delta(7, 0.8).unwrap();
        for seed in 0..20u64 {
            let base = random_state(&sp, 6, 2, seed);
            let argmax = (0..7)
                .max_by(|&a, &b| {
                    phi(&base, &params, a).partial_cmp(&phi(&base, &params, b)).unwrap()
                })
                .unwrap();
            let before = phi(&base, &params, argmax);
            let mut grown = base.clone();
            grown.push_queued(argmax, 2);
            let after = phi(&grown, &params, argmax);
            assert!((after - before - 1.0).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn drift_probe_runs_and_needs_reps() {
        let sp = spec(10);
        let params = PhiParams::with_default_delta(10, 0.8).unwrap();
        let state = state_with_phi_at_least(&sp, &params, 20.0, 3);
        assert!(phi_max(&state, &params) >= 20.0);
        let est = drift_probe(&state, &params, 50, 16, 5).unwrap();
        assert!(est.std_err.is_finite());
        assert!(drift_probe(&state, &params, 10, 1, 5).is_err());
    }

    #[test]
    fn forced_departures_bound_phi_drift() {
        // With a queue of length >= T at node i and no arrivals, node i
        // emits a packet on every one of T steps; each departure from
        // the queue costs φ(i) its full weight-1 contribution, so φ(i)
        // drops by at least... the motivation lemma's per-step bound
        // r̂ - 1 is -1 here (no arrivals), up to the potatoes' gain.
        let n = 10;
        let sp = RingSpec::standard(n, 0.0, Protocol::Ghp).unwrap();
        let params = PhiParams::new(n, 0.5, 0.25).unwrap();
        let mut state = new_ring(sp);
        let horizon = 20u64;
        for _ in 0..horizon + 5 {
            state.push_queued(3, 5);
        }
        let i = 3;
        let before = phi(&state, &params, i);
        let rng = StreamRng::new(1, 0);
        for _ in 0..horizon {
            step(&mut state, &rng);
        }
        let after = phi(&state, &params, i);
        // Queue drains one per step; each drained packet eventually
        // leaves φ(i) entirely once it departs past i.
        assert!(
            after <= before - 0.5 * horizon as f64,
            "φ did not decay: {before} -> {after}"
        );
    }
}
