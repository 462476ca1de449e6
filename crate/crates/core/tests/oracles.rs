//! Independent oracles: a from-scratch BFS over the uncompressed chain
//! to cross-check state enumeration, a brute-force symbolic
//! path-enumeration engine to cross-check the propagated coefficients,
//! closed-form marginal series, fixed-step convergence behavior, and
//! simulation against the bidirectional decomposition.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use ringcalc::ring::{decompose_bidirectional, simulate, Protocol, RingSpec, SimOptions};
use ringcalc::taylor::{
    enumerate_states, propagate, stationary_series, NodeSym, SymbolicState, TaylorOptions,
};

/// A deliberately naive GHP ring state: per node, the queued
/// destinations in arrival order and the hot potato's remaining hops.
/// Written independently of the engine's representation and operators.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct NaiveState {
    nodes: Vec<(Vec<u8>, u8)>, // (queue of remaining-at-promotion, slot; 0 = empty)
}

impl NaiveState {
    fn empty(n: usize) -> Self {
        NaiveState { nodes: vec![(Vec::new(), 0); n] }
    }

    fn packets(&self) -> usize {
        self.nodes.iter().map(|(q, s)| q.len() + usize::from(*s != 0)).sum()
    }

    fn to_symbolic(&self) -> SymbolicState {
        SymbolicState::from_nodes(
            self.nodes
                .iter()
                .map(|(q, s)| NodeSym { queued: q.len() as u32, slot: (*s != 0).then_some(*s as u32) })
                .collect(),
        )
    }

    /// All successor states of one full time step: route every slot,
    /// promote freed slots from queue fronts, then all arrival
    /// combinations (none, or destination 1..=l per node), capped at
    /// `cap` packets.
    fn successors(&self, l: u8, cap: usize) -> Vec<NaiveState> {
        let n = self.nodes.len();
        // Route: slots advance simultaneously; remaining 1 departs.
        let mut routed = NaiveState { nodes: self.nodes.iter().map(|(q, _)| (q.clone(), 0)).collect() };
        for i in 0..n {
            let slot = self.nodes[i].1;
            if slot >= 2 {
                routed.nodes[(i + 1) % n].1 = slot - 1;
            }
        }
        // Promote.
        for i in 0..n {
            if routed.nodes[i].1 == 0 && !routed.nodes[i].0.is_empty() {
                routed.nodes[i].1 = routed.nodes[i].0.remove(0);
            }
        }
        // Arrivals: every combination over nodes.
        let mut combos = vec![routed];
        for i in 0..n {
            let mut next = Vec::new();
            for st in &combos {
                next.push(st.clone());
                if st.packets() >= cap {
                    continue;
                }
                for d in 1..=l {
                    let mut nx = st.clone();
                    if nx.nodes[i].1 == 0 {
                        nx.nodes[i].1 = d;
                    } else {
                        nx.nodes[i].0.push(d);
                    }
                    next.push(nx);
                }
            }
            combos = next;
        }
        combos
    }
}

#[test]
fn enumeration_matches_independent_bfs() {
    for (n, l, k) in [(3usize, 2u8, 3usize), (1, 2, 2), (2, 3, 3), (4, 2, 2)] {
        let mut seen: BTreeSet<NaiveState> = BTreeSet::new();
        let mut frontier = VecDeque::new();
        let root = NaiveState::empty(n);
        seen.insert(root.clone());
        frontier.push_back(root);
        while let Some(state) = frontier.pop_front() {
            for next in state.successors(l, k) {
                if !seen.contains(&next) {
                    seen.insert(next.clone());
                    frontier.push_back(next);
                }
            }
        }
        let oracle: BTreeSet<SymbolicState> = seen.iter().map(NaiveState::to_symbolic).collect();

        let spec = RingSpec::nonstandard(n, l as usize, 0.1, Protocol::Ghp).unwrap();
        let engine: BTreeSet<SymbolicState> =
            enumerate_states(&spec, k, &TaylorOptions::default()).unwrap().into_iter().collect();
        assert_eq!(engine, oracle, "N={n} L={l} k={k}");
    }
}

/// Integer polynomial in `s`, truncated at a degree bound. The
/// brute-force engine multiplies these along every outcome path.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Poly(Vec<i128>);

impl Poly {
    fn zero(k: usize) -> Self {
        Poly(vec![0; k + 1])
    }
    fn one(k: usize) -> Self {
        let mut p = Self::zero(k);
        p.0[0] = 1;
        p
    }
    /// self * s
    fn times_s(&self) -> Self {
        let mut out = Poly(vec![0; self.0.len()]);
        for d in 1..self.0.len() {
            out.0[d] = self.0[d - 1];
        }
        out
    }
    /// self * (1 - l s)
    fn times_no_arrival(&self, l: i128) -> Self {
        let mut out = self.clone();
        for d in (1..self.0.len()).rev() {
            out.0[d] -= l * self.0[d - 1];
        }
        out
    }
    fn add_assign(&mut self, other: &Poly) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// Brute-force symbolic propagation: evolve the full distribution over
/// naive states (no packet cap; paths of length T hold at most N·T
/// packets) by expanding every arrival outcome with its polynomial
/// weight. Coefficients of degree <= k are exact.
fn brute_force_distribution(n: usize, l: u8, k: usize, steps: usize) -> BTreeMap<SymbolicState, Vec<i128>> {
    let mut dist: BTreeMap<NaiveState, Poly> = BTreeMap::new();
    dist.insert(NaiveState::empty(n), Poly::one(k));
    for _ in 0..steps {
        let mut next: BTreeMap<NaiveState, Poly> = BTreeMap::new();
        for (state, weight) in &dist {
            // Route and promote exactly as in `successors`, then expand
            // arrivals with weights instead of branches alone.
            let mut routed =
                NaiveState { nodes: state.nodes.iter().map(|(q, _)| (q.clone(), 0)).collect() };
            for i in 0..n {
                let slot = state.nodes[i].1;
                if slot >= 2 {
                    routed.nodes[(i + 1) % n].1 = slot - 1;
                }
            }
            for i in 0..n {
                if routed.nodes[i].1 == 0 && !routed.nodes[i].0.is_empty() {
                    routed.nodes[i].1 = routed.nodes[i].0.remove(0);
                }
            }
            let mut combos: Vec<(NaiveState, Poly)> = vec![(routed, weight.clone())];
            for i in 0..n {
                let mut grown = Vec::new();
                for (st, w) in &combos {
                    grown.push((st.clone(), w.times_no_arrival(l as i128)));
                    for d in 1..=l {
                        let mut nx = st.clone();
                        if nx.nodes[i].1 == 0 {
                            nx.nodes[i].1 = d;
                        } else {
                            nx.nodes[i].0.push(d);
                        }
                        grown.push((nx, w.times_s()));
                    }
                }
                combos = grown;
            }
            for (st, w) in combos {
                next.entry(st).or_insert_with(|| Poly::zero(k)).add_assign(&w);
            }
        }
        dist = next;
    }
    // Project onto compressed symbolic states; drop all-zero entries.
    let mut grouped: BTreeMap<SymbolicState, Vec<i128>> = BTreeMap::new();
    for (state, poly) in dist {
        let entry = grouped.entry(state.to_symbolic()).or_insert_with(|| vec![0; k + 1]);
        for (a, b) in entry.iter_mut().zip(&poly.0) {
            *a += b;
        }
    }
    grouped.retain(|_, v| v.iter().any(|&c| c != 0));
    grouped
}

#[test]
fn propagation_matches_exponential_path_oracle() {
    for (n, l, k, steps) in [(1usize, 2u8, 3usize, 5usize), (2, 2, 3, 4), (3, 2, 3, 3), (2, 1, 2, 5)] {
        let oracle = brute_force_distribution(n, l, k, steps);
        let spec = RingSpec::nonstandard(n, l as usize, 0.1, Protocol::Ghp).unwrap();
        for options in [TaylorOptions::default(), TaylorOptions::compressed()] {
            let dist = propagate(&spec, k, steps as u64, &options).unwrap();
            // Engine states are capped at k packets; oracle states are
            // not. Every engine coefficient must match the oracle, and
            // oracle states the engine dropped must have no mass at
            // degree <= k.
            for (state, series) in dist.iter() {
                let want = oracle.get(state).cloned().unwrap_or_else(|| vec![0; k + 1]);
                let got: Vec<i128> =
                    series.coeffs().iter().map(|c| c.to_i64().unwrap() as i128).collect();
                assert_eq!(got, want, "N={n} L={l} T={steps} state {state}");
            }
            for (state, coeffs) in &oracle {
                if dist.get(state).is_none() {
                    assert!(
                        state.packets() as usize > k && coeffs.iter().all(|&c| c == 0),
                        "oracle state {state} with low-degree mass missing from the engine"
                    );
                }
            }
        }
    }
}

/// Expand `numer(s) / denom(s)` to `k` coefficients over the
/// rationals.
fn expand_rational(numer: &[BigRational], denom: &[BigRational], k: usize) -> Vec<BigRational> {
    assert!(!denom[0].is_zero());
    let mut out: Vec<BigRational> = Vec::with_capacity(k + 1);
    for deg in 0..=k {
        let mut acc = if deg < numer.len() { numer[deg].clone() } else { BigRational::zero() };
        for j in 1..denom.len().min(deg + 1) {
            let prev = out[deg - j].clone();
            acc -= &denom[j] * prev;
        }
        out.push(acc / &denom[0]);
    }
    out
}

#[test]
fn l2_marginal_series_match_stationary_equations() {
    // The per-node marginals of the engine's stationary expansion must
    // equal the closed forms
    //   Pr[X]    = 1 - (3/2)p
    //   Pr[0|1]  = (1 - (3/2)p) p/(1-p)
    //   Pr[n|1]  = (1 - (3/2)p) p^{2n} (2-p) / ((1-p)(2-p))^{n+1}
    //   Pr[n|2]  = (1 - (3/2)p) p^{2n} p / ((1-p)(2-p))^{n+1}
    // expanded at p = 2s, term by term, for every ring size.
    let k = 5;
    let rat = |v: i64| BigRational::from_integer(BigInt::from(v));
    // Polynomials in s: p = 2s, 1-p = 1-2s, 2-p = 2-2s, head = 1-3s.
    let p_poly = vec![rat(0), rat(2)];
    let head = vec![rat(1), rat(-3)];
    let denom_unit = vec![rat(2), rat(-6), rat(4)]; // (1-2s)(2-2s)
    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let closed_form = |queued: u32, slot: u32| -> Vec<BigRational> {
        match (queued, slot) {
            (0, 1) => {
                // head * p / (1 - p)
                expand_rational(&mul(&head, &p_poly), &[rat(1), rat(-2)], k)
            }
            (q, t) => {
                // head * p^{2q} * last / ((1-p)(2-p))^{q+1}
                let mut numer = head.clone();
                for _ in 0..2 * q {
                    numer = mul(&numer, &p_poly);
                }
                let last = if t == 1 { vec![rat(2), rat(-2)] } else { p_poly.clone() };
                numer = mul(&numer, &last);
                let mut denom = vec![rat(1)];
                for _ in 0..=q {
                    denom = mul(&denom, &denom_unit);
                }
                expand_rational(&numer, &denom, k)
            }
        }
    };

    for n in [1usize, 2, 3, 5] {
        let spec = RingSpec::nonstandard(n, 2, 0.1, Protocol::Ghp).unwrap();
        let dist = stationary_series(&spec, k, &TaylorOptions::default()).unwrap();
        // Node-0 marginals by summing over the other nodes.
        let mut marginals: BTreeMap<NodeSym, Vec<BigRational>> = BTreeMap::new();
        for (state, series) in dist.iter() {
            let entry = marginals
                .entry(state.nodes[0])
                .or_insert_with(|| vec![BigRational::zero(); k + 1]);
            for (d, c) in series.coeffs().iter().enumerate() {
                entry[d] += BigRational::from_integer(c.clone());
            }
        }
        // Empty node: exactly 1 - 3s.
        let mut expect_empty = vec![BigRational::zero(); k + 1];
        expect_empty[0] = rat(1);
        expect_empty[1] = rat(-3);
        assert_eq!(
            marginals.get(&NodeSym { queued: 0, slot: None }).unwrap(),
            &expect_empty,
            "N={n} empty marginal"
        );
        for queued in 0..2u32 {
            for slot in [1u32, 2] {
                let key = NodeSym { queued, slot: Some(slot) };
                let got = marginals.get(&key).cloned().unwrap_or_else(|| vec![BigRational::zero(); k + 1]);
                let want = closed_form(queued, slot);
                assert_eq!(got, want[..=k], "N={n} marginal [{queued}|{slot}]");
            }
        }
        // And the marginals sum to one through degree k.
        let mut sums = vec![BigRational::zero(); k + 1];
        for series in marginals.values() {
            for (d, c) in series.iter().enumerate() {
                sums[d] += c;
            }
        }
        assert!(sums[0].is_one() && sums[1..].iter().all(Zero::is_zero), "N={n}");
    }
}

#[test]
fn coefficients_stop_changing_in_finite_time() {
    // Growing T: the degree-2 coefficients settle after finitely many
    // steps and never move again.
    let spec = RingSpec::standard(3, 0.1, Protocol::Ghp).unwrap();
    let k = 2;
    let snapshots: Vec<_> = (0..40)
        .map(|t| {
            let dist = propagate(&spec, k, t, &TaylorOptions::default()).unwrap();
            dist.iter()
                .map(|(s, series)| (s.clone(), series.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    let settle = snapshots
        .windows(2)
        .position(|w| w[0] == w[1])
        .expect("coefficients must settle within the horizon");
    for w in snapshots[settle..].windows(2) {
        assert_eq!(w[0], w[1], "coefficients moved after settling");
    }
}

#[test]
fn bidirectional_nine_ring_sums_halves() {
    // N = 9, p = 0.4: two L = 4 halves at rate 0.2; doubling one
    // half's mean queue gives the bidirectional ring's by linearity.
    let (half, other) = decompose_bidirectional(9, 0.4, Protocol::Ghp).unwrap();
    assert_eq!(half.max_path, 4);
    assert_eq!(half, other);
    let a = simulate(half, SimOptions::new(150_000, 4, 21)).unwrap();
    let b = simulate(other, SimOptions::new(150_000, 4, 22)).unwrap();
    let summed = a.mean_queue_per_node + b.mean_queue_per_node;
    // Independent-seed halves must agree with doubling one of them.
    assert!(
        (summed - 2.0 * a.mean_queue_per_node).abs() < 6.0 * (a.se_queue + b.se_queue).max(1e-4),
        "summed {summed} vs doubled {}",
        2.0 * a.mean_queue_per_node
    );
    assert!(a.stable);
}
