//! Exact Taylor expansion of GHP stationary probabilities around zero
//! arrival rate.
//!
//! The expansion variable is `s = p / L`, the probability that a packet
//! arrives *and* picks one particular destination. Every transition
//! weight is then a polynomial in `s` with integer coefficients, so the
//! whole computation runs in exact integer arithmetic: no floating
//! point, no rounding. Only states carrying at most `k` packets can
//! have nonzero coefficients up to degree `k`, so the engine works on
//! that finite set, pushes the distribution forward step by step, and
//! stops once the coefficients settle — which they provably do after
//! finitely many steps.
//!
//! Two engines are provided:
//!
//! * **Uncompressed** (default): queued packets carry their destination
//!   from the moment they arrive. Pure integer arithmetic throughout;
//!   this is the correctness reference.
//! * **Compressed**: queued packets leave their destination unspecified
//!   until promotion, which shrinks the state space exponentially (GHP
//!   never returns a packet to queue, so queued packets are
//!   stochastically identical). Promotion introduces `1/L` weights, so
//!   coefficients are scaled by `L^k` internally and asserted to be
//!   integers once converged.

#![allow(clippy::needless_range_loop)] // coefficient loops are index arithmetic
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::ring::{Arrival, Protocol, RingSpec};
use crate::Result;

/// Which engine backs the computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    Uncompressed,
    Compressed,
}

/// Engine tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct TaylorOptions {
    pub mode: EngineMode,
    /// Hard cap on the number of enumerated states.
    pub state_cap: usize,
    /// Override for the convergence step bound.
    pub max_steps: Option<u64>,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        TaylorOptions { mode: EngineMode::Uncompressed, state_cap: 5_000_000, max_steps: None }
    }
}

impl TaylorOptions {
    pub fn compressed() -> Self {
        TaylorOptions { mode: EngineMode::Compressed, ..Default::default() }
    }
}

/// Truncated power series in `s` with arbitrary-precision integer
/// coefficients, degrees `0..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntSeries {
    coeffs: Vec<BigInt>,
}

impl IntSeries {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty());
        IntSeries { coeffs }
    }

    pub fn zero(k: usize) -> Self {
        IntSeries { coeffs: vec![BigInt::zero(); k + 1] }
    }

    /// Highest represented degree `k`.
    pub fn degree_bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, degree: usize) -> &BigInt {
        &self.coeffs[degree]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Coefficients as decimal strings (the interchange format; the
    /// values outgrow 64-bit integers quickly).
    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(BigInt::to_string).collect()
    }

    pub fn from_decimal_strings(strings: &[String]) -> Result<Self> {
        let coeffs = strings
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(|e| Error::InvalidSpec(format!("bad coefficient {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::InvalidSpec("empty coefficient list".into()));
        }
        Ok(IntSeries { coeffs })
    }

    /// Evaluate at a concrete `s` in floating point.
    pub fn eval_f64(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * s + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

}

impl Serialize for IntSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_decimal_strings().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let strings = Vec::<String>::deserialize(deserializer)?;
        IntSeries::from_decimal_strings(&strings).map_err(D::Error::custom)
    }
}

/// Per-node symbolic state: queued packet count (destinations
/// unspecified) and the hot potato's remaining distance, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeSym {
    pub queued: u32,
    pub slot: Option<u32>,
}

/// Compressed Markov state of the whole ring. No symmetry reduction is
/// applied; rotations of a state are distinct states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolicState {
    pub nodes: Vec<NodeSym>,
}

impl SymbolicState {
    pub fn ground(nodes: usize) -> Self {
        SymbolicState { nodes: vec![NodeSym { queued: 0, slot: None }; nodes] }
    }

    pub fn from_nodes(nodes: Vec<NodeSym>) -> Self {
        SymbolicState { nodes }
    }

    /// Total packets present (queued plus hot potatoes).
    pub fn packets(&self) -> u32 {
        self.nodes.iter().map(|n| n.queued + u32::from(n.slot.is_some())).sum()
    }

    /// Total queued packets.
    pub fn queued(&self) -> u32 {
        self.nodes.iter().map(|n| n.queued).sum()
    }

    /// Ring-order reversal (reflection fixing node 0). Per-node states
    /// are carried unchanged; only their cyclic order flips.
    pub fn reversal(&self) -> Self {
        let n = self.nodes.len();
        SymbolicState {
            nodes: (0..n).map(|i| self.nodes[(n - i) % n]).collect(),
        }
    }

    /// Rotate node labels by `by`.
    pub fn rotate(&self, by: usize) -> Self {
        let n = self.nodes.len();
        SymbolicState { nodes: (0..n).map(|i| self.nodes[(i + n - by % n) % n]).collect() }
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            match node.slot {
                Some(t) => write!(f, "[{}|{}]", node.queued, t)?,
                None => write!(f, "[X]")?,
            }
        }
        Ok(())
    }
}

/// Stationary-probability expansion: a map from compressed state to
/// its series, plus run metadata.
#[derive(Debug, Clone, Serialize)]
pub struct StateDist {
    pub k: usize,
    pub spec: RingSpec,
    pub mode: EngineMode,
    pub steps_run: u64,
    pub converged: bool,
    /// Bit length of the largest coefficient seen (the memory driver).
    pub max_coeff_bits: u64,
    #[serde(serialize_with = "serialize_state_map")]
    map: BTreeMap<SymbolicState, IntSeries>,
}

fn serialize_state_map<S: Serializer>(
    map: &BTreeMap<SymbolicState, IntSeries>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        state: &'a SymbolicState,
        coeffs: &'a IntSeries,
    }
    serializer.collect_seq(map.iter().map(|(state, coeffs)| Entry { state, coeffs }))
}

impl StateDist {
    pub fn get(&self, state: &SymbolicState) -> Option<&IntSeries> {
        self.map.get(state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SymbolicState, &IntSeries)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Series of the total expected queue length (all nodes summed). The
/// per-node version is [`expected_queue_series_per_node`].
pub fn expected_queue_series(dist: &StateDist) -> IntSeries {
    let mut total = IntSeries::zero(dist.k);
    for (state, series) in dist.iter() {
        let q = state.queued();
        if q == 0 {
            continue;
        }
        for d in 0..=dist.k {
            total.coeffs[d] += series.coeff(d) * q;
        }
    }
    total
}

/// Expected queue length per node; exact by ring symmetry.
pub fn expected_queue_series_per_node(dist: &StateDist) -> Result<IntSeries> {
    let total = expected_queue_series(dist);
    let n = BigInt::from(dist.spec.nodes);
    let mut coeffs = Vec::with_capacity(dist.k + 1);
    for c in total.coeffs() {
        let (q, r) = num_integer::Integer::div_rem(c, &n);
        if !r.is_zero() {
            return Err(Error::InvalidSpec(format!(
                "total queue coefficient {c} not divisible by N = {n}; engine bug"
            )));
        }
        coeffs.push(q);
    }
    Ok(IntSeries::new(coeffs))
}

/// Both series of a state and its ring reversal, for product-form
/// probes: under a product-form stationary distribution the two must
/// agree, and for `N >= 4` they do not.
pub fn product_form_probe(
    spec: &RingSpec,
    k: usize,
    state: &SymbolicState,
    options: &TaylorOptions,
) -> Result<(IntSeries, IntSeries)> {
    let dist = stationary_series(spec, k, options)?;
    let fwd = dist
        .get(state)
        .ok_or_else(|| Error::UnknownState(state.to_string()))?
        .clone();
    let rev_state = state.reversal();
    let rev = dist
        .get(&rev_state)
        .ok_or_else(|| Error::UnknownState(rev_state.to_string()))?
        .clone();
    Ok((fwd, rev))
}

// ---------------------------------------------------------------------------
// Engine internals
// ---------------------------------------------------------------------------

/// Coefficient ring abstraction: i128 for speed, BigInt as fallback.
pub(crate) trait Coeff: Clone + PartialEq {
    fn czero() -> Self;
    fn is_czero(&self) -> bool;
    fn from_bigint(v: &BigInt) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
    /// `self += other`; Err on overflow.
    fn add_assign_c(&mut self, other: &Self) -> std::result::Result<(), ()>;
    /// `self += other * m`; Err on overflow.
    fn add_mul_i64(&mut self, other: &Self, m: i64) -> std::result::Result<(), ()>;
    /// `self /= d`, which must be exact; Err if not.
    fn div_exact_u32(&mut self, d: u32) -> std::result::Result<(), ()>;
}

impl Coeff for i128 {
    fn czero() -> Self {
        0
    }
    fn is_czero(&self) -> bool {
        *self == 0
    }
    fn from_bigint(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn add_assign_c(&mut self, other: &Self) -> std::result::Result<(), ()> {
        *self = self.checked_add(*other).ok_or(())?;
        Ok(())
    }
    fn add_mul_i64(&mut self, other: &Self, m: i64) -> std::result::Result<(), ()> {
        let prod = other.checked_mul(m as i128).ok_or(())?;
        *self = self.checked_add(prod).ok_or(())?;
        Ok(())
    }
    fn div_exact_u32(&mut self, d: u32) -> std::result::Result<(), ()> {
        let d = d as i128;
        if *self % d != 0 {
            return Err(());
        }
        *self /= d;
        Ok(())
    }
}

impl Coeff for BigInt {
    fn czero() -> Self {
        Zero::zero()
    }
    fn is_czero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_bigint(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
    fn add_assign_c(&mut self, other: &Self) -> std::result::Result<(), ()> {
        *self += other;
        Ok(())
    }
    fn add_mul_i64(&mut self, other: &Self, m: i64) -> std::result::Result<(), ()> {
        *self += other * m;
        Ok(())
    }
    fn div_exact_u32(&mut self, d: u32) -> std::result::Result<(), ()> {
        let d = BigInt::from(d);
        let (q, r) = num_integer::Integer::div_rem(&*self, &d);
        if !r.is_zero() {
            return Err(());
        }
        *self = q;
        Ok(())
    }
}

/// Working representation of an engine state. In compressed mode queue
/// entries are 0 (destination unspecified); uncompressed entries hold
/// the destination distance `1..=L`, promoted FIFO.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Ws {
    slots: Vec<u8>,
    queues: Vec<Vec<u8>>,
}

impl Ws {
    fn ground(n: usize) -> Self {
        Ws { slots: vec![0; n], queues: vec![Vec::new(); n] }
    }

    fn packets(&self) -> u32 {
        let slots: u32 = self.slots.iter().map(|&s| u32::from(s != 0)).sum();
        let queued: u32 = self.queues.iter().map(|q| q.len() as u32).sum();
        slots + queued
    }

    fn encode(&self) -> Box<[u8]> {
        let mut out = Vec::with_capacity(self.slots.len() * 2 + 4);
        for (slot, queue) in self.slots.iter().zip(&self.queues) {
            out.push(*slot);
            out.push(queue.len() as u8);
            out.extend_from_slice(queue);
        }
        out.into_boxed_slice()
    }

    fn decode(bytes: &[u8], n: usize) -> Self {
        let mut slots = Vec::with_capacity(n);
        let mut queues = Vec::with_capacity(n);
        let mut i = 0;
        for _ in 0..n {
            slots.push(bytes[i]);
            let len = bytes[i + 1] as usize;
            queues.push(bytes[i + 2..i + 2 + len].to_vec());
            i += 2 + len;
        }
        Ws { slots, queues }
    }

    /// Simultaneous slot shift. Dying potatoes (remaining 1) depart.
    fn shift(&self) -> Ws {
        let n = self.slots.len();
        let mut next = self.clone();
        for i in 0..n {
            let dest = (i + 1) % n;
            let incoming = self.slots[i];
            next.slots[dest] = if incoming >= 2 { incoming - 1 } else { 0 };
        }
        next
    }

    fn to_symbolic(&self) -> SymbolicState {
        SymbolicState {
            nodes: self
                .slots
                .iter()
                .zip(&self.queues)
                .map(|(&s, q)| NodeSym { queued: q.len() as u32, slot: (s != 0).then_some(s as u32) })
                .collect(),
        }
    }

    fn from_symbolic(state: &SymbolicState) -> Self {
        Ws {
            slots: state.nodes.iter().map(|n| n.slot.unwrap_or(0) as u8).collect(),
            queues: state.nodes.iter().map(|n| vec![0u8; n.queued as usize]).collect(),
        }
    }
}

const DROP: u32 = u32::MAX;

pub(crate) struct Engine {
    n: usize,
    l: usize,
    k: usize,
    compressed: bool,
    states: Vec<Box<[u8]>>,
    packets: Vec<u8>,
    /// Deterministic shift (uncompressed: fused with promotion).
    shift_tbl: Vec<u32>,
    /// Compressed only: whether node `i` promotes in this state, and
    /// the `L` targets for the revealed distance.
    promote_fires: Vec<Vec<bool>>,
    promote_tbl: Vec<Vec<u32>>,
    /// Arrival targets per node: uncompressed and empty-slot arrivals
    /// index `state * L + (d - 1)`; compressed occupied-slot arrivals
    /// use the queue table.
    arrive_slot_tbl: Vec<Vec<u32>>,
    arrive_queue_tbl: Vec<Vec<u32>>,
}

impl Engine {
    pub(crate) fn build(n: usize, l: usize, k: usize, compressed: bool, cap: usize) -> Result<Engine> {
        assert!(n >= 1 && l >= 1);
        if k > 200 {
            return Err(Error::InvalidSpec(format!("degree bound k = {k} unreasonably large")));
        }

        // BFS closure of the ground state under the per-phase operators.
        let mut states: Vec<Box<[u8]>> = Vec::new();
        let mut index: HashMap<Box<[u8]>, u32> = HashMap::new();
        let mut work: VecDeque<u32> = VecDeque::new();
        let intern = |ws: &Ws, states: &mut Vec<Box<[u8]>>, index: &mut HashMap<Box<[u8]>, u32>, work: &mut VecDeque<u32>| -> Result<u32> {
            let key = ws.encode();
            if let Some(&id) = index.get(&key) {
                return Ok(id);
            }
            let id = states.len() as u32;
            if states.len() >= cap {
                return Err(Error::StateCapExceeded { count: states.len() + 1, cap });
            }
            states.push(key.clone());
            index.insert(key, id);
            work.push_back(id);
            Ok(id)
        };
        intern(&Ws::ground(n), &mut states, &mut index, &mut work)?;
        while let Some(id) = work.pop_front() {
            let ws = Ws::decode(&states[id as usize], n);
            // Shift (with fused promotion in uncompressed mode).
            let mut shifted = ws.shift();
            if !compressed {
                promote_all(&mut shifted);
            }
            intern(&shifted, &mut states, &mut index, &mut work)?;
            // Per-node promotion branches (compressed).
            if compressed {
                for i in 0..n {
                    if ws.slots[i] == 0 && !ws.queues[i].is_empty() {
                        for d in 1..=l as u8 {
                            let mut next = ws.clone();
                            next.queues[i].pop();
                            next.slots[i] = d;
                            intern(&next, &mut states, &mut index, &mut work)?;
                        }
                    }
                }
            }
            // Per-node arrivals.
            if ws.packets() < k as u32 {
                for i in 0..n {
                    if ws.slots[i] == 0 {
                        for d in 1..=l as u8 {
                            let mut next = ws.clone();
                            next.slots[i] = d;
                            intern(&next, &mut states, &mut index, &mut work)?;
                        }
                    } else if compressed {
                        let mut next = ws.clone();
                        next.queues[i].push(0);
                        intern(&next, &mut states, &mut index, &mut work)?;
                    } else {
                        for d in 1..=l as u8 {
                            let mut next = ws.clone();
                            next.queues[i].push(d);
                            intern(&next, &mut states, &mut index, &mut work)?;
                        }
                    }
                }
            }
        }

        let count = states.len();
        let lookup = |ws: &Ws| -> u32 { index[&ws.encode()] };

        let mut packets = Vec::with_capacity(count);
        let mut shift_tbl = Vec::with_capacity(count);
        let mut promote_fires = vec![Vec::new(); n];
        let mut promote_tbl = vec![Vec::new(); n];
        let mut arrive_slot_tbl = vec![Vec::new(); n];
        let mut arrive_queue_tbl = vec![Vec::new(); n];
        if compressed {
            for i in 0..n {
                promote_fires[i] = vec![false; count];
                promote_tbl[i] = vec![DROP; count * l];
            }
        }
        for i in 0..n {
            arrive_slot_tbl[i] = vec![DROP; count * l];
            arrive_queue_tbl[i] = vec![DROP; count];
        }

        for id in 0..count {
            let ws = Ws::decode(&states[id], n);
            packets.push(ws.packets() as u8);

            let mut shifted = ws.shift();
            if !compressed {
                promote_all(&mut shifted);
            }
            shift_tbl.push(lookup(&shifted));

            if compressed {
                for i in 0..n {
                    if ws.slots[i] == 0 && !ws.queues[i].is_empty() {
                        promote_fires[i][id] = true;
                        for d in 1..=l {
                            let mut next = ws.clone();
                            next.queues[i].pop();
                            next.slots[i] = d as u8;
                            promote_tbl[i][id * l + (d - 1)] = lookup(&next);
                        }
                    }
                }
            }

            if ws.packets() < k as u32 {
                for i in 0..n {
                    if ws.slots[i] == 0 {
                        for d in 1..=l {
                            let mut next = ws.clone();
                            next.slots[i] = d as u8;
                            arrive_slot_tbl[i][id * l + (d - 1)] = lookup(&next);
                        }
                    } else if compressed {
                        let mut next = ws.clone();
                        next.queues[i].push(0);
                        arrive_queue_tbl[i][id] = lookup(&next);
                    } else {
                        for d in 1..=l {
                            let mut next = ws.clone();
                            next.queues[i].push(d as u8);
                            arrive_slot_tbl[i][id * l + (d - 1)] = lookup(&next);
                        }
                    }
                }
            }
        }

        Ok(Engine {
            n,
            l,
            k,
            compressed,
            states,
            packets,
            shift_tbl,
            promote_fires,
            promote_tbl,
            arrive_slot_tbl,
            arrive_queue_tbl,
        })
    }

    #[cfg(test)]
    pub(crate) fn state_count(&self) -> usize {
        self.states.len()
    }

    fn ground_id(&self) -> usize {
        0
    }

    /// One full time step: shift, promote, then arrivals node by node.
    /// Coefficient-wise truncation at degree `k` is exact: every
    /// dropped branch carries only mass of degree `> k`.
    fn full_step<C: Coeff>(&self, cur: &mut Vec<C>, scratch: &mut Vec<C>) -> std::result::Result<(), ()> {
        let kk = self.k + 1;
        let count = self.states.len();

        // Shift pass (uncompressed: includes promotions).
        scratch.iter_mut().for_each(|c| *c = C::czero());
        for id in 0..count {
            let dst = self.shift_tbl[id] as usize;
            let m0 = 0usize; // departures can lower the packet count
            for d in m0..kk {
                let src = cur[id * kk + d].clone();
                if !src.is_czero() {
                    scratch[dst * kk + d].add_assign_c(&src)?;
                }
            }
        }
        std::mem::swap(cur, scratch);

        // Promotion passes (compressed only).
        if self.compressed {
            for i in 0..self.n {
                scratch.iter_mut().for_each(|c| *c = C::czero());
                for id in 0..count {
                    if self.promote_fires[i][id] {
                        for b in 0..self.l {
                            let dst = self.promote_tbl[i][id * self.l + b] as usize;
                            for d in self.packets[id] as usize..kk {
                                let mut v = cur[id * kk + d].clone();
                                if v.is_czero() {
                                    continue;
                                }
                                v.div_exact_u32(self.l as u32)?;
                                scratch[dst * kk + d].add_assign_c(&v)?;
                            }
                        }
                    } else {
                        for d in 0..kk {
                            let src = cur[id * kk + d].clone();
                            if !src.is_czero() {
                                scratch[id * kk + d].add_assign_c(&src)?;
                            }
                        }
                    }
                }
                std::mem::swap(cur, scratch);
            }
        }

        // Arrival passes.
        let l_i64 = self.l as i64;
        for i in 0..self.n {
            scratch.iter_mut().for_each(|c| *c = C::czero());
            for id in 0..count {
                let base = id * kk;
                // No-arrival branch: weight (1 - L s).
                for d in 0..kk {
                    let src = cur[base + d].clone();
                    if !src.is_czero() {
                        scratch[base + d].add_assign_c(&src)?;
                    }
                    if d + 1 < kk && !cur[base + d].is_czero() {
                        let src = cur[base + d].clone();
                        scratch[base + d + 1].add_mul_i64(&src, -l_i64)?;
                    }
                }
                // Arrival branches.
                let qt = self.arrive_queue_tbl[i][id];
                if qt != DROP {
                    // Compressed queue arrival: weight L s.
                    let dst = qt as usize;
                    for d in 0..kk - 1 {
                        let src = cur[base + d].clone();
                        if !src.is_czero() {
                            scratch[dst * kk + d + 1].add_mul_i64(&src, l_i64)?;
                        }
                    }
                }
                for b in 0..self.l {
                    let t = self.arrive_slot_tbl[i][id * self.l + b];
                    if t == DROP {
                        continue;
                    }
                    let dst = t as usize;
                    for d in 0..kk - 1 {
                        let src = cur[base + d].clone();
                        if !src.is_czero() {
                            scratch[dst * kk + d + 1].add_assign_c(&src)?;
                        }
                    }
                }
            }
            std::mem::swap(cur, scratch);
        }
        Ok(())
    }

    /// Scale factor for stored coefficients: `L^k` in compressed mode.
    fn scale(&self) -> BigInt {
        if self.compressed {
            BigInt::from(self.l).pow(self.k as u32)
        } else {
            BigInt::from(1)
        }
    }

    fn initial<C: Coeff>(&self) -> Result<Vec<C>> {
        let kk = self.k + 1;
        let mut dist = vec![C::czero(); self.states.len() * kk];
        let scale = C::from_bigint(&self.scale()).ok_or(Error::CoefficientOverflow)?;
        dist[self.ground_id() * kk] = scale;
        Ok(dist)
    }

    /// Conservation check: summed over states, coefficients must be
    /// exactly (scale, 0, ..., 0) at every step.
    fn check_conservation<C: Coeff>(&self, dist: &[C]) -> Result<()> {
        let kk = self.k + 1;
        for d in 0..kk {
            let mut sum = C::czero();
            for id in 0..self.states.len() {
                sum.add_assign_c(&dist[id * kk + d]).map_err(|_| Error::CoefficientOverflow)?;
            }
            let expect = if d == 0 { self.scale() } else { BigInt::zero() };
            if sum.to_bigint() != expect {
                return Err(Error::InvalidSpec(format!(
                    "conservation violated at degree {d}: sum {}, expected {expect}",
                    sum.to_bigint()
                )));
            }
        }
        Ok(())
    }

    /// Project per-engine-state series onto compressed symbolic states,
    /// descale, and assert integrality.
    fn project<C: Coeff>(&self, dist: &[C]) -> Result<(BTreeMap<SymbolicState, IntSeries>, u64)> {
        let kk = self.k + 1;
        let scale = self.scale();
        let mut grouped: BTreeMap<SymbolicState, IntSeries> = BTreeMap::new();
        for id in 0..self.states.len() {
            let slice = &dist[id * kk..(id + 1) * kk];
            if slice.iter().all(Coeff::is_czero) {
                continue;
            }
            let ws = Ws::decode(&self.states[id], self.n);
            let sym = ws.to_symbolic();
            let series = grouped.entry(sym).or_insert_with(|| IntSeries::zero(self.k));
            for d in 0..kk {
                series.coeffs[d] += slice[d].to_bigint();
            }
        }
        let mut max_bits = 0u64;
        for (state, series) in grouped.iter_mut() {
            for (d, c) in series.coeffs.iter_mut().enumerate() {
                let (q, r) = num_integer::Integer::div_rem(&*c, &scale);
                if !r.is_zero() {
                    return Err(Error::InvalidSpec(format!(
                        "integrality violated: state {state} degree {d} coefficient {c} not divisible by {scale}"
                    )));
                }
                *c = q;
                max_bits = max_bits.max(c.bits());
            }
            let min_deg = state.packets() as usize;
            for d in 0..min_deg.min(kk) {
                if !series.coeffs[d].is_zero() {
                    return Err(Error::InvalidSpec(format!(
                        "minimum-degree law violated: state {state} with {min_deg} packets has nonzero degree-{d} coefficient"
                    )));
                }
            }
        }
        Ok((grouped, max_bits))
    }
}

fn promote_all(ws: &mut Ws) {
    for i in 0..ws.slots.len() {
        if ws.slots[i] == 0 && !ws.queues[i].is_empty() {
            ws.slots[i] = ws.queues[i].remove(0);
            debug_assert!(ws.slots[i] >= 1);
        }
    }
}

fn validate_spec(spec: &RingSpec) -> Result<(usize, usize)> {
    if spec.protocol != Protocol::Ghp {
        return Err(Error::InvalidSpec(
            "the exact engine supports GHP only (its compression argument is GHP-specific)".into(),
        ));
    }
    if !matches!(spec.arrival, Arrival::Bernoulli { .. }) {
        return Err(Error::InvalidSpec(
            "the exact engine needs a maximum path length; geometric rings have none".into(),
        ));
    }
    Ok((spec.nodes, spec.max_path))
}

/// States reachable from the ground state carrying at most `k`
/// packets, as compressed symbolic states, via breadth-first search
/// over full time steps.
pub fn enumerate_states(spec: &RingSpec, k: usize, options: &TaylorOptions) -> Result<Vec<SymbolicState>> {
    let (n, l) = validate_spec(spec)?;
    let compressed = options.mode == EngineMode::Compressed;
    let mut seen: BTreeMap<SymbolicState, ()> = BTreeMap::new();
    let mut frontier: VecDeque<Ws> = VecDeque::new();
    let ground = Ws::ground(n);
    seen.insert(ground.to_symbolic(), ());
    frontier.push_back(ground);
    let mut interned: HashMap<Box<[u8]>, ()> = HashMap::new();
    interned.insert(Ws::ground(n).encode(), ());
    while let Some(ws) = frontier.pop_front() {
        for next in full_step_successors(&ws, n, l, k, compressed) {
            let key = next.encode();
            if interned.contains_key(&key) {
                continue;
            }
            if interned.len() >= options.state_cap {
                return Err(Error::StateCapExceeded { count: interned.len() + 1, cap: options.state_cap });
            }
            interned.insert(key, ());
            seen.insert(next.to_symbolic(), ());
            frontier.push_back(next);
        }
    }
    Ok(seen.into_keys().collect())
}

/// All states reachable in one full step (branch targets only, no
/// weights).
fn full_step_successors(ws: &Ws, n: usize, l: usize, k: usize, compressed: bool) -> Vec<Ws> {
    let shifted = ws.shift();
    // Promotion combinations.
    let mut after_promote: Vec<Ws> = vec![shifted];
    if compressed {
        for i in 0..n {
            let mut next_set = Vec::new();
            for st in &after_promote {
                if st.slots[i] == 0 && !st.queues[i].is_empty() {
                    for d in 1..=l as u8 {
                        let mut nx = st.clone();
                        nx.queues[i].pop();
                        nx.slots[i] = d;
                        next_set.push(nx);
                    }
                } else {
                    next_set.push(st.clone());
                }
            }
            after_promote = next_set;
        }
    } else {
        promote_all(&mut after_promote[0]);
    }
    // Arrival combinations.
    let mut results = after_promote;
    for i in 0..n {
        let mut next_set = Vec::new();
        for st in &results {
            next_set.push(st.clone()); // no arrival
            if st.packets() >= k as u32 {
                continue;
            }
            if st.slots[i] == 0 {
                for d in 1..=l as u8 {
                    let mut nx = st.clone();
                    nx.slots[i] = d;
                    next_set.push(nx);
                }
            } else if compressed {
                let mut nx = st.clone();
                nx.queues[i].push(0);
                next_set.push(nx);
            } else {
                for d in 1..=l as u8 {
                    let mut nx = st.clone();
                    nx.queues[i].push(d);
                    next_set.push(nx);
                }
            }
        }
        results = next_set;
    }
    results
}

/// One-step successor distribution of a compressed measurement state
/// at a concrete rational arrival probability, exactly. Used by the
/// balance checker: every transition weight is rational (`1/L`
/// promotion reveals, `p/L` slot arrivals), so residuals carry no
/// float noise.
pub(crate) fn compressed_step_distribution(
    state: &SymbolicState,
    l: usize,
    p: &num_rational::BigRational,
) -> Vec<(SymbolicState, num_rational::BigRational)> {
    use num_rational::BigRational;
    let n = state.nodes.len();
    let one = BigRational::from_integer(BigInt::from(1));
    let l_rat = BigRational::from_integer(BigInt::from(l as i64));
    let ws = Ws::from_symbolic(state);
    let shifted = ws.shift();
    let mut outcomes: Vec<(Ws, BigRational)> = vec![(shifted, one.clone())];
    // Promotions: revealed distance uniform over 1..=L.
    for i in 0..n {
        let mut next = Vec::new();
        for (st, w) in &outcomes {
            if st.slots[i] == 0 && !st.queues[i].is_empty() {
                for d in 1..=l as u8 {
                    let mut nx = st.clone();
                    nx.queues[i].pop();
                    nx.slots[i] = d;
                    next.push((nx, w / &l_rat));
                }
            } else {
                next.push((st.clone(), w.clone()));
            }
        }
        outcomes = next;
    }
    // Arrivals.
    for i in 0..n {
        let mut next = Vec::new();
        for (st, w) in &outcomes {
            next.push((st.clone(), w * (&one - p)));
            if st.slots[i] == 0 {
                for d in 1..=l as u8 {
                    let mut nx = st.clone();
                    nx.slots[i] = d;
                    next.push((nx, w * p / &l_rat));
                }
            } else {
                let mut nx = st.clone();
                nx.queues[i].push(0);
                next.push((nx, w * p));
            }
        }
        outcomes = next;
    }
    let mut merged: HashMap<SymbolicState, num_rational::BigRational> = HashMap::new();
    for (st, w) in outcomes {
        use num_traits::Zero;
        *merged.entry(st.to_symbolic()).or_insert_with(BigRational::zero) += w;
    }
    merged.into_iter().collect()
}

enum RunLength {
    Fixed(u64),
    UntilConverged,
}

fn run_engine(spec: &RingSpec, k: usize, options: &TaylorOptions, run: RunLength) -> Result<StateDist> {
    let (n, l) = validate_spec(spec)?;
    let compressed = options.mode == EngineMode::Compressed;
    let engine = Engine::build(n, l, k, compressed, options.state_cap)?;
    match drive::<i128>(&engine, &run, options) {
        Err(Error::CoefficientOverflow) => {}
        other => return finish(other, spec, k, options),
    }
    // i128 overflowed; redo in exact big integers.
    finish(drive::<BigInt>(&engine, &run, options), spec, k, options)
}

fn finish(
    result: Result<(BTreeMap<SymbolicState, IntSeries>, u64, u64, bool)>,
    spec: &RingSpec,
    k: usize,
    options: &TaylorOptions,
) -> Result<StateDist> {
    let (map, max_coeff_bits, steps_run, converged) = result?;
    Ok(StateDist {
        k,
        spec: *spec,
        mode: options.mode,
        steps_run,
        converged,
        max_coeff_bits,
        map,
    })
}

fn drive<C: Coeff>(
    engine: &Engine,
    run: &RunLength,
    options: &TaylorOptions,
) -> Result<(BTreeMap<SymbolicState, IntSeries>, u64, u64, bool)> {
    let mut cur: Vec<C> = engine.initial()?;
    let mut scratch: Vec<C> = vec![C::czero(); cur.len()];
    match run {
        RunLength::Fixed(steps) => {
            for _ in 0..*steps {
                engine.full_step(&mut cur, &mut scratch).map_err(|_| Error::CoefficientOverflow)?;
                engine.check_conservation(&cur)?;
            }
            let (map, bits) = engine.project(&cur)?;
            Ok((map, bits, *steps, false))
        }
        RunLength::UntilConverged => {
            // Window: no coefficient of degree <= k may change for
            // W = (k+1)(L+N) consecutive steps; then keep running to
            // 4W total quiet steps and treat any late change as an
            // engine bug.
            let w = ((engine.k + 1) * (engine.l + engine.n)) as u64;
            let max_steps = options.max_steps.unwrap_or(64 * w + 16);
            let mut snapshot = cur.clone();
            let mut last_change = 0u64;
            let mut declared: Option<u64> = None;
            let mut t = 0u64;
            loop {
                t += 1;
                engine.full_step(&mut cur, &mut scratch).map_err(|_| Error::CoefficientOverflow)?;
                engine.check_conservation(&cur)?;
                if cur != snapshot {
                    if let Some(at) = declared {
                        return Err(Error::ConvergenceViolated { declared_at: at });
                    }
                    snapshot.clone_from(&cur);
                    last_change = t;
                }
                if declared.is_none() && t - last_change >= w {
                    declared = Some(t);
                }
                if declared.is_some() && t - last_change >= 4 * w {
                    break;
                }
                if t >= max_steps {
                    return Err(Error::NoConvergence { k: engine.k, max_steps });
                }
            }
            let (map, bits) = engine.project(&cur)?;
            Ok((map, bits, t, true))
        }
    }
}

/// Exact distribution series after `steps` steps from the ground
/// state.
pub fn propagate(spec: &RingSpec, k: usize, steps: u64, options: &TaylorOptions) -> Result<StateDist> {
    run_engine(spec, k, options, RunLength::Fixed(steps))
}

/// Run until every Taylor coefficient of degree at most `k` has
/// converged. The result carries the converged stationary expansion.
pub fn stationary_series(spec: &RingSpec, k: usize, options: &TaylorOptions) -> Result<StateDist> {
    run_engine(spec, k, options, RunLength::UntilConverged)
}
