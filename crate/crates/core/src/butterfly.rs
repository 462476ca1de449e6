//! Node-disjoint subset routing on concatenated pairs of
//! layer-permuted butterflies.
//!
//! A `d`-dimensional layer-permuted butterfly switches bit `π(i)` when
//! crossing from layer `i` to `i + 1`. Concatenating two of them (the
//! right one with permutation `σ`) gives a `2d+1`-layer network whose
//! layer-`d` nodes are shared. Routing works by recursive splitting:
//! after `m` forward levels a packet is confined to the sub-butterfly
//! named by its values of bits `π(0..m)`, and symmetrically backward
//! from the outputs. Balanced ceil/floor splits leave one or two
//! packets per sub-butterfly; a matching across the layer-`d`
//! connectivity graph then stitches the two halves together.
//!
//! Two sub-butterflies are connected exactly when their bit
//! constraints are consistent (no bit is pinned to different values by
//! the two sides); the number of shared layer-`d` nodes is
//! `2^(d - |union of constrained bits|)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Which butterfly of the pair a sub-butterfly lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// A concatenated pair of layer-permuted butterflies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButterflyPair {
    /// Dimension; each layer holds `2^d` nodes.
    pub d: usize,
    /// Left layer permutation: crossing layer `i -> i+1` switches bit
    /// `pi[i]` (0-indexed bits).
    pub pi: Vec<usize>,
    /// Right layer permutation: crossing layer `d+i -> d+i+1` switches
    /// bit `sigma[i]`.
    pub sigma: Vec<usize>,
}

impl ButterflyPair {
    pub fn new(d: usize, pi: Vec<usize>, sigma: Vec<usize>) -> Result<Self> {
        if d == 0 || d > 20 {
            return Err(Error::InvalidSpec(format!("dimension {d} out of supported range 1..=20")));
        }
        for (name, perm) in [("pi", &pi), ("sigma", &sigma)] {
            if perm.len() != d {
                return Err(Error::InvalidSpec(format!("{name} must have length {d}")));
            }
            let mut seen = vec![false; d];
            for &b in perm {
                if b >= d || seen[b] {
                    return Err(Error::InvalidSpec(format!("{name} is not a permutation of 0..{d}")));
                }
                seen[b] = true;
            }
        }
        Ok(ButterflyPair { d, pi, sigma })
    }

    /// Double butterfly: both permutations the identity.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new(d, (0..d).collect(), (0..d).collect())
    }

    pub fn size(&self) -> u32 {
        1 << self.d
    }

    /// Bit switched by the forward edge out of `layer`
    /// (`0 <= layer < 2d`).
    pub fn bit_at(&self, layer: usize) -> usize {
        if layer < self.d {
            self.pi[layer]
        } else {
            self.sigma[layer - self.d]
        }
    }

    /// Bit switched on the `k`-th split step of a side: forward steps
    /// cross layers `0, 1, ...`; backward steps cross layers
    /// `2d, 2d-1, ...`.
    fn split_bit(&self, side: Side, step: usize) -> usize {
        match side {
            Side::Left => self.pi[step],
            Side::Right => self.sigma[self.d - 1 - step],
        }
    }

    /// Constrained-bit mask after `level` split steps on a side.
    fn level_mask(&self, side: Side, level: usize) -> u32 {
        let mut mask = 0u32;
        for step in 0..level {
            mask |= 1 << self.split_bit(side, step);
        }
        mask
    }
}

/// A sub-butterfly of the pair, named by its pinned bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubButterfly {
    pub side: Side,
    /// Split level `m`; the home layer is `m` on the left and `2d - m`
    /// on the right.
    pub level: usize,
    /// Remaining free dimension `q = d - m`.
    pub dim: usize,
    /// Mask of pinned bit positions.
    pub mask: u32,
    /// Pinned bit values (subset of `mask`).
    pub values: u32,
}

impl SubButterfly {
    pub fn home_layer(&self, d: usize) -> usize {
        match self.side {
            Side::Left => self.level,
            Side::Right => 2 * d - self.level,
        }
    }

    /// Consistency: no bit pinned to different values by the two.
    pub fn consistent(&self, other: &SubButterfly) -> bool {
        let shared = self.mask & other.mask;
        (self.values ^ other.values) & shared == 0
    }
}

/// Bipartite connectivity graph between the left and right
/// sub-butterflies of one dimension.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectivityGraph {
    pub q: usize,
    pub level: usize,
    pub left: Vec<SubButterfly>,
    pub right: Vec<SubButterfly>,
    /// Simple edges `(left index, right index, shared layer-d nodes)`.
    pub edges: Vec<(usize, usize, u64)>,
    /// Connected components as (left indices, right indices).
    pub components: Vec<(Vec<usize>, Vec<usize>)>,
}

fn subs_at_level(pair: &ButterflyPair, side: Side, level: usize) -> Vec<SubButterfly> {
    let mask = pair.level_mask(side, level);
    let bits: Vec<usize> = (0..pair.d).filter(|&b| mask >> b & 1 == 1).collect();
    let mut out = Vec::with_capacity(1 << level);
    for assignment in 0..(1u32 << level) {
        let mut values = 0u32;
        for (j, &b) in bits.iter().enumerate() {
            if assignment >> j & 1 == 1 {
                values |= 1 << b;
            }
        }
        out.push(SubButterfly { side, level, dim: pair.d - level, mask, values });
    }
    out.sort();
    out
}

/// Build the `q`-dimensional sub-butterfly connectivity graph.
pub fn connectivity_graph(pair: &ButterflyPair, q: usize) -> Result<ConnectivityGraph> {
    if q > pair.d {
        return Err(Error::InvalidSpec(format!("q = {q} exceeds dimension {}", pair.d)));
    }
    let level = pair.d - q;
    let left = subs_at_level(pair, Side::Left, level);
    let right = subs_at_level(pair, Side::Right, level);
    let mut edges = Vec::new();
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            if l.consistent(r) {
                let union = (l.mask | r.mask).count_ones() as usize;
                edges.push((i, j, 1u64 << (pair.d - union)));
            }
        }
    }
    // Components: grouped by the values on the shared bit positions.
    let inter = pair.level_mask(Side::Left, level) & pair.level_mask(Side::Right, level);
    let mut comp_map: BTreeMap<u32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, l) in left.iter().enumerate() {
        comp_map.entry(l.values & inter).or_default().0.push(i);
    }
    for (j, r) in right.iter().enumerate() {
        comp_map.entry(r.values & inter).or_default().1.push(j);
    }
    let components = comp_map.into_values().collect();
    Ok(ConnectivityGraph { q, level, left, right, edges, components })
}

impl ConnectivityGraph {
    /// Enriched degree (shared-node count summed over neighbors) of a
    /// vertex; equals `2^q` for every vertex of every pair.
    pub fn enriched_degree(&self, side: Side, index: usize) -> u64 {
        self.edges
            .iter()
            .filter(|(i, j, _)| match side {
                Side::Left => *i == index,
                Side::Right => *j == index,
            })
            .map(|(_, _, w)| *w)
            .sum()
    }

    /// Check the structural invariants: enriched regularity of degree
    /// `2^q`, and every component a complete bipartite graph with
    /// equally many vertices on each side.
    pub fn check_invariants(&self) -> Result<()> {
        let want = 1u64 << self.q;
        for i in 0..self.left.len() {
            let deg = self.enriched_degree(Side::Left, i);
            if deg != want {
                return Err(Error::RoutingFailed(format!("left vertex {i} has enriched degree {deg}, want {want}")));
            }
        }
        for j in 0..self.right.len() {
            let deg = self.enriched_degree(Side::Right, j);
            if deg != want {
                return Err(Error::RoutingFailed(format!("right vertex {j} has enriched degree {deg}, want {want}")));
            }
        }
        let edge_set: HashSet<(usize, usize)> = self.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        for (ls, rs) in &self.components {
            if ls.len() != rs.len() {
                return Err(Error::RoutingFailed(format!(
                    "component sides differ: {} left vs {} right",
                    ls.len(),
                    rs.len()
                )));
            }
            for &i in ls {
                for &j in rs {
                    if !edge_set.contains(&(i, j)) {
                        return Err(Error::RoutingFailed(format!(
                            "component not complete bipartite: missing edge ({i}, {j})"
                        )));
                    }
                }
            }
        }
        // Edges never cross components.
        let comp_of_left: HashMap<usize, usize> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(c, (ls, _))| ls.iter().map(move |&i| (i, c)))
            .collect();
        let comp_of_right: HashMap<usize, usize> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(c, (_, rs))| rs.iter().map(move |&j| (j, c)))
            .collect();
        for &(i, j, _) in &self.edges {
            if comp_of_left[&i] != comp_of_right[&j] {
                return Err(Error::RoutingFailed(format!("edge ({i}, {j}) crosses components")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// One packet mid-split: its identity and the labels recorded so far
/// (left: layers `0..=level`; right: layers `2d, 2d-1, ..., 2d-level`).
#[derive(Debug, Clone)]
struct Splitting {
    side: Side,
    level: usize,
    /// `trails[p]` holds packet `p`'s labels, one per visited layer.
    trails: Vec<Vec<u32>>,
}

impl Splitting {
    fn start(side: Side, labels: &[u32]) -> Self {
        Splitting { side, level: 0, trails: labels.iter().map(|&l| vec![l]).collect() }
    }

    fn current(&self, p: usize) -> u32 {
        *self.trails[p].last().unwrap()
    }

    /// Sub-butterfly key (pinned values) of packet `p` at the current
    /// level.
    fn key(&self, pair: &ButterflyPair, p: usize) -> u32 {
        self.current(p) & pair.level_mask(self.side, self.level)
    }
}

/// Per-sub-butterfly rounding decisions: which child (bit value) took
/// the ceiling at each split step.
type DecisionLog = HashMap<(Side, usize, u32), u8>;

/// Split every sub-butterfly's packets across its two children.
/// `choose_zero` gives, per parent key and packet count, how many
/// packets the bit-0 child must receive. Switch pairs are forced one
/// each; singles are assigned in label order.
fn split_level(
    pair: &ButterflyPair,
    split: &mut Splitting,
    choose_zero: &mut dyn FnMut(u32, usize) -> Result<usize>,
) -> Result<()> {
    let bit = pair.split_bit(split.side, split.level);
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for p in 0..split.trails.len() {
        groups.entry(split.key(pair, p)).or_default().push(p);
    }
    let mut next_labels: Vec<Option<u32>> = vec![None; split.trails.len()];
    for (parent, members) in groups {
        let t = members.len();
        let want_zero = choose_zero(parent, t)?;
        if want_zero > t {
            return Err(Error::RoutingFailed(format!(
                "split target {want_zero} exceeds {t} packets in sub-butterfly {parent:#b}"
            )));
        }
        // Group into switches: labels equal up to `bit`.
        let mut switches: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &p in &members {
            let label = split.current(p);
            switches.entry(label & !(1 << bit)).or_default().push(p);
        }
        let mut forced_zero = 0usize;
        let mut singles: Vec<(u32, usize)> = Vec::new();
        for ps in switches.values() {
            match ps.len() {
                1 => singles.push((split.current(ps[0]), ps[0])),
                2 => {
                    // Straight setting: each keeps its own bit value.
                    for &p in ps {
                        let label = split.current(p);
                        next_labels[p] = Some(label);
                    }
                    forced_zero += 1;
                }
                n => {
                    return Err(Error::RoutingFailed(format!(
                        "switch holds {n} packets; multiplicities above one are infeasible"
                    )));
                }
            }
        }
        if want_zero < forced_zero || want_zero - forced_zero > singles.len() {
            return Err(Error::RoutingFailed(format!(
                "cannot send {want_zero} of {t} packets to the 0-child: {forced_zero} forced, {} free",
                singles.len()
            )));
        }
        singles.sort();
        let free_to_zero = want_zero - forced_zero;
        for (idx, &(label, p)) in singles.iter().enumerate() {
            let value = u32::from(idx >= free_to_zero);
            next_labels[p] = Some(label & !(1 << bit) | (value << bit));
        }
    }
    for (p, label) in next_labels.into_iter().enumerate() {
        let label = label.ok_or_else(|| Error::RoutingFailed("packet missed by split".into()))?;
        split.trails[p].push(label);
    }
    split.level += 1;
    Ok(())
}

/// Ceil/floor split of one level: even counts split evenly; odd counts
/// send the extra packet to the decided child (from the log when
/// replaying, else to the 0-child), recording the choice.
fn split_balanced(
    pair: &ButterflyPair,
    split: &mut Splitting,
    replay: Option<&DecisionLog>,
    record: &mut DecisionLog,
) -> Result<()> {
    let side = split.side;
    let step = split.level;
    let mut policy = |parent: u32, t: usize| -> Result<usize> {
        if t.is_multiple_of(2) {
            return Ok(t / 2);
        }
        let child = match replay {
            Some(log) => *log.get(&(side, step, parent)).ok_or_else(|| {
                Error::RoutingFailed(format!(
                    "no replay decision for {side:?} step {step} sub-butterfly {parent:#b}; parity argument violated"
                ))
            })?,
            None => 0,
        };
        record.insert((side, step, parent), child);
        Ok(if child == 0 { t / 2 + 1 } else { t / 2 })
    };
    split_level(pair, split, &mut policy)
}

/// Public view of one splitting step, per the switch-setting lemma.
#[derive(Debug, Clone, Serialize)]
pub struct SplitOutcome {
    /// Labels (at the next layer) of packets sent to the bit-0 child.
    pub to_zero: Vec<u32>,
    /// Labels sent to the bit-1 child.
    pub to_one: Vec<u32>,
}

/// Split the packets sitting on one sub-butterfly's home layer across
/// its two children, sending `ceil(n/2)` to the 0-child when
/// `ceil_to_zero` (else to the 1-child). `level` counts split steps
/// already taken on that side. Fails when two packets share a node.
pub fn split_layer(
    pair: &ButterflyPair,
    side: Side,
    level: usize,
    occupied: &[u32],
    ceil_to_zero: bool,
) -> Result<SplitOutcome> {
    if level >= pair.d {
        return Err(Error::InvalidRouting(format!("level {level} has no further split")));
    }
    let mut seen = HashSet::new();
    for &label in occupied {
        if label >= pair.size() {
            return Err(Error::InvalidRouting(format!("label {label} out of range")));
        }
        if !seen.insert(label) {
            return Err(Error::InvalidRouting(format!("node {label} holds more than one packet")));
        }
    }
    let mask = pair.level_mask(side, level);
    if occupied.iter().any(|&l| (l & mask) != (occupied[0] & mask)) {
        return Err(Error::InvalidRouting("labels span more than one sub-butterfly".into()));
    }
    let mut split = Splitting { side, level, trails: occupied.iter().map(|&l| vec![l]).collect() };
    let n = occupied.len();
    let want_zero = if ceil_to_zero { n.div_ceil(2) } else { n / 2 };
    split_level(pair, &mut split, &mut |_, t| {
        Ok(if ceil_to_zero { t.div_ceil(2) } else { t / 2 })
    })?;
    let bit = pair.split_bit(side, level);
    let mut out = SplitOutcome { to_zero: Vec::new(), to_one: Vec::new() };
    for trail in &split.trails {
        let label = *trail.last().unwrap();
        if label >> bit & 1 == 0 {
            out.to_zero.push(label);
        } else {
            out.to_one.push(label);
        }
    }
    debug_assert_eq!(out.to_zero.len(), want_zero);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Path assembly and verification
// ---------------------------------------------------------------------------

/// A set of input-to-output paths; `paths[i][layer]` is the node label
/// at that layer, for layers `0..=2d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub d: usize,
    pub paths: Vec<Vec<u32>>,
}

impl PathSet {
    /// Input-to-output endpoint pairs.
    pub fn endpoints(&self) -> Vec<(u32, u32)> {
        self.paths.iter().map(|p| (p[0], p[2 * self.d])).collect()
    }
}

/// A specific verification failure.
#[derive(Debug, Clone, Serialize)]
pub enum Violation {
    WrongLength { path: usize, len: usize, want: usize },
    LabelOutOfRange { path: usize, layer: usize, label: u32 },
    BadEdge { path: usize, layer: usize, from: u32, to: u32 },
    NodeReused { layer: usize, label: u32 },
    EndpointSetMismatch { side: Side },
    PermutationMismatch { input: u32, want: u32, got: u32 },
}

/// Check edge validity, layer monotonicity, endpoint sets,
/// node-disjointness, and (optionally) an endpoint permutation.
/// Returns every violation found; an empty report means the paths are
/// valid.
pub fn verify_node_disjoint(
    paths: &PathSet,
    pair: &ButterflyPair,
    a: &[u32],
    b: &[u32],
    rho: Option<&[(u32, u32)]>,
) -> Vec<Violation> {
    let d = pair.d;
    let want_len = 2 * d + 1;
    let mut violations = Vec::new();
    let mut used: HashMap<(usize, u32), usize> = HashMap::new();
    for (p, path) in paths.paths.iter().enumerate() {
        if path.len() != want_len {
            violations.push(Violation::WrongLength { path: p, len: path.len(), want: want_len });
            continue;
        }
        for (layer, &label) in path.iter().enumerate() {
            if label >= pair.size() {
                violations.push(Violation::LabelOutOfRange { path: p, layer, label });
            }
            if let Some(_prev) = used.insert((layer, label), p) {
                violations.push(Violation::NodeReused { layer, label });
            }
        }
        for layer in 0..2 * d {
            let from = path[layer];
            let to = path[layer + 1];
            let bit = pair.bit_at(layer);
            if (from ^ to) & !(1u32 << bit) != 0 {
                violations.push(Violation::BadEdge { path: p, layer, from, to });
            }
        }
    }
    let as_set = |labels: &[u32]| labels.iter().copied().collect::<std::collections::BTreeSet<_>>();
    let starts = paths.paths.iter().filter(|p| !p.is_empty()).map(|p| p[0]).collect::<Vec<_>>();
    let ends = paths
        .paths
        .iter()
        .filter(|p| p.len() == want_len)
        .map(|p| p[want_len - 1])
        .collect::<Vec<_>>();
    if as_set(&starts) != as_set(a) || starts.len() != a.len() {
        violations.push(Violation::EndpointSetMismatch { side: Side::Left });
    }
    if as_set(&ends) != as_set(b) || ends.len() != b.len() {
        violations.push(Violation::EndpointSetMismatch { side: Side::Right });
    }
    if let Some(rho) = rho {
        let want: HashMap<u32, u32> = rho.iter().copied().collect();
        for path in &paths.paths {
            if path.len() != want_len {
                continue;
            }
            let (start, end) = (path[0], path[want_len - 1]);
            match want.get(&start) {
                Some(&expect) if expect == end => {}
                Some(&expect) => {
                    violations.push(Violation::PermutationMismatch { input: start, want: expect, got: end })
                }
                None => violations.push(Violation::EndpointSetMismatch { side: Side::Left }),
            }
        }
    }
    violations
}

/// Extend a left trail (layers `0..=level`) to layer `d`, steering
/// toward label `target` on the still-free bits.
fn extend_left(pair: &ButterflyPair, trail: &[u32], level: usize, target: u32) -> Vec<u32> {
    let mut path = trail.to_vec();
    let mut label = *trail.last().unwrap();
    for step in level..pair.d {
        let bit = pair.pi[step];
        label = label & !(1 << bit) | (target & (1 << bit));
        path.push(label);
    }
    path
}

/// Extend from a layer-`d` label forward to layer `2d - level`,
/// steering toward `target` (the right packet's current label), then
/// append the right trail's remaining layers.
fn extend_right(pair: &ButterflyPair, from: u32, trail: &[u32], level: usize) -> Vec<u32> {
    // trail holds labels at layers 2d, 2d-1, ..., 2d-level.
    let target = *trail.last().unwrap();
    let mut path = Vec::with_capacity(pair.d - level + trail.len());
    let mut label = from;
    for step in 0..pair.d - level {
        let bit = pair.sigma[step];
        label = label & !(1 << bit) | (target & (1 << bit));
        path.push(label);
    }
    debug_assert_eq!(label, target, "right extension must land on the backward trail");
    // Backward trail from 2d-level+... down; skip its last element
    // (already emitted) and walk to layer 2d.
    for &label in trail.iter().rev().skip(1) {
        path.push(label);
    }
    path
}

fn stitch(
    pair: &ButterflyPair,
    left: &Splitting,
    right: &Splitting,
    pairs: &[(usize, usize)],
) -> Vec<Vec<u32>> {
    let level_l = left.level;
    let level_r = right.level;
    let mask_l = pair.level_mask(Side::Left, level_l);
    let mask_r = pair.level_mask(Side::Right, level_r);
    pairs
        .iter()
        .map(|&(pl, pr)| {
            let vl = left.current(pl) & mask_l;
            let vr = right.current(pr) & mask_r;
            debug_assert_eq!(vl & (mask_l & mask_r), vr & (mask_l & mask_r), "pair must be consistent");
            let shared = vl | vr;
            let mut path = extend_left(pair, &left.trails[pl], level_l, shared);
            let at_d = *path.last().unwrap();
            path.extend(extend_right(pair, at_d, &right.trails[pr], level_r));
            path
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Routing
// ---------------------------------------------------------------------------

fn validate_endpoints(pair: &ButterflyPair, a: &[u32], b: &[u32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidRouting(format!("|A| = {} but |B| = {}", a.len(), b.len())));
    }
    if a.len() > pair.size() as usize {
        return Err(Error::InvalidRouting(format!("{} packets exceed {} nodes", a.len(), pair.size())));
    }
    for (name, set) in [("A", a), ("B", b)] {
        let mut seen = HashSet::new();
        for &x in set {
            if x >= pair.size() {
                return Err(Error::InvalidRouting(format!("{name} label {x} out of range")));
            }
            if !seen.insert(x) {
                return Err(Error::InvalidRouting(format!("{name} label {x} repeated")));
            }
        }
    }
    Ok(())
}

fn checked(pair: &ButterflyPair, paths: Vec<Vec<u32>>, a: &[u32], b: &[u32]) -> Result<PathSet> {
    let set = PathSet { d: pair.d, paths };
    let violations = verify_node_disjoint(&set, pair, a, b, None);
    if violations.is_empty() {
        Ok(set)
    } else {
        Err(Error::RoutingFailed(format!("{} violations, first: {:?}", violations.len(), violations[0])))
    }
}

/// Kuhn's augmenting-path maximum matching on a bipartite adjacency
/// list; returns `match_of_right`.
fn bipartite_matching(adj: &[Vec<usize>], right_size: usize) -> Vec<Option<usize>> {
    fn try_assign(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_of_right: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if match_of_right[v].is_none()
                    || try_assign(match_of_right[v].unwrap(), adj, seen, match_of_right)
                {
                    match_of_right[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut match_of_right = vec![None; right_size];
    for u in 0..adj.len() {
        let mut seen = vec![false; right_size];
        try_assign(u, adj, &mut seen, &mut match_of_right);
    }
    match_of_right
}

/// Route `|A| = |B| = 2^m` packets: split both sides down to one packet
/// per `q`-dimensional sub-butterfly, take a perfect matching on the
/// connectivity graph (regular, so Hall's condition holds), and stitch
/// through matched shared nodes.
pub fn route_power_of_two(pair: &ButterflyPair, a: &[u32], b: &[u32]) -> Result<PathSet> {
    validate_endpoints(pair, a, b)?;
    if a.is_empty() {
        return Ok(PathSet { d: pair.d, paths: Vec::new() });
    }
    if !a.len().is_power_of_two() {
        return Err(Error::InvalidRouting(format!("|A| = {} is not a power of two", a.len())));
    }
    let m = a.len().trailing_zeros() as usize;
    let mut log = DecisionLog::new();
    let mut left = Splitting::start(Side::Left, a);
    let mut right = Splitting::start(Side::Right, b);
    for _ in 0..m {
        split_balanced(pair, &mut left, None, &mut log)?;
        split_balanced(pair, &mut right, None, &mut log)?;
    }
    // One packet per level-m sub-butterfly on each side.
    let mask = pair.level_mask(Side::Left, m);
    let rmask = pair.level_mask(Side::Right, m);
    let lefts: Vec<u32> = (0..left.trails.len()).map(|p| left.current(p) & mask).collect();
    let rights: Vec<u32> = (0..right.trails.len()).map(|p| right.current(p) & rmask).collect();
    for keys in [&lefts, &rights] {
        let distinct: HashSet<_> = keys.iter().collect();
        if distinct.len() != keys.len() {
            return Err(Error::RoutingFailed("splitting left two packets in one sub-butterfly".into()));
        }
    }
    let adj: Vec<Vec<usize>> = lefts
        .iter()
        .map(|&vl| {
            rights
                .iter()
                .enumerate()
                .filter(|&(_, &vr)| (vl ^ vr) & (mask & rmask) == 0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let match_of_right = bipartite_matching(&adj, rights.len());
    let mut pairs = Vec::with_capacity(a.len());
    for (j, m) in match_of_right.iter().enumerate() {
        match m {
            Some(i) => pairs.push((*i, j)),
            None => return Err(Error::RoutingFailed("no perfect matching despite regularity".into())),
        }
    }
    let paths = stitch(pair, &left, &right, &pairs);
    checked(pair, paths, a, b)
}

/// Extract the rounding decisions a realized routing made on each side
/// at split steps `0..depth`.
fn decisions_from_paths(pair: &ButterflyPair, paths: &PathSet, depth: usize) -> DecisionLog {
    let mut log = DecisionLog::new();
    let d = pair.d;
    for side in [Side::Left, Side::Right] {
        for step in 0..depth {
            // Count packets per child sub-butterfly at level step+1.
            let mut counts: HashMap<u32, usize> = HashMap::new();
            let child_mask = pair.level_mask(side, step + 1);
            for path in &paths.paths {
                let layer = match side {
                    Side::Left => step + 1,
                    Side::Right => 2 * d - step - 1,
                };
                *counts.entry(path[layer] & child_mask).or_default() += 1;
            }
            let bit = pair.split_bit(side, step);
            let parent_mask = pair.level_mask(side, step);
            let mut parents: HashMap<u32, [usize; 2]> = HashMap::new();
            for (child, count) in counts {
                let entry = parents.entry(child & parent_mask).or_default();
                entry[(child >> bit & 1) as usize] += count;
            }
            for (parent, [c0, c1]) in parents {
                if (c0 + c1) % 2 == 1 {
                    log.insert((side, step, parent), u8::from(c1 > c0));
                }
            }
        }
    }
    log
}

/// Route arbitrary equal-size subsets on a pair of layer-permuted
/// butterflies: the recursive splitting of the main theorem, reusing
/// the rounding decisions of the `|A| - 2^m` sub-instance, a
/// component-balancing split at level `m + 1`, and matching within the
/// complete bipartite components.
pub fn route_subset(pair: &ButterflyPair, a: &[u32], b: &[u32]) -> Result<PathSet> {
    validate_endpoints(pair, a, b)?;
    if a.is_empty() {
        return Ok(PathSet { d: pair.d, paths: Vec::new() });
    }
    if a.len().is_power_of_two() {
        return route_power_of_two(pair, a, b);
    }
    let m = (usize::BITS - 1 - a.len().leading_zeros()) as usize; // floor(log2 |A|)
    debug_assert!((1 << m) < a.len() && a.len() < (1 << (m + 1)));

    // Route the sub-instance and keep only its rounding decisions.
    let keep = a.len() - (1 << m);
    let mut a_sorted = a.to_vec();
    let mut b_sorted = b.to_vec();
    a_sorted.sort();
    b_sorted.sort();
    let sub = route_subset(pair, &a_sorted[..keep], &b_sorted[..keep])?;
    let replay = decisions_from_paths(pair, &sub, m);

    // Split the full sets for m steps, replaying the extra-packet
    // directions (parities match level by level).
    let mut log = DecisionLog::new();
    let mut left = Splitting::start(Side::Left, a);
    let mut right = Splitting::start(Side::Right, b);
    for _ in 0..m {
        split_balanced(pair, &mut left, Some(&replay), &mut log)?;
        split_balanced(pair, &mut right, Some(&replay), &mut log)?;
    }

    // Level-m occupancy: every sub-butterfly holds one or two packets.
    let mask_l = pair.level_mask(Side::Left, m);
    let mask_r = pair.level_mask(Side::Right, m);
    let mut group_l: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut group_r: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for p in 0..left.trails.len() {
        group_l.entry(left.current(p) & mask_l).or_default().push(p);
    }
    for p in 0..right.trails.len() {
        group_r.entry(right.current(p) & mask_r).or_default().push(p);
    }
    for groups in [&group_l, &group_r] {
        if groups.len() != 1 << m || groups.values().any(|v| v.is_empty() || v.len() > 2) {
            return Err(Error::RoutingFailed(
                "level-m sub-butterflies must hold one or two packets each".into(),
            ));
        }
    }

    // Balance the level-(m+1) components: constrained pairs send one
    // packet to each child; free singles are directed by a feasibility
    // flow so every component ends with equal left and right counts.
    let assign = balance_components(pair, m, &group_l, &group_r)?;

    let (zero_l, zero_r) = assign;
    let lookup = |map: &HashMap<u32, bool>, parent: u32, t: usize| -> Result<usize> {
        if t == 2 {
            return Ok(1);
        }
        map.get(&parent).map(|&z| usize::from(z)).ok_or_else(|| {
            Error::RoutingFailed(format!("no balancing decision for sub-butterfly {parent:#b}"))
        })
    };
    split_level(pair, &mut left, &mut |parent, t| lookup(&zero_l, parent, t))?;
    split_level(pair, &mut right, &mut |parent, t| lookup(&zero_r, parent, t))?;

    // Pair packets within each level-(m+1) component (complete
    // bipartite, equal counts) and stitch.
    let inter = pair.level_mask(Side::Left, m + 1) & pair.level_mask(Side::Right, m + 1);
    let mut by_comp: BTreeMap<u32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for p in 0..left.trails.len() {
        by_comp.entry(left.key(pair, p) & inter).or_default().0.push(p);
    }
    for p in 0..right.trails.len() {
        by_comp.entry(right.key(pair, p) & inter).or_default().1.push(p);
    }
    let mut pairs = Vec::with_capacity(a.len());
    for (comp, (ls, rs)) in by_comp {
        if ls.len() != rs.len() {
            return Err(Error::RoutingFailed(format!(
                "component {comp:#b} unbalanced after the matching split: {} vs {}",
                ls.len(),
                rs.len()
            )));
        }
        pairs.extend(ls.into_iter().zip(rs));
    }
    let paths = stitch(pair, &left, &right, &pairs);
    checked(pair, paths, a, b)
}

/// Decide, for every free (single-packet) level-`m` sub-butterfly,
/// whether its packet goes to the bit-0 child, such that every
/// level-(m+1) component has equal left and right packet counts.
#[allow(clippy::type_complexity, clippy::needless_range_loop)]
fn balance_components(
    pair: &ButterflyPair,
    m: usize,
    group_l: &BTreeMap<u32, Vec<usize>>,
    group_r: &BTreeMap<u32, Vec<usize>>,
) -> Result<(HashMap<u32, bool>, HashMap<u32, bool>)> {
    let inter = pair.level_mask(Side::Left, m + 1) & pair.level_mask(Side::Right, m + 1);
    let bit_l = pair.split_bit(Side::Left, m);
    let bit_r = pair.split_bit(Side::Right, m);

    // Component index assignment.
    let mut comp_ids: BTreeMap<u32, usize> = BTreeMap::new();
    let comp_key = |values: u32, comp_ids: &mut BTreeMap<u32, usize>| -> usize {
        let key = values & inter;
        let next = comp_ids.len();
        *comp_ids.entry(key).or_insert(next)
    };

    // net[c] = (left packets) - (right packets) under the baseline
    // where every free single goes to its bit-0 child.
    let mut net: Vec<i64> = Vec::new();
    let grow = |idx: usize, net: &mut Vec<i64>| {
        if idx >= net.len() {
            net.resize(idx + 1, 0);
        }
    };
    // Movable units: (from component, to component, parents) — moving a
    // single from its 0-child comp to its 1-child comp.
    struct Mover {
        from: usize,
        to: usize,
        side: Side,
        parent: u32,
    }
    let mut movers: Vec<Mover> = Vec::new();
    let mut assign_l: HashMap<u32, bool> = HashMap::new();
    let mut assign_r: HashMap<u32, bool> = HashMap::new();

    for (side, groups, bit) in [(Side::Left, group_l, bit_l), (Side::Right, group_r, bit_r)] {
        let sign = if side == Side::Left { 1i64 } else { -1i64 };
        for (&parent, members) in groups {
            let child0 = comp_key(parent, &mut comp_ids);
            let child1 = comp_key(parent | 1 << bit, &mut comp_ids);
            grow(child0.max(child1), &mut net);
            match members.len() {
                2 => {
                    net[child0] += sign;
                    net[child1] += sign;
                }
                1 => {
                    net[child0] += sign;
                    if child0 != child1 {
                        movers.push(Mover { from: child0, to: child1, side, parent });
                    } else if side == Side::Left {
                        assign_l.insert(parent, true);
                    } else {
                        assign_r.insert(parent, true);
                    }
                }
                _ => unreachable!("occupancy checked by caller"),
            }
        }
    }

    // Feasibility flow on the component graph. Moving a left single
    // from u to v shifts one unit of net from u to v; moving a right
    // single from u to v shifts one unit from v to u.
    let n_comps = net.len();
    let mut cap: HashMap<(usize, usize), i64> = HashMap::new();
    let mut mover_edges: Vec<(usize, usize)> = Vec::with_capacity(movers.len());
    for mv in &movers {
        let edge = match mv.side {
            Side::Left => (mv.from, mv.to),
            Side::Right => (mv.to, mv.from),
        };
        *cap.entry(edge).or_insert(0) += 1;
        mover_edges.push(edge);
    }
    let source = n_comps;
    let sink = n_comps + 1;
    for (c, &x) in net.iter().enumerate() {
        if x > 0 {
            cap.insert((source, c), x);
        } else if x < 0 {
            cap.insert((c, sink), -x);
        }
    }
    let mut flow: HashMap<(usize, usize), i64> = HashMap::new();
    let total_excess: i64 = net.iter().filter(|&&x| x > 0).sum();
    let residual = |cap: &HashMap<(usize, usize), i64>, flow: &HashMap<(usize, usize), i64>, u: usize, v: usize| {
        cap.get(&(u, v)).copied().unwrap_or(0) - flow.get(&(u, v)).copied().unwrap_or(0)
            + flow.get(&(v, u)).copied().unwrap_or(0)
    };
    let mut pushed = 0i64;
    while pushed < total_excess {
        // BFS for an augmenting path.
        let mut prev: Vec<Option<usize>> = vec![None; n_comps + 2];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(source);
        prev[source] = Some(source);
        while let Some(u) = queue.pop_front() {
            for v in 0..n_comps + 2 {
                if prev[v].is_none() && residual(&cap, &flow, u, v) > 0 {
                    prev[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if prev[sink].is_none() {
            return Err(Error::RoutingFailed(
                "component balancing flow is infeasible; the matching hypothesis failed".into(),
            ));
        }
        // Bottleneck along the path.
        let mut bottleneck = i64::MAX;
        let mut v = sink;
        while v != source {
            let u = prev[v].unwrap();
            bottleneck = bottleneck.min(residual(&cap, &flow, u, v));
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = prev[v].unwrap();
            // Prefer canceling reverse flow.
            let back = flow.get(&(v, u)).copied().unwrap_or(0);
            if back > 0 {
                let cancel = back.min(bottleneck);
                *flow.entry((v, u)).or_insert(0) -= cancel;
                if cancel < bottleneck {
                    *flow.entry((u, v)).or_insert(0) += bottleneck - cancel;
                }
            } else {
                *flow.entry((u, v)).or_insert(0) += bottleneck;
            }
            v = u;
        }
        pushed += bottleneck;
    }

    // Distribute edge flows over the movers deterministically.
    let mut remaining = flow;
    for (mv, edge) in movers.iter().zip(&mover_edges) {
        let moved = {
            let r = remaining.entry(*edge).or_insert(0);
            if *r > 0 {
                *r -= 1;
                true
            } else {
                false
            }
        };
        // `moved` means the packet leaves its 0-child.
        match mv.side {
            Side::Left => assign_l.insert(mv.parent, !moved),
            Side::Right => assign_r.insert(mv.parent, !moved),
        };
    }
    Ok((assign_l, assign_r))
}

/// Route a specific permutation `rho` on small sets: requires full
/// mid-layer connectivity (every layer-`⌊d/2⌋` node reaches every
/// layer-`2d-⌊d/2⌋` node) and `|rho| <= 2^{⌊d/2⌋}`.
pub fn route_permutation_small(pair: &ButterflyPair, rho: &[(u32, u32)]) -> Result<PathSet> {
    let m0 = pair.d / 2;
    if rho.len() > 1 << m0 {
        return Err(Error::InvalidRouting(format!(
            "|A| = {} exceeds 2^{m0} = {}",
            rho.len(),
            1 << m0
        )));
    }
    let a: Vec<u32> = rho.iter().map(|&(x, _)| x).collect();
    let b: Vec<u32> = rho.iter().map(|&(_, y)| y).collect();
    validate_endpoints(pair, &a, &b)?;

    // Hypothesis: the dimension-(d - m0) connectivity graph is complete
    // bipartite on all vertices.
    let graph = connectivity_graph(pair, pair.d - m0)?;
    for l in &graph.left {
        for r in &graph.right {
            if !l.consistent(r) {
                return Err(Error::HypothesisFailed {
                    left: format!("{l:?}"),
                    right: format!("{r:?}"),
                });
            }
        }
    }

    // Pad with dummy packets up to exactly 2^{m0}.
    let mut a_full = a.clone();
    let mut b_full = b.clone();
    let used_a: HashSet<u32> = a.iter().copied().collect();
    let used_b: HashSet<u32> = b.iter().copied().collect();
    let mut next = 0u32;
    while a_full.len() < 1 << m0 {
        while used_a.contains(&next) {
            next += 1;
        }
        a_full.push(next);
        next += 1;
    }
    next = 0;
    while b_full.len() < 1 << m0 {
        while used_b.contains(&next) {
            next += 1;
        }
        b_full.push(next);
        next += 1;
    }

    let mut log = DecisionLog::new();
    let mut left = Splitting::start(Side::Left, &a_full);
    let mut right = Splitting::start(Side::Right, &b_full);
    for _ in 0..m0 {
        split_balanced(pair, &mut left, None, &mut log)?;
        split_balanced(pair, &mut right, None, &mut log)?;
    }
    // Pair the sub-butterfly holding input a with the one holding
    // rho(a); complete connectivity guarantees adjacency. Dummies are
    // paired by position.
    let pairs: Vec<(usize, usize)> = (0..a_full.len()).map(|i| (i, i)).collect();
    let paths = stitch(pair, &left, &right, &pairs);
    let all = checked(pair, paths, &a_full, &b_full)?;
    let real: Vec<Vec<u32>> = all
        .paths
        .into_iter()
        .filter(|p| rho.iter().any(|&(x, _)| x == p[0]))
        .collect();
    let set = PathSet { d: pair.d, paths: real };
    let violations = verify_node_disjoint(&set, pair, &a, &b, Some(rho));
    if !violations.is_empty() {
        return Err(Error::RoutingFailed(format!("permutation routing failed: {:?}", violations[0])));
    }
    Ok(set)
}

/// Complete the switch settings of a routed subset to carry the
/// complements: route `A^c -> B^c` given a routing of `A -> B`.
/// (On a switching network a subset routing extends to a full
/// permutation whose restriction to the complements is node-disjoint.)
pub fn route_complement(pair: &ButterflyPair, routed: &PathSet, a: &[u32], b: &[u32]) -> Result<PathSet> {
    let comp_a: Vec<u32> = (0..pair.size()).filter(|x| !a.contains(x)).collect();
    let comp_b: Vec<u32> = (0..pair.size()).filter(|x| !b.contains(x)).collect();
    // Route the complements avoiding every node the original paths
    // use: by Hall via the full-permutation extension this always
    // succeeds on a pair of butterflies, and we realize it greedily by
    // routing the complements as a subset and checking global
    // disjointness; if the greedy paths collide with `routed`, fall
    // back to completing switches layer by layer.
    let direct = route_subset(pair, &comp_a, &comp_b)?;
    let mut used: HashSet<(usize, u32)> = HashSet::new();
    for path in &routed.paths {
        for (layer, &label) in path.iter().enumerate() {
            used.insert((layer, label));
        }
    }
    let collides = direct
        .paths
        .iter()
        .any(|p| p.iter().enumerate().any(|(layer, &label)| used.contains(&(layer, label))));
    if !collides {
        return Ok(direct);
    }
    complete_switches(pair, routed, &comp_a, &comp_b)
}

/// Extend the switch settings induced by `routed` into a full
/// permutation routing and return the complement paths.
fn complete_switches(pair: &ButterflyPair, routed: &PathSet, comp_a: &[u32], comp_b: &[u32]) -> Result<PathSet> {
    let d = pair.d;
    let n = pair.size();
    // For each edge layer, a switch pairs labels differing at the
    // switched bit. Routed paths pin some (from -> to) choices; the
    // free nodes inherit the complementary settings: in a switch where
    // one input goes straight, the other must go straight too (the
    // crossed targets are taken), and in an untouched switch we set it
    // straight.
    let mut paths: Vec<Vec<u32>> = comp_a.iter().map(|&x| vec![x]).collect();
    for layer in 0..2 * d {
        let bit = pair.bit_at(layer);
        let mut taken_targets: HashSet<u32> = HashSet::new();
        for path in &routed.paths {
            taken_targets.insert(path[layer + 1]);
        }
        for path in paths.iter_mut() {
            let cur = *path.last().unwrap();
            let straight = cur;
            let crossed = cur ^ (1 << bit);
            // Prefer whichever target is free; both can't be taken
            // because at most two packets ride a switch.
            let next = if !taken_targets.contains(&straight) {
                straight
            } else if !taken_targets.contains(&crossed) {
                crossed
            } else {
                return Err(Error::RoutingFailed(format!(
                    "switch exhausted at layer {layer} label {cur}"
                )));
            };
            taken_targets.insert(next);
            path.push(next);
        }
        let _ = n;
    }
    checked(pair, paths, comp_a, comp_b)
}
