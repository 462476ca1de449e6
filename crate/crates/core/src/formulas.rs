//! Closed-form evaluators: the `L = 2` stationary distribution and its
//! moments, the discrete-time birth-death queue, the discrete-time
//! Pollaczek-Khinchin formula, Little's-law relations, Chernoff-type
//! tail bounds, the empty-slot lower bound, traffic-equation solving,
//! and a numeric Kolmogorov balance checker.
//!
//! Evaluators that feed exact comparisons accept rational inputs and
//! return exact rationals; a floating-point path is provided for
//! convenience.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ring::{Arrival, Protocol, RingSpec};
use crate::taylor::{compressed_step_distribution, NodeSym, SymbolicState};
use crate::Result;

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

// ---------------------------------------------------------------------------
// The L = 2 stationary distribution
// ---------------------------------------------------------------------------

fn check_l2_rate(p: &BigRational) -> Result<()> {
    if p < &big(0) {
        return Err(Error::OutOfDomain(format!("p = {p} < 0")));
    }
    if p >= &ratio(2, 3) {
        return Err(Error::OutOfDomain(format!("p = {p} >= 2/3: the L = 2 ring is unstable")));
    }
    Ok(())
}

/// Stationary probability that a fixed node of an `L = 2` ring holds
/// `n` packets (any of GHP, SIS, CTO, FTG, EPF; independent of `N` for
/// `N > 1`).
pub fn l2_marginal(p: &BigRational, n: u64) -> Result<BigRational> {
    check_l2_rate(p)?;
    let one = big(1);
    let head = &one - ratio(3, 2) * p; // 1 - (3/2) p
    if n == 0 {
        return Ok(head);
    }
    let denom = (&one - p) * (big(2) - p); // (1-p)(2-p)
    if n == 1 {
        return Ok(head * (big(3) * p - p * p) / denom);
    }
    let q = (p * p) / &denom; // geometric ratio p^2 / ((1-p)(2-p))
    let mut tail = big(2) / denom * q.clone();
    for _ in 2..n {
        tail *= &q;
    }
    Ok(head * tail)
}

/// Float-path version of [`l2_marginal`].
pub fn l2_marginal_f64(p: f64, n: u64) -> Result<f64> {
    let head = 1.0 - 1.5 * p;
    if !(0.0..2.0 / 3.0).contains(&p) {
        return Err(Error::OutOfDomain(format!("p = {p} outside [0, 2/3)")));
    }
    let denom = (1.0 - p) * (2.0 - p);
    Ok(match n {
        0 => head,
        1 => head * (3.0 * p - p * p) / denom,
        _ => head * 2.0 * (p * p / denom).powi(n as i32 - 1) / denom,
    })
}

/// Expected queue length and variance per node of the `L = 2` ring:
/// `E = p^2/(2-3p)`, `Var = E^2 + E`.
pub fn l2_moments(p: &BigRational) -> Result<(BigRational, BigRational)> {
    check_l2_rate(p)?;
    let e = p * p / (big(2) - big(3) * p);
    let var = &e * &e + &e;
    Ok((e, var))
}

/// Entropy of the queue-length distribution per node (nats). Zero at
/// `p = 0`, monotonically increasing, diverging at `p = 2/3`.
pub fn l2_queue_entropy(p: f64) -> Result<f64> {
    if !(0.0..2.0 / 3.0).contains(&p) {
        return Err(Error::OutOfDomain(format!("p = {p} outside [0, 2/3)")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let head = (2.0 - 3.0 * p) / ((1.0 - p) * (2.0 - p));
    let q = p * p / ((1.0 - p) * (2.0 - p));
    let eq = p * p / (2.0 - 3.0 * p);
    Ok(-head.ln() - eq * q.ln())
}

/// Per-node state of the `L = 2` GHP product form: `n` packets queued
/// and a hot potato `t` steps from home, or the empty node `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum L2Node {
    Empty,
    Queue { n: u64, t: u8 },
}

/// Stationary probability of one node state under the `L = 2` GHP
/// product form.
pub fn l2_node_prob(node: L2Node, p: &BigRational) -> Result<BigRational> {
    check_l2_rate(p)?;
    let one = big(1);
    let head = &one - ratio(3, 2) * p;
    match node {
        L2Node::Empty => Ok(head),
        L2Node::Queue { n, t } => {
            if !(t == 1 || t == 2) {
                return Err(Error::OutOfDomain(format!("hot potato distance {t} not in {{1, 2}}")));
            }
            if n == 0 && t == 1 {
                return Ok(head * p / (&one - p));
            }
            let denom = (&one - p) * (big(2) - p);
            let q = p * p / &denom;
            let mut factor = &one / &denom;
            for _ in 0..n {
                factor *= &q;
            }
            let last = if t == 1 {
                if n == 0 {
                    unreachable!("n = 0, t = 1 handled above")
                }
                big(2) - p
            } else {
                p.clone()
            };
            Ok(head * factor * last)
        }
    }
}

/// Probability of a full ring state as a product of per-node factors
/// (the `L = 2` GHP distribution is product form).
pub fn l2_state_prob(nodes: &[L2Node], p: &BigRational) -> Result<BigRational> {
    let mut acc = big(1);
    for &node in nodes {
        if let L2Node::Queue { n, t } = node {
            if t != 1 && t != 2 {
                return Err(Error::OutOfDomain(format!("invalid hot potato distance {t}")));
            }
            let _ = n;
        }
        acc *= l2_node_prob(node, p)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Birth-death queue
// ---------------------------------------------------------------------------

/// Arrival/departure parameters of the discrete-time single server
/// queue: `A = Â(1-D̂)` is the chance of a net gain, `D = D̂(1-Â)` of a
/// net loss.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueParams {
    pub arrive: BigRational,
    pub depart: BigRational,
}

impl QueueParams {
    pub fn new(arrive: BigRational, depart: BigRational) -> Result<Self> {
        if arrive < big(0) || depart > big(1) {
            return Err(Error::OutOfDomain("need 0 <= Â and D̂ <= 1".into()));
        }
        if arrive >= depart {
            return Err(Error::OutOfDomain(format!(
                "stability needs Â < D̂ (got Â = {arrive}, D̂ = {depart})"
            )));
        }
        Ok(QueueParams { arrive, depart })
    }

    pub fn from_f64(arrive: f64, depart: f64) -> Result<Self> {
        let conv = |x: f64| {
            BigRational::from_float(x).ok_or_else(|| Error::OutOfDomain(format!("non-finite rate {x}")))
        };
        Self::new(conv(arrive)?, conv(depart)?)
    }

    /// Net-gain probability `A`.
    pub fn net_gain(&self) -> BigRational {
        &self.arrive * (big(1) - &self.depart)
    }

    /// Net-loss probability `D`.
    pub fn net_loss(&self) -> BigRational {
        &self.depart * (big(1) - &self.arrive)
    }
}

/// Which instant the queue is observed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// After new packets have arrived, before old ones depart.
    AfterArrivals,
    /// After departures, before new arrivals.
    AfterDepartures,
}

/// Stationary distribution and expected queue length of the
/// discrete-time birth-death queue. [`BirthDeath::prob`] is the
/// distribution of packets *at* the node; `expected_queue` counts only
/// the waiting ones, i.e. `Σ (n-1)⁺ Pr[n packets]`.
#[derive(Debug, Clone)]
pub struct BirthDeath {
    params: QueueParams,
    pub measure: Measure,
    pub expected_queue: BigRational,
}

pub fn birth_death(params: QueueParams, measure: Measure) -> BirthDeath {
    let a_hat = &params.arrive;
    let d_hat = &params.depart;
    let a = params.net_gain();
    let d = params.net_loss();
    let expected_queue = match measure {
        // A Â (1 - Â) / (D (D - A)) = Â² (1-D̂) / (D̂ (D̂-Â))
        Measure::AfterArrivals => a_hat * a_hat * (big(1) - d_hat) / (d_hat * (d_hat - a_hat)),
        Measure::AfterDepartures => &a * &a / (&d * (&d - &a)),
    };
    BirthDeath { params, measure, expected_queue }
}

impl BirthDeath {
    /// Stationary probability of holding `n` packets.
    pub fn prob(&self, n: u64) -> BigRational {
        let a_hat = &self.params.arrive;
        let d_hat = &self.params.depart;
        let a = self.params.net_gain();
        let d = self.params.net_loss();
        let pow = |base: &BigRational, e: u64| {
            let mut acc = big(1);
            for _ in 0..e {
                acc *= base;
            }
            acc
        };
        match self.measure {
            Measure::AfterArrivals => match n {
                0 => (d_hat - a_hat) / d_hat,
                1 => (d_hat - a_hat) / d_hat * a_hat / &d,
                _ => pow(&(&a / &d), n - 1) * (a_hat / d_hat) * ((&d - &a) / &d),
            },
            Measure::AfterDepartures => pow(&(&a / &d), n) * ((&d - &a) / &d),
        }
    }

    /// Total mass of all states above `n`, in closed form (the tail is
    /// geometric with ratio `A/D`).
    pub fn tail_mass(&self, n: u64) -> BigRational {
        let a = self.params.net_gain();
        let d = self.params.net_loss();
        let r = &a / &d;
        // tail(n) = sum_{m > n} prob(m) = prob(n+1) / (1 - r)
        self.prob(n + 1) / (big(1) - r)
    }
}

// ---------------------------------------------------------------------------
// Pollaczek-Khinchin, Little relations, Chernoff bounds, empty-slot bound
// ---------------------------------------------------------------------------

/// Discrete-time Pollaczek-Khinchin expected queue length for
/// Bernoulli(λ) arrivals and service-time moments `E[Z]`, `E[Z²]`:
/// `λ² (E[Z²] - E[Z]) / (2 (1 - λ E[Z]))`.
pub fn pk_queue(lambda: &BigRational, ez: &BigRational, ez2: &BigRational) -> Result<BigRational> {
    if lambda < &big(0) || ez < &big(1) || ez2 < ez {
        return Err(Error::OutOfDomain("need λ >= 0 and E[Z²] >= E[Z] >= 1".into()));
    }
    let util = lambda * ez;
    if util >= big(1) {
        return Err(Error::OutOfDomain(format!("saturated: λ E[Z] = {util} >= 1")));
    }
    Ok(lambda * lambda * (ez2 - ez) / (big(2) * (big(1) - util)))
}

/// [`pk_queue`] specialized to the one-node ring with path lengths
/// uniform on `1..=L`, written as a function of the nominal load
/// `r = (L+1) p / 2`. Equals `(L-1)/(L+1) * 2 r² / (3 (1-r))`.
pub fn pk_one_node_ring(l: u64, r: &BigRational) -> Result<BigRational> {
    if l < 1 {
        return Err(Error::OutOfDomain("need L >= 1".into()));
    }
    let li = l as i64;
    let p = big(2) * r / big(li + 1);
    let ez = ratio(li + 1, 2);
    let ez2 = ratio((2 * li + 1) * (li + 1), 6);
    pk_queue(&p, &ez, &ez2)
}

/// Little's-law consequences for a node with nominal load `r`: the
/// idle probability `1 - r`, and total packets `E[queue] + r`.
pub fn little_relations(r: &BigRational, expected_queue: &BigRational) -> Result<(BigRational, BigRational)> {
    if r < &big(0) || r >= &big(1) {
        return Err(Error::OutOfDomain(format!("nominal load r = {r} outside [0, 1)")));
    }
    Ok((big(1) - r, expected_queue + r))
}

/// Which side of the mean a Chernoff-type bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    /// `Pr[X >= β P]` for `β > 1`.
    Upper,
    /// `Pr[X <= β P]` for `0 < β < 1`.
    Lower,
}

/// Exponential bound on sums of independent Bernoulli variables with
/// mean sum `P`: exponent `(1 - 1/β - ln β) β P` for the upper tail,
/// `(1 - 1/β + ln β) β P` for the lower tail. Returns `(exponent,
/// e^exponent)`; the exponent is strictly negative on the valid range.
pub fn chernoff_bound(beta: f64, p_sum: f64, side: TailSide) -> Result<(f64, f64)> {
    if p_sum <= 0.0 {
        return Err(Error::OutOfDomain(format!("P = {p_sum} must be positive")));
    }
    let exponent = match side {
        TailSide::Upper => {
            if beta <= 1.0 {
                return Err(Error::OutOfDomain(format!("upper bound needs β > 1 (got {beta})")));
            }
            (1.0 - 1.0 / beta - beta.ln()) * beta * p_sum
        }
        TailSide::Lower => {
            if beta <= 0.0 || beta >= 1.0 {
                return Err(Error::OutOfDomain(format!("lower bound needs 0 < β < 1 (got {beta})")));
            }
            (1.0 - 1.0 / beta + beta.ln()) * beta * p_sum
        }
    };
    Ok((exponent, exponent.exp()))
}

/// The empty-slot lower bound of the `r > 1/2` stability argument.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmptySlotBound {
    /// Joint probability `J = A(A+B)C(C+D)(1-e^{-2rB})(1-e^{-2rD})`.
    pub gain: f64,
    /// `N`-independent bracket `1 - δ + J (1/(A+B+C+D) - 1)`; the
    /// bound itself is `bracket / N`.
    pub bracket: f64,
}

/// Lower bound on the probability that an empty slot arrives at a
/// fixed node, for segment fractions `a, b, c, d` and nominal load
/// `r`. The caller divides [`EmptySlotBound::bracket`] by `N`.
pub fn empty_slot_bound(a: f64, b: f64, c: f64, d: f64, r: f64, delta: f64) -> Result<EmptySlotBound> {
    for (name, v) in [("A", a), ("B", b), ("C", c), ("D", d), ("A+B+C+D", a + b + c + d)] {
        if !(0.0 < v && v < 1.0) {
            return Err(Error::OutOfDomain(format!("{name} = {v} outside (0, 1)")));
        }
    }
    let gain = a * (a + b) * c * (c + d) * (1.0 - (-2.0 * r * b).exp()) * (1.0 - (-2.0 * r * d).exp());
    let bracket = 1.0 - delta + gain * (1.0 / (a + b + c + d) - 1.0);
    Ok(EmptySlotBound { gain, bracket })
}

// ---------------------------------------------------------------------------
// Traffic equations
// ---------------------------------------------------------------------------

/// Open multiclass traffic model: exogenous rates `α`, class-transition
/// matrix `P`, service rates `μ`, and a class → node constituency map.
#[derive(Debug, Clone)]
pub struct TrafficModel {
    pub alpha: Vec<BigRational>,
    /// `routing[k][l]` is the probability that a class-`k` packet turns
    /// into a class-`l` packet when it leaves its node.
    pub routing: Vec<Vec<BigRational>>,
    pub mu: Vec<BigRational>,
    /// `node_of[c]` is the node class `c` lives at.
    pub node_of: Vec<usize>,
    pub nodes: usize,
}

/// Effective arrival rates and nominal loads of a [`TrafficModel`]:
/// `λ = (I - P')⁻¹ α` and `ρ_n = Σ_{c at n} λ_c / μ_c`.
#[derive(Debug, Clone)]
pub struct TrafficSolution {
    pub lambda: Vec<BigRational>,
    pub rho: Vec<BigRational>,
}

#[allow(clippy::needless_range_loop)] // elimination loops index the matrix
pub fn traffic_solve(model: &TrafficModel) -> Result<TrafficSolution> {
    let c = model.alpha.len();
    if model.routing.len() != c || model.mu.len() != c || model.node_of.len() != c {
        return Err(Error::InvalidSpec("traffic model dimensions disagree".into()));
    }
    for a in &model.alpha {
        if a < &big(0) {
            return Err(Error::InvalidSpec("negative arrival rate".into()));
        }
    }
    for row in &model.routing {
        if row.len() != c {
            return Err(Error::InvalidSpec("routing matrix not square".into()));
        }
        let mut sum = big(0);
        for x in row {
            if x < &big(0) {
                return Err(Error::InvalidSpec("negative routing probability".into()));
            }
            sum += x;
        }
        if sum > big(1) {
            return Err(Error::InvalidSpec("routing row sums above one".into()));
        }
    }
    check_transient(&model.routing)?;

    // Solve (I - P') λ = α by exact Gaussian elimination.
    let mut m: Vec<Vec<BigRational>> = (0..c)
        .map(|i| {
            (0..c)
                .map(|j| {
                    let delta = if i == j { big(1) } else { big(0) };
                    delta - &model.routing[j][i]
                })
                .collect()
        })
        .collect();
    let mut rhs = model.alpha.clone();
    for col in 0..c {
        let pivot = (col..c)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::Singular(format!("no pivot in column {col}")))?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = big(1) / m[col][col].clone();
        for j in col..c {
            m[col][j] = &m[col][j] * &inv;
        }
        rhs[col] = &rhs[col] * &inv;
        for r in 0..c {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in col..c {
                    let t = &m[col][j] * &factor;
                    m[r][j] = &m[r][j] - t;
                }
                let t = &rhs[col] * &factor;
                rhs[r] = &rhs[r] - t;
            }
        }
    }
    let lambda = rhs;

    let mut rho = vec![big(0); model.nodes];
    for (cls, lam) in lambda.iter().enumerate() {
        let node = model.node_of[cls];
        if node >= model.nodes {
            return Err(Error::InvalidSpec(format!("class {cls} mapped to unknown node {node}")));
        }
        if model.mu[cls] <= big(0) {
            return Err(Error::InvalidSpec(format!("class {cls} has nonpositive service rate")));
        }
        rho[node] += lam / &model.mu[cls];
    }
    Ok(TrafficSolution { lambda, rho })
}

/// Transience check via truncated-sum convergence: powers of `P` must
/// decay toward zero.
fn check_transient(p: &[Vec<BigRational>]) -> Result<()> {
    let c = p.len();
    let mut power: Vec<Vec<f64>> = p
        .iter()
        .map(|row| row.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    let max_entry = |m: &Vec<Vec<f64>>| m.iter().flatten().cloned().fold(0.0f64, f64::max);
    let mut last = max_entry(&power);
    // Repeated squaring: P^(2^64) must vanish. Nilpotent matrices (a
    // ring's distance-decrementing classes) hold at norm 1 and then
    // drop to exactly zero, so no early growth check.
    for _ in 0..64 {
        if last < 1e-12 {
            return Ok(());
        }
        let mut next = vec![vec![0.0; c]; c];
        #[allow(clippy::needless_range_loop)]
        for i in 0..c {
            for k in 0..c {
                if power[i][k] == 0.0 {
                    continue;
                }
                for j in 0..c {
                    next[i][j] += power[i][k] * power[k][j];
                }
            }
        }
        power = next;
        last = max_entry(&power);
        if !last.is_finite() {
            return Err(Error::NotTransient("matrix powers diverge".into()));
        }
    }
    if last < 1e-9 {
        Ok(())
    } else {
        Err(Error::NotTransient(format!("matrix powers still at {last:.3e} after 2^64 steps")))
    }
}

/// Traffic model of an `N`-node Bernoulli ring with maximum path `L`:
/// one class per (node, remaining distance).
pub fn ring_traffic_model(n: usize, l: usize, p: &BigRational) -> TrafficModel {
    let classes = n * l;
    let idx = |node: usize, dist: usize| node * l + (dist - 1);
    let mut alpha = vec![big(0); classes];
    let mut routing = vec![vec![big(0); classes]; classes];
    let mut node_of = vec![0usize; classes];
    for node in 0..n {
        for dist in 1..=l {
            let c = idx(node, dist);
            node_of[c] = node;
            alpha[c] = p / big(l as i64);
            if dist > 1 {
                routing[c][idx((node + 1) % n, dist - 1)] = big(1);
            }
        }
    }
    TrafficModel { alpha, routing, mu: vec![big(1); classes], node_of, nodes: n }
}

// ---------------------------------------------------------------------------
// Kolmogorov balance checker
// ---------------------------------------------------------------------------

/// Result of a truncated balance check. The residual and tail are
/// computed in exact rational arithmetic and reported as floats.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub states_checked: usize,
    /// Max over enumerated states of |π(x) - Σ_y p(y, x) π(y)|.
    pub max_residual: f64,
    /// Geometric tail tolerance implied by the queue cap.
    pub tail_bound: f64,
    /// Exact comparison `max_residual < tail_bound`.
    pub within_tolerance: bool,
}

/// Check a candidate stationary distribution against the Kolmogorov
/// balance equations of the compressed GHP chain, truncated at queue
/// cap `cap` per node. Predecessor sums are built by forward expansion
/// of every enumerated state; inflow from outside the cap is bounded
/// by the reported geometric tail. Everything runs in exact rational
/// arithmetic, so a correct candidate's residual is exactly the
/// truncation leakage.
pub fn balance_check(
    spec: &RingSpec,
    candidate: &dyn Fn(&SymbolicState) -> BigRational,
    cap: usize,
    p: &BigRational,
) -> Result<BalanceReport> {
    if spec.protocol != Protocol::Ghp {
        return Err(Error::InvalidSpec("balance check models the GHP chain".into()));
    }
    if !matches!(spec.arrival, Arrival::Bernoulli { .. }) {
        return Err(Error::InvalidSpec("balance check needs Bernoulli arrivals".into()));
    }
    let n = spec.nodes;
    let l = spec.max_path;
    if p <= &big(0) || p >= &big(1) {
        return Err(Error::OutOfDomain(format!("p = {p} outside (0, 1)")));
    }

    // All measurement states (queue > 0 forces an occupied slot) with
    // queues capped.
    let mut states: Vec<SymbolicState> = Vec::new();
    let mut stack: Vec<Vec<NodeSym>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == n {
            states.push(SymbolicState::from_nodes(prefix));
            continue;
        }
        let mut push = |node: NodeSym| {
            let mut next = prefix.clone();
            next.push(node);
            stack.push(next);
        };
        push(NodeSym { queued: 0, slot: None });
        for t in 1..=l as u32 {
            for q in 0..=cap as u32 {
                push(NodeSym { queued: q, slot: Some(t) });
            }
        }
    }
    states.sort();

    let mut index = std::collections::HashMap::new();
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
    }
    let pi: Vec<BigRational> = states.iter().map(candidate).collect();
    let mut inflow = vec![BigRational::zero(); states.len()];
    for (i, state) in states.iter().enumerate() {
        if pi[i].is_zero() {
            continue;
        }
        for (succ, w) in compressed_step_distribution(state, l, p) {
            if let Some(&j) = index.get(&succ) {
                inflow[j] += w * &pi[i];
            }
        }
    }
    let mut max_residual = BigRational::zero();
    for (i, _) in states.iter().enumerate() {
        let residual = (&pi[i] - &inflow[i]).abs();
        if residual > max_residual {
            max_residual = residual;
        }
    }

    // Tail tolerance: the L = 2 geometric ratio when applicable, or the
    // dominating birth-death ratio otherwise.
    let one = big(1);
    let ratio = if l == 2 {
        p * p / ((&one - p) * (big(2) - p))
    } else {
        // Internal arrivals at a node are dominated by rate p(L-1)/L
        // and service wins with probability at least 1 - p.
        let a = p * big(l as i64 - 1) / big(l as i64);
        let d = &one - p;
        let q = a / d;
        if q < one {
            q
        } else {
            ratio(99, 100)
        }
    };
    let mut tail_bound = big(1);
    for _ in 0..cap {
        tail_bound *= &ratio;
    }
    let within_tolerance = max_residual < tail_bound;
    let report = BalanceReport {
        states_checked: states.len(),
        max_residual: max_residual.to_f64().unwrap_or(f64::NAN),
        tail_bound: tail_bound.to_f64().unwrap_or(f64::NAN),
        within_tolerance,
    };
    if !within_tolerance && cap < 2 {
        return Err(Error::CapTooSmall {
            cap,
            source: Box::new(Error::OutOfDomain(format!(
                "residual {:.3e} above tail bound {:.3e}",
                report.max_residual, report.tail_bound
            ))),
        });
    }
    Ok(report)
}

/// Candidate built from the `L = 2` product form, for feeding into
/// [`balance_check`].
pub fn l2_product_candidate(p: &BigRational) -> impl Fn(&SymbolicState) -> BigRational {
    let p = p.clone();
    move |state: &SymbolicState| {
        let one = big(1);
        let head = &one - ratio(3, 2) * &p;
        let denom = (&one - &p) * (big(2) - &p);
        let q = &p * &p / &denom;
        let mut acc = one.clone();
        for node in &state.nodes {
            acc *= match node.slot {
                None => head.clone(),
                Some(1) if node.queued == 0 => &head * &p / (&one - &p),
                Some(t) => {
                    let last = if t == 1 { big(2) - &p } else { p.clone() };
                    let mut factor = &head / &denom;
                    for _ in 0..node.queued {
                        factor *= &q;
                    }
                    factor * last
                }
            };
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(x: f64) -> BigRational {
        BigRational::from_float(x).unwrap()
    }

    #[test]
    fn l2_marginal_values() {
        let p = ratio(2, 5); // 0.4
        assert_eq!(l2_marginal(&p, 0).unwrap(), ratio(2, 5));
        // n = 2: (1 - 3/2 p) 2 p^2 / ((1-p)(2-p))^2 = 0.4 * 2 * 0.16 / 0.9216
        let got = l2_marginal(&p, 2).unwrap().to_f64().unwrap();
        assert!((got - 0.1388888888888889).abs() < 1e-15, "{got}");
        // p = 0 degenerates.
        assert_eq!(l2_marginal(&big(0), 0).unwrap(), big(1));
        assert!(l2_marginal(&big(0), 1).unwrap().is_zero());
        // Total mass: partial sum plus closed-form geometric tail is 1.
        let mut sum = 0.0;
        for n in 0..60 {
            sum += l2_marginal_f64(0.4, n).unwrap();
        }
        assert!((sum - 1.0).abs() < 1e-12, "sum {sum}");
        assert!(l2_marginal(&ratio(2, 3), 0).is_err());
        assert!(l2_marginal(&ratio(-1, 10), 0).is_err());
    }

    #[test]
    fn l2_moment_values() {
        let (e, var) = l2_moments(&ratio(2, 5)).unwrap();
        assert_eq!(e, ratio(1, 5));
        assert_eq!(var, ratio(6, 25));
        let (e0, var0) = l2_moments(&big(0)).unwrap();
        assert!(e0.is_zero() && var0.is_zero());
        assert_eq!(l2_queue_entropy(0.0).unwrap(), 0.0);
        // Monotone increasing toward p = 2/3.
        let mut prev = -1.0;
        for i in 0..60 {
            let p = i as f64 / 100.0;
            let h = l2_queue_entropy(p).unwrap();
            assert!(h >= prev, "entropy dipped at p = {p}");
            prev = h;
        }
    }

    #[test]
    fn l2_moments_match_marginal_summation() {
        // E[Q] from the marginal: sum n * Pr(n+1 packets at node).
        for p in [0.1, 0.3, 0.5] {
            let mut eq = 0.0;
            for queue in 1..200u64 {
                eq += queue as f64 * l2_marginal_f64(p, queue + 1).unwrap();
            }
            let (e, _) = l2_moments(&rat(p)).unwrap();
            assert!((eq - e.to_f64().unwrap()).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn l2_state_prob_values() {
        let p = ratio(2, 5);
        // All-empty three-node state: (1 - 3/2 p)^3 = 0.064.
        let all_x = vec![L2Node::Empty; 3];
        assert_eq!(l2_state_prob(&all_x, &p).unwrap(), ratio(8, 125));
        // Single node [0|1]: (1 - 3/2 p) p/(1-p) = 0.4 * 2/3.
        let one = vec![L2Node::Queue { n: 0, t: 1 }];
        assert_eq!(l2_state_prob(&one, &p).unwrap(), ratio(4, 15));
        // Ground state at p = 0 has probability 1.
        assert_eq!(l2_state_prob(&all_x, &big(0)).unwrap(), big(1));
        // Invalid hot potato distance.
        assert!(l2_state_prob(&[L2Node::Queue { n: 0, t: 3 }], &p).is_err());
    }

    #[test]
    fn l2_node_probs_sum_to_one() {
        let p = ratio(2, 5);
        let mut sum = l2_node_prob(L2Node::Empty, &p).unwrap();
        for n in 0..80 {
            for t in [1, 2] {
                sum += l2_node_prob(L2Node::Queue { n, t }, &p).unwrap();
            }
        }
        assert!((sum.to_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn birth_death_values() {
        let params = QueueParams::from_f64(0.2, 0.5).unwrap();
        let bd = birth_death(params.clone(), Measure::AfterArrivals);
        assert!((bd.prob(0).to_f64().unwrap() - 0.6).abs() < 1e-15);
        assert!((bd.prob(1).to_f64().unwrap() - 0.3).abs() < 1e-15);
        assert!((bd.prob(2).to_f64().unwrap() - 0.075).abs() < 1e-15);
        assert!((bd.expected_queue.to_f64().unwrap() - 0.13333333333333333).abs() < 1e-15);
        let bd2 = birth_death(params, Measure::AfterDepartures);
        assert!((bd2.expected_queue.to_f64().unwrap() - 0.08333333333333333).abs() < 1e-15);
        // Â = 0: empty with probability 1.
        let idle = birth_death(QueueParams::from_f64(0.0, 0.5).unwrap(), Measure::AfterArrivals);
        assert_eq!(idle.prob(0), big(1));
        assert!(idle.expected_queue.is_zero());
        assert!(QueueParams::from_f64(0.5, 0.5).is_err());
    }

    #[test]
    fn birth_death_mass_sums_to_one() {
        for measure in [Measure::AfterArrivals, Measure::AfterDepartures] {
            let bd = birth_death(QueueParams::from_f64(0.3, 0.7).unwrap(), measure);
            let mut sum = big(0);
            for n in 0..50 {
                sum += bd.prob(n);
            }
            sum += bd.tail_mass(49);
            assert_eq!(sum, big(1), "{measure:?}");
        }
    }

    #[test]
    fn pk_one_node_values() {
        // L = 2, p = 0.4 (r = 0.6): E[Q] = 0.2, matching
        // (L-1)/(L+1) * 2r²/(3(1-r)).
        let r = ratio(3, 5);
        let e = pk_one_node_ring(2, &r).unwrap();
        assert_eq!(e, ratio(1, 5));
        let closed = ratio(1, 3) * big(2) * &r * &r / (big(3) * (big(1) - &r));
        assert_eq!(e, closed);
        // L = 1: no queueing at any load below one.
        assert!(pk_one_node_ring(1, &ratio(9, 10)).unwrap().is_zero());
        // λ = 0.
        assert!(pk_queue(&big(0), &ratio(3, 2), &ratio(5, 2)).unwrap().is_zero());
        // Saturation.
        assert!(pk_queue(&big(1), &ratio(3, 2), &ratio(5, 2)).is_err());
    }

    #[test]
    fn little_values() {
        let (idle, total) = little_relations(&ratio(3, 5), &ratio(1, 5)).unwrap();
        assert_eq!(idle, ratio(2, 5));
        assert_eq!(total, ratio(4, 5));
        let (idle, total) = little_relations(&big(0), &ratio(1, 7)).unwrap();
        assert_eq!(idle, big(1));
        assert_eq!(total, ratio(1, 7));
        assert!(little_relations(&big(1), &big(0)).is_err());
    }

    #[test]
    fn chernoff_values() {
        let (exp_u, bound_u) = chernoff_bound(2.0, 10.0, TailSide::Upper).unwrap();
        assert!((exp_u - (1.0 - 0.5 - 2.0f64.ln()) * 20.0).abs() < 1e-12);
        assert!((exp_u + 3.862943611198906).abs() < 1e-12, "{exp_u}");
        assert!((bound_u - 0.021_006_074_709_707_95).abs() < 1e-12, "{bound_u}");
        let (exp_l, _) = chernoff_bound(0.5, 10.0, TailSide::Lower).unwrap();
        assert!((exp_l + 8.465735902799727).abs() < 1e-12, "{exp_l}");
        // β → 1: exponent → 0 (continuity at β = 1).
        let (near, _) = chernoff_bound(1.0 + 1e-4, 10.0, TailSide::Upper).unwrap();
        assert!(near <= 0.0 && near > -1e-6, "{near}");
        // The lower exponent vanishes only linearly in β - 1.
        let (near_l, _) = chernoff_bound(1.0 - 1e-4, 10.0, TailSide::Lower).unwrap();
        assert!(near_l <= 0.0 && near_l > -1e-2, "{near_l}");
        assert!(chernoff_bound(1.0, 10.0, TailSide::Upper).is_err());
        assert!(chernoff_bound(0.5, 10.0, TailSide::Upper).is_err());
        // Strictly negative exponents across the valid range.
        for i in 1..40 {
            let beta = 1.0 + i as f64 / 4.0;
            assert!(chernoff_bound(beta, 5.0, TailSide::Upper).unwrap().0 < 0.0);
            let beta = i as f64 / 41.0;
            assert!(chernoff_bound(beta, 5.0, TailSide::Lower).unwrap().0 < 0.0);
        }
    }

    #[test]
    fn empty_slot_reproduces_published_constant() {
        let b = empty_slot_bound(0.2173, 0.19664, 0.2173, 0.19664, 0.5, 0.0).unwrap();
        assert!(
            (b.bracket / 2.0 - 0.500026802248).abs() < 1e-9,
            "bracket/2 = {:.12}",
            b.bracket / 2.0
        );
        // Gain vanishes with B → 0, leaving (1 - δ).
        let nogain = empty_slot_bound(0.2, 1e-12, 0.2, 0.2, 0.5, 0.25).unwrap();
        assert!((nogain.bracket - 0.75).abs() < 1e-9);
        assert!(empty_slot_bound(0.5, 0.5, 0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn empty_slot_grid_reaches_published_value() {
        // A coarse grid around the published optimum should reach at
        // least the published bracket.
        let mut best = 0.0f64;
        for a in [0.15, 0.2, 0.2173, 0.25] {
            for b in [0.15, 0.19664, 0.25] {
                if let Ok(v) = empty_slot_bound(a, b, a, b, 0.5, 0.0) {
                    best = best.max(v.bracket / 2.0);
                }
            }
        }
        assert!(best >= 0.500026802248 - 1e-9, "best {best}");
    }

    #[test]
    fn traffic_identity_and_tandem() {
        // P = 0: λ = α.
        let model = TrafficModel {
            alpha: vec![ratio(3, 10), ratio(1, 2)],
            routing: vec![vec![big(0); 2]; 2],
            mu: vec![big(1), big(1)],
            node_of: vec![0, 1],
            nodes: 2,
        };
        let sol = traffic_solve(&model).unwrap();
        assert_eq!(sol.lambda, vec![ratio(3, 10), ratio(1, 2)]);
        // Tandem: class 0 feeds class 1 with probability 1.
        let model = TrafficModel {
            alpha: vec![ratio(3, 10), big(0)],
            routing: vec![vec![big(0), big(1)], vec![big(0), big(0)]],
            mu: vec![big(1), big(1)],
            node_of: vec![0, 1],
            nodes: 2,
        };
        let sol = traffic_solve(&model).unwrap();
        assert_eq!(sol.lambda, vec![ratio(3, 10), ratio(3, 10)]);
        assert_eq!(sol.rho, vec![ratio(3, 10), ratio(3, 10)]);
    }

    #[test]
    fn ring_traffic_agrees_with_nominal_load() {
        // Standard 6-node ring at p = 0.2: ρ = N p / 2 = 0.6 everywhere.
        let p = ratio(1, 5);
        let model = ring_traffic_model(6, 5, &p);
        let sol = traffic_solve(&model).unwrap();
        for rho in &sol.rho {
            assert_eq!(rho, &ratio(3, 5));
        }
        let spec = RingSpec::standard(6, 0.2, Protocol::Ghp).unwrap();
        assert!((spec.nominal_load() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn non_transient_rejected() {
        let model = TrafficModel {
            alpha: vec![ratio(1, 10), big(0)],
            routing: vec![vec![big(0), big(1)], vec![big(1), big(0)]],
            mu: vec![big(1), big(1)],
            node_of: vec![0, 1],
            nodes: 2,
        };
        assert!(matches!(traffic_solve(&model), Err(Error::NotTransient(_))));
    }

    #[test]
    fn balance_l2_product_form_within_tail() {
        for p in [ratio(1, 10), ratio(3, 10)] {
            let spec = RingSpec::nonstandard(3, 2, p.to_f64().unwrap(), Protocol::Ghp).unwrap();
            let candidate = l2_product_candidate(&p);
            let report = balance_check(&spec, &candidate, 6, &p).unwrap();
            assert!(
                report.within_tolerance,
                "p = {p}: residual {:.3e} vs tail {:.3e}",
                report.max_residual,
                report.tail_bound
            );
        }
    }

    #[test]
    fn balance_one_node_lemma() {
        let p = ratio(3, 10);
        let spec = RingSpec::nonstandard(1, 2, 0.3, Protocol::Ghp).unwrap();
        let candidate = l2_product_candidate(&p);
        let report = balance_check(&spec, &candidate, 8, &p).unwrap();
        assert!(report.within_tolerance);
    }

    #[test]
    fn balance_uniform_is_negative_control() {
        let p = ratio(3, 10);
        let spec = RingSpec::nonstandard(2, 2, 0.3, Protocol::Ghp).unwrap();
        let report_good = balance_check(&spec, &l2_product_candidate(&p), 5, &p).unwrap();
        let count = report_good.states_checked as i64;
        let uniform = move |_: &SymbolicState| ratio(1, count);
        let report = balance_check(&spec, &uniform, 5, &p).unwrap();
        assert!(!report.within_tolerance, "uniform must fail the balance test");
        assert!(report.max_residual > 100.0 * report.tail_bound);
    }
}
