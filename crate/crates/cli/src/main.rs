//! Single entry point for simulation, exact expansion, formula
//! evaluation, series diagnostics, drift probes, butterfly routing,
//! and closed-form-versus-simulation comparisons.
//!
//! Every run prints a JSON envelope `{config, seed, results, checks}`
//! on stdout (or CSV with `--format csv` where tabular output exists).
//! Exit codes: 0 on success, 1 when any check fails, 2 on usage
//! errors. Re-running with the same config and seed produces
//! byte-identical output.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use ringcalc::butterfly::{
    connectivity_graph, route_permutation_small, route_power_of_two, route_subset,
    verify_node_disjoint, ButterflyPair, PathSet,
};
use ringcalc::formulas;
use ringcalc::formulas::{Measure, QueueParams, TailSide};
use ringcalc::lyapunov::{drift_probe, state_with_phi_at_least, trick_violation, PhiParams};
use ringcalc::ring::{
    marginal_histogram, simulate, Arrival, Protocol, RingSpec, SimOptions,
};
use ringcalc::series::{
    abso_mono_series, full_rank_all_splits, light_traffic_leading, rationality_test, MonoVerdict,
    RankResult, PRIME_A,
};
use ringcalc::stats::chi_square_gof;
use ringcalc::taylor::{
    expected_queue_series, expected_queue_series_per_node, propagate, stationary_series, EngineMode,
    IntSeries, TaylorOptions,
};

#[derive(Parser)]
#[command(name = "ringcalc", version, about = "Bernoulli ring analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo simulation of a ring.
    Simulate(SimulateArgs),
    /// Exact Taylor expansion of stationary probabilities.
    Taylor(TaylorArgs),
    /// Closed-form evaluators.
    Formulas(FormulasArgs),
    /// Series diagnostics: rationality, monotonicity, leading term.
    Series(SeriesArgs),
    /// Potential-function drift probe.
    Drift(DriftArgs),
    /// Butterfly connectivity and node-disjoint routing.
    Butterfly(ButterflyArgs),
    /// Cross-checks of closed forms against simulation and the exact
    /// engine.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum ProtocolArg {
    Ghp,
    Fifo,
    Epf,
    Sis,
    Cto,
    Ftg,
    Lis,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Protocol {
        match p {
            ProtocolArg::Ghp => Protocol::Ghp,
            ProtocolArg::Fifo => Protocol::Fifo,
            ProtocolArg::Epf => Protocol::Epf,
            ProtocolArg::Sis => Protocol::Sis,
            ProtocolArg::Cto => Protocol::Cto,
            ProtocolArg::Ftg => Protocol::Ftg,
            ProtocolArg::Lis => Protocol::Lis,
        }
    }
}

/// Ring parameters shared by several subcommands. Unset flags fall
/// back to the `--config` file (JSON with the same field names), then
/// to defaults.
#[derive(Args, Debug, Clone, Serialize)]
struct RingArgs {
    /// Node count N.
    #[arg(long)]
    nodes: Option<usize>,
    /// Maximum path length L (default N - 1).
    #[arg(long)]
    max_path: Option<usize>,
    /// Bernoulli arrival probability per node per step.
    #[arg(long)]
    p: Option<f64>,
    /// Geometric ring arrival intensity (with --mu).
    #[arg(long)]
    lambda: Option<f64>,
    /// Geometric ring departure intensity.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// JSON config file supplying any unset flag.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl RingArgs {
    fn resolve(&self) -> Result<RingSpec> {
        let file: Value = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
                .with_context(|| format!("parsing {}", path.display()))?,
            None => Value::Null,
        };
        let get = |key: &str| file.get(key).cloned();
        let nodes = self
            .nodes
            .or_else(|| get("nodes").and_then(|v| v.as_u64()).map(|v| v as usize))
            .ok_or_else(|| anyhow!("--nodes (or config field `nodes`) is required"))?;
        let max_path = self
            .max_path
            .or_else(|| get("max_path").and_then(|v| v.as_u64()).map(|v| v as usize))
            .unwrap_or(nodes.saturating_sub(1).max(1));
        let protocol: Protocol = self
            .protocol
            .map(Protocol::from)
            .or_else(|| get("protocol").and_then(|v| serde_json::from_value(v).ok()))
            .unwrap_or(Protocol::Ghp);
        let p = self.p.or_else(|| get("p").and_then(|v| v.as_f64()));
        let lambda = self.lambda.or_else(|| get("lambda").and_then(|v| v.as_f64()));
        let mu = self.mu.or_else(|| get("mu").and_then(|v| v.as_f64()));
        let arrival = match (p, lambda, mu) {
            (Some(p), None, None) => Arrival::Bernoulli { p },
            (None, Some(lambda), Some(mu)) => Arrival::GeometricRing { lambda, mu },
            (None, None, None) => bail!("need --p or --lambda/--mu"),
            _ => bail!("give either --p or the --lambda/--mu pair, not both"),
        };
        Ok(RingSpec::new(nodes, max_path, arrival, protocol)?)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    ring: RingArgs,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the payload to a file as well as stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TaylorArgs {
    /// Node count N.
    #[arg(long)]
    nodes: usize,
    /// Maximum path length L (default N - 1: standard ring).
    #[arg(long)]
    max_path: Option<usize>,
    /// Degree bound k.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Uncompressed)]
    mode: ModeArg,
    /// Propagate a fixed number of steps instead of running to
    /// convergence.
    #[arg(long)]
    steps: Option<u64>,
    /// Also dump the full per-state distribution.
    #[arg(long)]
    full_dist: bool,
    #[arg(long, default_value_t = 5_000_000)]
    state_cap: usize,
    /// JSON envelope (default) or a degree,coefficient CSV of the
    /// per-node expected-queue series.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Uncompressed,
    Compressed,
}

impl From<ModeArg> for EngineMode {
    fn from(m: ModeArg) -> EngineMode {
        match m {
            ModeArg::Uncompressed => EngineMode::Uncompressed,
            ModeArg::Compressed => EngineMode::Compressed,
        }
    }
}

#[derive(Args, Debug)]
struct FormulasArgs {
    #[command(subcommand)]
    eval: FormulaCommand,
}

#[derive(Subcommand, Debug)]
enum FormulaCommand {
    /// L = 2 marginal state probabilities and moments.
    Eval {
        /// One of: l2-marginal, l2-moments, birth-death, pk, little,
        /// chernoff, empty-slot.
        name: String,
        /// Formula arguments, `key=value` pairs.
        args: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[command(subcommand)]
    cmd: SeriesCommand,
}

#[derive(Subcommand, Debug)]
enum SeriesCommand {
    /// Rank test of the rationality matrix for one (alpha, beta).
    Rationality {
        /// JSON file holding an array of decimal coefficient strings.
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        alpha: usize,
        #[arg(long)]
        beta: usize,
        #[arg(long, default_value_t = PRIME_A)]
        prime: u64,
    },
    /// Full-rank sweep over all alpha + beta = total, two primes.
    RationalitySweep {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        total: usize,
    },
    /// Coefficient-sign absolute monotonicity verdict.
    Absomono {
        #[arg(long)]
        coeffs: PathBuf,
    },
    /// Check the s^2 coefficient against the light-traffic law.
    Leading {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        nodes: usize,
    },
}

#[derive(Args, Debug)]
struct DriftArgs {
    #[arg(long)]
    nodes: usize,
    /// Nominal load r (sets p = 2r/N on the standard ring).
    #[arg(long)]
    r: f64,
    /// Inflation δ; default per the feasible-midpoint rule.
    #[arg(long)]
    delta: Option<f64>,
    /// Build a start state with potential at least this value.
    #[arg(long)]
    phi_target: Option<f64>,
    #[arg(long, default_value_t = 200)]
    horizon: u64,
    #[arg(long, default_value_t = 1000)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ButterflyArgs {
    #[command(subcommand)]
    cmd: ButterflyCommand,
}

#[derive(Subcommand, Debug)]
enum ButterflyCommand {
    /// Build the q-dimensional connectivity graph and check its
    /// invariants.
    Connectivity {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: usize,
        /// Left layer permutation, comma-separated (default identity).
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
    },
    /// Route node-disjoint paths from A to B.
    Route {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        /// Input labels, comma-separated.
        #[arg(long, short = 'A')]
        a: String,
        /// Output labels, comma-separated.
        #[arg(long, short = 'B')]
        b: String,
        /// Force the power-of-two router.
        #[arg(long)]
        pow2: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Route a specific permutation on small sets.
    Permutation {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        /// Pairs `in:out`, comma-separated.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a PathSet file against endpoints.
    Verify {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        /// JSON file holding a PathSet.
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, short = 'A')]
        a: String,
        #[arg(long, short = 'B')]
        b: String,
    },
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Compare the L = 2 closed forms against simulation.
    #[arg(long)]
    l2: bool,
    #[arg(long, default_value_t = 5)]
    nodes: usize,
    #[arg(long, default_value_t = 0.4)]
    p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 8)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also check the exact engine against the N = 3 closed form.
    #[arg(long)]
    taylor: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    expected: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, expected: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            expected,
            tolerance,
            pass: (value - expected).abs() <= tolerance,
        }
    }

    /// Pass when `value >= threshold`.
    fn at_least(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            value,
            expected: threshold,
            tolerance: 0.0,
            pass: value >= threshold,
        }
    }
}

struct Envelope {
    config: Value,
    seed: Option<u64>,
    results: Value,
    checks: Vec<Check>,
}

impl Envelope {
    fn emit(self, out: Option<&PathBuf>) -> Result<bool> {
        let all_pass = self.checks.iter().all(|c| c.pass);
        let payload = json!({
            "config": self.config,
            "seed": self.seed,
            "results": self.results,
            "checks": self.checks,
        });
        let text = serde_json::to_string_pretty(&payload)?;
        println!("{text}");
        if let Some(path) = out {
            fs::write(path, &text)?;
        }
        Ok(all_pass)
    }
}

fn parse_perm(s: &Option<String>, d: usize) -> Result<Vec<usize>> {
    match s {
        None => Ok((0..d).collect()),
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|e| anyhow!("bad permutation entry {x:?}: {e}")))
            .collect(),
    }
}

fn parse_labels(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|e| anyhow!("bad label {x:?}: {e}")))
        .collect()
}

fn load_coeffs(path: &PathBuf) -> Result<IntSeries> {
    let raw = fs::read_to_string(path)?;
    let strings: Vec<String> = serde_json::from_str(&raw)
        .with_context(|| format!("{} must be a JSON array of decimal strings", path.display()))?;
    Ok(IntSeries::from_decimal_strings(&strings)?)
}

type KvMap = std::collections::BTreeMap<String, String>;

fn kv_args(args: &[String]) -> Result<KvMap> {
    let mut map = KvMap::new();
    for raw in args {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| anyhow!("formula arguments look like key=value, got {raw:?}"))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn need(map: &KvMap, key: &str) -> Result<f64> {
    map.get(key)
        .ok_or_else(|| anyhow!("missing argument {key}="))?
        .parse::<f64>()
        .with_context(|| format!("parsing {key}"))
}

/// Exact rational from a decimal or `num/den` string, so `p=0.4`
/// really means 2/5.
fn need_rational(map: &KvMap, key: &str) -> Result<BigRational> {
    let raw = map.get(key).ok_or_else(|| anyhow!("missing argument {key}="))?;
    parse_rational(raw)
}

fn parse_rational(raw: &str) -> Result<BigRational> {
    if let Some((num, den)) = raw.split_once('/') {
        let num: BigInt = num.trim().parse()?;
        let den: BigInt = den.trim().parse()?;
        return Ok(BigRational::new(num, den));
    }
    let (int_part, frac_part) = raw.split_once('.').unwrap_or((raw, ""));
    let digits: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .with_context(|| format!("parsing rational {raw:?}"))?;
    let den = BigInt::from(10).pow(frac_part.len() as u32);
    Ok(BigRational::new(digits, den))
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| anyhow!("non-finite input {x}"))
}

fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn cmd_simulate(args: SimulateArgs) -> Result<bool> {
    let spec = args.ring.resolve()?;
    let mut options = SimOptions::new(args.steps, args.reps, args.seed).with_workers(args.workers);
    if let Some(w) = args.warmup {
        options.warmup = w;
    }
    let stats = simulate(spec, options)?;
    if !stats.stable {
        eprintln!(
            "warning: nominal load {} >= 1; the system is unstable and time averages will not settle",
            stats.nominal_load
        );
    }
    match args.format {
        OutputFormat::Csv => {
            let text = format!("{}\n{}\n", ringcalc::ring::SimStats::csv_header(), stats.to_csv_row());
            print!("{text}");
            if let Some(path) = &args.out {
                fs::write(path, &text)?;
            }
            Ok(true)
        }
        OutputFormat::Json => Envelope {
            config: json!({"spec": spec, "options": options}),
            seed: Some(args.seed),
            results: serde_json::to_value(&stats)?,
            checks: Vec::new(),
        }
        .emit(args.out.as_ref()),
    }
}

fn cmd_taylor(args: TaylorArgs) -> Result<bool> {
    let nodes = args.nodes;
    let max_path = args.max_path.unwrap_or(nodes.saturating_sub(1).max(1));
    let spec = RingSpec::nonstandard(nodes, max_path, 0.0, Protocol::Ghp)?;
    let options = TaylorOptions {
        mode: args.mode.into(),
        state_cap: args.state_cap,
        max_steps: None,
    };
    let dist = match args.steps {
        Some(steps) => propagate(&spec, args.k, steps, &options)?,
        None => stationary_series(&spec, args.k, &options)?,
    };
    let total = expected_queue_series(&dist);
    let per_node = expected_queue_series_per_node(&dist)?;
    let ground = dist
        .get(&ringcalc::taylor::SymbolicState::ground(nodes))
        .cloned()
        .unwrap_or_else(|| IntSeries::zero(args.k));
    if matches!(args.format, OutputFormat::Csv) {
        let mut text = String::from("degree,expected_queue_per_node,all_empty_state\n");
        for d in 0..=args.k {
            text += &format!("{d},{},{}\n", per_node.coeff(d), ground.coeff(d));
        }
        print!("{text}");
        if let Some(path) = &args.out {
            fs::write(path, &text)?;
        }
        return Ok(true);
    }
    let mut results = json!({
        "variable": format!("s = p/{max_path}"),
        "states": dist.len(),
        "steps_run": dist.steps_run,
        "converged": dist.converged,
        "max_coeff_bits": dist.max_coeff_bits,
        "expected_queue_total": total,
        "expected_queue_per_node": per_node,
        "all_empty_state": ground,
    });
    if args.full_dist {
        results["distribution"] = serde_json::to_value(&dist)?;
    }
    Envelope {
        config: json!({
            "nodes": nodes, "max_path": max_path, "k": args.k,
            "mode": format!("{:?}", args.mode), "steps": args.steps,
            "state_cap": args.state_cap,
        }),
        seed: None,
        results,
        checks: Vec::new(),
    }
    .emit(args.out.as_ref())
}

fn cmd_formulas(args: FormulasArgs) -> Result<bool> {
    let FormulaCommand::Eval { name, args: raw } = args.eval;
    let kv = kv_args(&raw)?;
    let results: Value = match name.as_str() {
        "l2-marginal" => {
            let p = need_rational(&kv, "p")?;
            let n = need(&kv, "n")? as u64;
            let prob = formulas::l2_marginal(&p, n)?;
            json!({"prob": prob.to_f64(), "exact": rational_str(&prob)})
        }
        "l2-moments" => {
            let pf = need(&kv, "p")?;
            let p = need_rational(&kv, "p")?;
            let (e, var) = formulas::l2_moments(&p)?;
            let entropy = formulas::l2_queue_entropy(pf)?;
            json!({
                "expected_queue": e.to_f64(), "expected_queue_exact": rational_str(&e),
                "variance": var.to_f64(), "variance_exact": rational_str(&var),
                "entropy_nats": entropy,
            })
        }
        "birth-death" => {
            let params = QueueParams::new(need_rational(&kv, "arrive")?, need_rational(&kv, "depart")?)?;
            let measure = if kv.get("after_departures").map(|v| v != "0").unwrap_or(false) {
                Measure::AfterDepartures
            } else {
                Measure::AfterArrivals
            };
            let bd = formulas::birth_death(params, measure);
            let dist: Vec<f64> = (0..12).map(|n| bd.prob(n).to_f64().unwrap_or(f64::NAN)).collect();
            json!({
                "expected_queue": bd.expected_queue.to_f64(),
                "expected_queue_exact": rational_str(&bd.expected_queue),
                "prob_0_to_11": dist,
                "tail_mass_above_11": bd.tail_mass(11).to_f64(),
            })
        }
        "pk" => {
            let lambda = need_rational(&kv, "lambda")?;
            let ez = need_rational(&kv, "ez")?;
            let ez2 = need_rational(&kv, "ez2")?;
            let e = formulas::pk_queue(&lambda, &ez, &ez2)?;
            json!({"expected_queue": e.to_f64(), "exact": rational_str(&e)})
        }
        "little" => {
            let r = need_rational(&kv, "r")?;
            let eq = need_rational(&kv, "eq")?;
            let (idle, total) = formulas::little_relations(&r, &eq)?;
            json!({
                "idle": idle.to_f64(), "idle_exact": rational_str(&idle),
                "expected_total": total.to_f64(), "expected_total_exact": rational_str(&total),
            })
        }
        "chernoff" => {
            let beta = need(&kv, "beta")?;
            let p_sum = need(&kv, "P")?;
            let side = if beta > 1.0 { TailSide::Upper } else { TailSide::Lower };
            let (exponent, bound) = formulas::chernoff_bound(beta, p_sum, side)?;
            json!({"side": format!("{side:?}"), "exponent": exponent, "bound": bound})
        }
        "empty-slot" => {
            let b = formulas::empty_slot_bound(
                need(&kv, "A")?,
                need(&kv, "B")?,
                need(&kv, "C")?,
                need(&kv, "D")?,
                need(&kv, "r")?,
                kv.get("delta").map(|v| v.parse::<f64>()).transpose()?.unwrap_or(0.0),
            )?;
            json!({"gain": b.gain, "bracket": b.bracket, "per_node_times_n": b.bracket})
        }
        other => bail!("unknown formula {other:?}; see `ringcalc formulas eval --help`"),
    };
    Envelope {
        config: json!({"formula": name, "args": raw}),
        seed: None,
        results,
        checks: Vec::new(),
    }
    .emit(None)
}

fn cmd_series(args: SeriesArgs) -> Result<bool> {
    match args.cmd {
        SeriesCommand::Rationality { coeffs, alpha, beta, prime } => {
            let series = load_coeffs(&coeffs)?;
            let result = rationality_test(series.coeffs(), alpha, beta, prime)?;
            let results = match &result {
                RankResult::FullRank => json!({"verdict": "full_rank"}),
                RankResult::DegenerateKernel => json!({"verdict": "degenerate_kernel"}),
                RankResult::Annihilator { vector, verified } => {
                    json!({"verdict": "annihilator", "denominator": vector, "verified": verified})
                }
            };
            Envelope {
                config: json!({"alpha": alpha, "beta": beta, "prime": prime.to_string()}),
                seed: None,
                results,
                checks: Vec::new(),
            }
            .emit(None)
        }
        SeriesCommand::RationalitySweep { coeffs, total } => {
            let series = load_coeffs(&coeffs)?;
            let report = full_rank_all_splits(series.coeffs(), total)?;
            let pass = report.non_rational;
            Envelope {
                config: json!({"total": total}),
                seed: None,
                results: serde_json::to_value(&report)?,
                checks: vec![Check::new("no rational witness at any split", f64::from(u8::from(pass)), 1.0, 0.0)],
            }
            .emit(None)
        }
        SeriesCommand::Absomono { coeffs } => {
            let series = load_coeffs(&coeffs)?;
            let verdict = abso_mono_series(&series);
            let results = match &verdict {
                MonoVerdict::Pass => json!({"verdict": "pass"}),
                other => serde_json::to_value(other)?,
            };
            Envelope { config: json!({}), seed: None, results, checks: Vec::new() }.emit(None)
        }
        SeriesCommand::Leading { coeffs, nodes } => {
            let series = load_coeffs(&coeffs)?;
            let check = light_traffic_leading(&series, nodes)?;
            let pass = check.matches;
            Envelope {
                config: json!({"nodes": nodes}),
                seed: None,
                results: serde_json::to_value(&check)?,
                checks: vec![Check::new("s^2 coefficient", f64::from(u8::from(pass)), 1.0, 0.0)],
            }
            .emit(None)
        }
    }
}

fn cmd_drift(args: DriftArgs) -> Result<bool> {
    let p = 2.0 * args.r / args.nodes as f64;
    let spec = RingSpec::standard(args.nodes, p, Protocol::Ghp)?;
    let params = match args.delta {
        Some(delta) => PhiParams::new(args.nodes, args.r, delta)?,
        None => PhiParams::with_default_delta(args.nodes, args.r)?,
    };
    let target = args.phi_target.unwrap_or(5.0 * args.nodes as f64);
    let state = state_with_phi_at_least(&spec, &params, target, args.seed);
    let trick = trick_violation(&state, &params);
    let estimate = drift_probe(&state, &params, args.horizon, args.reps, args.seed)?;
    let results = json!({
        "params": params,
        "start_phi": estimate.start_phi,
        "estimate": estimate.estimate,
        "std_err": estimate.std_err,
        "ci95": estimate.ci95,
        "trick_violation": trick,
    });
    Envelope {
        config: json!({
            "nodes": args.nodes, "r": args.r, "delta": params.delta,
            "phi_target": target, "horizon": args.horizon, "reps": args.reps,
        }),
        seed: Some(args.seed),
        results,
        checks: Vec::new(),
    }
    .emit(args.out.as_ref())
}

fn cmd_butterfly(args: ButterflyArgs) -> Result<bool> {
    match args.cmd {
        ButterflyCommand::Connectivity { d, q, pi, sigma } => {
            let pair = ButterflyPair::new(d, parse_perm(&pi, d)?, parse_perm(&sigma, d)?)?;
            let graph = connectivity_graph(&pair, q)?;
            let invariants_ok = graph.check_invariants().is_ok();
            Envelope {
                config: json!({"d": d, "q": q, "pi": pair.pi, "sigma": pair.sigma}),
                seed: None,
                results: serde_json::to_value(&graph)?,
                checks: vec![Check::new("connectivity invariants", f64::from(u8::from(invariants_ok)), 1.0, 0.0)],
            }
            .emit(None)
        }
        ButterflyCommand::Route { d, pi, sigma, a, b, pow2, out } => {
            let pair = ButterflyPair::new(d, parse_perm(&pi, d)?, parse_perm(&sigma, d)?)?;
            let a = parse_labels(&a)?;
            let b = parse_labels(&b)?;
            let set = if pow2 {
                route_power_of_two(&pair, &a, &b)?
            } else {
                route_subset(&pair, &a, &b)?
            };
            let violations = verify_node_disjoint(&set, &pair, &a, &b, None);
            let ok = violations.is_empty();
            Envelope {
                config: json!({"d": d, "pi": pair.pi, "sigma": pair.sigma, "A": a, "B": b, "pow2": pow2}),
                seed: None,
                results: json!({"paths": set, "violations": violations}),
                checks: vec![Check::new("node disjoint", f64::from(u8::from(ok)), 1.0, 0.0)],
            }
            .emit(out.as_ref())
        }
        ButterflyCommand::Permutation { d, pi, sigma, rho, out } => {
            let pair = ButterflyPair::new(d, parse_perm(&pi, d)?, parse_perm(&sigma, d)?)?;
            let pairs: Vec<(u32, u32)> = rho
                .split(',')
                .map(|pair_s| {
                    let (x, y) = pair_s
                        .split_once(':')
                        .ok_or_else(|| anyhow!("rho entries look like in:out, got {pair_s:?}"))?;
                    Ok((x.trim().parse::<u32>()?, y.trim().parse::<u32>()?))
                })
                .collect::<Result<_>>()?;
            let set = route_permutation_small(&pair, &pairs)?;
            let a: Vec<u32> = pairs.iter().map(|&(x, _)| x).collect();
            let b: Vec<u32> = pairs.iter().map(|&(_, y)| y).collect();
            let violations = verify_node_disjoint(&set, &pair, &a, &b, Some(&pairs));
            let ok = violations.is_empty();
            Envelope {
                config: json!({"d": d, "pi": pair.pi, "sigma": pair.sigma, "rho": pairs}),
                seed: None,
                results: json!({"paths": set, "violations": violations}),
                checks: vec![Check::new("permutation honored", f64::from(u8::from(ok)), 1.0, 0.0)],
            }
            .emit(out.as_ref())
        }
        ButterflyCommand::Verify { d, pi, sigma, paths, a, b } => {
            let pair = ButterflyPair::new(d, parse_perm(&pi, d)?, parse_perm(&sigma, d)?)?;
            let set: PathSet = serde_json::from_str(&fs::read_to_string(&paths)?)
                .with_context(|| format!("parsing {}", paths.display()))?;
            let a = parse_labels(&a)?;
            let b = parse_labels(&b)?;
            let violations = verify_node_disjoint(&set, &pair, &a, &b, None);
            let ok = violations.is_empty();
            Envelope {
                config: json!({"d": d, "paths": paths.display().to_string()}),
                seed: None,
                results: json!({"violations": violations}),
                checks: vec![Check::new("node disjoint", f64::from(u8::from(ok)), 1.0, 0.0)],
            }
            .emit(None)
        }
    }
}

fn cmd_compare(args: CompareArgs) -> Result<bool> {
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    if args.l2 {
        let spec = RingSpec::nonstandard(args.nodes, 2, args.p, Protocol::Ghp)?;
        let options = SimOptions::new(args.steps, args.reps, args.seed).with_workers(args.workers);
        let stats = simulate(spec, options)?;
        let p = rational(args.p)?;
        let (eq, _) = formulas::l2_moments(&p)?;
        let expected = eq.to_f64().unwrap();
        checks.push(Check::new(
            "mean queue per node vs p^2/(2-3p)",
            stats.mean_queue_per_node,
            expected,
            3.0 * stats.se_queue.max(1e-9),
        ));
        let r = spec.nominal_load();
        checks.push(Check::new(
            "idle fraction vs 1 - r",
            stats.idle_fraction,
            1.0 - r,
            3.0 * stats.se_idle.max(1e-9),
        ));
        // Marginal histogram against the closed-form distribution.
        let max_n = 12;
        let hist = marginal_histogram(spec, options, 64, max_n)?;
        let mut probs: Vec<f64> = (0..max_n as u64).map(|n| formulas::l2_marginal_f64(args.p, n).unwrap()).collect();
        let head: f64 = probs.iter().sum();
        probs.push(1.0 - head);
        let (stat, dof, p_value) = chi_square_gof(&hist, &probs, 5.0);
        results.insert("histogram".into(), json!({"counts": hist, "chi2": stat, "dof": dof, "p_value": p_value}));
        checks.push(Check::at_least("marginal chi-square p-value", p_value, 0.01));
        results.insert("simulation".into(), serde_json::to_value(&stats)?);
    }
    if args.taylor {
        let spec = RingSpec::standard(3, 0.1, Protocol::Ghp)?;
        let dist = stationary_series(&spec, 6, &TaylorOptions::default())?;
        let per_node = expected_queue_series_per_node(&dist)?;
        let mut expect = vec![BigInt::from(0), BigInt::from(0)];
        let mut c = BigInt::from(2);
        for _ in 2..=6usize {
            expect.push(c.clone());
            c *= 3;
        }
        let ok = per_node.coeffs() == &expect[..];
        results.insert("taylor_n3".into(), serde_json::to_value(&per_node)?);
        checks.push(Check::new(
            "N=3 series equals expansion of p^2/(2-3p)",
            f64::from(u8::from(ok)),
            1.0,
            0.0,
        ));
    }
    if !args.l2 && !args.taylor {
        bail!("nothing to compare; pass --l2 and/or --taylor");
    }
    Envelope {
        config: json!({
            "l2": args.l2, "taylor": args.taylor, "nodes": args.nodes, "p": args.p,
            "steps": args.steps, "reps": args.reps,
        }),
        seed: Some(args.seed),
        results: Value::Object(results),
        checks,
    }
    .emit(None)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Taylor(args) => cmd_taylor(args),
        Command::Formulas(args) => cmd_formulas(args),
        Command::Series(args) => cmd_series(args),
        Command::Drift(args) => cmd_drift(args),
        Command::Butterfly(args) => cmd_butterfly(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
