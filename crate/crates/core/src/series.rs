//! Light-traffic series diagnostics: rationality detection through the
//! coefficient matrix modulo large primes, exact finite differences,
//! the `f_n` recursion, absolute-monotonicity verdicts, and the
//! leading-coefficient law for expected queue length.

#![allow(clippy::needless_range_loop)] // index loops mirror the matrix algebra
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::Error;
use crate::taylor::IntSeries;
use crate::Result;

/// Default modulus: the Mersenne prime `2^61 - 1`.
pub const PRIME_A: u64 = (1 << 61) - 1;
/// Confirmation modulus: the largest 64-bit prime.
pub const PRIME_B: u64 = 18_446_744_073_709_551_557;

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

fn reduce(c: &BigInt, p: u64) -> u64 {
    let m = BigInt::from(p);
    let r = ((c % &m) + &m) % &m;
    r.to_u64().expect("reduced residue fits u64")
}

/// The rationality-test matrix for candidate numerator degree `alpha`
/// and denominator degree `beta`: row `i` (from 0) holds
/// `c[alpha+1+i], c[alpha+i], ..., c[alpha+1+i-beta]`, missing indices
/// read as zero.
#[derive(Debug, Clone)]
pub struct CoeffMatrix {
    pub alpha: usize,
    pub beta: usize,
    pub rows: Vec<Vec<BigInt>>,
}

impl CoeffMatrix {
    pub fn build(coeffs: &[BigInt], alpha: usize, beta: usize) -> Result<Self> {
        let gamma = coeffs.len().saturating_sub(1);
        if gamma < alpha + beta + 1 {
            return Err(Error::InvalidSpec(format!(
                "need gamma >= alpha + beta + 1 (gamma = {gamma}, alpha = {alpha}, beta = {beta})"
            )));
        }
        let entry = |idx: isize| -> BigInt {
            if idx < 0 {
                BigInt::zero()
            } else {
                coeffs[idx as usize].clone()
            }
        };
        let rows = (0..=beta)
            .map(|i| {
                (0..=beta)
                    .map(|j| entry(alpha as isize + 1 + i as isize - j as isize))
                    .collect()
            })
            .collect();
        Ok(CoeffMatrix { alpha, beta, rows })
    }
}

/// Outcome of [`rationality_test`].
#[derive(Debug, Clone, Serialize)]
pub enum RankResult {
    /// The matrix has full rank modulo the prime: the series is not a
    /// rational function with degrees `(alpha, beta)`.
    FullRank,
    /// An exact annihilator `b_0..b_beta` with `b_0 != 0`, scaled to
    /// primitive integers: the candidate denominator. `verified`
    /// records the exact integer re-check that `b * c` vanishes at
    /// every degree in `alpha+1 ..= gamma`.
    Annihilator { vector: Vec<String>, verified: bool },
    /// The matrix is singular but every kernel vector has `b_0 = 0`
    /// (e.g. a series with leading zeros): no power-series denominator
    /// exists, so the series is still not rational with these degrees.
    DegenerateKernel,
}

/// Rank test of the coefficient matrix over `F_prime`; if the rank is
/// deficient, return one kernel vector for exact verification over the
/// integers.
pub fn rationality_test(coeffs: &[BigInt], alpha: usize, beta: usize, prime: u64) -> Result<RankResult> {
    let matrix = CoeffMatrix::build(coeffs, alpha, beta)?;
    let size = beta + 1;
    let mut m: Vec<Vec<u64>> = matrix
        .rows
        .iter()
        .map(|row| row.iter().map(|c| reduce(c, prime)).collect())
        .collect();

    // Gaussian elimination, tracking pivot columns.
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; size];
    let mut row = 0usize;
    for col in 0..size {
        let Some(pr) = (row..size).find(|&r| m[r][col] != 0) else { continue };
        m.swap(row, pr);
        let inv = invmod(m[row][col], prime);
        for j in col..size {
            m[row][j] = mulmod(m[row][j], inv, prime);
        }
        for r in 0..size {
            if r != row && m[r][col] != 0 {
                let f = m[r][col];
                for j in col..size {
                    let sub = mulmod(f, m[row][j], prime);
                    m[r][j] = ((m[r][j] as u128 + (prime - sub) as u128) % prime as u128) as u64;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == size {
            break;
        }
    }
    if row == size {
        return Ok(RankResult::FullRank);
    }

    // The modular screen says rank deficient. A genuine denominator
    // must have a nonzero constant term (the series 1/b(x) does not
    // exist otherwise), so solve the extended system with b_0 = 1
    // covering every degree up to gamma, exactly over the rationals.
    let _ = matrix;
    match solve_denominator(coeffs, alpha, beta) {
        Some(vector) => {
            let gamma = coeffs.len() - 1;
            let mut verified = true;
            for deg in alpha + 1..=gamma {
                let mut acc = BigInt::zero();
                for (j, b) in vector.iter().enumerate() {
                    if j <= deg {
                        acc += b * &coeffs[deg - j];
                    }
                }
                if !acc.is_zero() {
                    verified = false;
                    break;
                }
            }
            Ok(RankResult::Annihilator {
                vector: vector.iter().map(BigInt::to_string).collect(),
                verified,
            })
        }
        None => Ok(RankResult::DegenerateKernel),
    }
}

/// Solve for a denominator `b` with `b_0 = 1` (scaled to primitive
/// integers) such that `(b * c)` vanishes at every degree in
/// `alpha+1 ..= gamma`; `None` when the affine system is inconsistent.
fn solve_denominator(coeffs: &[BigInt], alpha: usize, beta: usize) -> Option<Vec<BigInt>> {
    let gamma = coeffs.len() - 1;
    let unknowns = beta;
    // Row per degree: sum_{j=1..beta} c_{deg-j} x_j = -c_deg.
    let mut m: Vec<Vec<BigRational>> = Vec::new();
    let entry = |idx: isize| -> BigRational {
        if idx < 0 {
            BigRational::zero()
        } else {
            BigRational::from_integer(coeffs[idx as usize].clone())
        }
    };
    for deg in alpha + 1..=gamma {
        let mut row: Vec<BigRational> = (1..=beta).map(|j| entry(deg as isize - j as isize)).collect();
        row.push(-entry(deg as isize));
        m.push(row);
    }
    // Gaussian elimination with consistency check.
    let nrows = m.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; unknowns];
    let mut row = 0usize;
    for col in 0..unknowns {
        if row == nrows {
            break;
        }
        let Some(pr) = (row..nrows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, pr);
        let inv = m[row][col].recip();
        for j in col..=unknowns {
            m[row][j] = &m[row][j] * &inv;
        }
        for r in 0..nrows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=unknowns {
                    let sub = &m[row][j] * &f;
                    m[r][j] = &m[r][j] - sub;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
    }
    // Inconsistent when a zeroed row has a nonzero right-hand side.
    for r in 0..nrows {
        if m[r][..unknowns].iter().all(BigRational::is_zero) && !m[r][unknowns].is_zero() {
            return None;
        }
    }
    let mut solution = vec![BigRational::zero(); unknowns];
    for col in 0..unknowns {
        if let Some(pr) = pivot_of_col[col] {
            solution[col] = m[pr][unknowns].clone();
        }
    }
    let mut full = Vec::with_capacity(beta + 1);
    full.push(BigRational::from_integer(BigInt::from(1)));
    full.extend(solution);
    // Clear denominators and divide out the content, keeping b_0 > 0.
    let mut lcm = BigInt::from(1);
    for x in &full {
        lcm = num_integer::Integer::lcm(&lcm, x.denom());
    }
    let mut ints: Vec<BigInt> = full.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = num_integer::Integer::gcd(&gcd, x);
    }
    if !gcd.is_zero() {
        for x in ints.iter_mut() {
            *x = &*x / &gcd;
        }
    }
    Some(ints)
}

/// Sweep summary over all `(alpha, beta)` splits.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    /// No split admits a verified denominator with nonzero constant
    /// term: the series is not rational with total degree `<= total`.
    pub non_rational: bool,
    /// Splits whose matrix was singular only through a degenerate
    /// kernel (leading zero coefficients force `b_0 = 0`).
    pub degenerate_splits: Vec<(usize, usize)>,
}

/// Run the rank test for every `(alpha, beta)` split with
/// `alpha + beta = total`, under two distinct primes. Degenerate
/// kernels do not count as rationality witnesses: a series with
/// leading zeros makes some matrices singular without any power-series
/// denominator existing.
pub fn full_rank_all_splits(coeffs: &[BigInt], total: usize) -> Result<SweepReport> {
    let mut report = SweepReport { non_rational: true, degenerate_splits: Vec::new() };
    for alpha in 0..=total {
        let beta = total - alpha;
        for prime in [PRIME_A, PRIME_B] {
            match rationality_test(coeffs, alpha, beta, prime)? {
                RankResult::FullRank => {}
                RankResult::DegenerateKernel => {
                    if !report.degenerate_splits.contains(&(alpha, beta)) {
                        report.degenerate_splits.push((alpha, beta));
                    }
                }
                RankResult::Annihilator { .. } => report.non_rational = false,
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Finite differences and the f_n recursion
// ---------------------------------------------------------------------------

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::from(1);
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `n`-th forward difference with step `h` at the start of `samples`:
/// `Δ_h^n f(x) = Σ_k (-1)^{n-k} C(n,k) f(x + k h)`. The samples are
/// `f(x), f(x+h), ..., f(x+nh)` (at least); exact for exact inputs.
pub fn finite_difference(samples: &[BigRational], n: usize) -> Result<BigRational> {
    if samples.len() < n + 1 {
        return Err(Error::OutOfDomain(format!(
            "need {} grid samples for a degree-{n} difference, got {}",
            n + 1,
            samples.len()
        )));
    }
    let mut acc = BigRational::zero();
    for (k, sample) in samples.iter().enumerate().take(n + 1) {
        let coeff = BigRational::from_integer(binomial(n as u64, k as u64));
        if (n - k).is_multiple_of(2) {
            acc += coeff * sample;
        } else {
            acc -= coeff * sample;
        }
    }
    Ok(acc)
}

/// `f_n(x + n h)` via the discrete-Taylor recursion:
/// `f_0(x + kh) = f(x)` and for `0 < l <= n`
/// `f_l(x + kh) = (f(x + lh) - Σ_{j<l} f_j(x + lh)) C(k, l)` for
/// `k >= l`, zero below. Provably equal to the forward difference.
pub fn f_n_recursion(samples: &[BigRational], n: usize) -> Result<BigRational> {
    if samples.len() < n + 1 {
        return Err(Error::OutOfDomain(format!(
            "need {} grid samples for f_{n}, got {}",
            n + 1,
            samples.len()
        )));
    }
    // table[l][k] = f_l(x + k h) for 0 <= l <= n, 0 <= k <= n
    let mut table: Vec<Vec<BigRational>> = Vec::with_capacity(n + 1);
    table.push(vec![samples[0].clone(); n + 1]);
    for l in 1..=n {
        let mut partial = BigRational::zero();
        for row in table.iter() {
            partial += &row[l];
        }
        let lead = &samples[l] - partial;
        let row: Vec<BigRational> = (0..=n)
            .map(|k| {
                if k < l {
                    BigRational::zero()
                } else {
                    &lead * BigRational::from_integer(binomial(k as u64, l as u64))
                }
            })
            .collect();
        table.push(row);
    }
    Ok(table[n][n].clone())
}

// ---------------------------------------------------------------------------
// Absolute monotonicity
// ---------------------------------------------------------------------------

/// Verdict of an absolute-monotonicity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MonoVerdict {
    Pass,
    /// Series mode: a negative Taylor coefficient.
    NegativeCoefficient { degree: usize, coefficient: String },
    /// Sample mode: a negative forward difference `Δ_h^n f(x)`.
    NegativeDifference { n: usize, start: usize, stride: usize, value: String },
}

/// Check a series for absolute monotonicity at its expansion point:
/// all Taylor coefficients must be nonnegative (sufficient for
/// monotonicity on `[0, radius)`).
pub fn abso_mono_series(series: &IntSeries) -> MonoVerdict {
    for (degree, c) in series.coeffs().iter().enumerate() {
        if c.is_negative() {
            return MonoVerdict::NegativeCoefficient { degree, coefficient: c.to_string() };
        }
    }
    MonoVerdict::Pass
}

/// Check sampled values on a uniform grid: every forward difference
/// `Δ_{mh}^n` with `n <= max_n` and every stride `m >= 1` that fits in
/// the grid must be nonnegative. This tests the difference form of
/// absolute monotonicity, which is equivalent to the derivative form.
pub fn abso_mono_samples(samples: &[BigRational], max_n: usize) -> MonoVerdict {
    let len = samples.len();
    for n in 0..=max_n {
        for stride in 1..len.max(2) {
            if n * stride >= len {
                break;
            }
            for start in 0..len - n * stride {
                let window: Vec<BigRational> =
                    (0..=n).map(|k| samples[start + k * stride].clone()).collect();
                let diff = finite_difference(&window, n).expect("window sized for n");
                if diff.is_negative() {
                    return MonoVerdict::NegativeDifference {
                        n,
                        start,
                        stride,
                        value: diff.to_string(),
                    };
                }
            }
        }
    }
    MonoVerdict::Pass
}

// ---------------------------------------------------------------------------
// Light-traffic leading coefficient
// ---------------------------------------------------------------------------

/// Comparison of a queue-length series in `s` (with `L = N - 1`)
/// against the light-traffic law `(N-2)/2 p² + O(p³)`.
#[derive(Debug, Clone, Serialize)]
pub struct LeadingCheck {
    pub predicted: String,
    pub actual: String,
    pub matches: bool,
}

/// Check the `s²` coefficient of a per-node expected-queue series
/// against `(N-2)/2 · (N-1)²`, the image of `(N-2)/2 p²` under
/// `p = (N-1) s`.
pub fn light_traffic_leading(series: &IntSeries, n: usize) -> Result<LeadingCheck> {
    if series.degree_bound() < 2 {
        return Err(Error::OutOfDomain("series degree below 2".into()));
    }
    if n < 2 {
        return Err(Error::OutOfDomain("need N >= 2".into()));
    }
    let nb = BigInt::from(n as i64);
    let predicted: BigInt = (&nb - 2) * (&nb - 1) * (&nb - 1) / 2;
    let actual = series.coeff(2).clone();
    Ok(LeadingCheck {
        matches: predicted == actual,
        predicted: predicted.to_string(),
        actual: actual.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rats(v: &[(i64, i64)]) -> Vec<BigRational> {
        v.iter().map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d))).collect()
    }

    #[test]
    fn geometric_series_yields_annihilator() {
        // 1/(1 - 3s): denominator (1, -3).
        let coeffs = ints(&[1, 3, 9, 27, 81, 243]);
        match rationality_test(&coeffs, 0, 1, PRIME_A).unwrap() {
            RankResult::Annihilator { vector, verified } => {
                assert!(verified);
                assert_eq!(vector, vec!["1".to_string(), "-3".to_string()]);
            }
            other => panic!("geometric series must be detected, got {other:?}"),
        }
    }

    #[test]
    fn all_zero_series_is_degenerate() {
        let coeffs = ints(&[0, 0, 0, 0, 0]);
        match rationality_test(&coeffs, 0, 1, PRIME_A).unwrap() {
            RankResult::Annihilator { vector, verified } => {
                assert!(verified);
                assert_eq!(vector[0], "1");
            }
            other => panic!("zero matrix has rank 0, got {other:?}"),
        }
    }

    #[test]
    fn gamma_requirement_enforced() {
        let coeffs = ints(&[1, 2, 3]);
        assert!(rationality_test(&coeffs, 2, 1, PRIME_A).is_err());
    }

    #[test]
    fn planted_rational_is_recovered_and_divides() {
        // a(s)/b(s) = (2 + s)/(1 - s - s^2): expand far enough, then
        // the (alpha, beta) = (1, 2) test must find the denominator.
        let b = ints(&[1, -1, -1]);
        let a = ints(&[2, 1, 0]);
        let mut c: Vec<BigInt> = Vec::new();
        for deg in 0..12usize {
            let mut acc = if deg < a.len() { a[deg].clone() } else { BigInt::zero() };
            for j in 1..b.len().min(deg + 1) {
                let prev: BigInt = c[deg - j].clone();
                acc -= &b[j] * prev;
            }
            c.push(acc); // b0 = 1
        }
        for prime in [PRIME_A, PRIME_B] {
            match rationality_test(&c, 1, 2, prime).unwrap() {
                RankResult::Annihilator { vector, verified } => {
                    assert!(verified, "prime {prime}");
                    let v: Vec<i64> = vector.iter().map(|s| s.parse().unwrap()).collect();
                    assert_eq!(v, vec![1, -1, -1], "prime {prime}");
                }
                other => panic!("planted rational must be found, got {other:?}"),
            }
        }
    }

    #[test]
    fn irrational_prefix_is_full_rank() {
        // Factorials grow too fast for any (1,1) rational.
        let coeffs = ints(&[1, 1, 2, 6, 24, 120, 720]);
        assert!(matches!(rationality_test(&coeffs, 1, 1, PRIME_A).unwrap(), RankResult::FullRank));
        assert!(matches!(rationality_test(&coeffs, 1, 1, PRIME_B).unwrap(), RankResult::FullRank));
    }

    #[test]
    fn full_rank_verdicts_are_prime_independent() {
        // False-negative guard: the two fixed primes agree on a grid
        // of planted-rational and irrational prefixes.
        let cases: Vec<Vec<BigInt>> = vec![
            ints(&[1, 1, 2, 6, 24, 120, 720, 5040]),
            ints(&[2, 1, 3, 4, 7, 11, 18, 29]),   // Lucas-like: rational (1,2)
            ints(&[1, -4, 9, -16, 25, -36, 49, -64]),
        ];
        for coeffs in &cases {
            for alpha in 0..=2usize {
                for beta in 1..=2usize {
                    if coeffs.len() < alpha + beta + 2 {
                        continue;
                    }
                    let a = matches!(rationality_test(coeffs, alpha, beta, PRIME_A).unwrap(), RankResult::FullRank);
                    let b = matches!(rationality_test(coeffs, alpha, beta, PRIME_B).unwrap(), RankResult::FullRank);
                    assert_eq!(a, b, "primes disagree at ({alpha}, {beta}) on {coeffs:?}");
                }
            }
        }
    }

    #[test]
    fn leading_zero_series_degenerate_kernel() {
        // s^2 * (geometric) at the split alpha = 0: the only matrix
        // kernel is the degenerate x-power, not a denominator.
        let coeffs = ints(&[0, 0, 1, 3, 9, 27, 81, 243]);
        match rationality_test(&coeffs, 0, 5, PRIME_A).unwrap() {
            RankResult::DegenerateKernel => {}
            other => panic!("expected a degenerate kernel, got {other:?}"),
        }
        // With alpha >= 2 the same series is honestly rational.
        match rationality_test(&coeffs, 2, 1, PRIME_A).unwrap() {
            RankResult::Annihilator { vector, verified } => {
                assert!(verified);
                assert_eq!(vector, vec!["1".to_string(), "-3".to_string()]);
            }
            other => panic!("expected the denominator 1 - 3s, got {other:?}"),
        }
    }

    #[test]
    fn finite_difference_basics() {
        // Constant function: first difference is zero.
        let samples = rats(&[(5, 1), (5, 1)]);
        assert!(finite_difference(&samples, 1).unwrap().is_zero());
        // f(x) = x^2 on grid x = 0, h, 2h: second difference is 2 h^2.
        for (num, den) in [(1i64, 2i64), (1, 20), (3, 7)] {
            let h = BigRational::new(BigInt::from(num), BigInt::from(den));
            let samples: Vec<BigRational> = (0..3).map(|k| {
                let x = BigRational::from_integer(BigInt::from(k)) * &h;
                &x * &x
            }).collect();
            let got = finite_difference(&samples, 2).unwrap();
            assert_eq!(got, BigRational::from_integer(BigInt::from(2)) * &h * &h);
        }
        // 1, 2, 4, 8 at unit step: third difference is 1.
        let samples = rats(&[(1, 1), (2, 1), (4, 1), (8, 1)]);
        assert_eq!(finite_difference(&samples, 3).unwrap(), BigRational::from_integer(BigInt::from(1)));
        assert!(finite_difference(&samples, 4).is_err());
    }

    #[test]
    fn f_n_equals_forward_difference() {
        // n = 0 is the function value itself.
        let samples = rats(&[(7, 3)]);
        assert_eq!(f_n_recursion(&samples, 0).unwrap(), samples[0]);
        // 1, 2, 4, 8: f_3 = Δ^3 = 1.
        let samples = rats(&[(1, 1), (2, 1), (4, 1), (8, 1)]);
        assert_eq!(f_n_recursion(&samples, 3).unwrap(), finite_difference(&samples, 3).unwrap());
    }

    #[test]
    fn closed_form_queue_is_abso_mono_on_grid() {
        // p^2/(2 - 3p) sampled at p = j/20 for j = 0..12 (inside
        // [0, 0.6]): all differences up to order 8 are nonnegative.
        let samples: Vec<BigRational> = (0..=12i64)
            .map(|j| {
                let p = BigRational::new(BigInt::from(j), BigInt::from(20));
                &p * &p / (BigRational::from_integer(BigInt::from(2)) - BigRational::from_integer(BigInt::from(3)) * &p)
            })
            .collect();
        assert_eq!(abso_mono_samples(&samples, 8), MonoVerdict::Pass);
    }

    #[test]
    fn series_verdicts() {
        let pass = IntSeries::new(ints(&[0, 0, 2, 6, 18]));
        assert_eq!(abso_mono_series(&pass), MonoVerdict::Pass);
        let zero = IntSeries::zero(4);
        assert_eq!(abso_mono_series(&zero), MonoVerdict::Pass);
        let fail = IntSeries::new(ints(&[0, 3, -5]));
        match abso_mono_series(&fail) {
            MonoVerdict::NegativeCoefficient { degree, coefficient } => {
                assert_eq!(degree, 2);
                assert_eq!(coefficient, "-5");
            }
            other => panic!("unexpected verdict {other:?}"),
        }
    }

    #[test]
    fn leading_coefficient_law() {
        // N = 3: 2 s^2 + ... with prediction (1/2)·4 = 2.
        let series = IntSeries::new(ints(&[0, 0, 2, 6]));
        let check = light_traffic_leading(&series, 3).unwrap();
        assert!(check.matches);
        assert_eq!(check.predicted, "2");
        // N = 2: L = 1, no queueing, zero coefficient.
        let series = IntSeries::new(ints(&[0, 0, 0]));
        let check = light_traffic_leading(&series, 2).unwrap();
        assert!(check.matches);
        assert_eq!(check.predicted, "0");
        let short = IntSeries::new(ints(&[0, 0]));
        assert!(light_traffic_leading(&short, 3).is_err());
    }
}
