//! Small statistical helpers used by the simulation harness and the
//! acceptance checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kahan compensated accumulator. Replication aggregation has to be
/// order-independent down to the last bit, so means are summed stably.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }
}

/// Mean and standard error of a set of per-replication means.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mut acc = Kahan::default();
    for &v in values {
        acc.add(v);
    }
    let mean = acc.sum() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut var = Kahan::default();
    for &v in values {
        var.add((v - mean) * (v - mean));
    }
    let se = (var.sum() / ((n - 1) as f64 * n as f64)).sqrt();
    (mean, se)
}

/// Goodness-of-fit chi-square of observed counts against a discrete
/// distribution. Cells whose expected count falls below `min_expected`
/// are pooled into the last kept cell. Returns `(statistic, dof,
/// p_value)`.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let mut obs_pooled: Vec<f64> = Vec::new();
    let mut exp_pooled: Vec<f64> = Vec::new();
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * total as f64;
        if !exp_pooled.is_empty() && e < min_expected {
            *obs_pooled.last_mut().unwrap() += o as f64;
            *exp_pooled.last_mut().unwrap() += e;
        } else {
            obs_pooled.push(o as f64);
            exp_pooled.push(e);
        }
    }
    chi_square_from_cells(&obs_pooled, &exp_pooled)
}

/// Two-sample chi-square for homogeneity of two histograms over the
/// same bins.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut cells_a = Vec::new();
    let mut cells_ea = Vec::new();
    let mut cells_b = Vec::new();
    let mut cells_eb = Vec::new();
    for (&oa, &ob) in a.iter().zip(b) {
        let row = (oa + ob) as f64;
        let ea = row * na as f64 / n;
        let eb = row * nb as f64 / n;
        if !cells_ea.is_empty() && (ea < min_expected || eb < min_expected) {
            *cells_a.last_mut().unwrap() += oa as f64;
            *cells_ea.last_mut().unwrap() += ea;
            *cells_b.last_mut().unwrap() += ob as f64;
            *cells_eb.last_mut().unwrap() += eb;
        } else {
            cells_a.push(oa as f64);
            cells_ea.push(ea);
            cells_b.push(ob as f64);
            cells_eb.push(eb);
        }
    }
    let mut stat = 0.0;
    let mut dof = 0usize;
    for i in 0..cells_a.len() {
        if cells_ea[i] > 0.0 {
            stat += (cells_a[i] - cells_ea[i]).powi(2) / cells_ea[i];
            stat += (cells_b[i] - cells_eb[i]).powi(2) / cells_eb[i];
            dof += 1;
        }
    }
    dof = dof.saturating_sub(1);
    (stat, dof, chi_square_p(stat, dof))
}

fn chi_square_from_cells(obs: &[f64], exp: &[f64]) -> (f64, usize, f64) {
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &e) in obs.iter().zip(exp) {
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
            cells += 1;
        }
    }
    let dof = cells.saturating_sub(1);
    (stat, dof, chi_square_p(stat, dof))
}

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("dof > 0");
    1.0 - dist.cdf(stat)
}

/// Ordinary least squares fit `y = a + b x`. Returns the slope, its
/// standard error, and a 95% confidence interval.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64, (f64, f64)) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - slope * x).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    (slope, se, (slope - 1.96 * se, slope + 1.96 * se))
}
