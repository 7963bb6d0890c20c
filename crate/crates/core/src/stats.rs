//! Goodness-of-fit helpers for the statistical tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi2_p(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let d = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - d.cdf(statistic)
}

/// Pearson goodness of fit of `observed` counts against `expected` probabilities.
///
/// Cells with expected count below 5 are pooled into one cell.
pub fn chi_squared_gof(observed: &[u64], expected: &[f64]) -> ChiSquaredTest {
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * n;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    } else if pool_o > 0.0 {
        stat = f64::INFINITY;
    }
    let dof = cells.saturating_sub(1);
    ChiSquaredTest {
        statistic: stat,
        dof,
        p_value: chi2_p(stat, dof),
    }
}

/// Two-sample test that `a` and `b` are counts from the same categorical law.
///
/// Categories with fewer than 5 pooled observations are merged.
pub fn chi_squared_homogeneity(a: &[u64], b: &[u64]) -> ChiSquaredTest {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y < 5 {
            pool.0 += x as f64;
            pool.1 += y as f64;
        } else {
            cells.push((x as f64, y as f64));
        }
    }
    if pool.0 + pool.1 > 0.0 {
        cells.push(pool);
    }
    let n = na + nb;
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (na * col / n, nb * col / n);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = cells.len().saturating_sub(1);
    ChiSquaredTest {
        statistic: stat,
        dof,
        p_value: chi2_p(stat, dof),
    }
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn empirical(counts: &[u64]) -> Vec<f64> {
    let n = counts.iter().sum::<u64>().max(1) as f64;
    counts.iter().map(|&c| c as f64 / n).collect()
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
