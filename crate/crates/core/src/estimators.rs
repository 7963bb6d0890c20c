//! Monte Carlo estimators: covariance decay, coupled disagreement and
//! boundary-start marginals.
//!
//! Replicas run in parallel, each on its own random stream, and are reduced in
//! replica order so results do not depend on scheduling.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{covariance_bound, ProductBasis};
use crate::error::{Error, Result};
use crate::rules::{encode_word, Rule, Symbol};
use crate::sim::{exp_sample, replica_rng, InitLaw, RingEngine, RingLattice};
use crate::stats::mean_stderr;

/// A function of the symbols on a few ring sites.
///
/// `values` is indexed by the word read on `sites`, first site most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFunction {
    pub sites: Vec<usize>,
    pub values: Vec<f64>,
    q: usize,
}

impl LocalFunction {
    pub fn new(q: usize, sites: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if values.len() != q.pow(sites.len() as u32) {
            return Err(Error::domain("local function table does not match its sites"));
        }
        Ok(LocalFunction { sites, values, q })
    }

    /// `χ_{site,a}` of a product basis.
    pub fn chi(basis: &ProductBasis, site: usize, a: Symbol) -> Self {
        let q = basis.alphabet().size();
        LocalFunction {
            sites: vec![site],
            values: (0..q).map(|s| basis.chi(a, s as Symbol)).collect(),
            q,
        }
    }

    #[inline]
    pub fn eval(&self, config: &[Symbol]) -> f64 {
        let w: Vec<Symbol> = self.sites.iter().map(|&j| config[j]).collect();
        self.values[encode_word(&w, self.q)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn pi_norm(&self, basis: &ProductBasis) -> Result<f64> {
        crate::basis::seminorm_pi(&self.values, self.sites.len(), basis, false)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.sites.iter().any(|&j| j >= n) {
            return Err(Error::domain("local function reads sites outside the ring"));
        }
        Ok(())
    }
}

/// Unbiased sample covariance and its jackknife standard error.
pub fn covariance_jackknife(a: &[f64], b: &[f64]) -> (f64, f64) {
    let r = a.len();
    let rf = r as f64;
    let ma = a.iter().sum::<f64>() / rf;
    let mb = b.iter().sum::<f64>() / rf;
    let ca: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let cb: Vec<f64> = b.iter().map(|x| x - mb).collect();
    let sab: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    let cov = sab / (rf - 1.0);
    if r < 3 {
        return (cov, f64::INFINITY);
    }
    // leave-one-out covariances from the centered sums
    let loo: Vec<f64> = ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| (sab - x * y - x * y / (rf - 1.0)) / (rf - 2.0))
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / rf;
    let var = loo.iter().map(|c| (c - mean_loo).powi(2)).sum::<f64>() * (rf - 1.0) / rf;
    (cov, var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// `Cov(f(ζ₀), g(ζ_t))` at every time of `t_grid`, from the same replicas.
#[allow(clippy::too_many_arguments)]
pub fn mc_covariance_series<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    f: &LocalFunction,
    g: &LocalFunction,
    t_grid: &[f64],
    replicas: usize,
    init: &InitLaw,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if replicas < 2 {
        return Err(Error::domain("covariance estimation needs at least 2 replicas"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain("time grid must be non-negative and increasing"));
    }
    if !ring.n.is_multiple_of(rule.period()) {
        return Err(Error::domain("ring size must be a multiple of the rule period"));
    }
    f.check(ring.n)?;
    g.check(ring.n)?;
    let engine = RingEngine::new(rule, ring.n);
    let runs: Vec<(f64, Vec<f64>)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let mut config = init.sample_ring(ring.n, &mut rng);
            let f0 = f.eval(&config);
            let mut t = 0.0;
            let gs = t_grid
                .iter()
                .map(|&tk| {
                    engine.advance(&mut config, 1.0, t, tk, &mut rng, |_, _, _| {});
                    t = tk;
                    g.eval(&config)
                })
                .collect();
            (f0, gs)
        })
        .collect();
    let fs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    Ok((0..t_grid.len())
        .map(|k| {
            let gs: Vec<f64> = runs.iter().map(|r| r.1[k]).collect();
            let (mean, stderr) = covariance_jackknife(&fs, &gs);
            Estimate { mean, stderr }
        })
        .collect())
}

/// `Cov(f(ζ₀), g(ζ_t))` with jackknife standard error.
#[allow(clippy::too_many_arguments)]
pub fn mc_covariance<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    f: &LocalFunction,
    g: &LocalFunction,
    t: f64,
    replicas: usize,
    init: &InitLaw,
    seed: u64,
) -> Result<Estimate> {
    Ok(mc_covariance_series(rule, ring, f, g, &[t], replicas, init, seed)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FittedRate {
    Fitted(f64),
    /// Too few points above the noise floor; the decay rate is at least this.
    AtLeast(f64),
}

impl FittedRate {
    pub fn value(self) -> f64 {
        match self {
            FittedRate::Fitted(r) | FittedRate::AtLeast(r) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub t_grid: Vec<f64>,
    pub cov: Vec<Estimate>,
    pub fitted_rate: FittedRate,
    /// `1 − α` of the basis, when one was supplied.
    pub bound_rate: Option<f64>,
    /// `2‖f‖∞‖g‖_Π e^{−(1−α)t}` at each grid time.
    pub bound: Option<Vec<f64>>,
    /// Every `|mean| ≤ bound + 3·stderr`.
    pub bound_respected: Option<bool>,
}

/// Least-squares slope of `log|mean|` against `t` over the points with `|mean| > 3·stderr`.
pub fn fit_log_linear(t_grid: &[f64], cov: &[Estimate]) -> FittedRate {
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(cov)
        .filter(|(_, e)| e.mean.abs() > 3.0 * e.stderr && e.mean != 0.0)
        .map(|(&t, e)| (t, e.mean.abs().ln()))
        .collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 {
            return FittedRate::Fitted(-sxy / sxx);
        }
    }
    let (t0, e0) = (t_grid[0], cov[0]);
    if e0.mean.abs() <= 3.0 * e0.stderr {
        return FittedRate::AtLeast(0.0);
    }
    let floor = t_grid
        .iter()
        .zip(cov)
        .filter(|(&t, e)| t > t0 && e.mean.abs() <= 3.0 * e.stderr && e.stderr > 0.0)
        .map(|(&t, e)| (e0.mean.abs() / (3.0 * e.stderr)).ln() / (t - t0))
        .fold(0.0, f64::max);
    FittedRate::AtLeast(floor)
}

/// Estimates the covariance decay rate and compares it with the basis bound.
#[allow(clippy::too_many_arguments)]
pub fn fit_decay<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    f: &LocalFunction,
    g: &LocalFunction,
    t_grid: &[f64],
    replicas: usize,
    init: &InitLaw,
    seed: u64,
    basis: Option<&ProductBasis>,
) -> Result<DecayEstimate> {
    if t_grid.len() < 4 {
        return Err(Error::domain("decay fits need at least 4 time points"));
    }
    let cov = mc_covariance_series(rule, ring, f, g, t_grid, replicas, init, seed)?;
    let fitted_rate = fit_log_linear(t_grid, &cov);
    let (bound_rate, bound, bound_respected) = match basis {
        Some(b) => {
            let a = crate::basis::alpha(rule, b)?;
            let (fs, gp) = (f.sup_norm(), g.pi_norm(b)?);
            let bound: Vec<f64> = t_grid.iter().map(|&t| covariance_bound(fs, gp, a, t)).collect();
            let ok = cov.iter().zip(&bound).all(|(e, b)| e.mean.abs() <= b + 3.0 * e.stderr);
            (Some(1.0 - a), Some(bound), Some(ok))
        }
        None => (None, None, None),
    };
    Ok(DecayEstimate {
        t_grid: t_grid.to_vec(),
        cov,
        fitted_rate,
        bound_rate,
        bound,
        bound_respected,
    })
}

/// Coupled runs from the all-minimal and all-maximal configurations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryRuns {
    pub t_grid: Vec<f64>,
    /// Fraction of sites where the two copies differ.
    pub disagreement: Vec<Estimate>,
    /// `from_min[k][a]`: probability that a site holds `a` at `t_grid[k]`, started from all minimal.
    pub from_min: Vec<Vec<Estimate>>,
    pub from_max: Vec<Vec<Estimate>>,
}

/// Quantile-coupled copies started from all `0` and all `q−1`, observed on `t_grid`.
pub fn boundary_runs<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<BoundaryRuns> {
    if replicas < 2 {
        return Err(Error::domain("boundary estimates need at least 2 replicas"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("time grid must be increasing"));
    }
    if !ring.n.is_multiple_of(rule.period()) {
        return Err(Error::domain("ring size must be a multiple of the rule period"));
    }
    let n = ring.n;
    let q = rule.alphabet().size();
    let top = (q - 1) as Symbol;
    let engine = RingEngine::new(rule, n);
    // per replica, per time: [disagreement, min-start law..., max-start law...]
    let runs: Vec<Vec<Vec<f64>>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let mut lo = vec![0 as Symbol; n];
            let mut hi = vec![top; n];
            let mut t = 0.0;
            let total = n as f64;
            t_grid
                .iter()
                .map(|&tk| {
                    loop {
                        let gap = exp_sample(&mut rng, total);
                        if t + gap > tk {
                            break;
                        }
                        t += gap;
                        let site = rng.gen_range(0..n);
                        let u: f64 = rng.gen();
                        lo[site] = engine.draw(&lo, site, u, true);
                        hi[site] = engine.draw(&hi, site, u, true);
                    }
                    t = tk;
                    let mut row = vec![0.0; 1 + 2 * q];
                    for j in 0..n {
                        row[0] += (lo[j] != hi[j]) as u8 as f64;
                        row[1 + lo[j] as usize] += 1.0;
                        row[1 + q + hi[j] as usize] += 1.0;
                    }
                    row.iter_mut().for_each(|v| *v /= n as f64);
                    row
                })
                .collect()
        })
        .collect();
    let column = |k: usize, c: usize| -> Estimate {
        let xs: Vec<f64> = runs.iter().map(|r| r[k][c]).collect();
        let (mean, stderr) = mean_stderr(&xs);
        Estimate { mean, stderr }
    };
    Ok(BoundaryRuns {
        t_grid: t_grid.to_vec(),
        disagreement: (0..t_grid.len()).map(|k| column(k, 0)).collect(),
        from_min: (0..t_grid.len())
            .map(|k| (0..q).map(|a| column(k, 1 + a)).collect())
            .collect(),
        from_max: (0..t_grid.len())
            .map(|k| (0..q).map(|a| column(k, 1 + q + a)).collect())
            .collect(),
    })
}

/// Mean fraction of sites where quantile-coupled copies from all-0 and all-1 differ.
pub fn disagreement_density<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<(f64, Estimate)>> {
    if rule.alphabet().size() != 2 {
        return Err(Error::unsupported("disagreement density needs alphabet 2"));
    }
    let runs = boundary_runs(rule, ring, t_grid, replicas, seed)?;
    Ok(runs.t_grid.iter().copied().zip(runs.disagreement).collect())
}

/// Single-site laws from the all-minimal and all-maximal starts at time `t`.
pub fn boundary_marginals<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<(Vec<Estimate>, Vec<Estimate>)> {
    let mut runs = boundary_runs(rule, ring, &[t], replicas, seed)?;
    Ok((runs.from_min.remove(0), runs.from_max.remove(0)))
}
