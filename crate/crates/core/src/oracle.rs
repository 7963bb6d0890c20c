//! Exact laws of the dynamics on tiny rings.
//!
//! States are ring configurations indexed little-endian in base `q`: site `i`
//! contributes `σ(i)·q^i`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::rules::{Rule, Symbol};
use crate::sim::{format_sig, RingEngine, RingLattice};

pub const DEFAULT_STATE_CAP: usize = 4096;

/// Index of a ring configuration.
pub fn state_index(config: &[Symbol], q: usize) -> usize {
    config.iter().rev().fold(0, |acc, &s| acc * q + s as usize)
}

pub fn state_config(mut index: usize, q: usize, n: usize) -> Vec<Symbol> {
    (0..n)
        .map(|_| {
            let s = (index % q) as Symbol;
            index /= q;
            s
        })
        .collect()
}

fn state_count(q: usize, n: usize, cap: usize) -> Result<usize> {
    let states = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::StateSpaceCap {
            states: states.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(states as usize)
}

/// Continuous-time generator: every site rings at rate 1 and jumps to `a` with probability `P(a|word)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    pub q: usize,
    pub n: usize,
    n_states: usize,
    entries: Vec<f64>,
    // off-diagonal (from, to, rate)
    jumps: Vec<(u32, u32, f64)>,
}

impl GeneratorMatrix {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.n_states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.n_states..(from + 1) * self.n_states]
    }

    pub fn max_abs_diff(&self, other: &GeneratorMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn exit_rates(&self) -> Vec<f64> {
        (0..self.n_states).map(|i| -self.get(i, i)).collect()
    }

    /// One step of the uniformized kernel `I + Q/Λ`, acting on a row vector.
    fn step_left(&self, v: &[f64], exit: &[f64], lambda: f64, out: &mut [f64]) {
        for (o, (&x, &e)) in out.iter_mut().zip(v.iter().zip(exit)) {
            *o = x * (1.0 - e / lambda);
        }
        for &(i, j, r) in &self.jumps {
            out[j as usize] += v[i as usize] * r / lambda;
        }
    }

    /// Same kernel acting on a column vector.
    fn step_right(&self, v: &[f64], exit: &[f64], lambda: f64, out: &mut [f64]) {
        for (o, (&x, &e)) in out.iter_mut().zip(v.iter().zip(exit)) {
            *o = x * (1.0 - e / lambda);
        }
        for &(i, j, r) in &self.jumps {
            out[i as usize] += v[j as usize] * r / lambda;
        }
    }

    /// `e^{tQ}` applied by uniformization, to the left (`μ e^{tQ}`) or the right (`e^{tQ} g`).
    fn semigroup(&self, v: &[f64], t: f64, tol: f64, left: bool) -> Vec<f64> {
        let exit = self.exit_rates();
        let lambda = exit.iter().copied().fold(0.0, f64::max);
        if t <= 0.0 || lambda == 0.0 {
            return v.to_vec();
        }
        // chunks keep e^{−Λ·dt} far from underflow
        let chunks = (lambda * t / 32.0).ceil().max(1.0) as usize;
        let dt = t / chunks as f64;
        let chunk_tol = tol / chunks as f64;
        let mut cur = v.to_vec();
        let mut term = vec![0.0; v.len()];
        let mut next = vec![0.0; v.len()];
        for _ in 0..chunks {
            let mean = lambda * dt;
            let mut weight = (-mean).exp();
            let mut mass = weight;
            let mut acc: Vec<f64> = cur.iter().map(|x| x * weight).collect();
            term.copy_from_slice(&cur);
            let mut k = 0usize;
            while 1.0 - mass > chunk_tol && k < 10_000 {
                k += 1;
                if left {
                    self.step_left(&term, &exit, lambda, &mut next);
                } else {
                    self.step_right(&term, &exit, lambda, &mut next);
                }
                std::mem::swap(&mut term, &mut next);
                weight *= mean / k as f64;
                mass += weight;
                for (a, x) in acc.iter_mut().zip(&term) {
                    *a += weight * x;
                }
            }
            cur = acc;
        }
        cur
    }
}

pub fn build_generator<R: Rule + ?Sized>(rule: &R, ring: RingLattice) -> Result<GeneratorMatrix> {
    build_generator_capped(rule, ring, DEFAULT_STATE_CAP)
}

pub fn build_generator_capped<R: Rule + ?Sized>(rule: &R, ring: RingLattice, cap: usize) -> Result<GeneratorMatrix> {
    let q = rule.alphabet().size();
    let n = ring.n;
    if !n.is_multiple_of(rule.period()) {
        return Err(Error::domain("ring size must be a multiple of the rule period"));
    }
    let states = state_count(q, n, cap)?;
    let engine = RingEngine::new(rule, n);
    let mut entries = vec![0.0; states * states];
    let mut jumps = Vec::new();
    let pow: Vec<usize> = (0..n).map(|i| q.pow(i as u32)).collect();
    for s in 0..states {
        let config = state_config(s, q, n);
        for j in 0..n {
            let t = rule.table(j % rule.period());
            let w = engine.word(&config, j);
            let cur = config[j] as usize;
            for a in 0..q {
                let p = t.prob(w, a as Symbol);
                if a == cur || p == 0.0 {
                    continue;
                }
                let to = s - cur * pow[j] + a * pow[j];
                entries[s * states + to] += p;
                entries[s * states + s] -= p;
                jumps.push((s as u32, to as u32, p));
            }
        }
    }
    Ok(GeneratorMatrix {
        q,
        n,
        n_states: states,
        entries,
        jumps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub probs: Vec<f64>,
    pub t: f64,
}

impl ExactDistribution {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "state_index,probability")?;
        for (i, p) in self.probs.iter().enumerate() {
            writeln!(w, "{i},{}", format_sig(*p, 12))?;
        }
        Ok(())
    }

    /// Law of the symbols on a subset of sites, indexed little-endian over `sites`.
    pub fn marginal(&self, q: usize, n: usize, sites: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; q.pow(sites.len() as u32)];
        for (s, &p) in self.probs.iter().enumerate() {
            let c = state_config(s, q, n);
            let sub: Vec<Symbol> = sites.iter().map(|&j| c[j]).collect();
            out[state_index(&sub, q)] += p;
        }
        out
    }
}

/// `μ e^{tQ}` with total-variation truncation error below `tol`.
pub fn exact_distribution(gen: &GeneratorMatrix, init: &[f64], t: f64, tol: f64) -> Result<ExactDistribution> {
    if init.len() != gen.n_states {
        return Err(Error::domain("initial distribution has the wrong number of states"));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain("time must be non-negative"));
    }
    Ok(ExactDistribution {
        probs: gen.semigroup(init, t, tol, true),
        t,
    })
}

/// `E[g(ζ_t) | ζ₀ = ·]` for every starting state.
pub fn conditional_expectation(gen: &GeneratorMatrix, g: &[f64], t: f64, tol: f64) -> Vec<f64> {
    gen.semigroup(g, t, tol, false)
}

/// `Cov(f(ζ₀), g(ζ_t))` with `ζ₀ ~ init`.
pub fn exact_covariance<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    f: &[f64],
    g: &[f64],
    t: f64,
    init: &[f64],
) -> Result<f64> {
    let gen = build_generator(rule, ring)?;
    exact_covariance_with(&gen, f, g, t, init)
}

pub fn exact_covariance_with(gen: &GeneratorMatrix, f: &[f64], g: &[f64], t: f64, init: &[f64]) -> Result<f64> {
    let s = gen.n_states;
    if f.len() != s || g.len() != s || init.len() != s {
        return Err(Error::domain("observables and law must cover every state"));
    }
    let h = conditional_expectation(gen, g, t, 1e-14);
    let ef: f64 = init.iter().zip(f).map(|(m, x)| m * x).sum();
    let eh: f64 = init.iter().zip(&h).map(|(m, x)| m * x).sum();
    let efh: f64 = init.iter().zip(f).zip(&h).map(|((m, x), y)| m * x * y).sum();
    Ok(efh - ef * eh)
}

/// `steps` synchronous updates: the one-step kernel is the product over sites of the rule rows.
pub fn exact_pca_distribution<R: Rule + ?Sized>(
    rule: &R,
    ring: RingLattice,
    init: &[f64],
    steps: usize,
) -> Result<ExactDistribution> {
    let q = rule.alphabet().size();
    let n = ring.n;
    if !n.is_multiple_of(rule.period()) {
        return Err(Error::domain("ring size must be a multiple of the rule period"));
    }
    let states = state_count(q, n, DEFAULT_STATE_CAP)?;
    if init.len() != states {
        return Err(Error::domain("initial distribution has the wrong number of states"));
    }
    let engine = RingEngine::new(rule, n);
    let mut cur = init.to_vec();
    for _ in 0..steps {
        let mut next = vec![0.0; states];
        let mut prod = vec![0.0; states];
        for (s, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let config = state_config(s, q, n);
            // build the product law site by site; site j is digit j
            prod[0] = mass;
            let mut len = 1;
            for j in 0..n {
                let row = rule.table(j % rule.period()).row(engine.word(&config, j));
                for a in (0..q).rev() {
                    for i in 0..len {
                        prod[a * len + i] = prod[i] * row[a];
                    }
                }
                len *= q;
            }
            for (x, p) in next.iter_mut().zip(&prod) {
                *x += p;
            }
        }
        cur = next;
    }
    Ok(ExactDistribution {
        probs: cur,
        t: steps as f64,
    })
}

/// Point mass on one configuration.
pub fn point_mass(config: &[Symbol], q: usize) -> Vec<f64> {
    let mut v = vec![0.0; q.pow(config.len() as u32)];
    v[state_index(config, q)] = 1.0;
    v
}

/// Lifts a function of the configuration to a table over all ring states.
pub fn lift(q: usize, n: usize, f: impl Fn(&[Symbol]) -> f64) -> Vec<f64> {
    (0..q.pow(n as u32)).map(|s| f(&state_config(s, q, n))).collect()
}
