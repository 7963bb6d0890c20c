//! Trajectory generation on finite rings and on the infinite line.
//!
//! Continuous-time dynamics use the aggregate-rate method: one exponential gap
//! with rate `n·rate`, one uniformly chosen site, one uniform `u` deciding the new
//! symbol, drawn in that order. Replica `r` of a seeded experiment uses the
//! ChaCha8 stream `r` of the seed.

use std::collections::BTreeSet;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rules::{PeriodicRule, Rule, Symbol};

/// Random source for replica `replica` of an experiment seeded with `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// `Exp(rate)` by inversion.
#[inline]
pub fn exp_sample<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Ring `Z/nZ`; neighborhood offsets are taken mod `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RingLattice {
    pub n: usize,
}

impl RingLattice {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("ring size must be at least 1"));
        }
        Ok(RingLattice { n })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    /// Independent `Exp(rate)` waiting times at each site.
    Exp(f64),
    /// Synchronous updates of every site at integer times.
    Delta1,
}

impl Default for ClockKind {
    fn default() -> Self {
        ClockKind::Exp(1.0)
    }
}

/// Law of the initial configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum InitLaw {
    Constant(Symbol),
    /// Independent sites with the given marginal.
    Product(Vec<f64>),
    /// A fixed pattern, repeated periodically along the lattice.
    Fixed(Vec<Symbol>),
}

impl InitLaw {
    pub fn sample<R: Rng + ?Sized>(&self, sites: impl Iterator<Item = i64>, rng: &mut R) -> Vec<Symbol> {
        sites
            .map(|j| match self {
                InitLaw::Constant(s) => *s,
                InitLaw::Product(p) => {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut pick = p.len() - 1;
                    for (a, &w) in p.iter().enumerate() {
                        acc += w;
                        if u < acc {
                            pick = a;
                            break;
                        }
                    }
                    pick as Symbol
                }
                InitLaw::Fixed(pattern) => pattern[j.rem_euclid(pattern.len() as i64) as usize],
            })
            .collect()
    }

    pub fn sample_ring<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Symbol> {
        self.sample(0..n as i64, rng)
    }

    /// Probability of a ring configuration.
    pub fn probability(&self, config: &[Symbol]) -> f64 {
        config
            .iter()
            .enumerate()
            .map(|(j, &s)| match self {
                InitLaw::Constant(c) => (s == *c) as u8 as f64,
                InitLaw::Product(p) => p[s as usize],
                InitLaw::Fixed(pattern) => (pattern[j % pattern.len()] == s) as u8 as f64,
            })
            .product()
    }
}

/// Precomputed neighborhood reads for a rule on a ring.
pub(crate) struct RingEngine<'a, R: Rule + ?Sized> {
    rule: &'a R,
    n: usize,
    q: usize,
    offsets: Vec<usize>,
}

impl<'a, R: Rule + ?Sized> RingEngine<'a, R> {
    pub(crate) fn new(rule: &'a R, n: usize) -> Self {
        let offsets = rule
            .neighborhood()
            .offsets()
            .iter()
            .map(|&o| o.rem_euclid(n as i64) as usize)
            .collect();
        RingEngine {
            rule,
            n,
            q: rule.alphabet().size(),
            offsets,
        }
    }

    #[inline]
    pub(crate) fn word(&self, config: &[Symbol], site: usize) -> usize {
        let mut w = 0;
        for &o in &self.offsets {
            let mut k = site + o;
            if k >= self.n {
                k -= self.n;
            }
            w = w * self.q + config[k] as usize;
        }
        w
    }

    #[inline]
    pub(crate) fn draw(&self, config: &[Symbol], site: usize, u: f64, quantile: bool) -> Symbol {
        let t = self.rule.table(site % self.rule.period());
        let w = self.word(config, site);
        if quantile {
            t.sample_upper_quantile(w, u)
        } else {
            t.sample_inverse_cdf(w, u)
        }
    }

    /// Runs the continuous-time dynamics from `t0` to `t1`, calling `on_event` after each update.
    pub(crate) fn advance<G: Rng + ?Sized>(
        &self,
        config: &mut [Symbol],
        rate: f64,
        t0: f64,
        t1: f64,
        rng: &mut G,
        mut on_event: impl FnMut(f64, usize, Symbol),
    ) {
        let total = rate * self.n as f64;
        let mut t = t0;
        loop {
            t += exp_sample(rng, total);
            if t > t1 {
                return;
            }
            let site = rng.gen_range(0..self.n);
            let u: f64 = rng.gen();
            let s = self.draw(config, site, u, false);
            config[site] = s;
            on_event(t, site, s);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub site: u32,
    pub symbol: Symbol,
}

/// A space-time history on a ring: the initial configuration and every update.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub lattice: RingLattice,
    pub clock: ClockKind,
    pub rule: PeriodicRule,
    pub seed: u64,
    pub t_max: f64,
    pub init: Vec<Symbol>,
    /// Updates in time order, ties ordered by site.
    pub events: Vec<Event>,
    by_site: Vec<Vec<u32>>,
}

impl Trajectory {
    fn new(
        lattice: RingLattice,
        clock: ClockKind,
        rule: PeriodicRule,
        seed: u64,
        t_max: f64,
        init: Vec<Symbol>,
        events: Vec<Event>,
    ) -> Self {
        let mut by_site = vec![Vec::new(); lattice.n];
        for (i, e) in events.iter().enumerate() {
            by_site[e.site as usize].push(i as u32);
        }
        Trajectory {
            lattice,
            clock,
            rule,
            seed,
            t_max,
            init,
            events,
            by_site,
        }
    }

    /// Symbol at `site` at time `t` (right-continuous).
    pub fn query(&self, site: usize, t: f64) -> Symbol {
        let idx = &self.by_site[site];
        let k = idx.partition_point(|&i| self.events[i as usize].time <= t);
        if k == 0 {
            self.init[site]
        } else {
            self.events[idx[k - 1] as usize].symbol
        }
    }

    pub fn configuration_at(&self, t: f64) -> Vec<Symbol> {
        (0..self.lattice.n).map(|j| self.query(j, t)).collect()
    }

    pub fn final_configuration(&self) -> Vec<Symbol> {
        let mut c = self.init.clone();
        for e in &self.events {
            c[e.site as usize] = e.symbol;
        }
        c
    }

    /// Event times of one site.
    pub fn site_times(&self, site: usize) -> impl Iterator<Item = f64> + '_ {
        self.by_site[site].iter().map(|&i| self.events[i as usize].time)
    }

    /// Calls `f` with the configuration after each event.
    pub fn replay(&self, mut f: impl FnMut(&Event, &[Symbol])) {
        let mut c = self.init.clone();
        for e in &self.events {
            c[e.site as usize] = e.symbol;
            f(e, &c);
        }
    }

    /// `frames` configurations at evenly spaced times from 0 to `t_max`.
    pub fn raster(&self, frames: usize) -> Vec<Vec<Symbol>> {
        let mut out = Vec::with_capacity(frames);
        let mut c = self.init.clone();
        let mut next = 0;
        for k in 0..frames {
            let t = if frames <= 1 {
                self.t_max
            } else {
                self.t_max * k as f64 / (frames - 1) as f64
            };
            while next < self.events.len() && self.events[next].time <= t {
                let e = self.events[next];
                c[e.site as usize] = e.symbol;
                next += 1;
            }
            out.push(c.clone());
        }
        out
    }

    /// Space-time raster as PGM, latest time on the top row.
    pub fn write_pgm<W: Write>(&self, mut w: W, frames: usize, binary: bool) -> io::Result<()> {
        let rows = self.raster(frames);
        let q = self.rule.alphabet().size();
        let gray = |s: Symbol| (s as usize * 255 / (q - 1)) as u8;
        let n = self.lattice.n;
        if binary {
            write!(w, "P5\n{n} {}\n255\n", rows.len())?;
            for row in rows.iter().rev() {
                let bytes: Vec<u8> = row.iter().map(|&s| gray(s)).collect();
                w.write_all(&bytes)?;
            }
        } else {
            writeln!(w, "P2\n{n} {}\n255", rows.len())?;
            for row in rows.iter().rev() {
                let line: Vec<String> = row.iter().map(|&s| gray(s).to_string()).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }

    /// Event list as CSV `time,site,symbol`.
    pub fn write_events_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,site,symbol")?;
        for e in &self.events {
            writeln!(w, "{},{},{}", format_sig(e.time, 12), e.site, e.symbol)?;
        }
        Ok(())
    }
}

/// Shortest decimal rendering of `v` rounded to `digits` significant digits.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    let rounded: f64 = s.parse().expect("formatted float parses");
    let out = rounded.to_string();
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

fn check_init<R: Rule + ?Sized>(rule: &R, lattice: RingLattice, init: &[Symbol]) -> Result<()> {
    if init.len() != lattice.n {
        return Err(Error::domain(format!(
            "initial configuration has {} sites, ring has {}",
            init.len(),
            lattice.n
        )));
    }
    if !lattice.n.is_multiple_of(rule.period()) {
        return Err(Error::domain("ring size must be a multiple of the rule period"));
    }
    if init.iter().any(|&s| s as usize >= rule.alphabet().size()) {
        return Err(Error::domain("initial configuration uses symbols outside the alphabet"));
    }
    Ok(())
}

/// Continuous-time dynamics with independent clocks of the given kind on every site.
pub fn simulate_forward<R: Rule + ?Sized>(
    rule: &R,
    lattice: RingLattice,
    clock: ClockKind,
    init: &[Symbol],
    t_max: f64,
    seed: u64,
) -> Result<Trajectory> {
    check_init(rule, lattice, init)?;
    if t_max.is_nan() || t_max < 0.0 {
        return Err(Error::domain("time horizon must be non-negative"));
    }
    let rate = match clock {
        ClockKind::Exp(r) if r > 0.0 => r,
        ClockKind::Exp(r) => return Err(Error::domain(format!("clock rate {r} must be positive"))),
        ClockKind::Delta1 => return simulate_pca(rule, lattice, init, t_max.floor() as usize, seed),
    };
    let engine = RingEngine::new(rule, lattice.n);
    let mut rng = replica_rng(seed, 0);
    let mut config = init.to_vec();
    let mut events = Vec::new();
    engine.advance(&mut config, rate, 0.0, t_max, &mut rng, |time, site, symbol| {
        events.push(Event {
            time,
            site: site as u32,
            symbol,
        })
    });
    Ok(Trajectory::new(
        lattice,
        clock,
        rule.to_periodic(),
        seed,
        t_max,
        init.to_vec(),
        events,
    ))
}

/// Synchronous updates at times `1, …, steps`; every site reads the pre-step configuration.
pub fn simulate_pca<R: Rule + ?Sized>(
    rule: &R,
    lattice: RingLattice,
    init: &[Symbol],
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    check_init(rule, lattice, init)?;
    let engine = RingEngine::new(rule, lattice.n);
    let mut rng = replica_rng(seed, 0);
    let mut config = init.to_vec();
    let mut next = config.clone();
    let mut events = Vec::with_capacity(steps * lattice.n);
    for step in 1..=steps {
        for (site, slot) in next.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            *slot = engine.draw(&config, site, u, false);
            events.push(Event {
                time: step as f64,
                site: site as u32,
                symbol: *slot,
            });
        }
        std::mem::swap(&mut config, &mut next);
    }
    Ok(Trajectory::new(
        lattice,
        ClockKind::Delta1,
        rule.to_periodic(),
        seed,
        steps as f64,
        init.to_vec(),
        events,
    ))
}

/// Runs several rules from several initial configurations on shared randomness:
/// the same event times, sites and uniforms drive every copy.
///
/// With `quantile` the new symbol is `max{a : u < P(a₊|σ)}`, which preserves the
/// order between copies whenever the rules dominate each other.
pub fn couple<R: Rule>(
    rules: &[R],
    lattice: RingLattice,
    inits: &[Vec<Symbol>],
    t_max: f64,
    seed: u64,
    quantile: bool,
) -> Result<Vec<Trajectory>> {
    if rules.len() != inits.len() || rules.is_empty() {
        return Err(Error::domain("couple needs one initial configuration per rule"));
    }
    let first = &rules[0];
    for (r, init) in rules.iter().zip(inits) {
        if r.alphabet() != first.alphabet() || r.neighborhood() != first.neighborhood() {
            return Err(Error::domain("coupled rules must share alphabet and neighborhood"));
        }
        check_init(r, lattice, init)?;
    }
    let engines: Vec<_> = rules.iter().map(|r| RingEngine::new(r, lattice.n)).collect();
    let mut configs: Vec<Vec<Symbol>> = inits.to_vec();
    let mut events: Vec<Vec<Event>> = vec![Vec::new(); rules.len()];
    let mut rng = replica_rng(seed, 0);
    let total = lattice.n as f64;
    let mut t = 0.0;
    loop {
        t += exp_sample(&mut rng, total);
        if t > t_max {
            break;
        }
        let site = rng.gen_range(0..lattice.n);
        let u: f64 = rng.gen();
        for ((e, c), ev) in engines.iter().zip(configs.iter_mut()).zip(events.iter_mut()) {
            let s = e.draw(c, site, u, quantile);
            c[site] = s;
            ev.push(Event {
                time: t,
                site: site as u32,
                symbol: s,
            });
        }
    }
    Ok(rules
        .iter()
        .zip(inits)
        .zip(events)
        .map(|((r, init), ev)| {
            Trajectory::new(
                lattice,
                ClockKind::Exp(1.0),
                r.to_periodic(),
                seed,
                t_max,
                init.clone(),
                ev,
            )
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConePoint {
    pub time: f64,
    pub site: i64,
    pub u: f64,
}

/// Update points that can influence a window of the infinite line at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeSample {
    pub window: Vec<i64>,
    pub t: f64,
    /// Points in decreasing time order.
    pub points: Vec<ConePoint>,
    /// Sites whose time-0 values are read, sorted.
    pub base: Vec<i64>,
    pub truncated: bool,
}

pub const DEFAULT_CONE_CAP: usize = 1_000_000;

/// Site space of the backward sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceLattice {
    Line,
    Ring(usize),
}

impl SpaceLattice {
    #[inline]
    pub fn wrap(self, site: i64) -> i64 {
        match self {
            SpaceLattice::Line => site,
            SpaceLattice::Ring(n) => site.rem_euclid(n as i64),
        }
    }
}

/// Grows the backward cone of `window` from time `t` down to 0.
///
/// Every site in the current set carries an independent time-reversed
/// `Exp(rate)` clock; a struck site `j` adjoins `j + N` to the set.
pub fn cone_of_dependence<G: Rng + ?Sized>(
    t: f64,
    window: &[i64],
    offsets: &[i64],
    lattice: SpaceLattice,
    rate: f64,
    rng: &mut G,
    cap: usize,
) -> ConeSample {
    let window: Vec<i64> = window.iter().map(|&j| lattice.wrap(j)).collect();
    let mut set: BTreeSet<i64> = window.iter().copied().collect();
    let mut members: Vec<i64> = set.iter().copied().collect();
    let mut points = Vec::new();
    let mut s = t;
    let mut truncated = false;
    if !set.is_empty() {
        loop {
            s -= exp_sample(rng, rate * members.len() as f64);
            if s <= 0.0 {
                break;
            }
            if points.len() >= cap {
                truncated = true;
                break;
            }
            let site = members[rng.gen_range(0..members.len())];
            let u: f64 = rng.gen();
            points.push(ConePoint { time: s, site, u });
            for &o in offsets {
                let k = lattice.wrap(site + o);
                if set.insert(k) {
                    members.push(k);
                }
            }
        }
    }
    ConeSample {
        window,
        t,
        points,
        base: set.into_iter().collect(),
        truncated,
    }
}

/// Exact draw of the time-`t` configuration on `window` for the process started
/// from `init`, using only the updates inside the backward cone.
pub fn perfect_sample_window<R: Rule + ?Sized, G: Rng + ?Sized>(
    rule: &R,
    init: &InitLaw,
    t: f64,
    window: &[i64],
    lattice: SpaceLattice,
    rng: &mut G,
    cap: usize,
) -> Result<Vec<Symbol>> {
    if let SpaceLattice::Ring(n) = lattice {
        if n % rule.period() != 0 {
            return Err(Error::domain("ring size must be a multiple of the rule period"));
        }
    }
    let offsets = rule.neighborhood().offsets();
    let cone = cone_of_dependence(t, window, offsets, lattice, 1.0, rng, cap);
    if cone.truncated {
        return Err(Error::TruncatedCone(Box::new(cone)));
    }
    let mut values = init.sample(cone.base.iter().copied(), rng);
    let index = |site: i64| cone.base.binary_search(&site).expect("cone is closed under reads");
    let q = rule.alphabet().size();
    for p in cone.points.iter().rev() {
        let w = offsets
            .iter()
            .fold(0, |acc, &o| acc * q + values[index(lattice.wrap(p.site + o))] as usize);
        values[index(p.site)] = rule.table_at(p.site).sample_inverse_cdf(w, p.u);
    }
    Ok(cone.window.iter().map(|&j| values[index(j)]).collect())
}

/// Gaps between retained points when `Exp(1)` arrivals are kept independently with probability `λ`.
pub fn sample_thinned_gaps(lambda: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::domain(format!("retention probability {lambda} outside (0,1]")));
    }
    let mut rng = replica_rng(seed, 0);
    let mut gaps = Vec::with_capacity(count);
    let mut since = 0.0;
    while gaps.len() < count {
        since += exp_sample(&mut rng, 1.0);
        if rng.gen::<f64>() < lambda {
            gaps.push(since);
            since = 0.0;
        }
    }
    Ok(gaps)
}
