use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use ips_core::basis::{
    best_basis, criterion_verdict, grid, pca_criterion, two_stage_alpha, two_stage_basis, two_stage_condition,
    two_stage_derived_condition, two_stage_derived_sides, two_stage_rule, two_stage_sides, two_stage_young_basis,
    CriterionReport, ProductBasis,
};
use ips_core::estimators::{boundary_runs, fit_decay, fit_log_linear, Estimate, LocalFunction};
use ips_core::oracle::{build_generator, exact_distribution, lift, state_index};
use ips_core::rules::{decompose_additive, decompose_cancellative, griffeath_rate, in_gray_region, is_positive_rates};
use ips_core::sim::{
    perfect_sample_window, replica_rng, simulate_forward, simulate_pca, ClockKind, InitLaw, RingLattice, SpaceLattice,
    Trajectory, DEFAULT_CONE_CAP,
};
use ips_core::stats::{chi_squared_gof, chi_squared_homogeneity, empirical, tv_distance, ChiSquaredTest};
use ips_core::{Alphabet, ParamsNN2, PeriodicRule, Rule, Symbol};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{num, print_json, with_sink, write_pgm};
use crate::presets::parse_rule;
use crate::{
    Axis, BasisArgs, ClockArg, Command, CriterionArgs, DecomposeArgs, EstimateArgs, EstimateKind, ModeArg, OracleArgs,
    PcaArgs, SimulateArgs, SweepArgs, TwoStageArgs,
};

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Pca(a) => pca(a),
        Command::Criterion(a) => criterion(a),
        Command::Sweep(a) => sweep(a),
        Command::Decompose(a) => decompose(a),
        Command::TwoStage(a) => two_stage(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Estimate(a) => estimate(a),
    }
}

fn code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("`{v}` is not a number"))
        })
        .collect()
}

/// `min:max:steps`.
fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    ensure!(parts.len() == 3, "range `{s}` must look like min:max:steps");
    let min: f64 = parts[0]
        .trim()
        .parse()
        .with_context(|| format!("bad range minimum in `{s}`"))?;
    let max: f64 = parts[1]
        .trim()
        .parse()
        .with_context(|| format!("bad range maximum in `{s}`"))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .with_context(|| format!("bad step count in `{s}`"))?;
    ensure!(steps >= 1, "range `{s}` needs at least one step");
    Ok((min, max, steps))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let (min, max, steps) = parse_range(s)?;
    Ok(grid(min, max, steps))
}

/// `x,y` for alphabet 2 or `x1,…;y1,…`.
fn parse_basis(s: &str, alphabet: Alphabet) -> Result<ProductBasis> {
    let (x, y) = match s.split_once(';') {
        Some((xs, ys)) => (parse_floats(xs)?, parse_floats(ys)?),
        None => {
            let v = parse_floats(s)?;
            ensure!(v.len() == 2, "basis `{s}` must be `x,y` or `x1,…;y1,…`");
            (vec![v[0]], vec![v[1]])
        }
    };
    Ok(ProductBasis::new(alphabet, x, y)?)
}

fn parse_init(s: &str, q: usize) -> Result<InitLaw> {
    let top = (q - 1) as Symbol;
    Ok(match s {
        "zeros" => InitLaw::Constant(0),
        "ones" => InitLaw::Constant(top),
        "random" => InitLaw::Product(vec![1.0 / q as f64; q]),
        _ if s.starts_with("random:") => {
            let p = parse_floats(&s["random:".len()..])?;
            ensure!(p.len() == q, "initial law needs {q} probabilities");
            ensure!(
                p.iter().all(|&v| v >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9,
                "initial law must be a probability vector"
            );
            InitLaw::Product(p)
        }
        _ if !s.is_empty() && s.chars().all(|c| c.is_ascii_digit()) => {
            let pattern: Vec<Symbol> = s.bytes().map(|b| b - b'0').collect();
            ensure!(
                pattern.iter().all(|&v| (v as usize) < q),
                "pattern `{s}` uses symbols outside 0..{q}"
            );
            InitLaw::Fixed(pattern)
        }
        _ => bail!("unknown initial law `{s}`: expected zeros, ones, random, random:p0,… or a digit pattern"),
    })
}

fn ring_init(law: &InitLaw, n: usize, seed: u64) -> Vec<Symbol> {
    // stream 1 of the seed is reserved for the initial configuration
    law.sample_ring(n, &mut replica_rng(seed, 1))
}

fn write_trajectory(
    tr: &Trajectory,
    frames: usize,
    pgm: Option<&Path>,
    events: Option<&Path>,
    binary: bool,
) -> Result<()> {
    if let Some(path) = events {
        with_sink(Some(path), |w| tr.write_events_csv(w))?;
    }
    with_sink(pgm, |w| tr.write_pgm(w, frames, binary))
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    ensure!(a.frames >= 1, "at least one frame is needed");
    let law = parse_init(&a.init.init, rule.alphabet().size())?;
    let init = ring_init(&law, a.n, a.seed);
    let clock = match a.clock {
        ClockArg::Exp => ClockKind::Exp(a.rate),
        ClockArg::Delta1 => ClockKind::Delta1,
    };
    let tr = simulate_forward(&rule, RingLattice::new(a.n)?, clock, &init, a.t, a.seed)?;
    write_trajectory(&tr, a.frames, a.pgm.as_deref(), a.events.as_deref(), a.binary)?;
    Ok(ExitCode::SUCCESS)
}

fn pca(a: PcaArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    let law = parse_init(&a.init.init, rule.alphabet().size())?;
    let init = ring_init(&law, a.n, a.seed);
    let tr = simulate_pca(&rule, RingLattice::new(a.n)?, &init, a.steps, a.seed)?;
    write_trajectory(&tr, a.steps + 1, a.pgm.as_deref(), a.events.as_deref(), a.binary)?;
    Ok(ExitCode::SUCCESS)
}

/// Full `[−1, 1]` grids at step 0.01 for alphabet 2; `x = 1`, `y ∈ [−1, 0]` otherwise.
fn search_grids(b: &BasisArgs, q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (dx, dy) = if q == 2 {
        (grid(-1.0, 1.0, 201), grid(-1.0, 1.0, 201))
    } else {
        ips_core::basis::default_grids()
    };
    let x = b.x_grid.as_deref().map(parse_grid).transpose()?.unwrap_or(dx);
    let y = b.y_grid.as_deref().map(parse_grid).transpose()?.unwrap_or(dy);
    Ok((x, y))
}

enum BasisChoice {
    Fixed(ProductBasis),
    Search(Vec<f64>, Vec<f64>),
}

impl BasisChoice {
    fn from_args(b: &BasisArgs, alphabet: Alphabet) -> Result<Self> {
        if b.search {
            let (x, y) = search_grids(b, alphabet.size())?;
            Ok(BasisChoice::Search(x, y))
        } else {
            let text = match (&b.basis, alphabet.size()) {
                (Some(s), _) => s.clone(),
                (None, 2) => "1,-1".into(),
                (None, _) => bail!("alphabets above 2 need --basis or --search"),
            };
            Ok(BasisChoice::Fixed(parse_basis(&text, alphabet)?))
        }
    }

    /// The fixed-basis report, or the smallest-α candidate of the search.
    fn evaluate<R: Rule + ?Sized>(&self, rule: &R, eps: f64) -> Result<CriterionReport> {
        match self {
            BasisChoice::Fixed(b) => Ok(criterion_verdict(rule, b, eps)?),
            BasisChoice::Search(x, y) => {
                best_basis(rule, x, y, eps)?.context("the basis search grid has no admissible basis")
            }
        }
    }
}

fn criterion(a: CriterionArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    let choice = BasisChoice::from_args(&a.basis, rule.alphabet())?;
    let report = choice.evaluate(&rule, a.basis.eps)?;
    let mut pass = report.passed();
    let mut out = serde_json::to_value(&report)?;
    if a.basis.search {
        out["search"] = json!({ "found": report.passed() });
    }
    if a.pca {
        let pca = pca_criterion(&rule, &report.basis)?;
        pass = pca.verdict == ips_core::basis::Verdict::Pass;
        out["pca"] = serde_json::to_value(pca)?;
    }
    print_json(&out)?;
    Ok(code(pass))
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::P11 => 0,
        Axis::P10 => 1,
        Axis::P01 => 2,
        Axis::P00 => 3,
    }
}

fn axis_name(a: Axis) -> &'static str {
    ["p11", "p10", "p01", "p00"][axis_index(a)]
}

/// Fixed values for the two parameters that are not swept.
fn parse_fixed(s: &str, x: Axis, y: Axis) -> Result<[Option<f64>; 4]> {
    let mut out = [None; 4];
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .with_context(|| format!("`{part}` must look like p11=0"))?;
        let axis = Axis::from_str_ci(k.trim()).with_context(|| format!("unknown parameter `{k}`"))?;
        ensure!(axis != x && axis != y, "`{k}` is a swept axis and cannot be fixed");
        out[axis_index(axis)] = Some(v.trim().parse().with_context(|| format!("bad value in `{part}`"))?);
    }
    ensure!(
        out.iter().filter(|v| v.is_none()).count() == 2,
        "--fixed must set exactly the two parameters that are not swept"
    );
    Ok(out)
}

impl Axis {
    fn from_str_ci(s: &str) -> Option<Axis> {
        <Axis as clap::ValueEnum>::from_str(s, true).ok()
    }
}

struct Cell {
    x: f64,
    y: f64,
    alpha: f64,
    pass: bool,
    gray: bool,
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    ensure!(a.x_axis != a.y_axis, "the two sweep axes must differ");
    let (x0, x1, nx) = parse_range(&a.x_range)?;
    let (y0, y1, ny) = parse_range(&a.y_range)?;
    ensure!(nx >= 2 && ny >= 2, "each sweep axis needs at least 2 steps");
    let fixed = parse_fixed(&a.fixed, a.x_axis, a.y_axis)?;
    let choice = BasisChoice::from_args(&a.basis, Alphabet::binary())?;
    let (xs, ys) = (grid(x0, x1, nx), grid(y0, y1, ny));
    let points: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let cells: Vec<Cell> = points
        .par_iter()
        .map(|&(x, y)| {
            let mut p = fixed.map(|v| v.unwrap_or(0.0));
            p[axis_index(a.x_axis)] = x;
            p[axis_index(a.y_axis)] = y;
            let params = ParamsNN2::from_array(p)?;
            let report = choice.evaluate(&params.to_rule(), a.basis.eps)?;
            Ok(Cell {
                x,
                y,
                alpha: report.alpha,
                pass: report.passed(),
                gray: in_gray_region(params),
            })
        })
        .collect::<Result<_>>()?;

    let (xn, yn) = (axis_name(a.x_axis), axis_name(a.y_axis));
    with_sink(a.csv.as_deref(), |w| {
        write!(w, "{xn},{yn},alpha,verdict")?;
        if a.gray_overlay {
            write!(w, ",gray")?;
        }
        writeln!(w)?;
        for c in &cells {
            write!(
                w,
                "{},{},{},{}",
                num(c.x),
                num(c.y),
                num(c.alpha),
                if c.pass { "pass" } else { "fail" }
            )?;
            if a.gray_overlay {
                write!(w, ",{}", c.gray as u8)?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    if let Some(path) = &a.pgm {
        let rows: Vec<Vec<u8>> = (0..ny)
            .rev()
            .map(|j| {
                cells[j * nx..(j + 1) * nx]
                    .iter()
                    .map(|c| match (c.pass, a.gray_overlay && c.gray) {
                        (true, _) => 0,
                        (false, true) => 128,
                        (false, false) => 255,
                    })
                    .collect()
            })
            .collect();
        with_sink(Some(path), |w| write_pgm(w, nx, &rows, a.binary))?;
    }
    if a.csv.is_some() {
        let passed = cells.iter().filter(|c| c.pass).count();
        let mut summary = json!({
            "x_axis": xn,
            "y_axis": yn,
            "cells": cells.len(),
            "passed": passed,
            "failed": cells.len() - passed,
        });
        if a.gray_overlay {
            summary["gray_only"] = json!(cells.iter().filter(|c| !c.pass && c.gray).count());
            summary["union"] = json!(cells.iter().filter(|c| c.pass || c.gray).count());
        }
        print_json(&summary)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn decompose(a: DecomposeArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    ensure!(rule.period() == 1, "decompositions need a homogeneous rule");
    let table = rule.table(0);
    let d = match a.mode {
        ModeArg::Additive => decompose_additive(table, a.extended)?,
        ModeArg::Cancellative => decompose_cancellative(table, a.extended)?,
    };
    let rate = griffeath_rate(&d).ok();
    let labels: Vec<Value> = d
        .component_coeffs
        .iter()
        .filter(|c| c.coeff != 0.0)
        .map(|c| json!({ "label": c.label(), "coeff": c.coeff }))
        .collect();
    let mut out = serde_json::to_value(&d)?;
    out["nonzero_components"] = Value::Array(labels);
    out["positive_rates"] = json!(is_positive_rates(table));
    out["rate"] = json!(rate);
    print_json(&out)?;
    Ok(code(d.feasible))
}

fn two_stage(a: TwoStageArgs) -> Result<ExitCode> {
    let rule = two_stage_rule(a.lam, a.gam, a.del, a.n_size)?;
    let (lhs, rhs) = two_stage_sides(a.lam, a.gam, a.del, a.n_size);
    let (dlhs, drhs) = two_stage_derived_sides(a.lam, a.gam, a.del, a.n_size);
    let max_basis = two_stage_basis(a.lam, a.gam, a.del)?;
    let young_basis = two_stage_young_basis(a.gam)?;
    let with_max = criterion_verdict(&rule, &max_basis, a.eps)?;
    let with_young = criterion_verdict(&rule, &young_basis, a.eps)?;
    let out = json!({
        "lam": a.lam,
        "gam": a.gam,
        "del": a.del,
        "n_size": a.n_size,
        "published": { "lhs": lhs, "rhs": rhs, "condition": two_stage_condition(a.lam, a.gam, a.del, a.n_size) },
        "derived": { "lhs": dlhs, "rhs": drhs, "condition": two_stage_derived_condition(a.lam, a.gam, a.del, a.n_size) },
        "criterion_max_basis": with_max,
        "criterion_young_basis": with_young,
        "hand_alpha_young_basis": two_stage_alpha(a.lam, a.gam, a.del, a.n_size, young_basis.x[0]),
    });
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn histogram(states: impl Iterator<Item = usize>, cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells];
    for s in states {
        h[s] += 1;
    }
    h
}

fn chi_json(t: &ChiSquaredTest) -> Value {
    json!({ "statistic": t.statistic, "dof": t.dof, "p_value": t.p_value })
}

/// Final states of independent forward runs, as histogram over little-endian state indices.
fn forward_histogram(
    rule: &PeriodicRule,
    ring: RingLattice,
    law: &InitLaw,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let q = rule.alphabet().size();
    let states: Vec<usize> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let init = law.sample_ring(ring.n, &mut rng);
            let tr = simulate_forward(rule, ring, ClockKind::Exp(1.0), &init, t, rng.gen())?;
            Ok(state_index(&tr.final_configuration(), q))
        })
        .collect::<ips_core::Result<_>>()?;
    Ok(histogram(states.into_iter(), q.pow(ring.n as u32)))
}

fn oracle_check(a: OracleArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    ensure!(a.replicas >= 1, "at least one replica is needed");
    let q = rule.alphabet().size();
    let ring = RingLattice::new(a.n)?;
    let law = parse_init(&a.init, q)?;
    let gen = build_generator(&rule, ring)?;
    let start = lift(q, a.n, |c| law.probability(c));
    let exact = exact_distribution(&gen, &start, a.t, 1e-14)?.probs;

    let fwd = forward_histogram(&rule, ring, &law, a.t, a.replicas, a.seed)?;
    let window: Vec<i64> = (0..a.n as i64).collect();
    let cone: Vec<usize> = (0..a.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(a.seed ^ 0x5eed_c0de, r);
            let w = perfect_sample_window(
                &rule,
                &law,
                a.t,
                &window,
                SpaceLattice::Ring(a.n),
                &mut rng,
                DEFAULT_CONE_CAP,
            )?;
            Ok(state_index(&w, q))
        })
        .collect::<ips_core::Result<_>>()?;
    let cone = histogram(cone.into_iter(), exact.len());

    let tv_forward = tv_distance(&empirical(&fwd), &exact);
    let tv_perfect = tv_distance(&empirical(&cone), &exact);
    let mut pass = tv_forward <= a.tol && tv_perfect <= a.tol;
    let mut out = json!({
        "n": a.n,
        "t": a.t,
        "replicas": a.replicas,
        "seed": a.seed,
        "tv_forward": tv_forward,
        "tv_perfect_sampler": tv_perfect,
        "chi2_forward": chi_json(&chi_squared_gof(&fwd, &exact)),
        "chi2_perfect_sampler": chi_json(&chi_squared_gof(&cone, &exact)),
    });
    if let Some(lambda) = a.scale {
        let scaled = rule.time_scale(lambda)?;
        let hs = forward_histogram(&scaled, ring, &law, a.t, a.replicas, a.seed.wrapping_add(1))?;
        let hp = forward_histogram(&rule, ring, &law, lambda * a.t, a.replicas, a.seed.wrapping_add(2))?;
        let test = chi_squared_homogeneity(&hs, &hp);
        pass &= test.p_value > a.alpha;
        out["time_scaling"] = json!({
            "lambda": lambda,
            "scaled_time": a.t,
            "original_time": lambda * a.t,
            "tv": tv_distance(&empirical(&hs), &empirical(&hp)),
            "chi2": chi_json(&test),
        });
    }
    out["pass"] = json!(pass);
    print_json(&out)?;
    Ok(code(pass))
}

fn estimate(a: EstimateArgs) -> Result<ExitCode> {
    let rule = parse_rule(&a.rule.rule)?;
    let q = rule.alphabet().size();
    let ring = RingLattice::new(a.n)?;
    let times = parse_grid(&a.times)?;
    match a.kind {
        EstimateKind::Covariance => {
            let text = match (&a.basis, q) {
                (Some(s), _) => s.clone(),
                (None, 2) => "1,-1".into(),
                (None, _) => bail!("alphabets above 2 need --basis"),
            };
            let basis = parse_basis(&text, rule.alphabet())?;
            ensure!(a.letter >= 1 && (a.letter as usize) < q, "letter must lie in 1..{q}");
            ensure!(times.len() >= 4, "covariance decay needs at least 4 observation times");
            let f = LocalFunction::chi(&basis, a.n / 2, a.letter);
            let law = parse_init(&a.init.init, q)?;
            let report = criterion_verdict(&rule, &basis, a.eps)?;
            let d = fit_decay(
                &rule,
                ring,
                &f,
                &f,
                &times,
                a.replicas,
                &law,
                a.seed,
                report.passed().then_some(&basis),
            )?;
            let bound = d.bound.clone();
            write_estimates(a.csv.as_deref(), &times, &d.cov, bound.as_deref())?;
            emit_summary(
                a.csv.is_some(),
                json!({
                    "kind": "covariance",
                    "fitted_rate": d.fitted_rate,
                    "bound_rate": d.bound_rate,
                    "bound_respected": d.bound_respected,
                    "criterion": report,
                }),
            )?;
        }
        EstimateKind::Disagreement => {
            let runs = boundary_runs(&rule, ring, &times, a.replicas, a.seed)?;
            write_estimates(a.csv.as_deref(), &times, &runs.disagreement, None)?;
            emit_summary(
                a.csv.is_some(),
                json!({
                    "kind": "disagreement",
                    "fitted_rate": fit_log_linear(&times, &runs.disagreement),
                    "bound_rate": null,
                }),
            )?;
        }
        EstimateKind::Marginals => {
            let runs = boundary_runs(&rule, ring, &times, a.replicas, a.seed)?;
            with_sink(a.csv.as_deref(), |w| {
                writeln!(w, "t,start,symbol,mean,stderr")?;
                for (k, &t) in times.iter().enumerate() {
                    for (start, law) in [("min", &runs.from_min[k]), ("max", &runs.from_max[k])] {
                        for (s, e) in law.iter().enumerate() {
                            writeln!(w, "{},{start},{s},{},{}", num(t), num(e.mean), num(e.stderr))?;
                        }
                    }
                }
                Ok(())
            })?;
            let last = times.len() - 1;
            let gap: f64 = (0..q)
                .map(|s| (runs.from_max[last][s].mean - runs.from_min[last][s].mean).abs())
                .sum::<f64>()
                / 2.0;
            emit_summary(
                a.csv.is_some(),
                json!({ "kind": "marginals", "final_time": times[last], "final_tv_gap": gap }),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_estimates(path: Option<&Path>, times: &[f64], est: &[Estimate], bound: Option<&[f64]>) -> Result<()> {
    with_sink(path, |w| {
        writeln!(w, "t,mean,stderr,bound")?;
        for (k, (&t, e)) in times.iter().zip(est).enumerate() {
            let b = bound.map(|b| num(b[k])).unwrap_or_default();
            writeln!(w, "{},{},{},{b}", num(t), num(e.mean), num(e.stderr))?;
        }
        Ok(())
    })
}

/// JSON summary on standard output, unless standard output already carries the CSV.
fn emit_summary(csv_to_file: bool, summary: Value) -> Result<()> {
    if csv_to_file {
        print_json(&summary)?;
    }
    Ok(())
}
