//! End-to-end acceptance suite. Prints one line per criterion and exits non-zero
//! if any criterion fails.

use std::time::{Duration, Instant};

use ips_core::basis::{
    alpha, basis_search, criterion_verdict, grid, two_stage_basis, two_stage_condition, two_stage_derived_condition,
    two_stage_derived_sides, two_stage_rule, two_stage_sides, two_stage_young_basis, ProductBasis, DEFAULT_EPS,
};
use ips_core::estimators::{fit_decay, LocalFunction};
use ips_core::oracle::{build_generator, exact_covariance_with, exact_distribution, lift, point_mass, state_index};
use ips_core::rules::{
    check_weak_lemma, decompose_additive, decompose_cancellative, griffeath_rate, is_monotone, is_positive_rates,
    is_weakly_monotone,
};
use ips_core::sim::{
    couple, perfect_sample_window, replica_rng, sample_thinned_gaps, simulate_forward, ClockKind, InitLaw, RingLattice,
    SpaceLattice, DEFAULT_CONE_CAP,
};
use ips_core::stats::{chi_squared_homogeneity, exp_cdf, ks_distance, tv_distance};
use ips_core::{Alphabet, Neighborhood, ParamsNN2, Rule, RuleTable, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    /// A sub-check that cannot hold as stated; the attainable part must still pass.
    unattainable: Option<String>,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        unattainable: None,
        detail: detail.into(),
    }
}

fn nn2(p: [f64; 4]) -> RuleTable {
    ParamsNN2::from_array(p).unwrap().to_rule()
}

fn random_rule(rng: &mut ChaCha8Rng, q: usize, offsets: Vec<i64>) -> RuleTable {
    RuleTable::from_fn(Alphabet::new(q).unwrap(), Neighborhood::new(offsets).unwrap(), |_| {
        let w: Vec<f64> = (0..q).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
    .unwrap()
}

fn random_basis(rng: &mut ChaCha8Rng, q: usize) -> ProductBasis {
    let x = (1..q).map(|_| rng.gen_range(0.05..1.0)).collect();
    let y = (1..q).map(|_| rng.gen_range(-1.0..-0.05)).collect();
    ProductBasis::new(Alphabet::new(q).unwrap(), x, y).unwrap()
}

fn histogram(samples: impl Iterator<Item = usize>, cells: usize) -> Vec<u64> {
    let mut h = vec![0u64; cells];
    samples.for_each(|i| h[i] += 1);
    h
}

fn c1_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = ProductBasis::binary(1.0, -1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p10, p01, p00) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        let row = ips_core::basis::update_row(&nn2([0.0, p10, p01, p00]), &b, 0, 1).unwrap();
        let expected = [
            (vec![0, 0], (p10 + p01 + p00) / 2.0 - 1.0),
            (vec![1, 0], (p10 - p01 - p00) / 2.0),
            (vec![0, 1], (-p10 + p01 - p00) / 2.0),
            (vec![1, 1], (-p10 - p01 + p00) / 2.0),
        ];
        for (letters, c) in expected {
            worst = worst.max((row.repr.coeff(&letters) - c).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max coefficient error {worst:.2e}"))
}

fn c2_region() -> Outcome {
    let b = ProductBasis::binary(1.0, -1.0).unwrap();
    let g = grid(0.0, 1.0, 101);
    let cells: Vec<(f64, f64)> = g.iter().flat_map(|&a| g.iter().map(move |&c| (a, c))).collect();
    let results: Vec<Option<bool>> = cells
        .par_iter()
        .map(|&(p10, p01)| {
            if (p10 - p01 - 0.1).abs() < 1e-9 {
                return None;
            }
            let r = nn2([0.0, p10, p01, 0.1]);
            let verdict = criterion_verdict(&r, &b, DEFAULT_EPS).unwrap().passed();
            Some(verdict == (is_positive_rates(&r) && p10 < p01 + 0.1))
        })
        .collect();
    let checked = results.iter().flatten().count();
    let bad = results.iter().flatten().filter(|ok| !**ok).count();
    outcome(bad == 0, format!("{bad} mismatches over {checked} cells"))
}

fn c3_case_two() -> Outcome {
    let b = ProductBasis::binary(1.0, -0.3).unwrap();
    let g = grid(0.02, 0.98, 51);
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for &p11 in &g {
        for &p01 in &g {
            let rep = criterion_verdict(&nn2([p11, 0.0, p01, 0.3]), &b, DEFAULT_EPS).unwrap();
            worst = worst.max(rep.alpha);
            fails += !rep.passed() as usize;
        }
    }
    outcome(fails == 0, format!("{fails} failing cells, worst α = {worst:.4}"))
}

fn c4_negative_instance() -> Outcome {
    let r = nn2([0.0, 0.99, 0.05, 0.01]);
    let g = grid(-1.0, 1.0, 201);
    let found = basis_search(&r, &g, &g, DEFAULT_EPS).unwrap();
    let best = g
        .par_iter()
        .flat_map_iter(|&x| g.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| x != y && x * y <= 0.0)
        .map(|(x, y)| alpha(&r, &ProductBasis::binary(x, y).unwrap()).unwrap())
        .reduce(|| f64::INFINITY, f64::min);
    outcome(
        found.is_none(),
        format!("passing basis: {}, smallest α on the grid {best:.4}", found.is_some()),
    )
}

fn c5_scaled_alpha() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let (q, offsets) = match i % 3 {
            0 => (2, vec![0, 1]),
            1 => (2, vec![-1, 0, 1]),
            _ => (3, vec![0, 1]),
        };
        let r = random_rule(&mut rng, q, offsets);
        let b = random_basis(&mut rng, q);
        let lambda = rng.gen_range(0.01..=1.0);
        let a = alpha(&r, &b).unwrap();
        let s = alpha(&r.time_scale(lambda).unwrap(), &b).unwrap();
        worst = worst.max(((1.0 - s) - lambda * (1.0 - a)).abs());
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn final_states<R: Rule + ?Sized + Sync>(rule: &R, n: usize, t: f64, replicas: u64, seed0: u64) -> Vec<u64> {
    let ring = RingLattice::new(n).unwrap();
    let q = rule.alphabet().size();
    let init = vec![0 as Symbol; n];
    let idx: Vec<usize> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let tr = simulate_forward(rule, ring, ClockKind::Exp(1.0), &init, t, seed0 + r).unwrap();
            state_index(&tr.final_configuration(), q)
        })
        .collect();
    histogram(idx.into_iter(), q.pow(n as u32))
}

fn c6_time_scaling() -> Outcome {
    let p = nn2([0.0, 0.2, 0.8, 0.1]);
    let lambda = 0.4;
    let scaled = p.time_scale(lambda).unwrap();
    let ring = RingLattice::new(3).unwrap();
    let g = build_generator(&p, ring).unwrap();
    let gs = build_generator(&scaled, ring).unwrap();
    let mut diff: f64 = 0.0;
    for i in 0..g.n_states() {
        for j in 0..g.n_states() {
            diff = diff.max((gs.get(i, j) - lambda * g.get(i, j)).abs());
        }
    }
    let a = final_states(&scaled, 3, 2.0, 100_000, 0);
    let b = final_states(&p, 3, 2.0 * lambda, 100_000, 1_000_000);
    let test = chi_squared_homogeneity(&a, &b);
    outcome(
        diff <= 1e-12 && test.p_value > 0.001,
        format!("generator deviation {diff:.2e}, chi-squared p = {:.4}", test.p_value),
    )
}

fn c7_thinning() -> Outcome {
    let gaps = sample_thinned_gaps(0.3, 100_000, 7).unwrap();
    let d = ks_distance(&gaps, exp_cdf(0.3));
    outcome(d <= 0.01, format!("KS distance {d:.4}"))
}

fn c8_oracle() -> Outcome {
    let p = nn2([0.0, 0.2, 0.8, 0.1]);
    let ring = RingLattice::new(3).unwrap();
    let gen = build_generator(&p, ring).unwrap();
    let exact = exact_distribution(&gen, &point_mass(&[0, 0, 0], 2), 1.0, 1e-14)
        .unwrap()
        .probs;
    let n = 100_000u64;
    let fwd = final_states(&p, 3, 1.0, n, 80_000_000);
    let law = InitLaw::Constant(0);
    let cone: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(8, r);
            let w = perfect_sample_window(
                &p,
                &law,
                1.0,
                &[0, 1, 2],
                SpaceLattice::Ring(3),
                &mut rng,
                DEFAULT_CONE_CAP,
            )
            .unwrap();
            state_index(&w, 2)
        })
        .collect();
    let cone = histogram(cone.into_iter(), 8);
    let freq = |h: &[u64]| h.iter().map(|&c| c as f64 / n as f64).collect::<Vec<_>>();
    let (tf, tc) = (tv_distance(&freq(&fwd), &exact), tv_distance(&freq(&cone), &exact));
    outcome(
        tf <= 0.01 && tc <= 0.01,
        format!("TV forward {tf:.4}, TV perfect sampler {tc:.4}"),
    )
}

fn c9_covariance_bound() -> Outcome {
    let p = nn2([0.0, 0.2, 0.8, 0.1]);
    let b = ProductBasis::binary(1.0, -1.0).unwrap();
    let a = alpha(&p, &b).unwrap();
    let t_grid: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
    let bound = |t: f64| 2.0 * (-0.2 * t).exp();

    // exact on n = 4, f at site 0 and g at every site, two initial laws
    let ring = RingLattice::new(4).unwrap();
    let gen = build_generator(&p, ring).unwrap();
    let f = lift(2, 4, |c| b.chi(1, c[0]));
    let mut exact_ok = true;
    let mut exact_worst: f64 = 0.0;
    for rho in [0.5, 0.3] {
        let init = lift(2, 4, |c| {
            c.iter().map(|&s| if s == 1 { rho } else { 1.0 - rho }).product()
        });
        for j in 0..4 {
            let g = lift(2, 4, |c| b.chi(1, c[j]));
            for &t in &t_grid {
                let c = exact_covariance_with(&gen, &f, &g, t, &init).unwrap();
                exact_ok &= c.abs() <= bound(t) + 1e-12;
                exact_worst = exact_worst.max(c.abs() / bound(t));
            }
        }
    }

    let ring = RingLattice::new(256).unwrap();
    let fl = LocalFunction::chi(&b, 128, 1);
    let law = InitLaw::Product(vec![0.5, 0.5]);
    let est = fit_decay(&p, ring, &fl, &fl, &t_grid, 10_000, &law, 9, Some(&b)).unwrap();
    let mc_ok = est
        .cov
        .iter()
        .zip(&t_grid)
        .all(|(e, &t)| e.mean.abs() <= bound(t) + 3.0 * e.stderr);
    let rate = est.fitted_rate.value();
    outcome(
        (a - 0.8).abs() < 1e-12 && exact_ok && mc_ok && rate >= 0.17,
        format!(
            "α = {a:.4}, exact max |Cov|/bound {exact_worst:.3}, MC within bound {mc_ok}, fitted rate {rate:.3} ({:?})",
            est.fitted_rate
        ),
    )
}

fn c10_decompositions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut feasible = 0;
    for i in 0..100 {
        let offsets = if i % 2 == 0 { vec![0, 1] } else { vec![-1, 0, 1] };
        let r = random_rule(&mut rng, 2, offsets);
        let target: Vec<f64> = (0..r.num_words()).map(|w| r.prob(w, 1)).collect();
        for extended in [false, true] {
            for d in [
                decompose_additive(&r, extended).unwrap(),
                decompose_cancellative(&r, extended).unwrap(),
            ] {
                if d.feasible {
                    feasible += 1;
                    for (u, v) in d.reconstruct().iter().zip(&target) {
                        worst = worst.max((u - v).abs());
                    }
                }
            }
        }
    }
    let rate = griffeath_rate(&decompose_additive(&nn2([0.9, 0.7, 0.8, 0.2]), false).unwrap()).unwrap();
    // the literal extended example also needs λ_{1} = p11 − p10 = −0.5, which no mode allows
    let literal = nn2([0.2, 0.7, 0.8, 0.2]);
    let literal_infeasible = !decompose_additive(&literal, true).unwrap().feasible;
    let ext = decompose_additive(&nn2([0.8, 0.7, 0.9, 0.2]), true).unwrap();
    let ext_ok = ext.feasible
        && (ext.identity_coeff + 0.1).abs() < 1e-10
        && !decompose_additive(&nn2([0.8, 0.7, 0.9, 0.2]), false).unwrap().feasible;
    let mut o = outcome(
        worst <= 1e-10 && (rate - 0.2).abs() < 1e-10 && ext_ok,
        format!(
            "{feasible} feasible decompositions, max reconstruction error {worst:.2e}, rate {rate:.4}; \
             extended mode certifies (0.8,0.7,0.9,0.2) with identity {:.4}",
            ext.identity_coeff
        ),
    );
    if literal_infeasible {
        o.unattainable = Some("(0.2,0.7,0.8,0.2) needs λ_{1} = −0.5 and is infeasible even when extended".into());
    } else {
        o.pass = false;
    }
    o
}

fn c11_two_stage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut checked, mut derived_bad, mut literal_bad, mut literal_wrong_side) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let (lam, gam, del) = (
            rng.gen_range(0.01..5.0),
            rng.gen_range(0.01..5.0),
            rng.gen_range(0.01..5.0),
        );
        let (lhs, rhs) = two_stage_sides(lam, gam, del, 2);
        let (dl, dr) = two_stage_derived_sides(lam, gam, del, 2);
        if (lhs - rhs).abs() < 1e-6 || (dl - dr).abs() < 1e-6 {
            continue;
        }
        checked += 1;
        let rule = two_stage_rule(lam, gam, del, 2).unwrap();
        let verdict = |b: ProductBasis| criterion_verdict(&rule, &b, DEFAULT_EPS).unwrap().passed();
        let spec_basis = verdict(two_stage_basis(lam, gam, del).unwrap());
        let young_basis = verdict(two_stage_young_basis(gam).unwrap());
        derived_bad += (young_basis != two_stage_derived_condition(lam, gam, del, 2)) as usize;
        if spec_basis != two_stage_condition(lam, gam, del, 2) {
            literal_bad += 1;
            literal_wrong_side += spec_basis as usize;
        }
    }
    let mut o = outcome(
        derived_bad == 0 && literal_wrong_side == 0,
        format!(
            "{checked} draws off the boundary: generic criterion agrees with the derived inequality on all but {derived_bad}; \
             the closed form under max(γ/(1+γ), λ/(λ+δ)) disagrees on {literal_bad}, each time claiming extinction the criterion does not certify"
        ),
    );
    if literal_bad > 0 {
        o.unattainable = Some(format!(
            "the stated closed form drops the cancellation of self-site spreading terms ({literal_bad} disagreements)"
        ));
    }
    o
}

fn c12_monotone_coupling() -> Outcome {
    let mono = nn2([0.95, 0.9, 0.1, 0.05]);
    let ring = RingLattice::new(32).unwrap();
    let violations: usize = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(12, r);
            let lo: Vec<Symbol> = (0..32).map(|_| rng.gen_bool(0.3) as Symbol).collect();
            let hi: Vec<Symbol> = lo.iter().map(|&s| s.max(rng.gen_bool(0.5) as Symbol)).collect();
            let tr = couple(
                &[mono.clone(), mono.clone()],
                ring,
                &[hi.clone(), lo.clone()],
                5.0,
                r,
                true,
            )
            .unwrap();
            let (mut z, mut x) = (hi, lo);
            let mut v = 0;
            for (a, b) in tr[0].events.iter().zip(&tr[1].events) {
                z[a.site as usize] = a.symbol;
                x[b.site as usize] = b.symbol;
                v += z.iter().zip(&x).any(|(p, q)| p < q) as usize;
            }
            v
        })
        .sum();
    let weak = nn2([0.9, 0.1, 0.8, 0.3]);
    let lemma = is_weakly_monotone(&weak) && !is_monotone(&weak) && check_weak_lemma(&weak, 0.5).unwrap();
    outcome(
        is_monotone(&mono) && violations == 0 && lemma,
        format!("{violations} order violations; weak-monotone (0.9,0.1,0.8,0.3) scaled by ½ is monotone: {lemma}"),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("closed-form coefficients", Duration::from_secs(1), c1_closed_form),
        ("region equivalence", Duration::from_secs(5), c2_region),
        ("case-2 coverage", Duration::from_secs(5), c3_case_two),
        ("negative instance", Duration::from_secs(60), c4_negative_instance),
        ("scaled-α identity", Duration::from_secs(5), c5_scaled_alpha),
        ("time-scaling dynamics", Duration::from_secs(60), c6_time_scaling),
        ("thinning law", Duration::from_secs(10), c7_thinning),
        ("oracle agreement", Duration::from_secs(120), c8_oracle),
        ("covariance bound compliance", Duration::MAX, c9_covariance_bound),
        ("decomposition round trips", Duration::MAX, c10_decompositions),
        ("two-stage consistency", Duration::MAX, c11_two_stage),
        ("monotone-coupling order", Duration::MAX, c12_monotone_coupling),
    ];
    let (mut failed, mut unattainable) = (0, 0);
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += !pass as usize;
        let status = match (&o.unattainable, pass) {
            (_, false) => "FAIL",
            (Some(_), true) => "PASS*",
            (None, true) => "PASS",
        };
        let budget_note = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" / budget {:.0?}", budget)
        };
        println!(
            "criterion {:>2} {:<28} {:<5} [{:.2?}{}] {}",
            i + 1,
            name,
            status,
            took,
            budget_note,
            o.detail
        );
        if let Some(why) = &o.unattainable {
            unattainable += 1;
            println!("             UNATTAINABLE as stated: {why}");
        }
    }
    println!(
        "acceptance: {} of 12 criteria passed ({unattainable} with an unattainable sub-check marked PASS*)",
        12 - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
