use ips_core::basis::{criterion_verdict, ProductBasis, DEFAULT_EPS};
use ips_core::estimators::{boundary_runs, disagreement_density, fit_decay, mc_covariance, LocalFunction};
use ips_core::oracle::{build_generator, exact_covariance, exact_distribution, lift, point_mass};
use ips_core::sim::{InitLaw, RingLattice};
use ips_core::stats::tv_distance;
use ips_core::{ParamsNN2, RuleTable};

fn nn2(p: [f64; 4]) -> RuleTable {
    ParamsNN2::from_array(p).unwrap().to_rule()
}

fn ring(n: usize) -> RingLattice {
    RingLattice::new(n).unwrap()
}

fn pm() -> ProductBasis {
    ProductBasis::binary(1.0, -1.0).unwrap()
}

#[test]
fn mc_covariance_matches_exact_on_three_sites() {
    let b = pm();
    let law = InitLaw::Product(vec![0.4, 0.6]);
    let init = lift(2, 3, |c| c.iter().map(|&s| if s == 1 { 0.6 } else { 0.4 }).product());
    let rules = [nn2([0.0, 0.2, 0.8, 0.1]), nn2([0.9, 0.3, 0.6, 0.2])];
    for (k, p) in rules.iter().enumerate() {
        for (fs, gs, t) in [(0usize, 0usize, 0.5), (0, 1, 1.0), (2, 1, 0.3)] {
            let f = LocalFunction::chi(&b, fs, 1);
            let g = LocalFunction::chi(&b, gs, 1);
            let exact = exact_covariance(
                p,
                ring(3),
                &lift(2, 3, |c| f.eval(c)),
                &lift(2, 3, |c| g.eval(c)),
                t,
                &init,
            )
            .unwrap();
            let est = mc_covariance(p, ring(3), &f, &g, t, 40_000, &law, 17 + k as u64).unwrap();
            assert!(
                (est.mean - exact).abs() < 3.5 * est.stderr,
                "{k} {fs} {gs}: {est:?} vs {exact}"
            );
        }
    }
}

#[test]
fn ergodic_covariance_vanishes() {
    let b = pm();
    let f = LocalFunction::chi(&b, 32, 1);
    let est = mc_covariance(
        &nn2([0.0, 0.2, 0.8, 0.1]),
        ring(64),
        &f,
        &f,
        25.0,
        5000,
        &InitLaw::Product(vec![0.5, 0.5]),
        3,
    )
    .unwrap();
    assert!(est.mean.abs() < 3.0 * est.stderr, "{est:?}");
}

#[test]
fn decay_respects_bound_and_scales_with_time() {
    let b = pm();
    let p = nn2([0.0, 0.2, 0.8, 0.1]);
    let f = LocalFunction::chi(&b, 64, 1);
    let law = InitLaw::Product(vec![0.5, 0.5]);
    let grid: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let fast = fit_decay(&p, ring(128), &f, &f, &grid, 20_000, &law, 1, Some(&b)).unwrap();
    assert_eq!(fast.bound_respected, Some(true));
    assert!((fast.bound_rate.unwrap() - 0.2).abs() < 1e-12);
    assert!(fast.fitted_rate.value() >= 0.2 - 0.03);

    let slow_grid: Vec<f64> = grid.iter().map(|t| 2.0 * t).collect();
    let scaled = p.time_scale(0.5).unwrap();
    let slow = fit_decay(&scaled, ring(128), &f, &f, &slow_grid, 20_000, &law, 2, Some(&b)).unwrap();
    assert_eq!(slow.bound_respected, Some(true));
    assert!((slow.bound_rate.unwrap() - 0.1).abs() < 1e-12);
    let ratio = slow.fitted_rate.value() / fast.fitted_rate.value();
    assert!((ratio - 0.5).abs() < 0.5 * 0.15, "ratio {ratio}");
}

#[test]
fn disagreement_decays_for_ergodic_rule() {
    let d = disagreement_density(&nn2([0.0, 0.2, 0.8, 0.1]), ring(128), &[0.0, 5.0, 20.0], 400, 8).unwrap();
    assert_eq!(d[0].1.mean, 1.0);
    assert!(d[2].1.mean < 0.05, "{:?}", d[2]);
}

#[test]
fn monotone_boundary_marginals_are_monotone_in_time() {
    let mono = nn2([0.95, 0.9, 0.1, 0.05]);
    let grid: Vec<f64> = (0..=8).map(|k| k as f64).collect();
    let runs = boundary_runs(&mono, ring(64), &grid, 2000, 4).unwrap();
    for k in 1..grid.len() {
        let (hi0, hi1) = (runs.from_max[k - 1][1], runs.from_max[k][1]);
        let (lo0, lo1) = (runs.from_min[k - 1][1], runs.from_min[k][1]);
        assert!(hi1.mean <= hi0.mean + 3.0 * (hi0.stderr + hi1.stderr));
        assert!(lo1.mean >= lo0.mean - 3.0 * (lo0.stderr + lo1.stderr));
        let (d0, d1) = (runs.disagreement[k - 1], runs.disagreement[k]);
        assert!(d1.mean <= d0.mean + 3.0 * (d0.stderr + d1.stderr));
        assert!(runs.from_max[k][1].mean >= runs.from_min[k][1].mean);
    }
}

#[test]
fn boundary_gap_closes_for_certified_rules() {
    let b = pm();
    for params in [[0.0, 0.2, 0.8, 0.1], [0.6, 0.5, 0.4, 0.3]] {
        let p = nn2(params);
        assert!(criterion_verdict(&p, &b, DEFAULT_EPS).unwrap().passed());
        let runs = boundary_runs(&p, ring(64), &[30.0], 2000, 9).unwrap();
        let gap = (runs.from_max[0][1].mean - runs.from_min[0][1].mean).abs();
        assert!(gap < 0.02, "{params:?}: gap {gap}");
    }
}

#[test]
fn identity_boundary_runs_are_frozen() {
    let runs = boundary_runs(&ParamsNN2::identity().to_rule(), ring(16), &[0.0, 10.0], 20, 1).unwrap();
    for k in 0..2 {
        assert_eq!(runs.from_min[k][0].mean, 1.0);
        assert_eq!(runs.from_max[k][1].mean, 1.0);
        assert_eq!(runs.disagreement[k].mean, 1.0);
    }
}

#[test]
fn exact_long_time_limit_is_positive_and_geometric() {
    let p = nn2([0.0, 0.2, 0.8, 0.1]);
    let gen = build_generator(&p, ring(4)).unwrap();
    let start = point_mass(&[0, 0, 0, 0], 2);
    let dist = |t: f64| exact_distribution(&gen, &start, t, 1e-14).unwrap().probs;
    let late = dist(40.0);
    assert!(late.iter().all(|&x| x > 0.0));
    let steps: Vec<f64> = (0..6)
        .map(|k| tv_distance(&dist(2.0 * k as f64), &dist(2.0 * k as f64 + 1.0)))
        .collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]));
    // successive ratios settle near a constant below one
    let r1 = steps[4] / steps[3];
    let r2 = steps[5] / steps[4];
    assert!(r1 < 1.0 && (r1 - r2).abs() < 0.05, "{steps:?}");
}
