use super::{ParamsNN2, Rule, RuleTable, CLASSIFIER_SLACK, STRICT_EPS};
use crate::error::Result;

/// Every row differs from the identity row: `P(σ(0)|σ) < 1`.
pub fn is_positive_rates<R: Rule + ?Sized>(rule: &R) -> bool {
    is_positive_rates_eps(rule, STRICT_EPS)
}

pub fn is_positive_rates_eps<R: Rule + ?Sized>(rule: &R, eps: f64) -> bool {
    (0..rule.period()).all(|r| {
        let t = rule.table(r);
        (0..t.num_words()).all(|w| t.prob(w, t.self_symbol(w)) < 1.0 - eps)
    })
}

/// The rule dominates itself: `ζ ≥ ξ ⇒ P(a₊|ζ) ≥ P(a₊|ξ)` for every threshold `a`.
pub fn is_monotone<R: Rule + ?Sized>(rule: &R) -> bool {
    (0..rule.period()).all(|r| dominates_itself(rule.table(r), false))
}

/// As [`is_monotone`], restricted to pairs whose updated-site symbols lie on the
/// same side of the threshold.
pub fn is_weakly_monotone<R: Rule + ?Sized>(rule: &R) -> bool {
    (0..rule.period()).all(|r| dominates_itself(rule.table(r), true))
}

fn dominates_itself(t: &RuleTable, weak: bool) -> bool {
    let q = t.alphabet().size();
    let words: Vec<_> = (0..t.num_words()).map(|w| t.word(w)).collect();
    let me = t.neighborhood().self_position();
    for (hi, zeta) in words.iter().enumerate() {
        for (lo, xi) in words.iter().enumerate() {
            if hi == lo || !zeta.iter().zip(xi).all(|(z, x)| z >= x) {
                continue;
            }
            for a in 1..q as u8 {
                if weak && ((zeta[me] >= a) != (xi[me] >= a)) {
                    continue;
                }
                if t.upper_tail(hi, a) < t.upper_tail(lo, a) - CLASSIFIER_SLACK {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether `time_scale(rule, λ)` is monotone. Weakly monotone rules pass for every `λ ≤ ½`.
pub fn check_weak_lemma(rule: &RuleTable, lambda: f64) -> Result<bool> {
    Ok(is_monotone(&rule.time_scale(lambda)?))
}

/// `p11 ≤ p10 < 1` and `0 < p01 ≤ p00`.
pub fn in_gray_region(p: ParamsNN2) -> bool {
    in_gray_region_eps(p, STRICT_EPS)
}

pub fn in_gray_region_eps(p: ParamsNN2, eps: f64) -> bool {
    p.p11 <= p.p10 + CLASSIFIER_SLACK && p.p10 < 1.0 - eps && p.p01 > eps && p.p01 <= p.p00 + CLASSIFIER_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Alphabet, Neighborhood};
    use proptest::prelude::*;

    fn nn2(a: [f64; 4]) -> RuleTable {
        ParamsNN2::from_array(a).unwrap().to_rule()
    }

    fn closed_form_monotone(p: [f64; 4]) -> (bool, bool) {
        let [p11, p10, p01, p00] = p;
        let weak = p00 <= p01 && p10 <= p11;
        (weak && p00 <= p10 && p01 <= p11, weak)
    }

    #[test]
    fn positive_rates_examples() {
        assert!(!is_positive_rates(&ParamsNN2::identity().to_rule()));
        assert!(is_positive_rates(&nn2([0.0, 0.2, 0.8, 0.1])));
        assert!(!is_positive_rates(&nn2([0.0, 0.2, 0.8, 0.0])));
    }

    #[test]
    fn monotone_examples() {
        assert!(is_monotone(&ParamsNN2::identity().to_rule()));
        let bad = nn2([0.3, 0.9, 0.1, 0.05]);
        assert!(!is_monotone(&bad));
        assert!(!is_weakly_monotone(&bad));
        let good = nn2([0.95, 0.9, 0.1, 0.05]);
        assert!(is_monotone(&good));
        assert!(is_weakly_monotone(&good));
        let id3 = RuleTable::identity(Alphabet::new(3).unwrap(), Neighborhood::new(vec![-1, 0, 1]).unwrap());
        assert!(is_monotone(&id3));
    }

    #[test]
    fn weak_lemma_examples() {
        assert!(check_weak_lemma(&nn2([0.95, 0.9, 0.1, 0.05]), 0.5).unwrap());
        for l in [0.1, 0.5, 1.0] {
            assert!(check_weak_lemma(&ParamsNN2::identity().to_rule(), l).unwrap());
        }
        assert!(!check_weak_lemma(&nn2([0.0, 1.0, 0.0, 0.0]), 0.5).unwrap());
    }

    #[test]
    fn gray_region_examples() {
        let p = |a| ParamsNN2::from_array(a).unwrap();
        assert!(in_gray_region(p([0.0, 0.9, 0.05, 0.1])));
        assert!(!in_gray_region(p([0.0, 0.9, 0.2, 0.1])));
        assert!(!in_gray_region(ParamsNN2::identity()));
    }

    fn any_rule(q: usize) -> impl Strategy<Value = RuleTable> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, q), q * q).prop_map(move |rows| {
            let rows = rows
                .into_iter()
                .map(|r| {
                    let mut r: Vec<f64> = r.iter().map(|v| v + 1e-3).collect();
                    let s: f64 = r.iter().sum();
                    r.iter_mut().for_each(|v| *v /= s);
                    let head: f64 = r[..q - 1].iter().sum();
                    r[q - 1] = 1.0 - head;
                    r
                })
                .collect();
            RuleTable::new(Alphabet::new(q).unwrap(), Neighborhood::nearest_right(), rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn nn2_classifiers_match_closed_forms(p in proptest::array::uniform4(0.0f64..1.0)) {
            let (m, w) = closed_form_monotone(p);
            let r = nn2(p);
            prop_assert_eq!(is_monotone(&r), m);
            prop_assert_eq!(is_weakly_monotone(&r), w);
        }

        #[test]
        fn monotone_implies_weakly_monotone(r in any_rule(3)) {
            prop_assert!(!is_monotone(&r) || is_weakly_monotone(&r));
        }

        #[test]
        fn sorted_nn2_rules_are_monotone(mut p in proptest::array::uniform4(0.0f64..1.0)) {
            // p00 ≤ {p01, p10} ≤ p11
            p.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assert!(is_monotone(&nn2(p)));
            prop_assert!(is_monotone(&nn2([p[0], p[2], p[1], p[3]])));
        }

        #[test]
        fn weak_monotone_scaled_by_half_is_monotone(r in any_rule(3), lambda in 0.01f64..=0.5) {
            if is_weakly_monotone(&r) {
                prop_assert!(check_weak_lemma(&r, lambda).unwrap());
            }
        }

        #[test]
        fn weak_lemma_on_weak_nn2(
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0,
            lambda in 0.01f64..=0.5,
        ) {
            // p00 ≤ p01 and p10 ≤ p11, arbitrary otherwise
            let p = [a.max(b), a.min(b), c.max(d), c.min(d)];
            let r = nn2(p);
            prop_assert!(is_weakly_monotone(&r));
            prop_assert!(check_weak_lemma(&r, lambda).unwrap());
        }

        #[test]
        fn positive_rates_survive_scaling(p in proptest::array::uniform4(0.0f64..=1.0), lambda in 0.01f64..0.99) {
            let r = nn2(p);
            prop_assert_eq!(is_positive_rates(&r.time_scale(lambda).unwrap()), is_positive_rates(&r));
        }
    }
}
