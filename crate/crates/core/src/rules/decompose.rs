use serde::Serialize;

use super::{RuleTable, CLASSIFIER_SLACK};
use crate::error::{Error, Result};
use crate::lp::{maximize, LpOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMode {
    Additive,
    Cancellative,
}

/// A deterministic member of the additive or cancellative family.
///
/// Additive members `P_S` set the site to 1 iff some site of `S` holds 1.
/// Cancellative members `P_{i,S}` set it to `i + |S ∩ σ⁻¹(1)| mod 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub set: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<u8>,
    pub coeff: f64,
}

impl Component {
    pub fn label(&self) -> String {
        let set = self.set.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",");
        match self.parity {
            None => format!("P_{{{set}}}"),
            Some(i) => format!("P_{{{i},{{{set}}}}}"),
        }
    }

    fn value(&self, word: &[u8], offsets: &[i64]) -> f64 {
        let hits = offsets
            .iter()
            .zip(word)
            .filter(|(o, &s)| s == 1 && self.set.contains(o))
            .count();
        match self.parity {
            None => (hits > 0) as u8 as f64,
            Some(i) => ((i as usize + hits) % 2) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub mode: DecompositionMode,
    pub offsets: Vec<i64>,
    /// Coefficient of the all-ones matrix.
    pub ones_coeff: f64,
    /// Coefficient of the member that reproduces the identity.
    pub identity_coeff: f64,
    /// Every other member of the family.
    pub component_coeffs: Vec<Component>,
    pub extended: bool,
    pub feasible: bool,
}

impl DecompositionResult {
    /// `P(1|σ)` of the recombined rule, in word order.
    pub fn reconstruct(&self) -> Vec<f64> {
        let m = self.offsets.len();
        let identity_parity = match self.mode {
            DecompositionMode::Additive => None,
            DecompositionMode::Cancellative => Some(0),
        };
        let identity = Component {
            set: vec![0],
            parity: identity_parity,
            coeff: self.identity_coeff,
        };
        let mut word = vec![0u8; m];
        (0..1usize << m)
            .map(|w| {
                super::decode_word(w, 2, &mut word);
                self.ones_coeff
                    + identity.coeff * identity.value(&word, &self.offsets)
                    + self
                        .component_coeffs
                        .iter()
                        .map(|c| c.coeff * c.value(&word, &self.offsets))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn total_coeff(&self) -> f64 {
        self.ones_coeff + self.identity_coeff + self.component_coeffs.iter().map(|c| c.coeff).sum::<f64>()
    }
}

/// Writes the rule as a combination of `𝟙` and the OR-type matrices `P_S`, maximizing
/// the weight on `𝟙`.
pub fn decompose_additive(rule: &RuleTable, extended: bool) -> Result<DecompositionResult> {
    let offsets = rule.neighborhood().offsets().to_vec();
    let mut members = Vec::new();
    for mask in 0..1usize << offsets.len() {
        members.push(Component {
            set: subset(&offsets, mask),
            parity: None,
            coeff: 0.0,
        });
    }
    // 𝟙 is not an OR-type member; it is kept in front and pulled out afterwards
    members.insert(
        0,
        Component {
            set: vec![],
            parity: Some(1),
            coeff: 0.0,
        },
    );
    decompose(rule, DecompositionMode::Additive, members, extended)
}

/// Writes the rule as a combination of the parity matrices `P_{0,S}`, `P_{1,S}`,
/// maximizing the weight on `𝟙 = P_{1,∅}`.
pub fn decompose_cancellative(rule: &RuleTable, extended: bool) -> Result<DecompositionResult> {
    let offsets = rule.neighborhood().offsets().to_vec();
    let mut members = Vec::new();
    for i in [1u8, 0] {
        for mask in 0..1usize << offsets.len() {
            members.push(Component {
                set: subset(&offsets, mask),
                parity: Some(i),
                coeff: 0.0,
            });
        }
    }
    decompose(rule, DecompositionMode::Cancellative, members, extended)
}

fn subset(offsets: &[i64], mask: usize) -> Vec<i64> {
    offsets
        .iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, &o)| o)
        .collect()
}

/// `members[0]` must be the all-ones matrix.
fn decompose(
    rule: &RuleTable,
    mode: DecompositionMode,
    mut members: Vec<Component>,
    extended: bool,
) -> Result<DecompositionResult> {
    if rule.alphabet().size() != 2 {
        return Err(Error::unsupported("Griffeath decompositions need alphabet 2"));
    }
    let offsets = rule.neighborhood().offsets().to_vec();
    let identity_parity = match mode {
        DecompositionMode::Additive => None,
        DecompositionMode::Cancellative => Some(0),
    };
    let id = members
        .iter()
        .position(|c| c.set == [0] && c.parity == identity_parity)
        .expect("family contains the identity member");

    let words = rule.num_words();
    let k = members.len();
    let vars = if extended { k + 1 } else { k };
    let mut a = Vec::with_capacity(words + 1);
    let mut b = Vec::with_capacity(words + 1);
    for w in 0..words {
        let word = rule.word(w);
        let mut row: Vec<f64> = members.iter().map(|c| c.value(&word, &offsets)).collect();
        if extended {
            row.push(-row[id]);
        }
        a.push(row);
        b.push(rule.prob(w, 1));
    }
    let mut sum_row = vec![1.0; vars];
    if extended {
        sum_row[k] = -1.0;
    }
    a.push(sum_row);
    b.push(1.0);
    let mut c = vec![0.0; vars];
    c[0] = 1.0;

    let (coeffs, feasible) = match maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, .. } => {
            let mut coeffs: Vec<f64> = x[..k].to_vec();
            if extended {
                coeffs[id] -= x[k];
            }
            for v in coeffs.iter_mut() {
                if v.abs() < CLASSIFIER_SLACK {
                    *v = 0.0;
                }
            }
            (coeffs, true)
        }
        LpOutcome::Infeasible => (vec![0.0; k], false),
        LpOutcome::Unbounded => {
            return Err(Error::Numerical {
                message: "decomposition program reported unbounded".into(),
                condition: f64::INFINITY,
            })
        }
    };
    for (m, v) in members.iter_mut().zip(&coeffs) {
        m.coeff = *v;
    }
    let ones_coeff = members[0].coeff;
    let identity_coeff = members[id].coeff;
    let component_coeffs = members
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != 0 && *i != id)
        .map(|(_, c)| c)
        .collect();
    Ok(DecompositionResult {
        mode,
        offsets,
        ones_coeff,
        identity_coeff,
        component_coeffs,
        extended,
        feasible,
    })
}

/// Certified lower bound on the exponential ergodicity rate of a homogeneous
/// positive-rates rule: the `𝟙` weight, doubled for cancellative decompositions.
pub fn griffeath_rate(d: &DecompositionResult) -> Result<f64> {
    if !d.feasible {
        return Err(Error::Infeasible);
    }
    Ok(match d.mode {
        DecompositionMode::Additive => d.ones_coeff,
        DecompositionMode::Cancellative => 2.0 * d.ones_coeff,
    })
}
