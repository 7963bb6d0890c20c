use super::{encode_word, PeriodicRule, Rule, RuleTable, Symbol};
use crate::error::{Error, Result};

impl RuleTable {
    /// `λ·P + (1−λ)·I`: the same dynamics slowed down by the factor `λ`.
    pub fn time_scale(&self, lambda: f64) -> Result<RuleTable> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::domain(format!("time scale λ={lambda} outside (0,1]")));
        }
        let q = self.alphabet().size();
        let mut probs: Vec<f64> = self.probs().iter().map(|p| lambda * p).collect();
        for w in 0..self.num_words() {
            let s = self.self_symbol(w) as usize;
            let slot = &mut probs[w * q + s];
            *slot = (*slot + (1.0 - lambda)).min(1.0);
        }
        RuleTable::from_flat(self.alphabet(), self.neighborhood().clone(), probs)
    }
}

/// Renames 0 ↔ 1 in an alphabet-2 rule: `Q(z|σ) = P(1−z|1−σ)`.
pub fn flip_states(rule: &RuleTable) -> Result<RuleTable> {
    if rule.alphabet().size() != 2 {
        return Err(Error::unsupported("state flip needs alphabet 2"));
    }
    let mut flipped = vec![0; rule.neighborhood().len()];
    RuleTable::from_fn(rule.alphabet(), rule.neighborhood().clone(), |word| {
        for (f, &s) in flipped.iter_mut().zip(word) {
            *f = 1 - s;
        }
        let row = rule.row(encode_word(&flipped, 2));
        vec![row[1], row[0]]
    })
}

/// Renames 0 ↔ 1 on odd sites only.
///
/// Site residue `r` gets `Q_r(z|σ) = P_r(z ⊕ r | σ')` with
/// `σ'(k) = σ(k) ⊕ ((r + offset_k) mod 2)`. The result has period
/// `lcm(period, 2)` and applying the map twice returns the input rule.
pub fn alternating_flip_rule(rule: &PeriodicRule) -> Result<PeriodicRule> {
    if rule.alphabet().size() != 2 {
        return Err(Error::unsupported("alternating flip needs alphabet 2"));
    }
    let period = if rule.period().is_multiple_of(2) {
        rule.period()
    } else {
        2 * rule.period()
    };
    let offsets = rule.neighborhood().offsets().to_vec();
    let mut tables = Vec::with_capacity(period);
    for r in 0..period {
        let src = rule.table(r);
        let parity = (r % 2) as Symbol;
        let mut word2 = vec![0; offsets.len()];
        let t = RuleTable::from_fn(rule.alphabet(), rule.neighborhood().clone(), |word| {
            for (k, (&s, &o)) in word.iter().zip(&offsets).enumerate() {
                word2[k] = s ^ ((r as i64 + o).rem_euclid(2) as Symbol);
            }
            let row = src.row(encode_word(&word2, 2));
            if parity == 0 {
                row.to_vec()
            } else {
                vec![row[1], row[0]]
            }
        })?;
        tables.push(t);
    }
    PeriodicRule::new(tables)
}
