//! Transition matrices ("rules") and the transformations and classifiers
//! defined on them.
//!
//! A [`RuleTable`] stores, for every neighborhood word `σ`, a probability
//! vector `P(·|σ)` over the alphabet. Words are laid out lexicographically
//! with the first offset of the [`Neighborhood`] most significant, so for the
//! one-sided nearest-neighbor neighborhood `[0, 1]` the word `10` means
//! "the site itself holds 1, its right neighbor holds 0".

mod classify;
mod decompose;
mod json;
mod nn2;
mod transform;

pub use classify::{
    check_weak_lemma, in_gray_region, in_gray_region_eps, is_monotone, is_positive_rates, is_positive_rates_eps,
    is_weakly_monotone,
};
pub use decompose::{
    decompose_additive, decompose_cancellative, griffeath_rate, Component, DecompositionMode, DecompositionResult,
};
pub use json::RuleDocument;
pub use nn2::{alternating_flip, project_to_face, Face, FaceProjection, ParamsNN2};
pub use transform::{alternating_flip_rule, flip_states};

use crate::error::{Error, Result};

/// A symbol of a finite, linearly ordered alphabet.
pub type Symbol = u8;

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Default ε for strict inequalities such as `P(σ(0)|σ) < 1`.
pub const STRICT_EPS: f64 = 1e-9;

/// Slack applied to the non-strict inequalities of the classifiers.
pub const CLASSIFIER_SLACK: f64 = 1e-12;

/// Finite alphabet `{0, …, size−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if !(2..=256).contains(&size) {
            return Err(Error::domain(format!("alphabet size must be in 2..=256, got {size}")));
        }
        Ok(Alphabet(size))
    }

    pub const fn binary() -> Self {
        Alphabet(2)
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn min_symbol(self) -> Symbol {
        0
    }

    pub fn max_symbol(self) -> Symbol {
        (self.0 - 1) as Symbol
    }
}

/// Ordered list of relative site offsets read by an update. Must contain 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Neighborhood {
    offsets: Vec<i64>,
    self_pos: usize,
}

impl Neighborhood {
    pub fn new(offsets: Vec<i64>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::domain("neighborhood must be non-empty"));
        }
        if offsets.len() > 16 {
            return Err(Error::unsupported("neighborhoods larger than 16 sites"));
        }
        for (i, o) in offsets.iter().enumerate() {
            if offsets[..i].contains(o) {
                return Err(Error::domain(format!("duplicate offset {o} in neighborhood")));
            }
        }
        let self_pos = offsets
            .iter()
            .position(|&o| o == 0)
            .ok_or_else(|| Error::domain("neighborhood must contain offset 0"))?;
        Ok(Neighborhood { offsets, self_pos })
    }

    /// The one-sided nearest-neighbor neighborhood `[0, 1]`.
    pub fn nearest_right() -> Self {
        Neighborhood {
            offsets: vec![0, 1],
            self_pos: 0,
        }
    }

    pub fn single() -> Self {
        Neighborhood {
            offsets: vec![0],
            self_pos: 0,
        }
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of offset 0 inside the word.
    pub fn self_position(&self) -> usize {
        self.self_pos
    }

    pub fn num_words(&self, alphabet: Alphabet) -> usize {
        alphabet.size().pow(self.offsets.len() as u32)
    }
}

/// Homogeneous transition matrix `P(·|σ)` on a fixed neighborhood.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleTable {
    alphabet: Alphabet,
    neighborhood: Neighborhood,
    // row-major: word index × alphabet size
    probs: Vec<f64>,
}

impl RuleTable {
    /// Builds a table from explicit rows in lexicographic word order.
    pub fn new(alphabet: Alphabet, neighborhood: Neighborhood, rows: Vec<Vec<f64>>) -> Result<Self> {
        let q = alphabet.size();
        let words = neighborhood.num_words(alphabet);
        if rows.len() != words {
            return Err(Error::domain(format!(
                "rule table needs {words} rows, got {}",
                rows.len()
            )));
        }
        let mut probs = Vec::with_capacity(words * q);
        for (w, row) in rows.into_iter().enumerate() {
            if row.len() != q {
                return Err(Error::domain(format!(
                    "row {w} has {} entries, alphabet has {q}",
                    row.len()
                )));
            }
            probs.extend(row);
        }
        Self::from_flat(alphabet, neighborhood, probs)
    }

    pub(crate) fn from_flat(alphabet: Alphabet, neighborhood: Neighborhood, probs: Vec<f64>) -> Result<Self> {
        let q = alphabet.size();
        for (w, row) in probs.chunks(q).enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::domain(format!("probability {p} outside [0,1] in row {w}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::domain(format!("row {w} sums to {sum}, not 1")));
            }
        }
        Ok(RuleTable {
            alphabet,
            neighborhood,
            probs,
        })
    }

    /// Builds a table by evaluating `row` on every word.
    pub fn from_fn<F>(alphabet: Alphabet, neighborhood: Neighborhood, mut row: F) -> Result<Self>
    where
        F: FnMut(&[Symbol]) -> Vec<f64>,
    {
        let words = neighborhood.num_words(alphabet);
        let mut word = vec![0; neighborhood.len()];
        let mut rows = Vec::with_capacity(words);
        for w in 0..words {
            decode_word(w, alphabet.size(), &mut word);
            rows.push(row(&word));
        }
        Self::new(alphabet, neighborhood, rows)
    }

    /// The identity rule: every update keeps the current symbol.
    pub fn identity(alphabet: Alphabet, neighborhood: Neighborhood) -> Self {
        let q = alphabet.size();
        let words = neighborhood.num_words(alphabet);
        let me = neighborhood.self_position();
        let mut probs = vec![0.0; words * q];
        let mut word = vec![0; neighborhood.len()];
        for w in 0..words {
            decode_word(w, q, &mut word);
            probs[w * q + word[me] as usize] = 1.0;
        }
        RuleTable {
            alphabet,
            neighborhood,
            probs,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn neighborhood(&self) -> &Neighborhood {
        &self.neighborhood
    }

    pub fn num_words(&self) -> usize {
        self.probs.len() / self.alphabet.size()
    }

    pub fn row(&self, word: usize) -> &[f64] {
        let q = self.alphabet.size();
        &self.probs[word * q..(word + 1) * q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.alphabet.size())
    }

    pub fn prob(&self, word: usize, symbol: Symbol) -> f64 {
        self.probs[word * self.alphabet.size() + symbol as usize]
    }

    /// `P(a₊|σ) = Σ_{b ≥ a} P(b|σ)`.
    pub fn upper_tail(&self, word: usize, a: Symbol) -> f64 {
        if a == 0 {
            return 1.0;
        }
        self.row(word)[a as usize..].iter().sum()
    }

    pub fn word(&self, index: usize) -> Vec<Symbol> {
        let mut w = vec![0; self.neighborhood.len()];
        decode_word(index, self.alphabet.size(), &mut w);
        w
    }

    pub fn word_index(&self, word: &[Symbol]) -> usize {
        encode_word(word, self.alphabet.size())
    }

    /// Symbol held by the updated site in the given word.
    pub fn self_symbol(&self, word: usize) -> Symbol {
        let q = self.alphabet.size();
        let m = self.neighborhood.len();
        let shift = m - 1 - self.neighborhood.self_position();
        ((word / q.pow(shift as u32)) % q) as Symbol
    }

    /// Inverse-CDF draw: smallest `a` with `u < Σ_{b ≤ a} P(b|σ)`.
    #[inline]
    pub fn sample_inverse_cdf(&self, word: usize, u: f64) -> Symbol {
        let row = self.row(word);
        let mut acc = 0.0;
        let mut last = 0;
        for (a, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = a;
                if u < acc {
                    return a as Symbol;
                }
            }
        }
        last as Symbol
    }

    /// Order-respecting quantile draw: largest `a` with `u < P(a₊|σ)`.
    ///
    /// For a dominating pair of rows the drawn symbols are ordered for every `u`.
    #[inline]
    pub fn sample_upper_quantile(&self, word: usize, u: f64) -> Symbol {
        let row = self.row(word);
        let mut tail = 0.0;
        for a in (1..row.len()).rev() {
            tail += row[a];
            if u < tail {
                return a as Symbol;
            }
        }
        0
    }

    pub(crate) fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Maximal entrywise difference to another table on the same words.
    pub fn max_abs_diff(&self, other: &RuleTable) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Site-periodic transition matrix: site `j` uses `tables[j mod period]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicRule {
    tables: Vec<RuleTable>,
}

impl PeriodicRule {
    pub fn new(tables: Vec<RuleTable>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::domain("periodic rule needs at least one table"))?;
        if tables
            .iter()
            .any(|t| t.alphabet != first.alphabet || t.neighborhood != first.neighborhood)
        {
            return Err(Error::domain(
                "all tables of a periodic rule must share alphabet and neighborhood",
            ));
        }
        Ok(PeriodicRule { tables })
    }

    pub fn tables(&self) -> &[RuleTable] {
        &self.tables
    }

    pub fn is_homogeneous(&self) -> bool {
        self.tables.iter().all(|t| t == &self.tables[0])
    }

    pub fn time_scale(&self, lambda: f64) -> Result<PeriodicRule> {
        let tables = self
            .tables
            .iter()
            .map(|t| t.time_scale(lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(PeriodicRule { tables })
    }

    pub fn max_abs_diff(&self, other: &PeriodicRule) -> f64 {
        self.tables
            .iter()
            .zip(&other.tables)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

impl From<RuleTable> for PeriodicRule {
    fn from(table: RuleTable) -> Self {
        PeriodicRule { tables: vec![table] }
    }
}

/// Common read access to homogeneous and periodic rules.
pub trait Rule: Sync {
    fn alphabet(&self) -> Alphabet;
    fn neighborhood(&self) -> &Neighborhood;
    fn period(&self) -> usize;
    /// Table used by sites in residue class `residue` (mod the period).
    fn table(&self, residue: usize) -> &RuleTable;
    fn to_periodic(&self) -> PeriodicRule;

    fn table_at(&self, site: i64) -> &RuleTable {
        self.table(site.rem_euclid(self.period() as i64) as usize)
    }
}

impl Rule for RuleTable {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
    fn neighborhood(&self) -> &Neighborhood {
        &self.neighborhood
    }
    fn period(&self) -> usize {
        1
    }
    fn table(&self, _residue: usize) -> &RuleTable {
        self
    }
    fn to_periodic(&self) -> PeriodicRule {
        PeriodicRule::from(self.clone())
    }
}

impl Rule for PeriodicRule {
    fn alphabet(&self) -> Alphabet {
        self.tables[0].alphabet
    }
    fn neighborhood(&self) -> &Neighborhood {
        &self.tables[0].neighborhood
    }
    fn period(&self) -> usize {
        self.tables.len()
    }
    fn table(&self, residue: usize) -> &RuleTable {
        &self.tables[residue % self.tables.len()]
    }
    fn to_periodic(&self) -> PeriodicRule {
        self.clone()
    }
}

pub(crate) fn decode_word(mut index: usize, q: usize, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % q) as Symbol;
        index /= q;
    }
}

pub(crate) fn encode_word(word: &[Symbol], q: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * q + s as usize)
}
