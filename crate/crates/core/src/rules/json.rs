use serde::{Deserialize, Serialize};

use super::{Alphabet, Neighborhood, ParamsNN2, PeriodicRule, Rule, RuleTable};
use crate::error::{Error, Result};

/// On-disk form of a rule.
///
/// The full form lists one table per residue class, rows in lexicographic word
/// order with the first offset most significant:
/// `{"alphabet": 2, "offsets": [0, 1], "period": 1, "tables": [[[1, 0], ...]]}`.
/// The shorthand `{"nn2": [p11, p10, p01, p00]}` is also accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleDocument {
    Nn2 {
        nn2: [f64; 4],
    },
    Full {
        alphabet: usize,
        offsets: Vec<i64>,
        period: usize,
        tables: Vec<Vec<Vec<f64>>>,
    },
}

impl RuleDocument {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_rule<R: Rule + ?Sized>(rule: &R) -> Self {
        RuleDocument::Full {
            alphabet: rule.alphabet().size(),
            offsets: rule.neighborhood().offsets().to_vec(),
            period: rule.period(),
            tables: (0..rule.period())
                .map(|r| rule.table(r).rows().map(|row| row.to_vec()).collect())
                .collect(),
        }
    }

    pub fn to_rule(&self) -> Result<PeriodicRule> {
        match self {
            RuleDocument::Nn2 { nn2 } => Ok(ParamsNN2::from_array(*nn2)?.to_rule().into()),
            RuleDocument::Full {
                alphabet,
                offsets,
                period,
                tables,
            } => {
                if *period != tables.len() {
                    return Err(Error::domain(format!(
                        "period {period} does not match {} tables",
                        tables.len()
                    )));
                }
                let a = Alphabet::new(*alphabet)?;
                let nb = Neighborhood::new(offsets.clone())?;
                let tables = tables
                    .iter()
                    .map(|rows| RuleTable::new(a, nb.clone(), rows.clone()))
                    .collect::<Result<Vec<_>>>()?;
                PeriodicRule::new(tables)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("rule documents always serialize")
    }
}
