use serde::{Deserialize, Serialize};

use super::{transform::alternating_flip_rule, Alphabet, Neighborhood, PeriodicRule, RuleTable};
use crate::error::{Error, Result};

/// Alphabet-2 one-sided nearest-neighbor rule `p_{1|σ(0)σ(1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsNN2 {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl ParamsNN2 {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        let p = ParamsNN2 { p11, p10, p01, p00 };
        if let Some(v) = p.to_array().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("parameter {v} outside [0,1]")));
        }
        Ok(p)
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn identity() -> Self {
        ParamsNN2 {
            p11: 1.0,
            p10: 1.0,
            p01: 0.0,
            p00: 0.0,
        }
    }

    /// `[p11, p10, p01, p00]`.
    pub fn to_array(self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn to_rule(self) -> RuleTable {
        // word order 00, 01, 10, 11
        let ones = [self.p00, self.p01, self.p10, self.p11];
        let rows = ones.iter().map(|&p| vec![1.0 - p, p]).collect();
        RuleTable::new(Alphabet::binary(), Neighborhood::nearest_right(), rows)
            .expect("parameters validated at construction")
    }

    /// Reads the parameters back from an alphabet-2 rule on `[0, 1]`.
    pub fn from_rule(rule: &RuleTable) -> Result<Self> {
        if rule.alphabet().size() != 2 || rule.neighborhood().offsets() != [0, 1] {
            return Err(Error::unsupported(
                "nearest-neighbor parameters need alphabet 2 and neighborhood [0, 1]",
            ));
        }
        Self::new(rule.prob(3, 1), rule.prob(2, 1), rule.prob(1, 1), rule.prob(0, 1))
    }

    pub fn time_scale(self, lambda: f64) -> Result<Self> {
        ParamsNN2::from_rule(&self.to_rule().time_scale(lambda)?)
    }

    pub fn max_abs_diff(self, other: ParamsNN2) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One of the four boundary faces of the parameter cube seen from the identity corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    P11Zero,
    P10Zero,
    P01One,
    P00One,
}

impl Face {
    pub fn label(self) -> &'static str {
        match self {
            Face::P11Zero => "p11=0",
            Face::P10Zero => "p10=0",
            Face::P01One => "p01=1",
            Face::P00One => "p00=1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FaceProjection {
    pub face: Face,
    pub params: ParamsNN2,
    pub lambda: f64,
}

/// Projects `p` away from `(1,1,0,0)` onto the cube boundary, so that
/// `p = λ·projected + (1−λ)·(1,1,0,0)`.
pub fn project_to_face(p: ParamsNN2) -> Result<FaceProjection> {
    let scalars = [1.0 - p.p11, 1.0 - p.p10, p.p01, p.p00];
    let faces = [Face::P11Zero, Face::P10Zero, Face::P01One, Face::P00One];
    let mut best = 0;
    for i in 1..4 {
        if scalars[i] > scalars[best] {
            best = i;
        }
    }
    let lambda = scalars[best];
    if lambda <= 0.0 {
        return Err(Error::IdentityProjection);
    }
    let id = ParamsNN2::identity().to_array();
    let mut q = [0.0; 4];
    for (k, v) in p.to_array().iter().enumerate() {
        q[k] = ((v - (1.0 - lambda) * id[k]) / lambda).clamp(0.0, 1.0);
    }
    q[best] = if best < 2 { 0.0 } else { 1.0 };
    Ok(FaceProjection {
        face: faces[best],
        params: ParamsNN2::from_array(q)?,
        lambda,
    })
}

/// Flips the states of odd-indexed sites and reparameterizes, giving a period-2 rule
/// with the same dynamics up to the renaming.
pub fn alternating_flip(p: ParamsNN2) -> PeriodicRule {
    alternating_flip_rule(&p.to_rule().into()).expect("alphabet 2 rule")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Rule;

    fn nn2(a: [f64; 4]) -> ParamsNN2 {
        ParamsNN2::from_array(a).unwrap()
    }

    #[test]
    fn rule_rows_follow_parameters() {
        let r = nn2([0.0, 0.2, 0.8, 0.1]).to_rule();
        assert_eq!(r.prob(r.word_index(&[1, 1]), 1), 0.0);
        assert_eq!(r.prob(r.word_index(&[1, 0]), 1), 0.2);
        assert_eq!(r.prob(r.word_index(&[0, 1]), 1), 0.8);
        assert_eq!(r.prob(r.word_index(&[0, 0]), 1), 0.1);
        assert_eq!(
            nn2([1.0, 1.0, 0.0, 0.0]).to_rule(),
            RuleTable::identity(Alphabet::binary(), Neighborhood::nearest_right())
        );
        let zero = nn2([0.0; 4]).to_rule();
        assert!(zero.rows().all(|row| row == [1.0, 0.0]));
        assert!(ParamsNN2::new(0.0, 1.1, 0.0, 0.0).is_err());
        assert!(ParamsNN2::new(0.0, 0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn face_projection_examples() {
        let f = project_to_face(nn2([0.0, 0.2, 0.8, 0.1])).unwrap();
        assert_eq!(f.face, Face::P11Zero);
        assert_eq!(f.lambda, 1.0);
        assert!(f.params.max_abs_diff(nn2([0.0, 0.2, 0.8, 0.1])) < 1e-12);

        let f = project_to_face(nn2([0.5, 0.6, 0.4, 0.05])).unwrap();
        assert_eq!(f.face, Face::P11Zero);
        assert!((f.lambda - 0.5).abs() < 1e-12);
        assert!(f.params.max_abs_diff(nn2([0.0, 0.2, 0.8, 0.1])) < 1e-12);

        let f = project_to_face(nn2([0.9, 0.95, 0.02, 0.01])).unwrap();
        assert_eq!(f.face, Face::P11Zero);
        assert!((f.lambda - 0.1).abs() < 1e-12);
        assert!(f.params.max_abs_diff(nn2([0.0, 0.5, 0.2, 0.1])) < 1e-9);

        assert!(matches!(
            project_to_face(ParamsNN2::identity()),
            Err(Error::IdentityProjection)
        ));
    }

    #[test]
    fn face_ties_pick_lowest_index() {
        let f = project_to_face(nn2([0.5, 0.5, 0.5, 0.5])).unwrap();
        assert_eq!(f.face, Face::P11Zero);
        let f = project_to_face(nn2([0.8, 0.5, 0.5, 0.2])).unwrap();
        assert_eq!(f.face, Face::P10Zero);
    }

    #[test]
    fn alternating_flip_examples() {
        let id = alternating_flip(ParamsNN2::identity());
        assert_eq!(id.period(), 2);
        for r in 0..2 {
            assert_eq!(ParamsNN2::from_rule(id.table(r)).unwrap(), ParamsNN2::identity());
        }
        let walls = alternating_flip(nn2([0.0, 1.0, 0.0, 0.0]));
        assert_eq!(ParamsNN2::from_rule(walls.table(0)).unwrap(), nn2([1.0, 0.0, 0.0, 0.0]));
        assert_eq!(ParamsNN2::from_rule(walls.table(1)).unwrap(), nn2([1.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn alternating_flip_parameter_maps() {
        let p = nn2([0.3, 0.6, 0.1, 0.25]);
        let q = alternating_flip(p);
        let even = ParamsNN2::from_rule(q.table(0)).unwrap();
        let odd = ParamsNN2::from_rule(q.table(1)).unwrap();
        assert!(even.max_abs_diff(nn2([p.p10, p.p11, p.p00, p.p01])) < 1e-15);
        assert!(odd.max_abs_diff(nn2([1.0 - p.p01, 1.0 - p.p00, 1.0 - p.p11, 1.0 - p.p10])) < 1e-15);
        let back = alternating_flip_rule(&q).unwrap();
        for r in 0..2 {
            assert!(ParamsNN2::from_rule(back.table(r)).unwrap().max_abs_diff(p) < 1e-15);
        }
    }
}
