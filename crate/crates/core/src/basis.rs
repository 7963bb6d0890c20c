//! Product bases, representational seminorms and the α/β contractivity criterion.
//!
//! For a basis with values `x(a)`, `y(a)` (`a` ranging over the non-minimal
//! symbols) the single-site functions are `χ_{j,a}(σ) = x(a)` if `σ(j) ≥ a` and
//! `y(a)` otherwise. Products of these over finite site sets, together with the
//! constant 1, form a basis of the functions of finitely many sites.
//!
//! Coefficients of a function on `k` sites are stored as a dense vector over
//! `{0, …, q−1}^k`, where letter 0 at a position means the site is absent from
//! the product. The all-zero word is the constant term.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::rules::{decode_word, encode_word, Alphabet, Neighborhood, Rule, RuleTable, Symbol, STRICT_EPS};

/// Values `x(a)`, `y(a)` for `a = 1, …, q−1`, stored at index `a − 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductBasis {
    #[serde(skip)]
    alphabet: Alphabet,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ProductBasis {
    pub fn new(alphabet: Alphabet, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let letters = alphabet.size() - 1;
        if x.len() != letters || y.len() != letters {
            return Err(Error::domain(format!(
                "basis needs {letters} values of x and y for alphabet {}",
                alphabet.size()
            )));
        }
        if let Some(a) = (0..letters).find(|&i| x[i] == y[i] || !x[i].is_finite() || !y[i].is_finite()) {
            return Err(Error::domain(format!(
                "basis values at letter {} must be finite and distinct",
                a + 1
            )));
        }
        Ok(ProductBasis { alphabet, x, y })
    }

    pub fn binary(x: f64, y: f64) -> Result<Self> {
        Self::new(Alphabet::binary(), vec![x], vec![y])
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// `χ_{j,a}` evaluated at a site holding `s`; letter 0 is the constant 1.
    pub fn chi(&self, a: Symbol, s: Symbol) -> f64 {
        if a == 0 {
            1.0
        } else if s >= a {
            self.x[a as usize - 1]
        } else {
            self.y[a as usize - 1]
        }
    }

    /// Conditions 1–3 on the basis values and condition 4, which holds for every periodic rule.
    ///
    /// 1. `|x(a)|, |y(a)| ≤ 1`; 2. `x(a)·y(a) ≤ 0`;
    /// 3. `|x(b)| + |y(a)| + |x(b)·y(a)| ≤ 1` for `a > b`.
    pub fn conditions(&self) -> [bool; 4] {
        let tol = crate::rules::CLASSIFIER_SLACK;
        let n = self.x.len();
        let c1 = (0..n).all(|i| self.x[i].abs() <= 1.0 + tol && self.y[i].abs() <= 1.0 + tol);
        let c2 = (0..n).all(|i| self.x[i] * self.y[i] <= tol);
        let c3 = (0..n).all(|b| {
            (b + 1..n).all(|a| self.x[b].abs() + self.y[a].abs() + (self.x[b] * self.y[a]).abs() <= 1.0 + tol)
        });
        [c1, c2, c3, true]
    }

    fn single_site(&self) -> Matrix {
        let q = self.alphabet.size();
        let mut m = Matrix::zeros(q);
        for s in 0..q {
            for a in 0..q {
                m[(s, a)] = self.chi(a as Symbol, s as Symbol);
            }
        }
        m
    }

    /// Represents a function of `k` sites given by its values on `A^k`.
    pub fn represent(&self, f: &[f64], k: usize) -> Result<BasisRepr> {
        let q = self.alphabet.size();
        if f.len() != q.pow(k as u32) {
            return Err(Error::domain(format!(
                "table of {} values does not cover {q}^{k} words",
                f.len()
            )));
        }
        let lu = Lu::factor(&self.single_site())?;
        let condition = lu.condition_1();
        if condition > 1e12 {
            return Err(Error::Numerical {
                message: "single-site basis matrix is ill conditioned".into(),
                condition,
            });
        }
        let mut coeffs = f.to_vec();
        for_each_fiber(&mut coeffs, q, k, |fiber| lu.solve(fiber));
        Ok(BasisRepr { q, k, coeffs })
    }
}

/// Applies `op` to every axis-aligned fiber of a `q^k` tensor, axis by axis.
fn for_each_fiber(data: &mut [f64], q: usize, k: usize, op: impl Fn(&[f64]) -> Vec<f64>) {
    let mut fiber = vec![0.0; q];
    for axis in 0..k {
        let stride = q.pow((k - 1 - axis) as u32);
        let block = stride * q;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (i, v) in fiber.iter_mut().enumerate() {
                    *v = data[start + off + i * stride];
                }
                for (i, v) in op(&fiber).into_iter().enumerate() {
                    data[start + off + i * stride] = v;
                }
            }
        }
    }
}

/// Coefficients of a function of `k` sites in a product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisRepr {
    q: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl BasisRepr {
    pub fn num_sites(&self) -> usize {
        self.k
    }

    pub fn constant(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficient of `χ_{K,a_K}`, with letter 0 marking sites outside `K`.
    pub fn coeff(&self, letters: &[Symbol]) -> f64 {
        self.coeffs[encode_word(letters, self.q)]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Non-constant terms as `(letters, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<Symbol>, f64)> + '_ {
        self.coeffs.iter().enumerate().skip(1).map(move |(i, &c)| {
            let mut w = vec![0; self.k];
            decode_word(i, self.q, &mut w);
            (w, c)
        })
    }

    /// `Σ|coefficients|` without the constant term; `starred` includes it.
    pub fn seminorm(&self, starred: bool) -> f64 {
        let tail: f64 = self.coeffs[1..].iter().map(|c| c.abs()).sum();
        if starred {
            tail + self.coeffs[0].abs()
        } else {
            tail
        }
    }

    /// Values of the represented function on every word of `A^k`.
    pub fn evaluate(&self, basis: &ProductBasis) -> Vec<f64> {
        let m = basis.single_site();
        let mut values = self.coeffs.clone();
        for_each_fiber(&mut values, self.q, self.k, |c| m.mul_vec(c));
        values
    }
}

/// `‖f‖_Π` of a function of `k` sites.
pub fn seminorm_pi(f: &[f64], k: usize, basis: &ProductBasis, starred: bool) -> Result<f64> {
    Ok(basis.represent(f, k)?.seminorm(starred))
}

/// Representation of `σ ↦ P(a₊|σ)·x(a) + P(a₋|σ)·y(a)` over the neighborhood.
#[derive(Clone, Debug)]
pub struct UpdateCoefficients {
    pub residue: usize,
    pub letter: Symbol,
    self_position: usize,
    pub repr: BasisRepr,
}

impl UpdateCoefficients {
    /// The coefficient of `χ_{j,a}` itself.
    pub fn self_coeff(&self) -> f64 {
        let mut w = vec![0; self.repr.num_sites()];
        w[self.self_position] = self.letter;
        self.repr.coeff(&w)
    }

    /// Sum of absolute values over every other term, the constant included.
    pub fn others(&self) -> f64 {
        self.repr.seminorm(true) - self.self_coeff().abs()
    }

    pub fn alpha_term(&self) -> f64 {
        self.self_coeff() + self.others()
    }

    pub fn beta_term(&self) -> f64 {
        self.repr.seminorm(true)
    }
}

pub fn update_row<R: Rule + ?Sized>(
    rule: &R,
    basis: &ProductBasis,
    residue: usize,
    a: Symbol,
) -> Result<UpdateCoefficients> {
    check_alphabets(rule, basis)?;
    if a == 0 || a as usize >= rule.alphabet().size() {
        return Err(Error::domain(format!("letter {a} is not a non-minimal symbol")));
    }
    let t = rule.table(residue);
    let (xa, ya) = (basis.x[a as usize - 1], basis.y[a as usize - 1]);
    let f: Vec<f64> = (0..t.num_words())
        .map(|w| {
            let up = t.upper_tail(w, a);
            up * xa + (1.0 - up) * ya
        })
        .collect();
    Ok(UpdateCoefficients {
        residue: residue % rule.period(),
        letter: a,
        self_position: rule.neighborhood().self_position(),
        repr: basis.represent(&f, rule.neighborhood().len())?,
    })
}

fn check_alphabets<R: Rule + ?Sized>(rule: &R, basis: &ProductBasis) -> Result<()> {
    if rule.alphabet() != basis.alphabet() {
        return Err(Error::domain("rule and basis alphabets differ"));
    }
    Ok(())
}

fn max_over_rows<R: Rule + ?Sized>(
    rule: &R,
    basis: &ProductBasis,
    term: impl Fn(&UpdateCoefficients) -> f64,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for r in 0..rule.period() {
        for a in 1..rule.alphabet().size() {
            best = best.max(term(&update_row(rule, basis, r, a as Symbol)?));
        }
    }
    Ok(best)
}

/// `α = max over residues and letters of C_{{j},a} + Σ_{others} |C|`.
pub fn alpha<R: Rule + ?Sized>(rule: &R, basis: &ProductBasis) -> Result<f64> {
    max_over_rows(rule, basis, UpdateCoefficients::alpha_term)
}

/// As [`alpha`] with `|C_{{j},a}|`.
pub fn beta<R: Rule + ?Sized>(rule: &R, basis: &ProductBasis) -> Result<f64> {
    max_over_rows(rule, basis, UpdateCoefficients::beta_term)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub alpha: f64,
    pub beta: f64,
    /// `1 − α` when the criterion passes.
    pub rate: Option<f64>,
    pub basis: ProductBasis,
    pub conditions: [bool; 4],
    pub verdict: Verdict,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Exponential covariance decay with rate `1 − α` when conditions 1–4 hold and `α < 1 − eps`.
pub fn criterion_verdict<R: Rule + ?Sized>(rule: &R, basis: &ProductBasis, eps: f64) -> Result<CriterionReport> {
    let alpha = alpha(rule, basis)?;
    let beta = beta(rule, basis)?;
    let conditions = basis.conditions();
    let pass = conditions.iter().all(|&c| c) && alpha < 1.0 - eps;
    Ok(CriterionReport {
        alpha,
        beta,
        rate: pass.then_some(1.0 - alpha),
        basis: basis.clone(),
        conditions,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

/// `2‖f‖∞‖g‖_Π e^{−(1−α)t}`.
pub fn covariance_bound(f_sup: f64, g_pi: f64, alpha: f64, t: f64) -> f64 {
    2.0 * f_sup * g_pi * (-(1.0 - alpha) * t).exp()
}

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    let span = max - min;
    let last = (steps - 1) as f64;
    (0..steps).map(|i| min + span * i as f64 / last).collect()
}

/// `x = 1` with `y ∈ [−1, 0]` in steps of 0.01.
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (vec![1.0], grid(-1.0, 0.0, 101))
}

/// Searches bases whose per-letter values come from `x_grid × y_grid`, returning the
/// passing report with the smallest α (ties broken by the basis values).
pub fn basis_search<R: Rule + ?Sized>(
    rule: &R,
    x_grid: &[f64],
    y_grid: &[f64],
    eps: f64,
) -> Result<Option<CriterionReport>> {
    Ok(best_basis(rule, x_grid, y_grid, eps)?.filter(CriterionReport::passed))
}

/// As [`basis_search`] but returns the smallest-α candidate whether or not it passes.
///
/// Every candidate satisfies conditions 1–3, so the result passes iff any candidate does.
pub fn best_basis<R: Rule + ?Sized>(
    rule: &R,
    x_grid: &[f64],
    y_grid: &[f64],
    eps: f64,
) -> Result<Option<CriterionReport>> {
    let alphabet = rule.alphabet();
    let letters = alphabet.size() - 1;
    let pairs: Vec<(f64, f64)> = x_grid
        .iter()
        .flat_map(|&x| y_grid.iter().map(move |&y| (x, y)))
        .filter(|&(x, y)| x != y && x * y <= 0.0 && x.abs() <= 1.0 && y.abs() <= 1.0)
        .collect();

    let mut candidates: Vec<Vec<(f64, f64)>> = vec![vec![]];
    for _ in 0..letters {
        let mut next = Vec::new();
        for prefix in &candidates {
            for &p in &pairs {
                // condition 3 against every smaller letter
                if prefix
                    .iter()
                    .all(|&(xb, _)| xb.abs() + p.1.abs() + (xb * p.1).abs() <= 1.0 + 1e-12)
                {
                    let mut c = prefix.clone();
                    c.push(p);
                    next.push(c);
                }
            }
        }
        candidates = next;
    }

    let reports: Vec<CriterionReport> = candidates
        .par_iter()
        .map(|c| {
            let basis = ProductBasis::new(
                alphabet,
                c.iter().map(|p| p.0).collect(),
                c.iter().map(|p| p.1).collect(),
            )?;
            criterion_verdict(rule, &basis, eps)
        })
        .collect::<Result<Vec<_>>>()?;
    let key =
        |r: &CriterionReport| -> Vec<f64> { r.basis.x.iter().zip(&r.basis.y).flat_map(|(&x, &y)| [x, y]).collect() };
    Ok(reports.into_iter().min_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then_with(|| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal))
    }))
}

/// The constant `γ(x, y, R)` of the synchronous-update criterion, evaluated term by term.
pub fn lv_gamma(x: f64, y: f64, r: usize) -> Result<f64> {
    if x == y {
        return Err(Error::domain("γ needs distinct basis values"));
    }
    if r == 0 {
        return Err(Error::domain("γ needs R ≥ 1"));
    }
    let big = x.abs().max(y.abs());
    let mut gamma: f64 = 1.0;
    for m in 1..=r {
        let e = r as f64 / m as f64;
        let mi = m as i32;
        let a = ((x.powi(mi) - y.powi(mi)) / (x - y)).abs();
        let b = ((x.powi(mi) * y - x * y.powi(mi)) / (x - y)).abs();
        gamma = gamma.max(1.0).max(big.powf(e - 1.0)).max((a + b).powf(e));
    }
    Ok(gamma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcaReport {
    pub beta: f64,
    pub gamma: f64,
    pub verdict: Verdict,
}

/// Synchronous-update criterion: `β < 1/γ` with `R = |N|`.
pub fn pca_criterion<R: Rule + ?Sized>(rule: &R, basis: &ProductBasis) -> Result<PcaReport> {
    if rule.alphabet().size() != 2 {
        return Err(Error::unsupported("the synchronous-update criterion needs alphabet 2"));
    }
    let beta = beta(rule, basis)?;
    let gamma = lv_gamma(basis.x[0], basis.y[0], rule.neighborhood().len())?;
    Ok(PcaReport {
        beta,
        gamma,
        verdict: if beta < 1.0 / gamma {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

/// Offsets `[0, +1, −1, +2, −2, …]` truncated to `n_size` sites.
pub fn two_stage_neighborhood(n_size: usize) -> Result<Neighborhood> {
    let offsets = (0..n_size as i64)
        .map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) })
        .collect();
    Neighborhood::new(offsets)
}

/// Two-stage contact process on `{vacant, young, adult} = {0, 1, 2}` with spreading
/// rate `lam`, maturation rate `gam` and infant mortality `del`.
pub fn two_stage_rule(lam: f64, gam: f64, del: f64, n_size: usize) -> Result<RuleTable> {
    if !(lam >= 0.0 && gam >= 0.0 && del >= 0.0) || n_size == 0 {
        return Err(Error::domain("two-stage parameters must be non-negative and |N| ≥ 1"));
    }
    let nb = two_stage_neighborhood(n_size)?;
    let me = nb.self_position();
    let beta = 1.0 + del + gam + lam * n_size as f64;
    let rule = RuleTable::from_fn(Alphabet::new(3)?, nb, |w| {
        let adults = w.iter().filter(|&&s| s == 2).count() as f64;
        match w[me] {
            0 => vec![1.0 - lam / beta * adults, lam / beta * adults, 0.0],
            1 => vec![(1.0 + del) / beta, 1.0 - gam / beta - (1.0 + del) / beta, gam / beta],
            _ => vec![1.0 / beta, 0.0, 1.0 - 1.0 / beta],
        }
    })?;
    Ok(rule)
}

/// `max(γ/(1+γ), λ/(λ+δ)) < (1 + 2λ + δ − λ|N|)/(δ + λ|N|)`.
///
/// This inequality keeps the spreading terms on the updated site, so it is more
/// permissive than the criterion itself; [`two_stage_derived_condition`] is the
/// version the criterion certifies.
pub fn two_stage_condition(lam: f64, gam: f64, del: f64, n_size: usize) -> bool {
    let (lhs, rhs) = two_stage_sides(lam, gam, del, n_size);
    lhs < rhs
}

pub fn two_stage_sides(lam: f64, gam: f64, del: f64, n_size: usize) -> (f64, f64) {
    let n = n_size as f64;
    let lhs = (gam / (1.0 + gam)).max(lam / (lam + del));
    let rhs = (1.0 + 2.0 * lam + del - lam * n) / (del + lam * n);
    (lhs, rhs)
}

/// Offset added to the optimal young-site value so the strict inequalities can hold.
pub const TWO_STAGE_OFFSET: f64 = 1e-7;

/// Basis `x(1) = max(γ/(1+γ), λ/(λ+δ)) + offset`, `x(2) = 1`, `y ≡ 0`.
pub fn two_stage_basis(lam: f64, gam: f64, del: f64) -> Result<ProductBasis> {
    let spread = if lam + del > 0.0 { lam / (lam + del) } else { 0.0 };
    let a = ((gam / (1.0 + gam)).max(spread) + TWO_STAGE_OFFSET).min(1.0);
    ProductBasis::new(Alphabet::new(3)?, vec![a, 1.0], vec![0.0, 0.0])
}

/// Basis `x(1) = γ/(1+γ) + offset`, `x(2) = 1`, `y ≡ 0`.
pub fn two_stage_young_basis(gam: f64) -> Result<ProductBasis> {
    let a = (gam / (1.0 + gam) + TWO_STAGE_OFFSET).min(1.0);
    ProductBasis::new(Alphabet::new(3)?, vec![a, 1.0], vec![0.0, 0.0])
}

/// α of the two-stage rule under `x = (A, 1)`, `y ≡ 0`, expanded by hand.
///
/// The young row is `1 − (1+δ)/β + Aδ/β + (|N|−1)(1+A)λ/β`: on the updated site
/// the spreading terms cancel because a vacant site is never an adult.
/// The adult row is `γ/(Aβ) + 1 − (1+γ)/β`.
pub fn two_stage_alpha(lam: f64, gam: f64, del: f64, n_size: usize, a: f64) -> f64 {
    let beta = 1.0 + del + gam + lam * n_size as f64;
    let others = (n_size as f64 - 1.0) * (1.0 + a.abs()) * lam / beta;
    let young = 1.0 - (1.0 + del) / beta + (a * del / beta).abs() + others;
    let adult = (gam / (a * beta)).abs() + 1.0 - (1.0 + gam) / beta;
    young.max(adult)
}

/// `(γ/(1+γ), (1+δ−(|N|−1)λ)/(δ+(|N|−1)λ))`: the criterion with `B = 1` holds for some
/// `A` iff the left side is below the right side.
pub fn two_stage_derived_sides(lam: f64, gam: f64, del: f64, n_size: usize) -> (f64, f64) {
    let spread = (n_size as f64 - 1.0) * lam;
    (gam / (1.0 + gam), (1.0 + del - spread) / (del + spread))
}

pub fn two_stage_derived_condition(lam: f64, gam: f64, del: f64, n_size: usize) -> bool {
    let (lhs, rhs) = two_stage_derived_sides(lam, gam, del, n_size);
    lhs < rhs
}

/// Default strictness for the criterion.
pub const DEFAULT_EPS: f64 = STRICT_EPS;
