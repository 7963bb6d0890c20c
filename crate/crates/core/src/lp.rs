//! Dense two-phase simplex for small standard-form linear programs
//! `max cᵀx s.t. Ax = b, x ≥ 0`.
//!
//! Bland's rule is used throughout, so the method terminates on degenerate
//! problems. Intended for a few dozen variables.

const TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // last entry of each row is the right-hand side
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj·x` over columns `< allowed`. Returns false when unbounded.
    fn optimize(&mut self, obj: &[f64], allowed: usize) -> bool {
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = obj[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| obj[b] * self.rows[i][j])
                        .sum::<f64>();
                reduced > TOL
            });
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => ratio < best - TOL || (ratio <= best + TOL && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Solves `max cᵀx` subject to `a·x = b`, `x ≥ 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (ai, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for (j, v) in ai.iter().enumerate() {
            row[j] = sign * v;
        }
        row[n + i] = 1.0;
        row[cols] = sign * bi;
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..cols).collect(),
        cols,
    };

    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = -1.0);
    t.optimize(&phase1, cols);
    let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i)).sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis; rows that cannot pivot are redundant
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    if !t.optimize(&obj, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &bcol) in t.basis.iter().enumerate() {
        x[bcol] = t.rhs(i).max(0.0);
    }
    let objective = c.iter().zip(&x).map(|(u, v)| u * v).sum();
    LpOutcome::Optimal { x, objective }
}
