//! Dense two-phase simplex for small linear programs.
//!
//! Problems are `maximize c·x` subject to linear rows and `x ≥ 0`. Pivoting
//! follows Bland's rule (lowest-index entering column, lowest-index leaving
//! basic variable among ratio ties), which rules out cycling on degenerate
//! programs and makes the pivot sequence deterministic.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
const EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint { coeffs, relation, rhs }
    }
}

/// `maximize objective·x` subject to `constraints`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().expect("rhs column")
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
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

    /// Runs simplex iterations on the objective row until optimal.
    fn optimize(&mut self) -> Result<()> {
        let m = self.m();
        for _ in 0..MAX_PIVOTS {
            let obj = &self.rows[m];
            let entering = (0..obj.len() - 1).find(|&j| self.allowed[j] && obj[j] < -EPS);
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][c];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Err(Error::Unbounded),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(Error::InvalidParameter(format!(
            "simplex exceeded {MAX_PIVOTS} pivots"
        )))
    }

    /// Replaces the objective row with `maximize c·x` and prices out the basis.
    fn set_objective(&mut self, c: &[f64]) {
        let m = self.m();
        let width = self.rows[m].len();
        let mut obj = vec![0.0; width];
        for (j, cj) in c.iter().enumerate() {
            obj[j] = -cj;
        }
        for i in 0..m {
            let f = obj[self.basis[i]];
            if f != 0.0 {
                for (v, rv) in obj.iter_mut().zip(&self.rows[i]) {
                    *v -= f * rv;
                }
            }
        }
        self.rows[m] = obj;
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    if n == 0 {
        return Err(Error::InvalidParameter("linear program has no variables".into()));
    }
    for (k, con) in lp.constraints.iter().enumerate() {
        if con.coeffs.len() != n {
            return Err(Error::InvalidParameter(format!(
                "constraint {k} has {} coefficients, expected {n}",
                con.coeffs.len()
            )));
        }
        if !con.rhs.is_finite() || con.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("constraint {k} is not finite")));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("objective is not finite".into()));
    }

    // Normalize to nonnegative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art + 1;
    let art_start = n + n_slack;

    let mut t = Tableau {
        rows: Vec::with_capacity(m + 1),
        basis: Vec::with_capacity(m),
        allowed: vec![true; width - 1],
    };
    let (mut s, mut a) = (n, art_start);
    for (coeffs, rel, rhs) in &rows {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(coeffs);
        row[width - 1] = *rhs;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                t.basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[a] = 1.0;
                t.basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                row[a] = 1.0;
                t.basis.push(a);
                a += 1;
            }
        }
        t.rows.push(row);
    }
    t.rows.push(vec![0.0; width]);

    if n_art > 0 {
        let mut phase1 = vec![0.0; width - 1];
        for v in &mut phase1[art_start..] {
            *v = -1.0;
        }
        t.set_objective(&phase1);
        t.optimize()?;
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if t.rhs(m) < -EPS * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.m() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| t.rows[i][j].abs() > EPS) {
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
        for allowed in &mut t.allowed[art_start..] {
            *allowed = false;
        }
    }

    t.set_objective(&lp.objective);
    t.optimize()?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(objective: &[f64], cons: &[(&[f64], Relation, f64)]) -> LinearProgram {
        LinearProgram {
            objective: objective.to_vec(),
            constraints: cons
                .iter()
                .map(|(c, r, b)| Constraint::new(c.to_vec(), *r, *b))
                .collect(),
        }
    }

    #[test]
    fn single_bound() {
        let s = solve_lp(&lp(&[1.0], &[(&[1.0], Relation::Le, 3.0)])).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_program() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18 → (2, 6), 36
        let s = solve_lp(&lp(
            &[3.0, 5.0],
            &[
                (&[1.0, 0.0], Relation::Le, 4.0),
                (&[0.0, 2.0], Relation::Le, 12.0),
                (&[3.0, 2.0], Relation::Le, 18.0),
            ],
        ))
        .unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn ge_and_eq_rows() {
        // max -x - y; x + y ≥ 2; x - y = 0 → x = y = 1
        let s = solve_lp(&lp(
            &[-1.0, -1.0],
            &[
                (&[1.0, 1.0], Relation::Ge, 2.0),
                (&[1.0, -1.0], Relation::Eq, 0.0),
            ],
        ))
        .unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // -x ≤ -2 means x ≥ 2; max -x → -2
        let s = solve_lp(&lp(&[-1.0], &[(&[-1.0], Relation::Le, -2.0)])).unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = lp(
            &[1.0],
            &[(&[1.0], Relation::Le, 1.0), (&[1.0], Relation::Ge, 2.0)],
        );
        assert!(matches!(solve_lp(&inf), Err(Error::Infeasible)));
        let unb = lp(&[1.0, 0.0], &[(&[-1.0, 1.0], Relation::Le, 1.0)]);
        assert!(matches!(solve_lp(&unb), Err(Error::Unbounded)));
    }

    #[test]
    fn degenerate_redundant_rows_terminate() {
        // duplicated and redundant constraints with a degenerate vertex at the origin
        let s = solve_lp(&lp(
            &[10.0, -57.0, -9.0, -24.0],
            &[
                (&[0.5, -5.5, -2.5, 9.0], Relation::Le, 0.0),
                (&[0.5, -1.5, -0.5, 1.0], Relation::Le, 0.0),
                (&[1.0, 0.0, 0.0, 0.0], Relation::Le, 1.0),
                (&[1.0, 0.0, 0.0, 0.0], Relation::Le, 1.0),
                (&[1.0, 1.0, 1.0, 1.0], Relation::Eq, 1.0),
                (&[2.0, 2.0, 2.0, 2.0], Relation::Eq, 2.0),
            ],
        ))
        .unwrap();
        assert!(s.objective.is_finite());
        let sum: f64 = s.x.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beale_cycling_example() {
        // classic program that cycles under the largest-coefficient rule
        let s = solve_lp(&lp(
            &[0.75, -150.0, 0.02, -6.0],
            &[
                (&[0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                (&[0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
        ))
        .unwrap();
        assert!((s.objective - 0.05).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let bad = lp(&[1.0, 1.0], &[(&[1.0], Relation::Le, 1.0)]);
        assert!(matches!(solve_lp(&bad), Err(Error::InvalidParameter(_))));
    }
}
