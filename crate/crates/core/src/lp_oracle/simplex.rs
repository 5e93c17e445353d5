//! Dense two-phase tableau simplex.
//!
//! Rows are normalised to a nonnegative right-hand side; `<=` rows start with
//! their slack in the basis and only `>=` rows with positive right-hand side
//! (including the `>=` half of each split equality) receive an artificial.

use serde::{Deserialize, Serialize};

use super::build::{dot, max, DiscretizedLP, Sense};
use crate::scalar::LpScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PivotRule {
    /// Lowest-index entering and leaving variables. Never cycles.
    Bland,
    /// Most negative reduced cost, switching to Bland after a run of degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
    pub gap: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity).max(self.gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult<S> {
    pub status: Status,
    /// Optimal value, or the objective at the last basis for [`Status::IterationLimit`].
    pub objective: S,
    pub x: Vec<S>,
    /// One multiplier per logical row, signed so that `sum rhs_i y_i` equals the objective.
    pub duals: Vec<S>,
    pub iterations: usize,
    pub kkt: Option<KktResiduals>,
}

const DEGENERATE_RUN: usize = 50;

struct Expanded<S> {
    coeffs: Vec<S>,
    rhs: S,
    /// `true` for `<=` after normalisation.
    le: bool,
    origin: usize,
    /// `-1` when the row was negated to make `rhs >= 0`.
    flipped: bool,
}

struct Tableau<S> {
    a: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    cost: Vec<S>,
    /// Negated objective value.
    obj: S,
    banned: Vec<bool>,
    tol: S,
}

impl<S: LpScalar> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() / p.clone();
            }
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        self.a[r][c] = S::one();
        let pivot_row = self.a[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for &j in &nz {
                self.a[i][j] = self.a[i][j].clone() - f.clone() * pivot_row[j].clone();
            }
            self.a[i][c] = S::zero();
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        let f = self.cost[c].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.cost[j] = self.cost[j].clone() - f.clone() * pivot_row[j].clone();
            }
            self.cost[c] = S::zero();
            self.obj = self.obj.clone() - f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    fn entering(&self, rule: PivotRule) -> Option<usize> {
        let neg = -self.tol.clone();
        let mut best: Option<usize> = None;
        for (j, r) in self.cost.iter().enumerate() {
            if self.banned[j] || !(*r < neg) {
                continue;
            }
            match rule {
                PivotRule::Bland => return Some(j),
                PivotRule::Dantzig => {
                    if best.is_none_or(|b| *r < self.cost[b]) {
                        best = Some(j);
                    }
                }
            }
        }
        best
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.a.len() {
            let aic = &self.a[i][c];
            if !(*aic > self.tol) {
                continue;
            }
            let ratio = self.rhs[i].clone() / aic.clone();
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs to optimality; `Err` carries the terminal status.
    fn run(&mut self, rule: PivotRule, limit: usize, iterations: &mut usize) -> Status {
        let mut degenerate = 0;
        loop {
            let active = if rule == PivotRule::Dantzig && degenerate >= DEGENERATE_RUN {
                PivotRule::Bland
            } else {
                rule
            };
            let Some(c) = self.entering(active) else {
                return Status::Optimal;
            };
            let Some(r) = self.leaving(c) else {
                return Status::Unbounded;
            };
            if *iterations >= limit {
                return Status::IterationLimit;
            }
            if self.rhs[r].is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            *iterations += 1;
        }
    }

    fn reset_cost(&mut self, c: &[S]) {
        let ncols = self.cost.len();
        let mut cost: Vec<S> = (0..ncols).map(|j| c.get(j).cloned().unwrap_or_else(S::zero)).collect();
        let mut obj = S::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c.get(b).cloned().unwrap_or_else(S::zero);
            if cb.is_zero() {
                continue;
            }
            for j in 0..ncols {
                if !self.a[i][j].is_zero() {
                    cost[j] = cost[j].clone() - cb.clone() * self.a[i][j].clone();
                }
            }
            obj = obj - cb * self.rhs[i].clone();
        }
        self.cost = cost;
        self.obj = obj;
    }
}

pub fn solve<S: LpScalar>(lp: &DiscretizedLP<S>, iteration_limit: usize) -> SimplexResult<S> {
    solve_with(lp, iteration_limit, PivotRule::Bland)
}

pub fn solve_with<S: LpScalar>(lp: &DiscretizedLP<S>, iteration_limit: usize, rule: PivotRule) -> SimplexResult<S> {
    let nv = lp.num_vars();
    let tol = S::tolerance();
    // Minimisation form.
    let c_min: Vec<S> = if lp.maximize() {
        lp.objective.iter().map(|c| -c.clone()).collect()
    } else {
        lp.objective.clone()
    };
    let mut rows: Vec<Expanded<S>> = Vec::new();
    for (origin, row) in lp.rows.iter().enumerate() {
        let senses: &[bool] = match row.sense {
            Sense::Le => &[true],
            Sense::Ge => &[false],
            Sense::Eq => &[true, false],
        };
        for &le in senses {
            let flip = row.rhs < S::zero() || (!le && row.rhs.is_zero());
            let (coeffs, rhs) = if flip {
                (row.coeffs.iter().map(|c| -c.clone()).collect(), -row.rhs.clone())
            } else {
                (row.coeffs.clone(), row.rhs.clone())
            };
            rows.push(Expanded {
                coeffs,
                rhs,
                le: le != flip,
                origin,
                flipped: flip,
            });
        }
    }
    let nrows = rows.len();
    let n_art = rows.iter().filter(|r| !r.le).count();
    let ncols = nv + nrows + n_art;
    let mut t = Tableau {
        a: Vec::with_capacity(nrows),
        rhs: Vec::with_capacity(nrows),
        basis: Vec::with_capacity(nrows),
        cost: vec![S::zero(); ncols],
        obj: S::zero(),
        banned: vec![false; ncols],
        tol: tol.clone(),
    };
    let mut art = nv + nrows;
    let mut slack_col = Vec::with_capacity(nrows);
    for (i, r) in rows.iter().enumerate() {
        let mut line = r.coeffs.clone();
        line.resize(ncols, S::zero());
        let s = nv + i;
        slack_col.push(s);
        if r.le {
            line[s] = S::one();
            t.basis.push(s);
        } else {
            line[s] = -S::one();
            line[art] = S::one();
            t.basis.push(art);
            art += 1;
        }
        t.a.push(line);
        t.rhs.push(r.rhs.clone());
    }
    let mut iterations = 0;
    // Phase 1.
    if n_art > 0 {
        let mut c1 = vec![S::zero(); ncols];
        for x in c1.iter_mut().skip(nv + nrows) {
            *x = S::one();
        }
        t.reset_cost(&c1);
        let st = t.run(rule, iteration_limit, &mut iterations);
        if st == Status::IterationLimit {
            return finish(lp, &t, &rows, &slack_col, &c_min, st, iterations);
        }
        let infeasibility = -t.obj.clone();
        if infeasibility > tol.clone() * S::from_usize(nrows.max(1)).expect("row count") {
            return finish(lp, &t, &rows, &slack_col, &c_min, Status::Infeasible, iterations);
        }
        // Drive zero-level artificials out of the basis.
        let mut i = 0;
        while i < t.a.len() {
            if t.basis[i] >= nv + nrows {
                match (0..nv + nrows).find(|&j| t.a[i][j].abs() > tol) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        // Redundant row.
                        t.a.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for b in t.banned.iter_mut().skip(nv + nrows) {
            *b = true;
        }
    }
    // Phase 2.
    t.reset_cost(&c_min);
    let st = t.run(rule, iteration_limit, &mut iterations);
    finish(lp, &t, &rows, &slack_col, &c_min, st, iterations)
}

fn finish<S: LpScalar>(
    lp: &DiscretizedLP<S>,
    t: &Tableau<S>,
    rows: &[Expanded<S>],
    slack_col: &[usize],
    c_min: &[S],
    status: Status,
    iterations: usize,
) -> SimplexResult<S> {
    let nv = lp.num_vars();
    let mut x = vec![S::zero(); nv];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < nv {
            x[b] = t.rhs[i].clone();
        }
    }
    let objective = lp.objective_value(&x);
    // Row multipliers of the minimisation form.
    let mut y_min = vec![S::zero(); lp.rows.len()];
    for (e, r) in rows.iter().enumerate() {
        let rc = t.cost[slack_col[e]].clone();
        let ye = if r.le { -rc } else { rc };
        let ye = if r.flipped { -ye } else { ye };
        y_min[r.origin] = y_min[r.origin].clone() + ye;
    }
    let duals: Vec<S> = if lp.maximize() {
        y_min.iter().map(|y| -y.clone()).collect()
    } else {
        y_min.clone()
    };
    let kkt = (status == Status::Optimal).then(|| kkt(lp, &x, &y_min, c_min));
    SimplexResult {
        status,
        objective,
        x,
        duals,
        iterations,
        kkt,
    }
}

fn kkt<S: LpScalar>(lp: &DiscretizedLP<S>, x: &[S], y: &[S], c: &[S]) -> KktResiduals {
    let primal = lp.max_violation(x).to_f64_lossy();
    let nv = lp.num_vars();
    let mut reduced = c.to_vec();
    for (row, yi) in lp.rows.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for j in 0..nv {
            if !row.coeffs[j].is_zero() {
                reduced[j] = reduced[j].clone() - row.coeffs[j].clone() * yi.clone();
            }
        }
    }
    let mut dual = S::zero();
    let mut comp = S::zero();
    for j in 0..nv {
        if reduced[j] < S::zero() {
            dual = max(dual, -reduced[j].clone());
        }
        comp = max(comp, (x[j].clone() * reduced[j].clone()).abs());
    }
    let mut by = S::zero();
    for (row, yi) in lp.rows.iter().zip(y) {
        let wrong_sign = match row.sense {
            Sense::Ge => *yi < S::zero(),
            Sense::Le => *yi > S::zero(),
            Sense::Eq => false,
        };
        if wrong_sign {
            dual = max(dual, yi.abs());
        }
        let slack = dot(&row.coeffs, x) - row.rhs.clone();
        comp = max(comp, (yi.clone() * slack).abs());
        by = by + row.rhs.clone() * yi.clone();
    }
    let gap = (dot(c, x) - by).abs();
    KktResiduals {
        primal,
        dual: dual.to_f64_lossy(),
        complementarity: comp.to_f64_lossy(),
        gap: gap.to_f64_lossy(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::build::{Orientation, Row};
    use super::*;
    use num_rational::BigRational;

    fn lp<S: LpScalar>(orientation: Orientation, objective: Vec<S>, rows: Vec<(Vec<S>, Sense, S)>) -> DiscretizedLP<S> {
        let nv = objective.len();
        DiscretizedLP {
            orientation,
            n: 1,
            k: 1,
            m: 1,
            tau: vec![1],
            labels: (0..nv).map(|j| format!("x{j}")).collect(),
            objective,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (coeffs, sense, rhs))| Row {
                    label: format!("r{i}"),
                    coeffs,
                    sense,
                    rhs,
                })
                .collect(),
        }
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let p = lp(
            Orientation::MaximizeP,
            vec![3.0, 5.0],
            vec![
                (vec![1.0, 0.0], Sense::Le, 4.0),
                (vec![0.0, 2.0], Sense::Le, 12.0),
                (vec![3.0, 2.0], Sense::Le, 18.0),
            ],
        );
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let r = solve_with(&p, 100, rule);
            assert_eq!(r.status, Status::Optimal);
            assert!((r.objective - 36.0).abs() < 1e-12);
            assert!((r.x[0] - 2.0).abs() < 1e-12 && (r.x[1] - 6.0).abs() < 1e-12);
            assert!((r.duals[1] - 1.5).abs() < 1e-12 && (r.duals[2] - 1.0).abs() < 1e-12);
            assert!(r.kkt.unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn equality_and_ge_rows_exact() {
        // min x + 2y, x + y = 3, x - y >= -1, x <= 2.5 -> x = 2.5, y = 0.5.
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        let p = lp(
            Orientation::MinimizeD,
            vec![q(1, 1), q(2, 1)],
            vec![
                (vec![q(1, 1), q(1, 1)], Sense::Eq, q(3, 1)),
                (vec![q(1, 1), q(-1, 1)], Sense::Ge, q(-1, 1)),
                (vec![q(1, 1), q(0, 1)], Sense::Le, q(5, 2)),
            ],
        );
        let r = solve(&p, 100);
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.objective, q(7, 2));
        let k = r.kkt.unwrap();
        assert_eq!(k.max(), 0.0);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(
            Orientation::MinimizeD,
            vec![1.0],
            vec![(vec![1.0], Sense::Ge, 2.0), (vec![1.0], Sense::Le, 1.0)],
        );
        assert_eq!(solve(&p, 100).status, Status::Infeasible);
        let p = lp(Orientation::MaximizeP, vec![1.0, 0.0], vec![(vec![-1.0, 1.0], Sense::Le, 1.0)]);
        assert_eq!(solve(&p, 100).status, Status::Unbounded);
    }

    #[test]
    fn iteration_limit() {
        let p = lp(
            Orientation::MaximizeP,
            vec![3.0, 5.0],
            vec![(vec![1.0, 0.0], Sense::Le, 4.0), (vec![3.0, 2.0], Sense::Le, 18.0)],
        );
        assert_eq!(solve(&p, 0).status, Status::IterationLimit);
    }
}
