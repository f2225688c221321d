//! Independent optimality oracle: the placement problem as an explicit
//! linear program, solved by a two-phase dense-tableau simplex over exact
//! rationals with Bland's pivot rule.
//!
//! Variables are `a_0..=a_K`. The program is
//!
//! ```text
//! minimize   g·a
//! subject to b·a  = 1
//!            c·a <= μ
//!            0 <= a_l <= 1
//! ```
//!
//! with `g_l = C(K,l+1) - Σ_ñ P(ñ) C(K-ñ,l+1)`, `b_l = C(K,l)` and
//! `c_l = C(K-1,l-1)` (`c_0 = 0`). The cache inequality is kept as an
//! inequality; its tightness at the optimum is checked, not assumed.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::combinatorics::binom_q;
use crate::placement::{expected_rate, optimal_placement, PlacementVector, ProblemInstance};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub equality_row: Vec<Rational>,
    pub equality_rhs: Rational,
    pub inequality_row: Vec<Rational>,
    pub inequality_rhs: Rational,
}

impl LinearProgram {
    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, objective: Vec<Rational>) -> Self {
        assert_eq!(objective.len(), self.variables());
        Self {
            objective,
            ..self.clone()
        }
    }

    pub fn is_feasible_point(&self, point: &[Rational]) -> bool {
        point.len() == self.variables()
            && dot(&self.equality_row, point) == self.equality_rhs
            && dot(&self.inequality_row, point) <= self.inequality_rhs
            && point.iter().all(|x| !x.is_negative() && *x <= Rational::one())
    }
}

/// Builds the expected-rate minimization for `inst`.
pub fn build_p2(inst: &ProblemInstance) -> LinearProgram {
    let k = inst.users() as i64;
    let dist = inst.distinct_distribution();
    let objective = (0..=k)
        .map(|l| {
            let redundant: Rational = dist
                .probabilities
                .iter()
                .map(|(&n, p)| p * binom_q(k - n as i64, l + 1))
                .sum();
            binom_q(k, l + 1) - redundant
        })
        .collect();
    let equality_row = (0..=k).map(|l| binom_q(k, l)).collect();
    let inequality_row = (0..=k)
        .map(|l| if l == 0 { Rational::zero() } else { binom_q(k - 1, l - 1) })
        .collect();
    LinearProgram {
        objective,
        equality_row,
        equality_rhs: Rational::one(),
        inequality_row,
        inequality_rhs: inst.mu().clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is optimal.
    pub point: Vec<Rational>,
    pub value: Rational,
    pub pivots: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            point: Vec::new(),
            value: Rational::zero(),
            pivots,
        }
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense tableau for `min cost·x, Ax = rhs, x >= 0`. Each row stores its
/// coefficients followed by the right-hand side.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    columns: usize,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, row: usize) -> &Rational {
        &self.rows[row][self.columns]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].recip();
        for x in self.rows[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    fn reduced_cost(&self, cost: &[Rational], col: usize) -> Rational {
        let basic: Rational = self
            .basis
            .iter()
            .zip(&self.rows)
            .map(|(&b, r)| &cost[b] * &r[col])
            .sum();
        &cost[col] - basic
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| &cost[b] * self.rhs(i))
            .sum()
    }

    /// Primal simplex with Bland's rule: the entering column is the lowest
    /// index with negative reduced cost, ties in the ratio test go to the
    /// lowest basic variable index.
    fn optimize(&mut self, cost: &[Rational], may_enter: impl Fn(usize) -> bool) -> Outcome {
        loop {
            let entering = (0..self.columns).find(|&j| {
                may_enter(j) && !self.basis.contains(&j) && self.reduced_cost(cost, j).is_negative()
            });
            let Some(col) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let coeff = &self.rows[i][col];
                if !coeff.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / coeff;
                let better = match &best {
                    None => true,
                    Some((r, b)) => ratio < *b || (ratio == *b && self.basis[i] < self.basis[*r]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((row, _)) = best else {
                return Outcome::Unbounded;
            };
            self.pivot(row, col);
        }
    }
}

/// Solves `min cost·x, Ax = rhs, x >= 0` by the two-phase method.
fn solve_standard_form(mut a: Vec<Vec<Rational>>, mut rhs: Vec<Rational>, cost: &[Rational]) -> (LpStatus, Vec<Rational>, usize) {
    let original = cost.len();
    for (row, b) in a.iter_mut().zip(rhs.iter_mut()) {
        if b.is_negative() {
            row.iter_mut().for_each(|x| *x = -x.clone());
            *b = -b.clone();
        }
    }

    // Reuse an existing unit column as the starting basic variable where
    // one exists; every other row gets an artificial variable.
    let m = a.len();
    let mut basis = vec![usize::MAX; m];
    for (j, _) in cost.iter().enumerate() {
        let nonzero: Vec<usize> = (0..m).filter(|&i| !a[i][j].is_zero()).collect();
        if let [i] = nonzero[..] {
            if a[i][j].is_one() && basis[i] == usize::MAX {
                basis[i] = j;
            }
        }
    }
    let missing: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
    let columns = original + missing.len();
    let rows = a
        .into_iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (mut row, b))| {
            row.extend(missing.iter().map(|&r| if r == i { Rational::one() } else { Rational::zero() }));
            row.push(b);
            row
        })
        .collect();
    for (offset, &i) in missing.iter().enumerate() {
        basis[i] = original + offset;
    }
    let mut tableau = Tableau {
        rows,
        basis,
        columns,
        pivots: 0,
    };

    if !missing.is_empty() {
        let phase_one: Vec<Rational> = (0..columns)
            .map(|j| if j >= original { Rational::one() } else { Rational::zero() })
            .collect();
        if let Outcome::Unbounded = tableau.optimize(&phase_one, |_| true) {
            unreachable!("phase one is bounded below by zero");
        }
        if tableau.objective(&phase_one).is_positive() {
            return (LpStatus::Infeasible, Vec::new(), tableau.pivots);
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are linearly dependent and dropped.
        let mut i = 0;
        while i < tableau.rows.len() {
            if tableau.basis[i] >= original {
                match (0..original).find(|&j| !tableau.rows[i][j].is_zero()) {
                    Some(j) => tableau.pivot(i, j),
                    None => {
                        tableau.rows.remove(i);
                        tableau.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let phase_two: Vec<Rational> = (0..columns)
        .map(|j| cost.get(j).cloned().unwrap_or_else(Rational::zero))
        .collect();
    if let Outcome::Unbounded = tableau.optimize(&phase_two, |j| j < original) {
        return (LpStatus::Unbounded, Vec::new(), tableau.pivots);
    }
    let mut x = vec![Rational::zero(); original];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < original {
            x[b] = tableau.rhs(i).clone();
        }
    }
    (LpStatus::Optimal, x, tableau.pivots)
}

/// Exact optimum of `lp`. Deterministic for identical input.
pub fn simplex_solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.variables();
    // Columns: a_0..a_{n-1}, cache slack, upper-bound slacks t_0..t_{n-1}.
    let columns = 2 * n + 1;
    let mut rows = Vec::with_capacity(n + 2);
    let mut rhs = Vec::with_capacity(n + 2);

    let mut eq = vec![Rational::zero(); columns];
    eq[..n].clone_from_slice(&lp.equality_row);
    rows.push(eq);
    rhs.push(lp.equality_rhs.clone());

    let mut ineq = vec![Rational::zero(); columns];
    ineq[..n].clone_from_slice(&lp.inequality_row);
    ineq[n] = Rational::one();
    rows.push(ineq);
    rhs.push(lp.inequality_rhs.clone());

    for l in 0..n {
        let mut bound = vec![Rational::zero(); columns];
        bound[l] = Rational::one();
        bound[n + 1 + l] = Rational::one();
        rows.push(bound);
        rhs.push(Rational::one());
    }

    let mut cost = vec![Rational::zero(); columns];
    cost[..n].clone_from_slice(&lp.objective);

    let (status, x, pivots) = solve_standard_form(rows, rhs, &cost);
    if status != LpStatus::Optimal {
        return LpSolution::failed(status, pivots);
    }
    let point: Vec<Rational> = x.into_iter().take(n).collect();
    let value = dot(&lp.objective, &point);
    LpSolution {
        status,
        point,
        value,
        pivots,
    }
}

/// Closed-form optimum checked against the simplex optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremCheck {
    pub instance: ProblemInstance,
    pub closed_form_placement: PlacementVector,
    pub closed_form_value: Rational,
    pub lp: LpSolution,
    pub values_equal: bool,
    pub lp_support: Vec<usize>,
    /// At most two nonzeros, and adjacent when there are two.
    pub lp_support_adjacent: bool,
    /// `c·a = μ` at the LP optimum.
    pub lp_cache_tight: bool,
}

/// Compares the closed-form placement against the simplex optimum. Optimal
/// points may differ when the optimum is not unique, so only values must
/// agree.
pub fn verify_theorem(inst: &ProblemInstance) -> TheoremCheck {
    let placement = optimal_placement(inst);
    let closed_form_value = expected_rate(inst, &placement).expect("closed-form placement is feasible");
    let program = build_p2(inst);
    let lp = simplex_solve(&program);
    let values_equal = lp.status == LpStatus::Optimal && lp.value == closed_form_value;
    let lp_support: Vec<usize> = lp
        .point
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(l, _)| l)
        .collect();
    let lp_support_adjacent = match lp_support[..] {
        [_] => true,
        [i, j] => j == i + 1,
        _ => false,
    };
    let lp_cache_tight = dot(&program.inequality_row, &lp.point) == program.inequality_rhs;
    TheoremCheck {
        instance: inst.clone(),
        closed_form_placement: placement,
        closed_form_value,
        lp,
        values_equal,
        lp_support,
        lp_support_adjacent,
        lp_cache_tight,
    }
}
