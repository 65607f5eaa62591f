//! Dense two-phase primal simplex.
//!
//! Solves `min c'x` subject to equality and `>=` rows with `x >= 0`.
//! Phase 1 minimizes the sum of artificial variables from an all-artificial
//! basis; phase 2 re-prices with the true objective. Pricing is steepest
//! (most negative reduced cost) until the objective stalls, then switches
//! to Bland's rule, which guarantees termination on degenerate instances.
//! Instance sizes here stay in the low thousands of variables, well
//! within dense-tableau reach.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::solve_dense;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("infeasible: no nonnegative solution satisfies the constraints (phase-1 residual {0:.3e})")]
    Infeasible(f64),
    #[error("unbounded objective")]
    Unbounded,
    #[error("constraint row has length {got}, expected {expected}")]
    BadShape { got: usize, expected: usize },
    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
}

/// `min c'x` s.t. `A_eq x = b_eq`, `A_ge x >= b_ge`, `x >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_constraints: Vec<(Vec<f64>, f64)>,
    pub ge_constraints: Vec<(Vec<f64>, f64)>,
}

/// Optimal basic solution with dual multipliers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    /// Optimal values of the structural variables.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers of the equality rows (free sign).
    pub dual_eq: Vec<f64>,
    /// Multipliers of the `>=` rows (nonnegative at optimality).
    pub dual_ge: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    /// Lower bound `y'b` implied by the duals; the gap to the primal
    /// objective is a certificate of optimality quality.
    pub fn dual_bound(&self, lp: &LinearProgram) -> f64 {
        let eq: f64 = self
            .dual_eq
            .iter()
            .zip(&lp.eq_constraints)
            .map(|(y, (_, b))| y * b)
            .sum();
        let ge: f64 = self
            .dual_ge
            .iter()
            .zip(&lp.ge_constraints)
            .map(|(y, (_, b))| y * b)
            .sum();
        eq + ge
    }
}

const EPS: f64 = 1e-9;

/// Tag for where each tableau row came from, so duals map back.
#[derive(Clone, Copy)]
enum RowOrigin {
    Eq(usize),
    Ge(usize),
}

struct Tableau {
    /// rows[i] has `width` coefficient columns followed by the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    origins: Vec<RowOrigin>,
    /// Structural + surplus column count (artificials live beyond it).
    n_real: usize,
    width: usize,
    pivots: usize,
}

impl LinearProgram {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        for (row, _) in self.eq_constraints.iter().chain(&self.ge_constraints) {
            if row.len() != n {
                return Err(LpError::BadShape {
                    got: row.len(),
                    expected: n,
                });
            }
        }
        Ok(())
    }

    /// Runs the two-phase simplex.
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.validate()?;
        let n = self.n_vars();
        let n_surplus = self.ge_constraints.len();
        let n_real = n + n_surplus;
        let m = self.eq_constraints.len() + n_surplus;

        if m == 0 {
            if self.objective.iter().any(|&c| c < -EPS) {
                return Err(LpError::Unbounded);
            }
            return Ok(LpSolution {
                x: vec![0.0; n],
                objective: 0.0,
                dual_eq: vec![],
                dual_ge: vec![],
                pivots: 0,
            });
        }

        // Assemble rows: structural | surplus | artificial | rhs, with
        // rhs made nonnegative so the artificial basis is feasible.
        let width = n_real + m;
        let mut rows = Vec::with_capacity(m);
        let mut origins = Vec::with_capacity(m);
        for (i, (coeffs, b)) in self.eq_constraints.iter().enumerate() {
            rows.push(build_row(coeffs, None, *b, n_real, width));
            origins.push(RowOrigin::Eq(i));
        }
        for (i, (coeffs, b)) in self.ge_constraints.iter().enumerate() {
            rows.push(build_row(coeffs, Some(n + i), *b, n_real, width));
            origins.push(RowOrigin::Ge(i));
        }
        let mut basis = Vec::with_capacity(m);
        for (i, row) in rows.iter_mut().enumerate() {
            row[n_real + i] = 1.0;
            basis.push(n_real + i);
        }

        let mut tableau = Tableau {
            rows,
            basis,
            origins,
            n_real,
            width,
            pivots: 0,
        };

        // Phase 1: minimize the artificial sum.
        let phase1_cost: Vec<f64> = (0..width)
            .map(|j| if j >= n_real { 1.0 } else { 0.0 })
            .collect();
        let mut objective_row = reduced_costs(&tableau, &phase1_cost);
        run_simplex(&mut tableau, &mut objective_row, true)?;
        let residual = -objective_row[tableau.width];
        if residual > 1e-8 {
            return Err(LpError::Infeasible(residual));
        }
        drive_out_artificials(&mut tableau);

        // Phase 2: true objective over structural and surplus columns.
        let mut phase2_cost = vec![0.0; width];
        phase2_cost[..n].copy_from_slice(&self.objective);
        let mut objective_row = reduced_costs(&tableau, &phase2_cost);
        run_simplex(&mut tableau, &mut objective_row, false)?;

        let mut x = vec![0.0; n];
        for (i, &basic) in tableau.basis.iter().enumerate() {
            if basic < n {
                x[basic] = tableau.rows[i][tableau.width];
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

        let (dual_eq, dual_ge) = self.recover_duals(&tableau)?;
        Ok(LpSolution {
            x,
            objective,
            dual_eq,
            dual_ge,
            pivots: tableau.pivots,
        })
    }

    /// Solves `B' y = c_B` for the duals of the surviving rows; rows
    /// eliminated as redundant in phase 1 get multiplier zero.
    fn recover_duals(&self, tableau: &Tableau) -> Result<(Vec<f64>, Vec<f64>), LpError> {
        let n = self.n_vars();
        let m = tableau.rows.len();
        // Column j of B is the original coefficient column of the basic
        // variable in row j, restricted to the surviving rows.
        let mut b_transpose = vec![vec![0.0; m]; m];
        let mut c_basis = vec![0.0; m];
        for (col, &basic) in tableau.basis.iter().enumerate() {
            c_basis[col] = if basic < n { self.objective[basic] } else { 0.0 };
            for (row_idx, origin) in tableau.origins.iter().enumerate() {
                let coeff = if basic < n {
                    match origin {
                        RowOrigin::Eq(i) => self.eq_constraints[*i].0[basic],
                        RowOrigin::Ge(i) => self.ge_constraints[*i].0[basic],
                    }
                } else {
                    // Surplus column of ge-row k: -1 in that row.
                    let k = basic - n;
                    match origin {
                        RowOrigin::Ge(i) if *i == k => -1.0,
                        _ => 0.0,
                    }
                };
                // B[row_idx][col] = coeff  =>  B'[col][row_idx].
                b_transpose[col][row_idx] = coeff;
            }
        }
        let y = solve_dense(b_transpose, c_basis, 1e-12)
            .map_err(|_| LpError::PivotLimit(tableau.pivots))?;
        let mut dual_eq = vec![0.0; self.eq_constraints.len()];
        let mut dual_ge = vec![0.0; self.ge_constraints.len()];
        for (row_idx, origin) in tableau.origins.iter().enumerate() {
            match origin {
                RowOrigin::Eq(i) => dual_eq[*i] = y[row_idx],
                RowOrigin::Ge(i) => dual_ge[*i] = y[row_idx],
            }
        }
        Ok((dual_eq, dual_ge))
    }
}

fn build_row(coeffs: &[f64], surplus: Option<usize>, b: f64, n_real: usize, width: usize) -> Vec<f64> {
    let mut row = vec![0.0; width + 1];
    let sign = if b < 0.0 { -1.0 } else { 1.0 };
    for (j, &c) in coeffs.iter().enumerate() {
        row[j] = sign * c;
    }
    if let Some(s) = surplus {
        row[s] = -sign;
    }
    row[width] = sign * b;
    let _ = n_real;
    row
}

/// Canonical reduced-cost row for the given cost vector: basic columns
/// priced to zero, rhs cell carries the negated objective value.
fn reduced_costs(tableau: &Tableau, cost: &[f64]) -> Vec<f64> {
    let mut row = vec![0.0; tableau.width + 1];
    row[..tableau.width].copy_from_slice(cost);
    for (i, &basic) in tableau.basis.iter().enumerate() {
        let c_b = cost[basic];
        if c_b == 0.0 {
            continue;
        }
        for j in 0..=tableau.width {
            row[j] -= c_b * tableau.rows[i][j];
        }
    }
    row
}

/// Pivot loop. In phase 1 every column may enter; in phase 2 artificial
/// columns are frozen out.
fn run_simplex(tableau: &mut Tableau, objective_row: &mut Vec<f64>, phase1: bool) -> Result<(), LpError> {
    let m = tableau.rows.len();
    let eligible = if phase1 { tableau.width } else { tableau.n_real };
    let pivot_limit = 50 * (tableau.width + m) + 10_000;
    let stall_limit = 2 * (tableau.width + m);
    let mut best_objective = f64::INFINITY;
    let mut stalled = 0usize;
    let mut bland = false;

    loop {
        let entering = if bland {
            (0..eligible).find(|&j| objective_row[j] < -EPS)
        } else {
            let mut best = None;
            let mut best_value = -EPS;
            for j in 0..eligible {
                if objective_row[j] < best_value {
                    best_value = objective_row[j];
                    best = Some(j);
                }
            }
            best
        };
        let Some(entering) = entering else {
            return Ok(());
        };

        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = tableau.rows[i][entering];
            if a > EPS {
                let ratio = tableau.rows[i][tableau.width] / a;
                let better = ratio < best_ratio - EPS
                    || (ratio < best_ratio + EPS
                        && leaving.is_some_and(|l| tableau.basis[i] < tableau.basis[l]));
                if better {
                    best_ratio = ratio;
                    leaving = Some(i);
                }
            }
        }
        let Some(leaving) = leaving else {
            return Err(LpError::Unbounded);
        };

        pivot(tableau, objective_row, leaving, entering);
        tableau.pivots += 1;
        if tableau.pivots > pivot_limit {
            return Err(LpError::PivotLimit(tableau.pivots));
        }

        let objective = -objective_row[tableau.width];
        if objective < best_objective - 1e-12 {
            best_objective = objective;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > stall_limit {
                bland = true;
            }
        }
    }
}

fn pivot(tableau: &mut Tableau, objective_row: &mut [f64], leaving: usize, entering: usize) {
    let width = tableau.width;
    let pivot_value = tableau.rows[leaving][entering];
    let pivot_row = &mut tableau.rows[leaving];
    for v in pivot_row.iter_mut() {
        *v /= pivot_value;
    }
    let pivot_row = tableau.rows[leaving].clone();
    for (i, row) in tableau.rows.iter_mut().enumerate() {
        if i == leaving {
            continue;
        }
        let factor = row[entering];
        if factor.abs() <= EPS * EPS {
            continue;
        }
        for j in 0..=width {
            row[j] -= factor * pivot_row[j];
        }
        row[entering] = 0.0;
    }
    let factor = objective_row[entering];
    if factor != 0.0 {
        for j in 0..=width {
            objective_row[j] -= factor * pivot_row[j];
        }
        objective_row[entering] = 0.0;
    }
    tableau.basis[leaving] = entering;
}

/// After phase 1, replaces basic artificials with real columns where a
/// nonzero pivot exists; rows with no such column are redundant and are
/// dropped.
fn drive_out_artificials(tableau: &mut Tableau) {
    let mut row = 0;
    while row < tableau.rows.len() {
        if tableau.basis[row] < tableau.n_real {
            row += 1;
            continue;
        }
        let replacement = (0..tableau.n_real)
            .find(|&j| tableau.rows[row][j].abs() > 1e-7 && !tableau.basis.contains(&j));
        match replacement {
            Some(col) => {
                let mut dummy = vec![0.0; tableau.width + 1];
                pivot(tableau, &mut dummy, row, col);
                row += 1;
            }
            None => {
                tableau.rows.swap_remove(row);
                tableau.basis.swap_remove(row);
                tableau.origins.swap_remove(row);
            }
        }
    }
}

/// Plain text dump: objective row, then `=` rows, then `>=` rows, one per
/// line as space-separated coefficients with the bound last.
pub fn dump_lp(lp: &LinearProgram) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let row_str = |coeffs: &[f64]| {
        coeffs
            .iter()
            .map(|c| format!("{c:.17e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "min {}", row_str(&lp.objective)).unwrap();
    for (coeffs, b) in &lp.eq_constraints {
        writeln!(out, "eq {} = {b:.17e}", row_str(coeffs)).unwrap();
    }
    for (coeffs, b) in &lp.ge_constraints {
        writeln!(out, "ge {} >= {b:.17e}", row_str(coeffs)).unwrap();
    }
    out
}
