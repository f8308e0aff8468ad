//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for small instances: every variable is nonnegative and the tableau is
//! stored in full.

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
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
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` over the current basis, restricted to columns
    /// below `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<(), LpError> {
        let mut reduced: Vec<f64> = (0..self.width)
            .map(|c| cost[c] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[c]).sum::<f64>())
            .collect();
        let limit = 50 * (self.width + self.rows.len()) + 1000;
        for _ in 0..limit {
            let Some(c) = (0..allowed).find(|&c| reduced[c] < -PIVOT_TOL) else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio <= lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return Err(LpError::Unbounded) };
            self.pivot(r, c);
            let f = reduced[c];
            for (d, pv) in reduced.iter_mut().zip(&self.rows[r]) {
                *d -= f * pv;
            }
        }
        Err(LpError::IterationLimit)
    }
}

/// Minimizes `cost · x` subject to `constraints` and `x ≥ 0`.
pub fn minimize(num_vars: usize, cost: &[f64], constraints: &[Constraint]) -> Result<LpSolution, LpError> {
    assert_eq!(cost.len(), num_vars);
    let rows = constraints.len();
    let slacks = constraints.iter().filter(|c| c.sense != Sense::Eq).count();
    // Every row gets an artificial column; rows whose slack can start basic
    // simply never use it.
    let width = num_vars + slacks + rows;
    let art0 = num_vars + slacks;
    let mut tab = Tableau { rows: Vec::with_capacity(rows), basis: vec![0; rows], width };
    let mut next_slack = num_vars;
    for (r, con) in constraints.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        for &(j, v) in &con.coeffs {
            row[j] += v;
        }
        let mut sense = con.sense;
        let mut rhs = con.rhs;
        if rhs < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        row[width] = rhs;
        match sense {
            Sense::Le => {
                row[next_slack] = 1.0;
                tab.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[art0 + r] = 1.0;
                tab.basis[r] = art0 + r;
            }
            Sense::Eq => {
                row[art0 + r] = 1.0;
                tab.basis[r] = art0 + r;
            }
        }
        tab.rows.push(row);
    }

    let mut phase1 = vec![0.0; width];
    phase1[art0..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase1, width)?;
    let infeasibility: f64 =
        tab.basis.iter().enumerate().filter(|(_, &b)| b >= art0).map(|(r, _)| tab.rhs(r)).sum();
    if infeasibility > FEAS_TOL {
        return Err(LpError::Infeasible);
    }
    // Drive zero-valued artificials out of the basis where possible.
    for r in 0..rows {
        if tab.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&c| tab.rows[r][c].abs() > PIVOT_TOL) {
                tab.pivot(r, c);
            }
        }
    }

    let mut phase2 = vec![0.0; width];
    phase2[..num_vars].copy_from_slice(cost);
    tab.optimize(&phase2, art0)?;

    let mut x = vec![0.0; num_vars];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < num_vars {
            x[b] = tab.rhs(r).max(0.0);
        }
    }
    let objective = x.iter().zip(cost).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, objective })
}
