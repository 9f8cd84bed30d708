//! Time-share polytope and its linear programs.
//!
//! `{ gamma >= 0 : sum gamma <= 1, row sums >= floor_up, column sums >= floor_down }`
//! where each link contributes to at most one row and at most one column.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use super::cost::Link;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct TimePolytope {
    n_links: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    floor_up: f64,
    floor_down: f64,
}

/// Multipliers of the time constraints.
#[derive(Debug, Clone)]
pub(crate) struct TimeDuals {
    pub lambda: f64,
    pub nu: Vec<f64>,
    pub xi: Vec<f64>,
}

impl TimePolytope {
    pub(crate) fn new(links: &[Link], m: usize, n: usize, floor_up: f64, floor_down: f64) -> Self {
        let mut rows = vec![Vec::new(); m];
        let mut cols = vec![Vec::new(); n];
        for (l, link) in links.iter().enumerate() {
            if let Some(i) = link.up {
                rows[i].push(l);
            }
            if let Some(j) = link.down {
                cols[j].push(l);
            }
        }
        Self { n_links: links.len(), rows, cols, floor_up, floor_down }
    }

    fn constrained_rows(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.rows.iter().filter(move |_| self.floor_up > 0.0)
    }

    fn constrained_cols(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.cols.iter().filter(move |_| self.floor_down > 0.0)
    }

    /// Weights rescaled to unit largest magnitude, and the scale. The LP
    /// solver works with absolute tolerances.
    fn normalized(weights: &[f64]) -> (Vec<f64>, f64) {
        let scale = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        (weights.iter().map(|w| w / scale).collect(), scale)
    }

    fn infeasible(&self) -> Error {
        Error::Configuration(format!(
            "fairness floors ({}, {}) cannot be met with the admissible links",
            self.floor_up, self.floor_down
        ))
    }

    /// Vertex maximizing `sum_l weights[l] gamma_l`.
    pub(crate) fn maximize(&self, weights: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(weights.len(), self.n_links);
        if self.constrained_rows().chain(self.constrained_cols()).any(Vec::is_empty) {
            return Err(self.infeasible());
        }
        let (weights, _) = Self::normalized(weights);
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<Variable> = weights.iter().map(|&w| lp.add_var(w, (0.0, 1.0))).collect();
        let all: Vec<(Variable, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(all.as_slice(), ComparisonOp::Le, 1.0);
        for (group, floor) in self
            .constrained_rows()
            .map(|g| (g, self.floor_up))
            .chain(self.constrained_cols().map(|g| (g, self.floor_down)))
        {
            let expr: Vec<(Variable, f64)> = group.iter().map(|&l| (vars[l], 1.0)).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, floor);
        }
        let solution = match lp.solve() {
            Ok(outcome) => outcome.into_solution().map_err(|e| Error::Solver(format!("{e:?}")))?,
            Err(microlp::Error::Infeasible) => return Err(self.infeasible()),
            Err(e) => return Err(Error::Solver(format!("time-share LP: {e}"))),
        };
        Ok(vars.iter().map(|&v| solution.var_value(v).clamp(0.0, 1.0)).collect())
    }

    /// Optimal multipliers of the maximization with `weights`:
    /// minimize `lambda - floor_up sum nu - floor_down sum xi`
    /// subject to `lambda - nu_row(l) - xi_col(l) >= weights[l]`, all `>= 0`.
    pub(crate) fn duals(&self, weights: &[f64]) -> Result<TimeDuals> {
        let (weights, scale) = Self::normalized(weights);
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let lambda = lp.add_var(1.0, (0.0, f64::INFINITY));
        let nu: Vec<Variable> = self
            .rows
            .iter()
            .map(|_| lp.add_var(-self.floor_up, (0.0, if self.floor_up > 0.0 { f64::INFINITY } else { 0.0 })))
            .collect();
        let xi: Vec<Variable> = self
            .cols
            .iter()
            .map(|_| lp.add_var(-self.floor_down, (0.0, if self.floor_down > 0.0 { f64::INFINITY } else { 0.0 })))
            .collect();
        let mut row_of = vec![None; self.n_links];
        let mut col_of = vec![None; self.n_links];
        for (i, group) in self.rows.iter().enumerate() {
            for &l in group {
                row_of[l] = Some(i);
            }
        }
        for (j, group) in self.cols.iter().enumerate() {
            for &l in group {
                col_of[l] = Some(j);
            }
        }
        for l in 0..self.n_links {
            let mut expr = vec![(lambda, 1.0)];
            if let Some(i) = row_of[l] {
                expr.push((nu[i], -1.0));
            }
            if let Some(j) = col_of[l] {
                expr.push((xi[j], -1.0));
            }
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, weights[l]);
        }
        let solution = lp
            .solve()
            .map_err(|e| Error::Solver(format!("time-share dual LP: {e}")))?
            .into_solution()
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        Ok(TimeDuals {
            lambda: scale * solution.var_value(lambda).max(0.0),
            nu: nu.iter().map(|&v| scale * solution.var_value(v).max(0.0)).collect(),
            xi: xi.iter().map(|&v| scale * solution.var_value(v).max(0.0)).collect(),
        })
    }
}
