//! Dense bounded-variable primal simplex.
//!
//! Maximizes `c·x` subject to linear rows and `0 ≤ x ≤ upper`. Two phases:
//! artificial variables cover `≥` and `=` rows in phase one and are then
//! fixed at zero. Pricing is Dantzig's largest reduced cost, falling back to
//! Bland's rule after a run of degenerate pivots so cycling cannot persist.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex hit its iteration limit ({0})")]
    IterationLimit(usize),
    #[error("linear program too large: {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// A linear program `max c·x` over `0 ≤ x ≤ upper`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
/// Dense tableau entry cap (rows × columns).
pub const MAX_TABLEAU_ENTRIES: usize = 40_000_000;

impl LinearProgram {
    /// `n` variables with zero objective and unbounded upper limits.
    pub fn new(n: usize) -> Self {
        Self { objective: vec![0.0; n], upper: vec![f64::INFINITY; n], rows: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn set_upper(&mut self, j: usize, u: f64) {
        self.upper[j] = u;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Row { coeffs, relation, rhs });
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        if self.upper.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(LpError::Malformed("upper bounds must be nonnegative".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {r} has a non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {r} has a bad coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Residual of the worst violated row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(-v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.validate()?;
        Simplex::build(self)?.run(self)
    }
}

struct Simplex {
    m: usize,
    /// Structural + slack + artificial columns.
    cols: usize,
    n_struct: usize,
    first_artificial: usize,
    tab: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    xb: Vec<f64>,
    rc: Vec<f64>,
    /// Original column data (sparse) for the final refactorization.
    col_entries: Vec<Vec<(usize, f64)>>,
    iterations: usize,
    max_iterations: usize,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Result<Self, LpError> {
        let m = lp.rows.len();
        let n = lp.n_vars();
        let n_slack = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
        // normalize to nonnegative right-hand sides
        let mut relations = Vec::with_capacity(m);
        let mut rhs_sign = Vec::with_capacity(m);
        for row in &lp.rows {
            let flip = row.rhs < 0.0;
            rhs_sign.push(if flip { -1.0 } else { 1.0 });
            relations.push(match (row.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            });
        }
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let cols = n + n_slack + n_art;
        let size = m.saturating_mul(cols);
        if size > MAX_TABLEAU_ENTRIES {
            return Err(LpError::TooLarge { size, cap: MAX_TABLEAU_ENTRIES });
        }
        let mut tab = vec![0.0; size];
        let mut col_entries = vec![Vec::new(); cols];
        let mut b = vec![0.0; m];
        let mut basis = vec![usize::MAX; m];
        let mut upper = lp.upper.clone();
        upper.resize(cols, f64::INFINITY);
        let mut slack = n;
        let mut art = n + n_slack;
        for (r, row) in lp.rows.iter().enumerate() {
            let s = rhs_sign[r];
            for &(j, a) in &row.coeffs {
                tab[r * cols + j] += s * a;
            }
            b[r] = s * row.rhs;
            match (row.relation, relations[r]) {
                (Relation::Eq, _) => {}
                (_, Relation::Le) => {
                    tab[r * cols + slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                _ => {
                    tab[r * cols + slack] = -1.0;
                    slack += 1;
                }
            }
            if relations[r] != Relation::Le {
                tab[r * cols + art] = 1.0;
                basis[r] = art;
                art += 1;
            }
        }
        for r in 0..m {
            for j in 0..cols {
                let a = tab[r * cols + j];
                if a != 0.0 {
                    col_entries[j].push((r, a));
                }
            }
        }
        let mut is_basic = vec![false; cols];
        for &j in &basis {
            is_basic[j] = true;
        }
        let xb = b.clone();
        Ok(Self {
            m,
            cols,
            n_struct: n,
            first_artificial: n + n_slack,
            tab,
            b,
            upper,
            cost: vec![0.0; cols],
            basis,
            is_basic,
            at_upper: vec![false; cols],
            xb,
            rc: vec![0.0; cols],
            col_entries,
            iterations: 0,
            max_iterations: 20_000 + 50 * (m + cols),
        })
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        // structural variables with a zero upper bound are fixed at 0
        if self.first_artificial < self.cols {
            let mut phase1 = vec![0.0; self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            self.cost = phase1;
            self.reprice();
            self.iterate()?;
            let infeasibility: f64 = (0..self.m)
                .filter(|&r| self.basis[r] >= self.first_artificial)
                .map(|r| self.xb[r])
                .sum();
            let scale = 1.0 + self.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if infeasibility > 1e-7 * scale {
                return Err(LpError::Infeasible);
            }
            self.drive_out_artificials();
            for j in self.first_artificial..self.cols {
                self.upper[j] = 0.0;
                self.at_upper[j] = false;
            }
        }
        let scale = lp.objective.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let mut cost = vec![0.0; self.cols];
        if scale > 0.0 {
            for (j, c) in lp.objective.iter().enumerate() {
                cost[j] = c / scale;
            }
        }
        self.cost = cost;
        self.reprice();
        self.iterate()?;
        let x = self.extract(lp);
        let objective = x.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
        Ok(LpSolution { x, objective, iterations: self.iterations })
    }

    fn reprice(&mut self) {
        let cols = self.cols;
        let mut rc = self.cost.clone();
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.tab[r * cols..(r + 1) * cols];
                for (v, a) in rc.iter_mut().zip(row) {
                    *v -= cb * a;
                }
            }
        }
        for r in 0..self.m {
            rc[self.basis[r]] = 0.0;
        }
        self.rc = rc;
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.upper[j] == 0.0 {
                continue;
            }
            let d = self.rc[j];
            let dir = if !self.at_upper[j] && d > DUAL_TOL {
                1.0
            } else if self.at_upper[j] && d < -DUAL_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(k, _)| d.abs() > self.rc[k].abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    fn iterate(&mut self) -> Result<(), LpError> {
        let cols = self.cols;
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let Some((enter, dir)) = self.choose_entering(bland) else {
                return Ok(());
            };
            self.iterations += 1;
            // ratio test
            let mut theta = self.upper[enter];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0_f64;
            for r in 0..self.m {
                let alpha = dir * self.tab[r * cols + enter];
                let limit = if alpha > PIVOT_TOL {
                    (self.xb[r].max(0.0)) / alpha
                } else if alpha < -PIVOT_TOL {
                    let u = self.upper[self.basis[r]];
                    if u.is_finite() {
                        (u - self.xb[r]).max(0.0) / -alpha
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let better = if limit < theta - 1e-12 {
                    true
                } else if limit <= theta + 1e-12 {
                    // on ties keep a bound flip; among rows prefer the larger
                    // pivot, or the smaller basic index under Bland's rule
                    match leave {
                        Some((lr, _)) if bland => self.basis[r] < self.basis[lr],
                        Some(_) => alpha.abs() > leave_alpha.abs(),
                        None => false,
                    }
                } else {
                    false
                };
                if better {
                    theta = limit;
                    leave = Some((r, alpha < 0.0));
                    leave_alpha = alpha;
                }
            }
            if theta.is_infinite() {
                return Err(LpError::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for r in 0..self.m {
                let a = self.tab[r * cols + enter];
                if a != 0.0 {
                    self.xb[r] -= dir * theta * a;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[enter] = !self.at_upper[enter];
                }
                Some((r, to_upper)) => {
                    let entering_value =
                        if dir > 0.0 { theta } else { self.upper[enter] - theta };
                    let old = self.basis[r];
                    self.is_basic[old] = false;
                    self.at_upper[old] = to_upper;
                    self.pivot(r, enter);
                    self.xb[r] = entering_value;
                    self.at_upper[enter] = false;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, enter: usize) {
        let cols = self.cols;
        let piv = self.tab[r * cols + enter];
        for v in &mut self.tab[r * cols..(r + 1) * cols] {
            *v /= piv;
        }
        let pivot_row: Vec<f64> = self.tab[r * cols..(r + 1) * cols].to_vec();
        for q in 0..self.m {
            if q == r {
                continue;
            }
            let f = self.tab[q * cols + enter];
            if f != 0.0 {
                let row = &mut self.tab[q * cols..(q + 1) * cols];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    if *p != 0.0 {
                        *v -= f * p;
                    }
                }
                row[enter] = 0.0;
            }
        }
        let f = self.rc[enter];
        if f != 0.0 {
            for (v, p) in self.rc.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        self.rc[enter] = 0.0;
        self.basis[r] = enter;
        self.is_basic[enter] = true;
    }

    /// Swaps zero-level artificial variables out of the basis where a
    /// non-artificial column can take their place.
    fn drive_out_artificials(&mut self) {
        let cols = self.cols;
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let candidate = (0..self.first_artificial)
                .filter(|&j| !self.is_basic[j] && self.upper[j] > 0.0 && !self.at_upper[j])
                .max_by(|&a, &b| {
                    self.tab[r * cols + a].abs().total_cmp(&self.tab[r * cols + b].abs())
                });
            if let Some(j) = candidate {
                if self.tab[r * cols + j].abs() > 1e-9 {
                    let old = self.basis[r];
                    self.is_basic[old] = false;
                    self.at_upper[old] = false;
                    self.pivot(r, j);
                    // the artificial sat at zero, so the entering column
                    // takes its place at level zero
                    self.xb[r] = 0.0;
                }
            }
        }
    }

    fn extract(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut full = vec![0.0; self.cols];
        for j in 0..self.cols {
            if self.at_upper[j] && !self.is_basic[j] {
                full[j] = self.upper[j];
            }
        }
        for r in 0..self.m {
            full[self.basis[r]] = self.xb[r];
        }
        let tableau_x: Vec<f64> = full[..self.n_struct]
            .iter()
            .zip(&lp.upper)
            .map(|(&v, &u)| v.clamp(0.0, u))
            .collect();
        match self.refactor(&full) {
            Some(polished) => {
                let x: Vec<f64> = polished[..self.n_struct]
                    .iter()
                    .zip(&lp.upper)
                    .map(|(&v, &u)| v.clamp(0.0, u))
                    .collect();
                if lp.max_violation(&x) <= lp.max_violation(&tableau_x).max(FEAS_TOL) {
                    x
                } else {
                    tableau_x
                }
            }
            None => tableau_x,
        }
    }

    /// Recomputes basic values from the original columns with a fresh LU
    /// factorization, removing drift accumulated over many pivots.
    fn refactor(&self, full: &[f64]) -> Option<Vec<f64>> {
        let m = self.m;
        if m == 0 {
            return Some(full.to_vec());
        }
        let mut basis_matrix = DMatrix::<f64>::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            for &(r, a) in &self.col_entries[j] {
                basis_matrix[(r, k)] = a;
            }
        }
        let mut rhs = DVector::from_vec(self.b.clone());
        for j in 0..self.cols {
            if !self.is_basic[j] && full[j] != 0.0 {
                for &(r, a) in &self.col_entries[j] {
                    rhs[r] -= a * full[j];
                }
            }
        }
        let solved = basis_matrix.lu().solve(&rhs)?;
        if solved.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut out = full.to_vec();
        for (k, &j) in self.basis.iter().enumerate() {
            out[j] = solved[k];
        }
        Some(out)
    }
}
