//! Dense two-phase tableau simplex: steepest reduced cost, Bland's rule on
//! degenerate stalls, periodic refactorization.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;
/// Pivots between refactorizations of the tableau.
const REFACTOR_EVERY: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNeg,
    Free,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c.x` subject to the rows.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub kinds: Vec<VarKind>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row; `c - A^T y` is the reduced cost vector.
    pub duals: Vec<f64>,
}

/// Multipliers `u` proving infeasibility: `u >= 0` on `Ge` rows, `u <= 0` on
/// `Le` rows, `(A^T u)_j <= 0` for nonnegative and `= 0` for free variables,
/// while `rhs . u > 0`.
#[derive(Debug, Clone)]
pub struct Farkas {
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(Farkas),
    Unbounded,
}

impl LinearProgram {
    pub fn new(kinds: Vec<VarKind>, objective: Vec<f64>) -> Self {
        assert_eq!(kinds.len(), objective.len());
        Self {
            kinds,
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        assert_eq!(coeffs.len(), self.kinds.len());
        self.rows.push(Row { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    n_cols: usize,
    art_start: usize,
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    sign: Vec<f64>,
    init_col: Vec<usize>,
    // original variable -> (plus column, optional minus column)
    var_cols: Vec<(usize, Option<usize>)>,
    row_alive: Vec<bool>,
    a0: Vec<Vec<f64>>,
    b0: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let mut var_cols = Vec::with_capacity(lp.kinds.len());
        let mut n_struct = 0;
        for k in &lp.kinds {
            match k {
                VarKind::NonNeg => {
                    var_cols.push((n_struct, None));
                    n_struct += 1;
                }
                VarKind::Free => {
                    var_cols.push((n_struct, Some(n_struct + 1)));
                    n_struct += 2;
                }
            }
        }
        let mut sign = vec![1.0; m];
        let mut senses = Vec::with_capacity(m);
        for (i, r) in lp.rows.iter().enumerate() {
            let s = if r.rhs < 0.0 {
                sign[i] = -1.0;
                match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                }
            } else {
                r.sense
            };
            senses.push(s);
        }
        let n_slack = senses.iter().filter(|s| **s != Sense::Eq).count();
        let n_art = senses.iter().filter(|s| **s != Sense::Le).count();
        let art_start = n_struct + n_slack;
        let n_cols = art_start + n_art;
        let mut t = vec![vec![0.0; n_cols]; m];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut init_col = vec![0; m];
        let mut slack = n_struct;
        let mut art = art_start;
        for (i, r) in lp.rows.iter().enumerate() {
            for (v, &(p, q)) in var_cols.iter().enumerate() {
                let a = sign[i] * r.coeffs[v];
                t[i][p] = a;
                if let Some(q) = q {
                    t[i][q] = -a;
                }
            }
            rhs[i] = sign[i] * r.rhs;
            match senses[i] {
                Sense::Le => {
                    t[i][slack] = 1.0;
                    basis[i] = slack;
                    init_col[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                    t[i][art] = 1.0;
                    basis[i] = art;
                    init_col[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    t[i][art] = 1.0;
                    basis[i] = art;
                    init_col[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            m,
            a0: t.clone(),
            b0: rhs.clone(),
            n_cols,
            art_start,
            t,
            rhs,
            basis,
            sign,
            init_col,
            var_cols,
            row_alive: vec![true; m],
        }
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64], obj: &mut f64) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let prow = self.t[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.m {
            if i == r || !self.row_alive[i] {
                continue;
            }
            let f = self.t[i][c];
            if f != 0.0 {
                for (v, pv) in self.t[i].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.t[i][c] = 0.0;
                self.rhs[i] -= f * prhs;
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            cost[c] = 0.0;
            *obj -= f * prhs;
        }
        self.basis[r] = c;
    }

    /// Reduced costs and objective for column costs `c` in the current basis.
    fn reduced(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let mut d = c.to_vec();
        let mut obj = 0.0;
        for i in 0..self.m {
            if !self.row_alive[i] {
                continue;
            }
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
                obj -= cb * self.rhs[i];
            }
        }
        // obj holds -c_B^T x_B
        (d, obj)
    }

    /// Recomputes the tableau from the original rows through the current
    /// basis, discarding accumulated rounding. Keeps the tableau when the
    /// basis matrix is numerically singular.
    fn refactor(&mut self) {
        let alive: Vec<usize> = (0..self.m).filter(|&i| self.row_alive[i]).collect();
        let k = alive.len();
        let w = self.n_cols + 1;
        // augmented [B | A0 | b0] over the alive rows
        let mut aug: Vec<Vec<f64>> = alive
            .iter()
            .map(|&r| {
                let mut row = Vec::with_capacity(k + w);
                row.extend(alive.iter().map(|&i| self.a0[r][self.basis[i]]));
                row.extend_from_slice(&self.a0[r]);
                row.push(self.b0[r]);
                row
            })
            .collect();
        for col in 0..k {
            let Some(piv) =
                (col..k).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            else {
                return;
            };
            if aug[piv][col].abs() < 1e-12 {
                return;
            }
            aug.swap(col, piv);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            let prow = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r == col {
                    continue;
                }
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                }
            }
        }
        for (kk, &i) in alive.iter().enumerate() {
            self.t[i].copy_from_slice(&aug[kk][k..k + self.n_cols]);
            self.rhs[i] = aug[kk][k + w - 1];
            let b = self.basis[i];
            for (r2, &i2) in alive.iter().enumerate() {
                self.t[i2][b] = if r2 == kk { 1.0 } else { 0.0 };
            }
        }
    }

    /// Minimizes the column costs over the first `allowed` columns. Returns
    /// the final reduced costs, or `None` if unbounded.
    fn optimize(
        &mut self,
        costs: &[f64],
        allowed: usize,
        pivots: &mut usize,
    ) -> Result<Option<Vec<f64>>> {
        let (mut d, mut obj) = self.reduced(costs);
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        let mut rechecked = false;
        loop {
            let bland = degenerate > DEGENERATE_STREAK;
            let enter = if bland {
                (0..allowed).find(|&j| d[j] < -COST_TOL)
            } else {
                (0..allowed)
                    .filter(|&j| d[j] < -COST_TOL)
                    .min_by(|&a, &b| d[a].total_cmp(&d[b]))
            };
            let Some(enter) = enter else {
                if since_refactor > 0 && !rechecked {
                    self.refactor();
                    (d, obj) = self.reduced(costs);
                    since_refactor = 0;
                    rechecked = true;
                    continue;
                }
                return Ok(Some(d));
            };
            let mut best = f64::INFINITY;
            for i in 0..self.m {
                let a = self.t[i][enter];
                if self.row_alive[i] && a > PIVOT_TOL {
                    best = best.min(self.rhs[i].max(0.0) / a);
                }
            }
            let mut leave: Option<usize> = None;
            if best.is_finite() {
                let cut = best + 1e-12 * (1.0 + best);
                for i in 0..self.m {
                    let a = self.t[i][enter];
                    if !self.row_alive[i] || a <= PIVOT_TOL || self.rhs[i].max(0.0) / a > cut {
                        continue;
                    }
                    leave = match leave {
                        None => Some(i),
                        Some(b) if bland && self.basis[i] < self.basis[b] => Some(i),
                        Some(b) if !bland && a > self.t[b][enter] => Some(i),
                        keep => keep,
                    };
                }
            }
            let Some(r) = leave else {
                if since_refactor > 0 {
                    self.refactor();
                    (d, obj) = self.reduced(costs);
                    since_refactor = 0;
                    continue;
                }
                return Ok(None);
            };
            if best > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.pivot(r, enter, &mut d, &mut obj);
            rechecked = false;
            *pivots += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                (d, obj) = self.reduced(costs);
                since_refactor = 0;
            }
            if *pivots > MAX_PIVOTS {
                return Err(Error::Solver("pivot limit exceeded".into()));
            }
        }
    }

    fn duals(&self, costs: &[f64], d: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                if !self.row_alive[i] {
                    return 0.0;
                }
                let j = self.init_col[i];
                self.sign[i] * (costs[j] - d[j])
            })
            .collect()
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let mut pivots = 0;
        let m = self.m;
        if self.art_start < self.n_cols {
            let mut c1 = vec![0.0; self.n_cols];
            for v in c1[self.art_start..].iter_mut() {
                *v = 1.0;
            }
            let d = self
                .optimize(&c1, self.n_cols, &mut pivots)?
                .expect("phase one is bounded below by zero");
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= self.art_start)
                .map(|i| self.rhs[i])
                .sum();
            let bscale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeas > 1e-9 * bscale {
                let multipliers = self.duals(&c1, &d);
                return Ok(LpOutcome::Infeasible(Farkas { multipliers }));
            }
            // drive artificials out of the basis
            for i in 0..m {
                if self.basis[i] < self.art_start {
                    continue;
                }
                let col = (0..self.art_start)
                    .filter(|&j| self.t[i][j].abs() > PIVOT_TOL)
                    .max_by(|&a, &b| self.t[i][a].abs().total_cmp(&self.t[i][b].abs()));
                match col {
                    Some(j) => {
                        let mut dummy = vec![0.0; self.n_cols];
                        let mut o = 0.0;
                        self.pivot(i, j, &mut dummy, &mut o);
                    }
                    None => self.row_alive[i] = false,
                }
            }
        }
        let mut c2 = vec![0.0; self.n_cols];
        for (v, &(p, q)) in self.var_cols.iter().enumerate() {
            c2[p] = lp.objective[v];
            if let Some(q) = q {
                c2[q] = -lp.objective[v];
            }
        }
        let Some(d) = self.optimize(&c2, self.art_start, &mut pivots)? else {
            return Ok(LpOutcome::Unbounded);
        };
        let cols = self.basic_values();
        let mut x = vec![0.0; lp.num_vars()];
        for (v, &(p, q)) in self.var_cols.iter().enumerate() {
            x[v] = cols[p] - q.map_or(0.0, |q| cols[q]);
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        let duals = self.duals(&c2, &d);
        Ok(LpOutcome::Optimal(LpSolution {
            x,
            objective,
            duals,
        }))
    }

    /// Values of all columns, re-solved from the original rows through the
    /// final basis.
    fn basic_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        let alive: Vec<usize> = (0..self.m).filter(|&i| self.row_alive[i]).collect();
        let bcols: Vec<usize> = alive.iter().map(|&i| self.basis[i]).collect();
        let a: Vec<Vec<f64>> = alive
            .iter()
            .map(|&r| bcols.iter().map(|&j| self.a0[r][j]).collect())
            .collect();
        let b: Vec<f64> = alive.iter().map(|&r| self.b0[r]).collect();
        match solve_dense(a, b) {
            Some(xb) => {
                for (j, v) in bcols.iter().zip(xb) {
                    out[*j] = v.max(0.0);
                }
            }
            None => {
                for (k, &i) in alive.iter().enumerate() {
                    out[bcols[k]] = self.rhs[i].max(0.0);
                }
            }
        }
        out
    }
}
