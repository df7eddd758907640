//! Restricted one-slack QP
//!
//! ```text
//! min  1/2 |w|^2 + C xi   s.t.  w . d_j >= delta_j - xi,  w >= 0,  xi >= 0
//! ```
//!
//! solved by a primal active-set method on `(w, xi)`. The point `w = 0`,
//! `xi = max(0, max_j delta_j)` is always feasible. Each equality
//! subproblem only involves the Gram matrix of the active cutting planes
//! over the free coordinates of `w`, which is kept up to date by rank-one
//! updates as bounds enter and leave.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, UscoError};
use crate::framework::dot;

const RIDGE: f64 = 1e-14;
/// Gram updates between full recomputations.
const REFRESH_EVERY: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkingConstraint {
    pub d: Vec<f64>,
    pub delta: f64,
}

impl WorkingConstraint {
    /// `delta - w . d`.
    pub fn violation(&self, w: &[f64]) -> f64 {
        self.delta - dot(&self.d, w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub slack: f64,
    /// One multiplier per constraint; `C - sum` is the multiplier of
    /// `xi >= 0`.
    pub multipliers: Vec<f64>,
    /// Primal minus dual objective.
    pub kkt_gap: f64,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
}

/// Solves the restricted QP from scratch.
pub fn solve_restricted_qp(
    working_set: &[WorkingConstraint],
    dim: usize,
    c_reg: f64,
    qp_tol: f64,
    qp_max_iter: usize,
) -> Result<QpSolution> {
    solve_warm(working_set, dim, c_reg, qp_tol, qp_max_iter, None)
}

/// Solves the restricted QP starting from `w = (sum_j warm_j d_j)_+` over
/// the leading constraints, with the slack raised to feasibility.
pub fn solve_warm(
    working_set: &[WorkingConstraint],
    dim: usize,
    c_reg: f64,
    qp_tol: f64,
    qp_max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<QpSolution> {
    if !(c_reg > 0.0) || !c_reg.is_finite() {
        return Err(UscoError::Domain(format!("c_reg must be positive, got {c_reg}")));
    }
    for (j, c) in working_set.iter().enumerate() {
        if c.d.len() != dim {
            return Err(UscoError::Dimension {
                expected: dim,
                got: c.d.len(),
            });
        }
        if !c.delta.is_finite() || c.d.iter().any(|v| !v.is_finite()) {
            return Err(UscoError::Domain(format!("constraint {j} is not finite")));
        }
    }

    let mut w = vec![0.0; dim];
    if let Some(prev) = warm.filter(|p| p.len() <= working_set.len() && p.iter().all(|l| *l >= 0.0)) {
        for (c, &l) in working_set.iter().zip(prev) {
            for (wk, dk) in w.iter_mut().zip(&c.d) {
                *wk += l * dk;
            }
        }
        w.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut st = ActiveSet::new(working_set, w, c_reg);
    let mut iterations = 0;
    let mut full_step = false;

    loop {
        let sub = st.subproblem();
        let step = match &sub {
            Sub::Target { w, xi, .. } => {
                let pw: Vec<f64> = w.iter().zip(&st.w).map(|(a, b)| a - b).collect();
                let px = xi - st.xi;
                let size = pw.iter().fold(px.abs(), |m, v| m.max(v.abs()));
                let scale = st.w.iter().fold(1.0 + st.xi.abs(), |m, v| m.max(v.abs()));
                (!full_step && size > 1e-13 * scale).then_some((pw, px, 1.0))
            }
            Sub::Ray => Some((vec![0.0; dim], -1.0, f64::INFINITY)),
        };

        if let Some((pw, px, cap)) = step {
            if iterations >= qp_max_iter {
                let gap = st.finish().kkt_gap;
                return Err(UscoError::QpNonConvergence { iterations, gap });
            }
            iterations += 1;
            full_step = st.advance(&pw, px, cap);
            continue;
        }
        full_step = false;

        // stationary on the working set; drop the most negative multiplier
        let Sub::Target { lambda, .. } = sub else { unreachable!() };
        match st.most_negative(&lambda) {
            Some((what, mu)) if mu < -qp_tol => {
                if iterations >= qp_max_iter {
                    let gap = st.finish().kkt_gap;
                    return Err(UscoError::QpNonConvergence { iterations, gap });
                }
                iterations += 1;
                st.release(what);
            }
            _ => {
                let mut sol = st.finish();
                sol.iterations = iterations;
                return Ok(sol);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Member {
    Bound(usize),
    Plane(usize),
    Slack,
}

enum Sub {
    /// Minimizer on the working set and the multipliers of the active planes.
    Target { w: Vec<f64>, xi: f64, lambda: Vec<f64> },
    /// Unbounded below: only `xi` can move.
    Ray,
}

struct ActiveSet<'a> {
    ws: &'a [WorkingConstraint],
    c_reg: f64,
    w: Vec<f64>,
    xi: f64,
    at_bound: Vec<bool>,
    planes: Vec<usize>,
    slack_active: bool,
    /// Gram matrix of all planes over the free coordinates.
    gram: DMatrix<f64>,
    updates: usize,
}

impl<'a> ActiveSet<'a> {
    fn new(ws: &'a [WorkingConstraint], w: Vec<f64>, c_reg: f64) -> Self {
        let xi = ws.iter().map(|c| c.violation(&w)).fold(0.0f64, f64::max);
        let at_bound: Vec<bool> = w.iter().map(|v| *v == 0.0).collect();
        let mut st = ActiveSet {
            ws,
            c_reg,
            w,
            xi,
            at_bound,
            planes: Vec::new(),
            slack_active: xi == 0.0,
            gram: DMatrix::zeros(ws.len(), ws.len()),
            updates: 0,
        };
        st.refresh_gram();
        st
    }

    fn refresh_gram(&mut self) {
        let n = self.ws.len();
        for i in 0..n {
            for j in i..n {
                let (a, b) = (&self.ws[i].d, &self.ws[j].d);
                let v: f64 = (0..a.len()).filter(|&k| !self.at_bound[k]).map(|k| a[k] * b[k]).sum();
                self.gram[(i, j)] = v;
                self.gram[(j, i)] = v;
            }
        }
        self.updates = 0;
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) coordinate `k` from the
    /// free set in the Gram matrix.
    fn update_gram(&mut self, k: usize, sign: f64) {
        self.updates += 1;
        if self.updates >= REFRESH_EVERY {
            self.refresh_gram();
            return;
        }
        let n = self.ws.len();
        for i in 0..n {
            let di = self.ws[i].d[k];
            if di == 0.0 {
                continue;
            }
            for j in 0..n {
                self.gram[(i, j)] += sign * di * self.ws[j].d[k];
            }
        }
    }

    fn subproblem(&self) -> Sub {
        let m = self.planes.len();
        if m == 0 {
            if self.slack_active {
                return Sub::Target {
                    w: vec![0.0; self.w.len()],
                    xi: 0.0,
                    lambda: Vec::new(),
                };
            }
            return Sub::Ray;
        }
        let diag = self.planes.iter().map(|&j| self.gram[(j, j)]).fold(0.0f64, f64::max);
        let ridge = RIDGE * if diag > 0.0 { diag } else { 1.0 };
        let size = if self.slack_active { m } else { m + 1 };
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut rhs = DVector::<f64>::zeros(size);
        for (p, &i) in self.planes.iter().enumerate() {
            for (q, &j) in self.planes.iter().enumerate() {
                a[(p, q)] = self.gram[(i, j)];
            }
            a[(p, p)] += ridge;
            rhs[p] = self.ws[i].delta;
        }
        if !self.slack_active {
            for p in 0..m {
                a[(p, m)] = 1.0;
                a[(m, p)] = 1.0;
            }
            rhs[m] = self.c_reg;
        }
        let sol = a.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(size));
        let lambda: Vec<f64> = (0..m).map(|p| sol[p]).collect();
        let mut w = vec![0.0; self.w.len()];
        for (&j, &l) in self.planes.iter().zip(&lambda) {
            for (k, wk) in w.iter_mut().enumerate() {
                if !self.at_bound[k] {
                    *wk += l * self.ws[j].d[k];
                }
            }
        }
        let xi = if self.slack_active { 0.0 } else { sol[m] };
        Sub::Target { w, xi, lambda }
    }

    /// Moves along `(pw, px)` up to `cap` or the first blocking constraint,
    /// which joins the working set. Returns whether the full step was taken.
    fn advance(&mut self, pw: &[f64], px: f64, cap: f64) -> bool {
        let pnorm = pw.iter().map(|v| v * v).sum::<f64>().sqrt() + px.abs();
        let mut alpha = cap;
        let mut block = None;
        for (j, c) in self.ws.iter().enumerate() {
            if self.planes.contains(&j) {
                continue;
            }
            let a = dot(&c.d, pw) + px;
            let dnorm = c.d.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0;
            if a < -1e-12 * dnorm * pnorm {
                let resid = (dot(&c.d, &self.w) + self.xi - c.delta).max(0.0);
                let t = resid / -a;
                if t < alpha {
                    alpha = t;
                    block = Some(Member::Plane(j));
                }
            }
        }
        for (k, &p) in pw.iter().enumerate() {
            if !self.at_bound[k] && p < 0.0 {
                let t = self.w[k].max(0.0) / -p;
                if t < alpha {
                    alpha = t;
                    block = Some(Member::Bound(k));
                }
            }
        }
        if !self.slack_active && px < 0.0 {
            let t = self.xi.max(0.0) / -px;
            if t < alpha {
                alpha = t;
                block = Some(Member::Slack);
            }
        }
        debug_assert!(alpha.is_finite(), "the slack bound always blocks a ray");
        for (wk, p) in self.w.iter_mut().zip(pw) {
            *wk += alpha * p;
        }
        self.xi += alpha * px;
        match block {
            Some(Member::Bound(k)) => {
                self.w[k] = 0.0;
                self.at_bound[k] = true;
                self.update_gram(k, -1.0);
            }
            Some(Member::Plane(j)) => self.planes.push(j),
            Some(Member::Slack) => {
                self.xi = 0.0;
                self.slack_active = true;
            }
            None => {}
        }
        block.is_none()
    }

    /// Most negative multiplier among the working-set members.
    fn most_negative(&self, lambda: &[f64]) -> Option<(Member, f64)> {
        let mut worst: Option<(Member, f64)> = None;
        let mut consider = |m: Member, v: f64| {
            if worst.is_none_or(|(_, b)| v < b) {
                worst = Some((m, v));
            }
        };
        for (&j, &l) in self.planes.iter().zip(lambda) {
            consider(Member::Plane(j), l);
        }
        for k in (0..self.w.len()).filter(|&k| self.at_bound[k]) {
            let z: f64 = self.planes.iter().zip(lambda).map(|(&j, &l)| l * self.ws[j].d[k]).sum();
            consider(Member::Bound(k), -z);
        }
        if self.slack_active {
            consider(Member::Slack, self.c_reg - lambda.iter().sum::<f64>());
        }
        worst
    }

    fn release(&mut self, m: Member) {
        match m {
            Member::Plane(j) => self.planes.retain(|&i| i != j),
            Member::Bound(k) => {
                self.at_bound[k] = false;
                self.update_gram(k, 1.0);
            }
            Member::Slack => self.slack_active = false,
        }
    }

    fn finish(&self) -> QpSolution {
        let w: Vec<f64> = self.w.iter().map(|v| v.max(0.0)).collect();
        let slack = self.ws.iter().map(|c| c.violation(&w)).fold(0.0f64, f64::max);
        let primal = 0.5 * dot(&w, &w) + self.c_reg * slack;
        let mut multipliers = vec![0.0; self.ws.len()];
        if let Sub::Target { lambda, .. } = self.subproblem() {
            for (&j, &l) in self.planes.iter().zip(&lambda) {
                multipliers[j] = l.max(0.0);
            }
        }
        let total: f64 = multipliers.iter().sum();
        if total > self.c_reg {
            multipliers.iter_mut().for_each(|l| *l *= self.c_reg / total);
        }
        let mut z = vec![0.0; w.len()];
        let mut lin = 0.0;
        for (c, &l) in self.ws.iter().zip(&multipliers) {
            lin += l * c.delta;
            for (zk, dk) in z.iter_mut().zip(&c.d) {
                *zk += l * dk;
            }
        }
        let dual = lin - 0.5 * z.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>();
        QpSolution {
            weights: w,
            slack,
            multipliers,
            kkt_gap: (primal - dual).max(0.0),
            primal,
            dual,
            iterations: 0,
        }
    }
}
