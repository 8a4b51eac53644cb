//! ADMM operator splitting for [`ConicProblem`]s.
//!
//! Each iteration solves one equality-constrained least-squares step against
//! a cached factorization of the quasi-definite KKT matrix
//! `[[P + sigma I, A'], [A, -diag(1/rho)]]` and projects onto the cones.
//! The factorization pivots the constraint block first, which leaves the
//! positive definite Schur complement `P + sigma I + A' diag(rho) A`; that is
//! what gets Cholesky-factored. It is recomputed only when `rho` adapts or
//! the constraint data changes, so a sequence of solves that differ only in
//! the linear cost reuses it.
//!
//! Data is equilibrated (modified Ruiz) before iterating. Row scaling is
//! kept uniform inside second-order and PSD blocks so cone membership is
//! unaffected.

use crate::cone::Cone;
use crate::problem::{ConicProblem, CsrMatrix};
use crate::ConicError;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::io::Write;
use std::ops::Range;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Absolute primal residual tolerance (unscaled, infinity norm).
    pub tol_primal: f64,
    /// Absolute dual residual tolerance (unscaled, infinity norm).
    pub tol_dual: f64,
    /// Relative tolerance added on top of the absolute ones.
    pub tol_rel: f64,
    pub max_iters: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    pub adaptive_rho: bool,
    /// Iterations between convergence, infeasibility and `rho` checks.
    pub check_interval: usize,
    pub scaling_iters: usize,
    /// Multiplier on `rho` for equality rows.
    pub equality_rho_scale: f64,
    /// Tolerance for the normalized infeasibility direction test.
    pub tol_infeasible: f64,
    /// Stagnation heuristic: relative residual level and iteration window.
    pub stagnation_level: f64,
    pub stagnation_window: usize,
    /// Record an iteration trace every `check_interval` iterations.
    pub trace: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            tol_rel: 0.0,
            max_iters: 50_000,
            rho: 1.0,
            sigma: 1e-6,
            relaxation: 1.6,
            adaptive_rho: true,
            check_interval: 25,
            scaling_iters: 10,
            equality_rho_scale: 1e3,
            tol_infeasible: 1e-5,
            stagnation_level: 1e-3,
            stagnation_window: 5_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    InfeasibleSuspected,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::InfeasibleSuspected => "infeasible_suspected",
            SolveStatus::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    /// Primal variables.
    pub x: DVector<f64>,
    /// Cone slacks, `s = b - Ax` up to the primal residual; always exactly
    /// inside the cone product.
    pub s: DVector<f64>,
    /// Dual variables, `Px + q + A'y = 0` and `y` in the dual cone at optimality.
    pub y: DVector<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn warm_start(&self) -> WarmStart {
        WarmStart { x: self.x.clone(), s: self.s.clone(), y: self.y.clone() }
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,primal_residual,dual_residual,objective,rho")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{:e},{:e},{:.12e},{:e}",
                r.iteration, r.primal_residual, r.dual_residual, r.objective, r.rho
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: DVector<f64>,
    pub s: DVector<f64>,
    pub y: DVector<f64>,
}

/// Solves once with a fresh workspace.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> Result<SolveReport, ConicError> {
    AdmmSolver::new(problem, settings.clone())?.solve(None)
}

/// Solver workspace bound to one problem structure.
pub struct AdmmSolver {
    settings: Settings,
    cones: Vec<Cone>,
    ranges: Vec<Range<usize>>,
    // scaled data
    p: DMatrix<f64>,
    q: DVector<f64>,
    constant: f64,
    a: CsrMatrix,
    b: DVector<f64>,
    // scaling: x = D xs, s = E^-1 ss, y = E ys / c
    d: DVector<f64>,
    e: DVector<f64>,
    c: f64,
    rho: DVector<f64>,
    rho_base: f64,
    is_eq: Vec<bool>,
    factor: Cholesky<f64, Dyn>,
    factorizations: usize,
}

impl AdmmSolver {
    pub fn new(problem: &ConicProblem, settings: Settings) -> Result<Self, ConicError> {
        problem.validate()?;
        let n = problem.num_vars();
        let m = problem.num_rows();
        let ranges = problem.cone_ranges();
        let mut is_eq = vec![false; m];
        for (cone, r) in problem.cones.iter().zip(&ranges) {
            if matches!(cone, Cone::Zero(_)) {
                is_eq[r.clone()].iter_mut().for_each(|v| *v = true);
            }
        }
        let mut solver = AdmmSolver {
            cones: problem.cones.clone(),
            ranges,
            p: problem.p.clone(),
            q: problem.q.clone(),
            constant: problem.constant,
            a: problem.a.clone(),
            b: problem.b.clone(),
            d: DVector::from_element(n, 1.0),
            e: DVector::from_element(m, 1.0),
            c: 1.0,
            rho: DVector::zeros(m),
            rho_base: settings.rho,
            is_eq,
            factor: Cholesky::new(DMatrix::identity(1, 1)).expect("1x1 identity"),
            factorizations: 0,
            settings,
        };
        solver.equilibrate();
        solver.set_rho(solver.rho_base);
        solver.factorize()?;
        Ok(solver)
    }

    /// Number of KKT factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Replaces the linear cost term without refactoring.
    pub fn update_linear_cost(&mut self, q: &DVector<f64>) -> Result<(), ConicError> {
        if q.len() != self.q.len() {
            return Err(ConicError::Assembly("linear cost length changed".into()));
        }
        self.q = q.component_mul(&self.d) * self.c;
        Ok(())
    }

    pub fn update_constant(&mut self, constant: f64) {
        self.constant = constant;
    }

    fn equilibrate(&mut self) {
        let n = self.q.len();
        let m = self.b.len();
        const MIN_NORM: f64 = 1e-4;
        const MAX_NORM: f64 = 1e4;
        let clamp = |v: f64| if v < MIN_NORM { 1.0 } else { v.min(MAX_NORM) };
        for _ in 0..self.settings.scaling_iters {
            let mut col = DVector::zeros(n);
            for j in 0..n {
                col[j] = self.p.column(j).amax();
            }
            let mut row = DVector::zeros(m);
            for i in 0..m {
                for (j, v) in self.a.row(i) {
                    let av = v.abs();
                    if av > col[j] {
                        col[j] = av;
                    }
                    if av > row[i] {
                        row[i] = av;
                    }
                }
            }
            for (cone, r) in self.cones.iter().zip(&self.ranges) {
                if cone.needs_uniform_scaling() && !r.is_empty() {
                    let mean = row.rows(r.start, r.len()).mean();
                    row.rows_mut(r.start, r.len()).fill(mean);
                }
            }
            let dj = col.map(|v| 1.0 / clamp(v).sqrt());
            let ei = row.map(|v| 1.0 / clamp(v).sqrt());
            for j in 0..n {
                for i in 0..n {
                    self.p[(i, j)] *= dj[i] * dj[j];
                }
            }
            for i in 0..m {
                for k in self.a.indptr[i]..self.a.indptr[i + 1] {
                    self.a.values[k] *= ei[i] * dj[self.a.indices[k]];
                }
            }
            self.q.component_mul_assign(&dj);
            self.b.component_mul_assign(&ei);
            self.d.component_mul_assign(&dj);
            self.e.component_mul_assign(&ei);
        }
        // cost scaling
        let mean_col = if n > 0 {
            (0..n).map(|j| self.p.column(j).amax()).sum::<f64>() / n as f64
        } else {
            0.0
        };
        let cost = clamp(mean_col.max(self.q.amax()));
        self.c = 1.0 / cost;
        self.p *= self.c;
        self.q *= self.c;
    }

    fn set_rho(&mut self, rho: f64) {
        self.rho_base = rho.clamp(1e-6, 1e6);
        let eq_scale = self.settings.equality_rho_scale;
        for (i, r) in self.rho.iter_mut().enumerate() {
            *r = if self.is_eq[i] { self.rho_base * eq_scale } else { self.rho_base };
        }
    }

    fn factorize(&mut self) -> Result<(), ConicError> {
        let n = self.q.len();
        let mut s = self.p.clone();
        for j in 0..n {
            s[(j, j)] += self.settings.sigma;
        }
        for i in 0..self.b.len() {
            let r = self.a.indptr[i]..self.a.indptr[i + 1];
            let rho = self.rho[i];
            for k1 in r.clone() {
                let j1 = self.a.indices[k1];
                let v1 = rho * self.a.values[k1];
                for k2 in r.clone() {
                    s[(j1, self.a.indices[k2])] += v1 * self.a.values[k2];
                }
            }
        }
        self.factor = Cholesky::new(s).ok_or_else(|| ConicError::Numerical("KKT Schur complement is not positive definite".into()))?;
        self.factorizations += 1;
        Ok(())
    }

    fn project(&self, v: &mut DVector<f64>) -> Result<(), ConicError> {
        for (cone, r) in self.cones.iter().zip(&self.ranges) {
            cone.project(&mut v.as_mut_slice()[r.clone()])?;
        }
        Ok(())
    }

    fn dual_cone_distance(&self, v: &DVector<f64>) -> Result<f64, ConicError> {
        let mut w = v.clone();
        for (cone, r) in self.cones.iter().zip(&self.ranges) {
            cone.project_dual(&mut w.as_mut_slice()[r.clone()])?;
        }
        Ok((v - w).amax())
    }

    pub fn solve(&mut self, warm: Option<&WarmStart>) -> Result<SolveReport, ConicError> {
        let n = self.q.len();
        let objective_free = self.q.iter().all(|v| *v == 0.0) && self.p.iter().all(|v| *v == 0.0);
        let m = self.b.len();
        let st = self.settings.clone();
        let alpha = st.relaxation;

        let (mut x, mut s, mut y) = match warm {
            Some(w) if w.x.len() == n && w.s.len() == m && w.y.len() == m => (
                w.x.component_div(&self.d),
                w.s.component_mul(&self.e),
                -w.y.component_div(&self.e) * self.c,
            ),
            _ => (DVector::zeros(n), DVector::zeros(m), DVector::zeros(m)),
        };

        let mut ax = DVector::zeros(m);
        let mut aty = DVector::zeros(n);
        let mut tmp_m = DVector::zeros(m);
        let mut y_prev = y.clone();
        let mut trace = Vec::new();
        let mut status = SolveStatus::MaxIterations;
        let mut iterations = st.max_iters;
        let mut infeasible_hits = 0usize;
        let mut stagnant_since: Option<(usize, f64)> = None;
        let (mut r_p, mut r_d) = (f64::INFINITY, f64::INFINITY);

        for it in 1..=st.max_iters {
            // x-step: S xt = sigma x - q + A'(rho (b - s) + y)
            for i in 0..m {
                tmp_m[i] = self.rho[i] * (self.b[i] - s[i]) + y[i];
            }
            self.a.tr_mul_vec(tmp_m.as_slice(), aty.as_mut_slice());
            let rhs = &x * st.sigma - &self.q + &aty;
            let xt = self.factor.solve(&rhs);
            // st = b - A xt
            self.a.mul_vec(xt.as_slice(), ax.as_mut_slice());
            let s_tilde = &self.b - &ax;
            x = &xt * alpha + &x * (1.0 - alpha);
            let mut s_pre = &s_tilde * alpha + &s * (1.0 - alpha) + y.component_div(&self.rho);
            let s_relaxed = s_pre.clone();
            self.project(&mut s_pre)?;
            s = s_pre;
            y_prev.copy_from(&y);
            y = (s_relaxed - &s).component_mul(&self.rho);

            if it % st.check_interval != 0 && it != st.max_iters {
                continue;
            }

            // residuals, unscaled
            self.a.mul_vec(x.as_slice(), ax.as_mut_slice());
            self.a.tr_mul_vec(y.as_slice(), aty.as_mut_slice());
            let px = &self.p * &x;
            let rp_vec = (&ax + &s - &self.b).component_div(&self.e);
            // internal y multiplies (b - Ax) - s, so it enters with a minus sign
            let rd_vec = (&px + &self.q - &aty).component_div(&self.d) / self.c;
            r_p = rp_vec.amax();
            r_d = rd_vec.amax();
            let p_scale = ax.component_div(&self.e).amax().max(s.component_div(&self.e).amax()).max(self.b.component_div(&self.e).amax());
            let d_scale = (px.component_div(&self.d).amax())
                .max(self.q.component_div(&self.d).amax())
                .max(aty.component_div(&self.d).amax())
                / self.c;
            if st.trace {
                trace.push(TraceRow {
                    iteration: it,
                    primal_residual: r_p,
                    dual_residual: r_d,
                    objective: self.objective_scaled(&x),
                    rho: self.rho_base,
                });
            }
            if r_p <= st.tol_primal + st.tol_rel * p_scale && r_d <= st.tol_dual + st.tol_rel * d_scale {
                status = SolveStatus::Optimal;
                iterations = it;
                break;
            }

            // infeasibility: the dual iterate difference approaches a
            // direction z in the polar cone with A'z = 0 and b'z > 0
            let dy = (&y - &y_prev).component_mul(&self.e) / self.c;
            let dy_norm = dy.amax();
            if dy_norm > 1e-12 {
                let z = &dy / dy_norm;
                let mut atz = DVector::zeros(n);
                // A'z in unscaled terms is D^-1 A_s' E^-1 z
                let zs = z.component_div(&self.e);
                self.a.tr_mul_vec(zs.as_slice(), atz.as_mut_slice());
                let atz = atz.component_div(&self.d);
                let bz = self.b.component_div(&self.e).dot(&z);
                if atz.amax() < st.tol_infeasible && bz > st.tol_infeasible && self.dual_cone_distance(&(-&z))? < st.tol_infeasible {
                    infeasible_hits += 1;
                } else {
                    infeasible_hits = 0;
                }
                if infeasible_hits >= 3 {
                    status = SolveStatus::InfeasibleSuspected;
                    iterations = it;
                    break;
                }
            }

            // stagnation heuristic
            let rel = r_p / (1.0 + p_scale);
            let y_norm = y.amax();
            if rel > st.stagnation_level {
                match stagnant_since {
                    None => stagnant_since = Some((it, y_norm)),
                    Some((start, y0)) => {
                        if it - start >= st.stagnation_window && y_norm > 10.0 * y0.max(1e-8) {
                            status = SolveStatus::InfeasibleSuspected;
                            iterations = it;
                            break;
                        }
                    }
                }
            } else {
                stagnant_since = None;
            }

            // a pure feasibility problem has no meaningful relative dual residual
            if st.adaptive_rho && !objective_free {
                let rp_s = (&ax + &s - &self.b).amax() / (ax.amax().max(s.amax()).max(self.b.amax()) + 1e-10);
                let rd_s = (&px + &self.q - &aty).amax() / (px.amax().max(self.q.amax()).max(aty.amax()) + 1e-10);
                let ratio = (rp_s / (rd_s + 1e-10)).sqrt();
                if !(0.2..=5.0).contains(&ratio) {
                    let old = self.rho.clone();
                    self.set_rho(self.rho_base * ratio);
                    // keep y; s and x unchanged
                    if old != self.rho {
                        self.factorize()?;
                    }
                }
            }
        }

        let x_u = x.component_mul(&self.d);
        let s_u = s.component_div(&self.e);
        let y_u = -y.component_mul(&self.e) / self.c;
        Ok(SolveReport {
            status,
            objective: self.objective_scaled(&x),
            x: x_u,
            s: s_u,
            y: y_u,
            primal_residual: r_p,
            dual_residual: r_d,
            iterations,
            trace,
        })
    }

    fn objective_scaled(&self, x: &DVector<f64>) -> f64 {
        (0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)) / self.c + self.constant
    }
}
