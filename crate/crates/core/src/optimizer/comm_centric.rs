use super::{usable, equalize_antenna_power, extract_rank1, outage_margins, rank_ratio, LiftedLayout, OuterTraceRow, ALPHA_MIN};
use crate::channel::{ChannelSet, ErrorCovariance};
use crate::outage::{soc_rows, UserQoS};
use crate::radar_loss::{LossBreakdown, RadarLoss, RadarLossConfig, ResidualKind};
use crate::{DfrcError, Result};
use dfrc_conic::hermitian::C64;
use dfrc_conic::{Affine, AdmmSolver, Cone, ProblemBuilder, Settings, SolveReport, SolveStatus, WarmStart};
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

/// Upper end of the bisection interval for the common outage level.
pub const MAX_OUTAGE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct CommCentricConfig {
    /// SINR thresholds (linear), one per user.
    pub gammas: Vec<f64>,
    /// Bound on the beampattern matching error.
    pub c1: f64,
    /// Bound on the cross-correlation term.
    pub c2: f64,
    pub bisection_tol: f64,
    pub rank_tol: f64,
    pub power_budget: f64,
    pub loss: RadarLossConfig,
    /// Penalty re-solves per bisection level in the main phase.
    pub max_inner_iters: usize,
    /// Weight of the proximal term `tau/2 ||W - W_anchor||^2` in the main phase.
    pub proximal_weight: f64,
    /// Iteration cap of each main-phase solve.
    pub pass_max_iters: usize,
    /// Primal residual under which a capped solve is still used.
    pub accept_residual: f64,
    pub solver: Settings,
}

impl CommCentricConfig {
    pub fn new(gammas: Vec<f64>, c1: f64, c2: f64, power_budget: f64, loss: RadarLossConfig) -> Self {
        CommCentricConfig {
            gammas,
            c1,
            c2,
            bisection_tol: 1e-3,
            rank_tol: 1e-4,
            power_budget,
            loss,
            max_inner_iters: 20,
            proximal_weight: 1.0,
            pass_max_iters: 10_000,
            accept_residual: 1e-5,
            solver: Settings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(DfrcError::Config("loss thresholds must be nonnegative".into()));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(DfrcError::Config("bisection tolerance must be positive".into()));
        }
        if !(self.rank_tol > 0.0) {
            return Err(DfrcError::Config("rank tolerance must be positive".into()));
        }
        if !(self.proximal_weight >= 0.0) {
            return Err(DfrcError::Config("proximal weight must be nonnegative".into()));
        }
        if !(self.power_budget > 0.0 && self.power_budget.is_finite()) {
            return Err(DfrcError::Config("power budget must be positive".into()));
        }
        if self.gammas.is_empty() {
            return Err(DfrcError::Config("at least one user is required".into()));
        }
        if self.gammas.iter().any(|g| !(*g > 0.0)) {
            return Err(DfrcError::Config("SINR thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Bisection steps needed to shrink `(0, 0.5)` below the tolerance.
    pub fn max_bisection_steps(&self) -> usize {
        (MAX_OUTAGE / self.bisection_tol).log2().ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct CommCentricResult {
    pub beamformers: Vec<DVector<C64>>,
    /// Achieved common outage level (the final `upper`).
    pub t_star: f64,
    /// Final `(lower, upper)` of each phase.
    pub feasibility_interval: (f64, f64),
    pub main_interval: (f64, f64),
    pub feasibility_steps: usize,
    pub main_steps: usize,
    pub loss: LossBreakdown,
    pub rank_ratios: Vec<f64>,
    /// False when no bisection level produced rank-one blocks; the
    /// beamformers then come from the feasibility phase.
    pub rank_one: bool,
    pub soc_margins: Vec<f64>,
    pub solver_iterations: usize,
    pub trace: Vec<OuterTraceRow>,
}

struct Level {
    layout: LiftedLayout,
    psd_rows: Vec<Range<usize>>,
    solver: AdmmSolver,
}

fn build_level(t: f64, prox: f64, max_iters: usize, channels: &ChannelSet, cov: &ErrorCovariance, cfg: &CommCentricConfig, loss: &RadarLoss) -> Result<Level> {
    let n = loss.num_antennas();
    let users = cfg.gammas.len();
    let layout = LiftedLayout::new(n, users);
    let residual = loss.residual_map();
    let ll = layout.loss_layout();
    let mut b = ProblemBuilder::new(layout.layout.clone());
    if prox > 0.0 {
        let nv = layout.layout.len();
        let diag = DVector::from_fn(nv, |i, _| if i == layout.alpha { 0.0 } else { prox });
        b.set_quadratic(DMatrix::from_diagonal(&diag));
    }
    let psd_rows = layout.add_common(&mut b, cfg.power_budget)?;
    let eps = UserQoS::new(1.0, t)?.epsilon();
    for (k, &gamma) in cfg.gammas.iter().enumerate() {
        let rows = soc_rows(&layout.w_vars, k, gamma, eps, &channels.c_hat[k], channels.noise_power, cov);
        let dim = rows.len();
        b.add_constraint(Cone::SecondOrder(dim), rows)?;
    }
    let mut mse = vec![Affine::constant(cfg.c1.sqrt())];
    mse.extend(residual.component_rows(&ll, ResidualKind::Mse));
    let dim = mse.len();
    b.add_constraint(Cone::SecondOrder(dim), mse)?;
    if cfg.loss.spec.dois.len() >= 2 {
        let mut cross = vec![Affine::constant(cfg.c2.sqrt())];
        cross.extend(residual.component_rows(&ll, ResidualKind::Cross));
        let dim = cross.len();
        b.add_constraint(Cone::SecondOrder(dim), cross)?;
    }
    let solver = AdmmSolver::new(&b.build()?, Settings { max_iters, ..cfg.solver.clone() })?;
    Ok(Level { layout, psd_rows, solver })
}

fn feasible(rep: &SolveReport, accept: f64) -> bool {
    usable(rep, accept)
}

/// Whether the beamformers extracted from `blocks` meet every constraint of
/// level `t` exactly. This certifies a level whose solve stopped at the
/// iteration cap before reaching the residual tolerance.
fn certified(blocks: &[DMatrix<C64>], t: f64, channels: &ChannelSet, cov: &ErrorCovariance, cfg: &CommCentricConfig, loss: &RadarLoss) -> bool {
    let mut w: Vec<DVector<C64>> = blocks.iter().map(|m| extract_rank1(m).w).collect();
    if equalize_antenna_power(&mut w, cfg.power_budget / loss.num_antennas() as f64).is_err() {
        return false;
    }
    let b = loss.loss_of_beamformers(&w, ALPHA_MIN);
    if b.l1 > cfg.c1 || b.l2 > cfg.c2 {
        return false;
    }
    let Ok(qos) = cfg.gammas.iter().map(|&g| UserQoS::new(g, t)).collect::<Result<Vec<_>>>() else { return false };
    outage_margins(&w, channels, cov, &qos).is_ok_and(|m| m.iter().all(|&x| x >= 0.0))
}

pub fn solve_comm_centric(channels: &ChannelSet, cov: &ErrorCovariance, cfg: &CommCentricConfig) -> Result<CommCentricResult> {
    cfg.validate()?;
    let loss = RadarLoss::new(cfg.loss.clone())?;
    let n = loss.num_antennas();
    let users = cfg.gammas.len();
    if channels.num_users() != users {
        return Err(DfrcError::Domain(format!("{} channels for {users} SINR thresholds", channels.num_users())));
    }
    if channels.c_hat.iter().any(|c| c.nrows() != n) || cov.n != n {
        return Err(DfrcError::Domain("channel or error model size does not match the array".into()));
    }
    let mut trace = Vec::new();
    let mut solver_iterations = 0;

    // feasibility phase: no objective, no rank gate
    let (mut lower, mut upper) = (0.0, MAX_OUTAGE);
    let mut anchors: Option<Vec<DMatrix<C64>>> = None;
    let mut warm: Option<WarmStart> = None;
    let mut feasibility_steps = 0;
    while upper - lower >= cfg.bisection_tol {
        feasibility_steps += 1;
        let t = 0.5 * (lower + upper);
        let mut level = build_level(t, 0.0, cfg.solver.max_iters, channels, cov, cfg, &loss)?;
        let rep = level.solver.solve(warm.as_ref())?;
        solver_iterations += rep.iterations;
        let blocks = level.layout.read_blocks(&rep, &level.psd_rows);
        let ok = feasible(&rep, cfg.accept_residual);
        trace.push(OuterTraceRow {
            phase: "feasibility".into(),
            iteration: feasibility_steps,
            parameter: t,
            loss: f64::NAN,
            max_rank_ratio: blocks.iter().map(rank_ratio).fold(0.0, f64::max),
            status: rep.status.as_str().into(),
            solver_iterations: rep.iterations,
            primal_residual: rep.primal_residual,
        });
        if ok {
            upper = t;
            anchors = Some(blocks);
            warm = Some(rep.warm_start());
        } else {
            lower = t;
        }
    }
    let Some(initial) = anchors else {
        return Err(DfrcError::Infeasible(format!(
            "no outage level below {MAX_OUTAGE} satisfies the radar thresholds c1 = {}, c2 = {}",
            cfg.c1, cfg.c2
        )));
    };
    let feasibility_interval = (lower, upper);

    // main phase: penalty objective with the rank gate. Levels below the
    // feasibility phase's lower end stay infeasible; levels at or above its
    // upper end are known feasible, so a capped solve there is not taken as
    // infeasibility.
    let mut anchors = initial.clone();
    let (mut lower, mut upper) = (feasibility_interval.0, MAX_OUTAGE);
    let mut accepted: Option<Vec<DMatrix<C64>>> = None;
    let mut main_steps = 0;
    while upper - lower >= cfg.bisection_tol {
        main_steps += 1;
        let t = 0.5 * (lower + upper);
        let mut level = build_level(t, cfg.proximal_weight, cfg.pass_max_iters, channels, cov, cfg, &loss)?;
        let mut current = anchors.clone();
        let mut level_warm = warm.clone();
        let mut rank_ok = false;
        let mut progressed = false;
        for _ in 0..cfg.max_inner_iters.max(1) {
            let lin = level.layout.linear_penalty(&current);
            let q = &lin - level.layout.stacked(&current) * cfg.proximal_weight;
            level.solver.update_linear_cost(&q)?;
            let rep = level.solver.solve(level_warm.as_ref())?;
            solver_iterations += rep.iterations;
            let blocks = level.layout.read_blocks(&rep, &level.psd_rows);
            let ratio = blocks.iter().map(rank_ratio).fold(0.0, f64::max);
            trace.push(OuterTraceRow {
                phase: "main".into(),
                iteration: main_steps,
                parameter: t,
                loss: lin.dot(&rep.x),
                max_rank_ratio: ratio,
                status: rep.status.as_str().into(),
                solver_iterations: rep.iterations,
                primal_residual: rep.primal_residual,
            });
            if rep.status == SolveStatus::InfeasibleSuspected {
                break;
            }
            progressed = true;
            level_warm = Some(rep.warm_start());
            current = blocks;
            if ratio < cfg.rank_tol
                && (usable(&rep, cfg.accept_residual) || certified(&current, t, channels, cov, cfg, &loss))
            {
                rank_ok = true;
                break;
            }
        }
        if progressed {
            // anchors carry over to the next level whether or not the gate passed
            anchors = current.clone();
            warm = level_warm;
        }
        if rank_ok {
            upper = t;
            accepted = Some(current);
        } else {
            lower = t;
        }
    }
    let main_interval = (lower, upper);

    let (blocks, rank_one, t_star) = match accepted {
        Some(b) => (b, true, upper),
        None => (initial, false, feasibility_interval.1),
    };
    let ratios: Vec<f64> = blocks.iter().map(rank_ratio).collect();
    let mut w: Vec<DVector<C64>> = blocks.iter().map(|m| extract_rank1(m).w).collect();
    equalize_antenna_power(&mut w, cfg.power_budget / n as f64)?;
    let breakdown = loss.loss_of_beamformers(&w, ALPHA_MIN);
    let qos: Vec<UserQoS> = cfg.gammas.iter().map(|&g| UserQoS::new(g, t_star)).collect::<Result<_>>()?;
    let soc_margins = outage_margins(&w, channels, cov, &qos)?;
    Ok(CommCentricResult {
        beamformers: w,
        t_star,
        feasibility_interval,
        main_interval,
        feasibility_steps,
        main_steps,
        loss: breakdown,
        rank_ratios: ratios,
        rank_one,
        soc_margins,
        solver_iterations,
        trace,
    })
}

