use super::{usable, extract_rank1, outage_margins, rank_ratio, equalize_antenna_power, LiftedLayout, OuterTraceRow, ALPHA_MIN};
use crate::channel::{ChannelSet, ErrorCovariance};
use crate::outage::{soc_rows, UserQoS};
use crate::radar_loss::{LossBreakdown, RadarLoss, RadarLossConfig};
use crate::{DfrcError, Result};
use dfrc_conic::hermitian::C64;
use dfrc_conic::{AdmmSolver, Cone, ProblemBuilder, Settings, SolveReport, SolveStatus, WarmStart};
use nalgebra::{DMatrix, DVector};

/// Growth of the first penalty parameter between restarts.
pub const RESTART_FACTOR: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct RadarCentricConfig {
    /// One entry per user; empty for a radar-only design.
    pub qos: Vec<UserQoS>,
    /// Total transmit power in watts.
    pub power_budget: f64,
    pub loss: RadarLossConfig,
    /// First penalty parameter; `None` uses 100 times the relaxed loss.
    pub zeta_1: Option<f64>,
    pub mu: f64,
    pub rank_tol: f64,
    pub max_outer_iters: usize,
    /// Weight of the proximal term `tau/2 ||W - W_anchor||^2` in penalty passes.
    pub proximal_weight: f64,
    /// Iteration cap of each penalty pass.
    pub pass_max_iters: usize,
    /// Primal residual under which a pass stopped at its cap is still used.
    pub accept_residual: f64,
    /// Extra passes at the final penalty parameter once the iterate is rank
    /// one. Each pass majorizes the loss at the current rank-one point, so
    /// the loss does not increase.
    pub refine_passes: usize,
    /// Relative loss decrease below which refinement stops.
    pub refine_tol: f64,
    /// Further descents from the relaxation, each with a first penalty
    /// parameter `RESTART_FACTOR` times larger, run while the design's loss
    /// exceeds the relaxed bound by more than `restart_gap` (relative).
    /// The best rank-one design is kept.
    pub restarts: usize,
    pub restart_gap: f64,
    /// Settings of the relaxation; penalty passes override `max_iters`.
    pub solver: Settings,
}

impl RadarCentricConfig {
    pub fn new(qos: Vec<UserQoS>, power_budget: f64, loss: RadarLossConfig) -> Self {
        RadarCentricConfig {
            qos,
            power_budget,
            loss,
            zeta_1: None,
            mu: 0.5,
            rank_tol: 1e-4,
            max_outer_iters: 30,
            proximal_weight: 0.01,
            pass_max_iters: 10_000,
            accept_residual: 1e-5,
            refine_passes: 40,
            refine_tol: 1e-5,
            restarts: 2,
            restart_gap: 1e-3,
            solver: Settings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(DfrcError::Config(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        if !(self.rank_tol > 0.0) {
            return Err(DfrcError::Config("rank tolerance must be positive".into()));
        }
        if !(self.power_budget > 0.0 && self.power_budget.is_finite()) {
            return Err(DfrcError::Config("power budget must be positive".into()));
        }
        if self.pass_max_iters == 0 {
            return Err(DfrcError::Config("penalty passes need at least one iteration".into()));
        }
        if !(self.proximal_weight >= 0.0) {
            return Err(DfrcError::Config("proximal weight must be nonnegative".into()));
        }
        if !(self.refine_tol >= 0.0) {
            return Err(DfrcError::Config("refinement tolerance must be nonnegative".into()));
        }
        if !(self.restart_gap >= 0.0) {
            return Err(DfrcError::Config("restart gap must be nonnegative".into()));
        }
        if let Some(z) = self.zeta_1 {
            if !(z > 0.0 && z.is_finite()) {
                return Err(DfrcError::Config("zeta_1 must be positive".into()));
            }
        }
        for q in &self.qos {
            if !(q.p_out > 0.0 && q.p_out < 0.5) {
                return Err(DfrcError::Config(format!("outage budget {} outside (0, 0.5)", q.p_out)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RadarCentricResult {
    /// Extracted beamformers with per-antenna power restored; empty for radar-only.
    pub beamformers: Vec<DVector<C64>>,
    /// Final transmit covariance `sum_k w_k w_k^H` (or the radar-only `R`).
    pub covariance: DMatrix<C64>,
    /// Relaxed solution without the penalty.
    pub relaxed: Vec<DMatrix<C64>>,
    /// Combined loss of the relaxation: a lower bound on `loss.combined`.
    pub relaxed_loss: f64,
    pub loss: LossBreakdown,
    /// `lambda_2 / lambda_1` of each lifted beamformer at the accepted iterate.
    pub rank_ratios: Vec<f64>,
    pub rank_one: bool,
    pub outer_iterations: usize,
    pub solver_iterations: usize,
    /// Cone margins of the extracted beamformers (nonnegative when satisfied).
    pub soc_margins: Vec<f64>,
    pub trace: Vec<OuterTraceRow>,
}

pub(super) fn sum_blocks(blocks: &[DMatrix<C64>], n: usize) -> DMatrix<C64> {
    blocks.iter().fold(DMatrix::from_element(n, n, C64::new(0.0, 0.0)), |acc, w| acc + w)
}

fn status_error(what: &str, report: &SolveReport) -> DfrcError {
    DfrcError::Infeasible(format!(
        "{what}: solver returned {} after {} iterations",
        report.status.as_str(),
        report.iterations
    ))
}

pub fn solve_radar_centric(channels: &ChannelSet, cov: &ErrorCovariance, cfg: &RadarCentricConfig) -> Result<RadarCentricResult> {
    cfg.validate()?;
    let loss = RadarLoss::new(cfg.loss.clone())?;
    let n = loss.num_antennas();
    let users = cfg.qos.len();
    if channels.num_users() != users {
        return Err(DfrcError::Domain(format!("{} channels for {users} QoS entries", channels.num_users())));
    }
    if channels.c_hat.iter().any(|c| c.nrows() != n) || (users > 0 && cov.n != n) {
        return Err(DfrcError::Domain("channel or error model size does not match the array".into()));
    }

    let lay = LiftedLayout::new(n, users);
    let residual = loss.residual_map();
    let (p, q_loss, c) = residual.quadratic_objective(&lay.loss_layout());
    let assemble = |p: DMatrix<f64>| -> Result<(dfrc_conic::ConicProblem, Vec<std::ops::Range<usize>>)> {
        let mut b = ProblemBuilder::new(lay.layout.clone());
        b.set_quadratic(p).set_linear(q_loss.clone()).add_constant(c);
        let psd_rows = lay.add_common(&mut b, cfg.power_budget)?;
        for (k, qos) in cfg.qos.iter().enumerate() {
            let rows = soc_rows(&lay.w_vars, k, qos.gamma, qos.epsilon(), &channels.c_hat[k], channels.noise_power, cov);
            let dim = rows.len();
            b.add_constraint(Cone::SecondOrder(dim), rows)?;
        }
        Ok((b.build()?, psd_rows))
    };
    let (problem, psd_rows) = assemble(p.clone())?;
    let report = AdmmSolver::new(&problem, cfg.solver.clone())?.solve(None)?;
    match report.status {
        SolveStatus::Optimal => {}
        SolveStatus::InfeasibleSuspected => return Err(status_error("relaxation infeasible (QoS too aggressive)", &report)),
        SolveStatus::MaxIterations => return Err(status_error("relaxation unsolved", &report)),
    }
    let relaxed = lay.read_blocks(&report, &psd_rows);
    let relaxed_loss = report.objective;
    let mut solver_iterations = report.iterations;
    let mut trace = vec![OuterTraceRow {
        phase: "relaxed".into(),
        iteration: 0,
        parameter: f64::INFINITY,
        loss: relaxed_loss,
        max_rank_ratio: max_ratio(&relaxed, users),
        status: report.status.as_str().into(),
        solver_iterations: report.iterations,
        primal_residual: report.primal_residual,
    }];

    if users == 0 {
        let r = relaxed[0].clone();
        let alpha = loss.best_alpha(&r, ALPHA_MIN)?;
        let breakdown = loss.combined(&r, alpha)?;
        return Ok(RadarCentricResult {
            beamformers: Vec::new(),
            covariance: r,
            relaxed,
            relaxed_loss,
            loss: breakdown,
            rank_ratios: Vec::new(),
            rank_one: true,
            outer_iterations: 0,
            solver_iterations,
            soc_margins: Vec::new(),
            trace,
        });
    }

    let tau = cfg.proximal_weight;
    let mut p_prox = p;
    for blk in &lay.w_vars {
        for i in blk.clone() {
            p_prox[(i, i)] += tau;
        }
    }
    let pass_settings = Settings { max_iters: cfg.pass_max_iters, ..cfg.solver.clone() };
    let mut ctx = Descent {
        solver: AdmmSolver::new(&assemble(p_prox.clone())?.0, pass_settings.clone())?,
        lay: &lay,
        psd_rows: &psd_rows,
        q_loss: &q_loss,
        loss: &loss,
        channels,
        cov,
        cfg,
    };
    let zeta_1 = cfg.zeta_1.unwrap_or(100.0 * relaxed_loss.max(f64::MIN_POSITIVE));
    let mut best = ctx.run(&relaxed, report.warm_start(), zeta_1, "")?;
    let mut outer = best.outer;
    solver_iterations += best.solver_iterations;
    trace.append(&mut best.trace);
    for r in 1..=cfg.restarts {
        let gap = best.breakdown.combined - relaxed_loss;
        if best.rank_one && gap <= cfg.restart_gap * relaxed_loss.abs() {
            break;
        }
        // Adapted step sizes from a stalled attempt bias the next one; start clean.
        ctx.solver = AdmmSolver::new(&assemble(p_prox.clone())?.0, pass_settings.clone())?;
        let mut attempt = ctx.run(&relaxed, report.warm_start(), zeta_1 * RESTART_FACTOR.powi(r as i32), &format!("-r{r}"))?;
        outer += attempt.outer;
        solver_iterations += attempt.solver_iterations;
        trace.append(&mut attempt.trace);
        let better = match (attempt.rank_one, best.rank_one) {
            (true, false) => true,
            (false, true) => false,
            _ => attempt.breakdown.combined < best.breakdown.combined,
        };
        if better {
            best = attempt;
        }
    }

    let covariance = sum_blocks(&best.w.iter().map(|v| v * v.adjoint()).collect::<Vec<_>>(), n);
    Ok(RadarCentricResult {
        beamformers: best.w,
        covariance,
        relaxed,
        relaxed_loss,
        loss: best.breakdown,
        rank_ratios: best.ratios,
        rank_one: best.rank_one,
        outer_iterations: outer,
        solver_iterations,
        soc_margins: best.soc_margins,
        trace,
    })
}

/// Shared state of the penalty descents from one relaxation.
struct Descent<'a> {
    solver: AdmmSolver,
    lay: &'a LiftedLayout,
    psd_rows: &'a [std::ops::Range<usize>],
    q_loss: &'a DVector<f64>,
    loss: &'a RadarLoss,
    channels: &'a ChannelSet,
    cov: &'a ErrorCovariance,
    cfg: &'a RadarCentricConfig,
}

struct Attempt {
    w: Vec<DVector<C64>>,
    breakdown: LossBreakdown,
    ratios: Vec<f64>,
    rank_one: bool,
    soc_margins: Vec<f64>,
    outer: usize,
    solver_iterations: usize,
    trace: Vec<OuterTraceRow>,
}

impl Descent<'_> {
    /// Penalty passes from the relaxation with a geometric schedule starting
    /// at `zeta`, then refinement from the first rank-one point.
    fn run(&mut self, relaxed: &[DMatrix<C64>], mut warm: WarmStart, mut zeta: f64, tag: &str) -> Result<Attempt> {
        let (cfg, lay, n) = (self.cfg, self.lay, self.loss.num_antennas());
        let tau = cfg.proximal_weight;
        let mut trace = Vec::new();
        let mut solver_iterations = 0;
        let mut current = relaxed.to_vec();
        let mut ratios: Vec<f64> = current.iter().map(rank_ratio).collect();
        let mut rank_one = ratios.iter().all(|&r| r < cfg.rank_tol);
        let mut outer = 0;
        let mut pass_loss_at_anchor = f64::INFINITY;
        while !rank_one && outer < cfg.max_outer_iters {
            outer += 1;
            let q = self.q_loss + lay.linear_penalty(&current) / zeta - lay.stacked(&current) * tau;
            self.solver.update_linear_cost(&q)?;
            let rep = self.solver.solve(Some(&warm))?;
            solver_iterations += rep.iterations;
            let blocks = lay.read_blocks(&rep, self.psd_rows);
            let r = sum_blocks(&blocks, n);
            let pass_loss = self.loss.combined(&r, rep.x[lay.alpha].max(ALPHA_MIN))?.combined;
            let pass_ratios: Vec<f64> = blocks.iter().map(rank_ratio).collect();
            trace.push(OuterTraceRow {
                phase: format!("penalty{tag}"),
                iteration: outer,
                parameter: zeta,
                loss: pass_loss,
                max_rank_ratio: pass_ratios.iter().copied().fold(0.0, f64::max),
                status: rep.status.as_str().into(),
                solver_iterations: rep.iterations,
                primal_residual: rep.primal_residual,
            });
            // anchors refresh after every pass; only usable passes may stop the loop
            if rep.status != SolveStatus::InfeasibleSuspected {
                current = blocks;
                ratios = pass_ratios;
                warm = rep.warm_start();
                rank_one = usable(&rep, cfg.accept_residual) && ratios.iter().all(|&r| r < cfg.rank_tol);
                pass_loss_at_anchor = pass_loss;
            }
            zeta *= cfg.mu;
        }

        // refinement from the rank-one point: each accepted pass majorizes the
        // loss there, so the loss cannot increase. The penalty is relaxed after
        // accepted passes to take longer steps and tightened after rejected ones.
        let mut zeta = zeta / cfg.mu;
        let mut refine = 0;
        let mut rejected = 0;
        while rank_one && refine < cfg.refine_passes && rejected < 3 {
            refine += 1;
            let q = self.q_loss + lay.linear_penalty(&current) / zeta - lay.stacked(&current) * tau;
            self.solver.update_linear_cost(&q)?;
            let rep = self.solver.solve(Some(&warm))?;
            solver_iterations += rep.iterations;
            let blocks = lay.read_blocks(&rep, self.psd_rows);
            let r = sum_blocks(&blocks, n);
            let pass_loss = self.loss.combined(&r, rep.x[lay.alpha].max(ALPHA_MIN))?.combined;
            let pass_ratios: Vec<f64> = blocks.iter().map(rank_ratio).collect();
            trace.push(OuterTraceRow {
                phase: format!("refine{tag}"),
                iteration: outer + refine,
                parameter: zeta,
                loss: pass_loss,
                max_rank_ratio: pass_ratios.iter().copied().fold(0.0, f64::max),
                status: rep.status.as_str().into(),
                solver_iterations: rep.iterations,
                primal_residual: rep.primal_residual,
            });
            let accepted = usable(&rep, cfg.accept_residual)
                && pass_ratios.iter().all(|&r| r < cfg.rank_tol)
                && pass_loss <= pass_loss_at_anchor;
            if !accepted {
                rejected += 1;
                zeta *= cfg.mu * cfg.mu;
                continue;
            }
            rejected = 0;
            let gain = pass_loss_at_anchor - pass_loss;
            current = blocks;
            ratios = pass_ratios;
            warm = rep.warm_start();
            pass_loss_at_anchor = pass_loss;
            if gain <= cfg.refine_tol * pass_loss.abs() {
                break;
            }
            zeta /= cfg.mu;
        }

        let mut w: Vec<DVector<C64>> = current.iter().map(|m| extract_rank1(m).w).collect();
        equalize_antenna_power(&mut w, cfg.power_budget / n as f64)?;
        let breakdown = self.loss.loss_of_beamformers(&w, ALPHA_MIN);
        let soc_margins = outage_margins(&w, self.channels, self.cov, &cfg.qos)?;
        Ok(Attempt { w, breakdown, ratios, rank_one, soc_margins, outer: outer + refine, solver_iterations, trace })
    }
}

fn max_ratio(blocks: &[DMatrix<C64>], users: usize) -> f64 {
    if users == 0 {
        return 0.0;
    }
    blocks.iter().map(rank_ratio).fold(0.0, f64::max)
}
