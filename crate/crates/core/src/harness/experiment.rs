//! Monte Carlo experiment driver: one design per channel realization,
//! metrics over error realizations, aggregates and parameter sweeps.

use super::config::{Algorithm, Scenario, ScenarioConfig};
use crate::array::beampattern;
use crate::channel::{clt_validate, gaussian_self_kl, generate_rayleigh, EntryLaw, ErrorModel, ErrorSampler, HistogramBin};
use crate::optimizer::{
    randomization_baseline, solve_comm_centric, solve_radar_centric, CommCentricConfig, RadarCentricConfig,
};
use crate::outage::{empirical_outage, sum_rate, UserQoS};
use crate::radar_loss::{LossBreakdown, RadarLoss};
use crate::{stream_rng, DfrcError, Result};
use dfrc_conic::hermitian::C64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// The design finished without meeting the rank-one test.
    NotRankOne,
    Infeasible,
    /// Randomization found no candidate meeting every outage constraint.
    NoFeasibleCandidate,
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::NotRankOne => "not-rank-one",
            RowStatus::Infeasible => "infeasible",
            RowStatus::NoFeasibleCandidate => "no-feasible-candidate",
            RowStatus::Failed => "failed",
        }
    }
}

/// Metrics of one channel realization.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub index: usize,
    pub status: RowStatus,
    pub message: String,
    pub loss: Option<LossBreakdown>,
    /// Loss of the relaxation, a lower bound on `loss`.
    pub relaxed_loss: Option<f64>,
    /// Baseline runs: loss of the penalty method on the same instance.
    pub reference_loss: Option<f64>,
    pub sum_rate: Option<f64>,
    /// Empirical outage and its binomial standard error, per user.
    pub outage: Vec<f64>,
    pub outage_stderr: Vec<f64>,
    pub t_star: Option<f64>,
    /// Feasibility-phase and main-phase bisection steps.
    pub bisection_steps: Option<[usize; 2]>,
    /// Final main-phase bracket width.
    pub bisection_gap: Option<f64>,
    pub max_rank_ratio: Option<f64>,
    pub solver_iterations: usize,
    pub feasible_candidates: Option<usize>,
    pub wall_time_s: f64,
    /// Linear beampattern on the loss grid.
    #[serde(skip)]
    pub beampattern: Option<Vec<f64>>,
}

impl ExperimentRow {
    fn failed(index: usize, status: RowStatus, message: String) -> Self {
        ExperimentRow {
            index,
            status,
            message,
            loss: None,
            relaxed_loss: None,
            reference_loss: None,
            sum_rate: None,
            outage: Vec::new(),
            outage_stderr: Vec::new(),
            t_star: None,
            max_rank_ratio: None,
            solver_iterations: 0,
            feasible_candidates: None,
            bisection_steps: None,
            bisection_gap: None,
            wall_time_s: 0.0,
            beampattern: None,
        }
    }
}

/// Sample mean and standard error `std / sqrt(count)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Some(Stat { mean, stderr, count: n })
    }
}

/// Aggregates over the rows with status `ok`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub rows: usize,
    pub ok_rows: usize,
    pub combined: Option<Stat>,
    pub l1: Option<Stat>,
    pub l2: Option<Stat>,
    pub relaxed_loss: Option<Stat>,
    pub reference_loss: Option<Stat>,
    pub sum_rate: Option<Stat>,
    /// Largest per-user empirical outage of each row.
    pub max_outage: Option<Stat>,
    pub t_star: Option<Stat>,
}

impl Aggregate {
    pub fn of(rows: &[ExperimentRow]) -> Self {
        let ok: Vec<&ExperimentRow> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
        let pick = |f: &dyn Fn(&ExperimentRow) -> Option<f64>| Stat::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
        Aggregate {
            rows: rows.len(),
            ok_rows: ok.len(),
            combined: pick(&|r| r.loss.map(|l| l.combined)),
            l1: pick(&|r| r.loss.map(|l| l.l1)),
            l2: pick(&|r| r.loss.map(|l| l.l2)),
            relaxed_loss: pick(&|r| r.relaxed_loss),
            reference_loss: pick(&|r| r.reference_loss),
            sum_rate: pick(&|r| r.sum_rate),
            max_outage: pick(&|r| r.outage.iter().copied().reduce(f64::max)),
            t_star: pick(&|r| r.t_star),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlPoint {
    pub entry_law: EntryLaw,
    pub n: usize,
    pub kl: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CltSeries {
    pub points: Vec<KlPoint>,
    /// KL of exactly Gaussian samples at the same trial and bin counts.
    pub noise_floor: f64,
    /// Histograms at the array size, one per entry law.
    pub histograms: Vec<(EntryLaw, Vec<HistogramBin>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ScenarioConfig,
    pub rows: Vec<ExperimentRow>,
    pub aggregate: Aggregate,
    /// Loss of the radar-only design (no users) for the same array and DOIs.
    pub radar_only_loss: Option<f64>,
    pub clt: Option<CltSeries>,
    pub wall_time_s: f64,
}

/// Seed of sub-stream `tag` of realization `index`.
pub fn derive_seed(seed: u64, index: u64, tag: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_OUTAGE: u64 = 1;
const TAG_BASELINE: u64 = 2;
const TAG_CLT: u64 = 3;

fn worker_count(cfg: &ScenarioConfig) -> usize {
    cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Evaluates `f(0..count)` on a bounded pool; results keep index order and a
/// panicking task yields `Err` for its index only.
fn parallel_map<T: Send>(count: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<std::result::Result<T, String>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<std::result::Result<T, String>>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, count.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = catch_unwind(AssertUnwindSafe(|| f(i))).map_err(|p| {
                    p.downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| p.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "panic".into())
                });
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every index is visited")).collect()
}

fn radar_config(sc: &Scenario, qos: Vec<UserQoS>) -> RadarCentricConfig {
    let s = &sc.config.schedule;
    let mut cfg = RadarCentricConfig::new(qos, sc.power_watts, sc.loss.clone());
    cfg.zeta_1 = s.zeta_1;
    cfg.mu = s.mu;
    cfg.rank_tol = s.rank_tol;
    cfg.max_outer_iters = s.max_outer_iters;
    cfg.refine_passes = s.refine_passes;
    cfg.restarts = s.restarts;
    cfg
}

/// Radar-only (no users) loss of the scenario's array and DOIs.
pub fn radar_only_loss(sc: &Scenario) -> Result<f64> {
    let n = sc.config.array.num_antennas;
    let channels = generate_rayleigh(0, n, sc.noise_watts, &mut stream_rng(0, 0))?;
    let cov = ErrorSampler::new(&ErrorModel::zero(n), n)?.covariance();
    Ok(solve_radar_centric(&channels, &cov, &radar_config(sc, Vec::new()))?.loss.combined)
}

fn run_realization(sc: &Scenario, sampler: &ErrorSampler, index: usize) -> Result<ExperimentRow> {
    let cfg = &sc.config;
    let n = cfg.array.num_antennas;
    let k = sc.qos.len();
    let channels = generate_rayleigh(k, n, sc.noise_watts, &mut stream_rng(cfg.seed, index as u64))?;
    let cov = sampler.covariance();
    let loss = RadarLoss::new(sc.loss.clone())?;
    let mut row = ExperimentRow::failed(index, RowStatus::Ok, String::new());

    let (w, qos) = match cfg.algorithm {
        Algorithm::RadarCentric | Algorithm::Baseline => {
            let res = solve_radar_centric(&channels, &cov, &radar_config(sc, sc.qos.clone()))?;
            row.relaxed_loss = Some(res.relaxed_loss);
            row.max_rank_ratio = Some(res.rank_ratios.iter().copied().fold(0.0, f64::max));
            row.solver_iterations = res.solver_iterations;
            if !res.rank_one {
                row.status = RowStatus::NotRankOne;
            }
            if cfg.algorithm == Algorithm::RadarCentric {
                row.loss = Some(res.loss);
                row.beampattern = Some(beampattern(&sc.loss.array, &res.covariance, &sc.loss.spec.grid)?);
                (res.beamformers, sc.qos.clone())
            } else {
                row.reference_loss = Some(res.loss.combined);
                let mut rng = stream_rng(derive_seed(cfg.seed, index as u64, TAG_BASELINE), 0);
                let base = randomization_baseline(
                    &res.relaxed,
                    &channels,
                    &cov,
                    &sc.qos,
                    &loss,
                    sc.power_watts,
                    cfg.baseline.row_norm,
                    cfg.baseline.candidates,
                    &mut rng,
                )?;
                row.feasible_candidates = Some(base.feasible);
                match (base.beamformers, base.loss) {
                    (Some(w), Some(l)) => {
                        row.loss = Some(l);
                        row.beampattern = Some(loss.pattern_of_beamformers(&w));
                        (w, sc.qos.clone())
                    }
                    _ => {
                        row.status = RowStatus::NoFeasibleCandidate;
                        row.message = format!("none of {} candidates met the outage constraints", cfg.baseline.candidates);
                        return Ok(row);
                    }
                }
            }
        }
        Algorithm::CommCentric => {
            let gammas = sc.qos.iter().map(|q| q.gamma).collect();
            let mut cc = CommCentricConfig::new(gammas, cfg.loss.c1, cfg.loss.c2, sc.power_watts, sc.loss.clone());
            cc.bisection_tol = cfg.schedule.bisection_tol;
            cc.rank_tol = cfg.schedule.rank_tol;
            let res = solve_comm_centric(&channels, &cov, &cc)?;
            row.t_star = Some(res.t_star);
            row.bisection_steps = Some([res.feasibility_steps, res.main_steps]);
            row.bisection_gap = Some(res.main_interval.1 - res.main_interval.0);
            row.max_rank_ratio = Some(res.rank_ratios.iter().copied().fold(0.0, f64::max));
            row.solver_iterations = res.solver_iterations;
            row.loss = Some(res.loss);
            row.beampattern = Some(loss.pattern_of_beamformers(&res.beamformers));
            if !res.rank_one {
                row.status = RowStatus::NotRankOne;
            }
            let qos = sc.qos.iter().map(|q| UserQoS::new(q.gamma, res.t_star)).collect::<Result<Vec<_>>>()?;
            (res.beamformers, qos)
        }
        Algorithm::CltValidate => unreachable!("handled by run_clt"),
    };

    if k > 0 {
        row.sum_rate = Some(sum_rate(&w, &channels, 1.0)?);
        for (u, q) in qos.iter().enumerate() {
            let seed = derive_seed(cfg.seed, index as u64, TAG_OUTAGE + 16 * u as u64);
            let est =
                empirical_outage(&w, &channels.c_hat[u], sampler, q, u, sc.noise_watts, cfg.trials.error_realizations, seed)?;
            row.outage.push(est.fraction);
            row.outage_stderr.push(est.std_error);
        }
    }
    Ok(row)
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

fn run_clt(sc: &Scenario) -> Result<CltSeries> {
    let cfg = &sc.config;
    let clt = &cfg.clt;
    let mut sizes = clt.sizes.clone();
    let hist_n = cfg.array.num_antennas;
    if !sizes.contains(&hist_n) {
        sizes.push(hist_n);
    }
    let tasks: Vec<(usize, EntryLaw, usize)> = clt
        .entry_laws
        .iter()
        .enumerate()
        .flat_map(|(li, &law)| sizes.iter().map(move |&n| (li, law, n)))
        .collect();
    let outcomes = parallel_map(tasks.len(), worker_count(cfg), |t| -> Result<(KlPoint, Vec<HistogramBin>)> {
        let (li, law, n) = tasks[t];
        let model = ErrorModel::Dependent { lambda_decay: cfg.error.lambda, entry_law: law, target_variance: None };
        let sampler = ErrorSampler::new(&model, n)?;
        let mut rng = stream_rng(derive_seed(cfg.seed, (li * 1000 + n) as u64, TAG_CLT), 0);
        let b = random_hermitian(n, &mut rng);
        let rep = clt_validate(&sampler, &b, clt.trials, clt.bins, &mut rng)?;
        Ok((KlPoint { entry_law: law, n, kl: rep.kl_divergence }, rep.histogram))
    });
    let mut points = Vec::new();
    let mut histograms = Vec::new();
    for (t, out) in outcomes.into_iter().enumerate() {
        let (point, hist) = out.map_err(DfrcError::Validation)??;
        if point.n == hist_n {
            histograms.push((point.entry_law, hist));
        }
        if clt.sizes.contains(&point.n) {
            points.push(point);
        }
        debug_assert_eq!(tasks[t].2, point.n);
    }
    let noise_floor = gaussian_self_kl(clt.trials, clt.bins, &mut stream_rng(derive_seed(cfg.seed, u64::MAX, TAG_CLT), 0))?;
    Ok(CltSeries { points, noise_floor, histograms })
}

/// Runs every channel realization of the scenario. Configuration errors are
/// returned; failures of individual realizations are recorded in their rows.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let sc = config.resolve()?;
    if config.algorithm == Algorithm::CltValidate {
        let clt = run_clt(&sc)?;
        return Ok(ExperimentResult {
            config: config.clone(),
            rows: Vec::new(),
            aggregate: Aggregate::of(&[]),
            radar_only_loss: None,
            clt: Some(clt),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    let sampler = ErrorSampler::new(&sc.error_model, config.array.num_antennas)?;
    let outcomes = parallel_map(config.trials.channel_realizations, worker_count(config), |i| {
        let t0 = Instant::now();
        let mut row = match run_realization(&sc, &sampler, i) {
            Ok(row) => row,
            Err(DfrcError::Infeasible(msg)) => ExperimentRow::failed(i, RowStatus::Infeasible, msg),
            Err(e) => ExperimentRow::failed(i, RowStatus::Failed, e.to_string()),
        };
        row.wall_time_s = t0.elapsed().as_secs_f64();
        row
    });
    let rows: Vec<ExperimentRow> = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, out)| out.unwrap_or_else(|msg| ExperimentRow::failed(i, RowStatus::Failed, format!("panic: {msg}"))))
        .collect();
    let radar_only = match config.algorithm {
        Algorithm::RadarCentric | Algorithm::Baseline => Some(radar_only_loss(&sc)?),
        _ => None,
    };
    Ok(ExperimentResult {
        config: config.clone(),
        aggregate: Aggregate::of(&rows),
        rows,
        radar_only_loss: radar_only,
        clt: None,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ExperimentResult {
    pub fn num_users(&self) -> usize {
        self.config.users.count
    }

    /// Per-realization rows. Wall times are left out so that reruns are
    /// byte-identical; see [`ExperimentResult::write_timing_csv`].
    pub fn write_rows_csv(&self, mut w: impl Write) -> Result<()> {
        let k = self.num_users();
        let mut header = String::from(
            "index,status,l1,l2,combined,alpha,relaxed_loss,reference_loss,sum_rate,t_star,feasibility_steps,main_steps,bisection_gap,max_rank_ratio,solver_iterations,feasible_candidates",
        );
        for u in 0..k {
            header.push_str(&format!(",outage_{u},outage_stderr_{u}"));
        }
        header.push_str(",message");
        writeln!(w, "{header}")?;
        for r in &self.rows {
            let mut line = format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.index,
                r.status.as_str(),
                opt(r.loss.map(|l| l.l1)),
                opt(r.loss.map(|l| l.l2)),
                opt(r.loss.map(|l| l.combined)),
                opt(r.loss.map(|l| l.alpha)),
                opt(r.relaxed_loss),
                opt(r.reference_loss),
                opt(r.sum_rate),
                opt(r.t_star),
                r.bisection_steps.map(|s| s[0].to_string()).unwrap_or_default(),
                r.bisection_steps.map(|s| s[1].to_string()).unwrap_or_default(),
                opt(r.bisection_gap),
                opt(r.max_rank_ratio),
                r.solver_iterations,
                r.feasible_candidates.map(|c| c.to_string()).unwrap_or_default(),
            );
            for u in 0..k {
                line.push_str(&format!(",{},{}", opt(r.outage.get(u).copied()), opt(r.outage_stderr.get(u).copied())));
            }
            line.push(',');
            line.push_str(&csv_text(&r.message));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn write_timing_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "index,wall_time_s")?;
        for r in &self.rows {
            writeln!(w, "{},{}", r.index, r.wall_time_s)?;
        }
        Ok(())
    }

    /// Aggregates and the radar-only reference as JSON (no timing).
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            algorithm: &'a str,
            aggregate: &'a Aggregate,
            radar_only_loss: Option<f64>,
            clt: Option<&'a CltSeries>,
        }
        let s = Summary {
            algorithm: self.config.algorithm.as_str(),
            aggregate: &self.aggregate,
            radar_only_loss: self.radar_only_loss,
            clt: self.clt.as_ref(),
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "gamma_db")]
    GammaDb,
    #[serde(rename = "p_out")]
    POut,
    /// Number of users.
    #[serde(rename = "K")]
    Users,
    /// Number of DOIs.
    #[serde(rename = "M")]
    Dois,
    #[serde(rename = "sigma_e2")]
    SigmaE2,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::GammaDb => "gamma_db",
            SweepAxis::POut => "p_out",
            SweepAxis::Users => "K",
            SweepAxis::Dois => "M",
            SweepAxis::SigmaE2 => "sigma_e2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma_db" => SweepAxis::GammaDb,
            "p_out" => SweepAxis::POut,
            "K" | "k" => SweepAxis::Users,
            "M" | "m" => SweepAxis::Dois,
            "sigma_e2" => SweepAxis::SigmaE2,
            _ => return Err(DfrcError::Config(format!("unknown sweep axis `{s}`"))),
        })
    }

    /// `config` with this axis set to `value`. DOI counts are laid out
    /// symmetrically about broadside with the spacing of the first two
    /// configured DOIs (30 degrees when fewer are configured).
    pub fn apply(self, config: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = config.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(DfrcError::Config(format!("{} needs a nonnegative integer, got {v}", self.as_str())))
            }
        };
        match self {
            SweepAxis::GammaDb => c.users.gamma_db = vec![value],
            SweepAxis::POut => c.users.p_out = vec![value],
            SweepAxis::Users => c.users.count = count(value)?,
            SweepAxis::SigmaE2 => c.error.sigma_e2 = Some(value),
            SweepAxis::Dois => {
                let m = count(value)?;
                if m == 0 {
                    return Err(DfrcError::Config("at least one DOI is required".into()));
                }
                let a = &config.dois.angles_deg;
                let step = if a.len() >= 2 { (a[1] - a[0]).abs() } else { 30.0 };
                let mid = (m as f64 - 1.0) / 2.0;
                c.dois.angles_deg = (0..m).map(|i| (i as f64 - mid) * step).collect();
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub x: f64,
    /// The experiment at this value, or why it could not run.
    pub result: std::result::Result<ExperimentResult, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// Quantity plotted against the swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Combined,
    /// Combined loss minus the radar-only loss at the same point.
    ExcessOverRadarOnly,
    SumRate,
    TStar,
    MaxOutage,
}

impl SweepMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMetric::Combined => "combined_loss",
            SweepMetric::ExcessOverRadarOnly => "excess_loss",
            SweepMetric::SumRate => "sum_rate",
            SweepMetric::TStar => "t_star",
            SweepMetric::MaxOutage => "max_outage",
        }
    }

    pub const ALL: [SweepMetric; 5] =
        [SweepMetric::Combined, SweepMetric::ExcessOverRadarOnly, SweepMetric::SumRate, SweepMetric::TStar, SweepMetric::MaxOutage];
}

impl SweepTable {
    /// `(x, mean, stderr)` for every point where the metric is available.
    pub fn curve(&self, metric: SweepMetric) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let r = p.result.as_ref().ok()?;
                let a = &r.aggregate;
                let s = match metric {
                    SweepMetric::Combined => a.combined?,
                    SweepMetric::ExcessOverRadarOnly => {
                        let c = a.combined?;
                        Stat { mean: c.mean - r.radar_only_loss?, ..c }
                    }
                    SweepMetric::SumRate => a.sum_rate?,
                    SweepMetric::TStar => a.t_star?,
                    SweepMetric::MaxOutage => a.max_outage?,
                };
                Some((p.x, s.mean, s.stderr))
            })
            .collect()
    }
}

/// One experiment per axis value; a value that fails to run is recorded and
/// the sweep continues.
pub fn sweep(config: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(DfrcError::Config("a sweep needs at least one value".into()));
    }
    if config.algorithm == Algorithm::CltValidate {
        return Err(DfrcError::Config("CLT validation has its own size sweep".into()));
    }
    let points = values
        .iter()
        .map(|&x| SweepPoint { x, result: axis.apply(config, x).and_then(|c| run_scenario(&c)).map_err(|e| e.to_string()) })
        .collect();
    Ok(SweepTable { axis, points })
}
