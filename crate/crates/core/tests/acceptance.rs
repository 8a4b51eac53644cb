//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with the
//! measured quantities; tolerances and budgets are the constants below.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use dfrc_conic::hermitian::{svec, svec_index, svec_len, C64};
use dfrc_conic::{project_psd, project_psd_hermitian, project_soc, solve, Affine, Cone, ConicProblem, ProblemBuilder, Settings};
use dfrc_conic::{SolveReport, SolveStatus, VariableLayout};
use dfrc_core::array::{AngleGrid, ArrayConfig, BeampatternSpec};
use dfrc_core::channel::{generate_rayleigh, trace_statistic, EntryLaw, ErrorModel, ErrorSampler};
use dfrc_core::harness::{
    run_scenario, sweep, Algorithm, ExperimentResult, RowStatus, ScenarioConfig, SweepAxis, SweepMetric, SweepTable,
};
use dfrc_core::optimizer::{
    antenna_powers, randomization_baseline, solve_comm_centric, solve_radar_centric, CommCentricConfig, RadarCentricConfig,
    RowNormalization,
};
use dfrc_core::outage::{boundary_scale, build_b, empirical_outage, epsilon_of, variance_dependent, variance_independent, UserQoS};
use dfrc_core::radar_loss::{RadarLoss, RadarLossConfig};
use dfrc_core::{db_to_linear, dbm_to_watts, stream_rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::time::{Duration, Instant};

/// Radar loss weight used by every radar-centric experiment here.
const DELTA: f64 = 0.0;
const SIGMA_E2: f64 = 0.005;
/// Standard errors allowed between a Monte-Carlo estimate and its formula.
const Z: f64 = 3.0;
const PEAK_TOL_DEG: f64 = 2.0;
/// Combined loss over radar-only loss allowed in the beampattern check.
const LOSS_RATIO_BOUND: f64 = 1.5;
const RANK_TOL: f64 = 1e-4;
const POWER_REL_TOL: f64 = 1e-6;
const OBJECTIVE_TOL: f64 = 1e-4;
const RESIDUAL_TOL: f64 = 1e-6;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed < budget;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    // Written past the test harness capture so passing criteria show up too.
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id} ({name}): {verdict} in {:.1} s (budget {} s){}\n{detail}",
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if within { "" } else { ", over budget" }
    );
    assert!(pass && within, "criterion {id} failed");
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + g.adjoint()).map(|z| z * 0.5)
}

/// Base radar-centric scenario: N = 10, DOIs at -30, 0 and 30 degrees,
/// 30 dBm transmit power, 10 dBm noise, p = 0.1, 10 channel realizations.
fn base(users: usize, gamma_db: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig { algorithm: Algorithm::RadarCentric, ..ScenarioConfig::default() };
    cfg.users.count = users;
    cfg.users.gamma_db = vec![gamma_db];
    cfg.users.p_out = vec![0.1];
    cfg.loss.delta = DELTA;
    cfg.error.sigma_e2 = Some(SIGMA_E2);
    cfg.trials.channel_realizations = 10;
    cfg.trials.error_realizations = 1000;
    cfg.seed = 2024;
    cfg
}

fn ok_rows(r: &ExperimentResult) -> impl Iterator<Item = &dfrc_core::harness::ExperimentRow> {
    r.rows.iter().filter(|row| row.status == RowStatus::Ok)
}

#[test]
fn c1_variance_formulas_match_monte_carlo() {
    const DRAWS: usize = 100_000;
    let start = Instant::now();
    let n = 10;
    let models = [
        ErrorModel::independent_uniform(n, SIGMA_E2),
        ErrorModel::Dependent { lambda_decay: 0.5, entry_law: EntryLaw::Uniform, target_variance: Some(SIGMA_E2) },
    ];
    let mut pass = true;
    let mut detail = String::new();
    let mut rng = stream_rng(11, 0);
    let bs: Vec<DMatrix<C64>> = (0..5).map(|_| random_hermitian(n, &mut rng)).collect();
    for (m, model) in models.iter().enumerate() {
        let sampler = ErrorSampler::new(model, n).unwrap();
        let gamma_factor = sampler.covariance().gamma_factor();
        for (i, b) in bs.iter().enumerate() {
            let formula = match model {
                ErrorModel::Independent { sigma } => variance_independent(b, sigma).unwrap(),
                ErrorModel::Dependent { .. } => variance_dependent(b, &gamma_factor).unwrap(),
            };
            let mut draws = stream_rng(12 + m as u64, i as u64);
            let x: Vec<f64> = (0..DRAWS).map(|_| trace_statistic(b, &sampler.sample(&mut draws)).unwrap()).collect();
            let mean = x.iter().sum::<f64>() / DRAWS as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
            let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / DRAWS as f64;
            let se = ((m4 - var * var) / DRAWS as f64).sqrt();
            let z = (var - formula) / se;
            pass &= z.abs() <= Z;
            detail.push_str(&format!("  {} B{i}: formula {formula:.6e}, MC {var:.6e}, z = {z:+.2}\n", model.label()));
        }
    }
    report(1, "variance formulas", pass, start.elapsed(), minutes(1), &detail);
}

#[test]
fn c2_outage_calibrated_at_cone_boundary() {
    const DRAWS: usize = 100_000;
    let start = Instant::now();
    let n = 10;
    let sigma2 = dbm_to_watts(10.0);
    let gamma = db_to_linear(10.0);
    let model = ErrorModel::independent_uniform(n, SIGMA_E2);
    let sampler = ErrorSampler::new(&model, n).unwrap();
    let cov = sampler.covariance();
    let channels = generate_rayleigh(2, n, sigma2, &mut stream_rng(21, 0)).unwrap();
    // matched filter to user 0, a weak random beam for user 1
    let mut rng = stream_rng(21, 1);
    let w0 = channels.h[0].clone();
    let w1 = DVector::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))) * C64::new(0.05, 0.0);
    let mut pass = true;
    let mut detail = String::new();
    for (i, p) in [0.05, 0.1, 0.2].into_iter().enumerate() {
        let qos = UserQoS::new(gamma, p).unwrap();
        let eps = epsilon_of(p).unwrap();
        let lifted: Vec<DMatrix<C64>> = [&w0, &w1].iter().map(|w| *w * w.adjoint()).collect();
        let b = build_b(&lifted, 0, gamma).unwrap();
        let s = boundary_scale(&b, &channels.c_hat[0], sigma2, eps, &cov).expect("boundary reachable");
        let w: Vec<DVector<C64>> = [&w0, &w1].iter().map(|v| *v * C64::new(s.sqrt(), 0.0)).collect();
        let est = empirical_outage(&w, &channels.c_hat[0], &sampler, &qos, 0, sigma2, DRAWS, 22 + i as u64).unwrap();
        let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
        let z = (est.fraction - p) / se;
        pass &= z.abs() <= Z;
        detail.push_str(&format!("  p = {p}: empirical {:.5}, z = {z:+.2}\n", est.fraction));
    }
    report(2, "chance-constraint calibration", pass, start.elapsed(), minutes(2), &detail);
}

/// Angles (degrees) of the `count` largest local maxima of a pattern.
fn top_peaks(pattern: &[f64], theta_deg: &[f64], count: usize) -> Vec<f64> {
    let mut peaks: Vec<(f64, f64)> = (0..pattern.len())
        .filter(|&i| {
            let left = i == 0 || pattern[i] >= pattern[i - 1];
            let right = i + 1 == pattern.len() || pattern[i] > pattern[i + 1];
            left && right
        })
        .map(|i| (pattern[i], theta_deg[i]))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut angles: Vec<f64> = peaks.into_iter().take(count).map(|(_, t)| t).collect();
    angles.sort_by(f64::total_cmp);
    angles
}

#[test]
fn c3_beampatterns_track_directions_of_interest() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = format!("  delta = {DELTA}, gamma = 10 dB, p = 0.1\n");
    for k in 1..=3 {
        let cfg = base(k, 10.0);
        let r = run_scenario(&cfg).unwrap();
        let theta: Vec<f64> = cfg.loss_config().unwrap().spec.grid.points().iter().map(|t| t.to_degrees()).collect();
        let dois = &cfg.dois.angles_deg;
        let radar_only = r.radar_only_loss.unwrap();
        let mut worst_offset: f64 = 0.0;
        let mut ok = 0;
        for row in ok_rows(&r) {
            ok += 1;
            let peaks = top_peaks(row.beampattern.as_ref().unwrap(), &theta, dois.len());
            for (p, d) in peaks.iter().zip(dois) {
                worst_offset = worst_offset.max((p - d).abs());
            }
            if peaks.len() < dois.len() {
                worst_offset = f64::INFINITY;
            }
        }
        let loss = r.aggregate.combined.map(|s| s.mean).unwrap_or(f64::NAN);
        let ratio = loss / radar_only;
        let rows_ok = ok == r.rows.len();
        pass &= rows_ok && worst_offset <= PEAK_TOL_DEG && ratio <= LOSS_RATIO_BOUND;
        detail.push_str(&format!(
            "  K = {k}: {ok}/{} rows ok, worst peak offset {worst_offset:.1} deg, loss {loss:.6} vs radar-only {radar_only:.6} (ratio {ratio:.4})\n",
            r.rows.len()
        ));
    }
    report(3, "beampattern reproduction", pass, start.elapsed(), minutes(10), &detail);
}

/// Counts violations of monotonicity in `direction` (+1 non-decreasing,
/// -1 non-increasing). Passes with no violation, or with one whose size is
/// within the larger standard error of the two points.
fn monotone(curve: &[(f64, f64, f64)], direction: f64) -> (bool, String) {
    let mut inversions = Vec::new();
    for w in curve.windows(2) {
        let step = direction * (w[1].1 - w[0].1);
        if step < 0.0 {
            inversions.push((-step, w[0].2.max(w[1].2)));
        }
    }
    let pass = match inversions.as_slice() {
        [] => true,
        [(size, se)] => size <= se,
        _ => false,
    };
    let points: Vec<String> = curve.iter().map(|(x, m, s)| format!("{x}: {m:.6} +/- {s:.6}")).collect();
    (pass, format!("[{}], inversions {:?}", points.join(", "), inversions))
}

fn sweep_check(cfg: &ScenarioConfig, axis: SweepAxis, values: &[f64], metric: SweepMetric, direction: f64) -> (bool, String) {
    let table: SweepTable = sweep(cfg, axis, values).unwrap();
    let complete = table.points.iter().all(|p| p.result.as_ref().map(|r| r.aggregate.ok_rows > 0).unwrap_or(false));
    let ok: Vec<String> = table
        .points
        .iter()
        .map(|p| match &p.result {
            Ok(r) => format!("{}/{}", r.aggregate.ok_rows, r.aggregate.rows),
            Err(e) => e.clone(),
        })
        .collect();
    let (pass, text) = monotone(&table.curve(metric), direction);
    (complete && pass, format!("{text}, rows ok {}", ok.join(" ")))
}

#[test]
fn c4_trend_suites() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = format!("  delta = {DELTA}, K = 2, p = 0.1 unless swept\n");
    let suites = [
        ("combined loss vs gamma_db", base(2, 5.0), SweepAxis::GammaDb, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0], SweepMetric::Combined, 1.0),
        ("combined loss vs p_out at 5 dB", base(2, 5.0), SweepAxis::POut, vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3], SweepMetric::Combined, -1.0),
        ("excess over radar-only vs M at 5 dB", base(2, 5.0), SweepAxis::Dois, vec![2.0, 3.0, 4.0], SweepMetric::ExcessOverRadarOnly, 1.0),
        ("combined loss vs sigma_e2 at 10 dB", base(2, 10.0), SweepAxis::SigmaE2, vec![0.001, 0.005, 0.02], SweepMetric::Combined, 1.0),
    ];
    for (name, cfg, axis, values, metric, direction) in suites {
        let t = Instant::now();
        let (ok, text) = sweep_check(&cfg, axis, &values, metric, direction);
        pass &= ok;
        detail.push_str(&format!("  {name}: {} in {:.0} s {text}\n", if ok { "ok" } else { "violated" }, t.elapsed().as_secs_f64()));
    }
    report(4, "trend suites", pass, start.elapsed(), minutes(30), &detail);
}

#[test]
fn c5_penalty_beats_randomization() {
    let start = Instant::now();
    let mut cfg = base(2, 5.0);
    cfg.algorithm = Algorithm::Baseline;
    cfg.baseline.candidates = 40_000;
    let r = run_scenario(&cfg).unwrap();
    let mut wins = 0;
    let mut detail = format!("  delta = {DELTA}, 40000 candidates\n");
    for row in &r.rows {
        let penalty = row.reference_loss;
        let best = row.loss.map(|l| l.combined);
        let win = match (row.status, penalty, best) {
            (RowStatus::Ok, Some(p), Some(b)) => p < b,
            (RowStatus::NoFeasibleCandidate, Some(_), _) => true,
            _ => false,
        };
        wins += win as usize;
        detail.push_str(&format!(
            "  realization {}: {} penalty {:?} best candidate {:?} feasible {:?}\n",
            row.index,
            row.status.as_str(),
            penalty,
            best,
            row.feasible_candidates
        ));
    }
    detail.push_str(&format!("  penalty wins {wins} of {}\n", r.rows.len()));
    report(5, "penalty vs randomization", wins >= 9 && r.rows.len() == 10, start.elapsed(), minutes(20), &detail);
}

#[test]
fn c6_comm_centric_outage_and_rate() {
    const T_MAX: f64 = 0.1;
    const MAX_STEPS: usize = 9;
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::from("  c1 = 0.3, c2 = 5, K = 2\n");
    for gamma_db in [5.0, 10.0] {
        let radar = run_scenario(&base(2, gamma_db)).unwrap();
        let mut cfg = base(2, gamma_db);
        cfg.algorithm = Algorithm::CommCentric;
        cfg.loss.c1 = 0.3;
        cfg.loss.c2 = 5.0;
        let comm = run_scenario(&cfg).unwrap();
        let tol = cfg.schedule.bisection_tol;
        for (rr, cr) in radar.rows.iter().zip(&comm.rows) {
            let steps_ok = cr.bisection_steps.is_some_and(|s| s[0] <= MAX_STEPS && s[1] <= MAX_STEPS);
            let gap_ok = cr.bisection_gap.is_some_and(|g| g < tol);
            let t_ok = rr.status != RowStatus::Ok || cr.t_star.is_some_and(|t| t <= T_MAX);
            pass &= cr.status == RowStatus::Ok && steps_ok && gap_ok && t_ok;
            detail.push_str(&format!(
                "  gamma {gamma_db} dB realization {}: comm {} t* {:?} steps {:?} rate {:?}; radar {} rate {:?}\n",
                cr.index,
                cr.status.as_str(),
                cr.t_star,
                cr.bisection_steps,
                cr.sum_rate,
                rr.status.as_str(),
                rr.sum_rate
            ));
        }
        let rate = |r: &ExperimentResult| r.aggregate.sum_rate.map(|s| s.mean).unwrap_or(f64::NAN);
        let (cm, rm) = (rate(&comm), rate(&radar));
        pass &= cm >= rm;
        detail.push_str(&format!("  gamma {gamma_db} dB mean sum rate: comm {cm:.4}, radar {rm:.4}\n"));
    }
    report(6, "communication-centric", pass, start.elapsed(), minutes(15), &detail);
}

#[test]
fn c7_trace_statistic_approaches_gaussian() {
    const FLOOR_FACTOR: f64 = 5.0;
    let start = Instant::now();
    let mut cfg = ScenarioConfig { algorithm: Algorithm::CltValidate, ..ScenarioConfig::default() };
    cfg.clt.sizes = vec![4, 10, 12];
    cfg.clt.trials = 100_000;
    cfg.clt.entry_laws = vec![EntryLaw::Uniform, EntryLaw::SumOfUniforms];
    cfg.seed = 7;
    let r = run_scenario(&cfg).unwrap();
    let clt = r.clt.as_ref().unwrap();
    let kl = |law: EntryLaw, n: usize| clt.points.iter().find(|p| p.entry_law == law && p.n == n).unwrap().kl;
    let mut pass = true;
    let mut detail = format!("  noise floor {:.3e}\n", clt.noise_floor);
    for law in &cfg.clt.entry_laws {
        let (k4, k10, k12) = (kl(*law, 4), kl(*law, 10), kl(*law, 12));
        let ok = k12 < k4 && k10 <= FLOOR_FACTOR * clt.noise_floor;
        pass &= ok;
        detail.push_str(&format!("  {}: KL(4) {k4:.3e}, KL(10) {k10:.3e}, KL(12) {k12:.3e}\n", law.as_str()));
    }
    report(7, "CLT validation", pass, start.elapsed(), minutes(5), &detail);
}

fn residuals(problem: &ConicProblem, rep: &SolveReport) -> (f64, f64) {
    let mut ax = vec![0.0; problem.num_rows()];
    problem.a.mul_vec(rep.x.as_slice(), &mut ax);
    let eq = (0..ax.len()).map(|i| (ax[i] + rep.s[i] - problem.b[i]).abs()).fold(0.0, f64::max);
    let mut cone = 0.0f64;
    for (c, r) in problem.cones.iter().zip(problem.cone_ranges()) {
        let s: Vec<f64> = rep.s.as_slice()[r].to_vec();
        let mut p = s.clone();
        c.project(&mut p).unwrap();
        cone = cone.max(s.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    (eq, cone)
}

#[test]
fn c8_solver_suite() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();

    // min Tr X s.t. diag X = 1, X psd: optimum 3
    let n = 3;
    let mut layout = VariableLayout::new();
    let x = layout.add_block("X", svec_len(n));
    let mut b = ProblemBuilder::new(layout);
    b.set_linear(svec(&DMatrix::identity(n, n)));
    b.add_constraint(Cone::Zero(n), (0..n).map(|i| Affine::var(svec_index(i, i)).plus(-1.0)).collect()).unwrap();
    b.constrain_block(Cone::PsdReal(n), x).unwrap();
    let sdp = b.build().unwrap();

    // min t s.t. ||(1, 1)|| <= t: optimum sqrt 2
    let mut layout = VariableLayout::new();
    layout.add_block("t", 1);
    let mut b = ProblemBuilder::new(layout);
    b.add_linear(0, 1.0);
    b.add_constraint(Cone::SecondOrder(3), vec![Affine::var(0), Affine::constant(1.0), Affine::constant(1.0)]).unwrap();
    let soc = b.build().unwrap();

    for (name, problem, optimum) in [("identity SDP", &sdp, 3.0), ("SOC minimal t", &soc, 2f64.sqrt())] {
        let rep = solve(problem, &Settings::default()).unwrap();
        let (eq, cone) = residuals(problem, &rep);
        let err = (rep.objective - optimum).abs();
        pass &= rep.status == SolveStatus::Optimal && err < OBJECTIVE_TOL && eq < RESIDUAL_TOL && cone < RESIDUAL_TOL;
        detail.push_str(&format!(
            "  {name}: {} objective error {err:.2e}, equality residual {eq:.2e}, cone residual {cone:.2e}\n",
            rep.status.as_str()
        ));
    }

    // 1 <= x <= 0
    let mut layout = VariableLayout::new();
    layout.add_block("x", 1);
    let mut b = ProblemBuilder::new(layout);
    b.add_constraint(Cone::NonNeg(2), vec![Affine::var(0).plus(-1.0), Affine::var(0).scaled(-1.0)]).unwrap();
    let rep = solve(&b.build().unwrap(), &Settings::default()).unwrap();
    pass &= rep.status == SolveStatus::InfeasibleSuspected;
    detail.push_str(&format!("  infeasible box: {} after {} iterations\n", rep.status.as_str(), rep.iterations));

    let mut rng = stream_rng(81, 0);
    let mut worst_idem: f64 = 0.0;
    let mut worst_expand: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let sym = |rng: &mut rand_chacha::ChaCha8Rng| {
            let g = DMatrix::<f64>::from_fn(5, 5, |_, _| rng.sample(StandardNormal));
            (&g + g.transpose()) * 0.5
        };
        let (a, c) = (sym(&mut rng), sym(&mut rng));
        let (pa, pc) = (project_psd(&a).unwrap(), project_psd(&c).unwrap());
        worst_idem = worst_idem.max((project_psd(&pa).unwrap() - &pa).norm());
        worst_expand = worst_expand.max((&pa - &pc).norm() - (&a - &c).norm());

        let (h, g) = (random_hermitian(4, &mut rng), random_hermitian(4, &mut rng));
        let (ph, pg) = (project_psd_hermitian(&h).unwrap(), project_psd_hermitian(&g).unwrap());
        worst_idem = worst_idem.max((project_psd_hermitian(&ph).unwrap() - &ph).norm());
        worst_expand = worst_expand.max((&ph - &pg).norm() - (&h - &g).norm());

        let u: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let v: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let stack = |(x, t): (Vec<f64>, f64)| std::iter::once(t).chain(x).collect::<Vec<f64>>();
        let pu = stack(project_soc(&u[1..], u[0]));
        let pv = stack(project_soc(&v[1..], v[0]));
        let puu = stack(project_soc(&pu[1..], pu[0]));
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        worst_idem = worst_idem.max(dist(&pu, &puu));
        worst_expand = worst_expand.max(dist(&pu, &pv) - dist(&u, &v));
    }
    pass &= worst_idem < 1e-9 && worst_expand < 1e-9;
    detail.push_str(&format!(
        "  projections on 1000 inputs: idempotence error {worst_idem:.2e}, expansion {worst_expand:.2e}\n"
    ));
    report(8, "solver suite", pass, start.elapsed(), minutes(1), &detail);
}

#[test]
fn c9_structural_invariants() {
    let start = Instant::now();
    let n = 10;
    let power = dbm_to_watts(30.0);
    let arr = ArrayConfig::half_wavelength(n, 5e9).unwrap();
    let dois = vec![(-30f64).to_radians(), 0.0, 30f64.to_radians()];
    let spec = BeampatternSpec::rectangular(AngleGrid::uniform(181).unwrap(), dois, 5f64.to_radians()).unwrap();
    let loss_cfg = |delta: f64| RadarLossConfig::new(delta, arr.clone(), spec.clone()).unwrap();
    let sampler = ErrorSampler::new(&ErrorModel::independent_uniform(n, SIGMA_E2), n).unwrap();
    let cov = sampler.covariance();
    let powers_ok = |w: &[DVector<C64>]| antenna_powers(w).iter().all(|p| (p - power / n as f64).abs() <= POWER_REL_TOL * power / n as f64);
    let mut pass = true;
    let mut detail = String::new();
    for seed in 0..3u64 {
        let channels = generate_rayleigh(2, n, dbm_to_watts(10.0), &mut stream_rng(90 + seed, 0)).unwrap();
        let qos = vec![UserQoS::from_db(5.0, 0.1).unwrap(); 2];
        for delta in [0.0, 1.0] {
            let cfg = RadarCentricConfig::new(qos.clone(), power, loss_cfg(delta));
            let res = solve_radar_centric(&channels, &cov, &cfg).unwrap();
            let ratio = res.rank_ratios.iter().copied().fold(0.0, f64::max);
            let ok = powers_ok(&res.beamformers) && ratio < RANK_TOL && res.relaxed_loss <= res.loss.combined + 1e-9;
            pass &= ok;
            detail.push_str(&format!(
                "  seed {seed} radar-centric delta {delta}: rank ratio {ratio:.1e}, relaxed {:.6} <= final {:.6}\n",
                res.relaxed_loss, res.loss.combined
            ));
            if delta == DELTA {
                let loss = RadarLoss::new(loss_cfg(delta)).unwrap();
                let base = randomization_baseline(
                    &res.relaxed,
                    &channels,
                    &cov,
                    &qos,
                    &loss,
                    power,
                    RowNormalization::SquaredNorm,
                    2000,
                    &mut stream_rng(95 + seed, 0),
                )
                .unwrap();
                if let (Some(w), Some(l)) = (&base.beamformers, base.loss) {
                    let ok = powers_ok(w) && res.relaxed_loss <= l.combined + 1e-9;
                    pass &= ok;
                    detail.push_str(&format!("  seed {seed} baseline: relaxed {:.6} <= best candidate {:.6}\n", res.relaxed_loss, l.combined));
                }
            }
        }
        let cc = CommCentricConfig::new(vec![db_to_linear(5.0); 2], 0.3, 5.0, power, loss_cfg(1.0));
        let res = solve_comm_centric(&channels, &cov, &cc).unwrap();
        let ratio = res.rank_ratios.iter().copied().fold(0.0, f64::max);
        pass &= powers_ok(&res.beamformers) && ratio < RANK_TOL;
        detail.push_str(&format!("  seed {seed} comm-centric: rank ratio {ratio:.1e}, t* {:.4}\n", res.t_star));
    }
    report(9, "structural invariants", pass, start.elapsed(), minutes(15), &detail);
}
