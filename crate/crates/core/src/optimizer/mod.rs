//! Radar-centric penalty design, communication-centric bisection design, the
//! Gaussian randomization baseline, and rank-one extraction.

mod baseline;
mod comm_centric;
mod radar_centric;

pub use baseline::{randomization_baseline, BaselineResult, RowNormalization};
pub use comm_centric::{solve_comm_centric, CommCentricConfig, CommCentricResult};
pub use radar_centric::{solve_radar_centric, RadarCentricConfig, RadarCentricResult};

use crate::channel::{ChannelSet, ErrorCovariance};
use crate::outage::{build_b, soc_margin, UserQoS};
use crate::radar_loss::LossLayout;
use crate::{DfrcError, Result};
use dfrc_conic::hermitian::{hmat, hvec, hvec_index, hvec_len, C64};
use dfrc_conic::{Affine, Cone, ProblemBuilder, SolveReport, VariableLayout};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use std::io::Write;
use std::ops::Range;

/// Lower bound on the pattern scale `alpha`.
pub const ALPHA_MIN: f64 = 1e-6;

/// Solver status usable as an iterate: optimal, or stopped at the iteration
/// cap with the primal residual below `accept`.
pub(crate) fn usable(rep: &SolveReport, accept: f64) -> bool {
    rep.is_optimal() || (rep.status == dfrc_conic::SolveStatus::MaxIterations && rep.primal_residual <= accept)
}

/// Eigenvalues (descending) and matching unit eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(w: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    let herm = (w + w.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (vals, vecs)
}

/// Largest-magnitude entry made real and positive.
fn fix_phase(v: &mut DVector<C64>) {
    if let Some(big) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
        if big.norm() > 0.0 {
            let rot = big.conj() / big.norm();
            v.apply(|z| *z *= rot);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    /// `sqrt(lambda_1) v_1`.
    pub w: DVector<C64>,
    /// `lambda_2 / lambda_1` (0 when there is only one eigenvalue).
    pub ratio: f64,
    pub lambda1: f64,
    /// Set when `lambda_1 <= 0`; `w` is then zero.
    pub degenerate: bool,
}

pub fn extract_rank1(w: &DMatrix<C64>) -> Rank1 {
    let n = w.nrows();
    let (vals, mut vecs) = hermitian_eigen(w);
    let l1 = vals.first().copied().unwrap_or(0.0);
    if !(l1 > 0.0) {
        return Rank1 { w: DVector::from_element(n, C64::new(0.0, 0.0)), ratio: 0.0, lambda1: l1, degenerate: true };
    }
    let ratio = vals.get(1).map_or(0.0, |l2| l2.max(0.0) / l1);
    let mut v = vecs.swap_remove(0);
    fix_phase(&mut v);
    Rank1 { w: v.map(|z| z * l1.sqrt()), ratio, lambda1: l1, degenerate: false }
}

pub fn rank_ratio(w: &DMatrix<C64>) -> f64 {
    let (vals, _) = hermitian_eigen(w);
    match (vals.first(), vals.get(1)) {
        (Some(&l1), Some(&l2)) if l1 > 0.0 => l2.max(0.0) / l1,
        _ => 0.0,
    }
}

/// `sum_k ||W_k||_* + f_k(W_k)` with `f_k` the first-order expansion of
/// `-||.||_2` at the anchor `W_k^j`.
pub fn penalty(w: &[DMatrix<C64>], anchors: &[DMatrix<C64>]) -> Result<f64> {
    if w.len() != anchors.len() {
        return Err(DfrcError::Domain("one anchor per beamformer is required".into()));
    }
    let mut total = 0.0;
    for (wk, ak) in w.iter().zip(anchors) {
        if wk.shape() != ak.shape() {
            return Err(DfrcError::Domain("anchor dimension mismatch".into()));
        }
        let (vals, _) = hermitian_eigen(wk);
        let nuclear: f64 = vals.iter().map(|l| l.abs()).sum();
        let (avals, avecs) = hermitian_eigen(ak);
        let spectral = avals.iter().map(|l| l.abs()).fold(0.0, f64::max);
        // top eigenvector of the anchor: the one whose eigenvalue has the largest magnitude
        let top = avals.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, _)| i).unwrap_or(0);
        let v = &avecs[top];
        let sign = avals[top].signum();
        let diff = wk - ak;
        let inner = v.dotc(&(&diff * v)).re * sign;
        total += nuclear - spectral - inner;
    }
    Ok(total)
}

/// Linear cost `hvec(I - v v^H)` whose inner product with `hvec(W)` is the
/// penalty term of a PSD `W` anchored at top eigenvector `v`.
pub(crate) fn penalty_gradient(anchor: &DMatrix<C64>) -> DVector<f64> {
    let n = anchor.nrows();
    let (_, vecs) = hermitian_eigen(anchor);
    let v = &vecs[0];
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }) - v * v.adjoint();
    hvec(&m)
}

/// Rescales rows of the `N x K` beamforming matrix so that every antenna
/// radiates `target`.
pub fn equalize_antenna_power(w: &mut [DVector<C64>], target: f64) -> Result<()> {
    let Some(n) = w.first().map(|v| v.len()) else { return Ok(()) };
    for i in 0..n {
        let row: f64 = w.iter().map(|v| v[i].norm_sqr()).sum();
        if !(row > 0.0) {
            return Err(DfrcError::Degenerate(format!("antenna {i} carries no power")));
        }
        let s = (target / row).sqrt();
        for v in w.iter_mut() {
            v[i] *= s;
        }
    }
    Ok(())
}

/// Per-antenna power `[sum_k w_k w_k^H]_{nn}`.
pub fn antenna_powers(w: &[DVector<C64>]) -> Vec<f64> {
    let n = w.first().map_or(0, |v| v.len());
    (0..n).map(|i| w.iter().map(|v| v[i].norm_sqr()).sum()).collect()
}

/// Cone margins `epsilon_k (Tr[B_k C_k] - sigma2) - sd_k` of extracted beamformers.
pub fn outage_margins(w: &[DVector<C64>], channels: &ChannelSet, cov: &ErrorCovariance, qos: &[UserQoS]) -> Result<Vec<f64>> {
    let lifted: Vec<DMatrix<C64>> = w.iter().map(|v| v * v.adjoint()).collect();
    (0..lifted.len())
        .map(|k| {
            let b = build_b(&lifted, k, qos[k].gamma)?;
            Ok(soc_margin(&b, &channels.c_hat[k], channels.noise_power, qos[k].epsilon(), cov))
        })
        .collect()
}

/// One outer iteration of either design, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterTraceRow {
    pub phase: String,
    pub iteration: usize,
    /// `zeta_j` or the bisection level `t`.
    pub parameter: f64,
    pub loss: f64,
    pub max_rank_ratio: f64,
    pub status: String,
    pub solver_iterations: usize,
    pub primal_residual: f64,
}

pub fn write_outer_trace_csv(rows: &[OuterTraceRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "phase,iteration,parameter,loss,max_rank_ratio,status,solver_iterations,primal_residual")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.phase, r.iteration, r.parameter, r.loss, r.max_rank_ratio, r.status, r.solver_iterations, r.primal_residual
        )?;
    }
    Ok(())
}

/// Variable layout of the lifted designs: one `hvec` block per user (or a
/// single covariance block when there are no users) and the scale `alpha`.
#[derive(Debug, Clone)]
pub(crate) struct LiftedLayout {
    pub layout: VariableLayout,
    pub w_vars: Vec<Range<usize>>,
    pub alpha: usize,
    pub n: usize,
}

impl LiftedLayout {
    pub fn new(n: usize, users: usize) -> Self {
        let mut layout = VariableLayout::new();
        let d = hvec_len(n);
        let w_vars = if users == 0 {
            vec![layout.add_block("R", d)]
        } else {
            (0..users).map(|k| layout.add_block(format!("W{k}"), d)).collect()
        };
        let alpha = layout.add_block("alpha", 1).start;
        LiftedLayout { layout, w_vars, alpha, n }
    }

    pub fn loss_layout(&self) -> LossLayout {
        LossLayout { w_blocks: self.w_vars.clone(), alpha: self.alpha, num_vars: self.layout.len() }
    }

    /// Per-antenna power equalities, `alpha >= ALPHA_MIN` and the PSD blocks.
    /// Returns the constraint rows of each PSD block.
    pub fn add_common(&self, b: &mut ProblemBuilder, power: f64) -> Result<Vec<Range<usize>>> {
        let n = self.n;
        let target = power / n as f64;
        let rows = (0..n)
            .map(|i| {
                let idx = hvec_index(i, i);
                self.w_vars.iter().fold(Affine::constant(-target), |e, blk| e.term(blk.start + idx, 1.0))
            })
            .collect();
        b.add_constraint(Cone::Zero(n), rows)?;
        b.add_constraint(Cone::NonNeg(1), vec![Affine::var(self.alpha).plus(-ALPHA_MIN)])?;
        let mut psd_rows = Vec::with_capacity(self.w_vars.len());
        for blk in &self.w_vars {
            psd_rows.push(b.constrain_block(Cone::PsdHermitian(n), blk.clone())?);
        }
        Ok(psd_rows)
    }

    /// PSD-projected blocks from the cone slack of a report.
    pub fn read_blocks(&self, report: &SolveReport, psd_rows: &[Range<usize>]) -> Vec<DMatrix<C64>> {
        psd_rows.iter().map(|r| hmat(&report.s.as_slice()[r.clone()], self.n)).collect()
    }

    /// `hvec` of each block placed at its variables; zero elsewhere.
    pub fn stacked(&self, blocks: &[DMatrix<C64>]) -> DVector<f64> {
        let mut x = DVector::zeros(self.layout.len());
        for (blk, w) in self.w_vars.iter().zip(blocks) {
            x.rows_mut(blk.start, blk.len()).copy_from(&hvec(w));
        }
        x
    }

    pub fn linear_penalty(&self, anchors: &[DMatrix<C64>]) -> DVector<f64> {
        let mut q = DVector::zeros(self.layout.len());
        for (blk, a) in self.w_vars.iter().zip(anchors) {
            q.rows_mut(blk.start, blk.len()).copy_from(&penalty_gradient(a));
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_psd(n: usize, rank: usize, r: &mut ChaCha8Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(n, rank, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
        &g * g.adjoint()
    }

    #[test]
    fn rank1_of_outer_product() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let v = DVector::from_fn(4, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
        let out = extract_rank1(&(&v * v.adjoint()));
        assert!(out.ratio < 1e-12);
        // equal up to a unit phase
        let phase = v.dotc(&out.w);
        assert!((phase.norm() - v.norm_squared()).abs() < 1e-10);
        assert!((&out.w * out.w.adjoint() - &v * v.adjoint()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn rank1_of_diagonal() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![c(4.0), c(1.0)]));
        let out = extract_rank1(&w);
        assert!((out.w[0] - c(2.0)).norm() < 1e-12);
        assert!(out.w[1].norm() < 1e-12);
        assert!((out.ratio - 0.25).abs() < 1e-12);
        assert!((out.w.norm_squared() - out.lambda1).abs() < 1e-12);
    }

    #[test]
    fn rank1_error_bounded_by_ratio() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let w = random_psd(5, 5, &mut r);
            let out = extract_rank1(&w);
            let err = (&out.w * out.w.adjoint() - &w).norm() / w.norm();
            assert!(err <= (4.0f64).sqrt() * out.ratio + 1e-12);
            // phase convention: largest-magnitude entry is real positive
            let big = out.w.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(big.im.abs() < 1e-12 && big.re > 0.0);
        }
    }

    #[test]
    fn rank1_of_zero_is_flagged() {
        let out = extract_rank1(&DMatrix::from_element(3, 3, c(0.0)));
        assert!(out.degenerate);
        assert_eq!(out.w.norm(), 0.0);
    }

    #[test]
    fn penalty_cases() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let w1 = random_psd(3, 1, &mut r);
        assert!(penalty(std::slice::from_ref(&w1), std::slice::from_ref(&w1)).unwrap().abs() < 1e-12);
        let w = random_psd(3, 3, &mut r);
        let (vals, _) = hermitian_eigen(&w);
        let gap = vals.iter().sum::<f64>() - vals[0];
        assert!((penalty(std::slice::from_ref(&w), std::slice::from_ref(&w)).unwrap() - gap).abs() < 1e-12);
        assert!(gap >= 0.0);
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(1.0)]));
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(0.0)]));
        assert!((penalty(&[w], &[a]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_upper_bounds_rank_gap() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let w = random_psd(4, 4, &mut r);
            let a = random_psd(4, 2, &mut r);
            let (vals, _) = hermitian_eigen(&w);
            let gap = vals.iter().sum::<f64>() - vals[0];
            assert!(penalty(&[w], &[a]).unwrap() >= gap - 1e-12);
        }
    }

    #[test]
    fn linear_penalty_matches_penalty_for_psd() {
        // for PSD W the penalty is Tr[(I - v v^H) W]
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let w = random_psd(3, 3, &mut r);
        let a = random_psd(3, 2, &mut r);
        let lin = penalty_gradient(&a).dot(&hvec(&w));
        assert!((lin - penalty(&[w], &[a]).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn equalized_rows() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let mut w: Vec<DVector<C64>> =
            (0..3).map(|_| DVector::from_fn(5, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))).collect();
        equalize_antenna_power(&mut w, 0.1).unwrap();
        for p in antenna_powers(&w) {
            assert!((p - 0.1).abs() < 1e-12 * 0.1);
        }
        let mut z = vec![DVector::from_element(2, c(0.0))];
        assert!(equalize_antenna_power(&mut z, 1.0).is_err());
    }
}
