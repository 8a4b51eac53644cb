//! SINR, the trace form of the outage event, its Gaussian (second-order cone)
//! deterministic form, and Monte Carlo outage and sum-rate evaluation.

use crate::channel::{ChannelSet, ErrorCovariance, ErrorSampler};
use crate::{stream_rng, DfrcError, Result};
use dfrc_conic::hermitian::{hvec, hvec_len, C64};
use dfrc_conic::Affine;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf_inv;
use std::ops::Range;

/// Trials drawn from one random stream in [`empirical_outage`].
const TRIALS_PER_STREAM: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserQoS {
    /// Linear SINR threshold.
    pub gamma: f64,
    pub p_out: f64,
}

impl UserQoS {
    pub fn new(gamma: f64, p_out: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(DfrcError::Domain("SINR threshold must be positive".into()));
        }
        epsilon_of(p_out)?;
        Ok(UserQoS { gamma, p_out })
    }

    pub fn from_db(gamma_db: f64, p_out: f64) -> Result<Self> {
        Self::new(crate::db_to_linear(gamma_db), p_out)
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_of(self.p_out).expect("validated at construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamformerSet {
    Lifted(Vec<DMatrix<C64>>),
    Extracted(Vec<DVector<C64>>),
}

impl BeamformerSet {
    pub fn len(&self) -> usize {
        match self {
            BeamformerSet::Lifted(w) => w.len(),
            BeamformerSet::Extracted(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lifted(&self) -> Vec<DMatrix<C64>> {
        match self {
            BeamformerSet::Lifted(w) => w.clone(),
            BeamformerSet::Extracted(w) => w.iter().map(|v| v * v.adjoint()).collect(),
        }
    }

    /// `sum_k W_k`.
    pub fn covariance(&self, n: usize) -> DMatrix<C64> {
        self.lifted().into_iter().fold(DMatrix::from_element(n, n, C64::new(0.0, 0.0)), |acc, w| acc + w)
    }
}

/// `w_k^H C w_k / (sum_{j != k} w_j^H C w_j + sigma2)`.
pub fn sinr_from_covariance(c: &DMatrix<C64>, w: &[DVector<C64>], sigma2: f64, k: usize) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(DfrcError::Domain("noise power must be positive".into()));
    }
    if k >= w.len() {
        return Err(DfrcError::Domain(format!("user {k} out of range")));
    }
    let gain = |v: &DVector<C64>| v.dotc(&(c * v)).re;
    let interference: f64 = w.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, v)| gain(v)).sum();
    Ok(gain(&w[k]) / (interference + sigma2))
}

/// `B_k = W_k / gamma_k - sum_{j != k} W_j`.
pub fn build_b(w: &[DMatrix<C64>], k: usize, gamma: f64) -> Result<DMatrix<C64>> {
    if !(gamma > 0.0) {
        return Err(DfrcError::Domain("SINR threshold must be positive".into()));
    }
    if k >= w.len() {
        return Err(DfrcError::Domain(format!("user {k} out of range")));
    }
    let n = w[k].nrows();
    let mut b = w[k].map(|z| z / gamma);
    for (j, wj) in w.iter().enumerate() {
        if j != k {
            if wj.nrows() != n || wj.ncols() != n {
                return Err(DfrcError::Domain("beamformer matrices differ in size".into()));
            }
            b -= wj;
        }
    }
    Ok(b)
}

/// `1 / (sqrt(2) erfinv(1 - 2p))`: the Gaussian outage `p` is met when the
/// mean margin is at least `1/epsilon` standard deviations.
pub fn epsilon_of(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(DfrcError::Domain(format!("outage probability {p} outside (0, 0.5)")));
    }
    let e = 1.0 / (std::f64::consts::SQRT_2 * erf_inv(1.0 - 2.0 * p));
    if !e.is_finite() || e <= 0.0 {
        return Err(DfrcError::Domain(format!("outage probability {p} too close to 0.5")));
    }
    Ok(e)
}

/// `sum_ij |b_ij|^2 sigma_ij^2`, the variance of `Tr[B E]` for independent entries.
pub fn variance_independent(b: &DMatrix<C64>, sigma: &DMatrix<f64>) -> Result<f64> {
    if b.shape() != sigma.shape() {
        return Err(DfrcError::Domain("B and sigma differ in size".into()));
    }
    Ok(b.iter().zip(sigma.iter()).map(|(z, s)| z.norm_sqr() * s * s).sum())
}

/// `||Gamma~^H vec(B)||^2`.
pub fn variance_dependent(b: &DMatrix<C64>, gamma_factor: &DMatrix<C64>) -> Result<f64> {
    if gamma_factor.nrows() != b.nrows() * b.ncols() {
        return Err(DfrcError::Domain("factor is not conformable with vec(B)".into()));
    }
    let vb = DVector::from_column_slice(b.as_slice());
    Ok((gamma_factor.adjoint() * vb).norm_squared())
}

/// Gaussian-approximated `Pr[Tr[B (C_hat + E)] < sigma2]`.
pub fn gaussian_outage(b: &DMatrix<C64>, c_hat: &DMatrix<C64>, sigma2: f64, cov: &ErrorCovariance) -> f64 {
    let margin = hvec(b).dot(&hvec(c_hat)) - sigma2;
    let sd = cov.variance(b).sqrt();
    if sd == 0.0 {
        return if margin >= 0.0 { 0.0 } else { 1.0 };
    }
    Normal::standard().cdf(-margin / sd)
}

/// `epsilon (Tr[B C_hat] - sigma2) - ||F' hvec(B)||`; nonnegative iff the
/// cone constraint holds.
pub fn soc_margin(b: &DMatrix<C64>, c_hat: &DMatrix<C64>, sigma2: f64, epsilon: f64, cov: &ErrorCovariance) -> f64 {
    epsilon * (hvec(b).dot(&hvec(c_hat)) - sigma2) - cov.variance(b).sqrt()
}

/// Rows of `(epsilon (Tr[B_k C_hat] - sigma2), F' hvec(B_k))` in the second-order
/// cone, with `hvec(W_j)` stored at `w_blocks[j]`.
pub fn soc_rows(
    w_blocks: &[Range<usize>],
    k: usize,
    gamma: f64,
    epsilon: f64,
    c_hat: &DMatrix<C64>,
    sigma2: f64,
    cov: &ErrorCovariance,
) -> Vec<Affine> {
    let coef = |j: usize| if j == k { 1.0 / gamma } else { -1.0 };
    let ch: Vec<f64> = hvec(c_hat).iter().copied().collect();
    let mut head = Affine::constant(-epsilon * sigma2);
    for (j, blk) in w_blocks.iter().enumerate() {
        head = head.add_dense(blk.start, &ch, epsilon * coef(j));
    }
    let mut rows = vec![head];
    for col in cov.factor.column_iter() {
        let f: Vec<f64> = col.iter().copied().collect();
        let mut e = Affine::constant(0.0);
        for (j, blk) in w_blocks.iter().enumerate() {
            e = e.add_dense(blk.start, &f, coef(j));
        }
        rows.push(e);
    }
    rows
}

/// `[[s I, F' b], [b' F, s]]` with `s = epsilon (Tr[B C_hat] - sigma2)`;
/// positive semidefinite iff the cone constraint holds.
pub fn lmi_block(b: &DMatrix<C64>, c_hat: &DMatrix<C64>, sigma2: f64, epsilon: f64, cov: &ErrorCovariance) -> DMatrix<f64> {
    let s = epsilon * (hvec(b).dot(&hvec(c_hat)) - sigma2);
    let v = cov.factor.transpose() * hvec(b);
    let r = v.len();
    let mut d = DMatrix::identity(r + 1, r + 1) * s;
    for i in 0..r {
        d[(i, r)] = v[i];
        d[(r, i)] = v[i];
    }
    d
}

/// Scale applied to every beamformer (lifted scale `s`) that puts the cone
/// constraint of user `k` exactly at equality, if one exists.
pub fn boundary_scale(b: &DMatrix<C64>, c_hat: &DMatrix<C64>, sigma2: f64, epsilon: f64, cov: &ErrorCovariance) -> Option<f64> {
    // s (a - sd / epsilon) = sigma2
    let a = hvec(b).dot(&hvec(c_hat));
    let slope = a - cov.variance(b).sqrt() / epsilon;
    (slope > 0.0).then(|| sigma2 / slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub fraction: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Fraction of sampled errors with `Tr[B_k (C_hat + E)] < sigma2`, i.e. SINR
/// below target. Trials are split over independent streams of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_outage(
    w: &[DVector<C64>],
    c_hat: &DMatrix<C64>,
    sampler: &ErrorSampler,
    qos: &UserQoS,
    k: usize,
    sigma2: f64,
    trials: usize,
    seed: u64,
) -> Result<OutageEstimate> {
    if trials < 100 {
        return Err(DfrcError::Validation(format!("{trials} trials are too few for an outage estimate")));
    }
    let lifted: Vec<DMatrix<C64>> = w.iter().map(|v| v * v.adjoint()).collect();
    let b = build_b(&lifted, k, qos.gamma)?;
    if b.nrows() != sampler.size() {
        return Err(DfrcError::Domain("error model size does not match the array".into()));
    }
    let hb = hvec(&b);
    let mean = hb.dot(&hvec(c_hat)) - sigma2;
    let mut outages = 0usize;
    let mut done = 0usize;
    let mut stream = 0u64;
    while done < trials {
        let chunk = TRIALS_PER_STREAM.min(trials - done);
        let mut rng = stream_rng(seed, stream);
        for _ in 0..chunk {
            let e = sampler.sample(&mut rng);
            if mean + hb.dot(&hvec(&e)) < 0.0 {
                outages += 1;
            }
        }
        done += chunk;
        stream += 1;
    }
    let f = outages as f64 / trials as f64;
    Ok(OutageEstimate { fraction: f, std_error: (f * (1.0 - f) / trials as f64).sqrt(), trials })
}

/// `duty_ratio * sum_k log2(1 + SINR_k)` at the estimated covariances.
pub fn sum_rate(w: &[DVector<C64>], channels: &ChannelSet, duty_ratio: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..channels.num_users().min(w.len()) {
        total += (1.0 + sinr_from_covariance(&channels.c_hat[k], w, channels.noise_power, k)?.max(0.0)).log2();
    }
    Ok(duty_ratio * total)
}

/// Sum rate averaged over sampled covariances `C_hat + E`.
pub fn sum_rate_perturbed(
    w: &[DVector<C64>],
    channels: &ChannelSet,
    sampler: &ErrorSampler,
    duty_ratio: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if draws == 0 {
        return Err(DfrcError::Validation("need at least one draw".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut acc = 0.0;
    for _ in 0..draws {
        let mut perturbed = channels.clone();
        for c in perturbed.c_hat.iter_mut() {
            *c += sampler.sample(&mut rng);
        }
        acc += sum_rate(w, &perturbed, duty_ratio)?;
    }
    Ok(acc / draws as f64)
}

/// Number of `hvec` coordinates of one lifted beamformer.
pub fn lifted_dim(n: usize) -> usize {
    hvec_len(n)
}
