use super::{hermitian_eigen, outage_margins, ALPHA_MIN};
use crate::channel::{ChannelSet, ErrorCovariance};
use crate::outage::UserQoS;
use crate::radar_loss::{LossBreakdown, RadarLoss};
use crate::{DfrcError, Result};
use dfrc_conic::hermitian::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// How a candidate's antenna rows are rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowNormalization {
    /// Squared row norm equals `P_T / N`, meeting the per-antenna power constraint.
    #[default]
    SquaredNorm,
    /// Row norm equals `P_T / N`.
    Norm,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    /// Best feasible candidate, if any.
    pub beamformers: Option<Vec<DVector<C64>>>,
    pub loss: Option<LossBreakdown>,
    pub candidates: usize,
    pub feasible: usize,
}

/// `W^{1/2}` of a Hermitian PSD matrix, negative eigenvalues clipped.
fn psd_sqrt(w: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(w);
    let n = w.nrows();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (l, v) in vals.iter().zip(&vecs) {
        if *l > 0.0 {
            out += v * v.adjoint() * C64::new(l.sqrt(), 0.0);
        }
    }
    out
}

/// Gaussian randomization around relaxed blocks: draws `w_k = W_k^{1/2} z` with
/// `z ~ CN(0, I)`, rescales antenna rows, keeps candidates meeting every
/// outage cone and returns the one with the smallest combined loss.
#[allow(clippy::too_many_arguments)]
pub fn randomization_baseline(
    relaxed: &[DMatrix<C64>],
    channels: &ChannelSet,
    cov: &ErrorCovariance,
    qos: &[UserQoS],
    loss: &RadarLoss,
    power_budget: f64,
    normalization: RowNormalization,
    num_candidates: usize,
    rng: &mut impl Rng,
) -> Result<BaselineResult> {
    let users = relaxed.len();
    if users == 0 || qos.len() != users || channels.num_users() != users {
        return Err(DfrcError::Domain("one relaxed block, QoS entry and channel per user is required".into()));
    }
    let n = loss.num_antennas();
    if relaxed.iter().any(|w| w.nrows() != n) {
        return Err(DfrcError::Domain("relaxed block size does not match the array".into()));
    }
    let target = power_budget / n as f64;
    let row_target = match normalization {
        RowNormalization::SquaredNorm => target,
        RowNormalization::Norm => target * target,
    };
    let roots: Vec<DMatrix<C64>> = relaxed.iter().map(psd_sqrt).collect();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut best: Option<(Vec<DVector<C64>>, LossBreakdown)> = None;
    let mut feasible = 0;
    'draw: for _ in 0..num_candidates {
        let mut w: Vec<DVector<C64>> = roots
            .iter()
            .map(|r| {
                let z = DVector::from_fn(n, |_, _| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C64::new(re * scale, im * scale)
                });
                r * z
            })
            .collect();
        for i in 0..n {
            let row: f64 = w.iter().map(|v| v[i].norm_sqr()).sum();
            if !(row > 0.0) {
                continue 'draw;
            }
            let s = (row_target / row).sqrt();
            for v in w.iter_mut() {
                v[i] *= s;
            }
        }
        if outage_margins(&w, channels, cov, qos)?.iter().any(|&m| m < 0.0) {
            continue;
        }
        feasible += 1;
        let l = loss.loss_of_beamformers(&w, ALPHA_MIN);
        if best.as_ref().is_none_or(|(_, b)| l.combined < b.combined) {
            best = Some((w, l));
        }
    }
    let (beamformers, loss) = match best {
        Some((w, l)) => (Some(w), Some(l)),
        None => (None, None),
    };
    Ok(BaselineResult { beamformers, loss, candidates: num_candidates, feasible })
}
