//! Beampattern-matching MSE, DOI cross-correlation, their weighted sum, and
//! the exact affine-residual (sum of squares) form used by the solver.

use crate::array::{checked_hermitian, quadratic_form, steering_vector, ArrayConfig, BeampatternSpec};
use crate::{DfrcError, Result};
use dfrc_conic::hermitian::{hvec, hvec_len, outer, C64};
use dfrc_conic::Affine;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarLossConfig {
    /// Weight of the cross-correlation term.
    pub delta: f64,
    pub array: ArrayConfig,
    pub spec: BeampatternSpec,
}

impl RadarLossConfig {
    pub fn new(delta: f64, array: ArrayConfig, spec: BeampatternSpec) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(DfrcError::Domain("cross-correlation weight must be nonnegative".into()));
        }
        spec.validate()?;
        array.validate()?;
        Ok(RadarLossConfig { delta, array, spec })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub combined: f64,
    pub alpha: f64,
}

/// Normalization of the pair sum; zero when there are no pairs.
pub fn pair_weight(num_dois: usize) -> f64 {
    if num_dois < 2 {
        0.0
    } else {
        2.0 / (num_dois * num_dois - num_dois) as f64
    }
}

/// Loss evaluator with steering vectors cached.
#[derive(Debug, Clone)]
pub struct RadarLoss {
    cfg: RadarLossConfig,
    grid_steering: Vec<DVector<C64>>,
    doi_steering: Vec<DVector<C64>>,
}

impl RadarLoss {
    pub fn new(cfg: RadarLossConfig) -> Result<Self> {
        let grid_steering = cfg
            .spec
            .grid
            .points()
            .iter()
            .map(|&t| steering_vector(&cfg.array, t))
            .collect::<Result<Vec<_>>>()?;
        let doi_steering = cfg.spec.dois.iter().map(|&t| steering_vector(&cfg.array, t)).collect::<Result<Vec<_>>>()?;
        Ok(RadarLoss { cfg, grid_steering, doi_steering })
    }

    pub fn config(&self) -> &RadarLossConfig {
        &self.cfg
    }

    pub fn num_antennas(&self) -> usize {
        self.cfg.array.num_antennas
    }

    fn check(&self, r: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let n = self.num_antennas();
        if r.nrows() != n || r.ncols() != n {
            return Err(DfrcError::Domain(format!("covariance is {}x{}, expected {n}x{n}", r.nrows(), r.ncols())));
        }
        checked_hermitian(r)
    }

    pub fn l1(&self, r: &DMatrix<C64>, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(DfrcError::Domain("scale alpha must be positive".into()));
        }
        let r = self.check(r)?;
        let desired = &self.cfg.spec.desired;
        let sum: f64 = self
            .grid_steering
            .iter()
            .zip(desired)
            .map(|(a, &phi)| (alpha * phi - quadratic_form(&r, a).re).powi(2))
            .sum();
        Ok(sum / desired.len() as f64)
    }

    pub fn l2(&self, r: &DMatrix<C64>) -> Result<f64> {
        let r = self.check(r)?;
        let m = self.doi_steering.len();
        let mut sum = 0.0;
        for i in 0..m {
            let ra = &r * &self.doi_steering[i];
            for j in i + 1..m {
                // a_i^H R a_j, conjugate-symmetric in (i, j)
                sum += self.doi_steering[j].dotc(&ra).norm_sqr();
            }
        }
        Ok(pair_weight(m) * sum)
    }

    pub fn combined(&self, r: &DMatrix<C64>, alpha: f64) -> Result<LossBreakdown> {
        let l1 = self.l1(r, alpha)?;
        let l2 = self.l2(r)?;
        Ok(LossBreakdown { l1, l2, combined: l1 + self.cfg.delta * l2, alpha })
    }

    /// Best `alpha` for a fixed `R` (closed-form least squares), floored at `alpha_min`.
    pub fn best_alpha(&self, r: &DMatrix<C64>, alpha_min: f64) -> Result<f64> {
        let r = self.check(r)?;
        let desired = &self.cfg.spec.desired;
        let (mut num, mut den) = (0.0, 0.0);
        for (a, &phi) in self.grid_steering.iter().zip(desired) {
            num += phi * quadratic_form(&r, a).re;
            den += phi * phi;
        }
        Ok(if den > 0.0 { (num / den).max(alpha_min) } else { alpha_min })
    }

    pub fn residual_map(&self) -> LossResidual {
        LossResidual::build(self)
    }

    /// Beampattern of `R = sum_k w_k w_k^H` on the grid.
    pub fn pattern_of_beamformers(&self, w: &[DVector<C64>]) -> Vec<f64> {
        let mut p = vec![0.0; self.grid_steering.len()];
        for wk in w {
            for (pl, a) in p.iter_mut().zip(&self.grid_steering) {
                *pl += a.dotc(wk).norm_sqr();
            }
        }
        p
    }

    /// Combined loss of `R = sum_k w_k w_k^H` at the best `alpha >= alpha_min`.
    pub fn loss_of_beamformers(&self, w: &[DVector<C64>], alpha_min: f64) -> LossBreakdown {
        let pattern = self.pattern_of_beamformers(w);
        let desired = &self.cfg.spec.desired;
        let (num, den) = pattern.iter().zip(desired).fold((0.0, 0.0), |(n, d), (p, f)| (n + f * p, d + f * f));
        let alpha = if den > 0.0 { (num / den).max(alpha_min) } else { alpha_min };
        let l1 = pattern.iter().zip(desired).map(|(p, f)| (alpha * f - p).powi(2)).sum::<f64>() / desired.len() as f64;
        let m = self.doi_steering.len();
        let proj: Vec<Vec<C64>> = self.doi_steering.iter().map(|a| w.iter().map(|wk| a.dotc(wk)).collect()).collect();
        let mut sum = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                // a_i^H R a_j = sum_k (a_i^H w_k)(w_k^H a_j)
                let z: C64 = proj[i].iter().zip(&proj[j]).map(|(u, v)| u * v.conj()).sum();
                sum += z.norm_sqr();
            }
        }
        let l2 = pair_weight(m) * sum;
        LossBreakdown { l1, l2, combined: l1 + self.cfg.delta * l2, alpha }
    }
}

pub fn l1_loss(array: &ArrayConfig, spec: &BeampatternSpec, r: &DMatrix<C64>, alpha: f64) -> Result<f64> {
    RadarLoss::new(RadarLossConfig { delta: 0.0, array: array.clone(), spec: spec.clone() })?.l1(r, alpha)
}

/// Cross-correlation loss over DOI pairs; zero for a single DOI.
pub fn l2_loss(array: &ArrayConfig, dois: &[f64], r: &DMatrix<C64>) -> Result<f64> {
    if dois.is_empty() {
        return Err(DfrcError::Domain("at least one direction of interest is required".into()));
    }
    let steer = dois.iter().map(|&t| steering_vector(array, t)).collect::<Result<Vec<_>>>()?;
    if r.nrows() != array.num_antennas || r.ncols() != array.num_antennas {
        return Err(DfrcError::Domain("covariance size does not match the array".into()));
    }
    let r = checked_hermitian(r)?;
    let mut sum = 0.0;
    for i in 0..steer.len() {
        for j in i + 1..steer.len() {
            sum += quadratic_form_pair(&r, &steer[i], &steer[j]).norm_sqr();
        }
    }
    Ok(pair_weight(steer.len()) * sum)
}

fn quadratic_form_pair(r: &DMatrix<C64>, ai: &DVector<C64>, aj: &DVector<C64>) -> C64 {
    ai.dotc(&(r * aj))
}

pub fn combined_loss(cfg: &RadarLossConfig, r: &DMatrix<C64>, alpha: f64) -> Result<LossBreakdown> {
    RadarLoss::new(cfg.clone())?.combined(r, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    Mse,
    Cross,
}

/// Where the loss variables live in a solver vector: `R = sum_k W_k` with each
/// `W_k` an `hvec` block, plus the scale `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLayout {
    pub w_blocks: Vec<Range<usize>>,
    pub alpha: usize,
    pub num_vars: usize,
}

/// Affine residuals `r_i = g_i' [hvec(R); alpha] + h_i` with weights `w_i`,
/// such that `sum_i w_i r_i^2` is the combined loss. Cross-correlation pairs
/// contribute separate real and imaginary rows.
#[derive(Debug, Clone)]
pub struct LossResidual {
    /// Coefficients on `hvec(R)`, one row per residual.
    pub coeff_r: DMatrix<f64>,
    pub coeff_alpha: DVector<f64>,
    pub constant: DVector<f64>,
    pub weights: DVector<f64>,
    pub kinds: Vec<ResidualKind>,
    pub dim: usize,
    num_grid: usize,
    num_dois: usize,
}

impl LossResidual {
    fn build(loss: &RadarLoss) -> Self {
        let n = loss.num_antennas();
        let dim = hvec_len(n);
        let cfg = &loss.cfg;
        let l = cfg.spec.desired.len();
        let m = loss.doi_steering.len();
        let pairs = m * m.saturating_sub(1) / 2;
        let rows = l + 2 * pairs;
        let mut coeff_r = DMatrix::zeros(rows, dim);
        let mut coeff_alpha = DVector::zeros(rows);
        let constant = DVector::zeros(rows);
        let mut weights = DVector::zeros(rows);
        let mut kinds = Vec::with_capacity(rows);
        for (i, (a, &phi)) in loss.grid_steering.iter().zip(&cfg.spec.desired).enumerate() {
            // alpha phi - <hvec(R), hvec(a a^H)>
            let g = hvec(&outer(a, a));
            coeff_r.row_mut(i).copy_from(&(-g).transpose());
            coeff_alpha[i] = phi;
            weights[i] = 1.0 / l as f64;
            kinds.push(ResidualKind::Mse);
        }
        let w2 = cfg.delta * pair_weight(m);
        let mut row = l;
        for i in 0..m {
            for j in i + 1..m {
                // a_i^H R a_j = Tr[R a_j a_i^H]
                let g = outer(&loss.doi_steering[j], &loss.doi_steering[i]);
                let re = hvec(&g);
                let im = hvec(&g.map(|z| z * C64::new(0.0, -1.0)));
                coeff_r.row_mut(row).copy_from(&re.transpose());
                coeff_r.row_mut(row + 1).copy_from(&im.transpose());
                weights[row] = w2;
                weights[row + 1] = w2;
                kinds.push(ResidualKind::Cross);
                kinds.push(ResidualKind::Cross);
                row += 2;
            }
        }
        LossResidual { coeff_r, coeff_alpha, constant, weights, kinds, dim, num_grid: l, num_dois: m }
    }

    pub fn num_rows(&self) -> usize {
        self.weights.len()
    }

    /// Unweighted residuals at `(hvec(R), alpha)`.
    pub fn eval(&self, r_hvec: &DVector<f64>, alpha: f64) -> DVector<f64> {
        &self.coeff_r * r_hvec + &self.coeff_alpha * alpha + &self.constant
    }

    pub fn weighted_sq_norm(&self, r_hvec: &DVector<f64>, alpha: f64) -> f64 {
        let r = self.eval(r_hvec, alpha);
        r.iter().zip(self.weights.iter()).map(|(v, w)| w * v * v).sum()
    }

    /// `(P, q, c)` with `1/2 x'Px + q'x + c` equal to the combined loss at the
    /// solver vector `x`.
    pub fn quadratic_objective(&self, layout: &LossLayout) -> (DMatrix<f64>, DVector<f64>, f64) {
        let d = self.dim;
        // g_i over z = [hvec(R); alpha]
        let mut g = DMatrix::zeros(self.num_rows(), d + 1);
        g.view_mut((0, 0), (self.num_rows(), d)).copy_from(&self.coeff_r);
        g.set_column(d, &self.coeff_alpha);
        let sw = self.weights.map(f64::sqrt);
        let gw = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * sw[i]);
        let hw = self.constant.component_mul(&sw);
        let q_small = gw.transpose() * &gw * 2.0;
        let l_small = gw.transpose() * &hw * 2.0;
        let c = hw.norm_squared();
        // expand z -> x: every W block maps onto hvec(R)
        let nv = layout.num_vars;
        let mut p = DMatrix::zeros(nv, nv);
        let mut q = DVector::zeros(nv);
        let index = |k: usize| -> Vec<usize> {
            let mut v = Vec::new();
            for b in &layout.w_blocks {
                v.push(b.start + k);
            }
            v
        };
        for a in 0..=d {
            let xs_a = if a < d { index(a) } else { vec![layout.alpha] };
            for &xa in &xs_a {
                q[xa] += l_small[a];
            }
            for bcol in 0..=d {
                let v = q_small[(a, bcol)];
                if v == 0.0 {
                    continue;
                }
                let xs_b = if bcol < d { index(bcol) } else { vec![layout.alpha] };
                for &xa in &xs_a {
                    for &xb in &xs_b {
                        p[(xa, xb)] += v;
                    }
                }
            }
        }
        (p, q, c)
    }

    /// Residual rows of one kind as affine expressions in the solver vector,
    /// scaled so that `sum e_i(x)^2` is `L1` (for `Mse`) or `L2` (for `Cross`,
    /// without the `delta` weight).
    pub fn component_rows(&self, layout: &LossLayout, kind: ResidualKind) -> Vec<Affine> {
        let w = match kind {
            ResidualKind::Mse => 1.0 / self.num_grid as f64,
            ResidualKind::Cross => pair_weight(self.num_dois),
        };
        (0..self.num_rows())
            .filter(|&i| self.kinds[i] == kind)
            .map(|i| self.affine_row(layout, i).scaled(w.sqrt()))
            .collect()
    }

    fn affine_row(&self, layout: &LossLayout, i: usize) -> Affine {
        let coeffs: Vec<f64> = self.coeff_r.row(i).iter().copied().collect();
        let mut e = Affine::constant(self.constant[i]);
        for b in &layout.w_blocks {
            e = e.add_dense(b.start, &coeffs, 1.0);
        }
        if self.coeff_alpha[i] != 0.0 {
            e = e.term(layout.alpha, self.coeff_alpha[i]);
        }
        e
    }

    /// Second-order-cone rows for `sum_i w_i r_i^2 <= x[epigraph]`, written as
    /// `||(2 sqrt(w) r, s - 1)|| <= s + 1`.
    pub fn epigraph_rows(&self, layout: &LossLayout, epigraph: usize) -> Vec<Affine> {
        let mut rows = Vec::with_capacity(self.num_rows() + 2);
        rows.push(Affine::var(epigraph).plus(1.0));
        for i in 0..self.num_rows() {
            rows.push(self.affine_row(layout, i).scaled(2.0 * self.weights[i].sqrt()));
        }
        rows.push(Affine::var(epigraph).plus(-1.0));
        rows
    }
}
