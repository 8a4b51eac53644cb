//! Rayleigh channels, rank-one covariance estimates, covariance error models
//! and the Gaussianity check of the trace statistic.

use crate::{DfrcError, Result};
use dfrc_conic::hermitian::{hmat, hvec, hvec_index, hvec_len, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;
use std::io::Write;

/// Eigenvalues below this fraction of the largest are dropped from factors.
pub const FACTOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: Vec<DVector<C64>>,
    pub c_hat: Vec<DMatrix<C64>>,
    /// Linear watts.
    pub noise_power: f64,
}

impl ChannelSet {
    pub fn num_users(&self) -> usize {
        self.c_hat.len()
    }

    pub fn from_channels(h: Vec<DVector<C64>>, noise_power: f64) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(DfrcError::Domain("noise power must be positive".into()));
        }
        let c_hat = h.iter().map(estimate_covariance).collect::<Result<Vec<_>>>()?;
        Ok(ChannelSet { h, c_hat, noise_power })
    }
}

fn complex_normal(rng: &mut impl Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

/// `K` channels of `N` i.i.d. CN(0, 1) entries.
pub fn rayleigh_channels(k: usize, n: usize, rng: &mut impl Rng) -> Vec<DVector<C64>> {
    (0..k).map(|_| DVector::from_fn(n, |_, _| complex_normal(rng))).collect()
}

pub fn generate_rayleigh(k: usize, n: usize, noise_power: f64, rng: &mut impl Rng) -> Result<ChannelSet> {
    if n == 0 {
        return Err(DfrcError::Domain("at least one antenna is required".into()));
    }
    ChannelSet::from_channels(rayleigh_channels(k, n, rng), noise_power)
}

/// `h h^H`.
pub fn estimate_covariance(h: &DVector<C64>) -> Result<DMatrix<C64>> {
    if h.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(DfrcError::Degenerate("zero channel vector".into()));
    }
    Ok(h * h.adjoint())
}

/// Upper-triangle positions (1-based) sorted diagonal by diagonal: the main
/// diagonal, then offset 1, offset 2, and so on.
pub fn diagonalwise_index(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for offset in 0..n {
        for i in 1..=n - offset {
            out.push((i, i + offset));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryLaw {
    /// Correlated normals pushed through the normal CDF, then centered.
    Uniform,
    Gaussian,
    /// Uniform latent entries mixed by the correlation factor.
    SumOfUniforms,
}

impl EntryLaw {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryLaw::Uniform => "uniform",
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::SumOfUniforms => "sum-of-uniforms",
        }
    }
}

/// Statistics of the covariance error `E`.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorModel {
    /// Independent Gaussian entries; `sigma[(i, j)]` is the standard
    /// deviation of `e_ij` (real and imaginary parts get half the variance).
    Independent { sigma: DMatrix<f64> },
    /// Off-diagonal entries correlated along the diagonal-by-diagonal order
    /// with `p_ab = exp(-lambda |a - b|)`; independent real diagonal.
    /// Without a target every real component has variance 1/12; with one,
    /// `E|e_ij|^2` and `e_ii^2` are rescaled to it.
    Dependent { lambda_decay: f64, entry_law: EntryLaw, target_variance: Option<f64> },
}

impl ErrorModel {
    pub fn independent_uniform(n: usize, variance: f64) -> Self {
        ErrorModel::Independent { sigma: DMatrix::from_element(n, n, variance.max(0.0).sqrt()) }
    }

    pub fn zero(n: usize) -> Self {
        ErrorModel::Independent { sigma: DMatrix::zeros(n, n) }
    }

    pub fn label(&self) -> String {
        match self {
            ErrorModel::Independent { .. } => "independent".into(),
            ErrorModel::Dependent { entry_law, lambda_decay, .. } => {
                format!("dependent-{}-lambda{}", entry_law.as_str(), lambda_decay)
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ErrorModel::Independent { sigma } => {
                if sigma.nrows() != n || sigma.ncols() != n {
                    return Err(DfrcError::Model(format!("sigma must be {n}x{n}")));
                }
                if sigma.iter().any(|&s| !(s >= 0.0)) {
                    return Err(DfrcError::Model("standard deviations must be nonnegative".into()));
                }
                if (sigma - sigma.transpose()).amax() > 1e-12 * sigma.amax().max(1.0) {
                    return Err(DfrcError::Model("sigma must be symmetric".into()));
                }
            }
            ErrorModel::Dependent { lambda_decay, target_variance, .. } => {
                if !(*lambda_decay > 0.0) || !lambda_decay.is_finite() {
                    return Err(DfrcError::Model("correlation decay must be positive".into()));
                }
                if let Some(v) = target_variance {
                    if !(*v >= 0.0) {
                        return Err(DfrcError::Model("target variance must be nonnegative".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ErrorModel::Independent { sigma } => sigma.iter().all(|&s| s == 0.0),
            ErrorModel::Dependent { target_variance, .. } => *target_variance == Some(0.0),
        }
    }
}

/// `P` over the `N(N-1)/2` off-diagonal latent entries.
pub fn latent_correlation(n: usize, lambda: f64) -> DMatrix<f64> {
    let m = n * n.saturating_sub(1) / 2;
    DMatrix::from_fn(m, m, |a, b| (-lambda * (a as f64 - b as f64).abs()).exp())
}

/// Draws error matrices for one model and size. Holds the correlation factor.
#[derive(Debug, Clone)]
pub struct ErrorSampler {
    model: ErrorModel,
    n: usize,
    /// Off-diagonal positions (0-based) in diagonal-by-diagonal order.
    offdiag: Vec<(usize, usize)>,
    chol: Option<DMatrix<f64>>,
    off_scale: f64,
    diag_scale: f64,
}

const BASE_VAR: f64 = 1.0 / 12.0;

impl ErrorSampler {
    pub fn new(model: &ErrorModel, n: usize) -> Result<Self> {
        model.validate(n)?;
        let offdiag: Vec<(usize, usize)> =
            diagonalwise_index(n).into_iter().skip(n).map(|(i, j)| (i - 1, j - 1)).collect();
        let (chol, off_scale, diag_scale) = match model {
            ErrorModel::Independent { .. } => (None, 1.0, 1.0),
            ErrorModel::Dependent { lambda_decay, target_variance, .. } => {
                let p = latent_correlation(n, *lambda_decay);
                let l = if p.nrows() == 0 {
                    p
                } else {
                    p.cholesky()
                        .ok_or_else(|| DfrcError::Model("latent correlation is not positive definite".into()))?
                        .l()
                };
                let (o, d) = match target_variance {
                    Some(v) => ((v / (2.0 * BASE_VAR)).sqrt(), (v / BASE_VAR).sqrt()),
                    None => (1.0, 1.0),
                };
                (Some(l), o, d)
            }
        };
        Ok(ErrorSampler { model: model.clone(), n, offdiag, chol, off_scale, diag_scale })
    }

    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn sample(&self, rng: &mut impl Rng) -> DMatrix<C64> {
        let n = self.n;
        let mut e = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        match &self.model {
            ErrorModel::Independent { sigma } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for j in 0..n {
                    let d: f64 = rng.sample(StandardNormal);
                    e[(j, j)] = C64::new(sigma[(j, j)] * d, 0.0);
                    for i in 0..j {
                        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        let z = C64::new(re, im) * (sigma[(i, j)] * s);
                        e[(i, j)] = z;
                        e[(j, i)] = z.conj();
                    }
                }
            }
            ErrorModel::Dependent { entry_law, .. } => {
                let l = self.chol.as_ref().expect("dependent sampler keeps its factor");
                let m = self.offdiag.len();
                let unit = Uniform::new_inclusive(-0.5, 0.5).expect("valid bounds");
                let gauss_scale = BASE_VAR.sqrt();
                let latent = |rng: &mut dyn rand::RngCore| -> DVector<f64> {
                    match entry_law {
                        EntryLaw::SumOfUniforms => DVector::from_fn(m, |_, _| unit.sample(rng)),
                        EntryLaw::Uniform => DVector::from_fn(m, |_, _| StandardNormal.sample(rng)),
                        EntryLaw::Gaussian => {
                            DVector::from_fn(m, |_, _| {
                                let v: f64 = StandardNormal.sample(rng);
                                gauss_scale * v
                            })
                        }
                    }
                };
                let mut re = l * latent(rng);
                let mut im = l * latent(rng);
                if *entry_law == EntryLaw::Uniform {
                    let phi = Normal::standard();
                    re.apply(|v| *v = phi.cdf(*v) - 0.5);
                    im.apply(|v| *v = phi.cdf(*v) - 0.5);
                }
                for (a, &(i, j)) in self.offdiag.iter().enumerate() {
                    let z = C64::new(re[a], im[a]) * self.off_scale;
                    e[(i, j)] = z;
                    e[(j, i)] = z.conj();
                }
                for j in 0..n {
                    let d = match entry_law {
                        EntryLaw::Gaussian => gauss_scale * rng.sample::<f64, _>(StandardNormal),
                        _ => unit.sample(rng),
                    };
                    e[(j, j)] = C64::new(self.diag_scale * d, 0.0);
                }
            }
        }
        e
    }

    /// Closed-form covariance of `hvec(E)`.
    pub fn covariance(&self) -> ErrorCovariance {
        let n = self.n;
        let d = hvec_len(n);
        let mut g = DMatrix::zeros(d, d);
        match &self.model {
            ErrorModel::Independent { sigma } => {
                for j in 0..n {
                    g[(hvec_index(j, j), hvec_index(j, j))] = sigma[(j, j)].powi(2);
                    for i in 0..j {
                        let k = hvec_index(i, j);
                        let v = sigma[(i, j)].powi(2);
                        g[(k, k)] = v;
                        g[(k + 1, k + 1)] = v;
                    }
                }
                return ErrorCovariance::from_diagonal(n, g.diagonal());
            }
            ErrorModel::Dependent { lambda_decay, entry_law, .. } => {
                let p = latent_correlation(n, *lambda_decay);
                let comp = |rho: f64| match entry_law {
                    EntryLaw::Uniform => (rho / 2.0).asin() / (2.0 * PI),
                    EntryLaw::Gaussian | EntryLaw::SumOfUniforms => rho * BASE_VAR,
                };
                // hvec coordinates carry sqrt(2) on off-diagonal components
                let so = 2.0 * self.off_scale * self.off_scale;
                for (a, &(i, j)) in self.offdiag.iter().enumerate() {
                    let ka = hvec_index(i, j);
                    for (b, &(k, l)) in self.offdiag.iter().enumerate() {
                        let kb = hvec_index(k, l);
                        let c = so * comp(p[(a, b)]);
                        g[(ka, kb)] = c;
                        g[(ka + 1, kb + 1)] = c;
                    }
                }
                for j in 0..n {
                    g[(hvec_index(j, j), hvec_index(j, j))] = self.diag_scale * self.diag_scale * BASE_VAR;
                }
            }
        }
        ErrorCovariance::from_matrix(n, g)
    }

    /// Monte Carlo estimate of the covariance of `hvec(E)` (zero mean assumed).
    pub fn estimate_covariance(&self, trials: usize, rng: &mut impl Rng) -> Result<ErrorCovariance> {
        if trials == 0 {
            return Err(DfrcError::Validation("need at least one trial".into()));
        }
        let d = hvec_len(self.n);
        let mut g = DMatrix::zeros(d, d);
        for _ in 0..trials {
            let v = hvec(&self.sample(rng));
            g.syger(1.0, &v, &v, 1.0);
        }
        g.fill_upper_triangle_with_lower_triangle();
        g /= trials as f64;
        Ok(ErrorCovariance::from_matrix(self.n, g))
    }
}

pub fn sample_error_matrix(model: &ErrorModel, n: usize, seed: u64) -> Result<DMatrix<C64>> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ErrorSampler::new(model, n)?.sample(&mut rng))
}

/// Covariance `G` of `hvec(E)` and a factor `F` with `G = F F'`. In `hvec`
/// coordinates `Var[Tr(BE)] = ||F' hvec(B)||^2`.
#[derive(Debug, Clone)]
pub struct ErrorCovariance {
    pub n: usize,
    pub g: DMatrix<f64>,
    pub factor: DMatrix<f64>,
}

impl ErrorCovariance {
    fn from_diagonal(n: usize, diag: DVector<f64>) -> Self {
        let d = diag.len();
        let keep: Vec<usize> = (0..d).filter(|&i| diag[i] > 0.0).collect();
        let mut factor = DMatrix::zeros(d, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            factor[(i, c)] = diag[i].sqrt();
        }
        ErrorCovariance { n, g: DMatrix::from_diagonal(&diag), factor }
    }

    /// Eigen square root, clamping eigenvalues below `FACTOR_TOL` relative.
    pub fn from_matrix(n: usize, g: DMatrix<f64>) -> Self {
        let g = (&g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(g.clone());
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..g.nrows()).filter(|&i| eig.eigenvalues[i] > FACTOR_TOL * top).collect();
        let mut factor = DMatrix::zeros(g.nrows(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            factor.set_column(c, &(eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt()));
        }
        ErrorCovariance { n, g, factor }
    }

    pub fn is_zero(&self) -> bool {
        self.factor.ncols() == 0
    }

    /// `Var[Tr(BE)]` for Hermitian `B`.
    pub fn variance(&self, b: &DMatrix<C64>) -> f64 {
        (self.factor.transpose() * hvec(b)).norm_squared()
    }

    /// Linear map `hvec(E) -> vec(E)` (column-major `vec`).
    pub fn vec_map(&self) -> DMatrix<C64> {
        let d = hvec_len(self.n);
        let mut t = DMatrix::from_element(self.n * self.n, d, C64::new(0.0, 0.0));
        let mut unit = vec![0.0; d];
        for k in 0..d {
            unit[k] = 1.0;
            let m = hmat(&unit, self.n);
            t.set_column(k, &DVector::from_column_slice(m.as_slice()));
            unit[k] = 0.0;
        }
        t
    }

    /// `Gamma = E[vec(E) vec(E)^H]`.
    pub fn gamma(&self) -> DMatrix<C64> {
        let t = self.vec_map();
        let gc = self.g.map(|v| C64::new(v, 0.0));
        &t * gc * t.adjoint()
    }

    /// `Gamma~` with `Gamma = Gamma~ Gamma~^H`.
    pub fn gamma_factor(&self) -> DMatrix<C64> {
        self.vec_map() * self.factor.map(|v| C64::new(v, 0.0))
    }
}

/// `-Tr[B E]`; errors if the imaginary residue is not negligible.
pub fn trace_statistic(b: &DMatrix<C64>, e: &DMatrix<C64>) -> Result<f64> {
    let n = b.nrows();
    let mut acc = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = b[(i, j)] * e[(j, i)];
            acc += t;
            scale += t.norm();
        }
    }
    if acc.im.abs() > 1e-12 * scale.max(1e-300) {
        return Err(DfrcError::Validation(format!("trace statistic has imaginary part {}", acc.im)));
    }
    Ok(-acc.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub empirical_density: f64,
    pub fitted_density: f64,
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub samples: Vec<f64>,
    pub fitted_mean: f64,
    pub fitted_std: f64,
    pub kl_divergence: f64,
    pub histogram: Vec<HistogramBin>,
}

impl CltReport {
    pub fn write_histogram_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "bin_center,empirical_density,fitted_density")?;
        for b in &self.histogram {
            writeln!(w, "{},{},{}", b.center, b.empirical_density, b.fitted_density)?;
        }
        Ok(())
    }

    pub fn summary_row(&self, n: usize, model: &str) -> String {
        format!("{n},{model},{},{}", self.samples.len(), self.kl_divergence)
    }
}

pub const CLT_SUMMARY_HEADER: &str = "n,model,trials,kl";

/// Histogram KL divergence from the empirical distribution of `samples` to
/// the Gaussian fitted by sample mean and variance. Bins span mean +/- 5 std;
/// empty bins are skipped.
pub fn histogram_kl(samples: &[f64], bins: usize) -> Result<(f64, f64, f64, Vec<HistogramBin>)> {
    if bins == 0 || samples.len() < 2 {
        return Err(DfrcError::Validation("need samples and at least one bin".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(DfrcError::Validation("statistic has zero variance".into()));
    }
    let std = var.sqrt();
    let lo = mean - 5.0 * std;
    let width = 10.0 * std / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = ((x - lo) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    let normal = Normal::new(mean, std).map_err(|e| DfrcError::Validation(e.to_string()))?;
    let mut kl = 0.0;
    let mut hist = Vec::with_capacity(bins);
    for (i, &c) in counts.iter().enumerate() {
        let a = lo + i as f64 * width;
        let q = normal.cdf(a + width) - normal.cdf(a);
        let p = c as f64 / n;
        if c > 0 && q > 0.0 {
            kl += p * (p / q).ln();
        }
        hist.push(HistogramBin { center: a + 0.5 * width, empirical_density: p / width, fitted_density: q / width });
    }
    Ok((mean, std, kl.max(0.0), hist))
}

/// Draws `-Tr[B E]` `trials` times and compares it to its Gaussian fit.
pub fn clt_validate(
    sampler: &ErrorSampler,
    b: &DMatrix<C64>,
    trials: usize,
    bins: usize,
    rng: &mut impl Rng,
) -> Result<CltReport> {
    if trials < 1000 {
        return Err(DfrcError::Validation("at least 1000 trials are required".into()));
    }
    if b.nrows() != sampler.size() || b.ncols() != sampler.size() {
        return Err(DfrcError::Domain("B does not match the error size".into()));
    }
    crate::array::checked_hermitian(b)?;
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        samples.push(trace_statistic(b, &sampler.sample(rng))?);
    }
    let (fitted_mean, fitted_std, kl_divergence, histogram) = histogram_kl(&samples, bins)?;
    Ok(CltReport { samples, fitted_mean, fitted_std, kl_divergence, histogram })
}

/// KL of exactly Gaussian samples against their own fit: the estimator's
/// floor at this trial count and bin count.
pub fn gaussian_self_kl(trials: usize, bins: usize, rng: &mut impl Rng) -> Result<f64> {
    let samples: Vec<f64> = (0..trials).map(|_| rng.sample(StandardNormal)).collect();
    Ok(histogram_kl(&samples, bins)?.2)
}
