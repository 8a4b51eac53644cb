use crate::hermitian::{hmat, hvec, hvec_len, smat, svec, svec_len, C64};
use crate::ConicError;
use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;

/// Eigendecomposition sweep cap; generous for the block sizes used here.
const EIG_MAX_ITERS: usize = 10_000;

/// A closed convex cone. Each variant knows its row dimension in the
/// constraint vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `{0}^d`: affine equalities.
    Zero(usize),
    /// `R_+^d`.
    NonNeg(usize),
    /// `{(t, x) : ||x|| <= t}` with total dimension `d` (so `x` has `d - 1`).
    SecondOrder(usize),
    /// Real symmetric PSD matrices of side `n`, stored as `svec`.
    PsdReal(usize),
    /// Complex Hermitian PSD matrices of side `n`, stored as `hvec`.
    PsdHermitian(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) => d,
            Cone::PsdReal(n) => svec_len(n),
            Cone::PsdHermitian(n) => hvec_len(n),
        }
    }

    /// Whether a row scaling must be uniform across the whole block to keep
    /// cone membership invariant.
    pub(crate) fn needs_uniform_scaling(&self) -> bool {
        !matches!(self, Cone::Zero(_) | Cone::NonNeg(_))
    }

    /// Euclidean projection of `v` onto the cone, in place.
    pub fn project(&self, v: &mut [f64]) -> Result<(), ConicError> {
        debug_assert_eq!(v.len(), self.dim());
        match *self {
            Cone::Zero(_) => v.iter_mut().for_each(|x| *x = 0.0),
            Cone::NonNeg(_) => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            Cone::SecondOrder(_) => {
                let (t, x) = v.split_first_mut().expect("second-order cone of dimension 0");
                let (xp, tp) = project_soc(x, *t);
                x.copy_from_slice(&xp);
                *t = tp;
            }
            Cone::PsdReal(n) => {
                let p = project_psd(&smat(v, n))?;
                v.copy_from_slice(svec(&p).as_slice());
            }
            Cone::PsdHermitian(n) => {
                let p = project_psd_hermitian(&hmat(v, n))?;
                v.copy_from_slice(hvec(&p).as_slice());
            }
        }
        Ok(())
    }

    /// Projection onto the dual cone. All cones here are self-dual except
    /// `Zero`, whose dual is the whole space.
    pub fn project_dual(&self, v: &mut [f64]) -> Result<(), ConicError> {
        match self {
            Cone::Zero(_) => Ok(()),
            _ => self.project(v),
        }
    }
}

/// Frobenius-nearest PSD matrix to the symmetric matrix `m` (eigenvalue clamp).
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, ConicError> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITERS)
        .ok_or_else(|| ConicError::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out.ger(lam, &v, &v, 1.0);
        }
    }
    Ok(out)
}

/// Frobenius-nearest PSD matrix to the Hermitian matrix `m`.
pub fn project_psd_hermitian(m: &DMatrix<C64>) -> Result<DMatrix<C64>, ConicError> {
    let herm = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, EIG_MAX_ITERS)
        .ok_or_else(|| ConicError::Numerical("Hermitian eigendecomposition did not converge".into()))?;
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out.gerc(C64::new(lam, 0.0), &v, &v, C64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// Projection of `(x, t)` onto `{||x|| <= t}`.
pub fn project_soc(x: &[f64], t: f64) -> (Vec<f64>, f64) {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx <= t {
        (x.to_vec(), t)
    } else if nx <= -t {
        (vec![0.0; x.len()], 0.0)
    } else {
        let c = 0.5 * (t + nx);
        (x.iter().map(|v| c * v / nx).collect(), c)
    }
}
