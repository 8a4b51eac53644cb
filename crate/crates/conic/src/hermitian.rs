//! Coordinate maps between matrices and the real vectors the solver works on.
//!
//! Real symmetric blocks use the usual `svec` layout (column-major upper
//! triangle, off-diagonals scaled by `sqrt(2)`), so that the Euclidean inner
//! product of two `svec`s equals the trace inner product of the matrices.
//!
//! Complex Hermitian blocks use `hvec`, the analogous isometric layout with
//! `n^2` real coordinates: diagonal entries, then `sqrt(2)·Re` and
//! `sqrt(2)·Im` of each strictly-upper entry. For Hermitian `A`, `B`
//! `<hvec(A), hvec(B)> = Tr[A B]`.
//!
//! The PSD cone over Hermitian matrices is handled through the real
//! embedding `[[X, -Y], [Y, X]]` of `H = X + jY`. The embedding doubles every
//! eigenvalue, so traces and squared Frobenius norms pick up a factor of 2.

use nalgebra::{Complex, DMatrix, DVector};
use std::f64::consts::SQRT_2;

pub type C64 = Complex<f64>;

pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn hvec_len(n: usize) -> usize {
    n * n
}

/// Position of entry `(i, j)`, `i <= j`, in an `svec` of a matrix with side `n`.
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Position of the first coordinate of entry `(i, j)`, `i <= j`, in an
/// `hvec`. Off-diagonal entries occupy two consecutive slots (real, imag).
pub fn hvec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    // Columns 0..j contribute sum_{c<j} (1 + 2c) = j^2 slots.
    j * j + if i == j { 2 * j } else { 2 * i }
}

pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(svec_len(n));
    for j in 0..n {
        for i in 0..=j {
            let v = if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)]) * SQRT_2
            };
            out[svec_index(i, j)] = v;
        }
    }
    out
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), svec_len(n), "svec length does not match side {n}");
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT_2;
                m[(j, i)] = x / SQRT_2;
            }
        }
    }
    m
}

/// `hvec` of the Hermitian part of `m`.
pub fn hvec(m: &DMatrix<C64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(hvec_len(n));
    for j in 0..n {
        for i in 0..=j {
            let k = hvec_index(i, j);
            if i == j {
                out[k] = m[(i, i)].re;
            } else {
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[k] = z.re * SQRT_2;
                out[k + 1] = z.im * SQRT_2;
            }
        }
    }
    out
}

pub fn hmat(v: &[f64], n: usize) -> DMatrix<C64> {
    assert_eq!(v.len(), hvec_len(n), "hvec length does not match side {n}");
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for j in 0..n {
        for i in 0..=j {
            let k = hvec_index(i, j);
            if i == j {
                m[(i, i)] = C64::new(v[k], 0.0);
            } else {
                let z = C64::new(v[k] / SQRT_2, v[k + 1] / SQRT_2);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    m
}

/// `[[X, -Y], [Y, X]]` for `H = X + jY`.
pub fn real_embedding(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut z = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let c = h[(i, j)];
            z[(i, j)] = c.re;
            z[(i + n, j + n)] = c.re;
            z[(i + n, j)] = c.im;
            z[(i, j + n)] = -c.im;
        }
    }
    z
}

/// Inverse of [`real_embedding`]; averages the duplicated blocks so that any
/// symmetric `2n x 2n` input maps to its nearest structured preimage.
pub fn from_real_embedding(z: &DMatrix<f64>) -> DMatrix<C64> {
    let n = z.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        C64::new(
            0.5 * (z[(i, j)] + z[(i + n, j + n)]),
            0.5 * (z[(i + n, j)] - z[(i, j + n)]),
        )
    })
}

/// Hermitian part `(M + M^H) / 2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Frobenius-relative distance of `m` from its Hermitian part.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / (2.0 * scale)
}

/// Complex vector outer product `u v^H`.
pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> DMatrix<C64> {
    u * v.adjoint()
}
