//! Dense complex matrices sized for small Hilbert spaces (d <= ~16).
//!
//! Everything is row-major `Vec<Complex64>` with no sparse path; at this
//! scale dense arithmetic is both the simplest and the fastest option.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square and nonempty ({rows} rows, row {bad_row} has {bad_len} entries)")]
    NotSquare {
        rows: usize,
        bad_row: usize,
        bad_len: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be >= 1");
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, LinalgError> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if dim == 0 || row.len() != dim {
                return Err(LinalgError::NotSquare {
                    rows: dim,
                    bad_row: i,
                    bad_len: row.len(),
                });
            }
            for (j, z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(CMatrix {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Rank-1 outer product v w^dagger embedded as a square matrix.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        let dim = v.len();
        Self::from_fn(dim, |i, j| v[i] * w[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.dim + j] = z;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Standard matrix product. Panics on dimension mismatch; external
    /// input dimensions are validated once at the JSON boundary.
    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for l in 0..d {
                let a = self.data[i * d + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[l * d + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(&rhs.data) {
            *o += r;
        }
        out
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(&rhs.data) {
            *o -= r;
        }
        out
    }

    pub fn scale(&self, z: C64) -> CMatrix {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= z;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, |i, j| self.data[j * d + i].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Hilbert-Schmidt norm, sqrt(Tr[A^dagger A]) = sqrt(sum |a_ij|^2).
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// AB - BA.
    pub fn commutator(&self, rhs: &CMatrix) -> CMatrix {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim;
        self.adjoint().mul(self).sub(&CMatrix::identity(d)).hs_norm() <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).hs_norm() <= tol && self.mul(self).sub(self).hs_norm() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).hs_norm() <= tol
    }

    /// A^n by repeated multiplication; n = 0 gives the identity.
    pub fn pow(&self, n: usize) -> CMatrix {
        let mut out = CMatrix::identity(self.dim);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }
}

fn gaussian_matrix(dim: usize, rng: &mut impl rand::Rng) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| {
        C64::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        )
    })
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
///
/// Gram-Schmidt yields the unique QR factor with positive real diagonal R,
/// which makes the Q factor exactly Haar-distributed. Orthonormalization is
/// run twice so the result is unitary to machine precision.
pub fn haar_random_unitary_from_rng(dim: usize, rng: &mut impl rand::Rng) -> CMatrix {
    let g = gaussian_matrix(dim, rng);
    // columns of g
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g.get(i, j)).collect())
        .collect();
    for _pass in 0..2 {
        for j in 0..dim {
            for l in 0..j {
                let proj: C64 = (0..dim).map(|i| cols[l][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let sub = proj * cols[l][i];
                    cols[j][i] -= sub;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
    }
    CMatrix::from_fn(dim, |i, j| cols[j][i])
}

pub fn haar_random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_unitary_from_rng(dim, &mut rng)
}

/// Gaussian G for the G G^dagger density construction.
pub fn gaussian_from_rng(dim: usize, rng: &mut impl rand::Rng) -> CMatrix {
    gaussian_matrix(dim, rng)
}
