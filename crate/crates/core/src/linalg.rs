//! Dense complex linear algebra: null-space bases, Hermitian eigenpairs and
//! PSD factorization.
//!
//! Backed by `nalgebra`'s complex SVD and symmetric eigensolver. Everything
//! here targets the small dimensions of relay beamforming (a few dozen at
//! most).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative tolerance on negative eigenvalues for PSD inputs.
pub const PSD_TOL: f64 = 1e-8;

/// A Hermitian matrix. Construction symmetrizes away round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m.nrows() != m.ncols() {
            return Err(Error::shape(
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let adj = m.adjoint();
        let asymmetry = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self((m + adj).scale(0.5)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `v·v†`.
    pub fn outer(v: &ComplexVector) -> Self {
        Self(v * v.adjoint())
    }

    /// Wraps a matrix that is Hermitian by construction, symmetrizing it.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        Self((m + adj).scale(0.5))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Re trace(self · other)`; the Frobenius inner product for Hermitian
    /// arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// `Re(v† A v)`.
    pub fn quad(&self, v: &ComplexVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self(self.0.scale(alpha))
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &HermitianMatrix) {
        self.0 += other.0.scale(alpha);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    pub fn eig(&self) -> HermitianEigen {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        HermitianEigen { values, vectors }
    }

    /// PSD within `min λ ≥ −1e-8·(1 + max λ)`.
    pub fn is_psd(&self) -> bool {
        let values = self.eig().values;
        let max = values.last().copied().unwrap_or(0.0);
        values[0] >= -PSD_TOL * (1.0 + max.max(0.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().values[0]
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    Ok(HermitianMatrix::new(a.clone())?.eig())
}

/// Orthonormal basis of `{v : H·v = 0}`, one column per null direction.
///
/// The rank threshold is `1e-10 · σ_max · max(rows, cols)`.
pub fn null_space_basis(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = h.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    // Pad to at least `cols` rows so the SVD returns a full right basis.
    let padded_rows = rows.max(cols);
    let mut padded = ComplexMatrix::zeros(padded_rows, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(h);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = 1e-10 * sigma_max * rows.max(cols) as f64;

    let null_rows: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= threshold)
        .collect();
    if null_rows.is_empty() {
        return Err(Error::EmptyNullSpace);
    }
    Ok(ComplexMatrix::from_fn(cols, null_rows.len(), |i, j| {
        v_t[(null_rows[j], i)].conj()
    }))
}

/// Factor `S = V·V†` through the eigen-decomposition. Eigenvalues in
/// `[−1e-8·‖S‖, 0)` are clipped to zero; `V` keeps one column per retained
/// positive eigenvalue.
pub fn psd_factor(s: &HermitianMatrix) -> Result<ComplexMatrix> {
    let eig = s.eig();
    let norm = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.values[0];
    if min < -PSD_TOL * norm {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let cutoff = norm * f64::EPSILON * s.dim() as f64;
    let keep: Vec<usize> = (0..s.dim())
        .rev()
        .filter(|&k| eig.values[k] > cutoff)
        .collect();
    Ok(ComplexMatrix::from_fn(s.dim(), keep.len(), |i, j| {
        eig.vectors[(i, keep[j])] * eig.values[keep[j]].sqrt()
    }))
}

/// Dominant eigenpair of a PSD matrix and how much of the trace it carries.
#[derive(Debug, Clone)]
pub struct Rank1Part {
    pub lambda: f64,
    pub vector: ComplexVector,
    /// `λ₁ / trace`, or 1 for the zero matrix.
    pub ratio: f64,
}

pub fn dominant_rank1(x: &HermitianMatrix) -> Result<Rank1Part> {
    let eig = x.eig();
    let n = x.dim();
    let max = eig.values[n - 1];
    if eig.values[0] < -PSD_TOL * (1.0 + max.max(0.0)) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.values[0],
        });
    }
    let lambda = max.max(0.0);
    let trace = x.trace();
    let ratio = if trace <= 0.0 {
        1.0
    } else {
        (lambda / trace).clamp(0.0, 1.0)
    };
    Ok(Rank1Part {
        lambda,
        vector: eig.vectors.column(n - 1).into_owned(),
        ratio,
    })
}
