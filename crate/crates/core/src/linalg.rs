//! Small dense linear-algebra helpers for covariance matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative jitter for the first Cholesky attempt.
pub const JITTER_FIRST: f64 = 1e-12;
/// Relative jitter for the retry.
pub const JITTER_RETRY: f64 = 1e-9;
/// Eigenvalues below this are treated as a genuinely indefinite matrix.
pub const PSD_FLOOR: f64 = -1e-10;
/// Innovation covariances with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_square(m: &Matrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if m.nrows() != n { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

/// Symmetric within `1e-12` relative to the largest entry.
pub fn check_symmetric(m: &Matrix) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigendecomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &Matrix) -> (Vector, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vector::zeros(0), Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).0[0]
}

/// Lower-triangular square root `L` with `L Lᵀ ≈ P`.
///
/// Plain Cholesky is tried first; if it fails, it runs on `P + jitter·I` with
/// `jitter = 1e-12·trace(P)/n`, retried once at `1e-9·trace(P)/n`. The zero
/// matrix has the zero square root.
pub fn psd_sqrt(p: &Matrix) -> Result<Matrix> {
    let n = p.nrows();
    check_square(p, n)?;
    check_symmetric(p)?;
    if n == 0 || p.iter().all(|v| *v == 0.0) {
        return Ok(Matrix::zeros(n, n));
    }
    let lambda_min = min_eigenvalue(p);
    if lambda_min < PSD_FLOOR {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }
    let p = symmetrize(p);
    let mean_diag = p.trace() / n as f64;
    for rel in [0.0, JITTER_FIRST, JITTER_RETRY] {
        let jitter = rel * mean_diag.max(0.0);
        let shifted = &p + Matrix::identity(n, n) * jitter;
        if let Some(chol) = shifted.cholesky() {
            return Ok(chol.l());
        }
    }
    Err(Error::Factorization)
}

/// Solution of a symmetric positive-definite system, with condition monitoring.
pub struct SpdSolve {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    pub condition: f64,
}

impl SpdSolve {
    pub fn new(m: &Matrix) -> Result<Self> {
        let n = m.nrows();
        check_square(m, n)?;
        let (values, _) = sym_eigen(m);
        let (lo, hi) = if n == 0 {
            (1.0, 1.0)
        } else {
            (values[0], values[n - 1])
        };
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularInnovation { condition });
        }
        let chol = symmetrize(m)
            .cholesky()
            .ok_or(Error::SingularInnovation { condition })?;
        Ok(Self { chol, condition })
    }

    /// `B M⁻¹` for the factored symmetric `M`.
    pub fn right_divide(&self, b: &Matrix) -> Matrix {
        self.chol.solve(&b.transpose()).transpose()
    }
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}
