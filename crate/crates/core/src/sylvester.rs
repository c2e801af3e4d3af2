//! Sylvester equation `A W + W B = C` for symmetric positive semi-definite `A`, `B`.
//!
//! With `A = U diag(a) Uᵀ` and `B = V diag(b) Vᵀ` the equation decouples in the
//! eigenbases: `(UᵀWV)_ij = (UᵀCV)_ij / (a_i + b_j)`. Denominators at or below
//! the ridge `1e-10 · (tr A / L + tr B / D)` are singular: the entry must be
//! negligible and is set to zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-8;
pub const RIDGE_SCALE: f64 = 1e-10;
/// Right-hand side entries below this fraction of `‖C‖_F` count as zero.
const NEGLIGIBLE: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix, reusable across solves.
#[derive(Debug, Clone)]
pub struct SymmetricFactor {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl SymmetricFactor {
    pub fn new(m: &DMatrix<f64>, name: &'static str) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let asym = (m - m.transpose()).norm();
        if asym > SYMMETRY_TOL * m.norm() {
            return Err(Error::NonSymmetricInput(name));
        }
        Ok(Self::new_unchecked((m + m.transpose()) * 0.5))
    }

    /// `m` must already be exactly symmetric.
    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m);
        Self { vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn mean_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.values.sum() / self.dim() as f64
        }
    }
}

pub fn ridge(a: &SymmetricFactor, b: &SymmetricFactor) -> f64 {
    RIDGE_SCALE * (a.mean_eigenvalue() + b.mean_eigenvalue())
}

/// Solves in the eigenbasis: maps `UᵀCV` to `UᵀWV` in place.
/// `c_norm` is `‖C‖_F`, used to decide which entries are negligible.
pub fn solve_rotated(
    a: &SymmetricFactor,
    b: &SymmetricFactor,
    mut rotated_c: DMatrix<f64>,
    c_norm: f64,
) -> Result<DMatrix<f64>> {
    let ridge = ridge(a, b);
    let negligible = NEGLIGIBLE * c_norm;
    for j in 0..b.dim() {
        let bj = b.values[j];
        for i in 0..a.dim() {
            let sum = a.values[i] + bj;
            let entry = &mut rotated_c[(i, j)];
            if sum <= ridge {
                if entry.abs() > negligible {
                    return Err(Error::SingularPencil { row: i, col: j, sum });
                }
                *entry = 0.0;
            } else {
                *entry /= sum;
            }
        }
    }
    Ok(rotated_c)
}

pub fn solve_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if c.nrows() != a.nrows() || c.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}, C is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let fa = SymmetricFactor::new(a, "A")?;
    let fb = SymmetricFactor::new(b, "B")?;
    let rotated = fa.vectors.tr_mul(c) * &fb.vectors;
    let m = solve_rotated(&fa, &fb, rotated, c.norm())?;
    Ok(&fa.vectors * m * fb.vectors.transpose())
}

pub fn relative_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (a * w + w * b - c).norm() / c.norm().max(f64::MIN_POSITIVE)
}
