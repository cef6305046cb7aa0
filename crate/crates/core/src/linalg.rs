//! Dense complex helpers shared by the subspace and operator code.

use nalgebra::{DMatrix, DVector};

use crate::hardy::HardyFunction;
use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Stack functions as columns.
pub fn columns(functions: &[HardyFunction], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, functions.len());
    for (j, f) in functions.iter().enumerate() {
        m.set_column(j, f.as_vector());
    }
    m
}

pub fn column_functions(m: &CMatrix) -> Vec<HardyFunction> {
    (0..m.ncols())
        .map(|j| HardyFunction::from_vector(m.column(j).into_owned()))
        .collect()
}

/// Singular value decomposition `m = u · diag(s) · vᴴ` with descending `s`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD (`min(rows, cols)` singular triplets); full when `full` is set.
pub fn svd(m: &CMatrix, full: bool) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        let (ku, kv) = if full { (r, c) } else { (0, 0) };
        return Svd {
            u: CMatrix::identity(r, ku),
            s: Vec::new(),
            v: CMatrix::identity(c, kv),
        };
    }
    let a = to_faer(m);
    let d = if full { a.svd() } else { a.thin_svd() }.expect("SVD converges for finite input");
    let s = d.S().column_vector();
    Svd {
        u: from_faer(d.U()),
        s: (0..s.nrows()).map(|i| s[i].re).collect(),
        v: from_faer(d.V()),
    }
}

/// Singular values, descending. Empty matrices have none.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s = svd(m, false).s;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator 2-norm (largest singular value); 0 for empty matrices.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

fn select_columns(m: &CMatrix, keep: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &m.column(i));
    }
    out
}

/// Orthonormal basis of the column span, keeping left singular vectors whose
/// singular value exceeds `threshold`.
pub fn range_basis(m: &CMatrix, threshold: f64) -> CMatrix {
    let d = svd(m, false);
    let keep: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] > threshold).collect();
    select_columns(&d.u, &keep)
}

/// Orthonormal basis of the span with relative threshold `eps_rank · σ_max`.
pub fn orthonormal_span(m: &CMatrix, eps_rank: f64) -> CMatrix {
    let smax = spectral_norm(m);
    if smax <= f64::MIN_POSITIVE {
        return CMatrix::zeros(m.nrows(), 0);
    }
    range_basis(m, eps_rank * smax)
}

/// Right singular vectors with singular value at most `threshold`, including
/// the directions beyond the row count.
pub fn null_basis(m: &CMatrix, threshold: f64) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let d = svd(m, true);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| d.s.get(i).map_or(true, |&s| s <= threshold))
        .collect();
    select_columns(&d.v, &keep)
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `q` inside `C^dim`.
pub fn complement(q: &CMatrix) -> CMatrix {
    let dim = q.nrows();
    if q.ncols() == 0 {
        return CMatrix::identity(dim, dim);
    }
    let proj = CMatrix::identity(dim, dim) - q * q.adjoint();
    let target = dim - q.ncols();
    let basis = range_basis(&proj, 0.5);
    debug_assert_eq!(basis.ncols(), target);
    basis
}

/// `‖Q^H Q - I‖_max`.
pub fn orthonormality_defect(q: &CMatrix) -> f64 {
    let g = q.adjoint() * q;
    let k = g.nrows();
    (g - CMatrix::identity(k, k))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> CMatrix {
    u * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_dimensions() {
        let mut q = CMatrix::zeros(4, 2);
        q[(0, 0)] = C64::new(1.0, 0.0);
        q[(2, 1)] = C64::new(0.0, 1.0);
        let c = complement(&q);
        assert_eq!(c.ncols(), 2);
        assert!((q.adjoint() * &c).norm() < 1e-14);
        assert!(orthonormality_defect(&c) < 1e-14);
    }

    #[test]
    fn null_basis_of_rank_deficient_matrix() {
        let m = CMatrix::from_row_slice(
            2,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let k = null_basis(&m, 1e-12);
        assert_eq!(k.ncols(), 1);
        assert!((k[(2, 0)].norm() - 1.0).abs() < 1e-14);
    }
}
