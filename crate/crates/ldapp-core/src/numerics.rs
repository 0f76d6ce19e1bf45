//! Dense linear-algebra contracts shared by every solver: rank-truncated SVD,
//! Moore–Penrose pseudoinverse, symmetric eigendecomposition, minimal-norm
//! least squares, QR orthonormalization, and principal angles.
//!
//! All decompositions are deterministic: singular values and eigenvalues are
//! sorted nonincreasing, equal values keep their pre-sort index order, and
//! every singular/eigen vector is sign-fixed so that its largest-magnitude
//! entry is positive. Two calls on identical inputs return identical bits.

use ndarray::{Array1, Array2, ArrayView2, Axis, s};
use ndarray_linalg::{Eigh, JobSvd, SVDDC, QR, UPLO};

use crate::error::{Error, Result};

/// Default relative rank cutoff: `1e−12 · max(rows, cols)`, applied to `σ_max`.
pub fn default_rtol(rows: usize, cols: usize) -> f64 {
    1e-12 * rows.max(cols) as f64
}

fn numerical(context: &str, e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("{context}: {e}"))
}

/// Rank-truncated singular value decomposition `A ≈ U Σ Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Orthonormal columns, `rows × rank`.
    pub u: Array2<f64>,
    /// Retained singular values, nonincreasing.
    pub sigma: Array1<f64>,
    /// Orthonormal columns, `cols × rank`.
    pub v: Array2<f64>,
    /// Count of singular values above `rtol · σ_max`.
    pub rank: usize,
}

/// Symmetric eigendecomposition with eigenvalues sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: Array2<f64>,
    pub values: Array1<f64>,
}

/// Flip column signs so the largest-magnitude entry of each `key` column is
/// positive; `follow` columns flip together with their `key` column.
fn canonicalize_signs(key: &mut Array2<f64>, follow: Option<&mut Array2<f64>>) {
    let mut flips = Vec::new();
    for (j, col) in key.axis_iter(Axis(1)).enumerate() {
        let mut best = 0usize;
        let mut mag = -1.0;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > mag {
                mag = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            flips.push(j);
        }
    }
    for &j in &flips {
        key.column_mut(j).mapv_inplace(|v| -v);
    }
    if let Some(other) = follow {
        for &j in &flips {
            other.column_mut(j).mapv_inplace(|v| -v);
        }
    }
}

/// Reduced SVD keeping only components with `σ > rtol · σ_max`.
pub fn reduced_svd(a: ArrayView2<'_, f64>, rtol: Option<f64>) -> Result<SvdResult> {
    let (m, n) = a.dim();
    let rtol = rtol.unwrap_or_else(|| default_rtol(m, n));
    if rtol <= 0.0 {
        return Err(Error::InvalidInput(format!("rtol must be positive, got {rtol}")));
    }
    if m == 0 || n == 0 {
        return Ok(SvdResult {
            u: Array2::zeros((m, 0)),
            sigma: Array1::zeros(0),
            v: Array2::zeros((n, 0)),
            rank: 0,
        });
    }
    if let Some(v) = a.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite entry {v} in SVD input")));
    }
    let owned = a.to_owned();
    let (u, sigma, vt) = owned
        .svddc(JobSvd::Some)
        .map_err(|e| numerical("SVD failed", e))?;
    let u = u.expect("JobSvd::Some returns U");
    let vt = vt.expect("JobSvd::Some returns Vᵀ");
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let rank = sigma.iter().take_while(|&&s| s > rtol * smax).count();
    let rank = if smax == 0.0 { 0 } else { rank };

    let mut u = u.slice(s![.., ..rank]).to_owned();
    let mut v = vt.slice(s![..rank, ..]).t().to_owned();
    let sigma = sigma.slice(s![..rank]).to_owned();
    canonicalize_signs(&mut v, Some(&mut u));
    Ok(SvdResult { u, sigma, v, rank })
}

/// Moore–Penrose pseudoinverse via rank-truncated SVD.
pub fn pseudo_inverse(a: ArrayView2<'_, f64>, rtol: Option<f64>) -> Result<Array2<f64>> {
    let svd = reduced_svd(a, rtol)?;
    if svd.rank == 0 {
        return Ok(Array2::zeros((a.ncols(), a.nrows())));
    }
    let scaled = &svd.v / &svd.sigma; // column j divided by σ_j
    Ok(scaled.dot(&svd.u.t()))
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(A+Aᵀ)/2`; asymmetry beyond
/// `1e−8 · ‖A‖_max` is rejected.
pub fn sym_eig(a: ArrayView2<'_, f64>) -> Result<EigResult> {
    let (m, n) = a.dim();
    if m != n {
        return Err(Error::ShapeMismatch(format!("sym_eig needs a square matrix, got {m}×{n}")));
    }
    let amax = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !amax.is_finite() {
        return Err(Error::InvalidInput("non-finite entry in sym_eig input".into()));
    }
    let asym = (&a - &a.t()).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if asym > 1e-8 * amax {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric: max |A−Aᵀ| = {asym:.3e} exceeds 1e−8·‖A‖_max"
        )));
    }
    let sym = (&a + &a.t()) * 0.5;
    let (vals, vecs) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| numerical("symmetric eigendecomposition failed", e))?;

    // LAPACK returns ascending order; re-sort nonincreasing, ties keeping
    // their pre-sort index order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let values = Array1::from_iter(order.iter().map(|&i| vals[i]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&vecs.column(src));
    }
    canonicalize_signs(&mut vectors, None);
    Ok(EigResult { vectors, values })
}

/// Minimal-norm least-squares solution of `A X = B`, equal to `A†B`.
pub fn least_squares_minnorm(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    rtol: Option<f64>,
) -> Result<Array2<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} rows, B has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd = reduced_svd(a, rtol)?;
    if svd.rank == 0 {
        return Ok(Array2::zeros((a.ncols(), b.ncols())));
    }
    let mut proj = svd.u.t().dot(&b); // rank × k
    for (mut row, &s) in proj.axis_iter_mut(Axis(0)).zip(svd.sigma.iter()) {
        row.mapv_inplace(|v| v / s);
    }
    Ok(svd.v.dot(&proj))
}

/// Orthonormal basis of the column space via QR; rejects rank-deficient input.
pub fn orthonormal_basis(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let cols = a.ncols();
    if cols == 0 {
        return Ok(Array2::zeros((a.nrows(), 0)));
    }
    let rank = reduced_svd(a, None)?.rank;
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let (mut q, r) = a
        .to_owned()
        .qr()
        .map_err(|e| numerical("QR factorization failed", e))?;
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}

/// Cosines of the principal angles between the column spaces of `a` and `b`,
/// sorted nonincreasing, each clamped into `[0, 1]`.
pub fn principal_angles(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "subspaces live in different spaces: {} vs {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "principal angles need equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let cross = qa.t().dot(&qb);
    let svd = reduced_svd(cross.view(), Some(f64::MIN_POSITIVE))?;
    let mut cos: Vec<f64> = svd.sigma.iter().map(|&s| s.clamp(0.0, 1.0)).collect();
    cos.resize(a.ncols(), 0.0); // components truncated as numerically zero
    Ok(Array1::from(cos))
}

/// Ratio of largest to smallest singular value; `∞` for singular matrices.
pub fn condition_number(a: ArrayView2<'_, f64>) -> Result<f64> {
    let owned = a.to_owned();
    let (_, sigma, _) = owned
        .svddc(JobSvd::None)
        .map_err(|e| numerical("SVD failed", e))?;
    let smax = sigma.iter().cloned().fold(0.0f64, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
}
