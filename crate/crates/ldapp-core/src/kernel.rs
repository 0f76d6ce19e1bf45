//! Kernelized discriminant analysis: the classical expansion-coefficient
//! solver and the simpler `K†e` route, both over an optionally feature-space
//! centered kernel matrix.
//!
//! Centering is on by default: the derivations assume the mapped training data
//! have zero mean in the kernel feature space, so the working kernel matrix is
//! double-centered and test columns are adjusted consistently. Disable it only
//! to reproduce raw-kernel runs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{default_rtol, sym_eig};
use crate::solvers::feature_objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    /// `k(x,z) = exp(−‖x−z‖²/σ²)`.
    Gaussian { sigma: f64 },
    /// Dot product; combined with feature-space centering this evaluates
    /// `k(x,z) = (x−μ)ᵀ(z−μ)` over the training mean `μ`.
    LinearCentered,
    /// `k(x,z) = (xᵀz + coef)^degree`.
    Polynomial { degree: u32, coef: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDescriptor {
    #[serde(flatten)]
    pub kind: KernelKind,
    /// Center the mapped data in feature space (double-centered `K`).
    pub center: bool,
}

impl KernelDescriptor {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gaussian kernel needs sigma > 0, got {sigma}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Gaussian { sigma },
            center: true,
        })
    }

    pub fn linear_centered() -> Self {
        Self {
            kind: KernelKind::LinearCentered,
            center: true,
        }
    }

    pub fn polynomial(degree: u32, coef: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("polynomial degree must be at least 1".into()));
        }
        if !coef.is_finite() {
            return Err(Error::InvalidInput("polynomial coefficient must be finite".into()));
        }
        Ok(Self {
            kind: KernelKind::Polynomial { degree, coef },
            center: true,
        })
    }

    /// Raw-kernel variant with feature-space centering disabled.
    pub fn without_centering(mut self) -> Self {
        self.center = false;
        self
    }
}

/// `K[i,j] = k(x_i, z_j)` for the descriptor's base kernel (no centering).
pub fn kernel_matrix(
    desc: &KernelDescriptor,
    xa: ArrayView2<'_, f64>,
    xb: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if xa.ncols() != xb.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "kernel operands have widths {} and {}",
            xa.ncols(),
            xb.ncols()
        )));
    }
    if xa.iter().chain(xb.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in kernel input".into()));
    }
    let dots = xa.dot(&xb.t());
    Ok(match desc.kind {
        KernelKind::Gaussian { sigma } => {
            let sq_a: Array1<f64> = xa.outer_iter().map(|r| r.dot(&r)).collect();
            let sq_b: Array1<f64> = xb.outer_iter().map(|r| r.dot(&r)).collect();
            let inv = 1.0 / (sigma * sigma);
            let mut k = dots;
            for ((i, j), v) in k.indexed_iter_mut() {
                let d2 = (sq_a[i] + sq_b[j] - 2.0 * *v).max(0.0);
                *v = (-d2 * inv).exp();
            }
            k
        }
        KernelKind::LinearCentered => dots,
        KernelKind::Polynomial { degree, coef } => dots.mapv(|v| (v + coef).powi(degree as i32)),
    })
}

/// Block projection matrix with entries `1/N_c` on same-cluster pairs.
///
/// `W` is a projector (`W² = W`, trace `C`) whose unit eigenvectors include
/// the cluster indicator vectors.
pub fn w_matrix(d: &Dataset) -> Array2<f64> {
    let n = d.sample_count();
    let labels = d.labels();
    let mut counts = vec![0usize; d.cluster_count()];
    for &l in labels {
        counts[l] += 1;
    }
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                w[(i, j)] = 1.0 / counts[labels[i]] as f64;
            }
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelSolverKind {
    #[serde(rename = "classical")]
    Classical,
    #[serde(rename = "lda++")]
    Ldapp,
}

impl std::fmt::Display for KernelSolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelSolverKind::Classical => "kernel-classical",
            KernelSolverKind::Ldapp => "kernel-lda++",
        })
    }
}

#[derive(Debug, Clone)]
struct CenterStats {
    /// Column means of the raw training kernel matrix.
    col_means: Array1<f64>,
    /// Grand mean of the raw training kernel matrix.
    grand_mean: f64,
}

/// A fitted kernel model: expansion coefficients over the retained training rows.
#[derive(Debug, Clone)]
pub struct KernelModel {
    /// `N×F` expansion coefficients.
    pub alphas: Array2<f64>,
    /// Training rows the expansion refers to.
    pub x_train: Array2<f64>,
    pub descriptor: KernelDescriptor,
    /// Whether columns were scaled to `αᵀKα = 1`.
    pub normalized: bool,
    /// Eigenvalues associated with the retained features.
    pub eigenvalues: Array1<f64>,
    pub solver: KernelSolverKind,
    /// Objective of the training features at fit time.
    pub objective: f64,
    center: Option<CenterStats>,
}

impl KernelModel {
    pub fn feature_count(&self) -> usize {
        self.alphas.ncols()
    }

    pub fn train_count(&self) -> usize {
        self.x_train.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x_train.ncols()
    }

    /// Rebuilds a model from persisted parts, recomputing centering statistics
    /// from the training rows.
    pub fn from_parts(
        alphas: Array2<f64>,
        x_train: Array2<f64>,
        descriptor: KernelDescriptor,
        normalized: bool,
        eigenvalues: Array1<f64>,
        solver: KernelSolverKind,
        objective: f64,
    ) -> Result<Self> {
        if alphas.nrows() != x_train.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficient rows for {} training rows",
                alphas.nrows(),
                x_train.nrows()
            )));
        }
        let center = if descriptor.center {
            let k_raw = kernel_matrix(&descriptor, x_train.view(), x_train.view())?;
            Some(center_stats(&k_raw))
        } else {
            None
        };
        Ok(Self {
            alphas,
            x_train,
            descriptor,
            normalized,
            eigenvalues,
            solver,
            objective,
            center,
        })
    }
}

fn center_stats(k_raw: &Array2<f64>) -> CenterStats {
    let col_means = k_raw.mean_axis(Axis(0)).expect("kernel matrix is non-empty");
    let grand_mean = col_means.mean().expect("kernel matrix is non-empty");
    CenterStats {
        col_means,
        grand_mean,
    }
}

/// Double-centered symmetric kernel matrix plus the stats to center test rows.
fn working_kernel(d: &Dataset, desc: &KernelDescriptor) -> Result<(Array2<f64>, Option<CenterStats>)> {
    let k_raw = kernel_matrix(desc, d.x(), d.x())?;
    let mut k = &k_raw + &k_raw.t();
    k *= 0.5;
    if !desc.center {
        return Ok((k, None));
    }
    let stats = center_stats(&k);
    let cm = &stats.col_means;
    let g = stats.grand_mean;
    for ((i, j), v) in k.indexed_iter_mut() {
        *v += g - cm[i] - cm[j];
    }
    Ok((k, Some(stats)))
}

/// Truncated eigendecomposition of the working kernel: `K = U Γ Uᵀ` keeping
/// `γ > rtol·γ_max`. Truncation is relative to the largest eigenvalue;
/// an absolute cutoff here is what historically produced eigenvalues
/// reported below one for strictly positive definite kernels.
fn kernel_eig(k: &Array2<f64>, rtol: Option<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let n = k.nrows();
    let rtol = rtol.unwrap_or_else(|| default_rtol(n, n));
    let eig = sym_eig(k.view())?;
    let gmax = eig.values.iter().cloned().fold(0.0f64, f64::max);
    let r = eig
        .values
        .iter()
        .take_while(|&&v| v > rtol * gmax && v > 0.0)
        .count();
    Ok((
        eig.vectors.slice(ndarray::s![.., ..r]).to_owned(),
        eig.values.slice(ndarray::s![..r]).to_owned(),
    ))
}

fn normalize_columns(alphas: &mut Array2<f64>, k: &Array2<f64>) {
    for mut col in alphas.axis_iter_mut(Axis(1)) {
        let quad = col.dot(&k.dot(&col));
        if quad > 0.0 {
            let scale = 1.0 / quad.sqrt();
            col.mapv_inplace(|v| v * scale);
        }
        // A numerically zero feature stays as-is; there is nothing to scale.
    }
}

fn cluster_indicators(d: &Dataset) -> Array2<f64> {
    let mut e = Array2::zeros((d.sample_count(), d.cluster_count()));
    for (i, &l) in d.labels().iter().enumerate() {
        e[(i, l)] = 1.0;
    }
    e
}

/// Classical kernel solver: solve `UᵀWUβ = λβ`, map back through `α = UΓ†β`,
/// and keep the top `C−1` features.
pub fn fit_classical(d: &Dataset, desc: &KernelDescriptor) -> Result<KernelModel> {
    fit_classical_with(d, desc, None)
}

pub fn fit_classical_with(
    d: &Dataset,
    desc: &KernelDescriptor,
    rtol: Option<f64>,
) -> Result<KernelModel> {
    let (k, center) = working_kernel(d, desc)?;
    let (u, gamma) = kernel_eig(&k, rtol)?;
    let w = w_matrix(d);
    let compressed = u.t().dot(&w).dot(&u);
    let eig = sym_eig(compressed.view())?;
    let f = (d.cluster_count() - 1).min(eig.values.len());
    let betas = eig.vectors.slice(ndarray::s![.., ..f]);
    let mut u_scaled = u.clone();
    for (mut col, &g) in u_scaled.axis_iter_mut(Axis(1)).zip(gamma.iter()) {
        col.mapv_inplace(|v| v / g);
    }
    let mut alphas = u_scaled.dot(&betas);
    normalize_columns(&mut alphas, &k);
    let features = k.dot(&alphas);
    let objective = feature_objective(features.view(), d.labels())?;
    Ok(KernelModel {
        alphas,
        x_train: d.x().to_owned(),
        descriptor: desc.clone(),
        normalized: true,
        eigenvalues: eig.values.slice(ndarray::s![..f]).to_owned(),
        solver: KernelSolverKind::Classical,
        objective,
        center,
    })
}

/// Prototype kernel solver: `α^(c) = K†e^(c)` through the eigendecomposition
/// of `K`, one feature per cluster. For strictly positive definite kernels
/// every recorded eigenvalue is 1; for merely PSD kernels the Rayleigh
/// quotients of `Wβ = λβ` are recorded without any guarantee.
pub fn fit_ldapp(d: &Dataset, desc: &KernelDescriptor) -> Result<KernelModel> {
    fit_ldapp_with(d, desc, None)
}

pub fn fit_ldapp_with(
    d: &Dataset,
    desc: &KernelDescriptor,
    rtol: Option<f64>,
) -> Result<KernelModel> {
    let (k, center) = working_kernel(d, desc)?;
    let (u, gamma) = kernel_eig(&k, rtol)?;
    let e = cluster_indicators(d);
    let mut coords = u.t().dot(&e); // r×C
    for (mut row, &g) in coords.outer_iter_mut().zip(gamma.iter()) {
        row.mapv_inplace(|v| v / g);
    }
    let mut alphas = u.dot(&coords); // N×C, column c = K†e^(c)
    let w = w_matrix(d);
    let betas = k.dot(&alphas);
    let mut counts = vec![0usize; d.cluster_count()];
    for &l in d.labels() {
        counts[l] += 1;
    }
    let mut eigenvalues = Array1::zeros(d.cluster_count());
    for (c, beta) in betas.axis_iter(Axis(1)).enumerate() {
        let denom = beta.dot(&beta);
        // An indicator numerically outside range(K) reconstructs to nothing;
        // its coefficient column is roundoff and the feature is null.
        if denom < 1e-16 * counts[c] as f64 {
            alphas.column_mut(c).fill(0.0);
            eigenvalues[c] = 0.0;
            continue;
        }
        eigenvalues[c] = beta.dot(&w.dot(&beta)) / denom;
    }
    normalize_columns(&mut alphas, &k);
    let features = k.dot(&alphas);
    let objective = feature_objective(features.view(), d.labels())?;
    Ok(KernelModel {
        alphas,
        x_train: d.x().to_owned(),
        descriptor: desc.clone(),
        normalized: true,
        eigenvalues,
        solver: KernelSolverKind::Ldapp,
        objective,
        center,
    })
}

/// Features of new rows: `k(X_new, X_train)·alphas`, with test kernel columns
/// centered consistently with the training-time centering.
pub fn kernel_transform(model: &KernelModel, x_new: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x_new.ncols() != model.dim() {
        return Err(Error::ShapeMismatch(format!(
            "query width {} does not match training width {}",
            x_new.ncols(),
            model.dim()
        )));
    }
    let mut k_test = kernel_matrix(&model.descriptor, x_new, model.x_train.view())?;
    if let Some(center) = &model.center {
        let n = model.train_count() as f64;
        let row_means: Array1<f64> = k_test.sum_axis(Axis(1)).mapv(|v| v / n);
        for ((i, j), v) in k_test.indexed_iter_mut() {
            *v += center.grand_mean - row_means[i] - center.col_means[j];
        }
    }
    Ok(k_test.dot(&model.alphas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gaussian_kernel_values() {
        let desc = KernelDescriptor::gaussian(10f64.sqrt()).unwrap(); // σ² = 10
        let xa = array![[0.0, 0.0]];
        let xb = array![[0.0, 0.0], [10f64.sqrt(), 0.0]];
        let k = kernel_matrix(&desc, xa.view(), xb.view()).unwrap();
        assert!((k[(0, 0)] - 1.0).abs() < 1e-12); // x = z
        assert!((k[(0, 1)] - (-1.0f64).exp()).abs() < 1e-12); // ‖x−z‖² = σ²
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        assert!(KernelDescriptor::gaussian(0.0).is_err());
        assert!(KernelDescriptor::gaussian(-1.0).is_err());
    }

    #[test]
    fn w_matrix_singleton_clusters_is_identity() {
        let d = Dataset::new(array![[0.0], [1.0], [2.0]], vec![0, 1, 2]).unwrap();
        let w = w_matrix(&d);
        let diff = &w - &Array2::<f64>::eye(3);
        assert!(diff.iter().all(|v| v.abs() == 0.0));
    }

    #[test]
    fn w_matrix_single_cluster_is_uniform() {
        let d = Dataset::new(array![[0.0], [1.0], [2.0]], vec![0, 0, 0]).unwrap();
        let w = w_matrix(&d);
        assert!(w.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn w_matrix_projection_identities() {
        let d = Dataset::new(
            array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]],
            vec![1, 0, 1, 2, 0, 1],
        )
        .unwrap();
        let w = w_matrix(&d);
        let w2 = w.dot(&w);
        let diff = &w2 - &w;
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
        assert!((w.diag().sum() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_transform_on_train_rows_matches_fit_features() {
        let x = array![[0.0, 0.1], [1.0, 0.9], [0.2, -0.1], [1.1, 1.2]];
        let d = Dataset::new(x, vec![0, 1, 0, 1]).unwrap();
        let desc = KernelDescriptor::gaussian(1.0).unwrap();
        let m = fit_ldapp(&d, &desc).unwrap();
        let (k, _) = working_kernel(&d, &desc).unwrap();
        let expected = k.dot(&m.alphas);
        let got = kernel_transform(&m, d.x()).unwrap();
        let diff = &got - &expected;
        assert!(diff.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn degenerate_single_cluster_constant_feature() {
        let d = Dataset::new(array![[0.0], [1.0], [2.0]], vec![0, 0, 0]).unwrap();
        let desc = KernelDescriptor::gaussian(1.0).unwrap();
        let m = fit_ldapp(&d, &desc).unwrap();
        assert_eq!(m.feature_count(), 1);
        assert_eq!(m.objective, 0.0);
        let y = kernel_transform(&m, d.x()).unwrap();
        let spread = y.iter().cloned().fold(f64::MIN, f64::max)
            - y.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread.abs() < 1e-10);
    }

    #[test]
    fn normalization_sets_unit_kernel_quadratic() {
        let x = array![[0.0, 0.0], [1.0, 0.2], [0.1, 1.0], [1.2, 1.1], [0.5, -0.4], [2.0, 0.3]];
        let d = Dataset::new(x, vec![0, 1, 0, 1, 2, 2]).unwrap();
        let desc = KernelDescriptor::gaussian(0.8).unwrap();
        let m = fit_classical(&d, &desc).unwrap();
        let (k, _) = working_kernel(&d, &desc).unwrap();
        for col in m.alphas.axis_iter(Axis(1)) {
            let quad = col.dot(&k.dot(&col));
            assert!((quad - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let x = array![[0.0, 0.0], [1.0, 0.2], [0.1, 1.0], [1.2, 1.1]];
        let d = Dataset::new(x, vec![0, 1, 0, 1]).unwrap();
        let desc = KernelDescriptor::gaussian(0.8).unwrap();
        let m = fit_ldapp(&d, &desc).unwrap();
        let (k, _) = working_kernel(&d, &desc).unwrap();
        let mut again = m.alphas.clone();
        normalize_columns(&mut again, &k);
        let diff = &again - &m.alphas;
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
    }
}
