//! Cluster statistics and the scatter machinery built from them.
//!
//! Everything uses the `1/N` convention: `S_w = (1/N) Σ_c Σ_{n∈c} (x_n−μ_c)(x_n−μ_c)ᵀ`,
//! `S_b = Σ_c (N_c/N)(μ_c−μ)(μ_c−μ)ᵀ`, and `S_t = (1/N) Σ_n (x_n−μ)(x_n−μ)ᵀ`,
//! so `S_t = S_w + S_b`. The factor forms `H` satisfy `HᵀH = S` and let the
//! high-dimensional solvers run without materializing any `D×D` matrix.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{self, reduced_svd};

/// Per-cluster means and the prototype-difference machinery around them.
///
/// `m` holds one column per cluster, `μ_c − μ`. `m_hat` omits the designated
/// `dropped` column; `n_hat[c] = N_c / N_dropped` reconstructs the omitted
/// column as `μ_dropped − μ = −M̂·N̂`.
#[derive(Debug, Clone)]
pub struct ClusterStats {
    /// Samples per cluster, summing to `N`.
    pub counts: Vec<usize>,
    /// Global mean, length `D`.
    pub mu: Array1<f64>,
    /// Cluster means, `C×D`.
    pub mu_c: Array2<f64>,
    /// Prototype differences `μ_c − μ` as columns, `D×C`.
    pub m: Array2<f64>,
    /// `m` without the dropped column, `D×(C−1)`.
    pub m_hat: Array2<f64>,
    /// Diagonal of `Q`: `N_c / N`.
    pub q: Array1<f64>,
    /// Diagonal of `Q̂`: `q` without the dropped entry.
    pub q_hat: Array1<f64>,
    /// `N_c / N_dropped` over the retained clusters.
    pub n_hat: Array1<f64>,
    /// Index of the cluster omitted from the hatted quantities.
    pub dropped: usize,
}

/// Statistics with the last cluster designated as the dropped one.
pub fn compute_cluster_stats(d: &Dataset) -> Result<ClusterStats> {
    compute_cluster_stats_dropping(d, d.cluster_count() - 1)
}

/// Statistics with an explicit choice of dropped cluster.
pub fn compute_cluster_stats_dropping(d: &Dataset, dropped: usize) -> Result<ClusterStats> {
    let c = d.cluster_count();
    let (n, dim) = (d.sample_count(), d.dim());
    if dropped >= c {
        return Err(Error::InvalidInput(format!(
            "dropped cluster {dropped} out of range for {c} clusters"
        )));
    }
    let x = d.x();
    let mut counts = vec![0usize; c];
    let mut mu_c = Array2::<f64>::zeros((c, dim));
    for (row, &label) in x.outer_iter().zip(d.labels()) {
        counts[label] += 1;
        let mut acc = mu_c.row_mut(label);
        acc += &row;
    }
    for (cluster, (mut row, &count)) in mu_c.outer_iter_mut().zip(&counts).enumerate() {
        if count == 0 {
            // Unreachable through Dataset, kept as the contract of this op.
            return Err(Error::EmptyCluster(cluster));
        }
        row.mapv_inplace(|v| v / count as f64);
    }
    let mu = x.mean_axis(Axis(0)).expect("dataset is non-empty");

    let m = (&mu_c - &mu).t().to_owned();
    let mut m_hat = Array2::zeros((dim, c - 1));
    let mut q_hat = Array1::zeros(c - 1);
    let mut n_hat = Array1::zeros(c - 1);
    let mut k = 0;
    for j in 0..c {
        if j == dropped {
            continue;
        }
        m_hat.column_mut(k).assign(&m.column(j));
        q_hat[k] = counts[j] as f64 / n as f64;
        n_hat[k] = counts[j] as f64 / counts[dropped] as f64;
        k += 1;
    }
    let q = Array1::from_iter(counts.iter().map(|&k| k as f64 / n as f64));
    Ok(ClusterStats {
        counts,
        mu,
        mu_c,
        m,
        m_hat,
        q,
        q_hat,
        n_hat,
        dropped,
    })
}

/// The three `D×D` scatter matrices.
#[derive(Debug, Clone)]
pub struct ScatterSet {
    pub s_w: Array2<f64>,
    pub s_b: Array2<f64>,
    pub s_t: Array2<f64>,
}

fn symmetrize(mut a: Array2<f64>) -> Array2<f64> {
    let t = a.t().to_owned();
    a += &t;
    a *= 0.5;
    a
}

/// Dense scatter matrices; `s_t` is computed independently of `s_w + s_b`.
pub fn compute_scatter(d: &Dataset, stats: &ClusterStats) -> Result<ScatterSet> {
    let factors = compute_factors(d, stats)?;
    Ok(ScatterSet {
        s_w: symmetrize(factors.h_w.t().dot(&factors.h_w)),
        s_b: symmetrize(factors.h_b.t().dot(&factors.h_b)),
        s_t: symmetrize(factors.h_t.t().dot(&factors.h_t)),
    })
}

/// Tall factor matrices with `HᵀH` equal to the corresponding scatter matrix.
#[derive(Debug, Clone)]
pub struct FactorSet {
    /// `N×D`, row `n` is `(x_n − μ_{c(n)}) / √N`.
    pub h_w: Array2<f64>,
    /// `C×D`, row `c` is `√(N_c/N) (μ_c − μ)`.
    pub h_b: Array2<f64>,
    /// `N×D`, `(X − eμᵀ) / √N`.
    pub h_t: Array2<f64>,
}

pub fn compute_factors(d: &Dataset, stats: &ClusterStats) -> Result<FactorSet> {
    let (n, dim) = (d.sample_count(), d.dim());
    let c = d.cluster_count();
    if stats.counts.len() != c || stats.mu.len() != dim {
        return Err(Error::ShapeMismatch(
            "cluster statistics do not match the dataset".into(),
        ));
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut h_w = d.x().to_owned();
    for (mut row, &label) in h_w.outer_iter_mut().zip(d.labels()) {
        row -= &stats.mu_c.row(label);
        row.mapv_inplace(|v| v * inv_sqrt_n);
    }
    let mut h_t = d.x().to_owned();
    for mut row in h_t.outer_iter_mut() {
        row -= &stats.mu;
        row.mapv_inplace(|v| v * inv_sqrt_n);
    }
    let mut h_b = (&stats.mu_c - &stats.mu).to_owned();
    for (mut row, &q) in h_b.outer_iter_mut().zip(stats.q.iter()) {
        let w = q.sqrt();
        row.mapv_inplace(|v| v * w);
    }
    Ok(FactorSet { h_w, h_b, h_t })
}

/// `S + λI` for the explicit-scatter path.
pub fn regularize_dense(s: ArrayView2<'_, f64>, lambda: f64) -> Result<Array2<f64>> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "regularization lambda must be nonnegative, got {lambda}"
        )));
    }
    let mut out = s.to_owned();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] += lambda;
    }
    Ok(out)
}

/// Factored form of `HᵀH + λI` exposing its exact inverse.
///
/// With `H = UΣVᵀ` reduced, the inverse is
/// `V (Σ²+λI)⁻¹ Vᵀ + (1/λ)(I − VVᵀ)` for `λ > 0`, and the pseudoinverse
/// `V Σ⁻² Vᵀ` for `λ = 0`. Nothing `D×D` is ever formed.
#[derive(Debug, Clone)]
pub struct RegularizedFactor {
    v: Array2<f64>,
    sigma: Array1<f64>,
    lambda: f64,
}

/// Builds the regularized description of `HᵀH` from the factor `H`.
pub fn regularize_factored(
    h: ArrayView2<'_, f64>,
    lambda: f64,
    rtol: Option<f64>,
) -> Result<RegularizedFactor> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "regularization lambda must be nonnegative, got {lambda}"
        )));
    }
    let svd = reduced_svd(h, rtol)?;
    Ok(RegularizedFactor {
        v: svd.v,
        sigma: svd.sigma,
        lambda,
    })
}

impl RegularizedFactor {
    /// Orthonormal basis of `range(HᵀH)`, `D×r`.
    pub fn v(&self) -> ArrayView2<'_, f64> {
        self.v.view()
    }

    /// Singular values of `H` on the retained range.
    pub fn sigma(&self) -> &Array1<f64> {
        &self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `1/(σ_i² + λ)` per retained component.
    pub fn inv_eigenvalues(&self) -> Array1<f64> {
        self.sigma.mapv(|s| 1.0 / (s * s + self.lambda))
    }

    /// `1/√(σ_i² + λ)` per retained component.
    pub fn inv_sqrt_eigenvalues(&self) -> Array1<f64> {
        self.sigma.mapv(|s| 1.0 / (s * s + self.lambda).sqrt())
    }

    /// `(HᵀH + λI)⁻¹ B`, exact for `λ > 0`; `(HᵀH)† B` for `λ = 0`.
    pub fn inverse_apply(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.apply_scaled(b, self.inv_eigenvalues(), 1.0 / self.lambda)
    }

    /// `(HᵀH + λI)^{−1/2} B` (pseudoinverse square root for `λ = 0`).
    pub fn inv_sqrt_apply(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.apply_scaled(b, self.inv_sqrt_eigenvalues(), 1.0 / self.lambda.sqrt())
    }

    fn apply_scaled(
        &self,
        b: ArrayView2<'_, f64>,
        scale: Array1<f64>,
        complement_scale: f64,
    ) -> Result<Array2<f64>> {
        if b.nrows() != self.v.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "operand has {} rows, factor dimension is {}",
                b.nrows(),
                self.v.nrows()
            )));
        }
        let mut coords = self.v.t().dot(&b); // r × k
        let in_range = {
            let mut scaled = coords.clone();
            for (mut row, &s) in scaled.outer_iter_mut().zip(scale.iter()) {
                row.mapv_inplace(|v| v * s);
            }
            self.v.dot(&scaled)
        };
        if self.lambda == 0.0 {
            return Ok(in_range);
        }
        // complement component: (1/λ)(B − V VᵀB)
        coords = self.v.dot(&coords);
        let mut out = b.to_owned();
        out -= &coords;
        out.mapv_inplace(|v| v * complement_scale);
        out += &in_range;
        Ok(out)
    }
}

/// `tr{S₁ · S₂†}`-style helper: feature-space scatters `AᵀS_tA`, `AᵀS_bA`
/// computable from either representation.
pub trait ScatterProjector {
    /// Returns `(AᵀS_tA, AᵀS_bA)` for a `D×F` transform.
    fn feature_scatters(&self, a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)>;
}

impl ScatterProjector for ScatterSet {
    fn feature_scatters(&self, a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        if a.nrows() != self.s_t.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "transform has {} rows, scatter dimension is {}",
                a.nrows(),
                self.s_t.nrows()
            )));
        }
        let st = a.t().dot(&self.s_t).dot(&a);
        let sb = a.t().dot(&self.s_b).dot(&a);
        Ok((symmetrize(st), symmetrize(sb)))
    }
}

impl ScatterProjector for FactorSet {
    fn feature_scatters(&self, a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        if a.nrows() != self.h_t.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "transform has {} rows, factor dimension is {}",
                a.nrows(),
                self.h_t.ncols()
            )));
        }
        let ta = self.h_t.dot(&a);
        let ba = self.h_b.dot(&a);
        Ok((symmetrize(ta.t().dot(&ta)), symmetrize(ba.t().dot(&ba))))
    }
}

/// Max-abs entry, used by the closure checks in tests.
pub fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Condition-number gate (`< 1e12`) under which `S_w†M` is guaranteed optimal:
/// both `S_w` and `M̂ᵀS_w⁻¹M̂` must be well-conditioned.
pub fn sw_optimality_gate(scatter: &ScatterSet, stats: &ClusterStats) -> Result<bool> {
    const LIMIT: f64 = 1e12;
    let cond_w = numerics::condition_number(scatter.s_w.view())?;
    if !(cond_w < LIMIT) {
        return Ok(false);
    }
    let sw_inv = numerics::pseudo_inverse(scatter.s_w.view(), None)?;
    let r = stats.m_hat.t().dot(&sw_inv).dot(&stats.m_hat);
    let cond_r = numerics::condition_number(r.view())?;
    Ok(cond_r < LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use ndarray::array;

    fn two_point_dataset() -> Dataset {
        Dataset::new(array![[0.0, 0.0], [2.0, 0.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn symmetric_two_point_prototypes() {
        let d = two_point_dataset();
        let s = compute_cluster_stats(&d).unwrap();
        assert_eq!(s.mu.to_vec(), vec![1.0, 0.0]);
        assert_eq!(s.m.column(0).to_vec(), vec![-1.0, 0.0]);
        assert_eq!(s.m.column(1).to_vec(), vec![1.0, 0.0]);
        assert_eq!(s.n_hat.to_vec(), vec![1.0]);
        // μ_dropped − μ = −M̂·N̂
        let recon = s.m_hat.dot(&s.n_hat).mapv(|v| -v);
        let direct = s.m.column(s.dropped).to_owned();
        assert!((recon - direct).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_cluster_has_zero_prototype_matrix() {
        let d = Dataset::new(array![[1.0, 2.0], [3.0, 4.0]], vec![0, 0]).unwrap();
        let s = compute_cluster_stats(&d).unwrap();
        assert_eq!(s.m.dim(), (2, 1));
        assert!(s.m.iter().all(|&v| v == 0.0));
        assert_eq!(s.m_hat.dim(), (2, 0));
    }

    #[test]
    fn singleton_clusters_put_everything_in_between_scatter() {
        let d = Dataset::new(array![[0.0, 1.0], [4.0, -1.0], [2.0, 5.0]], vec![0, 1, 2]).unwrap();
        let s = compute_cluster_stats(&d).unwrap();
        let sc = compute_scatter(&d, &s).unwrap();
        assert!(max_abs(sc.s_w.view()) < 1e-15);
        let diff = &sc.s_b - &sc.s_t;
        assert!(max_abs(diff.view()) < 1e-12);
    }

    #[test]
    fn identical_samples_zero_all_scatter() {
        let d = Dataset::new(array![[3.0, 3.0], [3.0, 3.0], [3.0, 3.0]], vec![0, 0, 1]).unwrap();
        let s = compute_cluster_stats(&d).unwrap();
        let sc = compute_scatter(&d, &s).unwrap();
        let f = compute_factors(&d, &s).unwrap();
        assert!(max_abs(sc.s_w.view()) == 0.0);
        assert!(max_abs(sc.s_b.view()) == 0.0);
        assert!(max_abs(sc.s_t.view()) == 0.0);
        assert!(max_abs(f.h_t.view()) == 0.0);
    }

    #[test]
    fn factor_row_norms_match_between_scatter_weights() {
        // Two clusters of sizes 1 and 3.
        let d = Dataset::new(
            array![[4.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 0.0]],
            vec![0, 1, 1, 1],
        )
        .unwrap();
        let s = compute_cluster_stats(&d).unwrap();
        let f = compute_factors(&d, &s).unwrap();
        let n = d.sample_count() as f64;
        for c in 0..2 {
            let row = f.h_b.row(c);
            let norm = row.dot(&row).sqrt();
            let proto = s.m.column(c);
            let expected = (s.counts[c] as f64 / n).sqrt() * proto.dot(&proto).sqrt();
            assert!((norm - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn regularize_dense_identity_shift() {
        let zero = Array2::<f64>::zeros((3, 3));
        let out = regularize_dense(zero.view(), 1.0).unwrap();
        assert_eq!(out, Array2::eye(3));
        let same = regularize_dense(out.view(), 0.0).unwrap();
        assert_eq!(same, out);
        assert!(regularize_dense(zero.view(), -0.5).is_err());
    }

    #[test]
    fn factored_inverse_matches_dense_inverse() {
        // Rank-deficient PSD S_t in D=6 from a 4×6 factor, λ=10.
        let h = Array2::from_shape_fn((4, 6), |(i, j)| ((i * 7 + j * 5) % 11) as f64 / 3.0 - 1.5);
        let s_t = h.t().dot(&h);
        let lambda = 10.0;
        let rf = regularize_factored(h.view(), lambda, None).unwrap();
        let applied = rf.inverse_apply(Array2::eye(6).view()).unwrap();
        let dense = regularize_dense(s_t.view(), lambda).unwrap();
        let dense_inv = crate::numerics::pseudo_inverse(dense.view(), None).unwrap();
        let diff = &applied - &dense_inv;
        assert!(max_abs(diff.view()) < 1e-10);
    }

    #[test]
    fn factored_inverse_sqrt_squares_to_inverse() {
        let h = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 3 + j) % 7) as f64 - 3.0);
        let rf = regularize_factored(h.view(), 2.5, None).unwrap();
        let b = Array2::eye(4);
        let once = rf.inv_sqrt_apply(b.view()).unwrap();
        let twice = rf.inv_sqrt_apply(once.view()).unwrap();
        let direct = rf.inverse_apply(b.view()).unwrap();
        let diff = &twice - &direct;
        assert!(max_abs(diff.view()) < 1e-12);
    }
}
