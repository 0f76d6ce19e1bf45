//! The linear solver family over `J(A) = tr{(AᵀS_tA)† AᵀS_bA}`, the objective
//! evaluator, Bayes classifier weights, and eigensystem residual checks.
//!
//! All four solvers maximize the same objective; they differ in the basis they
//! return. `lda++` and `sw-pinv-m` produce one column per cluster, each column
//! scoring similarity to that cluster's prototype. `eig-lda` returns the
//! classical `C−1` generalized eigenvectors, and `eig-lda++` is `lda++`
//! right-multiplied by the eigenbasis of `Q MᵀS_t†M`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{self, default_rtol, pseudo_inverse, reduced_svd, sym_eig};
use crate::scatter::{
    compute_cluster_stats, compute_factors, compute_scatter, regularize_dense,
    regularize_factored, ClusterStats, ScatterProjector,
};

/// Relative cutoff below which an eigenvalue is treated as zero when deciding
/// which feature directions to retain.
const EIGENVALUE_RETENTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "eig-lda")]
    EigLda,
    #[serde(rename = "lda++")]
    Ldapp,
    #[serde(rename = "eig-lda++")]
    EigLdapp,
    #[serde(rename = "sw-pinv-m")]
    SwPinvM,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverKind::EigLda => "eig-lda",
            SolverKind::Ldapp => "lda++",
            SolverKind::EigLdapp => "eig-lda++",
            SolverKind::SwPinvM => "sw-pinv-m",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig-lda" => Ok(SolverKind::EigLda),
            "lda++" => Ok(SolverKind::Ldapp),
            "eig-lda++" => Ok(SolverKind::EigLdapp),
            "sw-pinv-m" => Ok(SolverKind::SwPinvM),
            other => Err(Error::InvalidInput(format!(
                "unknown solver '{other}' (expected eig-lda, lda++, eig-lda++, or sw-pinv-m)"
            ))),
        }
    }
}

/// Numerical regime: explicit `D×D` scatter matrices vs factored two-SVD path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "ldlss")]
    Ldlss,
    #[serde(rename = "hdsss")]
    Hdsss,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Ldlss => "ldlss",
            Mode::Hdsss => "hdsss",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ldlss" => Ok(Mode::Ldlss),
            "hdsss" => Ok(Mode::Hdsss),
            other => Err(Error::InvalidInput(format!(
                "unknown mode '{other}' (expected ldlss or hdsss)"
            ))),
        }
    }
}

/// Solver choice plus its parameters, as consumed by [`fit`] and the
/// cross-validation harness.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub solver: SolverKind,
    pub mode: Mode,
    pub lambda: f64,
    /// Rank cutoff override; `None` uses the numerics default.
    pub rtol: Option<f64>,
}

impl SolverConfig {
    pub fn new(solver: SolverKind, mode: Mode, lambda: f64) -> Self {
        Self {
            solver,
            mode,
            lambda,
            rtol: None,
        }
    }
}

/// A fitted linear transform: columns of `a` are feature extractors applied to
/// mean-centered queries.
#[derive(Debug, Clone)]
pub struct LdaModel {
    /// `D×F` transform.
    pub a: Array2<f64>,
    /// Training global mean, subtracted from queries.
    pub mean: Array1<f64>,
    pub solver: SolverKind,
    pub mode: Mode,
    pub lambda: f64,
    /// For prototype-based solvers, the cluster each feature scores.
    pub prototype_index: Option<Vec<usize>>,
    /// Objective value `J(a)` at fit time.
    pub objective: f64,
}

impl LdaModel {
    pub fn feature_count(&self) -> usize {
        self.a.ncols()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// `J(A) = tr{(AᵀS_tA)† AᵀS_bA}` from explicit scatter matrices.
pub fn objective(
    a: ArrayView2<'_, f64>,
    s_t: ArrayView2<'_, f64>,
    s_b: ArrayView2<'_, f64>,
) -> Result<f64> {
    for (name, m) in [("A", &a), ("S_t", &s_t), ("S_b", &s_b)] {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry in {name}")));
        }
    }
    if s_t.dim() != (a.nrows(), a.nrows()) || s_b.dim() != (a.nrows(), a.nrows()) {
        return Err(Error::ShapeMismatch(format!(
            "transform is {}×{}, scatter matrices must be {dim}×{dim}",
            a.nrows(),
            a.ncols(),
            dim = a.nrows()
        )));
    }
    let st_y = a.t().dot(&s_t).dot(&a);
    let sb_y = a.t().dot(&s_b).dot(&a);
    objective_from_feature_scatters(&st_y, &sb_y)
}

/// `J` from an object that can project its scatter into feature space.
pub fn objective_of(source: &impl ScatterProjector, a: ArrayView2<'_, f64>) -> Result<f64> {
    let (st_y, sb_y) = source.feature_scatters(a)?;
    objective_from_feature_scatters(&st_y, &sb_y)
}

fn objective_from_feature_scatters(st_y: &Array2<f64>, sb_y: &Array2<f64>) -> Result<f64> {
    if st_y.ncols() == 0 {
        return Ok(0.0);
    }
    let inv = pseudo_inverse(st_y.view(), None)?;
    let prod = inv.dot(sb_y);
    Ok(prod.diag().sum())
}

/// `J` of an already-transformed feature set under its cluster labels.
pub fn feature_objective(y: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    if y.ncols() == 0 {
        return Ok(0.0);
    }
    let d = Dataset::new(y.to_owned(), labels.to_vec())?;
    let stats = compute_cluster_stats(&d)?;
    let sc = compute_scatter(&d, &stats)?;
    let inv = pseudo_inverse(sc.s_t.view(), None)?;
    Ok(inv.dot(&sc.s_b).diag().sum())
}

/// Generic two-SVD solver for `H₁ᵀH₁ A = (H₂ᵀH₂ + λI) A Λ`.
///
/// Valid whenever `range(H₁ᵀ) ⊆ range(H₂ᵀ)`, which holds for `H₁ = H_b`,
/// `H₂ = H_t`; running it with `H₂ = H_w` does not solve the eigensystem in
/// general, which [`verify_generalized_eigensystem`] can demonstrate.
pub fn two_svd_eigensolver(
    h1: ArrayView2<'_, f64>,
    h2: ArrayView2<'_, f64>,
    lambda: f64,
    rtol: Option<f64>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if h1.ncols() != h2.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "factor widths differ: {} vs {}",
            h1.ncols(),
            h2.ncols()
        )));
    }
    let rf = regularize_factored(h2, lambda, rtol)?;
    let weights = rf.inv_sqrt_eigenvalues();
    // Y = H₁ V diag(w); its right singular vectors span the whitened solutions.
    let mut y = h1.dot(&rf.v());
    for (mut col, &w) in y.axis_iter_mut(Axis(1)).zip(weights.iter()) {
        col.mapv_inplace(|v| v * w);
    }
    let svd_y = reduced_svd(y.view(), rtol)?;
    let eigenvalues = svd_y.sigma.mapv(|s| s * s);
    let keep = retained_count(&eigenvalues);
    let mut scaled = svd_y.v.slice(ndarray::s![.., ..keep]).to_owned();
    for (mut row, &w) in scaled.outer_iter_mut().zip(weights.iter()) {
        row.mapv_inplace(|v| v * w);
    }
    let a = rf.v().dot(&scaled);
    Ok((a, eigenvalues.slice(ndarray::s![..keep]).to_owned()))
}

fn retained_count(values: &Array1<f64>) -> usize {
    let vmax = values.iter().cloned().fold(0.0f64, f64::max);
    if vmax <= 0.0 {
        return 0;
    }
    values
        .iter()
        .take_while(|&&v| v > EIGENVALUE_RETENTION * vmax)
        .count()
}

/// Classical LDA: generalized eigenvectors of `(S_b, S_t + λI)`, `F = C−1`
/// on generic data (directions with vanishing eigenvalue are excluded).
pub fn eig_lda(d: &Dataset, lambda: f64, mode: Mode) -> Result<LdaModel> {
    eig_lda_with(d, lambda, mode, None)
}

pub(crate) fn eig_lda_with(
    d: &Dataset,
    lambda: f64,
    mode: Mode,
    rtol: Option<f64>,
) -> Result<LdaModel> {
    if d.cluster_count() < 2 {
        return Err(Error::InvalidInput(
            "nothing to discriminate: need at least two clusters".into(),
        ));
    }
    let stats = compute_cluster_stats(d)?;
    let (a, objective) = match mode {
        Mode::Ldlss => {
            let sc = compute_scatter(d, &stats)?;
            let st_reg = regularize_dense(sc.s_t.view(), lambda)?;
            let a = whitened_eig(&st_reg, &sc.s_b, rtol)?;
            let j = objective_of(&sc, a.view())?;
            (a, j)
        }
        Mode::Hdsss => {
            let f = compute_factors(d, &stats)?;
            let (a, _) = two_svd_eigensolver(f.h_b.view(), f.h_t.view(), lambda, rtol)?;
            let j = objective_of(&f, a.view())?;
            (a, j)
        }
    };
    Ok(LdaModel {
        a,
        mean: stats.mu,
        solver: SolverKind::EigLda,
        mode,
        lambda,
        prototype_index: None,
        objective: objective.max(0.0),
    })
}

/// Whiten by the range eigendecomposition of `s2`, then take the symmetric
/// eigenvectors of the whitened `s1`.
fn whitened_eig(s2: &Array2<f64>, s1: &Array2<f64>, rtol: Option<f64>) -> Result<Array2<f64>> {
    let dim = s2.nrows();
    let rtol = rtol.unwrap_or_else(|| default_rtol(dim, dim));
    let eig = sym_eig(s2.view())?;
    let vmax = eig.values.iter().cloned().fold(0.0f64, f64::max);
    let r = eig
        .values
        .iter()
        .take_while(|&&v| v > rtol * vmax && v > 0.0)
        .count();
    let mut wh = eig.vectors.slice(ndarray::s![.., ..r]).to_owned();
    for (mut col, &v) in wh.axis_iter_mut(Axis(1)).zip(eig.values.iter()) {
        let scale = 1.0 / v.sqrt();
        col.mapv_inplace(|x| x * scale);
    }
    let b = wh.t().dot(s1).dot(&wh);
    let inner = sym_eig(b.view())?;
    let keep = retained_count(&inner.values);
    Ok(wh.dot(&inner.vectors.slice(ndarray::s![.., ..keep])))
}

/// Prototype solver `A = (S_t + λI)† M` with one feature per cluster.
pub fn ldapp(d: &Dataset, lambda: f64, mode: Mode) -> Result<LdaModel> {
    ldapp_with(d, lambda, mode, None)
}

pub(crate) fn ldapp_with(
    d: &Dataset,
    lambda: f64,
    mode: Mode,
    rtol: Option<f64>,
) -> Result<LdaModel> {
    let stats = compute_cluster_stats(d)?;
    let (a, objective) = ldapp_transform(d, &stats, lambda, mode, rtol)?;
    let c = d.cluster_count();
    Ok(LdaModel {
        a,
        mean: stats.mu,
        solver: SolverKind::Ldapp,
        mode,
        lambda,
        prototype_index: Some((0..c).collect()),
        objective: objective.max(0.0),
    })
}

fn ldapp_transform(
    d: &Dataset,
    stats: &ClusterStats,
    lambda: f64,
    mode: Mode,
    rtol: Option<f64>,
) -> Result<(Array2<f64>, f64)> {
    match mode {
        Mode::Ldlss => {
            let sc = compute_scatter(d, stats)?;
            let st_reg = regularize_dense(sc.s_t.view(), lambda)?;
            let a = numerics::least_squares_minnorm(st_reg.view(), stats.m.view(), rtol)?;
            let j = objective_of(&sc, a.view())?;
            Ok((a, j))
        }
        Mode::Hdsss => {
            let f = compute_factors(d, stats)?;
            let rf = regularize_factored(f.h_t.view(), lambda, rtol)?;
            let a = rf.inverse_apply(stats.m.view())?;
            let j = objective_of(&f, a.view())?;
            Ok((a, j))
        }
    }
}

/// Eigenbasis `Z` of `diag(q) P Z = Z Λ` via the symmetric similarity
/// `Q^{1/2} P Q^{1/2}`; `q` must be strictly positive and `P` symmetric PSD.
pub fn metric_change(p: ArrayView2<'_, f64>, q: ArrayView1<'_, f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let c = p.nrows();
    if p.ncols() != c || q.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "metric change needs square P and matching q, got {}×{} and {}",
            p.nrows(),
            p.ncols(),
            q.len()
        )));
    }
    if q.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("cluster weights must be positive".into()));
    }
    let sq = q.mapv(f64::sqrt);
    let mut s = p.to_owned();
    for ((i, j), v) in s.indexed_iter_mut() {
        *v *= sq[i] * sq[j];
    }
    let eig = sym_eig(s.view())?;
    let mut z = eig.vectors;
    for (mut row, &w) in z.outer_iter_mut().zip(sq.iter()) {
        row.mapv_inplace(|v| v * w);
    }
    Ok((z, eig.values))
}

/// `lda++` composed with the metric-changing eigenbasis of `Q MᵀS_t†M`.
pub fn eig_ldapp(d: &Dataset, lambda: f64, mode: Mode) -> Result<LdaModel> {
    eig_ldapp_with(d, lambda, mode, None)
}

pub(crate) fn eig_ldapp_with(
    d: &Dataset,
    lambda: f64,
    mode: Mode,
    rtol: Option<f64>,
) -> Result<LdaModel> {
    let stats = compute_cluster_stats(d)?;
    let (a0, _) = ldapp_transform(d, &stats, lambda, mode, rtol)?;
    let p = stats.m.t().dot(&a0);
    let (z, _values) = metric_change(p.view(), stats.q.view())?;
    let a = a0.dot(&z);
    let objective = match mode {
        Mode::Ldlss => {
            let sc = compute_scatter(d, &stats)?;
            objective_of(&sc, a.view())?
        }
        Mode::Hdsss => {
            let f = compute_factors(d, &stats)?;
            objective_of(&f, a.view())?
        }
    };
    Ok(LdaModel {
        a,
        mean: stats.mu,
        solver: SolverKind::EigLdapp,
        mode,
        lambda,
        prototype_index: None,
        objective: objective.max(0.0),
    })
}

/// Within-scatter solution `A = (S_w + λI)† M`; optimal only when `S_w` and
/// `M̂ᵀS_w⁻¹M̂` are invertible (see [`crate::scatter::sw_optimality_gate`]).
pub fn sw_solution(d: &Dataset, lambda: f64) -> Result<LdaModel> {
    sw_solution_with(d, lambda, None)
}

pub(crate) fn sw_solution_with(d: &Dataset, lambda: f64, rtol: Option<f64>) -> Result<LdaModel> {
    let stats = compute_cluster_stats(d)?;
    let sc = compute_scatter(d, &stats)?;
    let sw_reg = regularize_dense(sc.s_w.view(), lambda)?;
    let a = numerics::least_squares_minnorm(sw_reg.view(), stats.m.view(), rtol)?;
    let objective = objective_of(&sc, a.view())?;
    let c = d.cluster_count();
    Ok(LdaModel {
        a,
        mean: stats.mu,
        solver: SolverKind::SwPinvM,
        mode: Mode::Ldlss,
        lambda,
        prototype_index: Some((0..c).collect()),
        objective: objective.max(0.0),
    })
}

/// Dispatch on the configured solver.
pub fn fit(d: &Dataset, cfg: &SolverConfig) -> Result<LdaModel> {
    match cfg.solver {
        SolverKind::EigLda => eig_lda_with(d, cfg.lambda, cfg.mode, cfg.rtol),
        SolverKind::Ldapp => ldapp_with(d, cfg.lambda, cfg.mode, cfg.rtol),
        SolverKind::EigLdapp => eig_ldapp_with(d, cfg.lambda, cfg.mode, cfg.rtol),
        SolverKind::SwPinvM => sw_solution_with(d, cfg.lambda, cfg.rtol),
    }
}

/// Removes one feature column; any `C−1` columns of a `C`-feature prototype
/// model still attain the optimum. The objective is recomputed from `source`.
pub fn drop_feature(
    model: &LdaModel,
    feature: usize,
    source: &impl ScatterProjector,
) -> Result<LdaModel> {
    let f = model.feature_count();
    if feature >= f {
        return Err(Error::InvalidInput(format!(
            "feature {feature} out of range for a model with {f} features"
        )));
    }
    let kept: Vec<usize> = (0..f).filter(|&j| j != feature).collect();
    let a = model.a.select(Axis(1), &kept);
    let prototype_index = model
        .prototype_index
        .as_ref()
        .map(|idx| kept.iter().map(|&j| idx[j]).collect());
    let objective = objective_of(source, a.view())?;
    Ok(LdaModel {
        a,
        mean: model.mean.clone(),
        solver: model.solver,
        mode: model.mode,
        lambda: model.lambda,
        prototype_index,
        objective: objective.max(0.0),
    })
}

/// Features of mean-centered queries: `(X − 1·meanᵀ)·A`.
pub fn transform(model: &LdaModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::ShapeMismatch(format!(
            "query width {} does not match model dimension {}",
            x.ncols(),
            model.dim()
        )));
    }
    let centered = &x - &model.mean;
    Ok(centered.dot(&model.a))
}

/// The PCA-factored route to the same features: with `S_t = ΦΛΦᵀ` and
/// `Σ² = Λ†`, computes `(ΣΦᵀM)ᵀ(ΣΦᵀ(x−μ))`, which equals [`transform`] for an
/// unregularized `lda++` model.
pub fn pca_factored_transform(
    d: &Dataset,
    model: &LdaModel,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if model.solver != SolverKind::Ldapp || model.lambda != 0.0 {
        return Err(Error::InvalidInput(
            "PCA-factored transform applies to unregularized lda++ models only".into(),
        ));
    }
    if x.ncols() != model.dim() {
        return Err(Error::ShapeMismatch(format!(
            "query width {} does not match model dimension {}",
            x.ncols(),
            model.dim()
        )));
    }
    let stats = compute_cluster_stats(d)?;
    let sc = compute_scatter(d, &stats)?;
    let eig = sym_eig(sc.s_t.view())?;
    let dim = model.dim();
    let rtol = default_rtol(dim, dim);
    let vmax = eig.values.iter().cloned().fold(0.0f64, f64::max);
    let r = eig
        .values
        .iter()
        .take_while(|&&v| v > rtol * vmax && v > 0.0)
        .count();
    let phi = eig.vectors.slice(ndarray::s![.., ..r]);
    let inv_sqrt: Array1<f64> = eig.values.slice(ndarray::s![..r]).mapv(|v| 1.0 / v.sqrt());

    let m_used = match &model.prototype_index {
        Some(idx) => stats.m.select(Axis(1), idx),
        None => stats.m.clone(),
    };
    let mut proto_side = phi.t().dot(&m_used); // r×F
    for (mut row, &s) in proto_side.outer_iter_mut().zip(inv_sqrt.iter()) {
        row.mapv_inplace(|v| v * s);
    }
    let centered = &x - &model.mean;
    let mut query_side = phi.t().dot(&centered.t()); // r×M
    for (mut row, &s) in query_side.outer_iter_mut().zip(inv_sqrt.iter()) {
        row.mapv_inplace(|v| v * s);
    }
    Ok(query_side.t().dot(&proto_side))
}

/// Max-abs residual of `S₁A − S₂A·diag(eigenvalues)`.
pub fn verify_generalized_eigensystem(
    s1: ArrayView2<'_, f64>,
    s2: ArrayView2<'_, f64>,
    a: ArrayView2<'_, f64>,
    eigenvalues: ArrayView1<'_, f64>,
) -> Result<f64> {
    if s1.dim() != s2.dim() || s1.ncols() != a.nrows() || eigenvalues.len() != a.ncols() {
        return Err(Error::ShapeMismatch(
            "eigensystem residual needs S₁, S₂ square over A's rows and one eigenvalue per column"
                .into(),
        ));
    }
    let left = s1.dot(&a);
    let mut right = s2.dot(&a);
    for (mut col, &v) in right.axis_iter_mut(Axis(1)).zip(eigenvalues.iter()) {
        col.mapv_inplace(|x| x * v);
    }
    let diff = &left - &right;
    Ok(diff.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Linear classifier weights for homoscedastic Gaussian clusters.
#[derive(Debug, Clone)]
pub struct BayesWeights {
    /// `D×C`; column `c` is `S_w⁻¹μ_c`.
    pub w: Array2<f64>,
    /// Per-cluster biases.
    pub b: Array1<f64>,
    /// Cluster priors, summing to one.
    pub priors: Array1<f64>,
}

/// Bayes linear discriminant weights `w_c = S_w⁻¹μ_c`.
///
/// With explicit priors, `b_c = −½μ_cᵀS_w⁻¹μ_c + ln P(c)`. Without, the
/// prior-free discriminator scores `L_c = w_cᵀx − ½μ_cᵀS_w⁻¹μ_c` are produced
/// and the empirical frequencies `N_c/N` are recorded as priors.
pub fn bayes_weights(
    stats: &ClusterStats,
    s_w: ArrayView2<'_, f64>,
    priors: Option<&[f64]>,
) -> Result<BayesWeights> {
    let dim = stats.mu.len();
    let c = stats.counts.len();
    if s_w.dim() != (dim, dim) {
        return Err(Error::ShapeMismatch(format!(
            "S_w must be {dim}×{dim}, got {}×{}",
            s_w.nrows(),
            s_w.ncols()
        )));
    }
    let svd = reduced_svd(s_w, None)?;
    if svd.rank < dim {
        return Err(Error::SingularWithinScatter);
    }
    let sw_inv = pseudo_inverse(s_w, None)?;
    let w = sw_inv.dot(&stats.mu_c.t()); // D×C
    let n: usize = stats.counts.iter().sum();
    let priors = match priors {
        Some(p) => {
            if p.len() != c {
                return Err(Error::ShapeMismatch(format!(
                    "{} priors for {c} clusters",
                    p.len()
                )));
            }
            if p.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput("priors must be positive".into()));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "priors sum to {sum}, expected 1"
                )));
            }
            Some(Array1::from(p.to_vec()))
        }
        None => None,
    };
    let mut b = Array1::zeros(c);
    for j in 0..c {
        let quad = stats.mu_c.row(j).dot(&w.column(j));
        b[j] = -0.5 * quad;
        if let Some(p) = &priors {
            b[j] += p[j].ln();
        }
    }
    let priors = priors
        .unwrap_or_else(|| Array1::from_iter(stats.counts.iter().map(|&k| k as f64 / n as f64)));
    Ok(BayesWeights { w, b, priors })
}

impl BayesWeights {
    /// Discriminant scores `w_cᵀx + b_c`.
    pub fn scores(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        &self.w.t().dot(&x) + &self.b
    }

    /// Argmax classification per row; score ties go to the lowest cluster id.
    pub fn classify(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.w.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "query width {} does not match weight dimension {}",
                x.ncols(),
                self.w.nrows()
            )));
        }
        Ok(x.outer_iter()
            .map(|row| {
                let scores = self.scores(row);
                let mut best = 0usize;
                for (j, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn simple_dataset() -> Dataset {
        // Two separated 1-D clusters with zero within-cluster variance.
        Dataset::new(array![[-1.0], [1.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn eig_lda_pure_between_direction() {
        let d = simple_dataset();
        let m = eig_lda(&d, 0.0, Mode::Ldlss).unwrap();
        assert_eq!(m.feature_count(), 1);
        assert!((m.objective - 1.0).abs() < 1e-12);
        let sc = compute_scatter(&d, &compute_cluster_stats(&d).unwrap()).unwrap();
        let ev = array![1.0];
        let res =
            verify_generalized_eigensystem(sc.s_b.view(), sc.s_t.view(), m.a.view(), ev.view())
                .unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn eig_lda_rejects_single_cluster() {
        let d = Dataset::new(array![[0.0], [1.0]], vec![0, 0]).unwrap();
        let err = eig_lda(&d, 0.0, Mode::Ldlss).unwrap_err();
        assert!(err.to_string().contains("nothing to discriminate"));
    }

    #[test]
    fn ldapp_single_cluster_is_zero_model() {
        let d = Dataset::new(array![[1.0, 2.0], [3.0, 1.0]], vec![0, 0]).unwrap();
        let m = ldapp(&d, 0.0, Mode::Ldlss).unwrap();
        assert_eq!(m.feature_count(), 1);
        assert!(m.a.iter().all(|&v| v == 0.0));
        assert_eq!(m.objective, 0.0);
    }

    #[test]
    fn objective_zero_transform() {
        let s = Array2::eye(3);
        let a = Array2::zeros((3, 2));
        assert_eq!(objective(a.view(), s.view(), s.view()).unwrap(), 0.0);
    }

    #[test]
    fn objective_rejects_non_finite() {
        let s = Array2::eye(2);
        let a = array![[f64::INFINITY], [0.0]];
        assert!(objective(a.view(), s.view(), s.view()).is_err());
    }

    #[test]
    fn drop_feature_range_check() {
        let d = simple_dataset();
        let sc = compute_scatter(&d, &compute_cluster_stats(&d).unwrap()).unwrap();
        let m = ldapp(&d, 0.0, Mode::Ldlss).unwrap();
        assert_eq!(m.feature_count(), 2);
        let dropped = drop_feature(&m, 1, &sc).unwrap();
        assert_eq!(dropped.feature_count(), 1);
        assert_eq!(dropped.prototype_index, Some(vec![0]));
        assert!(drop_feature(&dropped, 1, &sc).is_err());
    }

    #[test]
    fn transform_of_mean_is_zero() {
        let d = Dataset::new(array![[0.0, 0.0], [2.0, 2.0], [4.0, 1.0]], vec![0, 1, 1]).unwrap();
        let m = ldapp(&d, 0.0, Mode::Ldlss).unwrap();
        let q = m.mean.clone().insert_axis(Axis(0));
        let y = transform(&m, q.view()).unwrap();
        assert!(y.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn transform_width_mismatch() {
        let d = simple_dataset();
        let m = ldapp(&d, 0.0, Mode::Ldlss).unwrap();
        let q = array![[0.0, 1.0]];
        assert!(transform(&m, q.view()).is_err());
    }

    #[test]
    fn bayes_identity_covariance_recovers_means() {
        let x = array![[2.0, 1.0], [2.2, 0.8], [-1.0, 3.0], [-1.2, 3.2]];
        let d = Dataset::new(x, vec![0, 0, 1, 1]).unwrap();
        let stats = compute_cluster_stats(&d).unwrap();
        let eye = Array2::eye(2);
        let bw = bayes_weights(&stats, eye.view(), None).unwrap();
        let diff = &bw.w - &stats.mu_c.t();
        assert!(diff.iter().all(|v| v.abs() < 1e-12));
        assert!((bw.priors.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bayes_symmetric_boundary_through_origin() {
        // Symmetric cluster means ±μ with identity covariance and equal priors:
        // the decision boundary is μᵀx = 0.
        let x = array![[1.0, 1.0], [-1.0, -1.0]];
        let d = Dataset::new(x, vec![0, 1]).unwrap();
        let stats = compute_cluster_stats(&d).unwrap();
        let eye = Array2::eye(2);
        let bw = bayes_weights(&stats, eye.view(), Some(&[0.5, 0.5])).unwrap();
        let on_boundary = array![0.3, -0.3];
        let s = bw.scores(on_boundary.view());
        assert!((s[0] - s[1]).abs() < 1e-12);
        let above = array![0.5, 0.1];
        assert_eq!(bw.classify(above.insert_axis(Axis(0)).view()).unwrap(), vec![0]);
    }

    #[test]
    fn bayes_rejects_singular_within_scatter() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let d = Dataset::new(x, vec![0, 0, 1, 1]).unwrap();
        let stats = compute_cluster_stats(&d).unwrap();
        let sc = compute_scatter(&d, &stats).unwrap();
        match bayes_weights(&stats, sc.s_w.view(), None) {
            Err(Error::SingularWithinScatter) => {}
            other => panic!("expected singular rejection, got {other:?}"),
        }
    }

    #[test]
    fn solver_names_round_trip() {
        for kind in [
            SolverKind::EigLda,
            SolverKind::Ldapp,
            SolverKind::EigLdapp,
            SolverKind::SwPinvM,
        ] {
            let s = kind.to_string();
            assert_eq!(s.parse::<SolverKind>().unwrap(), kind);
        }
        assert!("lda".parse::<SolverKind>().is_err());
    }
}
