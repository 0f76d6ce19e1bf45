//! Nearest-neighbor evaluation: deterministic stratified k-fold splits,
//! cross-validated accuracy and objective reporting, and subspace-equivalence
//! checks between two fitted transforms.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{self, KernelDescriptor, KernelSolverKind};
use crate::numerics::{orthonormal_basis, principal_angles};
use crate::solvers::{self, LdaModel, SolverConfig};

/// Cross-validation outcome: one accuracy and one training-fold objective per
/// fold, in fold order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub solver: String,
    pub mode: String,
    pub lambda: f64,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Percent correct per fold.
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the fold accuracies.
    pub std_accuracy: f64,
    pub fold_objectives: Vec<f64>,
    pub mean_objective: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_pop(v: &[f64], m: f64) -> f64 {
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// 1-NN under Euclidean distance; distance ties go to the lowest training index.
pub fn nn_classify(
    train: ArrayView2<'_, f64>,
    train_labels: &[usize],
    test: ArrayView2<'_, f64>,
) -> Result<Vec<usize>> {
    if train.nrows() == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train.nrows() != train_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} training rows but {} labels",
            train.nrows(),
            train_labels.len()
        )));
    }
    if train.ncols() != test.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "train width {} vs test width {}",
            train.ncols(),
            test.ncols()
        )));
    }
    Ok(test
        .outer_iter()
        .map(|t| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, row) in train.outer_iter().enumerate() {
                let d: f64 = row
                    .iter()
                    .zip(t.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            train_labels[best]
        })
        .collect())
}

/// Deterministic shuffled partition of `0..n` into `k` folds whose sizes
/// differ by at most one; stratified per label group when labels are given.
/// Indices within each fold are sorted ascending.
pub fn kfold_split(
    n: usize,
    k: usize,
    seed: u64,
    labels: Option<&[usize]>,
) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} samples into {k} folds"
        )));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {n} samples",
                l.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    match labels {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let (q, r) = (n / k, n % k);
            let mut pos = 0;
            for (i, fold) in folds.iter_mut().enumerate() {
                let take = q + usize::from(i < r);
                fold.extend_from_slice(&order[pos..pos + take]);
                pos += take;
            }
        }
        Some(labels) => {
            let groups = labels.iter().copied().max().unwrap_or(0) + 1;
            // Spread each group's remainder starting where the previous group
            // stopped, so fold sizes stay within one of each other globally.
            let mut offset = 0usize;
            for g in 0..groups {
                let mut members: Vec<usize> =
                    (0..n).filter(|&i| labels[i] == g).collect();
                members.shuffle(&mut rng);
                let (q, r) = (members.len() / k, members.len() % k);
                let mut pos = 0;
                for i in 0..k {
                    let extra = usize::from((i + k - offset) % k < r);
                    let take = q + extra;
                    folds[i].extend_from_slice(&members[pos..pos + take]);
                    pos += take;
                }
                offset = (offset + r) % k;
            }
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn accuracy_percent(predicted: &[usize], truth: &[usize]) -> f64 {
    let correct = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    100.0 * correct as f64 / truth.len() as f64
}

fn fold_complement(folds: &[Vec<usize>], hold_out: usize) -> Vec<usize> {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != hold_out)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    train
}

/// Stratified k-fold cross-validation of a linear solver.
///
/// Folds are stratified by cluster id so every cluster stays represented in
/// every training split; accuracy is scored at class level through the
/// dataset's cluster→class map when present.
pub fn cross_validate(
    d: &Dataset,
    cfg: &SolverConfig,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let folds = kfold_split(d.sample_count(), k, seed, Some(d.labels()))?;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_objectives = Vec::with_capacity(k);
    for hold_out in 0..k {
        let train_rows = fold_complement(&folds, hold_out);
        let test_rows = &folds[hold_out];
        let train = d.select(&train_rows)?;
        let model = solvers::fit(&train, cfg)?;
        let train_feats = solvers::transform(&model, train.x())?;
        let test_x = d.x().select(Axis(0), test_rows);
        let test_feats = solvers::transform(&model, test_x.view())?;
        let predicted_clusters = nn_classify(train_feats.view(), train.labels(), test_feats.view())?;
        let predicted: Vec<usize> = predicted_clusters
            .iter()
            .map(|&c| d.class_of_cluster().map_or(c, |m| m[c]))
            .collect();
        let truth: Vec<usize> = test_rows.iter().map(|&i| d.class_of(i)).collect();
        fold_accuracies.push(accuracy_percent(&predicted, &truth));
        fold_objectives.push(model.objective);
    }
    let mean_accuracy = mean(&fold_accuracies);
    let std_accuracy = std_pop(&fold_accuracies, mean_accuracy);
    let mean_objective = mean(&fold_objectives);
    Ok(EvalReport {
        solver: cfg.solver.to_string(),
        mode: cfg.mode.to_string(),
        lambda: cfg.lambda,
        folds: k,
        seed,
        stratified: true,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        fold_objectives,
        mean_objective,
    })
}

/// Kernel-solver counterpart of [`cross_validate`].
pub fn cross_validate_kernel(
    d: &Dataset,
    desc: &KernelDescriptor,
    variant: KernelSolverKind,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let folds = kfold_split(d.sample_count(), k, seed, Some(d.labels()))?;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_objectives = Vec::with_capacity(k);
    for hold_out in 0..k {
        let train_rows = fold_complement(&folds, hold_out);
        let test_rows = &folds[hold_out];
        let train = d.select(&train_rows)?;
        let model = match variant {
            KernelSolverKind::Classical => kernel::fit_classical(&train, desc)?,
            KernelSolverKind::Ldapp => kernel::fit_ldapp(&train, desc)?,
        };
        let train_feats = kernel::kernel_transform(&model, train.x())?;
        let test_x = d.x().select(Axis(0), test_rows);
        let test_feats = kernel::kernel_transform(&model, test_x.view())?;
        let predicted_clusters = nn_classify(train_feats.view(), train.labels(), test_feats.view())?;
        let predicted: Vec<usize> = predicted_clusters
            .iter()
            .map(|&c| d.class_of_cluster().map_or(c, |m| m[c]))
            .collect();
        let truth: Vec<usize> = test_rows.iter().map(|&i| d.class_of(i)).collect();
        fold_accuracies.push(accuracy_percent(&predicted, &truth));
        fold_objectives.push(model.objective);
    }
    let mean_accuracy = mean(&fold_accuracies);
    let std_accuracy = std_pop(&fold_accuracies, mean_accuracy);
    let mean_objective = mean(&fold_objectives);
    Ok(EvalReport {
        solver: variant.to_string(),
        mode: "kernel".into(),
        lambda: 0.0,
        folds: k,
        seed,
        stratified: true,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        fold_objectives,
        mean_objective,
    })
}

/// Outcome of comparing two transforms fitted on the same training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Principal-angle cosines between the two column spaces, nonincreasing.
    pub cosines: Vec<f64>,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    /// Whether the NN predictions on orthonormalized features agree exactly.
    pub predictions_equal: bool,
}

/// QR-orthonormalizes both transforms and compares principal angles and NN
/// predictions on the orthonormalized features. Two full-rank bases of the
/// same subspace must produce identical predictions.
pub fn subspace_equivalence(
    model_a: &LdaModel,
    model_b: &LdaModel,
    train: &Dataset,
    test_x: ArrayView2<'_, f64>,
    test_classes: &[usize],
) -> Result<EquivalenceReport> {
    if model_a.feature_count() != model_b.feature_count() {
        return Err(Error::ShapeMismatch(format!(
            "feature counts differ: {} vs {}",
            model_a.feature_count(),
            model_b.feature_count()
        )));
    }
    let cosines = principal_angles(model_a.a.view(), model_b.a.view())?
        .to_vec();
    let mut accuracies = [0.0f64; 2];
    let mut predictions: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (slot, model) in [model_a, model_b].into_iter().enumerate() {
        let q = orthonormal_basis(model.a.view())?;
        let centered_train = &train.x() - &model.mean;
        let centered_test = &test_x - &model.mean;
        let train_feats = centered_train.dot(&q);
        let test_feats = centered_test.dot(&q);
        let clusters = nn_classify(train_feats.view(), train.labels(), test_feats.view())?;
        let classes: Vec<usize> = clusters
            .iter()
            .map(|&c| train.class_of_cluster().map_or(c, |m| m[c]))
            .collect();
        accuracies[slot] = accuracy_percent(&classes, test_classes);
        predictions[slot] = classes;
    }
    Ok(EquivalenceReport {
        cosines,
        accuracy_a: accuracies[0],
        accuracy_b: accuracies[1],
        predictions_equal: predictions[0] == predictions[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn nn_exact_match_wins() {
        let train = array![[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]];
        let labels = vec![2, 7, 4];
        let test = array![[5.0, 5.0]];
        let p = nn_classify(train.view(), &labels, test.view()).unwrap();
        assert_eq!(p, vec![7]);
    }

    #[test]
    fn nn_tie_takes_lowest_index() {
        let train = array![[1.0], [-1.0]];
        let labels = vec![0, 1];
        let test = array![[0.0]];
        let p = nn_classify(train.view(), &labels, test.view()).unwrap();
        assert_eq!(p, vec![0]);
    }

    #[test]
    fn nn_rejects_empty_training() {
        let train = Array2::<f64>::zeros((0, 2));
        let test = array![[0.0, 0.0]];
        assert!(nn_classify(train.view(), &[], test.view()).is_err());
    }

    #[test]
    fn kfold_leave_one_out() {
        let folds = kfold_split(5, 5, 3, None).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert!(folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn kfold_deterministic_under_seed() {
        let a = kfold_split(23, 4, 11, None).unwrap();
        let b = kfold_split(23, 4, 11, None).unwrap();
        assert_eq!(a, b);
        let c = kfold_split(23, 4, 12, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn kfold_sizes_differ_by_at_most_one() {
        for (n, k) in [(23, 4), (150, 10), (7, 3)] {
            let folds = kfold_split(n, k, 0, None).unwrap();
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            assert!(max - min <= 1, "n={n} k={k} sizes={sizes:?}");
            assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn stratified_balanced_classes_land_evenly() {
        // 150 samples, 3 balanced classes, 10 folds: 5 of each class per fold.
        let labels: Vec<usize> = (0..150).map(|i| i / 50).collect();
        let folds = kfold_split(150, 10, 42, Some(&labels)).unwrap();
        for fold in &folds {
            assert_eq!(fold.len(), 15);
            for class in 0..3 {
                let count = fold.iter().filter(|&&i| labels[i] == class).count();
                assert_eq!(count, 5);
            }
        }
    }

    #[test]
    fn stratified_unbalanced_stays_within_one() {
        let mut labels = vec![0usize; 21];
        labels.extend(vec![1usize; 13]);
        labels.extend(vec![2usize; 9]);
        let folds = kfold_split(labels.len(), 4, 5, Some(&labels)).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        assert!(max - min <= 1, "sizes={sizes:?}");
    }

    #[test]
    fn report_mean_matches_folds() {
        let x = array![
            [0.0, 0.0],
            [0.2, 0.1],
            [0.1, 0.2],
            [-0.1, 0.0],
            [5.0, 5.0],
            [5.2, 5.1],
            [5.1, 4.9],
            [4.9, 5.0]
        ];
        let d = Dataset::new(x, vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        let cfg = SolverConfig::new(
            crate::solvers::SolverKind::Ldapp,
            crate::solvers::Mode::Ldlss,
            0.0,
        );
        let r = cross_validate(&d, &cfg, 4, 7).unwrap();
        assert_eq!(r.fold_accuracies.len(), 4);
        assert!((r.mean_accuracy - mean(&r.fold_accuracies)).abs() < 1e-12);
        assert!(r.fold_accuracies.iter().all(|&a| (0.0..=100.0).contains(&a)));
        // Well-separated blobs classify perfectly.
        assert_eq!(r.mean_accuracy, 100.0);
    }

    #[test]
    fn model_vs_itself_is_equivalent() {
        let x = array![
            [0.0, 0.0, 1.0],
            [0.2, 0.1, 0.8],
            [5.0, 5.0, 0.2],
            [5.2, 5.1, 0.1],
            [9.0, 0.0, 3.0],
            [9.1, 0.2, 3.2]
        ];
        let d = Dataset::new(x, vec![0, 0, 1, 1, 2, 2]).unwrap();
        let m = solvers::eig_lda(&d, 0.0, crate::solvers::Mode::Ldlss).unwrap();
        let classes: Vec<usize> = (0..d.sample_count()).map(|i| d.class_of(i)).collect();
        let r = subspace_equivalence(&m, &m, &d, d.x(), &classes).unwrap();
        assert!(r.predictions_equal);
        assert!(r.cosines.iter().all(|&c| (c - 1.0).abs() < 1e-10));
        assert_eq!(r.accuracy_a, r.accuracy_b);
    }
}
