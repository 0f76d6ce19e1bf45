//! Seeded k-means subclass partitioning, so the discriminant analysis can run
//! on clusters instead of classes.
//!
//! Everything is deterministic under a fixed seed: k-means++ seeding draws
//! from a counter-based generator, Lloyd iterations break assignment ties by
//! lowest center index, and per-class runs merge in class order.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

/// A k-means clustering of a row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Assigned cluster per row.
    pub labels: Vec<usize>,
    /// `K×D` cluster centers.
    pub centers: Array2<f64>,
    /// Sum of squared distances of rows to their assigned centers.
    pub inertia: f64,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// k-means++ initial centers: first uniform, then proportional to the squared
/// distance to the nearest chosen center.
fn plus_plus_init(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // All remaining distances vanish (duplicate points): fall back to uniform.
            rng.random_range(0..n)
        };
        centers.row_mut(j).assign(&x.row(pick));
        for i in 0..n {
            let d = sq_dist(x.row(i), centers.row(j));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

fn nearest_center(x: ArrayView1<'_, f64>, centers: &Array2<f64>) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.outer_iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Runs until the largest center displacement drops below `tol` or `max_iter`
/// passes. An emptied cluster is reseeded with the point farthest from its
/// assigned center.
pub fn kmeans(
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Partition> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "cannot form {k} clusters from {n} samples"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in clustering input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(x, k, &mut rng);
    let mut labels = vec![0usize; n];

    for _ in 0..max_iter {
        assign_and_repair(x, &mut centers, &mut labels, true);
        let mut sums = Array2::<f64>::zeros((k, x.ncols()));
        let mut counts = vec![0usize; k];
        for (i, row) in x.outer_iter().enumerate() {
            let mut s = sums.row_mut(labels[i]);
            s += &row;
            counts[labels[i]] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let new_center = sums.row(j).mapv(|v| v / counts[j] as f64);
            let moved = sq_dist(new_center.view(), centers.row(j)).sqrt();
            shift = shift.max(moved);
            centers.row_mut(j).assign(&new_center);
        }
        if shift < tol {
            break;
        }
    }

    let inertia = assign_and_repair(x, &mut centers, &mut labels, true);
    Ok(Partition {
        labels,
        centers,
        inertia,
    })
}

/// Assigns rows to the nearest center and returns the resulting inertia.
/// With `repair`, a cluster left empty is reseeded with the point currently
/// farthest from its assigned center (the center moves onto that point).
fn assign_and_repair(
    x: ArrayView2<'_, f64>,
    centers: &mut Array2<f64>,
    labels: &mut [usize],
    repair: bool,
) -> f64 {
    let k = centers.nrows();
    let mut counts = vec![0usize; k];
    let mut dist = vec![0.0f64; x.nrows()];
    for (i, row) in x.outer_iter().enumerate() {
        let (j, d) = nearest_center(row, centers);
        labels[i] = j;
        dist[i] = d;
        counts[j] += 1;
    }
    if repair {
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let mut far = 0usize;
            let mut far_d = -1.0;
            for (i, &d) in dist.iter().enumerate() {
                if counts[labels[i]] > 1 && d > far_d {
                    far_d = d;
                    far = i;
                }
            }
            counts[labels[far]] -= 1;
            centers.row_mut(j).assign(&x.row(far));
            labels[far] = j;
            dist[far] = 0.0;
            counts[j] = 1;
        }
    }
    dist.iter().sum()
}

fn per_class_seed(seed: u64, class: usize) -> u64 {
    // splitmix-style spread so classes draw independent streams
    seed ^ (class as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Partitions each class into `k_per_class` k-means clusters and reassembles a
/// cluster-labeled dataset, keeping row order and recording the cluster→class
/// provenance. Class `g` owns cluster ids `g·k .. (g+1)·k`. The per-class runs
/// are independent and merge deterministically in class order.
pub fn subclass_partition(
    x: ArrayView2<'_, f64>,
    class_labels: &[usize],
    k_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if x.nrows() != class_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} class labels",
            x.nrows(),
            class_labels.len()
        )));
    }
    if k_per_class == 0 {
        return Err(Error::InvalidInput("k_per_class must be at least 1".into()));
    }
    let n_classes = match class_labels.iter().max() {
        Some(&m) => m + 1,
        None => return Err(Error::InvalidInput("empty dataset".into())),
    };
    let mut cluster_labels = vec![0usize; x.nrows()];
    let mut class_of_cluster = Vec::with_capacity(n_classes * k_per_class);
    for class in 0..n_classes {
        let rows: Vec<usize> = (0..x.nrows())
            .filter(|&i| class_labels[i] == class)
            .collect();
        if rows.len() < k_per_class {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} samples, fewer than the {k_per_class} requested subclasses",
                rows.len()
            )));
        }
        let sub = x.select(Axis(0), &rows);
        let part = kmeans(
            sub.view(),
            k_per_class,
            per_class_seed(seed, class),
            DEFAULT_MAX_ITER,
            DEFAULT_TOL,
        )?;
        let base = class * k_per_class;
        for (&row, &cluster) in rows.iter().zip(&part.labels) {
            cluster_labels[row] = base + cluster;
        }
        class_of_cluster.extend(std::iter::repeat(class).take(k_per_class));
    }
    Dataset::with_class_map(x.to_owned(), cluster_labels, class_of_cluster)
}

/// Recomputes inertia for an assignment, for consistency checks.
pub fn inertia_of(x: ArrayView2<'_, f64>, labels: &[usize], centers: &Array2<f64>) -> f64 {
    x.outer_iter()
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, centers.row(l)))
        .sum()
}
