use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// A row matrix of `N` samples with one cluster id per row.
///
/// Cluster ids must cover `{0..C−1}` with every id occurring at least once;
/// rows may appear in any order. When the clusters were produced by
/// partitioning classes into subclasses, `class_of_cluster` maps each cluster
/// back to its original class so that evaluation can score at class level.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    labels: Vec<usize>,
    clusters: usize,
    class_of_cluster: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        Self::build(x, labels, None)
    }

    /// Like [`Dataset::new`] but with a cluster → class provenance map.
    pub fn with_class_map(
        x: Array2<f64>,
        labels: Vec<usize>,
        class_of_cluster: Vec<usize>,
    ) -> Result<Self> {
        Self::build(x, labels, Some(class_of_cluster))
    }

    fn build(
        x: Array2<f64>,
        labels: Vec<usize>,
        class_of_cluster: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset must contain at least one sample and one feature".into(),
            ));
        }
        if labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} labels",
                n,
                labels.len()
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            let (r, c) = (bad / x.ncols(), bad % x.ncols());
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {r}, column {c}"
            )));
        }
        let clusters = labels.iter().copied().max().unwrap() + 1;
        let mut counts = vec![0usize; clusters];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::EmptyCluster(c));
        }
        if n < clusters {
            return Err(Error::InvalidInput(format!(
                "{n} samples cannot cover {clusters} clusters"
            )));
        }
        if let Some(map) = &class_of_cluster {
            if map.len() != clusters {
                return Err(Error::ShapeMismatch(format!(
                    "class map covers {} clusters, dataset has {}",
                    map.len(),
                    clusters
                )));
            }
        }
        Ok(Self {
            x,
            labels,
            clusters,
            class_of_cluster,
        })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    pub fn sample_count(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_of_cluster(&self) -> Option<&[usize]> {
        self.class_of_cluster.as_deref()
    }

    /// Class id of a sample: the cluster id itself unless a provenance map is set.
    pub fn class_of(&self, sample: usize) -> usize {
        let cluster = self.labels[sample];
        match &self.class_of_cluster {
            Some(map) => map[cluster],
            None => cluster,
        }
    }

    /// Row subset as a new dataset. Fails if the subset loses a cluster.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::build(x, labels, self.class_of_cluster.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_empty_cluster_id_gap() {
        let x = array![[0.0], [1.0], [2.0]];
        let err = Dataset::new(x, vec![0, 0, 2]).unwrap_err();
        assert_eq!(err.to_string(), "cluster 1 has no samples");
    }

    #[test]
    fn rejects_non_finite_values() {
        let x = array![[0.0, 1.0], [f64::NAN, 2.0]];
        let err = Dataset::new(x, vec![0, 0]).unwrap_err();
        assert!(err.to_string().contains("row 1, column 0"));
    }

    #[test]
    fn select_preserves_class_map() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let d = Dataset::with_class_map(x, vec![0, 1, 0, 1], vec![7, 9]).unwrap();
        let s = d.select(&[1, 2]).unwrap();
        assert_eq!(s.labels(), &[1, 0]);
        assert_eq!(s.class_of(0), 9);
        assert_eq!(s.class_of(1), 7);
    }

    #[test]
    fn select_can_lose_a_cluster() {
        let x = array![[0.0], [1.0], [2.0]];
        let d = Dataset::new(x, vec![0, 1, 1]).unwrap();
        assert!(d.select(&[1, 2]).is_err());
    }
}
