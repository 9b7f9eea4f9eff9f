use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::numerics::Matrix;

use super::ClassifyError;

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    /// k × p centroid matrix.
    pub centroids: Matrix,
    /// Training-point cluster indices from the selected restart.
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub seed: u64,
    /// Index of the restart that produced this model.
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Majority training class per cluster; empty until [`KMeansModel::label_clusters`].
    pub cluster_to_class: Vec<ClassLabel>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &Matrix, row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(centroids.row(c), row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: each new center is drawn with probability ∝ D².
fn plus_plus(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut d2: Vec<f64> = x.row_iter().map(|r| sq_dist(r, x.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, r) in x.row_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centroids.row(c)));
        }
    }
    centroids
}

struct Run {
    centroids: Matrix,
    assignments: Vec<usize>,
    inertia: f64,
    iterations: usize,
    converged: bool,
}

fn assign(x: &Matrix, centroids: &Matrix, out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, r) in x.row_iter().enumerate() {
        let (c, d) = nearest(centroids, r);
        out[i] = c;
        inertia += d;
    }
    inertia
}

/// Moves each empty cluster's centroid onto the point farthest from its own
/// centroid (taken from a cluster that can spare it).
fn reseed_empty(x: &Matrix, centroids: &mut Matrix, assignments: &mut [usize]) {
    let k = centroids.rows();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let far = (0..x.rows())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(x.row(a), centroids.row(assignments[a]));
                let db = sq_dist(x.row(b), centroids.row(assignments[b]));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("n >= k guarantees a donor cluster");
        centroids.row_mut(empty).copy_from_slice(x.row(far));
        assignments[far] = empty;
    }
}

fn lloyd(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Run {
    let (n, p) = x.shape();
    let mut centroids = plus_plus(x, k, rng);
    let mut assignments = vec![0usize; n];
    assign(x, &centroids, &mut assignments);
    reseed_empty(x, &mut centroids, &mut assignments);
    let mut inertia = within_ss(x, &centroids, &assignments);
    let mut iterations = 0;
    let mut converged = false;
    let mut next = vec![0usize; n];
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        // update step
        let mut sums = Matrix::zeros(k, p);
        let mut counts = vec![0usize; k];
        for (i, r) in x.row_iter().enumerate() {
            counts[assignments[i]] += 1;
            sums.row_mut(assignments[i])
                .iter_mut()
                .zip(r)
                .for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            let m = counts[c] as f64;
            centroids
                .row_mut(c)
                .iter_mut()
                .zip(sums.row(c))
                .for_each(|(dst, s)| *dst = s / m);
        }
        // assignment step
        assign(x, &centroids, &mut next);
        reseed_empty(x, &mut centroids, &mut next);
        let new_inertia = within_ss(x, &centroids, &next);
        assert!(
            new_inertia <= inertia * (1.0 + 1e-12) + 1e-12,
            "k-means inertia increased: {inertia} -> {new_inertia}"
        );
        inertia = new_inertia;
        if next == assignments {
            converged = true;
            break;
        }
        std::mem::swap(&mut next, &mut assignments);
    }
    Run {
        centroids,
        assignments,
        inertia,
        iterations,
        converged,
    }
}

fn within_ss(x: &Matrix, centroids: &Matrix, assignments: &[usize]) -> f64 {
    x.row_iter()
        .zip(assignments)
        .map(|(r, &c)| sq_dist(r, centroids.row(c)))
        .sum()
}

/// Best of `restarts` Lloyd runs by inertia; ties go to the lowest restart index.
pub fn kmeans_fit(
    x: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansModel, ClassifyError> {
    let n = x.rows();
    if k == 0 || n < k {
        return Err(ClassifyError::TooFewPoints { n, k });
    }
    if !x.is_finite() {
        return Err(ClassifyError::NonFinite);
    }
    let restarts = restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(x, k, &mut rng)
        })
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.inertia.total_cmp(&b.inertia).then(ia.cmp(ib)))
        .expect("at least one restart");
    if !best.converged {
        log::warn!("k-means restart {restart} hit the {KMEANS_MAX_ITER}-iteration cap");
    }
    Ok(KMeansModel {
        centroids: best.centroids,
        assignments: best.assignments,
        inertia: best.inertia,
        seed,
        restart,
        iterations: best.iterations,
        converged: best.converged,
        cluster_to_class: Vec::new(),
    })
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn predict_clusters(&self, x: &Matrix) -> Result<Vec<usize>, ClassifyError> {
        if x.cols() != self.centroids.cols() {
            return Err(ClassifyError::WidthMismatch {
                expected: self.centroids.cols(),
                found: x.cols(),
            });
        }
        Ok(x.row_iter()
            .map(|r| nearest(&self.centroids, r).0)
            .collect())
    }

    /// Maps every cluster to the majority class of its training members
    /// (ties go to the lower label in Flop < Neutral < Hit order).
    pub fn label_clusters(&mut self, train_labels: &[ClassLabel]) -> Result<(), ClassifyError> {
        if train_labels.len() != self.assignments.len() {
            return Err(ClassifyError::LengthMismatch {
                expected: self.assignments.len(),
                found: train_labels.len(),
            });
        }
        let mut votes = vec![[0usize; 3]; self.k()];
        for (&c, l) in self.assignments.iter().zip(train_labels) {
            votes[c][l.index()] += 1;
        }
        self.cluster_to_class = votes
            .iter()
            .map(|v| {
                assert!(v.iter().sum::<usize>() > 0, "fitted cluster has no members");
                majority(v)
            })
            .collect();
        Ok(())
    }

    /// Nearest-centroid class; requires [`KMeansModel::label_clusters`] first.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<ClassLabel>, ClassifyError> {
        assert_eq!(
            self.cluster_to_class.len(),
            self.k(),
            "clusters not mapped to classes"
        );
        Ok(self
            .predict_clusters(x)?
            .into_iter()
            .map(|c| self.cluster_to_class[c])
            .collect())
    }
}

fn majority(votes: &[usize; 3]) -> ClassLabel {
    let mut best = 0;
    for i in 1..3 {
        if votes[i] > votes[best] {
            best = i;
        }
    }
    ClassLabel::from_index(best).expect("three classes")
}

/// Labels clusters from the training classes and classifies `x_test`.
pub fn kmeans_classify(
    model: &mut KMeansModel,
    train_labels: &[ClassLabel],
    x_test: &Matrix,
) -> Result<Vec<ClassLabel>, ClassifyError> {
    model.label_clusters(train_labels)?;
    model.predict(x_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::silhouette;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(seed: u64, per: usize, sigma: f64) -> (Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 8.660_254_037_844_386]];
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                rows.push([
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), truth)
    }

    fn purity(assign: &[usize], truth: &[usize], k: usize) -> f64 {
        let mut hits = 0;
        for c in 0..k {
            let mut counts = [0usize; 3];
            for (a, t) in assign.iter().zip(truth) {
                if *a == c {
                    counts[*t] += 1;
                }
            }
            hits += counts.iter().max().unwrap();
        }
        hits as f64 / assign.len() as f64
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 8.0]]).unwrap();
        let m = kmeans_fit(&x, 1, 7, 3).unwrap();
        assert_eq!(m.centroids.row(0), &[2.0, 4.0]);
        // Σ squared deviations = n · population variance summed over columns
        assert!((m.inertia - (8.0 + 26.0)).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [5.0], [9.0]]).unwrap();
        let m = kmeans_fit(&x, 4, 1, 5).unwrap();
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn separated_blobs() {
        let (x, truth) = blobs(42, 100, 0.1);
        let m = kmeans_fit(&x, 3, 42, KMEANS_DEFAULT_RESTARTS).unwrap();
        assert!(purity(&m.assignments, &truth, 3) > 0.99);
        assert!(silhouette(&x, &m.assignments).unwrap() > 0.9);
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, _) = blobs(3, 30, 1.5);
        let a = kmeans_fit(&x, 3, 11, 4).unwrap();
        let b = kmeans_fit(&x, 3, 11, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points() {
        let x = Matrix::zeros(2, 1);
        assert!(matches!(
            kmeans_fit(&x, 3, 0, 1),
            Err(ClassifyError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn majority_and_tie_break() {
        use ClassLabel::*;
        assert_eq!(majority(&[1, 0, 2]), Hit);
        assert_eq!(majority(&[1, 0, 1]), Flop);
        assert_eq!(majority(&[0, 2, 2]), Neutral);
    }

    #[test]
    fn classify_maps_clusters() {
        use ClassLabel::*;
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.2], [10.0], [10.1]]).unwrap();
        let mut m = kmeans_fit(&x, 2, 0, 3).unwrap();
        let labels = [Hit, Hit, Flop, Neutral, Neutral];
        let pred = kmeans_classify(
            &mut m,
            &labels,
            &Matrix::from_rows(&[[0.05], [9.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(pred, vec![Hit, Neutral]);
    }

    #[test]
    fn duplicates_reseed_without_empty_clusters() {
        // many identical points force empty clusters during seeding
        let mut rows = vec![[1.0, 1.0]; 20];
        rows.push([5.0, 5.0]);
        rows.push([9.0, 1.0]);
        let x = Matrix::from_rows(&rows).unwrap();
        let m = kmeans_fit(&x, 3, 5, 3).unwrap();
        let mut sizes = [0; 3];
        m.assignments.iter().for_each(|&a| sizes[a] += 1);
        assert!(sizes.iter().all(|&s| s > 0));
        assert_eq!(m.inertia, 0.0);
    }
}
