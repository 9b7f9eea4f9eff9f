use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::numerics::Matrix;

use super::InferenceError;

/// Three-class confusion matrix; `counts[truth][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn get(&self, truth: ClassLabel, predicted: ClassLabel) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }
}

pub fn confusion_and_accuracy(
    predicted: &[ClassLabel],
    truth: &[ClassLabel],
) -> Result<(ConfusionMatrix, f64), InferenceError> {
    if predicted.len() != truth.len() {
        return Err(InferenceError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(InferenceError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (p, t) in predicted.iter().zip(truth) {
        m.counts[t.index()][p.index()] += 1;
    }
    let acc = m.accuracy();
    Ok((m, acc))
}

fn class_counts(labels: &[bool]) -> Result<(u64, u64), InferenceError> {
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(InferenceError::SingleClass);
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Area under the ROC curve by the trapezoid rule over all thresholds.
///
/// The area is accumulated in integer units of `1/(2·P·N)`, so tied scores
/// contribute exactly one half per tied positive/negative pair.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, InferenceError> {
    if scores.len() != labels.len() {
        return Err(InferenceError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let (pos, neg) = class_counts(labels)?;
    let mut tp: u128 = 0;
    let mut twice_area: u128 = 0;
    for group in tie_groups(scores) {
        let dtp = group.iter().filter(|&&i| labels[i]).count() as u128;
        let dfp = group.len() as u128 - dtp;
        twice_area += dfp * (2 * tp + dtp);
        tp += dtp;
    }
    Ok(twice_area as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// ROC points `(false positive rate, true positive rate)` from (0,0) to (1,1).
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>, InferenceError> {
    if scores.len() != labels.len() {
        return Err(InferenceError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let (pos, neg) = class_counts(labels)?;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut points = vec![(0.0, 0.0)];
    for group in tie_groups(scores) {
        let dtp = group.iter().filter(|&&i| labels[i]).count() as u64;
        tp += dtp;
        fp += group.len() as u64 - dtp;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Mean silhouette coefficient under Euclidean distance.
/// Points in singleton clusters score 0.
pub fn silhouette(x: &Matrix, labels: &[usize]) -> Result<f64, InferenceError> {
    let n = x.rows();
    if labels.len() != n {
        return Err(InferenceError::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    if ids.len() < 2 {
        return Err(InferenceError::SingleClass);
    }
    let k = ids.len();
    let cluster: Vec<usize> = labels.iter().map(|l| ids[l]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &cluster {
        sizes[c] += 1;
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let ci = cluster[i];
        if sizes[ci] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let xi = x.row(i);
        for j in 0..n {
            if j != i {
                sums[cluster[j]] += euclidean(xi, x.row(j));
            }
        }
        let a = sums[ci] / (sizes[ci] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != ci)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `|A ∩ B| / |A ∪ B|`.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64, InferenceError> {
    let union = a.union(b).count();
    if union == 0 {
        return Err(InferenceError::BothSetsEmpty);
    }
    Ok(a.intersection(b).count() as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ClassLabel::*;

    /// Pairwise concordance with ties counted as one half.
    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut twice = 0u64;
        let (mut p, mut n) = (0u64, 0u64);
        for (i, &li) in labels.iter().enumerate() {
            if li {
                p += 1
            } else {
                n += 1
            }
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                if scores[i] > scores[j] {
                    twice += 2;
                } else if scores[i] == scores[j] {
                    twice += 1;
                }
            }
        }
        twice as f64 / (2 * p * n) as f64
    }

    /// Silhouette straight from the definition with a full distance matrix.
    fn reference_silhouette(x: &Matrix, labels: &[usize]) -> f64 {
        let n = x.rows();
        let d: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| euclidean(x.row(i), x.row(j))).collect())
            .collect();
        let distinct: BTreeSet<usize> = labels.iter().copied().collect();
        let mut s = 0.0;
        for i in 0..n {
            let own: Vec<usize> = (0..n)
                .filter(|&j| j != i && labels[j] == labels[i])
                .collect();
            if own.is_empty() {
                continue;
            }
            let a = own.iter().map(|&j| d[i][j]).sum::<f64>() / own.len() as f64;
            let mut b = f64::INFINITY;
            for &c in distinct.iter().filter(|&&c| c != labels[i]) {
                let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                b = b.min(members.iter().map(|&j| d[i][j]).sum::<f64>() / members.len() as f64);
            }
            if a.max(b) > 0.0 {
                s += (b - a) / a.max(b);
            }
        }
        s / n as f64
    }

    #[test]
    fn confusion_identical_and_disjoint() {
        let t = [Flop, Neutral, Hit, Hit];
        let (m, acc) = confusion_and_accuracy(&t, &t).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(m.trace(), 4);
        assert_eq!(m.get(Hit, Hit), 2);
        let p = [Hit, Flop, Flop, Neutral];
        let (m, acc) = confusion_and_accuracy(&p, &t).unwrap();
        assert_eq!(acc, 0.0);
        assert_eq!(m.trace(), 0);
        assert_eq!(m.get(Flop, Hit), 1);
        assert!(confusion_and_accuracy(&p[..2], &t).is_err());
        assert!(confusion_and_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn confusion_order_invariant() {
        let p = [Flop, Neutral, Hit, Hit, Neutral];
        let t = [Flop, Hit, Hit, Neutral, Neutral];
        let (a, _) = confusion_and_accuracy(&p, &t).unwrap();
        let perm = [3, 0, 4, 2, 1];
        let pp: Vec<_> = perm.iter().map(|&i| p[i]).collect();
        let tp: Vec<_> = perm.iter().map(|&i| t[i]).collect();
        let (b, _) = confusion_and_accuracy(&pp, &tp).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &labels).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.3, 0.4], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert_eq!(
            roc_auc(&[1.0, 2.0], &[true, true]),
            Err(InferenceError::SingleClass)
        );
    }

    #[test]
    fn roc_curve_endpoints() {
        let c = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(c.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.last(), Some(&(1.0, 1.0)));
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn silhouette_conventions() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [10.0, 0.0]]).unwrap();
        assert_eq!(silhouette(&x, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(silhouette(&x, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert_eq!(
            silhouette(&x, &[7, 7, 7, 7]),
            Err(InferenceError::SingleClass)
        );
    }

    #[test]
    fn jaccard_examples() {
        let a: BTreeSet<_> = ["x", "y", "z"].into_iter().collect();
        let b: BTreeSet<_> = ["y", "z", "w"].into_iter().collect();
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &b).unwrap(), 0.5);
        let empty: BTreeSet<&str> = BTreeSet::new();
        assert_eq!(jaccard(&a, &empty).unwrap(), 0.0);
        assert_eq!(jaccard(&empty, &empty), Err(InferenceError::BothSetsEmpty));
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(
            data in prop::collection::vec((0u8..8, any::<bool>()), 2..200)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 4.0).collect();
            let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let auc = roc_auc(&scores, &labels).unwrap();
            prop_assert_eq!(auc, pairwise_auc(&scores, &labels));
            prop_assert!((0.0..=1.0).contains(&auc));
        }

        #[test]
        fn silhouette_matches_reference(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0usize..4), 2..60)
        ) {
            let rows: Vec<[f64; 2]> = pts.iter().map(|(a, b, _)| [*a, *b]).collect();
            let labels: Vec<usize> = pts.iter().map(|(_, _, l)| *l).collect();
            let distinct: BTreeSet<_> = labels.iter().collect();
            prop_assume!(distinct.len() >= 2);
            let x = Matrix::from_rows(&rows).unwrap();
            let s = silhouette(&x, &labels).unwrap();
            prop_assert!((s - reference_silhouette(&x, &labels)).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&s));
        }

        #[test]
        fn jaccard_in_unit_interval(a in prop::collection::btree_set(0u8..20, 0..10),
                                    b in prop::collection::btree_set(0u8..20, 1..10)) {
            let j = jaccard(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&j));
            prop_assert_eq!(j, jaccard(&b, &a).unwrap());
        }
    }
}
