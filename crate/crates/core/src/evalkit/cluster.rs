use std::collections::BTreeMap;

use super::data::LabeledEmbeddingSet;
use super::triplets::l2_distance;
use crate::error::{Error, Result};

/// Groups point indices by label, in label order.
fn group<'a>(labels: &[&'a str]) -> BTreeMap<&'a str, Vec<usize>> {
    let mut g: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        g.entry(l).or_default().push(i);
    }
    g
}

fn check_inputs(points: &[Vec<f64>], labels: &[&str]) -> Result<usize> {
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch(points.len(), labels.len()));
    }
    let dim = points.first().map_or(0, Vec::len);
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(dim, p.len()));
    }
    Ok(dim)
}

/// Davies-Bouldin index over explicit points and cluster labels.
///
/// A pair of clusters with coincident centroids contributes 0 to the max,
/// matching the usual library convention.
pub fn davies_bouldin_index(points: &[Vec<f64>], labels: &[&str]) -> Result<f64> {
    let dim = check_inputs(points, labels)?;
    let groups = group(labels);
    if groups.len() < 2 {
        return Err(Error::TooFewClusters(groups.len()));
    }
    let mut centroids = Vec::with_capacity(groups.len());
    let mut scatter = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let mut c = vec![0.0; dim];
        for &i in members {
            for (ck, pk) in c.iter_mut().zip(&points[i]) {
                *ck += pk;
            }
        }
        let n = members.len() as f64;
        c.iter_mut().for_each(|ck| *ck /= n);
        let mut s = 0.0;
        for &i in members {
            s += l2_distance(&points[i], &c)?;
        }
        scatter.push(s / n);
        centroids.push(c);
    }
    let k = centroids.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let m = l2_distance(&centroids[i], &centroids[j])?;
            let r = if m > 0.0 { (scatter[i] + scatter[j]) / m } else { 0.0 };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Mean silhouette coefficient. Points in singleton clusters score 0, as do
/// points with `a = b = 0`.
pub fn silhouette_score(points: &[Vec<f64>], labels: &[&str]) -> Result<f64> {
    check_inputs(points, labels)?;
    let groups = group(labels);
    if groups.len() < 2 {
        return Err(Error::TooFewClusters(groups.len()));
    }
    let n = points.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = l2_distance(&points[i], &points[j])?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut sum = 0.0;
    for i in 0..n {
        let own = &groups[labels[i]];
        if own.len() < 2 {
            continue;
        }
        let a = own.iter().map(|&j| dist[i * n + j]).sum::<f64>() / (own.len() - 1) as f64;
        let b = groups
            .iter()
            .filter(|(l, _)| **l != labels[i])
            .map(|(_, m)| m.iter().map(|&j| dist[i * n + j]).sum::<f64>() / m.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            sum += (b - a) / denom;
        }
    }
    Ok(sum / n as f64)
}

fn primary_split(data: &LabeledEmbeddingSet) -> (Vec<Vec<f64>>, Vec<&str>) {
    data.entries()
        .iter()
        .map(|e| (e.embedding.clone(), e.primary_class()))
        .unzip()
}

/// Davies-Bouldin index using each entry's first composition class.
pub fn davies_bouldin(data: &LabeledEmbeddingSet) -> Result<f64> {
    let (p, l) = primary_split(data);
    davies_bouldin_index(&p, &l)
}

/// Silhouette score using each entry's first composition class.
pub fn silhouette(data: &LabeledEmbeddingSet) -> Result<f64> {
    let (p, l) = primary_split(data);
    silhouette_score(&p, &l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::SplitMix64;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn singletons_at_unit_distance() {
        let p = vec![vec![0.0], vec![1.0]];
        assert_eq!(davies_bouldin_index(&p, &["a", "b"]).unwrap(), 0.0);
        assert_eq!(silhouette_score(&p, &["a", "b"]).unwrap(), 0.0);
    }

    #[test]
    fn two_cluster_closed_form() {
        // clusters {-6,-4} and {4,6}: scatter 1 each, centroid gap 10
        let p = vec![vec![-6.0], vec![-4.0], vec![4.0], vec![6.0]];
        let l = ["a", "a", "b", "b"];
        assert!(close(davies_bouldin_index(&p, &l).unwrap(), 0.2));
        // hand silhouette: point -6: a=2, b=(10+12)/2=11 -> 9/11
        //                  point -4: a=2, b=(8+10)/2=9   -> 7/9
        let want = (9.0 / 11.0 + 7.0 / 9.0) / 2.0;
        assert!(close(silhouette_score(&p, &l).unwrap(), want));
    }

    #[test]
    fn hand_laid_four_points() {
        let p: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 0.0], vec![3.0, 4.0]];
        let l = ["x", "x", "y", "y"];
        let s = |a: f64, b: f64| (b - a) / a.max(b);
        let d = |i: usize, j: usize| {
            ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt()
        };
        let want = (s(d(0, 1), (d(0, 2) + d(0, 3)) / 2.0)
            + s(d(1, 0), (d(1, 2) + d(1, 3)) / 2.0)
            + s(d(2, 3), (d(2, 0) + d(2, 1)) / 2.0)
            + s(d(3, 2), (d(3, 0) + d(3, 1)) / 2.0))
            / 4.0;
        assert!(close(silhouette_score(&p, &l).unwrap(), want));
        // centroids (0,.5) and (3,2); scatters .5 and 2
        let m = (9.0f64 + 2.25).sqrt();
        assert!(close(davies_bouldin_index(&p, &l).unwrap(), 2.5 / m));
    }

    #[test]
    fn degenerate_cases() {
        let p = vec![vec![1.0, 1.0]; 4];
        let l = ["a", "a", "b", "b"];
        assert_eq!(silhouette_score(&p, &l).unwrap(), 0.0);
        assert_eq!(davies_bouldin_index(&p, &l).unwrap(), 0.0);
        let far = vec![vec![0.0], vec![0.0], vec![100.0], vec![100.0]];
        assert_eq!(silhouette_score(&far, &l).unwrap(), 1.0);
        assert!(matches!(
            davies_bouldin_index(&p, &["a"; 4]),
            Err(Error::TooFewClusters(1))
        ));
        assert!(matches!(
            silhouette_score(&p, &["a"; 3]),
            Err(Error::DimensionMismatch(4, 3))
        ));
    }

    /// Textbook-style reference written independently of the code above:
    /// loops over explicit member lists, no shared helpers.
    fn reference(points: &[Vec<f64>], labels: &[usize], k: usize) -> (f64, f64) {
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for t in 0..a.len() {
                s += (a[t] - b[t]) * (a[t] - b[t]);
            }
            s.sqrt()
        };
        let members: Vec<Vec<usize>> = (0..k)
            .map(|c| (0..points.len()).filter(|&i| labels[i] == c).collect())
            .collect();
        let dim = points[0].len();
        let cent: Vec<Vec<f64>> = members
            .iter()
            .map(|m| {
                (0..dim)
                    .map(|t| m.iter().map(|&i| points[i][t]).sum::<f64>() / m.len() as f64)
                    .collect()
            })
            .collect();
        let sc: Vec<f64> = (0..k)
            .map(|c| {
                members[c].iter().map(|&i| dist(&points[i], &cent[c])).sum::<f64>()
                    / members[c].len() as f64
            })
            .collect();
        let mut dbi = 0.0;
        for i in 0..k {
            let mut best = f64::MIN;
            for j in 0..k {
                if j != i {
                    best = best.max((sc[i] + sc[j]) / dist(&cent[i], &cent[j]));
                }
            }
            dbi += best;
        }
        dbi /= k as f64;

        let mut sil = 0.0;
        for i in 0..points.len() {
            let own = labels[i];
            let a: f64 = members[own]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| dist(&points[i], &points[j]))
                .sum::<f64>()
                / (members[own].len() - 1) as f64;
            let mut b = f64::MAX;
            for (c, other) in members.iter().enumerate() {
                if c != own {
                    let mean = other.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>()
                        / other.len() as f64;
                    b = b.min(mean);
                }
            }
            sil += (b - a) / a.max(b);
        }
        (dbi, sil / points.len() as f64)
    }

    #[test]
    fn nine_class_blobs_match_reference() {
        let mut rng = SplitMix64::new(7);
        let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let names = super::super::KUPCP_CLASSES;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for c in 0..9 {
            let center: Vec<f64> = (0..5).map(|_| unit() * 20.0 - 10.0).collect();
            for _ in 0..12 {
                points.push(center.iter().map(|m| m + unit() * 3.0 - 1.5).collect::<Vec<f64>>());
                labels.push(c);
            }
        }
        let (dbi, sil) = reference(&points, &labels, 9);
        let named: Vec<&str> = labels.iter().map(|&c| names[c]).collect();
        assert!(close(davies_bouldin_index(&points, &named).unwrap(), dbi));
        assert!(close(silhouette_score(&points, &named).unwrap(), sil));
    }

    proptest! {
        #[test]
        fn metric_bounds(
            pts in proptest::collection::vec(
                (proptest::collection::vec(-10.0f64..10.0, 3), 0usize..4), 2..30)
        ) {
            let names = ["p", "q", "r", "s"];
            let (p, l): (Vec<Vec<f64>>, Vec<&str>) =
                pts.iter().map(|(v, c)| (v.clone(), names[*c])).unzip();
            match silhouette_score(&p, &l) {
                Ok(s) => prop_assert!((-1.0..=1.0).contains(&s)),
                Err(e) => prop_assert!(matches!(e, Error::TooFewClusters(_))),
            }
            if let Ok(d) = davies_bouldin_index(&p, &l) {
                prop_assert!(d >= 0.0 && d.is_finite());
            }
        }
    }
}
