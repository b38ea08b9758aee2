//! k-means over day vectors: Lloyd iterations from k-means++ seeds, with
//! several restarts, plus the WSS objective, elbow scan and nearest-centroid
//! lookup.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DayVector;
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

/// A partition of days into `n_clusters` groups.
///
/// Labels are numbered in order of each cluster's first member in the input,
/// so equal partitions of the same input get equal labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub n_clusters: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    /// Day index to cluster label.
    pub assignment: BTreeMap<usize, usize>,
    pub wss: f64,
}

impl Clustering {
    pub fn label_of(&self, day: usize) -> Option<usize> {
        self.assignment.get(&day).copied()
    }

    /// Days of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (&day, &label) in &self.assignment {
            out[label].push(day);
        }
        out
    }

    pub fn save_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(
            writer,
            &ClusteringDocument {
                format_version: CLUSTERING_FORMAT_VERSION,
                clustering: self.clone(),
            },
        )?;
        Ok(())
    }

    pub fn load_json<R: Read>(reader: R) -> Result<Self> {
        let doc: ClusteringDocument = serde_json::from_reader(reader)?;
        if doc.format_version != CLUSTERING_FORMAT_VERSION {
            return Err(Error::Version {
                expected: CLUSTERING_FORMAT_VERSION,
                found: doc.format_version,
            });
        }
        let c = doc.clustering;
        if c.centroids.len() != c.n_clusters || c.assignment.values().any(|&l| l >= c.n_clusters) {
            return Err(Error::InvalidValue("clustering document is inconsistent".into()));
        }
        Ok(c)
    }
}

const CLUSTERING_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ClusteringDocument {
    format_version: u32,
    clustering: Clustering,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the smaller index.
fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Result of one Lloyd run from given initial centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// WSS after each centroid update.
    pub wss_history: Vec<f64>,
    /// WSS of the returned labels against the returned centroids.
    pub wss: f64,
    pub converged: bool,
}

/// Lloyd iterations until the assignment stops changing or the cap is hit.
pub fn lloyd(points: &[&[f64]], initial: Vec<Vec<f64>>, max_iterations: usize) -> LloydRun {
    let mut centroids = initial;
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
    let mut wss_history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iterations.max(1) {
        update_centroids(points, &mut labels, &mut centroids);
        wss_history.push(total_wss(points, &labels, &centroids));
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    let wss = total_wss(points, &labels, &centroids);
    LloydRun {
        labels,
        centroids,
        wss_history,
        wss,
        converged,
    }
}

fn total_wss(points: &[&[f64]], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .sum()
}

fn means(points: &[&[f64]], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Recompute centroids as cluster means. An empty cluster takes the point
/// farthest from its own centroid among clusters with at least two members.
fn update_centroids(points: &[&[f64]], labels: &mut [usize], centroids: &mut Vec<Vec<f64>>) {
    let k = centroids.len();
    let dim = points[0].len();
    let (mut new, mut counts) = means(points, labels, k, dim);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let donor = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| counts[labels[i]] >= 2)
            .map(|(i, p)| (i, squared_distance(p, &new[labels[i]])))
            .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else { break };
        labels[i] = empty;
        (new, counts) = means(points, labels, k, dim);
    }
    *centroids = new;
}

/// k-means++ seeding.
fn seed_centroids(points: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn validate(vectors: &[DayVector], n_clusters: usize) -> Result<()> {
    if n_clusters == 0 {
        return Err(Error::InvalidArgument("cluster count must be positive".into()));
    }
    if vectors.len() < n_clusters {
        return Err(Error::InvalidArgument(format!(
            "{} clusters requested for {} vectors",
            n_clusters,
            vectors.len()
        )));
    }
    let dim = vectors[0].values.len();
    if dim == 0 || vectors.iter().any(|v| v.values.len() != dim) {
        return Err(Error::InvalidArgument("vectors must share a non-zero length".into()));
    }
    if let Some(v) = vectors.iter().find(|v| v.values.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite(format!("day vector {}", v.day)));
    }
    Ok(())
}

pub fn kmeans(vectors: &[DayVector], n_clusters: usize, seed: u64) -> Result<Clustering> {
    kmeans_with(vectors, n_clusters, seed, &KMeansOptions::default())
}

/// Best of `options.restarts` Lloyd runs, each seeded by k-means++ from its
/// own `(seed, restart)` stream. Ties on WSS keep the earlier restart.
pub fn kmeans_with(
    vectors: &[DayVector],
    n_clusters: usize,
    seed: u64,
    options: &KMeansOptions,
) -> Result<Clustering> {
    validate(vectors, n_clusters)?;
    let points: Vec<&[f64]> = vectors.iter().map(|v| v.values.as_slice()).collect();
    let runs: Vec<LloydRun> = (0..options.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = substream(seed, Domain::KMeansRestart, &[restart as u64]);
            let init = seed_centroids(&points, n_clusters, &mut rng);
            lloyd(&points, init, options.max_iterations)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.wss < a.wss { b } else { a })
        .expect("at least one restart");
    Ok(canonical(vectors, best, n_clusters, seed))
}

fn canonical(vectors: &[DayVector], run: LloydRun, n_clusters: usize, seed: u64) -> Clustering {
    let mut relabel = vec![usize::MAX; n_clusters];
    let mut next = 0;
    for &l in &run.labels {
        if relabel[l] == usize::MAX {
            relabel[l] = next;
            next += 1;
        }
    }
    // Clusters left empty (only possible if repair failed) go last.
    for r in relabel.iter_mut().filter(|r| **r == usize::MAX) {
        *r = next;
        next += 1;
    }
    let mut centroids = vec![Vec::new(); n_clusters];
    for (old, c) in run.centroids.iter().enumerate() {
        centroids[relabel[old]] = c.clone();
    }
    let assignment = vectors
        .iter()
        .zip(&run.labels)
        .map(|(v, &l)| (v.day, relabel[l]))
        .collect();
    Clustering {
        n_clusters,
        seed,
        centroids,
        assignment,
        wss: run.wss,
    }
}

/// Within-cluster sum of squared Euclidean distances, recomputed from scratch.
pub fn wss(clustering: &Clustering, vectors: &[DayVector]) -> Result<f64> {
    vectors
        .iter()
        .map(|v| {
            let label = clustering.label_of(v.day).ok_or_else(|| {
                Error::InvalidArgument(format!("day {} has no cluster assignment", v.day))
            })?;
            let centroid = clustering.centroids.get(label).ok_or_else(|| {
                Error::InvalidArgument(format!("day {} assigned to missing cluster {label}", v.day))
            })?;
            Ok(squared_distance(&v.values, centroid))
        })
        .sum()
}

/// One k-means run per `k`, all with the same seed.
pub fn elbow_scan(
    vectors: &[DayVector],
    k_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if k_range.is_empty() {
        return Err(Error::InvalidArgument("empty k range".into()));
    }
    if *k_range.start() == 0 || *k_range.end() > vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "k range {k_range:?} outside [1, {}]",
            vectors.len()
        )));
    }
    k_range
        .map(|k| kmeans(vectors, k, seed).map(|c| (k, c.wss)))
        .collect()
}

/// The `k` after which WSS stops falling sharply: the `k` maximizing
/// `drop(k) / drop(k + 1)`, where `drop(k) = W(k - 1) - W(k)`. `None` when the
/// scan has fewer than three consecutive `k`.
pub fn elbow_point(scan: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for w in scan.windows(3) {
        let [(_, a), (k, b), (_, c)] = [w[0], w[1], w[2]];
        let ratio = (a - b) / (b - c).max(f64::MIN_POSITIVE);
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((k, ratio));
        }
    }
    best.map(|(k, _)| k)
}

/// Label of the centroid closest to `query`; ties go to the smaller label.
pub fn nearest_cluster(clustering: &Clustering, query: &[f64]) -> Result<usize> {
    let dim = clustering.centroids.first().map_or(0, Vec::len);
    if query.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "query has {} values, centroids have {dim}",
            query.len()
        )));
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cluster query".into()));
    }
    Ok(nearest(&clustering.centroids, query))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(day: usize, v: f64) -> DayVector {
        DayVector { day, values: vec![v; 96] }
    }

    #[test]
    fn one_cluster_per_vector_has_zero_wss() {
        let vs: Vec<_> = (0..5).map(|d| flat(d, d as f64 * 3.0)).collect();
        let c = kmeans(&vs, 5, 1).unwrap();
        assert_eq!(c.wss, 0.0);
        assert_eq!(c.members().iter().map(Vec::len).collect::<Vec<_>>(), vec![1; 5]);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let vs: Vec<_> = (0..4).map(|d| flat(d, d as f64)).collect();
        let c = kmeans(&vs, 1, 1).unwrap();
        assert!(c.centroids[0].iter().all(|&v| (v - 1.5).abs() < 1e-12));
        // Per coordinate the scatter is 2.25 + 0.25 + 0.25 + 2.25 = 5.
        assert!((c.wss - 5.0 * 96.0).abs() < 1e-9);
    }

    #[test]
    fn two_vector_wss_by_hand() {
        let vs = vec![flat(0, 0.0), flat(1, 2.0)];
        let c = kmeans(&vs, 1, 0).unwrap();
        assert!((wss(&c, &vs).unwrap() - 192.0).abs() < 1e-12);
    }

    #[test]
    fn wss_ignores_label_names() {
        let vs: Vec<_> = [0.0, 0.5, 9.0, 9.5].iter().enumerate().map(|(d, &v)| flat(d, v)).collect();
        let c = kmeans(&vs, 2, 3).unwrap();
        let mut swapped = c.clone();
        swapped.centroids.swap(0, 1);
        for l in swapped.assignment.values_mut() {
            *l = 1 - *l;
        }
        assert_eq!(wss(&c, &vs).unwrap(), wss(&swapped, &vs).unwrap());
    }

    #[test]
    fn wss_rejects_dangling_days() {
        let vs = vec![flat(0, 0.0), flat(1, 2.0)];
        let c = kmeans(&vs, 1, 0).unwrap();
        assert!(wss(&c, &[flat(7, 1.0)]).is_err());
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        let vs = vec![flat(0, 0.0)];
        assert!(kmeans(&vs, 2, 0).is_err());
        let bad = vec![DayVector { day: 0, values: vec![f64::NAN; 96] }, flat(1, 0.0)];
        assert!(matches!(kmeans(&bad, 1, 0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn duplicates_reach_zero_at_distinct_count() {
        let vs: Vec<_> = (0..9).map(|d| flat(d, (d % 3) as f64)).collect();
        let scan = elbow_scan(&vs, 1..=4, 5).unwrap();
        assert_eq!(scan[2], (3, 0.0));
        assert_eq!(scan[3].1, 0.0);
    }

    #[test]
    fn nearest_cluster_ties_go_low() {
        let c = Clustering {
            n_clusters: 2,
            seed: 0,
            centroids: vec![vec![0.0; 96], vec![2.0; 96]],
            assignment: BTreeMap::new(),
            wss: 0.0,
        };
        assert_eq!(nearest_cluster(&c, &[1.0; 96]).unwrap(), 0);
        assert_eq!(nearest_cluster(&c, &[2.0; 96]).unwrap(), 1);
        assert!(nearest_cluster(&c, &[1.0; 5]).is_err());
    }

    #[test]
    fn empty_cluster_is_repaired() {
        // Two initial centroids far from every point: one would end up empty.
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![10.0]];
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let run = lloyd(&refs, vec![vec![5.0], vec![100.0]], 300);
        let mut counts = [0; 2];
        for &l in &run.labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
        assert!(run.wss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn json_round_trip() {
        let vs: Vec<_> = (0..6).map(|d| flat(d, (d / 2) as f64)).collect();
        let c = kmeans(&vs, 3, 11).unwrap();
        let mut buf = Vec::new();
        c.save_json(&mut buf).unwrap();
        assert_eq!(Clustering::load_json(buf.as_slice()).unwrap(), c);
    }
}
