//! Lloyd's k-means with k-means++ seeding and parallel restarts.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hsbm::rng_stream;
use crate::scalar::Scalar;

const MAX_LLOYD: usize = 300;

/// Result of a k-means run.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeans<T> {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<T>>,
    /// Within-group sum of squares.
    pub objective: T,
    /// Objective after each Lloyd iteration of the winning run.
    pub history: Vec<T>,
}

fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Total sum of squares about the mean.
pub fn total_sum_of_squares<T: Scalar>(points: &[Vec<T>]) -> T {
    if points.is_empty() {
        return T::zero();
    }
    let d = points[0].len();
    let nf = T::of_usize(points.len());
    let mean: Vec<T> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<T>() / nf).collect();
    points.iter().map(|p| dist2(p, &mean)).sum()
}

fn plus_plus<T: Scalar, R: Rng>(points: &[Vec<T>], k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<T> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().map(|v| v.f64()).sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, v) in d2.iter().enumerate() {
                u -= v.f64();
                if u < 0.0 {
                    idx = i;
                    break;
                }
            }
            idx
        };
        centers.push(points[pick].clone());
        for (di, p) in d2.iter_mut().zip(points) {
            *di = (*di).min(dist2(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn assign<T: Scalar>(points: &[Vec<T>], centers: &[Vec<T>], labels: &mut [usize]) -> T {
    let mut obj = T::zero();
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut bd = dist2(p, &centers[0]);
        for (c, center) in centers.iter().enumerate().skip(1) {
            let d = dist2(p, center);
            if d < bd {
                best = c;
                bd = d;
            }
        }
        *l = best;
        obj += bd;
    }
    obj
}

fn lloyd<T: Scalar, R: Rng>(points: &[Vec<T>], k: usize, rng: &mut R) -> KMeans<T> {
    let n = points.len();
    let d = points[0].len();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![0; n];
    let mut objective = assign(points, &centers, &mut labels);
    let mut history = vec![objective];
    for _ in 0..MAX_LLOYD {
        let mut sums = vec![vec![T::zero(); d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += *x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let cf = T::of_usize(counts[c]);
                centers[c] = sums[c].iter().map(|s| *s / cf).collect();
            }
        }
        // re-seed empty clusters at the point farthest from its centre
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dist2(&points[a], &centers[labels[a]]);
                        let db = dist2(&points[b], &centers[labels[b]]);
                        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                centers[c] = points[far].clone();
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
            }
        }
        let old = labels.clone();
        let obj = assign(points, &centers, &mut labels);
        history.push(obj);
        objective = obj;
        if labels == old {
            break;
        }
    }
    KMeans { labels, centers, objective, history }
}

/// Best of `restarts` k-means runs by within-group sum of squares.
/// Deterministic for a given seed; restarts run in parallel.
pub fn kmeans<T: Scalar>(points: &[Vec<T>], k: usize, restarts: usize, seed: u64) -> Result<KMeans<T>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("k-means needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidParams("points must share a positive dimension".into()));
    }
    let runs: Vec<KMeans<T>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| lloyd(points, k, &mut rng_stream(seed, 1000 + r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.objective.partial_cmp(&b.objective).unwrap_or(std::cmp::Ordering::Equal).then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .expect("at least one run");
    Ok(best)
}
