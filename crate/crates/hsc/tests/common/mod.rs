//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hsc::eigen::dense_eigenpairs;
use hsc::hsbm::{group_matrices, rng_stream};
use hsc::spectral_ops::{build_j_message_passing, build_jprime, jacobian_l, jacobian_m, jacobian_n, GroupMatrixSet};
use hsc::Hypergraph;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

/// Random hypergraph with `n ≤ max_n` nodes, sizes drawn from {2,3,4}, at most
/// `max_m` edges per size. Edges are distinct node sets within a size, but
/// parallel copies across sizes cannot occur.
pub fn random_hypergraph(seed: u64, max_n: usize, max_m: usize) -> Hypergraph {
    let mut rng = rng_stream(seed, 99);
    let n = rng.random_range(4..=max_n);
    let mut sizes: Vec<usize> = [2, 3, 4].into_iter().filter(|_| rng.random_bool(0.6)).collect();
    if sizes.is_empty() {
        sizes.push(rng.random_range(2..=4));
    }
    let mut edges = Vec::new();
    for k in sizes {
        let m = rng.random_range(1..=max_m);
        for _ in 0..m {
            let mut e: Vec<usize> = sample(&mut rng, n, k).into_vec();
            e.sort_unstable();
            edges.push(e);
        }
    }
    Hypergraph::new(n, edges).expect("valid random hypergraph")
}

/// Random valid parameter matrices: positive symmetric rates, group weights,
/// and degrees from the degree identity.
pub fn random_g(seed: u64, h: &Hypergraph, groups: usize) -> GroupMatrixSet<f64> {
    let mut rng = rng_stream(seed, 77);
    let raw: Vec<f64> = (0..groups).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let q: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let mut rates = BTreeMap::new();
    let mut degrees = BTreeMap::new();
    for k in h.sizes() {
        let mut c = vec![vec![0.0; groups]; groups];
        for s in 0..groups {
            for t in s..groups {
                let v = rng.random_range(0.2..6.0);
                c[s][t] = v;
                c[t][s] = v;
            }
        }
        let d: Vec<f64> = (0..groups).map(|s| (0..groups).map(|t| q[t] * c[s][t]).sum::<f64>() / (k as f64 - 1.0)).collect();
        rates.insert(k, c);
        degrees.insert(k, d);
    }
    group_matrices(&q, &rates, &degrees, false).expect("positive degrees")
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Greedy nearest matching: every value in `sub` is paired with a distinct
/// value of `sup`. Returns the largest pairing distance.
pub fn containment_distance(sub: &[Complex64], sup: &[Complex64]) -> f64 {
    let mut used = vec![false; sup.len()];
    let mut order: Vec<usize> = (0..sub.len()).collect();
    order.sort_by(|&a, &b| sub[a].re.partial_cmp(&sub[b].re).unwrap().then(sub[a].im.partial_cmp(&sub[b].im).unwrap()));
    let mut worst: f64 = 0.0;
    for i in order {
        let best = (0..sup.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (sup[a] - sub[i]).norm().partial_cmp(&(sup[b] - sub[i]).norm()).unwrap());
        match best {
            Some(j) => {
                used[j] = true;
                worst = worst.max((sup[j] - sub[i]).norm());
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Replaces every numerical eigenvalue cluster (single linkage at `delta`) by
/// its mean. A defective eigenvalue of a j×j Jordan block is only computed to
/// about ε^{1/j}, but the cluster mean (a trace over the invariant subspace)
/// is well conditioned, so spectra are compared after this smoothing.
pub fn cluster_means(values: &[Complex64], delta: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= delta {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut comp, i)).collect();
    (0..n)
        .map(|i| {
            let members: Vec<Complex64> = (0..n).filter(|&j| roots[j] == roots[i]).map(|j| values[j]).collect();
            members.iter().sum::<Complex64>() / members.len() as f64
        })
        .collect()
}

/// Removes, for each `(value, count)`, the `count` entries nearest to `value`.
pub fn remove_nearest(values: &mut Vec<Complex64>, value: Complex64, count: usize) {
    for _ in 0..count {
        if let Some((idx, _)) = values
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - value).norm().partial_cmp(&(*b.1 - value).norm()).unwrap())
        {
            values.remove(idx);
        }
    }
}

/// Worst residual of the two-alternative Jacobian correspondence over every
/// dense eigenpair `(ξ, u)` of the message-passing Jacobian: either `(ξ, Lu)`
/// is an eigenpair of J′, or `(ξ, Mu)` is an eigenpair of N, or both
/// aggregates vanish. Each alternative is measured relative to `‖u‖ = 1`
/// and requires its aggregate to be non-negligible.
pub fn jacobian_correspondence_residual(h: &Hypergraph, g: &GroupMatrixSet<f64>) -> f64 {
    let l = g.groups();
    let j = build_j_message_passing(h, g);
    let jp = build_jprime(h, g);
    let spectrum = dense_eigenpairs(&j).expect("dense solve");
    let mut worst: f64 = 0.0;
    for p in &spectrum.pairs {
        let xi = p.value;
        let lu = jacobian_l(h, &p.vector, l);
        let mu = jacobian_m(h, &p.vector, l);
        let (nl, nm) = (norm(&lu), norm(&mu));
        let r1 = if nl > 1e-9 {
            let jl = jp.matvec_complex(&lu);
            norm(&jl.iter().zip(&lu).map(|(a, b)| a - xi * b).collect::<Vec<_>>()) / nl
        } else {
            f64::INFINITY
        };
        let r2 = if nm > 1e-9 {
            let nmv = jacobian_n(h, g, &mu);
            norm(&nmv.iter().zip(&mu).map(|(a, b)| a - xi * b).collect::<Vec<_>>()) / nm
        } else {
            f64::INFINITY
        };
        let r = if nl <= 1e-9 && nm <= 1e-9 { 0.0 } else { r1.min(r2) };
        worst = worst.max(r);
    }
    worst
}

/// Eigenvalues of B with the trivial values of the Ihara-Bass prefactor
/// removed: 1 with multiplicity `max(0, Σ_k m_k(k−1) − κn)` and `1−k` with
/// multiplicity `max(0, m_k − n)`.
pub fn informative_b_values(h: &Hypergraph, values: &[Complex64]) -> Vec<Complex64> {
    let n = h.n() as i64;
    let kappa = h.kappa() as i64;
    let mut vals = values.to_vec();
    let ones: i64 = h.sizes().iter().map(|&k| h.m_k(k) as i64 * (k as i64 - 1)).sum::<i64>() - kappa * n;
    remove_nearest(&mut vals, Complex64::new(1.0, 0.0), ones.max(0) as usize);
    for k in h.sizes() {
        let extra = h.m_k(k) as i64 - n;
        remove_nearest(&mut vals, Complex64::new(1.0 - k as f64, 0.0), extra.max(0) as usize);
    }
    vals
}
