//! Independent oracles: dense spectra, brute-force clustering and pair counting.

mod common;

use common::{cluster_means, containment_distance, informative_b_values, jacobian_correspondence_residual, norm, random_g, random_hypergraph};
use hsc::clustering::{adjusted_rand_index, aggregate_j_eigvec, aggregate_jprime_eigvec, kmeans};
use hsc::eigen::{canonicalize, dense_eigenpairs};
use hsc::hsbm::rng_stream;
use hsc::spectral_ops::{build_b, build_bk, build_bprime, build_j, build_j_message_passing, build_jprime, jacobian_l, reduce_pointed, GroupMatrixSet};
use hsc::Hypergraph;
use num_complex::Complex64;
use rand::Rng;

#[test]
fn bprime_spectrum_contains_informative_b_spectrum() {
    for seed in 0..50 {
        let h = random_hypergraph(seed, 12, 8);
        let eb = dense_eigenpairs(&build_b::<f64>(&h)).unwrap().values();
        let ep = dense_eigenpairs(&build_bprime::<f64>(&h)).unwrap().values();
        let informative = informative_b_values(&h, &cluster_means(&eb, 1e-2));
        let d = containment_distance(&cluster_means(&informative, 1e-2), &cluster_means(&ep, 1e-2));
        assert!(d <= 1e-6, "seed {seed}: distance {d}");
    }
}

#[test]
fn transposed_b_eigenvectors_aggregate_to_bprime_eigenvectors() {
    for seed in 0..20 {
        let h = random_hypergraph(seed, 10, 6);
        let bp = build_bprime::<f64>(&h);
        let spectrum = dense_eigenpairs(&build_b::<f64>(&h).transpose()).unwrap();
        for p in &spectrum.pairs {
            let (mut x, x2) = reduce_pointed(&h, &p.vector);
            x.extend(x2);
            let nx = norm(&x);
            if nx <= 1e-9 {
                continue;
            }
            let bx = bp.matvec_complex(&x);
            let r = norm(&bx.iter().zip(&x).map(|(a, b)| a - p.value * b).collect::<Vec<_>>());
            assert!(r <= 1e-6 * nx, "seed {seed}: eigenvalue {} residual {r}", p.value);
        }
    }
}

#[test]
fn jacobian_correspondence_on_random_instances() {
    for seed in 0..20 {
        let h = random_hypergraph(seed, 8, 5);
        let groups = 2 + (seed as usize % 2);
        let g = random_g(seed, &h, groups);
        let r = jacobian_correspondence_residual(&h, &g);
        assert!(r <= 1e-6, "seed {seed}: residual {r}");
    }
}

#[test]
fn uniform_jacobian_spectrum_is_product_of_factors() {
    for seed in 0..10 {
        // uniform 3-hypergraph
        let mut rng = rng_stream(seed, 41);
        let n = 7;
        let edges: Vec<Vec<usize>> = (0..6)
            .map(|_| {
                let mut e = rand::seq::index::sample(&mut rng, n, 3).into_vec();
                e.sort_unstable();
                e
            })
            .collect();
        let h = Hypergraph::new(n, edges).unwrap();
        let g = random_g(seed, &h, 2);
        let gk = g.get(3);
        let gdense = dense_eigenpairs(&hsc::SparseOp::from_triplets(
            2,
            2,
            (0..2).flat_map(|s| (0..2).map(move |t| (s, t))).map(|(s, t)| (s, t, gk[s][t])),
            hsc::sparse::OperatorTag::Generic,
        ))
        .unwrap()
        .values();
        let bk = dense_eigenpairs(&build_bk::<f64>(&h, 3)).unwrap().values();
        let products: Vec<Complex64> = gdense.iter().flat_map(|a| bk.iter().map(move |b| a * b)).collect();
        let ej = dense_eigenpairs(&build_j(&h, &g)).unwrap().values();
        assert!(containment_distance(&ej, &products) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn identity_and_zero_parameters() {
    let h = random_hypergraph(3, 8, 4);
    let b = build_b::<f64>(&h).to_dense();
    let id = GroupMatrixSet::<f64>::identity(2, &h.sizes());
    let j = build_j(&h, &id).to_dense();
    let m = b.len();
    for s in 0..2 {
        for r in 0..m {
            for c in 0..m {
                assert_eq!(j[s * m + r][s * m + c], b[r][c]);
                assert_eq!(j[s * m + r][(1 - s) * m + c], 0.0);
            }
        }
    }
    let zero = GroupMatrixSet::<f64>::new(2);
    assert_eq!(build_j(&h, &zero).nnz(), 0);
    assert_eq!(build_jprime(&h, &zero).nnz(), 0);
    assert_eq!(build_jprime(&h, &id).nrows(), 2 * 2 * h.kappa() * h.n());
}

#[test]
fn jacobian_and_reduced_paths_give_same_signs() {
    let mut compared = 0;
    for seed in 0..10 {
        let h = random_hypergraph(seed, 8, 5);
        let g = random_g(seed, &h, 2);
        let jp = build_jprime(&h, &g);
        let jps = dense_eigenpairs(&jp).unwrap();
        for p in dense_eigenpairs(&build_j_message_passing(&h, &g)).unwrap().pairs {
            if p.value.im != 0.0 || p.value.norm() < 1e-6 {
                continue;
            }
            let mut lu = jacobian_l(&h, &p.vector, 2);
            if norm(&lu) < 1e-6 {
                continue;
            }
            // simple eigenvalue of J′ only, so its eigenvector is unique up to phase
            let close: Vec<_> = jps.pairs.iter().filter(|q| (q.value - p.value).norm() < 1e-6).collect();
            if close.len() != 1 {
                continue;
            }
            canonicalize(&mut lu);
            let from_j = aggregate_j_eigvec(&h, &p.vector, 2).unwrap();
            let from_lu = aggregate_jprime_eigvec(&h, &lu, 2).unwrap();
            let from_jp = aggregate_jprime_eigvec(&h, &close[0].vector, 2).unwrap();
            // aggregate of u and of Lu agree up to the common phase of Lu
            let flip = from_lu.iter().flatten().zip(from_j.iter().flatten()).find(|(a, b)| **a != 0.0 && **b != 0.0).map(|(a, b)| a * b).unwrap_or(1.0);
            for (a, b) in from_lu.iter().flatten().zip(from_j.iter().flatten()) {
                assert_eq!(*a, flip * b);
            }
            let agg = &close[0].vector;
            let n = h.n();
            let kap = h.kappa();
            for i in 0..n {
                for s in 0..2 {
                    let v: f64 = (0..kap).map(|a| agg[(s * kap + a) * n + i].re).sum();
                    let w: f64 = (0..kap).map(|a| lu[(s * kap + a) * n + i].re).sum();
                    if v.abs() > 1e-8 && w.abs() > 1e-8 {
                        assert_eq!(from_jp[i][s], from_lu[i][s], "seed {seed} node {i} group {s}");
                    }
                }
            }
            compared += 1;
        }
    }
    assert!(compared > 0);
}

fn pair_count_ari(z1: &[usize], z2: &[usize]) -> f64 {
    // Rand-index contingency from explicit pair enumeration
    let n = z1.len();
    let (mut both, mut only1, mut only2, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let a = z1[i] == z1[j];
            let b = z2[i] == z2[j];
            total += 1.0;
            if a && b {
                both += 1.0;
            }
            if a {
                only1 += 1.0;
            }
            if b {
                only2 += 1.0;
            }
        }
    }
    let expected = only1 * only2 / total;
    let max = (only1 + only2) / 2.0;
    if max == expected {
        0.0
    } else {
        (both - expected) / (max - expected)
    }
}

#[test]
fn ari_matches_pair_enumeration() {
    for seed in 0..200 {
        let mut rng = rng_stream(seed, 51);
        let n = rng.random_range(2..60);
        let (l1, l2) = (rng.random_range(1..6), rng.random_range(1..6));
        let z1: Vec<usize> = (0..n).map(|_| rng.random_range(0..l1)).collect();
        let z2: Vec<usize> = (0..n).map(|_| rng.random_range(0..l2)).collect();
        let a = adjusted_rand_index(&z1, &z2).unwrap();
        assert!((a - pair_count_ari(&z1, &z2)).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn ari_null_distribution_is_near_zero() {
    let mut rng = rng_stream(2024, 52);
    let z1: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let z2: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    assert!(adjusted_rand_index(&z1, &z2).unwrap().abs() <= 0.02);
}

fn brute_force_two_means(pts: &[Vec<f64>]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut obj = 0.0;
        for side in [true, false] {
            let members: Vec<&Vec<f64>> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).map(|i| &pts[i]).collect();
            let d = pts[0].len();
            let mean: Vec<f64> = (0..d).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            obj += members.iter().map(|p| p.iter().zip(&mean).map(|(x, m)| (x - m).powi(2)).sum::<f64>()).sum::<f64>();
        }
        best = best.min(obj);
    }
    best
}

#[test]
fn kmeans_matches_brute_force_on_blobs() {
    for seed in 0..10 {
        let mut rng = rng_stream(seed, 61);
        let n = 8 + (seed as usize % 5);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { 5.0 } else { -5.0 };
                vec![c + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let km = kmeans(&pts, 2, 20, seed).unwrap();
        let oracle = brute_force_two_means(&pts);
        assert!((km.objective - oracle).abs() <= 1e-9 * oracle.max(1.0), "seed {seed}: {} vs {oracle}", km.objective);
        let truth: Vec<usize> = (0..n).map(|i| i % 2).collect();
        assert_eq!(adjusted_rand_index(&km.labels, &truth).unwrap(), 1.0);
    }
}
