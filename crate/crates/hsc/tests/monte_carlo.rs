//! Seeded Monte-Carlo checks of the sampler, the expectation relations and the
//! clustering algorithms. Thresholds are statistical, seeds are fixed.

use hsc::clustering::{adjusted_rand_index, aggregate_bprime_eigvec, bphsc, bphsc_step, nbhsc, BphscInit, BphscOptions, NbhscOptions};
use hsc::eigen::{leading_eigenpairs, select_real_eigenpairs, MagnitudeFloor};
use hsc::hsbm::{expectation_eigvec_residual, rng_stream, sample_hypergraph, sample_labels, BlockmodelParams};
use hsc::spectral_ops::build_bprime;
use hsc::{Hypergraph, LabelVector};
use rand::Rng;
use rayon::prelude::*;

fn planted(n: usize, p2: f64, p3: f64, seed: u64) -> (Hypergraph, LabelVector) {
    let params = BlockmodelParams::balanced(n, 2, [(2, 5.0, p2), (3, 5.0, p3)]).with_seed(seed);
    let z = sample_labels(n, &params.q, seed).unwrap();
    (sample_hypergraph(&params, &z).unwrap(), z)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn label_proportions_follow_q() {
    let z = sample_labels(100_000, &[0.5, 0.5], 3).unwrap();
    for c in z.counts() {
        assert!((c as f64 / 1e5 - 0.5).abs() <= 0.01);
    }
    assert_eq!(z, sample_labels(100_000, &[0.5, 0.5], 3).unwrap());
}

#[test]
fn edge_counts_match_expected_degree() {
    let n = 200;
    let mut deg = [Vec::new(), Vec::new()];
    let mut counts = [Vec::new(), Vec::new()];
    for seed in 0..20 {
        let (h, _) = planted(n, 0.7, 0.4, seed);
        for (a, k) in [2usize, 3].into_iter().enumerate() {
            deg[a].push(k as f64 * h.m_k(k) as f64 / n as f64);
            counts[a].push(h.m_k(k) as f64);
        }
    }
    for (a, k) in [2usize, 3].into_iter().enumerate() {
        let mean_deg = deg[a].iter().sum::<f64>() / 20.0;
        assert!((mean_deg - 5.0).abs() <= 0.5, "k={k}: mean degree {mean_deg}");
        // Poisson counts: variance equals the mean n·c/k
        let expect = n as f64 * 5.0 / k as f64;
        let (m, _) = mean_and_se(&counts[a]);
        assert!((m - expect).abs() <= 3.0 * (expect / 20.0).sqrt(), "k={k}: mean count {m} vs {expect}");
    }
}

#[test]
fn monochromatic_fraction_matches_p() {
    let n = 1000;
    let params = BlockmodelParams::balanced(n, 2, [(3, 5.0, 0.5)]).with_seed(11);
    let z = sample_labels(n, &params.q, 11).unwrap();
    let h = sample_hypergraph(&params, &z).unwrap();
    let m = h.m_k(3) as f64;
    let mono = h.edges(3).iter().filter(|e| e.iter().all(|&v| z.labels()[v] == z.labels()[e[0]])).count() as f64;
    let frac = mono / m;
    assert!((frac - 0.5).abs() <= 0.03, "fraction {frac}");
    assert!((frac - 0.5).abs() <= 3.0 * (0.25 / m).sqrt());
}

#[test]
fn pure_within_cluster_edges_are_monochromatic() {
    let params = BlockmodelParams::balanced(60, 2, [(2, 3.0, 1.0), (4, 3.0, 1.0)]).with_seed(5);
    let z = sample_labels(60, &params.q, 5).unwrap();
    let h = sample_hypergraph(&params, &z).unwrap();
    assert!(h.iter_edges().all(|e| e.iter().all(|&v| z.labels()[v] == z.labels()[e[0]])));
}

#[test]
fn ensemble_mean_of_expectation_residuals_vanishes() {
    let n = 300;
    let params = BlockmodelParams::balanced(n, 2, [(2, 5.0, 0.9)]);
    let samples: Vec<(f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let p = params.clone().with_seed(seed);
            let z = sample_labels(n, &p.q, seed).unwrap();
            let h = sample_hypergraph(&p, &z).unwrap();
            let r = expectation_eigvec_residual(&h, &z, 2, &p).unwrap();
            (r.u_mean, r.v_mean)
        })
        .collect();
    let (mu, su) = mean_and_se(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
    let (mv, sv) = mean_and_se(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
    assert!(mu.abs() <= 3.0 * su, "u: mean {mu}, se {su}");
    assert!(mv.abs() <= 3.0 * sv, "v: mean {mv}, se {sv}");
}

#[test]
fn symmetric_point_node_aggregate_is_centred() {
    // p_2 = x_2 = 1/2 gives β_2 = 0
    let n = 300;
    let params = BlockmodelParams::balanced(n, 2, [(2, 5.0, 0.5)]);
    let means: Vec<f64> = (0..100u64)
        .map(|seed| {
            let p = params.clone().with_seed(seed);
            let z = sample_labels(n, &p.q, seed).unwrap();
            let h = sample_hypergraph(&p, &z).unwrap();
            expectation_eigvec_residual(&h, &z, 2, &p).unwrap().node_aggregate_mean
        })
        .collect();
    let (m, se) = mean_and_se(&means);
    assert!(m.abs() <= 3.0 * se, "mean {m}, se {se}");
}

#[test]
fn strong_signal_second_eigenvector_recovers_groups() {
    let agreement: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let (h, z) = planted(200, 0.95, 0.95, seed);
            let spectrum = leading_eigenpairs(&build_bprime::<f64>(&h), 6, 1e-8, 2000).unwrap();
            let real = select_real_eigenpairs(&spectrum, 6, 1e-6, MagnitudeFloor::Absolute(0.0));
            let v: Vec<_> = real[1].vector.iter().map(|&x| num_complex::Complex64::new(x, 0.0)).collect();
            let signs = aggregate_bprime_eigvec(&h, &v).unwrap();
            let sigma = z.sigma();
            let agree = signs.iter().zip(&sigma).filter(|(a, b)| **a == **b).count() as f64 / 200.0;
            agree.max(1.0 - agree)
        })
        .collect();
    let med = median(agreement);
    assert!(med >= 0.8, "median agreement {med}");
}

#[test]
fn nbhsc_recovers_groups_outside_band_only() {
    let ari = |p: f64| -> f64 {
        let a: Vec<f64> = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let (h, z) = planted(200, p, p, seed);
                nbhsc(&h, &NbhscOptions::new(2, 2, seed)).unwrap().with_reference(&z).unwrap().ari.unwrap()
            })
            .collect();
        a.iter().sum::<f64>() / 20.0
    };
    let strong = ari(0.95);
    let weak = ari(0.5);
    assert!(strong > 0.1, "strong {strong}");
    assert!(weak < 0.05, "weak {weak}");
}

#[test]
fn known_params_bphsc_outside_ellipse() {
    let a: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let params = BlockmodelParams::balanced(200, 2, [(2, 5.0, 0.9), (3, 5.0, 0.9)]).with_seed(seed);
            let z = sample_labels(200, &params.q, seed).unwrap();
            let h = sample_hypergraph(&params, &z).unwrap();
            let g = hsc::hsbm::build_g(&params).unwrap();
            let out = bphsc(&h, BphscInit::KnownParams(g), &BphscOptions::new(2, 4, seed)).unwrap();
            out.clustering.with_reference(&z).unwrap().ari.unwrap()
        })
        .collect();
    let mean = a.iter().sum::<f64>() / 20.0;
    assert!(mean > 0.1, "mean ARI {mean}");
}

#[test]
fn step_improves_on_perturbed_truth() {
    let pairs: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let (h, z) = planted(200, 0.9, 0.9, seed);
            let mut rng = rng_stream(seed, 300);
            let noisy: Vec<usize> = z.labels().iter().map(|&l| if rng.random_bool(0.2) { 1 - l } else { l }).collect();
            let z0 = LabelVector::new(noisy, 2).unwrap();
            let out = bphsc_step(&h, &z0, &BphscOptions::new(2, 10, seed)).unwrap();
            let before = adjusted_rand_index(z0.labels(), z.labels()).unwrap();
            let after = adjusted_rand_index(out.clustering.labels.labels(), z.labels()).unwrap();
            (before, after)
        })
        .collect();
    let gains: Vec<f64> = pairs.iter().map(|(b, a)| a - b).collect();
    assert!(median(gains) >= 0.0, "{pairs:?}");
}

#[test]
fn single_round_equals_one_step() {
    let (h, _) = planted(150, 0.9, 0.9, 4);
    let opts = BphscOptions::new(2, 8, 4).rounds(1);
    let z0 = hsc::clustering::random_labels(150, 2, 4);
    let full = bphsc(&h, BphscInit::Random, &opts).unwrap();
    let step = bphsc_step(&h, &z0, &opts).unwrap();
    assert_eq!(full.clustering.labels, step.clustering.labels);
    assert_eq!(full.history.len(), 1);
}

#[test]
fn bphsc_is_deterministic() {
    let (h, _) = planted(150, 0.9, 0.9, 8);
    let opts = BphscOptions::new(2, 8, 8).rounds(3);
    let a = bphsc(&h, BphscInit::Random, &opts).unwrap();
    let b = bphsc(&h, BphscInit::Random, &opts).unwrap();
    assert_eq!(a, b);
}
