//! Hypergraph stochastic blockmodel: ball-dropping sampler, closed-form
//! detectability quantities for two balanced groups, and parameter estimation
//! from a labelled hypergraph.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, LabelVector};
use crate::spectral_ops::{build_bk, GroupMatrixSet};

/// Per-size generation parameters: mean k-degree `c` and within-cluster fraction `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeParams {
    pub c: f64,
    pub p: f64,
}

/// How many edges of each size are generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EdgeCount {
    /// `M_k ~ Poisson(n·c_k/k)`.
    #[default]
    Poisson,
    /// `M_k = round(n·c_k/k)`.
    Fixed,
}

/// Blockmodel parameters in the ball-dropping parameterisation.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockmodelParams {
    pub n: usize,
    pub groups: usize,
    pub q: Vec<f64>,
    pub sizes: BTreeMap<usize, SizeParams>,
    pub seed: u64,
    pub edge_count: EdgeCount,
}

impl BlockmodelParams {
    /// Balanced groups, Poisson edge counts, seed 0.
    pub fn balanced(n: usize, groups: usize, sizes: impl IntoIterator<Item = (usize, f64, f64)>) -> Self {
        BlockmodelParams {
            n,
            groups,
            q: vec![1.0 / groups as f64; groups],
            sizes: sizes.into_iter().map(|(k, c, p)| (k, SizeParams { c, p })).collect(),
            seed: 0,
            edge_count: EdgeCount::Poisson,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks `Σ q = 1`, `c_k ≥ 0`, `p_k ∈ [0,1]`, `k ≥ 2`.
    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.q.len() != self.groups {
            return Err(Error::InvalidParams(format!("q has {} entries for {} groups", self.q.len(), self.groups)));
        }
        let sum: f64 = self.q.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidParams(format!("group proportions must be a distribution, sum = {sum}")));
        }
        for (&k, sp) in &self.sizes {
            if k < 2 {
                return Err(Error::InvalidParams(format!("edge size {k} < 2")));
            }
            if !(sp.c >= 0.0) || !(0.0..=1.0).contains(&sp.p) {
                return Err(Error::InvalidParams(format!("size {k}: need c >= 0 and 0 <= p <= 1, got c = {}, p = {}", sp.c, sp.p)));
            }
        }
        Ok(())
    }

    /// Sizes with `c_k > 0`.
    pub fn active_sizes(&self) -> Vec<usize> {
        self.sizes.iter().filter(|(_, s)| s.c > 0.0).map(|(&k, _)| k).collect()
    }

    fn is_two_balanced(&self) -> bool {
        self.groups == 2 && self.q.iter().all(|&x| (x - 0.5).abs() <= 1e-12)
    }
}

/// Independent RNG stream derived from a seed and a purpose tag.
pub fn rng_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

const LABEL_STREAM: u64 = 1;
const EDGE_STREAM: u64 = 2;

/// I.i.d. categorical labels with probabilities `q`.
pub fn sample_labels(n: usize, q: &[f64], seed: u64) -> Result<LabelVector> {
    let sum: f64 = q.iter().sum();
    if q.is_empty() || (sum - 1.0).abs() > 1e-12 || q.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParams("group proportions must be a distribution".into()));
    }
    let mut rng = rng_stream(seed, LABEL_STREAM);
    let labels = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (s, &w) in q.iter().enumerate() {
                acc += w;
                if u < acc {
                    return s;
                }
            }
            q.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        })
        .collect();
    LabelVector::new(labels, q.len())
}

fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Samples a hypergraph given labels. For each size, `M_k` edges are drawn;
/// each is monochromatic with probability `p_k` (group chosen proportionally to
/// its number of k-subsets, then a uniform k-subset of it) and otherwise a
/// uniform non-monochromatic k-subset by rejection. Parallel edges are kept.
pub fn sample_hypergraph(params: &BlockmodelParams, z: &LabelVector) -> Result<Hypergraph> {
    params.validate()?;
    if z.len() != params.n {
        return Err(Error::LengthMismatch { expected: params.n, got: z.len() });
    }
    let n = params.n;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); z.groups()];
    for (i, &l) in z.labels().iter().enumerate() {
        members[l].push(i);
    }
    let nonempty = members.iter().filter(|m| !m.is_empty()).count();
    let mut rng = rng_stream(params.seed, EDGE_STREAM);
    let mut edges = Vec::new();
    for (&k, sp) in &params.sizes {
        if sp.c == 0.0 {
            continue;
        }
        let mean = n as f64 * sp.c / k as f64;
        let count = match params.edge_count {
            EdgeCount::Fixed => mean.round() as usize,
            EdgeCount::Poisson => Poisson::new(mean).map_err(|e| Error::InvalidParams(e.to_string()))?.sample(&mut rng) as usize,
        };
        let ln_w: Vec<f64> = members.iter().map(|m| ln_choose(m.len(), k)).collect();
        let max_w = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if sp.p > 0.0 && max_w == f64::NEG_INFINITY {
            return Err(Error::InvalidParams(format!("no group has at least {k} members")));
        }
        if sp.p < 1.0 && (nonempty < 2 || n < k) {
            return Err(Error::InvalidParams(format!("no non-monochromatic {k}-subsets exist")));
        }
        let weights: Vec<f64> = ln_w.iter().map(|&w| (w - max_w).exp()).collect();
        let wsum: f64 = weights.iter().sum();
        for _ in 0..count {
            let e: Vec<usize> = if rng.random::<f64>() < sp.p {
                let mut u = rng.random::<f64>() * wsum;
                let mut g = weights.len() - 1;
                for (s, &w) in weights.iter().enumerate() {
                    if u < w {
                        g = s;
                        break;
                    }
                    u -= w;
                }
                while weights[g] == 0.0 {
                    g -= 1;
                }
                index::sample(&mut rng, members[g].len(), k).into_iter().map(|i| members[g][i]).collect()
            } else {
                loop {
                    let e: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
                    let l0 = z.labels()[e[0]];
                    if e.iter().any(|&v| z.labels()[v] != l0) {
                        break e;
                    }
                }
            };
            edges.push(e);
        }
    }
    Hypergraph::new(n, edges)
}

/// `r_k = (1 − 2^{2−k}) / (2 − 2^{2−k})`: the probability that a uniformly
/// random non-monochromatic k-edge pairs a node with a same-group neighbour.
pub fn r_k(k: usize) -> f64 {
    let t = 2f64.powi(2 - k as i32);
    (1.0 - t) / (2.0 - t)
}

/// Two-group in/out rates `(c_k^in, c_k^out)` with
/// `c_k^in = 2(k−1)c_k[p_k + (1−p_k)r_k]` and `c_k^out = 2(k−1)c_k − c_k^in`.
pub fn ckin_ckout(k: usize, c: f64, p: f64) -> (f64, f64) {
    let tot = 2.0 * (k as f64 - 1.0) * c;
    let cin = tot * (p + (1.0 - p) * r_k(k));
    (cin, tot - cin)
}

/// Closed-form quantities for one edge size.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeTheory {
    pub k: usize,
    pub c: f64,
    pub p: f64,
    pub r: f64,
    pub c_in: f64,
    pub c_out: f64,
    /// `α_k = (k−1)c_k`.
    pub alpha: f64,
    /// `β_k = (c_k^in − c_k^out)/2`.
    pub beta: f64,
    /// `γ_k = c_k^in/((k−1)c_k) − 1`.
    pub gamma: f64,
    /// Centre `x_k` of the `λ = 1` ellipsoid in `p_k`.
    pub ellipse_center: f64,
    /// Semi-axis of the `λ = 1` ellipsoid along `p_k`.
    pub ellipse_radius: f64,
    /// Centre of the `λ = ν` ellipsoid in `p_k`.
    pub collision_center: f64,
    /// Semi-axis of the `λ = ν` ellipsoid along `p_k`.
    pub collision_radius: f64,
}

/// Detectability report for the two-balanced-group blockmodel.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryReport {
    pub per_size: Vec<SizeTheory>,
    pub alpha: f64,
    pub beta: f64,
    /// β from the parameterised sum `Σ (k−1)c_k[2(1−r_k)p_k + 2r_k − 1]`.
    pub beta_parameterized: f64,
    pub lambda: f64,
    pub nu: f64,
    /// `β² > α`.
    pub detect_vanilla: bool,
    /// `|λ| > 1`.
    pub detect_bp: bool,
    /// `√β`, the conjectured bulk radius of B.
    pub sqrt_beta: f64,
}

/// Per-size weights `w_k = (k−1)c_k` and slopes `s_k = 2 − 2r_k`; in these
/// terms `β_k = w_k s_k (p_k − x_k)` and `λ = Σ w_k s_k² (p_k − x_k)²`.
fn ellipse_terms(k: usize, c: f64) -> (f64, f64, f64) {
    let r = r_k(k);
    let w = (k as f64 - 1.0) * c;
    let s = 2.0 - 2.0 * r;
    (w, s, (1.0 - 2.0 * r) / s)
}

/// Computes α, β, γ, λ, ν and the boundary ellipsoids; two balanced groups only.
pub fn theory_report(params: &BlockmodelParams) -> Result<TheoryReport> {
    params.validate()?;
    if !params.is_two_balanced() {
        return Err(Error::InvalidParams("theory requires two balanced groups".into()));
    }
    let active = params.active_sizes();
    let alpha: f64 = active.iter().map(|&k| (k as f64 - 1.0) * params.sizes[&k].c).sum();
    let mut per_size = Vec::new();
    for &k in &active {
        let SizeParams { c, p } = params.sizes[&k];
        let (c_in, c_out) = ckin_ckout(k, c, p);
        let (w, s, x) = ellipse_terms(k, c);
        per_size.push(SizeTheory {
            k,
            c,
            p,
            r: r_k(k),
            c_in,
            c_out,
            alpha: w,
            beta: (c_in - c_out) / 2.0,
            gamma: c_in / w - 1.0,
            ellipse_center: x,
            ellipse_radius: 1.0 / (s * w.sqrt()),
            collision_center: x + 1.0 / (2.0 * s),
            collision_radius: (alpha / (4.0 * w)).sqrt() / s,
        });
    }
    let beta: f64 = per_size.iter().map(|t| t.beta).sum();
    let beta_parameterized = active
        .iter()
        .map(|&k| {
            let SizeParams { c, p } = params.sizes[&k];
            let r = r_k(k);
            (k as f64 - 1.0) * c * (2.0 * (1.0 - r) * p + 2.0 * r - 1.0)
        })
        .sum();
    let lambda = per_size.iter().map(|t| t.gamma * t.beta).sum();
    let nu = per_size.iter().map(|t| t.gamma * t.alpha).sum();
    Ok(TheoryReport {
        per_size,
        alpha,
        beta,
        beta_parameterized,
        lambda,
        nu,
        detect_vanilla: beta * beta > alpha,
        detect_bp: f64::abs(lambda) > 1.0,
        sqrt_beta: beta.abs().sqrt(),
    })
}

/// `λ = Σ_k (k−1)c_k (2−2r_k)² (p_k − x_k)²` as a function of the `p_k`.
pub fn lambda_of(sizes: &BTreeMap<usize, SizeParams>) -> f64 {
    sizes
        .iter()
        .filter(|(_, s)| s.c > 0.0)
        .map(|(&k, sp)| {
            let (w, s, x) = ellipse_terms(k, sp.c);
            w * s * s * (sp.p - x).powi(2)
        })
        .sum()
}

/// `β = Σ_k (k−1)c_k (2−2r_k)(p_k − x_k)` as a function of the `p_k`.
pub fn beta_of(sizes: &BTreeMap<usize, SizeParams>) -> f64 {
    sizes
        .iter()
        .filter(|(_, s)| s.c > 0.0)
        .map(|(&k, sp)| {
            let (w, s, x) = ellipse_terms(k, sp.c);
            w * s * (sp.p - x)
        })
        .sum()
}

/// `g_{k;s,t} = q_s (c_k(s,t)/((k−1)c_k(s)) − 1)`. Rows with `c_k(s) = 0` are
/// zero when `allow_zero`, otherwise an error.
pub fn group_matrices(
    q: &[f64],
    rates: &BTreeMap<usize, Vec<Vec<f64>>>,
    degrees: &BTreeMap<usize, Vec<f64>>,
    allow_zero: bool,
) -> Result<GroupMatrixSet<f64>> {
    let l = q.len();
    let mut g = GroupMatrixSet::new(l);
    for (&k, c) in rates {
        let cs = &degrees[&k];
        let mut m = vec![vec![0.0; l]; l];
        for s in 0..l {
            if cs[s] == 0.0 {
                if allow_zero {
                    continue;
                }
                return Err(Error::InvalidParams(format!("zero expected {k}-degree for group {s}")));
            }
            for t in 0..l {
                m[s][t] = q[s] * (c[s][t] / ((k as f64 - 1.0) * cs[s]) - 1.0);
            }
        }
        g.insert(k, m);
    }
    Ok(g)
}

/// Theory G_k for two balanced groups: `c_k(s,s) = c_k^in`, `c_k(s,t) = c_k^out`.
pub fn build_g(params: &BlockmodelParams) -> Result<GroupMatrixSet<f64>> {
    params.validate()?;
    if !params.is_two_balanced() {
        return Err(Error::InvalidParams("theory G_k requires two balanced groups".into()));
    }
    let mut rates = BTreeMap::new();
    let mut degrees = BTreeMap::new();
    for (&k, sp) in &params.sizes {
        let (cin, cout) = ckin_ckout(k, sp.c, sp.p);
        rates.insert(k, vec![vec![cin, cout], vec![cout, cin]]);
        degrees.insert(k, vec![sp.c; 2]);
    }
    group_matrices(&params.q, &rates, &degrees, false)
}

/// Estimated blockmodel quantities from a labelled hypergraph.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub g: GroupMatrixSet<f64>,
    pub q: Vec<f64>,
    /// Ordered co-membership counts `m̂_k^{s,t}`.
    pub m: BTreeMap<usize, Vec<Vec<f64>>>,
    /// `ĉ_k(s,t) = m̂_k^{s,t}/(q̂_s q̂_t n)`.
    pub c_st: BTreeMap<usize, Vec<Vec<f64>>>,
    /// `ĉ_k(s) = Σ_t q̂_t ĉ_k(s,t)/(k−1)`.
    pub c_s: BTreeMap<usize, Vec<f64>>,
}

/// Estimates with pseudocount 1; see [`estimate_parameters_with`].
pub fn estimate_parameters(h: &Hypergraph, z: &LabelVector) -> Result<Estimate> {
    estimate_parameters_with(h, z, 1.0)
}

/// Estimates `q̂_s = (n_s + ε)/(n + ℓε)`, the ordered co-membership counts
/// `m̂_k^{s,t} = Σ_R #_s(R)(#_t(R) − δ_{st})`, the rates ĉ and the matrices Ĝ_k.
pub fn estimate_parameters_with(h: &Hypergraph, z: &LabelVector, eps: f64) -> Result<Estimate> {
    if z.len() != h.n() {
        return Err(Error::LengthMismatch { expected: h.n(), got: z.len() });
    }
    let l = z.groups();
    let n = h.n() as f64;
    let q: Vec<f64> = z.counts().iter().map(|&c| (c as f64 + eps) / (n + l as f64 * eps)).collect();
    let mut m = BTreeMap::new();
    let mut c_st = BTreeMap::new();
    let mut c_s = BTreeMap::new();
    for k in h.sizes() {
        let mut mk = vec![vec![0.0; l]; l];
        let mut cnt = vec![0usize; l];
        for e in h.edges(k) {
            cnt.iter_mut().for_each(|c| *c = 0);
            for &v in e {
                cnt[z.labels()[v]] += 1;
            }
            for s in 0..l {
                for t in 0..l {
                    let pairs = cnt[s] * cnt[t] - if s == t { cnt[s] } else { 0 };
                    mk[s][t] += pairs as f64;
                }
            }
        }
        let ck: Vec<Vec<f64>> = (0..l)
            .map(|s| (0..l).map(|t| if q[s] * q[t] > 0.0 { mk[s][t] / (q[s] * q[t] * n) } else { 0.0 }).collect())
            .collect();
        let cs: Vec<f64> = (0..l).map(|s| (0..l).map(|t| q[t] * ck[s][t]).sum::<f64>() / (k as f64 - 1.0)).collect();
        m.insert(k, mk);
        c_st.insert(k, ck);
        c_s.insert(k, cs);
    }
    let g = group_matrices(&q, &c_st, &c_s, true)?;
    Ok(Estimate { g, q, m, c_st, c_s })
}

/// Residuals of the in-expectation eigen-relations for `B_k` with
/// `u_{iQ} = |Q| − 1` (eigenvalue α_k) and `v_{iQ} = Σ_{j∈Q∖i} σ_j` (eigenvalue β_k).
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationResidual {
    /// `‖B_k u − α_k u‖₁ / m̌`.
    pub u_l1: f64,
    /// `‖B_k v − β_k v‖₁ / m̌`.
    pub v_l1: f64,
    /// Signed mean of `(B_k u − α_k u)_{iQ}` over pointed edges.
    pub u_mean: f64,
    /// Signed mean of `σ_i (B_k v − β_k v)_{iQ}` over pointed edges.
    pub v_mean: f64,
    /// Mean over nodes of `σ_i Σ_{Q∈E_k(i)} v_{iQ}`.
    pub node_aggregate_mean: f64,
}

/// Evaluates the eigen-expectation relations on one sample. Single samples do
/// not satisfy them; only ensemble means of the signed quantities vanish.
pub fn expectation_eigvec_residual(h: &Hypergraph, z: &LabelVector, k: usize, params: &BlockmodelParams) -> Result<ExpectationResidual> {
    let report = theory_report(params)?;
    let st = report.per_size.iter().find(|t| t.k == k).ok_or_else(|| Error::InvalidParams(format!("size {k} has no mass")))?;
    let sigma = z.sigma();
    let pe = h.pointed_edges();
    let off = h.pointed_offsets();
    let mut u = Vec::with_capacity(pe.len());
    let mut v = Vec::with_capacity(pe.len());
    let mut point_sigma = Vec::with_capacity(pe.len());
    for e in h.iter_edges() {
        let tot: f64 = e.iter().map(|&j| sigma[j]).sum();
        for &i in e {
            u.push(e.len() as f64 - 1.0);
            v.push(tot - sigma[i]);
            point_sigma.push(sigma[i]);
        }
    }
    let bk = build_bk::<f64>(h, k);
    let bu = bk.matvec(&u);
    let bv = bk.matvec(&v);
    let mm = pe.len().max(1) as f64;
    let ru: Vec<f64> = bu.iter().zip(&u).map(|(a, b)| a - st.alpha * b).collect();
    let rv: Vec<f64> = bv.iter().zip(&v).map(|(a, b)| a - st.beta * b).collect();
    let mut agg = vec![0.0; h.n()];
    for (q, e) in h.iter_edges().enumerate() {
        if e.len() == k {
            for (p, &i) in e.iter().enumerate() {
                agg[i] += v[off[q] + p];
            }
        }
    }
    Ok(ExpectationResidual {
        u_l1: ru.iter().map(|x| x.abs()).sum::<f64>() / mm,
        v_l1: rv.iter().map(|x| x.abs()).sum::<f64>() / mm,
        u_mean: ru.iter().sum::<f64>() / mm,
        v_mean: rv.iter().zip(&point_sigma).map(|(r, s)| r * s).sum::<f64>() / mm,
        node_aggregate_mean: agg.iter().zip(&sigma).map(|(a, s)| a * s).sum::<f64>() / h.n().max(1) as f64,
    })
}
