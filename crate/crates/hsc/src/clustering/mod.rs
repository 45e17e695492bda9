//! From eigenvectors to node labels: aggregation, sign embeddings, k-means,
//! ARI, and the NBHSC and alternating BPHSC algorithms.

mod ari;
mod kmeans;

pub use ari::adjusted_rand_index;
pub use kmeans::{kmeans, total_sum_of_squares, KMeans};

use num_complex::Complex;
use rand::Rng;

use crate::eigen::{self, EigenOptions, MagnitudeFloor, RealFocus, Spectrum};
use crate::error::{Error, Result};
use crate::hsbm::{estimate_parameters, rng_stream};
use crate::hypergraph::{Hypergraph, LabelVector};
use crate::scalar::Scalar;
use crate::spectral_ops::{build_bprime, build_jprime, reduce_pointed, GroupMatrixSet};

/// Number of k-means restarts used by both algorithms.
pub const KMEANS_RESTARTS: usize = 20;

fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Labels plus quality metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub labels: LabelVector,
    /// Within-group sum of squares in the embedding.
    pub objective: f64,
    /// `1 − objective / total sum of squares` (0 for a constant embedding).
    pub variance_explained: f64,
    /// Number of embedding columns.
    pub embedding_dim: usize,
    pub ari: Option<f64>,
    /// Every eigenpair used met the solver tolerance.
    pub converged: bool,
}

impl Clustering {
    /// Attaches the ARI against a reference labelling.
    pub fn with_reference(mut self, truth: &LabelVector) -> Result<Self> {
        self.ari = Some(adjusted_rand_index(self.labels.labels(), truth.labels())?);
        Ok(self)
    }

    fn trivial(n: usize, groups: usize) -> Self {
        Clustering {
            labels: LabelVector::new(vec![0; n], groups.max(1)).expect("zero labels are valid"),
            objective: 0.0,
            variance_explained: 0.0,
            embedding_dim: 0,
            ari: None,
            converged: true,
        }
    }
}

/// `x̄_i = Σ_k Σ_{Q∈E_k(i)} u_{iQ}` from a pointed-edge vector, returned as `sign(Re x̄)`.
pub fn aggregate_b_eigvec<T: Scalar>(h: &Hypergraph, u: &[Complex<T>]) -> Result<Vec<T>> {
    if u.len() != h.num_pointed() {
        return Err(Error::LengthMismatch { expected: h.num_pointed(), got: u.len() });
    }
    let (x1, _) = reduce_pointed(h, u);
    Ok(sum_sizes(&x1, h.n(), h.kappa()).into_iter().map(sign).collect())
}

fn sum_sizes<T: Scalar>(x1: &[Complex<T>], n: usize, kappa: usize) -> Vec<T> {
    (0..n).map(|i| (0..kappa).map(|a| x1[a * n + i].re).sum()).collect()
}

/// Same aggregate read from a B′ eigenvector, whose first block already holds `x1`.
pub fn aggregate_bprime_eigvec<T: Scalar>(h: &Hypergraph, x: &[Complex<T>]) -> Result<Vec<T>> {
    let half = h.kappa() * h.n();
    if x.len() != 2 * half {
        return Err(Error::LengthMismatch { expected: 2 * half, got: x.len() });
    }
    Ok(sum_sizes(&x[..half], h.n(), h.kappa()).into_iter().map(sign).collect())
}

/// Sign matrix `n × ℓ` with entry `(i,s) = sign(Re Σ_k Σ_{Q∈E_k(i)} u_{iQ}^{(s)})`
/// from a vector over `(group, pointed edge)`.
pub fn aggregate_j_eigvec<T: Scalar>(h: &Hypergraph, u: &[Complex<T>], groups: usize) -> Result<Vec<Vec<T>>> {
    let m = h.num_pointed();
    if u.len() != groups * m {
        return Err(Error::LengthMismatch { expected: groups * m, got: u.len() });
    }
    let cols: Vec<Vec<T>> = (0..groups).map(|s| aggregate_b_eigvec(h, &u[s * m..(s + 1) * m])).collect::<Result<_>>()?;
    Ok((0..h.n()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}

/// Same sign matrix read from block 1 of a J′ eigenvector.
pub fn aggregate_jprime_eigvec<T: Scalar>(h: &Hypergraph, x: &[Complex<T>], groups: usize) -> Result<Vec<Vec<T>>> {
    let n = h.n();
    let kap = h.kappa();
    let half = groups * kap * n;
    if x.len() != 2 * half {
        return Err(Error::LengthMismatch { expected: 2 * half, got: x.len() });
    }
    Ok((0..n)
        .map(|i| (0..groups).map(|s| sign((0..kap).map(|a| x[(s * kap + a) * n + i].re).sum::<T>())).collect())
        .collect())
}

fn cluster_embedding(points: &[Vec<f64>], groups: usize, seed: u64) -> Result<Clustering> {
    let km = kmeans(points, groups, KMEANS_RESTARTS, seed)?;
    let tss = total_sum_of_squares(points);
    Ok(Clustering {
        labels: LabelVector::new(km.labels, groups)?,
        objective: km.objective,
        variance_explained: if tss > 0.0 { 1.0 - km.objective / tss } else { 0.0 },
        embedding_dim: points.first().map_or(0, Vec::len),
        ari: None,
        converged: true,
    })
}

/// NBHSC configuration.
#[derive(Clone, Debug)]
pub struct NbhscOptions {
    pub groups: usize,
    /// Number of leading eigenvectors of B′.
    pub h: usize,
    pub seed: u64,
    /// Keep only real eigenpairs (off by default).
    pub real_only: bool,
    pub imag_tol: f64,
    pub eigen_tol: f64,
    pub max_iter: usize,
    /// Use unconverged Ritz pairs instead of failing with `NotConverged`.
    pub best_effort: bool,
}

impl NbhscOptions {
    pub fn new(groups: usize, h: usize, seed: u64) -> Self {
        NbhscOptions { groups, h, seed, real_only: false, imag_tol: 1e-6, eigen_tol: 1e-8, max_iter: 2000, best_effort: false }
    }
}

/// Leading eigenpairs of `op`, `h` clamped to the dimension. Returns the
/// spectrum and whether every pair converged.
fn solve(op: &crate::SparseOp, h: usize, tol: f64, max_iter: usize, best_effort: bool, focus: Option<RealFocus>) -> Result<(Spectrum<f64>, bool)> {
    let dim = op.nrows();
    if dim < 2 {
        return eigen::dense_eigenpairs(op).map(|s| (s, true));
    }
    let mut opts = EigenOptions::new(h.min(dim - 1).max(1)).tol(tol).max_iter(max_iter);
    opts.focus = focus;
    if best_effort {
        eigen::leading_eigenpairs_best_effort(op, &opts)
    } else {
        eigen::leading_eigenpairs_with(op, &opts).map(|s| (s, true))
    }
}

/// Nonbacktracking spectral clustering: leading `h` eigenvectors of B′,
/// aggregated to node signs, clustered by k-means.
pub fn nbhsc(h: &Hypergraph, opts: &NbhscOptions) -> Result<Clustering> {
    if h.m() == 0 {
        return Err(Error::Empty);
    }
    if opts.groups <= 1 {
        return Ok(Clustering::trivial(h.n(), opts.groups));
    }
    let bp = build_bprime::<f64>(h);
    let (spectrum, converged) = solve(&bp, opts.h, opts.eigen_tol, opts.max_iter, opts.best_effort, None)?;
    let vectors: Vec<Vec<Complex<f64>>> = if opts.real_only {
        eigen::select_real_eigenpairs(&spectrum, opts.h, opts.imag_tol, MagnitudeFloor::Absolute(0.0))
            .into_iter()
            .map(|p| p.vector.into_iter().map(|v| Complex::new(v, 0.0)).collect())
            .collect()
    } else {
        spectrum.pairs.iter().take(opts.h).map(|p| p.vector.clone()).collect()
    };
    if vectors.is_empty() {
        return Ok(Clustering::trivial(h.n(), opts.groups));
    }
    let cols: Vec<Vec<f64>> = vectors.iter().map(|v| aggregate_bprime_eigvec(h, v)).collect::<Result<_>>()?;
    let points: Vec<Vec<f64>> = (0..h.n()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let mut out = cluster_embedding(&points, opts.groups, opts.seed)?;
    out.converged = converged;
    Ok(out)
}

/// BPHSC configuration.
#[derive(Clone, Debug)]
pub struct BphscOptions {
    pub groups: usize,
    /// Number of leading eigenpairs of J′ computed before the real filter.
    pub h: usize,
    pub seed: u64,
    pub imag_tol: f64,
    pub floor: MagnitudeFloor,
    pub eigen_tol: f64,
    pub max_iter: usize,
    pub rounds: usize,
    pub selection: RoundSelection,
    /// Use unconverged Ritz pairs instead of failing with `NotConverged`.
    pub best_effort: bool,
}

impl BphscOptions {
    pub fn new(groups: usize, h: usize, seed: u64) -> Self {
        BphscOptions {
            groups,
            h,
            seed,
            imag_tol: 1e-6,
            floor: MagnitudeFloor::Absolute(1.0),
            eigen_tol: 1e-8,
            max_iter: 2000,
            rounds: 1,
            selection: RoundSelection::Last,
            best_effort: false,
        }
    }

    pub fn rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }
}

/// Which BPHSC round is returned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RoundSelection {
    /// The final iterate.
    #[default]
    Last,
    /// The iterate with the lowest k-means objective.
    MinObjective,
}

/// Outcome of one BPHSC step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub clustering: Clustering,
    /// Real eigenvalues used for the embedding.
    pub eigenvalues: Vec<f64>,
    /// Nothing cleared the floor and the low-magnitude fallback was used.
    pub fallback: bool,
    /// No usable eigenpair: the input labels were returned unchanged.
    pub unchanged: bool,
}

/// One step with explicit parameter matrices: build J′, select real eigenpairs
/// above the floor, embed by signs of the block-1 aggregates, cluster.
pub fn bphsc_step_with_g(h: &Hypergraph, g: &GroupMatrixSet<f64>, z0: &LabelVector, opts: &BphscOptions) -> Result<StepOutcome> {
    let unchanged = || StepOutcome {
        clustering: Clustering {
            labels: z0.clone(),
            objective: f64::INFINITY,
            variance_explained: 0.0,
            embedding_dim: 0,
            ari: None,
            converged: true,
        },
        eigenvalues: Vec::new(),
        fallback: false,
        unchanged: true,
    };
    if g.is_zero() || h.m() == 0 {
        return Ok(unchanged());
    }
    let jp = build_jprime(h, g);
    // only real pairs above the floor are used, so bulk pairs need not converge
    let focus = RealFocus { floor: opts.floor, imag_tol: opts.imag_tol };
    let (spectrum, mut converged) = solve(&jp, opts.h, opts.eigen_tol, opts.max_iter, opts.best_effort, Some(focus))?;
    let mut selected = eigen::select_real_eigenpairs(&spectrum, opts.h, opts.imag_tol, opts.floor);
    let mut fallback = false;
    if selected.is_empty() {
        let scale = spectrum.pairs.first().map_or(0.0, |p| p.value.norm());
        if scale > 0.0 {
            selected = eigen::select_real_eigenpairs(&spectrum, opts.h, opts.imag_tol, MagnitudeFloor::Absolute(1e-8 * scale));
            fallback = true;
            converged &= selected.iter().all(|p| p.residual <= opts.eigen_tol);
        }
    }
    if selected.is_empty() {
        return Ok(unchanged());
    }
    let mut points = vec![Vec::with_capacity(selected.len() * opts.groups); h.n()];
    for p in &selected {
        let x: Vec<Complex<f64>> = p.vector.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for (row, signs) in points.iter_mut().zip(aggregate_jprime_eigvec(h, &x, opts.groups)?) {
            row.extend(signs);
        }
    }
    let mut clustering = cluster_embedding(&points, opts.groups, opts.seed)?;
    clustering.converged = converged;
    Ok(StepOutcome { clustering, eigenvalues: selected.iter().map(|p| p.value).collect(), fallback, unchanged: false })
}

/// One alternating step: estimate G_k from `(h, z0)`, then [`bphsc_step_with_g`].
pub fn bphsc_step(h: &Hypergraph, z0: &LabelVector, opts: &BphscOptions) -> Result<StepOutcome> {
    if z0.len() != h.n() {
        return Err(Error::LengthMismatch { expected: h.n(), got: z0.len() });
    }
    let est = estimate_parameters(h, &LabelVector::new(z0.labels().to_vec(), opts.groups)?)?;
    bphsc_step_with_g(h, &est.g, z0, opts)
}

/// Initial labelling for [`bphsc`].
#[derive(Clone, Debug)]
pub enum BphscInit {
    /// Uniform random labels from the seed.
    Random,
    Provided(LabelVector),
    /// Known parameter matrices; estimation is skipped and one step is run.
    KnownParams(GroupMatrixSet<f64>),
}

/// Per-round diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub objective: f64,
    pub variance_explained: f64,
    pub eigenvalues: Vec<f64>,
    pub fallback: bool,
    pub unchanged: bool,
}

/// Result of the alternating algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct BphscResult {
    pub clustering: Clustering,
    pub history: Vec<RoundRecord>,
}

/// Uniform random labels in `0..groups`.
pub fn random_labels(n: usize, groups: usize, seed: u64) -> LabelVector {
    let mut rng = rng_stream(seed, 7);
    LabelVector::new((0..n).map(|_| rng.random_range(0..groups)).collect(), groups).expect("labels in range")
}

/// Alternating BPHSC: repeat estimate → J′ → embed → k-means for `rounds` rounds.
pub fn bphsc(h: &Hypergraph, init: BphscInit, opts: &BphscOptions) -> Result<BphscResult> {
    if opts.rounds == 0 {
        return Err(Error::InvalidParams("rounds must be at least 1".into()));
    }
    let record = |o: &StepOutcome| RoundRecord {
        objective: o.clustering.objective,
        variance_explained: o.clustering.variance_explained,
        eigenvalues: o.eigenvalues.clone(),
        fallback: o.fallback,
        unchanged: o.unchanged,
    };
    let mut z = match init {
        BphscInit::Random => random_labels(h.n(), opts.groups, opts.seed),
        BphscInit::Provided(z0) => z0,
        BphscInit::KnownParams(g) => {
            let z0 = random_labels(h.n(), opts.groups, opts.seed);
            let out = bphsc_step_with_g(h, &g, &z0, opts)?;
            return Ok(BphscResult { history: vec![record(&out)], clustering: out.clustering });
        }
    };
    let mut history = Vec::with_capacity(opts.rounds);
    let mut outcomes = Vec::with_capacity(opts.rounds);
    for r in 0..opts.rounds {
        let mut step_opts = opts.clone();
        step_opts.seed = opts.seed.wrapping_add(r as u64);
        let out = bphsc_step(h, &z, &step_opts)?;
        history.push(record(&out));
        z = out.clustering.labels.clone();
        outcomes.push(out.clustering);
    }
    let clustering = match opts.selection {
        RoundSelection::Last => outcomes.pop().expect("rounds >= 1"),
        RoundSelection::MinObjective => outcomes
            .into_iter()
            .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap_or(std::cmp::Ordering::Equal))
            .expect("rounds >= 1"),
    };
    Ok(BphscResult { clustering, history })
}
