//! Leading eigenpairs of sparse nonsymmetric operators and selection of the
//! informative real eigenvectors.

mod arnoldi;
pub mod dense;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseLinearOperator;

/// Seed used for the Arnoldi start vector unless overridden.
pub const DEFAULT_SEED: u64 = 0x5eed_0f_a7_0101;

/// One eigenpair with its residual `‖Mv − λv‖ / ‖v‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair<T> {
    pub value: Complex<T>,
    pub vector: Vec<Complex<T>>,
    pub residual: T,
}

/// Eigenpairs sorted by descending modulus (conjugates adjacent, positive
/// imaginary part first). `bulk_radius` is `√|λ₁|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub pairs: Vec<EigenPair<T>>,
    pub bulk_radius: T,
}

impl<T: Scalar> Spectrum<T> {
    fn from_pairs(mut pairs: Vec<EigenPair<T>>) -> Self {
        pairs.sort_by(|a, b| {
            b.value
                .norm()
                .partial_cmp(&a.value.norm())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.value.im.partial_cmp(&a.value.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        let bulk_radius = pairs.first().map_or(T::zero(), |p| p.value.norm().sqrt());
        Spectrum { pairs, bulk_radius }
    }

    pub fn values(&self) -> Vec<Complex<T>> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest residual among the reported pairs; NaN counts as infinite.
    pub fn max_residual(&self) -> T {
        self.pairs.iter().map(|p| if p.residual.is_nan() { T::infinity() } else { p.residual }).fold(T::zero(), T::max)
    }
}

/// Solver configuration.
#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Number of eigenpairs wanted.
    pub h: usize,
    /// Residual tolerance per pair.
    pub tol: f64,
    /// Maximum number of implicit restarts.
    pub max_iter: usize,
    /// Seed for the start vector.
    pub seed: u64,
    /// Operators of at most this dimension are solved densely.
    pub dense_limit: usize,
    /// Krylov subspace size; `None` uses `max(4h+20, 60)`.
    pub krylov_dim: Option<usize>,
    /// Only pairs that may be real and above this floor must converge.
    pub focus: Option<RealFocus>,
}

/// Restricts the convergence requirement to pairs a real-eigenvector
/// selection could keep. Other wanted pairs are returned as they stand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealFocus {
    pub floor: MagnitudeFloor,
    pub imag_tol: f64,
}

impl RealFocus {
    /// Whether a pair with value `l` and residual `res` could still be a
    /// real eigenvalue at or above the floor; `lead` is the largest modulus.
    pub(crate) fn may_matter<T: Scalar>(&self, l: Complex<T>, res: T, lead: T) -> bool {
        let floor = match self.floor {
            MagnitudeFloor::Absolute(v) => T::of(v),
            MagnitudeFloor::BulkRadius => lead.sqrt(),
        };
        // eigenvalue error of a nonnormal operator can be far above the residual
        let slack = T::of(10.0) * res + res.sqrt();
        l.norm() + slack >= floor && l.im.abs() <= slack + T::of(self.imag_tol) * l.norm().max(T::one())
    }
}

impl EigenOptions {
    pub fn new(h: usize) -> Self {
        EigenOptions { h, tol: 1e-8, max_iter: 500, seed: DEFAULT_SEED, dense_limit: 600, krylov_dim: None, focus: None }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dense_limit(mut self, dense_limit: usize) -> Self {
        self.dense_limit = dense_limit;
        self
    }

    pub fn krylov_dim(mut self, k: usize) -> Self {
        self.krylov_dim = Some(k);
        self
    }

    pub fn focus(mut self, floor: MagnitudeFloor, imag_tol: f64) -> Self {
        self.focus = Some(RealFocus { floor, imag_tol });
        self
    }
}

fn residual<T: Scalar>(m: &SparseLinearOperator<T>, value: Complex<T>, v: &[Complex<T>]) -> T {
    let mv = m.matvec_complex(v);
    let num: T = mv.iter().zip(v).map(|(a, b)| (*a - value * *b).norm_sqr()).sum::<T>().sqrt();
    let den: T = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
    if den == T::zero() {
        T::infinity()
    } else {
        num / den
    }
}

/// Scales to unit 2-norm and rotates the first entry of largest magnitude onto
/// the nonnegative real axis.
pub fn canonicalize<T: Scalar>(v: &mut [Complex<T>]) {
    let nv: T = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
    if nv == T::zero() {
        return;
    }
    let mut best = 0;
    let mut bmag = T::zero();
    for (i, c) in v.iter().enumerate() {
        let mag = c.norm();
        if mag > bmag * (T::one() + T::of(1e-9)) {
            best = i;
            bmag = mag;
        }
    }
    let phase = v[best] / v[best].norm();
    let rot = phase.conj() / nv;
    for c in v.iter_mut() {
        *c = *c * rot;
    }
    v[best] = Complex::new(v[best].re, T::zero());
}

/// Keeps the first `h` pairs plus the conjugate partner of any complex pair cut at `h`.
fn truncate<T: Scalar>(mut s: Spectrum<T>, h: usize) -> Spectrum<T> {
    if s.pairs.len() <= h {
        return s;
    }
    let mut keep = h;
    let last = s.pairs[h - 1].value;
    if last.im > T::zero() {
        if let Some(pos) = s.pairs[h..].iter().position(|p| (p.value - last.conj()).norm() <= T::of(1e-9) * last.norm().max(T::one())) {
            let partner = s.pairs.remove(h + pos);
            s.pairs.insert(h, partner);
            keep += 1;
        }
    }
    s.pairs.truncate(keep);
    s
}

/// Every eigenpair of a small operator via the dense solver.
pub fn dense_eigenpairs<T: Scalar>(m: &SparseLinearOperator<T>) -> Result<Spectrum<T>> {
    let pairs = dense::eig(&m.to_dense())?
        .into_iter()
        .map(|(value, mut vector)| {
            canonicalize(&mut vector);
            let residual = residual(m, value, &vector);
            EigenPair { value, vector, residual }
        })
        .collect();
    Ok(Spectrum::from_pairs(pairs))
}

/// Leading `h` eigenpairs by modulus; see [`leading_eigenpairs_with`].
pub fn leading_eigenpairs<T: Scalar>(m: &SparseLinearOperator<T>, h: usize, tol: f64, max_iter: usize) -> Result<Spectrum<T>> {
    leading_eigenpairs_with(m, &EigenOptions::new(h).tol(tol).max_iter(max_iter))
}

/// Leading eigenpairs; fails with [`Error::NotConverged`] if any returned pair
/// misses the tolerance (only pairs that matter under [`EigenOptions::focus`]).
pub fn leading_eigenpairs_with<T: Scalar>(m: &SparseLinearOperator<T>, opts: &EigenOptions) -> Result<Spectrum<T>> {
    let (s, ok) = leading_eigenpairs_best_effort(m, opts)?;
    if ok {
        Ok(s)
    } else {
        let lead = s.pairs.first().map_or(T::zero(), |p| p.value.norm());
        let relevant: Vec<_> = s.pairs.iter().filter(|p| opts.focus.is_none_or(|f| f.may_matter(p.value, p.residual, lead))).collect();
        let converged = relevant.iter().filter(|p| p.residual <= T::of(opts.tol)).count();
        Err(Error::NotConverged { converged, wanted: relevant.len() })
    }
}

/// Leading eigenpairs together with whether all of them met the tolerance.
/// Unconverged pairs are still returned with their actual residuals.
pub fn leading_eigenpairs_best_effort<T: Scalar>(m: &SparseLinearOperator<T>, opts: &EigenOptions) -> Result<(Spectrum<T>, bool)> {
    let dim = m.nrows();
    if m.ncols() != dim {
        return Err(Error::InvalidParams(format!("operator is {}x{}, not square", dim, m.ncols())));
    }
    if opts.h == 0 || opts.h >= dim {
        return Err(Error::InvalidParams(format!("need 1 <= h < dim, got h = {} for dim = {dim}", opts.h)));
    }
    let tol = T::of(opts.tol);
    let spectrum = if dim <= opts.dense_limit {
        truncate(dense_eigenpairs(m)?, opts.h)
    } else {
        let k = opts.krylov_dim.unwrap_or((4 * opts.h + 20).max(60));
        let run = arnoldi::run(m, opts.h, k, tol, opts.max_iter, opts.seed, opts.focus.as_ref())?;
        let pairs = run
            .into_iter()
            .map(|r| {
                let mut vector = r.vector;
                canonicalize(&mut vector);
                let residual = residual(m, r.value, &vector);
                EigenPair { value: r.value, vector, residual }
            })
            .collect();
        truncate(Spectrum::from_pairs(pairs), opts.h)
    };
    let lead = spectrum.pairs.first().map_or(T::zero(), |p| p.value.norm());
    let ok = spectrum
        .pairs
        .iter()
        .all(|p| p.residual <= tol || opts.focus.is_some_and(|f| !f.may_matter(p.value, p.residual, lead)));
    Ok((spectrum, ok))
}

/// Lower bound on `|λ|` for selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MagnitudeFloor {
    /// Fixed threshold (1.0 keeps eigenvalues larger than unity).
    Absolute(f64),
    /// `√|λ₁|` of the spectrum being filtered.
    BulkRadius,
}

impl Default for MagnitudeFloor {
    fn default() -> Self {
        MagnitudeFloor::Absolute(1.0)
    }
}

/// A real eigenpair re-materialised with a real eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct RealEigenPair<T> {
    pub value: T,
    pub vector: Vec<T>,
    pub residual: T,
}

/// Whether `λ` counts as real: `|Im λ| ≤ imag_tol·max(1, |λ|)`.
pub fn is_real<T: Scalar>(l: Complex<T>, imag_tol: f64) -> bool {
    l.im.abs() <= T::of(imag_tol) * l.norm().max(T::one())
}

/// Real pairs with `|λ|` at or above the floor, at most `h`, by descending `|λ|`.
/// Imaginary parts of the kept eigenvectors are discarded.
pub fn select_real_eigenpairs<T: Scalar>(s: &Spectrum<T>, h: usize, imag_tol: f64, floor: MagnitudeFloor) -> Vec<RealEigenPair<T>> {
    let f = match floor {
        MagnitudeFloor::Absolute(v) => T::of(v),
        MagnitudeFloor::BulkRadius => s.bulk_radius,
    };
    s.pairs
        .iter()
        .filter(|p| is_real(p.value, imag_tol) && p.value.norm() >= f)
        .take(h)
        .map(|p| RealEigenPair { value: p.value.re, vector: p.vector.iter().map(|c| c.re).collect(), residual: p.residual })
        .collect()
}
