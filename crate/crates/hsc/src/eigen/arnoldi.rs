//! Implicitly restarted Arnoldi iteration for the largest-modulus eigenpairs
//! of a real sparse operator. Unwanted Ritz values are used as exact shifts;
//! complex shifts are applied in conjugate pairs so all arithmetic stays real.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dense, RealFocus};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::sparse::SparseLinearOperator;

/// A Ritz value with its Ritz vector.
pub(crate) struct Ritz<T> {
    pub value: Complex<T>,
    pub vector: Vec<Complex<T>>,
}

struct Factorization<'a, T> {
    op: &'a SparseLinearOperator<T>,
    basis: Vec<Vec<T>>,
    /// `(m+1) × m` Hessenberg, row-major.
    h: Vec<Vec<T>>,
    rng: ChaCha8Rng,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Orthogonalises `w` against `basis` by repeated classical Gram-Schmidt until
/// a pass no longer cuts the norm below `1/√2` of its previous value.
/// Returns the accumulated coefficients and the final norm, or `None` for the
/// norm when `w` lies numerically in the span of `basis`.
fn orthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) -> (Vec<T>, Option<T>) {
    let mut coeffs = vec![T::zero(); basis.len()];
    let start = norm(w);
    let mut prev = start;
    for _ in 0..6 {
        for (i, b) in basis.iter().enumerate() {
            let c = dot(b, w);
            coeffs[i] += c;
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * *y);
        }
        let now = norm(w);
        if now <= T::epsilon() * T::of(10.0) * start {
            return (coeffs, None);
        }
        if now >= prev * T::of(std::f64::consts::FRAC_1_SQRT_2) {
            return (coeffs, Some(now));
        }
        prev = now;
    }
    (coeffs, None)
}

impl<T: Scalar> Factorization<'_, T> {
    fn random_unit(&mut self, dim: usize) -> Vec<T> {
        loop {
            let mut v: Vec<T> = (0..dim).map(|_| T::of(self.rng.random::<f64>() - 0.5)).collect();
            // orthogonalise twice against the current basis
            for _ in 0..2 {
                for b in &self.basis {
                    let c = dot(b, &v);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * *y);
                }
            }
            let nv = norm(&v);
            if nv > T::of(1e-3) {
                v.iter_mut().for_each(|x| *x /= nv);
                return v;
            }
        }
    }

    /// Extends the factorisation from `basis.len() − 1` columns of H up to `m`.
    fn extend(&mut self, m: usize) {
        let dim = self.op.nrows();
        let mut w = vec![T::zero(); dim];
        for j in self.basis.len() - 1..m {
            self.op.matvec_into(&self.basis[j], &mut w);
            let (coeffs, beta) = orthogonalize(&self.basis, &mut w);
            for (i, c) in coeffs.into_iter().enumerate() {
                self.h[i][j] = c;
            }
            match beta {
                Some(beta) => {
                    self.h[j + 1][j] = beta;
                    self.basis.push(w.iter().map(|x| *x / beta).collect());
                }
                None => {
                    self.h[j + 1][j] = T::zero();
                    let v = self.random_unit(dim);
                    self.basis.push(v);
                }
            }
        }
    }
}

fn sort_key<T: Scalar>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    b.norm()
        .partial_cmp(&a.norm())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
}

fn is_conj<T: Scalar>(a: Complex<T>, b: Complex<T>) -> bool {
    a.im != T::zero() && (a - b.conj()).norm() <= T::of(1e-10) * a.norm().max(T::one())
}

/// Applies one real shift `mu` to the leading `m × m` Hessenberg block by a
/// Givens bulge chase, accumulating into `q`.
fn shift_single<T: Scalar>(h: &mut [Vec<T>], q: &mut [Vec<T>], m: usize, mu: T) {
    let mut x = h[0][0] - mu;
    let mut y = h[1][0];
    for k in 0..m - 1 {
        let r = x.hypot(y);
        let (c, s) = if r == T::zero() { (T::one(), T::zero()) } else { (x / r, y / r) };
        for j in k.saturating_sub(1)..m {
            let (a, b) = (h[k][j], h[k + 1][j]);
            h[k][j] = c * a + s * b;
            h[k + 1][j] = -s * a + c * b;
        }
        for row in h.iter_mut().take((k + 2).min(m - 1) + 1) {
            let (a, b) = (row[k], row[k + 1]);
            row[k] = c * a + s * b;
            row[k + 1] = -s * a + c * b;
        }
        for row in q.iter_mut() {
            let (a, b) = (row[k], row[k + 1]);
            row[k] = c * a + s * b;
            row[k + 1] = -s * a + c * b;
        }
        if k + 2 < m {
            x = h[k + 1][k];
            y = h[k + 2][k];
        }
    }
}

/// Householder reflector `I − 2vvᵀ/(vᵀv)` mapping `x` to a multiple of `e_1`.
fn householder<T: Scalar>(x: &[T]) -> Option<Vec<T>> {
    // scale first so tiny entries do not underflow when squared
    let scale = x.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    if scale == T::zero() {
        return None;
    }
    let mut v: Vec<T> = x.iter().map(|xi| *xi / scale).collect();
    let nx = norm(&v);
    let alpha = if v[0] >= T::zero() { -nx } else { nx };
    v[0] -= alpha;
    if norm(&v) == T::zero() {
        return None;
    }
    Some(v)
}

fn reflect_rows<T: Scalar>(h: &mut [Vec<T>], v: &[T], r0: usize, cols: std::ops::Range<usize>) {
    let vv = dot(v, v);
    for j in cols {
        let s: T = v.iter().enumerate().map(|(i, vi)| *vi * h[r0 + i][j]).sum();
        let f = T::of(2.0) * s / vv;
        for (i, vi) in v.iter().enumerate() {
            h[r0 + i][j] -= f * *vi;
        }
    }
}

fn reflect_cols<T: Scalar>(rows: &mut [Vec<T>], v: &[T], c0: usize, upto: usize) {
    let vv = dot(v, v);
    for row in rows.iter_mut().take(upto) {
        let s: T = v.iter().enumerate().map(|(i, vi)| *vi * row[c0 + i]).sum();
        let f = T::of(2.0) * s / vv;
        for (i, vi) in v.iter().enumerate() {
            row[c0 + i] -= f * *vi;
        }
    }
}

/// Applies the conjugate shift pair `{mu, mū}` as one implicit Francis double step.
fn shift_double<T: Scalar>(h: &mut [Vec<T>], q: &mut [Vec<T>], m: usize, mu: Complex<T>) {
    let s = T::of(2.0) * mu.re;
    let t = mu.norm_sqr();
    let mut x = h[0][0] * h[0][0] + h[0][1] * h[1][0] - s * h[0][0] + t;
    let mut y = h[1][0] * (h[0][0] + h[1][1] - s);
    let mut z = if m > 2 { h[1][0] * h[2][1] } else { T::zero() };
    for k in 0..m.saturating_sub(2) {
        if let Some(v) = householder(&[x, y, z]) {
            reflect_rows(h, &v, k, k.saturating_sub(1)..m);
            let upto = (k + 4).min(m);
            reflect_cols(h, &v, k, upto);
            let nq = q.len();
            reflect_cols(q, &v, k, nq);
        }
        x = h[k + 1][k];
        y = h[k + 2][k];
        if k + 3 < m {
            z = h[k + 3][k];
        }
    }
    if m >= 2 {
        if let Some(v) = householder(&[x, y]) {
            let k = m - 2;
            reflect_rows(h, &v, k, k.saturating_sub(1)..m);
            reflect_cols(h, &v, k, m);
            let nq = q.len();
            reflect_cols(q, &v, k, nq);
        }
    }
    for i in 2..m {
        for j in 0..i - 1 {
            h[i][j] = T::zero();
        }
    }
}

/// Runs implicitly restarted Arnoldi for the `h` largest-modulus eigenpairs.
/// Returns the wanted Ritz pairs by descending modulus once every residual
/// estimate `|h_{m+1,m}·y_m|` is below `tol/10`, or after `max_restarts`.
/// With a focus, wanted pairs it rules out are exempt from the test.
pub(crate) fn run<T: Scalar>(
    op: &SparseLinearOperator<T>,
    h: usize,
    krylov_dim: usize,
    tol: T,
    max_restarts: usize,
    seed: u64,
    focus: Option<&RealFocus>,
) -> Result<Vec<Ritz<T>>> {
    let dim = op.nrows();
    let m = krylov_dim.min(dim - 1).max(h + 1);
    let mut fact = Factorization {
        op,
        basis: Vec::with_capacity(m + 1),
        h: vec![vec![T::zero(); m]; m + 1],
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let v0 = fact.random_unit(dim);
    fact.basis.push(v0);
    fact.extend(m);

    let mut restart = 0;
    loop {
        let hm: Vec<Vec<T>> = fact.h[..m].to_vec();
        let mut pairs = dense::eig(&hm)?;
        pairs.sort_by(|a, b| sort_key(&a.0, &b.0));
        let beta = fact.h[m][m - 1];
        let mut want = h.min(m);
        if want < m && is_conj(pairs[want - 1].0, pairs[want].0) {
            want += 1;
        }
        let estimates: Vec<T> = pairs
            .iter()
            .map(|(_, y)| {
                let ny = y.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
                if ny == T::zero() {
                    T::zero()
                } else {
                    beta.abs() * y[m - 1].norm() / ny
                }
            })
            .collect();
        let lead = pairs[0].0.norm();
        let converged = pairs[..want]
            .iter()
            .zip(&estimates)
            .all(|((l, _), e)| *e <= tol * T::of(0.1) || focus.is_some_and(|f| !f.may_matter(*l, *e, lead)));
        if converged || restart >= max_restarts {
            let ritz = pairs
                .into_iter()
                .take(want)
                .map(|(value, y)| {
                    let mut x = vec![Complex::new(T::zero(), T::zero()); dim];
                    for (j, yj) in y.iter().enumerate() {
                        for (xi, bi) in x.iter_mut().zip(&fact.basis[j]) {
                            *xi = *xi + *yj * *bi;
                        }
                    }
                    Ritz { value, vector: x }
                })
                .collect();
            return Ok(ritz);
        }
        restart += 1;

        // keep roughly half the unwanted space, never splitting a conjugate pair
        let mut keep = (want + (m - want) / 2).min(m - 1).max(want);
        if keep < m && keep > 0 && is_conj(pairs[keep - 1].0, pairs[keep].0) {
            if keep + 1 < m {
                keep += 1;
            } else {
                keep -= 1;
            }
        }
        let mut hh: Vec<Vec<T>> = fact.h[..m].to_vec();
        let mut q: Vec<Vec<T>> = (0..m).map(|i| (0..m).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
        let mut i = keep;
        while i < m {
            let mu = pairs[i].0;
            if mu.im == T::zero() {
                shift_single(&mut hh, &mut q, m, mu.re);
                i += 1;
            } else {
                shift_double(&mut hh, &mut q, m, mu);
                i += if i + 1 < m && is_conj(mu, pairs[i + 1].0) { 2 } else { 1 };
            }
        }

        // V ← V Q on the first keep+1 columns; new residual
        let mut newv = vec![vec![T::zero(); dim]; keep + 1];
        for (c, nv) in newv.iter_mut().enumerate() {
            for (j, b) in fact.basis.iter().take(m).enumerate() {
                let qjc = q[j][c];
                if qjc != T::zero() {
                    nv.iter_mut().zip(b).for_each(|(x, y)| *x += qjc * *y);
                }
            }
        }
        let sigma = q[m - 1][keep - 1];
        let hk = hh[keep][keep - 1];
        let mut f: Vec<T> = newv[keep].iter().map(|x| *x * hk).collect();
        for (fi, vi) in f.iter_mut().zip(&fact.basis[m]) {
            *fi += *vi * beta * sigma;
        }
        newv.truncate(keep);
        // re-orthogonalise f against the kept basis
        let (_, bf) = orthogonalize(&newv, &mut f);
        let mut newh = vec![vec![T::zero(); m]; m + 1];
        for r in 0..keep {
            newh[r][..keep].copy_from_slice(&hh[r][..keep]);
        }
        fact.basis = newv;
        fact.h = newh;
        match bf {
            Some(bf) if bf > T::zero() => {
                fact.h[keep][keep - 1] = bf;
                fact.basis.push(f.iter().map(|x| *x / bf).collect());
            }
            _ => {
                fact.h[keep][keep - 1] = T::zero();
                let v = fact.random_unit(dim);
                fact.basis.push(v);
            }
        }
        fact.extend(m);
    }
}
