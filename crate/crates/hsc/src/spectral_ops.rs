//! Nonbacktracking operators, their reduced forms, and the linearised BP Jacobian.
//!
//! Basis conventions:
//! * B, B_k: pointed edges in [`Hypergraph::pointed_edges`] order.
//! * B′: `(block, size, node)` with index `block·κn + a·n + i`, `a` the position
//!   of the size in [`Hypergraph::sizes`].
//! * J: `(group, pointed edge)` with index `s·m̌ + e`.
//! * J′: `(block, group, size, node)` with index `block·ℓκn + (s·κ + a)·n + i`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::scalar::Scalar;
use crate::sparse::{OperatorTag, SparseLinearOperator};

/// Default dimension above which operators are never densified.
pub const DENSE_LIMIT: usize = 600;

/// Per-size ℓ×ℓ parameter matrices G_k.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupMatrixSet<T> {
    groups: usize,
    mats: BTreeMap<usize, Vec<Vec<T>>>,
}

impl<T: Scalar> GroupMatrixSet<T> {
    pub fn new(groups: usize) -> Self {
        GroupMatrixSet { groups, mats: BTreeMap::new() }
    }

    /// Inserts G_k.
    ///
    /// # Panics
    /// If `g` is not `groups × groups`.
    pub fn insert(&mut self, k: usize, g: Vec<Vec<T>>) {
        assert!(g.len() == self.groups && g.iter().all(|r| r.len() == self.groups), "G_{k} must be square of size {}", self.groups);
        self.mats.insert(k, g);
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// G_k, or the zero matrix when `k` is absent.
    pub fn get(&self, k: usize) -> Vec<Vec<T>> {
        self.mats.get(&k).cloned().unwrap_or_else(|| vec![vec![T::zero(); self.groups]; self.groups])
    }

    pub fn entry(&self, k: usize, s: usize, t: usize) -> T {
        self.mats.get(&k).map_or(T::zero(), |g| g[s][t])
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.mats.keys().copied().collect()
    }

    /// `G_k = I` for each listed size.
    pub fn identity(groups: usize, sizes: &[usize]) -> Self {
        let mut g = Self::new(groups);
        for &k in sizes {
            let m = (0..groups).map(|s| (0..groups).map(|t| if s == t { T::one() } else { T::zero() }).collect()).collect();
            g.insert(k, m);
        }
        g
    }

    pub fn is_zero(&self) -> bool {
        self.mats.values().flatten().flatten().all(|v| *v == T::zero())
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> GroupMatrixSet<U> {
        let mats = self
            .mats
            .iter()
            .map(|(&k, g)| (k, g.iter().map(|r| r.iter().map(|v| U::of(v.f64())).collect()).collect()))
            .collect();
        GroupMatrixSet { groups: self.groups, mats }
    }
}

fn kappa_index(sizes: &[usize], k: usize) -> usize {
    sizes.binary_search(&k).expect("size present")
}

/// Shared traversal of the nonbacktracking relation: calls `f(row, col, col_size)`
/// for every `iQ → jR` with `j ∈ Q∖i`, `j ∈ R`, `R ≠ Q`.
fn for_each_nb<F: FnMut(usize, usize, usize, usize)>(h: &Hypergraph, mut f: F) {
    let edges: Vec<&[usize]> = h.iter_edges().collect();
    let off = h.pointed_offsets();
    let inc = h.incidence();
    for (q, e) in edges.iter().enumerate() {
        for (pi, _) in e.iter().enumerate() {
            let row = off[q] + pi;
            for (pj, &j) in e.iter().enumerate() {
                if pj == pi {
                    continue;
                }
                for &(r, pos) in &inc[j] {
                    if r != q {
                        f(row, off[r] + pos, e.len(), edges[r].len());
                    }
                }
            }
        }
    }
}

/// Nonbacktracking operator B on pointed edges: `b_{iQ,jR} = 1` iff
/// `j ∈ Q∖i` and `Q ≠ R` as edge instances.
pub fn build_b<T: Scalar>(h: &Hypergraph) -> SparseLinearOperator<T> {
    let mut trip = Vec::new();
    for_each_nb(h, |r, c, _, _| trip.push((r, c, T::one())));
    let m = h.num_pointed();
    SparseLinearOperator::from_triplets(m, m, trip, OperatorTag::B)
}

/// B_k: B with columns restricted to pointed edges of size `k`.
pub fn build_bk<T: Scalar>(h: &Hypergraph, k: usize) -> SparseLinearOperator<T> {
    let mut trip = Vec::new();
    for_each_nb(h, |r, c, _, kc| {
        if kc == k {
            trip.push((r, c, T::one()))
        }
    });
    let m = h.num_pointed();
    SparseLinearOperator::from_triplets(m, m, trip, OperatorTag::Bk(k))
}

/// `(R_k B)ᵀ`: transpose of B with rows restricted to size-`k` pointed edges.
/// This is the message-passing orientation of B_k.
pub fn build_bk_message_passing<T: Scalar>(h: &Hypergraph, k: usize) -> SparseLinearOperator<T> {
    let mut trip = Vec::new();
    for_each_nb(h, |r, c, kr, _| {
        if kr == k {
            trip.push((c, r, T::one()))
        }
    });
    let m = h.num_pointed();
    SparseLinearOperator::from_triplets(m, m, trip, OperatorTag::Bk(k))
}

/// Reduced operator B′ = [[0, D−I], [(I−K)⊗I, A + (2I−K)⊗I]] of dimension 2κn,
/// where row block `k` of A (and of D) repeats A_k (D_k) across all column blocks.
pub fn build_bprime<T: Scalar>(h: &Hypergraph) -> SparseLinearOperator<T> {
    let n = h.n();
    let sizes = h.sizes();
    let kap = sizes.len();
    let half = kap * n;
    let mut trip = Vec::new();
    for (a, &k) in sizes.iter().enumerate() {
        let d = h.degrees(k);
        for i in 0..n {
            for b in 0..kap {
                let v = d[i] as f64 - if a == b { 1.0 } else { 0.0 };
                trip.push((a * n + i, half + b * n + i, T::of(v)));
            }
            trip.push((half + a * n + i, a * n + i, T::of(1.0 - k as f64)));
            trip.push((half + a * n + i, half + a * n + i, T::of(2.0 - k as f64)));
        }
        for e in h.edges(k) {
            for &i in e {
                for &j in e {
                    if i != j {
                        for b in 0..kap {
                            trip.push((half + a * n + i, half + b * n + j, T::one()));
                        }
                    }
                }
            }
        }
    }
    SparseLinearOperator::from_triplets(2 * half, 2 * half, trip, OperatorTag::Bprime)
}

/// Jacobian J = Σ_k G_k ⊗ B_k in the `(group, pointed edge)` basis.
pub fn build_j<T: Scalar>(h: &Hypergraph, g: &GroupMatrixSet<T>) -> SparseLinearOperator<T> {
    assemble_j(h, g, build_bk)
}

/// Message-passing orientation J_mp = Σ_k G_k ⊗ (R_k B)ᵀ. Isospectral with
/// [`build_j`]; its eigenvectors are the ones that reduce onto J′.
pub fn build_j_message_passing<T: Scalar>(h: &Hypergraph, g: &GroupMatrixSet<T>) -> SparseLinearOperator<T> {
    assemble_j(h, g, build_bk_message_passing)
}

fn assemble_j<T: Scalar>(
    h: &Hypergraph,
    g: &GroupMatrixSet<T>,
    bk: fn(&Hypergraph, usize) -> SparseLinearOperator<T>,
) -> SparseLinearOperator<T> {
    let dim = g.groups() * h.num_pointed();
    let mut acc = SparseLinearOperator::zeros(dim, dim, OperatorTag::J);
    for k in h.sizes() {
        acc = acc.add(&bk(h, k).kron_left(&g.get(k)));
    }
    acc.with_tag(OperatorTag::J)
}

/// Reduced Jacobian J′ of dimension 2ℓκn in the `(block, group, size, node)` basis.
///
/// Row `(1, s, k, i)`: `d_k(i)·g_{k′;s,t}` at `(2, t, k′, i)` for every `k′, t`,
/// and `−g_{k;s,t}` at `(2, t, k, i)`.
/// Row `(2, s, k, i)`: `a_{k;ij}·g_{k′;s,t}` at `(2, t, k′, j)`,
/// `−(k−1)·g_{k;s,t}` at `(1, t, k, i)` and `−(k−2)·g_{k;s,t}` at `(2, t, k, i)`.
pub fn build_jprime<T: Scalar>(h: &Hypergraph, g: &GroupMatrixSet<T>) -> SparseLinearOperator<T> {
    let n = h.n();
    let sizes = h.sizes();
    let kap = sizes.len();
    let l = g.groups();
    let half = l * kap * n;
    let ix = |s: usize, a: usize, i: usize| (s * kap + a) * n + i;
    let gm: Vec<Vec<Vec<T>>> = sizes.iter().map(|&k| g.get(k)).collect();
    let mut trip = Vec::new();
    for (a, &k) in sizes.iter().enumerate() {
        let d = h.degrees(k);
        let kf = T::of_usize(k);
        for s in 0..l {
            for i in 0..n {
                let r1 = ix(s, a, i);
                let r2 = half + ix(s, a, i);
                for t in 0..l {
                    if d[i] > 0 {
                        for (b, gb) in gm.iter().enumerate() {
                            trip.push((r1, half + ix(t, b, i), T::of_usize(d[i]) * gb[s][t]));
                        }
                    }
                    let gk = gm[a][s][t];
                    trip.push((r1, half + ix(t, a, i), -gk));
                    trip.push((r2, ix(t, a, i), -(kf - T::one()) * gk));
                    trip.push((r2, half + ix(t, a, i), -(kf - T::of(2.0)) * gk));
                }
            }
        }
        for e in h.edges(k) {
            for &i in e {
                for &j in e {
                    if i == j {
                        continue;
                    }
                    for s in 0..l {
                        for t in 0..l {
                            for (b, gb) in gm.iter().enumerate() {
                                trip.push((half + ix(s, a, i), half + ix(t, b, j), gb[s][t]));
                            }
                        }
                    }
                }
            }
        }
    }
    SparseLinearOperator::from_triplets(2 * half, 2 * half, trip, OperatorTag::Jprime)
}

/// Reduces a pointed-edge vector to `(x1, x2)`, each of length κn in
/// `(size, node)` order: `x1_{k,i} = Σ_{Q∈E_k(i)} u_{iQ}` and
/// `x2_{k,i} = Σ_{Q∈E_k(i)} Σ_{j∈Q∖i} u_{jQ}`.
///
/// # Panics
/// If `u.len()` differs from the number of pointed edges.
pub fn reduce_pointed<T: Scalar>(h: &Hypergraph, u: &[Complex<T>]) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    assert_eq!(u.len(), h.num_pointed(), "vector length must equal the number of pointed edges");
    let n = h.n();
    let sizes = h.sizes();
    let zero = Complex::new(T::zero(), T::zero());
    let mut x1 = vec![zero; sizes.len() * n];
    let mut x2 = vec![zero; sizes.len() * n];
    let off = h.pointed_offsets();
    for (q, e) in h.iter_edges().enumerate() {
        let a = kappa_index(&sizes, e.len());
        let block = &u[off[q]..off[q + 1]];
        let total = block.iter().fold(zero, |acc, v| acc + v);
        for (p, &i) in e.iter().enumerate() {
            x1[a * n + i] = x1[a * n + i] + block[p];
            x2[a * n + i] = x2[a * n + i] + (total - block[p]);
        }
    }
    (x1, x2)
}

/// Aggregation L for Jacobian eigenvectors: applies [`reduce_pointed`] to each
/// group block of `u` and returns the J′-basis vector `[x1 blocks…, x2 blocks…]`.
pub fn jacobian_l<T: Scalar>(h: &Hypergraph, u: &[Complex<T>], groups: usize) -> Vec<Complex<T>> {
    let m = h.num_pointed();
    assert_eq!(u.len(), groups * m, "vector length must equal groups × pointed edges");
    let mut first = Vec::with_capacity(u.len());
    let mut second = Vec::with_capacity(u.len());
    for s in 0..groups {
        let (x1, x2) = reduce_pointed(h, &u[s * m..(s + 1) * m]);
        first.extend(x1);
        second.extend(x2);
    }
    first.extend(second);
    first
}

/// Edge sums M: `t_Q^{(s)} = Σ_{i∈Q} u_{iQ}^{(s)}`, indexed `s·m + q` over canonical edges.
pub fn jacobian_m<T: Scalar>(h: &Hypergraph, u: &[Complex<T>], groups: usize) -> Vec<Complex<T>> {
    let m = h.num_pointed();
    let off = h.pointed_offsets();
    let ne = h.m();
    let zero = Complex::new(T::zero(), T::zero());
    let mut t = vec![zero; groups * ne];
    for s in 0..groups {
        for q in 0..ne {
            t[s * ne + q] = u[s * m + off[q]..s * m + off[q + 1]].iter().fold(zero, |a, v| a + v);
        }
    }
    t
}

/// Edge map N: `t̄_Q^{(s)} = (1−|Q|) Σ_{s′} g_{|Q|;s,s′} t_Q^{(s′)}`.
pub fn jacobian_n<T: Scalar>(h: &Hypergraph, g: &GroupMatrixSet<T>, t: &[Complex<T>]) -> Vec<Complex<T>> {
    let ne = h.m();
    let l = g.groups();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; t.len()];
    for (q, e) in h.iter_edges().enumerate() {
        let k = e.len();
        let c = T::one() - T::of_usize(k);
        for s in 0..l {
            let mut acc = zero;
            for s2 in 0..l {
                acc = acc + t[s2 * ne + q] * g.entry(k, s, s2);
            }
            out[s * ne + q] = acc * c;
        }
    }
    out
}

/// The rational prefactor pieces of the Ihara-Bass identity: exponents of
/// `(1−μ)` and `(1+μ(k−1))` for each size.
fn prefactor_terms(h: &Hypergraph) -> Vec<(usize, i64, i64)> {
    let n = h.n() as i64;
    h.sizes()
        .into_iter()
        .map(|k| {
            let mk = h.m_k(k) as i64;
            (k, mk * (k as i64 - 1) - n, mk - n)
        })
        .collect()
}

fn to_dense_complex(m: &SparseLinearOperator<f64>) -> DMatrix<Complex64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplets() {
        d[(r, c)] = Complex64::new(v, 0.0);
    }
    d
}

/// Relative residual of the Ihara-Bass identity `det(I−μB) = f_H(μ)·det(M(μ))`
/// with `M(μ) = I + μ((K−2I)⊗I − A) + μ²((K−I)⊗I)(D−I)`. Negative exponents in
/// `f_H` are cleared by cross-multiplication before comparing.
pub fn ihara_bass_residual(h: &Hypergraph, mu: Complex64, dense_limit: usize) -> Result<f64> {
    let margin = 1e-3;
    let sizes = h.sizes();
    let mut poles = vec![Complex64::new(1.0, 0.0)];
    poles.extend(sizes.iter().map(|&k| Complex64::new(-1.0 / (k as f64 - 1.0), 0.0)));
    if poles.iter().any(|p| (mu - p).norm() < margin) {
        return Err(Error::NearPole { mu: mu.to_string(), margin });
    }
    let dim = h.num_pointed().max(2 * h.kappa() * h.n());
    if h.n() > 16 || dim > dense_limit {
        return Err(Error::DenseLimit { dim, limit: dense_limit });
    }
    let b = to_dense_complex(&build_b::<f64>(h));
    let lhs_det = (DMatrix::identity(b.nrows(), b.ncols()) - b * mu).determinant();

    let n = h.n();
    let kap = sizes.len();
    let nn = kap * n;
    let mut mm = DMatrix::<Complex64>::identity(nn, nn);
    for (a, &k) in sizes.iter().enumerate() {
        let d = h.degrees(k);
        let adj = h.adjacency_operator::<f64>(k);
        let kf = k as f64;
        for i in 0..n {
            mm[(a * n + i, a * n + i)] += mu * (kf - 2.0);
            for b in 0..kap {
                let dv = d[i] as f64 - if a == b { 1.0 } else { 0.0 };
                mm[(a * n + i, b * n + i)] += mu * mu * (kf - 1.0) * dv;
            }
        }
        for (i, j, v) in adj.triplets() {
            for b in 0..kap {
                mm[(a * n + i, b * n + j)] -= mu * v;
            }
        }
    }
    let rhs_det = mm.determinant();

    let one = Complex64::new(1.0, 0.0);
    let mut lhs = lhs_det;
    let mut rhs = rhs_det;
    for (k, e1, e2) in prefactor_terms(h) {
        let f1 = one - mu;
        let f2 = one + mu * (k as f64 - 1.0);
        if e1 >= 0 {
            rhs *= f1.powi(e1 as i32);
        } else {
            lhs *= f1.powi((-e1) as i32);
        }
        if e2 >= 0 {
            rhs *= f2.powi(e2 as i32);
        } else {
            lhs *= f2.powi((-e2) as i32);
        }
    }
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Hypergraph {
        Hypergraph::new(3, [vec![0, 1], vec![0, 1, 2]]).unwrap()
    }

    fn nonzeros(m: &SparseLinearOperator<f64>) -> Vec<(usize, usize)> {
        m.triplets().map(|(r, c, _)| (r, c)).collect()
    }

    // Pointed-edge indices for `small`: 0{01}=0, 1{01}=1, 0{012}=2, 1{012}=3, 2{012}=4.
    #[test]
    fn b_on_small_example() {
        let b = build_b::<f64>(&small());
        assert_eq!(nonzeros(&b), vec![(0, 3), (1, 2), (2, 1), (3, 0), (4, 0), (4, 1)]);
        assert!(b.triplets().all(|(_, _, v)| v == 1.0));
    }

    #[test]
    fn b_trivial_cases() {
        let single = Hypergraph::new(2, [[0, 1]]).unwrap();
        assert_eq!(build_b::<f64>(&single).nnz(), 0);
        // path 0-1-2: pointed edges 0{01},1{01},1{12},2{12}
        let path = Hypergraph::new(3, [[0, 1], [1, 2]]).unwrap();
        assert_eq!(nonzeros(&build_b::<f64>(&path)), vec![(0, 2), (3, 1)]);
    }

    #[test]
    fn bk_restricts_columns() {
        let h = small();
        assert_eq!(nonzeros(&build_bk::<f64>(&h, 3)), vec![(0, 3), (1, 2)]);
        assert_eq!(build_bk::<f64>(&h, 4).nnz(), 0);
        let sum = build_bk::<f64>(&h, 2).add(&build_bk(&h, 3));
        assert_eq!(sum.to_dense(), build_b::<f64>(&h).to_dense());
    }

    #[test]
    fn bprime_small_and_graph_case() {
        let bp = build_bprime::<f64>(&small());
        assert_eq!(bp.nrows(), 12);
        // block (1,2) at (k=2,node 0),(k=2,node 0): d_{2;0,0} − 1 = 0
        assert_eq!(bp.get(0, 6), 0.0);
        // node 2 has no 2-edge: d − 1 = −1
        assert_eq!(bp.get(2, 8), -1.0);
        let path = Hypergraph::new(3, [[0, 1], [1, 2]]).unwrap();
        let g = build_bprime::<f64>(&path).to_dense();
        let a = path.adjacency_operator::<f64>(2).to_dense();
        let d = path.degrees(2);
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert_eq!(g[i][j], 0.0);
                assert_eq!(g[i][3 + j], if i == j { d[i] as f64 - 1.0 } else { 0.0 });
                assert_eq!(g[3 + i][j], -id);
                assert_eq!(g[3 + i][3 + j], a[i][j]);
            }
        }
    }

    #[test]
    fn j_trivial_cases() {
        let h = small();
        let id = GroupMatrixSet::<f64>::identity(2, &h.sizes());
        let b = build_b::<f64>(&h);
        assert_eq!(build_j(&h, &id).to_dense(), b.kron_left(&[vec![1.0, 0.0], vec![0.0, 1.0]]).to_dense());
        let zero = GroupMatrixSet::<f64>::new(2);
        assert_eq!(build_j(&h, &zero).nnz(), 0);
        assert_eq!(build_jprime(&h, &zero).nnz(), 0);
        assert_eq!(build_jprime(&h, &zero).nrows(), 2 * 2 * 2 * 3);
    }

    #[test]
    fn reduce_counts_pointed_edges() {
        let h = small();
        let ones = vec![Complex::new(1.0, 0.0); 5];
        let (x1, x2) = reduce_pointed(&h, &ones);
        let re: Vec<f64> = x1.iter().map(|c| c.re).collect();
        assert_eq!(re, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        let re2: Vec<f64> = x2.iter().map(|c| c.re).collect();
        assert_eq!(re2, vec![1.0, 1.0, 0.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn ihara_bass_small_and_origin() {
        let h = small();
        assert!(ihara_bass_residual(&h, Complex64::new(0.3, 0.0), 600).unwrap() <= 1e-8);
        assert_eq!(ihara_bass_residual(&h, Complex64::new(0.0, 0.0), 600).unwrap(), 0.0);
        assert!(matches!(ihara_bass_residual(&h, Complex64::new(1.0, 0.0), 600), Err(Error::NearPole { .. })));
        assert!(matches!(ihara_bass_residual(&h, Complex64::new(-0.5, 0.0), 600), Err(Error::NearPole { .. })));
    }
}
