//! Hypergraphs with edges grouped by size, pointed edges, and the per-size
//! degree and adjacency operators.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{OperatorTag, SparseLinearOperator};

/// Undirected hypergraph on nodes `0..n`. Edges are stored sorted and grouped
/// by size; parallel copies of an edge are kept as distinct edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edges_by_size: BTreeMap<usize, Vec<Vec<usize>>>,
}

/// An edge together with a distinguished member node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PointedEdge {
    pub point: usize,
    pub size: usize,
    /// Index of the edge within the size-`size` edge list.
    pub index: usize,
}

impl Hypergraph {
    /// Builds a hypergraph from a list of edges. Each edge is sorted; edges
    /// with repeated nodes, fewer than two nodes, or out-of-range ids are rejected.
    pub fn new<I, E>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        let mut h = Hypergraph { n, edges_by_size: BTreeMap::new() };
        for (line, e) in edges.into_iter().enumerate() {
            h.push_edge(e.as_ref().to_vec(), line + 1)?;
        }
        Ok(h)
    }

    /// A hypergraph with `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Hypergraph { n, edges_by_size: BTreeMap::new() }
    }

    fn push_edge(&mut self, mut e: Vec<usize>, line: usize) -> Result<()> {
        e.sort_unstable();
        if let Some(w) = e.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::RepeatedNode { line, node: w[0] });
        }
        if e.len() < 2 {
            return Err(Error::ShortEdge { line });
        }
        if let Some(&node) = e.iter().find(|&&v| v >= self.n) {
            return Err(Error::NodeOutOfRange { node, n: self.n });
        }
        self.edges_by_size.entry(e.len()).or_default().push(e);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted list of edge sizes present.
    pub fn sizes(&self) -> Vec<usize> {
        self.edges_by_size.keys().copied().collect()
    }

    /// Number of distinct edge sizes.
    pub fn kappa(&self) -> usize {
        self.edges_by_size.len()
    }

    /// Largest edge size, or 0 without edges.
    pub fn max_size(&self) -> usize {
        self.edges_by_size.keys().next_back().copied().unwrap_or(0)
    }

    /// Edges of size `k` (empty slice when absent).
    pub fn edges(&self, k: usize) -> &[Vec<usize>] {
        self.edges_by_size.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges_by_size(&self) -> &BTreeMap<usize, Vec<Vec<usize>>> {
        &self.edges_by_size
    }

    /// Number of size-`k` edges.
    pub fn m_k(&self, k: usize) -> usize {
        self.edges(k).len()
    }

    /// Total number of edges.
    pub fn m(&self) -> usize {
        self.edges_by_size.values().map(Vec::len).sum()
    }

    /// Number of pointed edges, `Σ_k k·m_k`.
    pub fn num_pointed(&self) -> usize {
        self.edges_by_size.iter().map(|(k, e)| k * e.len()).sum()
    }

    /// All edges in canonical order (size ascending, then index).
    pub fn iter_edges(&self) -> impl Iterator<Item = &[usize]> {
        self.edges_by_size.values().flatten().map(Vec::as_slice)
    }

    /// Pointed edges in canonical order: size ascending, then edge index, then
    /// position of the point in the sorted edge. This order indexes the basis of B.
    pub fn pointed_edges(&self) -> Vec<PointedEdge> {
        let mut out = Vec::with_capacity(self.num_pointed());
        for (&size, edges) in &self.edges_by_size {
            for (index, e) in edges.iter().enumerate() {
                out.extend(e.iter().map(|&point| PointedEdge { point, size, index }));
            }
        }
        out
    }

    /// Offset of each canonical edge's first pointed edge; one extra entry at the end.
    pub fn pointed_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.m() + 1);
        let mut acc = 0;
        off.push(0);
        for e in self.iter_edges() {
            acc += e.len();
            off.push(acc);
        }
        off
    }

    /// For each node, the canonical ids of edges containing it together with
    /// the node's position within the edge.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.n];
        for (eid, e) in self.iter_edges().enumerate() {
            for (pos, &v) in e.iter().enumerate() {
                inc[v].push((eid, pos));
            }
        }
        inc
    }

    /// Per-node count of size-`k` edges.
    pub fn degrees(&self, k: usize) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in self.edges(k) {
            for &v in e {
                d[v] += 1;
            }
        }
        d
    }

    /// Diagonal operator D_k with `(i,i)` = number of size-`k` edges containing `i`.
    pub fn degree_operator<T: Scalar>(&self, k: usize) -> SparseLinearOperator<T> {
        let d = self.degrees(k);
        let trip = d.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, i, T::of_usize(c)));
        SparseLinearOperator::from_triplets(self.n, self.n, trip, OperatorTag::Degree(k))
    }

    /// Adjacency operator A_k: `(i,j)`, `i ≠ j`, counts size-`k` edges containing both.
    /// The diagonal is zero.
    pub fn adjacency_operator<T: Scalar>(&self, k: usize) -> SparseLinearOperator<T> {
        let mut trip = Vec::new();
        for e in self.edges(k) {
            for &i in e {
                for &j in e {
                    if i != j {
                        trip.push((i, j, T::one()));
                    }
                }
            }
        }
        SparseLinearOperator::from_triplets(self.n, self.n, trip, OperatorTag::Adjacency(k))
    }

    /// Clique expansion: every size-`k` edge becomes its `k(k−1)/2` node pairs,
    /// with multiplicity preserved as parallel 2-edges.
    pub fn clique_projection(&self) -> Hypergraph {
        let mut pairs = Vec::new();
        for e in self.iter_edges() {
            for (a, &i) in e.iter().enumerate() {
                for &j in &e[a + 1..] {
                    pairs.push(vec![i, j]);
                }
            }
        }
        let mut h = Hypergraph::empty(self.n);
        if !pairs.is_empty() {
            h.edges_by_size.insert(2, pairs);
        }
        h
    }

    /// Removes repeated copies of identical edges, keeping the first occurrence.
    pub fn dedup(&self) -> Hypergraph {
        let mut h = self.clone();
        for edges in h.edges_by_size.values_mut() {
            let mut seen = std::collections::HashSet::new();
            edges.retain(|e| seen.insert(e.clone()));
        }
        h
    }

    /// Parses the hyperedge-list format: one edge per line, 1-based node ids
    /// separated by whitespace or commas. Blank lines and `#` comments are skipped.
    /// `n` defaults to the largest id seen; an override must cover every id.
    pub fn read_edge_list<R: Read>(reader: R, n_override: Option<usize>) -> Result<Self> {
        let mut raw = Vec::new();
        let mut max_id = 0;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut e = Vec::new();
            for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                let id: usize = tok
                    .parse()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| Error::Parse { line: lineno + 1, token: tok.to_string() })?;
                max_id = max_id.max(id);
                e.push(id - 1);
            }
            raw.push((lineno + 1, e));
        }
        if raw.is_empty() {
            return Err(Error::Empty);
        }
        let n = n_override.unwrap_or(max_id);
        let mut h = Hypergraph::empty(n);
        for (line, e) in raw {
            h.push_edge(e, line)?;
        }
        Ok(h)
    }

    /// Reads a hyperedge-list file; see [`Hypergraph::read_edge_list`].
    pub fn load(path: impl AsRef<Path>, n_override: Option<usize>) -> Result<Self> {
        Self::read_edge_list(std::fs::File::open(path)?, n_override)
    }

    /// Writes edges in canonical order, 1-based, space separated.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for e in self.iter_edges() {
            let line: Vec<String> = e.iter().map(|v| (v + 1).to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Node labels in `0..groups`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    groups: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, groups: usize) -> Result<Self> {
        if let Some(&label) = labels.iter().find(|&&l| l >= groups) {
            return Err(Error::LabelOutOfRange { label, groups });
        }
        Ok(LabelVector { labels, groups })
    }

    /// Fixed balanced assignment: node `i` gets group `i·groups/n`.
    pub fn blocks(n: usize, groups: usize) -> Self {
        let labels = (0..n).map(|i| i * groups / n.max(1)).collect();
        LabelVector { labels, groups }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Count of nodes per group.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.groups];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Two-group spin: `+1` for group 0, `−1` otherwise.
    pub fn sigma(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect()
    }

    /// Reads one integer label per line (0-based). `groups` defaults to max + 1.
    pub fn read<R: Read>(reader: R, groups: Option<usize>) -> Result<Self> {
        let mut labels = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: usize = t.parse().map_err(|_| Error::Parse { line: lineno + 1, token: t.to_string() })?;
            labels.push(v);
        }
        if labels.is_empty() {
            return Err(Error::Empty);
        }
        let g = groups.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
        Self::new(labels, g)
    }

    pub fn load(path: impl AsRef<Path>, groups: Option<usize>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?, groups)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for l in &self.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Hypergraph {
        Hypergraph::new(3, [vec![0, 1], vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn parse_mixed_sizes() {
        let h = Hypergraph::read_edge_list("1 2\n1 2 3\n".as_bytes(), None).unwrap();
        assert_eq!(h.n(), 3);
        assert_eq!(h.m_k(2), 1);
        assert_eq!(h.m_k(3), 1);
    }

    #[test]
    fn parse_with_override_keeps_isolated_nodes() {
        let h = Hypergraph::read_edge_list("1,2\n".as_bytes(), Some(5)).unwrap();
        assert_eq!(h.n(), 5);
        assert_eq!(h.degrees(2), vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Hypergraph::read_edge_list("1 1 2".as_bytes(), None),
            Err(Error::RepeatedNode { line: 1, node: 0 })
        ));
        assert!(matches!(Hypergraph::read_edge_list("".as_bytes(), None), Err(Error::Empty)));
        assert!(matches!(Hypergraph::read_edge_list("1 x".as_bytes(), None), Err(Error::Parse { .. })));
        assert!(matches!(Hypergraph::read_edge_list("0 1".as_bytes(), None), Err(Error::Parse { .. })));
        assert!(matches!(Hypergraph::read_edge_list("3".as_bytes(), None), Err(Error::ShortEdge { .. })));
        assert!(matches!(Hypergraph::read_edge_list("1 4".as_bytes(), Some(3)), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn pointed_edge_order() {
        let pe = small().pointed_edges();
        let got: Vec<_> = pe.iter().map(|p| (p.point, p.size, p.index)).collect();
        assert_eq!(got, vec![(0, 2, 0), (1, 2, 0), (0, 3, 0), (1, 3, 0), (2, 3, 0)]);
        assert!(Hypergraph::empty(4).pointed_edges().is_empty());
    }

    #[test]
    fn degree_and_adjacency() {
        let h = small();
        assert_eq!(h.degree_operator::<f64>(2).to_dense(), vec![vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 0.]]);
        assert_eq!(h.degree_operator::<f64>(3).to_dense(), vec![vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 1.]]);
        let a3 = h.adjacency_operator::<f64>(3).to_dense();
        assert_eq!(a3, vec![vec![0., 1., 1.], vec![1., 0., 1.], vec![1., 1., 0.]]);
        let a2 = h.adjacency_operator::<f64>(2).to_dense();
        assert_eq!(a2, vec![vec![0., 1., 0.], vec![1., 0., 0.], vec![0., 0., 0.]]);
        assert_eq!(h.degree_operator::<f64>(4).nnz(), 0);
        let par = Hypergraph::new(2, [[0, 1], [0, 1]]).unwrap();
        assert_eq!(par.adjacency_operator::<f64>(2).get(0, 1), 2.0);
    }

    #[test]
    fn clique_projection_examples() {
        let p = small().clique_projection();
        assert_eq!(p.edges(2), &[vec![0, 1], vec![0, 1], vec![0, 2], vec![1, 2]]);
        let g = Hypergraph::new(3, [[0, 1], [1, 2]]).unwrap();
        assert_eq!(g.clique_projection(), g);
        let q = Hypergraph::new(4, [[0, 1, 2, 3]]).unwrap();
        assert_eq!(q.clique_projection().m(), 6);
    }

    #[test]
    fn edge_list_round_trip() {
        let h = small();
        let mut buf = Vec::new();
        h.write_edge_list(&mut buf).unwrap();
        assert_eq!(Hypergraph::read_edge_list(buf.as_slice(), Some(3)).unwrap(), h);
    }

    #[test]
    fn dedup_removes_parallel_copies() {
        let h = Hypergraph::new(3, [vec![0, 1], vec![1, 0], vec![0, 1, 2]]).unwrap();
        assert_eq!(h.dedup().m(), 2);
    }

    #[test]
    fn labels() {
        assert!(LabelVector::new(vec![0, 2], 2).is_err());
        let z = LabelVector::blocks(6, 3);
        assert_eq!(z.labels(), &[0, 0, 1, 1, 2, 2]);
        assert_eq!(z.counts(), vec![2, 2, 2]);
        let r = LabelVector::read("0\n1\n1\n".as_bytes(), None).unwrap();
        assert_eq!(r.groups(), 2);
    }
}
