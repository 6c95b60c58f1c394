//! Network instances, routing paths, packets, and the linear interference
//! measure `I = ||W R||_inf` that every other module consumes.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

/// Dense link index, fixed at network construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PacketId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub sender: NodeId,
    pub receiver: NodeId,
}

impl Link {
    pub fn new(sender: NodeId, receiver: NodeId) -> Self {
        Link { sender, receiver }
    }

    pub fn shares_endpoint(&self, other: &Link) -> bool {
        self.sender == other.sender
            || self.sender == other.receiver
            || self.receiver == other.sender
            || self.receiver == other.receiver
    }
}

/// Directed communication graph with a bound `D` on routing path length.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    nodes: Vec<NodeId>,
    links: Vec<Link>,
    max_path_len: usize,
}

impl NetworkInstance {
    pub fn new(nodes: Vec<NodeId>, links: Vec<Link>, max_path_len: usize) -> Result<Self> {
        if max_path_len == 0 {
            return Err(Error::InvalidParameter(
                "maximum path length D must be positive".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for &node in &nodes {
            if !seen.insert(node) {
                return Err(Error::DuplicateNode(node));
            }
        }
        let mut nodes = nodes;
        nodes.sort_unstable();
        let net = NetworkInstance {
            nodes,
            links,
            max_path_len,
        };
        for (i, link) in net.links.iter().enumerate() {
            for node in [link.sender, link.receiver] {
                if !net.contains_node(node) {
                    return Err(Error::UnknownNode(node));
                }
            }
            if link.sender == link.receiver {
                return Err(Error::SelfLoop {
                    link: LinkId(i),
                    node: link.sender,
                });
            }
        }
        if net.size() == 0 {
            return Err(Error::InvalidParameter("network has size zero".into()));
        }
        Ok(net)
    }

    /// Builds nodes `0..node_count` with the given `(sender, receiver)` pairs.
    pub fn from_pairs(node_count: u64, pairs: &[(u64, u64)], max_path_len: usize) -> Result<Self> {
        let nodes = (0..node_count).map(NodeId).collect();
        let links = pairs
            .iter()
            .map(|&(s, r)| Link::new(NodeId(s), NodeId(r)))
            .collect();
        Self::new(nodes, links, max_path_len)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        self.links.get(id.0).ok_or(Error::UnknownLink(id))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> {
        (0..self.links.len()).map(LinkId)
    }

    /// `D`.
    pub fn max_path_len(&self) -> usize {
        self.max_path_len
    }

    /// The significant network size `m = max(|E|, D)`.
    pub fn size(&self) -> usize {
        self.links.len().max(self.max_path_len)
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn node_index(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            max_path_len: self.max_path_len,
            nodes: self.nodes.iter().map(|n| n.0).collect(),
            links: self
                .links
                .iter()
                .enumerate()
                .map(|(id, l)| LinkSpec {
                    id,
                    sender: l.sender.0,
                    receiver: l.receiver.0,
                })
                .collect(),
        }
    }
}

/// Serializable form of a network instance (the `nodes` / `links` / `D`
/// sections of a network file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(rename = "D")]
    pub max_path_len: usize,
    pub nodes: Vec<u64>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: usize,
    pub sender: u64,
    pub receiver: u64,
}

impl NetworkSpec {
    pub fn build(&self) -> Result<NetworkInstance> {
        let mut links = Vec::with_capacity(self.links.len());
        for (expected, spec) in self.links.iter().enumerate() {
            if spec.id != expected {
                return Err(Error::LinkOrder {
                    expected,
                    found: spec.id,
                });
            }
            links.push(Link::new(NodeId(spec.sender), NodeId(spec.receiver)));
        }
        NetworkInstance::new(
            self.nodes.iter().copied().map(NodeId).collect(),
            links,
            self.max_path_len,
        )
    }
}

/// A chained sequence of links of length `1..=D`. Nodes may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoutePath {
    hops: Vec<LinkId>,
}

impl RoutePath {
    pub fn new(net: &NetworkInstance, hops: Vec<LinkId>) -> Result<Self> {
        if hops.is_empty() {
            return Err(Error::InvalidPath("path has no hops".into()));
        }
        if hops.len() > net.max_path_len() {
            return Err(Error::InvalidPath(format!(
                "path length {} exceeds D = {}",
                hops.len(),
                net.max_path_len()
            )));
        }
        for pair in hops.windows(2) {
            let a = net.link(pair[0])?;
            let b = net.link(pair[1])?;
            if a.receiver != b.sender {
                return Err(Error::InvalidPath(format!(
                    "hops {} and {} are not chained",
                    pair[0], pair[1]
                )));
            }
        }
        net.link(hops[hops.len() - 1])?;
        Ok(RoutePath { hops })
    }

    pub fn single(net: &NetworkInstance, link: LinkId) -> Result<Self> {
        Self::new(net, vec![link])
    }

    pub fn hops(&self) -> &[LinkId] {
        &self.hops
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Link of the 1-based hop `hop_index`.
    pub fn hop(&self, hop_index: usize) -> Option<LinkId> {
        hop_index
            .checked_sub(1)
            .and_then(|i| self.hops.get(i))
            .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketState {
    Waiting,
    Active,
    Failed,
    Delivered,
}

#[derive(Debug, Clone)]
pub struct Packet {
    pub id: PacketId,
    pub path: Arc<RoutePath>,
    /// 1-based index of the next hop to cross; `d + 1` once delivered.
    pub hop_index: usize,
    pub state: PacketState,
    pub injection_slot: u64,
    pub delivery_slot: Option<u64>,
    pub fail_slot: Option<u64>,
}

impl Packet {
    pub fn new(id: PacketId, path: Arc<RoutePath>, injection_slot: u64) -> Self {
        Packet {
            id,
            path,
            hop_index: 1,
            state: PacketState::Waiting,
            injection_slot,
            delivery_slot: None,
            fail_slot: None,
        }
    }

    pub fn path_len(&self) -> usize {
        self.path.len()
    }

    pub fn next_link(&self) -> Option<LinkId> {
        self.path.hop(self.hop_index)
    }

    /// Hops still to cross, counting the next one.
    pub fn remaining_hops(&self) -> usize {
        self.path.len() + 1 - self.hop_index
    }

    pub fn ever_failed(&self) -> bool {
        self.fail_slot.is_some()
    }

    /// Crosses the next hop at `slot`; returns true once delivered.
    pub fn advance(&mut self, slot: u64) -> bool {
        debug_assert!(self.hop_index <= self.path.len());
        self.hop_index += 1;
        if self.hop_index == self.path.len() + 1 {
            self.state = PacketState::Delivered;
            self.delivery_slot = Some(slot);
            true
        } else {
            false
        }
    }

    pub fn mark_failed(&mut self, slot: u64) {
        self.state = PacketState::Failed;
        if self.fail_slot.is_none() {
            self.fail_slot = Some(slot);
        }
    }

    pub fn latency(&self) -> Option<u64> {
        self.delivery_slot.map(|d| d - self.injection_slot)
    }
}

/// `|E| x |E|` interference weights. Stored sparsely by row; zero entries are
/// omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceMatrix<S = f64> {
    dim: usize,
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Weight> InterferenceMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        InterferenceMatrix {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        InterferenceMatrix {
            dim,
            rows: (0..dim).map(|i| vec![(i, S::one())]).collect(),
        }
    }

    pub fn all_ones(dim: usize) -> Self {
        InterferenceMatrix {
            dim,
            rows: (0..dim)
                .map(|_| (0..dim).map(|j| (j, S::one())).collect())
                .collect(),
        }
    }

    pub fn from_dense(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            m.rows[i] = row
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .collect();
        }
        Ok(m)
    }

    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, S)>) -> Result<Self> {
        let mut m = Self::zeros(dim);
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.max(c) + 1,
                });
            }
            m.set(r, c, v);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> S {
        match self.rows[row].binary_search_by_key(&col, |&(c, _)| c) {
            Ok(i) => self.rows[row][i].1,
            Err(_) => S::zero(),
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: S) {
        let r = &mut self.rows[row];
        match r.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(i) if value.is_zero() => {
                r.remove(i);
            }
            Ok(i) => r[i].1 = value,
            Err(_) if value.is_zero() => {}
            Err(i) => r.insert(i, (col, value)),
        }
    }

    /// Nonzero entries of a row in ascending column order.
    pub fn row(&self, row: usize) -> &[(usize, S)] {
        &self.rows[row]
    }

    pub fn dense_row(&self, row: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for &(c, v) in &self.rows[row] {
            out[c] = v;
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn map<T: Weight>(&self, mut f: impl FnMut(S) -> T) -> InterferenceMatrix<T> {
        let mut out = InterferenceMatrix::<T>::zeros(self.dim);
        for (r, c, v) in self.triplets() {
            out.set(r, c, f(v));
        }
        out
    }
}

/// Per-link request counts `R(e)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequestVector {
    counts: Vec<u64>,
}

impl RequestVector {
    pub fn zeros(links: usize) -> Self {
        RequestVector {
            counts: vec![0; links],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        RequestVector { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, link: LinkId) -> u64 {
        self.counts[link.0]
    }

    pub fn add(&mut self, link: LinkId) {
        self.counts[link.0] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn sum(&self, other: &RequestVector) -> Result<RequestVector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(RequestVector {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

/// Counts every `(path, position)` occurrence of each link.
pub fn request_vector(net: &NetworkInstance, paths: &[RoutePath]) -> Result<RequestVector> {
    request_vector_from_links(net.link_count(), paths.iter().flat_map(|p| p.hops().iter().copied()))
}

pub fn request_vector_from_links(
    link_count: usize,
    links: impl IntoIterator<Item = LinkId>,
) -> Result<RequestVector> {
    let mut r = RequestVector::zeros(link_count);
    for link in links {
        if link.0 >= link_count {
            return Err(Error::UnknownLink(link));
        }
        r.add(link);
    }
    Ok(r)
}

/// `I = max_e sum_e' W[e, e'] R(e')`.
pub fn interference_measure<S: Weight>(w: &InterferenceMatrix<S>, r: &RequestVector) -> Result<S> {
    if w.dim() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: r.len(),
        });
    }
    let mut best = S::zero();
    for e in 0..w.dim() {
        let mut acc = S::zero();
        for &(c, v) in w.row(e) {
            let count = r.counts[c];
            if count != 0 {
                acc = acc + v * S::from_count(count);
            }
        }
        best = best.max_of(acc);
    }
    Ok(best)
}

/// `||W v||_inf` for a nonnegative real load vector.
pub fn weighted_max_load<S: Weight>(w: &InterferenceMatrix<S>, load: &[S]) -> Result<S> {
    Ok(weighted_loads(w, load)?
        .into_iter()
        .fold(S::zero(), S::max_of))
}

/// Componentwise `W v`.
pub fn weighted_loads<S: Weight>(w: &InterferenceMatrix<S>, load: &[S]) -> Result<Vec<S>> {
    if w.dim() != load.len() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: load.len(),
        });
    }
    Ok((0..w.dim())
        .map(|e| {
            w.row(e)
                .iter()
                .fold(S::zero(), |acc, &(c, v)| acc + v * load[c])
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Diagonal,
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixViolation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatrixValidation {
    pub violations: Vec<MatrixViolation>,
}

impl MatrixValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks unit diagonal and `[0, 1]` range, listing every violating entry.
pub fn validate_matrix<S: Weight>(w: &InterferenceMatrix<S>) -> MatrixValidation {
    let tol = S::tolerance();
    let one = S::one();
    let mut violations = Vec::new();
    for e in 0..w.dim() {
        let d = w.get(e, e);
        let off = if d > one { d - one } else { one - d };
        if off > tol {
            violations.push(MatrixViolation {
                row: e,
                col: e,
                value: d.to_f64(),
                kind: ViolationKind::Diagonal,
            });
        }
        for &(c, v) in w.row(e) {
            if c != e && (v < S::zero() - tol || v > one + tol) {
                violations.push(MatrixViolation {
                    row: e,
                    col: c,
                    value: v.to_f64(),
                    kind: ViolationKind::Range,
                });
            }
        }
    }
    MatrixValidation { violations }
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;
    use proptest::prelude::*;

    use super::*;

    fn line(n: u64) -> NetworkInstance {
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        NetworkInstance::from_pairs(n, &pairs, 4).unwrap()
    }

    #[test]
    fn size_is_max_of_links_and_d() {
        let net = NetworkInstance::from_pairs(3, &[(0, 1)], 5).unwrap();
        assert_eq!(net.size(), 5);
        let net = line(8);
        assert_eq!(net.size(), 7);
    }

    #[test]
    fn rejects_undeclared_nodes_and_self_loops() {
        assert_eq!(
            NetworkInstance::from_pairs(2, &[(0, 2)], 1),
            Err(Error::UnknownNode(NodeId(2)))
        );
        assert!(matches!(
            NetworkInstance::from_pairs(2, &[(1, 1)], 1),
            Err(Error::SelfLoop { .. })
        ));
    }

    #[test]
    fn paths_must_chain_and_respect_d() {
        let net = line(4);
        assert!(RoutePath::new(&net, vec![LinkId(0), LinkId(1), LinkId(2)]).is_ok());
        assert!(RoutePath::new(&net, vec![LinkId(0), LinkId(2)]).is_err());
        assert!(RoutePath::new(&net, vec![]).is_err());
        let short = NetworkInstance::from_pairs(3, &[(0, 1), (1, 2)], 1).unwrap();
        assert!(RoutePath::new(&short, vec![LinkId(0), LinkId(1)]).is_err());
    }

    #[test]
    fn paths_may_revisit_nodes() {
        let net = NetworkInstance::from_pairs(2, &[(0, 1), (1, 0)], 3).unwrap();
        let p = RoutePath::new(&net, vec![LinkId(0), LinkId(1), LinkId(0)]).unwrap();
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn request_vector_examples() {
        let net = NetworkInstance::from_pairs(3, &[(0, 1), (1, 2), (1, 0)], 3).unwrap();
        let r = request_vector(&net, &[]).unwrap();
        assert_eq!(r.counts(), &[0, 0, 0]);

        let p12 = RoutePath::new(&net, vec![LinkId(0), LinkId(1)]).unwrap();
        let p2 = RoutePath::single(&net, LinkId(1)).unwrap();
        let r = request_vector(&net, &[p12, p2]).unwrap();
        assert_eq!(r.counts(), &[1, 2, 0]);

        let revisit = RoutePath::new(&net, vec![LinkId(0), LinkId(2), LinkId(0)]).unwrap();
        let r = request_vector(&net, &[revisit]).unwrap();
        assert_eq!(r.counts(), &[2, 0, 1]);
    }

    #[test]
    fn request_vector_rejects_foreign_links() {
        assert_eq!(
            request_vector_from_links(2, [LinkId(0), LinkId(5)]),
            Err(Error::UnknownLink(LinkId(5)))
        );
    }

    #[test]
    fn measure_examples() {
        let r = RequestVector::from_counts(vec![3, 1, 2]);
        let id = InterferenceMatrix::<f64>::identity(3);
        assert_eq!(interference_measure(&id, &r).unwrap(), 3.0);
        let ones = InterferenceMatrix::<f64>::all_ones(3);
        assert_eq!(interference_measure(&ones, &r).unwrap(), 6.0);

        let w = InterferenceMatrix::from_dense(vec![vec![1.0, 0.5], vec![0.25, 1.0]]).unwrap();
        let r = RequestVector::from_counts(vec![2, 4]);
        assert_eq!(interference_measure(&w, &r).unwrap(), 4.5);

        let zero = RequestVector::zeros(2);
        assert_eq!(interference_measure(&w, &zero).unwrap(), 0.0);
    }

    #[test]
    fn measure_rejects_dimension_mismatch() {
        let w = InterferenceMatrix::<f64>::identity(3);
        assert!(matches!(
            interference_measure(&w, &RequestVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn measure_is_exact_over_rationals() {
        let third = Ratio::new(1, 3);
        let one = Ratio::from_integer(1);
        let w = InterferenceMatrix::from_dense(vec![vec![one, third], vec![third, one]]).unwrap();
        let r = RequestVector::from_counts(vec![1, 3]);
        assert_eq!(interference_measure(&w, &r).unwrap(), Ratio::new(10, 3));
    }

    #[test]
    fn validate_matrix_examples() {
        assert!(validate_matrix(&InterferenceMatrix::<f64>::identity(3)).is_ok());

        let mut w = InterferenceMatrix::<f64>::identity(3);
        w.set(1, 1, 0.9);
        let v = validate_matrix(&w);
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].row, v.violations[0].col), (1, 1));
        assert_eq!(v.violations[0].kind, ViolationKind::Diagonal);

        let mut w = InterferenceMatrix::<f64>::identity(3);
        w.set(1, 2, 1.5);
        let v = validate_matrix(&w);
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].row, v.violations[0].col), (1, 2));
        assert_eq!(v.violations[0].kind, ViolationKind::Range);
    }

    #[test]
    fn missing_diagonal_is_reported() {
        let w = InterferenceMatrix::<f64>::zeros(2);
        assert_eq!(validate_matrix(&w).violations.len(), 2);
    }

    #[test]
    fn sparse_set_drops_zeros() {
        let mut w = InterferenceMatrix::<f64>::identity(2);
        w.set(0, 1, 0.3);
        assert_eq!(w.nnz(), 3);
        w.set(0, 1, 0.0);
        assert_eq!(w.nnz(), 2);
        assert_eq!(w.dense_row(0), vec![1.0, 0.0]);
    }

    fn matrix_and_requests() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u64>, Vec<u64>)> {
        (1usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), n),
                prop::collection::vec(0u64..20, n),
                prop::collection::vec(0u64..20, n),
            )
        })
    }

    fn with_unit_diagonal(mut rows: Vec<Vec<f64>>) -> InterferenceMatrix<f64> {
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        InterferenceMatrix::from_dense(rows).unwrap()
    }

    proptest! {
        #[test]
        fn measure_is_subadditive((rows, a, b) in matrix_and_requests()) {
            let w = with_unit_diagonal(rows);
            let ra = RequestVector::from_counts(a);
            let rb = RequestVector::from_counts(b);
            let sum = interference_measure(&w, &ra.sum(&rb).unwrap()).unwrap();
            let parts = interference_measure(&w, &ra).unwrap() + interference_measure(&w, &rb).unwrap();
            prop_assert!(sum <= parts + 1e-9);
        }

        #[test]
        fn measure_is_monotone((rows, a, b) in matrix_and_requests()) {
            let w = with_unit_diagonal(rows);
            let lo = RequestVector::from_counts(a.clone());
            let hi = RequestVector::from_counts(a.iter().zip(&b).map(|(x, y)| x + y).collect());
            prop_assert!(interference_measure(&w, &lo).unwrap() <= interference_measure(&w, &hi).unwrap());
        }

        #[test]
        fn measure_dominates_max_request((rows, a, _b) in matrix_and_requests()) {
            let w = with_unit_diagonal(rows);
            prop_assert!(validate_matrix(&w).is_ok());
            let r = RequestVector::from_counts(a);
            prop_assert!(interference_measure(&w, &r).unwrap() >= r.max() as f64);
        }

        #[test]
        fn identity_and_all_ones_reduce_to_max_and_total(counts in prop::collection::vec(0u64..100, 1..10)) {
            let n = counts.len();
            let r = RequestVector::from_counts(counts);
            prop_assert_eq!(interference_measure(&InterferenceMatrix::<f64>::identity(n), &r).unwrap(), r.max() as f64);
            prop_assert_eq!(interference_measure(&InterferenceMatrix::<f64>::all_ones(n), &r).unwrap(), r.total() as f64);
        }
    }
}
