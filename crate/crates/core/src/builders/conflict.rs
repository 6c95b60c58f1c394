//! Conflict graphs with a vertex ordering and their interference matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InterferenceMatrix, LinkId, NetworkInstance};
use crate::scalar::Weight;

/// Default limit on the number of links for the exact inductive independence check.
pub const INDUCTIVE_CHECK_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    adj: Vec<Vec<usize>>,
    /// `rank[e]` is the position of link `e` in the ordering.
    rank: Vec<usize>,
    rho: usize,
}

impl ConflictGraph {
    /// Undirected conflicts over `links` vertices, ordered by link index.
    pub fn new(links: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); links];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= links {
                    return Err(Error::UnknownLink(LinkId(v)));
                }
            }
            if a == b {
                return Err(Error::InvalidParameter(format!(
                    "conflict edge from {} to itself",
                    LinkId(a)
                )));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(ConflictGraph {
            adj,
            rank: (0..links).collect(),
            rho: 1,
        })
    }

    pub fn edgeless(links: usize) -> Self {
        Self::new(links, &[]).expect("no edges")
    }

    pub fn complete(links: usize) -> Self {
        let edges: Vec<_> = (0..links)
            .flat_map(|a| (a + 1..links).map(move |b| (a, b)))
            .collect();
        Self::new(links, &edges).expect("valid edges")
    }

    /// Links conflict iff they share an endpoint.
    pub fn node_constraint(net: &NetworkInstance) -> Self {
        let links = net.links();
        let edges: Vec<_> = (0..links.len())
            .flat_map(|a| (a + 1..links.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| links[a].shares_endpoint(&links[b]))
            .collect();
        Self::new(links.len(), &edges).expect("valid edges")
    }

    /// Sets the ordering from a list of links, first = smallest.
    pub fn with_order(mut self, order: &[LinkId]) -> Result<Self> {
        let n = self.len();
        if order.len() != n {
            return Err(Error::NotAPermutation(n));
        }
        let mut rank = vec![usize::MAX; n];
        for (pos, &l) in order.iter().enumerate() {
            if l.0 >= n || rank[l.0] != usize::MAX {
                return Err(Error::NotAPermutation(n));
            }
            rank[l.0] = pos;
        }
        self.rank = rank;
        Ok(self)
    }

    pub fn with_rho(mut self, rho: usize) -> Result<Self> {
        if rho == 0 {
            return Err(Error::InvalidParameter("rho must be at least 1".into()));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn rank(&self, link: usize) -> usize {
        self.rank[link]
    }

    pub fn neighbors(&self, link: usize) -> &[usize] {
        &self.adj[link]
    }

    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }
}

/// `W[e, e'] = 1` iff `e, e'` conflict and `rank(e) <= rank(e')`, plus the diagonal.
pub fn build_w_conflict<S: Weight>(cg: &ConflictGraph) -> InterferenceMatrix<S> {
    let n = cg.len();
    let mut w = InterferenceMatrix::identity(n);
    for e in 0..n {
        for &f in cg.neighbors(e) {
            if cg.rank(e) <= cg.rank(f) {
                w.set(e, f, S::one());
            }
        }
    }
    w
}

pub fn build_w_node_constraint<S: Weight>(net: &NetworkInstance) -> InterferenceMatrix<S> {
    build_w_conflict(&ConflictGraph::node_constraint(net))
}

pub fn build_w_mac<S: Weight>(links: usize) -> InterferenceMatrix<S> {
    InterferenceMatrix::all_ones(links)
}

pub fn build_w_identity<S: Weight>(links: usize) -> InterferenceMatrix<S> {
    InterferenceMatrix::identity(links)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InductiveCheck {
    Ok,
    /// `set` is an independent set of lower-ordered neighbours of `vertex`
    /// larger than the claimed rho.
    Counterexample { vertex: LinkId, set: Vec<LinkId> },
    TooLarge { links: usize, cap: usize },
}

/// Exact check of the claimed inductive independence number.
pub fn check_inductive_independence(cg: &ConflictGraph, cap: usize) -> InductiveCheck {
    let n = cg.len();
    if n > cap || n > 63 {
        return InductiveCheck::TooLarge { links: n, cap };
    }
    let masks: Vec<u64> = (0..n)
        .map(|v| cg.neighbors(v).iter().fold(0u64, |m, &u| m | (1 << u)))
        .collect();
    for v in 0..n {
        let lower = cg
            .neighbors(v)
            .iter()
            .filter(|&&u| cg.rank(u) < cg.rank(v))
            .fold(0u64, |m, &u| m | (1 << u));
        let best = max_independent(lower, &masks);
        if best.count_ones() as usize > cg.rho() {
            return InductiveCheck::Counterexample {
                vertex: LinkId(v),
                set: (0..n).filter(|&u| best & (1 << u) != 0).map(LinkId).collect(),
            };
        }
    }
    InductiveCheck::Ok
}

/// Largest independent subset of `cand`, as a bitmask.
fn max_independent(cand: u64, adj: &[u64]) -> u64 {
    if cand == 0 {
        return 0;
    }
    let v = cand.trailing_zeros() as usize;
    let bit = 1u64 << v;
    let with = bit | max_independent(cand & !bit & !adj[v], adj);
    if adj[v] & cand == 0 {
        // An isolated candidate is always worth taking.
        return with;
    }
    let without = max_independent(cand & !bit, adj);
    if with.count_ones() >= without.count_ones() {
        with
    } else {
        without
    }
}
