//! Node geometry: planar positions or an explicit distance table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkId, NetworkInstance, NodeId};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
enum Metric<S> {
    Positions(Vec<(S, S)>),
    Table(Vec<Vec<S>>),
}

/// Something dubious but tolerated in a loaded geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometryWarning {
    ZeroDistance(NodeId, NodeId),
    Triangle { a: NodeId, b: NodeId, via: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricInstance<S = f64> {
    nodes: Vec<NodeId>,
    metric: Metric<S>,
}

impl<S: Real> GeometricInstance<S> {
    /// Euclidean plane positions.
    pub fn from_positions(points: Vec<(NodeId, S, S)>) -> Result<Self> {
        let mut points = points;
        points.sort_by_key(|p| p.0);
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateNode(pair[0].0));
            }
        }
        for &(id, x, y) in &points {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidGeometry(format!("non-finite position for {id}")));
            }
        }
        Ok(GeometricInstance {
            nodes: points.iter().map(|p| p.0).collect(),
            metric: Metric::Positions(points.iter().map(|p| (p.1, p.2)).collect()),
        })
    }

    /// Explicit symmetric distance table; row/column `i` belongs to `nodes[i]`.
    pub fn from_table(nodes: Vec<NodeId>, table: Vec<Vec<S>>) -> Result<Self> {
        let n = nodes.len();
        if table.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: table.len(),
            });
        }
        for row in &table {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        let tol: S = lit(1e-9);
        for i in 0..n {
            if table[i][i] != S::zero() {
                return Err(Error::InvalidGeometry(format!(
                    "nonzero self distance at {}",
                    nodes[i]
                )));
            }
            for j in 0..n {
                let v = table[i][j];
                if !v.is_finite() || v < S::zero() {
                    return Err(Error::InvalidGeometry(format!(
                        "distance {} -> {} is not a nonnegative number",
                        nodes[i], nodes[j]
                    )));
                }
                if (v - table[j][i]).abs() > tol {
                    return Err(Error::InvalidGeometry(format!(
                        "asymmetric distance between {} and {}",
                        nodes[i], nodes[j]
                    )));
                }
            }
        }
        // Keep the rows aligned with sorted node ids.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| nodes[i]);
        for pair in order.windows(2) {
            if nodes[pair[0]] == nodes[pair[1]] {
                return Err(Error::DuplicateNode(nodes[pair[0]]));
            }
        }
        let sorted_table = order
            .iter()
            .map(|&i| order.iter().map(|&j| table[i][j]).collect())
            .collect();
        Ok(GeometricInstance {
            nodes: order.iter().map(|&i| nodes[i]).collect(),
            metric: Metric::Table(sorted_table),
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index_of(&self, node: NodeId) -> Result<usize> {
        self.nodes
            .binary_search(&node)
            .map_err(|_| Error::UnknownNode(node))
    }

    /// Distance by internal node index.
    pub fn dist_idx(&self, a: usize, b: usize) -> S {
        match &self.metric {
            Metric::Positions(p) => {
                let dx = p[a].0 - p[b].0;
                let dy = p[a].1 - p[b].1;
                (dx * dx + dy * dy).sqrt()
            }
            Metric::Table(t) => t[a][b],
        }
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Result<S> {
        Ok(self.dist_idx(self.index_of(a)?, self.index_of(b)?))
    }

    /// Zero off-diagonal distances and triangle-inequality violations beyond 1e-9.
    pub fn warnings(&self) -> Vec<GeometryWarning> {
        let n = self.nodes.len();
        let tol: S = lit(1e-9);
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.dist_idx(a, b) == S::zero() {
                    out.push(GeometryWarning::ZeroDistance(self.nodes[a], self.nodes[b]));
                }
            }
        }
        if let Metric::Table(t) = &self.metric {
            for a in 0..n {
                for b in a + 1..n {
                    for via in 0..n {
                        if via != a && via != b && t[a][b] > t[a][via] + t[via][b] + tol {
                            out.push(GeometryWarning::Triangle {
                                a: self.nodes[a],
                                b: self.nodes[b],
                                via: self.nodes[via],
                            });
                            break;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Geometry resolved against a network: internal node indices of every
/// link's sender and receiver.
#[derive(Debug, Clone)]
pub struct LinkGeometry<S = f64> {
    geo: GeometricInstance<S>,
    sender: Vec<usize>,
    receiver: Vec<usize>,
}

impl<S: Real> LinkGeometry<S> {
    pub fn new(net: &NetworkInstance, geo: GeometricInstance<S>) -> Result<Self> {
        let mut sender = Vec::with_capacity(net.link_count());
        let mut receiver = Vec::with_capacity(net.link_count());
        for link in net.links() {
            sender.push(geo.index_of(link.sender)?);
            receiver.push(geo.index_of(link.receiver)?);
        }
        Ok(LinkGeometry {
            geo,
            sender,
            receiver,
        })
    }

    pub fn geometry(&self) -> &GeometricInstance<S> {
        &self.geo
    }

    pub fn link_count(&self) -> usize {
        self.sender.len()
    }

    /// `d(s(from), r(to))`: distance from one link's sender to another's receiver.
    pub fn cross(&self, from: usize, to: usize) -> S {
        self.geo.dist_idx(self.sender[from], self.receiver[to])
    }

    pub fn length(&self, link: usize) -> S {
        self.cross(link, link)
    }

    /// True when `a` precedes `b` in the (length, index) order.
    pub fn shorter(&self, a: usize, b: usize) -> bool {
        let (la, lb) = (self.length(a), self.length(b));
        la < lb || (la == lb && a < b)
    }

    pub(crate) fn require_positive_lengths(&self) -> Result<()> {
        for l in 0..self.link_count() {
            if self.length(l) <= S::zero() {
                return Err(Error::InvalidGeometry(format!(
                    "link {} has zero length",
                    LinkId(l)
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_give_euclidean_distances() {
        let g = GeometricInstance::from_positions(vec![
            (NodeId(0), 0.0, 0.0),
            (NodeId(1), 3.0, 4.0),
        ])
        .unwrap();
        assert_eq!(g.distance(NodeId(0), NodeId(1)).unwrap(), 5.0);
        assert!(g.warnings().is_empty());
    }

    #[test]
    fn table_rejects_asymmetry_and_negative() {
        let nodes = vec![NodeId(0), NodeId(1)];
        assert!(GeometricInstance::from_table(nodes.clone(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(GeometricInstance::from_table(nodes, vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
    }

    #[test]
    fn table_warns_on_triangle_and_zero() {
        let nodes = vec![NodeId(0), NodeId(1), NodeId(2)];
        let g = GeometricInstance::from_table(
            nodes,
            vec![
                vec![0.0, 10.0, 1.0],
                vec![10.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert!(matches!(g.warnings()[..], [GeometryWarning::Triangle { .. }]));

        let g = GeometricInstance::from_table(
            vec![NodeId(5), NodeId(7)],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(g.warnings(), vec![GeometryWarning::ZeroDistance(NodeId(5), NodeId(7))]);
    }

    #[test]
    fn table_rows_follow_node_order() {
        let g = GeometricInstance::from_table(
            vec![NodeId(9), NodeId(1), NodeId(4)],
            vec![
                vec![0.0, 2.0, 3.0],
                vec![2.0, 0.0, 5.0],
                vec![3.0, 5.0, 0.0],
            ],
        )
        .unwrap();
        assert_eq!(g.distance(NodeId(9), NodeId(4)).unwrap(), 3.0);
        assert_eq!(g.distance(NodeId(1), NodeId(4)).unwrap(), 5.0);
    }
}
