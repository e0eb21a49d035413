//! Finite graphs in the half-edge formalism, with orientations.
//!
//! A graph on half-edges 0..H-1 is a pair of partitions: vertices (blocks of
//! size >= 3) and edges (blocks of size 2). An orientation is a linear order
//! on the vertices plus a direction for each edge, taken modulo changes of
//! even total sign; every graph has exactly two orientations.

mod canon;
mod enumerate;

pub use canon::{canonicalize, CanonicalClass, CanonicalGraph, ClassKey};
pub use enumerate::enumerate_graphs;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("half-edge {0} does not occur exactly once in the vertex partition")]
    BadVertexPartition(usize),
    #[error("half-edge {0} does not occur exactly once in the edge partition")]
    BadEdgePartition(usize),
    #[error("vertex {index} has valency {size}, need at least 3")]
    SmallVertex { index: usize, size: usize },
    #[error("edge {0} is a loop; loops cannot be contracted")]
    LoopEdge(usize),
    #[error("edge index {0} out of range")]
    NoSuchEdge(usize),
    #[error("orientation comparison requires identical underlying graphs")]
    DifferentGraphs,
    #[error("malformed graph JSON: {0}")]
    BadJson(String),
}

/// Sign of a permutation given as the image sequence of 0..len-1.
pub(crate) fn perm_sign(perm: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Oriented graph. `vertices` lists the blocks in orientation order (each
/// block sorted ascending); `edges` carry their direction as (head, tail)
/// and are kept sorted by head half-edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrientedGraph {
    half_edges: usize,
    vertices: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

/// Unoriented view: both partitions in a normalized storage order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    pub half_edges: usize,
    pub vertices: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

impl OrientedGraph {
    /// Builds and validates. Blocks are sorted internally; the given vertex
    /// list order and edge directions are the orientation data.
    pub fn new(
        half_edges: usize,
        vertices: Vec<Vec<usize>>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut vertices: Vec<Vec<usize>> = vertices;
        for b in vertices.iter_mut() {
            b.sort_unstable();
        }
        let mut edges = edges;
        edges.sort_unstable();
        let g = OrientedGraph {
            half_edges,
            vertices,
            edges,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let h = self.half_edges;
        let mut seen = vec![0u8; h];
        for (i, b) in self.vertices.iter().enumerate() {
            if b.len() < 3 {
                return Err(GraphError::SmallVertex {
                    index: i,
                    size: b.len(),
                });
            }
            for &x in b {
                if x >= h {
                    return Err(GraphError::BadVertexPartition(x));
                }
                seen[x] += 1;
            }
        }
        if let Some(x) = seen.iter().position(|&c| c != 1) {
            return Err(GraphError::BadVertexPartition(x));
        }
        let mut seen = vec![0u8; h];
        for &(a, b) in &self.edges {
            if a >= h {
                return Err(GraphError::BadEdgePartition(a));
            }
            if b >= h || a == b {
                return Err(GraphError::BadEdgePartition(b));
            }
            seen[a] += 1;
            seen[b] += 1;
        }
        if let Some(x) = seen.iter().position(|&c| c != 1) {
            return Err(GraphError::BadEdgePartition(x));
        }
        Ok(())
    }

    pub fn half_edge_count(&self) -> usize {
        self.half_edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex blocks in orientation order.
    pub fn vertices(&self) -> &[Vec<usize>] {
        &self.vertices
    }

    /// Directed edges (head, tail), sorted by head.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn valencies(&self) -> Vec<usize> {
        self.vertices.iter().map(|b| b.len()).collect()
    }

    /// Position (in orientation order) of the vertex containing half-edge h.
    pub fn vertex_of(&self, h: usize) -> usize {
        self.vertices
            .iter()
            .position(|b| b.binary_search(&h).is_ok())
            .expect("half-edge belongs to a vertex")
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let (a, b) = self.edges[e];
        self.vertex_of(a) == self.vertex_of(b)
    }

    pub fn has_loop(&self) -> bool {
        (0..self.edges.len()).any(|e| self.is_loop(e))
    }

    /// Normalized unoriented data: blocks sorted by minimum half-edge, edges
    /// as ascending pairs in sorted order.
    pub fn underlying(&self) -> Graph {
        let mut vertices = self.vertices.clone();
        vertices.sort_by_key(|b| b[0]);
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        Graph {
            half_edges: self.half_edges,
            vertices,
            edges,
        }
    }

    /// Relative sign of two orientations of the same underlying graph:
    /// the sign of the vertex reordering times (-1)^(number of edges whose
    /// directions disagree).
    pub fn orientation_sign(&self, other: &OrientedGraph) -> Result<i8, GraphError> {
        if self.underlying() != other.underlying() {
            return Err(GraphError::DifferentGraphs);
        }
        let perm: Vec<usize> = self
            .vertices
            .iter()
            .map(|b| {
                other
                    .vertices
                    .iter()
                    .position(|c| c == b)
                    .expect("same blocks")
            })
            .collect();
        let mut sign = perm_sign(&perm);
        for &(a, b) in &self.edges {
            // other.edges is sorted by head, so a flipped edge appears as (b, a).
            if other.edges.binary_search(&(a, b)).is_err() {
                debug_assert!(other.edges.binary_search(&(b, a)).is_ok());
                sign = -sign;
            }
        }
        Ok(sign)
    }

    /// Contracts non-loop edge e. The orientation is first renormalized so
    /// that the head vertex comes first and the tail vertex second; the sign
    /// of that renormalizing vertex permutation is returned. The merged
    /// vertex is listed first and the remaining half-edges are relabeled
    /// compactly, preserving order.
    pub fn contract_edge(&self, e: usize) -> Result<(OrientedGraph, i8), GraphError> {
        let &(h, t) = self.edges.get(e).ok_or(GraphError::NoSuchEdge(e))?;
        let vi = self.vertex_of(h);
        let vj = self.vertex_of(t);
        if vi == vj {
            return Err(GraphError::LoopEdge(e));
        }
        let mut order = vec![vi, vj];
        order.extend((0..self.vertices.len()).filter(|&k| k != vi && k != vj));
        let sign = perm_sign(&order);

        let mut relabel = vec![usize::MAX; self.half_edges];
        let mut next = 0;
        for x in 0..self.half_edges {
            if x != h && x != t {
                relabel[x] = next;
                next += 1;
            }
        }
        let mut merged: Vec<usize> = self.vertices[vi]
            .iter()
            .chain(self.vertices[vj].iter())
            .filter(|&&x| x != h && x != t)
            .map(|&x| relabel[x])
            .collect();
        merged.sort_unstable();
        let mut vertices = vec![merged];
        for &k in &order[2..] {
            vertices.push(self.vertices[k].iter().map(|&x| relabel[x]).collect());
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(idx, _)| idx != e)
            .map(|(_, &(a, b))| (relabel[a], relabel[b]))
            .collect();
        let contracted = OrientedGraph::new(self.half_edges - 2, vertices, edges)?;
        Ok((contracted, sign))
    }

    /// Applies a half-edge relabeling (bijection old -> new) to both
    /// partitions, keeping vertex list order and edge directions.
    pub fn relabeled(&self, map: &[usize]) -> OrientedGraph {
        let vertices = self
            .vertices
            .iter()
            .map(|b| {
                let mut nb: Vec<usize> = b.iter().map(|&x| map[x]).collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        let mut edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(a, b)| (map[a], map[b])).collect();
        edges.sort_unstable();
        OrientedGraph {
            half_edges: self.half_edges,
            vertices,
            edges,
        }
    }

    /// {"H": n, "vertices": [[...], ...], "edges": [[head, tail], ...],
    /// "vertex_order": [...]} with vertices listed in orientation order and
    /// edges sorted by head.
    pub fn to_json(&self) -> Value {
        json!({
            "H": self.half_edges,
            "vertices": self.vertices,
            "edges": self.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "vertex_order": (0..self.vertices.len()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::BadJson(m.to_string());
        let h = v["H"].as_u64().ok_or_else(|| bad("missing H"))? as usize;
        let verts = v["vertices"].as_array().ok_or_else(|| bad("missing vertices"))?;
        let order: Vec<usize> = match v["vertex_order"].as_array() {
            Some(a) => a
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| bad("bad vertex_order")))
                .collect::<Result<_, _>>()?,
            None => (0..verts.len()).collect(),
        };
        if order.len() != verts.len() {
            return Err(bad("vertex_order length mismatch"));
        }
        let blocks: Vec<Vec<usize>> = verts
            .iter()
            .map(|b| {
                b.as_array()
                    .ok_or_else(|| bad("vertex block is not a list"))?
                    .iter()
                    .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| bad("bad half-edge")))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let mut vertices = vec![Vec::new(); blocks.len()];
        for (pos, &which) in order.iter().enumerate() {
            vertices[pos] = blocks
                .get(which)
                .ok_or_else(|| bad("vertex_order index out of range"))?
                .clone();
        }
        let edges = v["edges"]
            .as_array()
            .ok_or_else(|| bad("missing edges"))?
            .iter()
            .map(|e| {
                let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("bad edge"))?;
                let a = pair[0].as_u64().ok_or_else(|| bad("bad edge head"))? as usize;
                let b = pair[1].as_u64().ok_or_else(|| bad("bad edge tail"))? as usize;
                Ok((a, b))
            })
            .collect::<Result<_, _>>()?;
        OrientedGraph::new(h, vertices, edges)
    }
}
