//! The graph chain complex: formal rational combinations of nonzero classes,
//! the edge-contraction differential of bidegree (-1, -1), its matrices, and
//! homology dimensions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{Rational, SparseMatrix};
use crate::graph::{
    canonicalize, enumerate_graphs, CanonicalClass, CanonicalGraph, ClassKey, OrientedGraph,
};
use num_traits::Zero;

/// Formal rational combination of canonical graph classes. Zero coefficients
/// are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphChain {
    terms: BTreeMap<ClassKey, (CanonicalGraph, Rational)>,
}

impl GraphChain {
    pub fn zero() -> GraphChain {
        GraphChain::default()
    }

    /// The class of an oriented graph, with its canonical sign; zero classes
    /// give the zero chain.
    pub fn from_graph(g: &OrientedGraph) -> GraphChain {
        let mut chain = GraphChain::zero();
        if let (CanonicalClass::Graph(cg), sign) = canonicalize(g) {
            chain.add_term(cg, Rational::from_integer(sign.into()));
        }
        chain
    }

    pub fn add_term(&mut self, class: CanonicalGraph, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(class.key().clone())
            .or_insert_with(|| (class, Rational::zero()));
        entry.1 += coeff;
        if entry.1.is_zero() {
            let key = entry.0.key().clone();
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CanonicalGraph, &Rational)> {
        self.terms.values().map(|(g, c)| (g, c))
    }

    pub fn coefficient(&self, key: &ClassKey) -> Rational {
        self.terms
            .get(key)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn scaled(&self, factor: &Rational) -> GraphChain {
        if factor.is_zero() {
            return GraphChain::zero();
        }
        GraphChain {
            terms: self
                .terms
                .iter()
                .map(|(k, (g, c))| (k.clone(), (g.clone(), c * factor)))
                .collect(),
        }
    }

    pub fn add(&self, other: &GraphChain) -> GraphChain {
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &GraphChain) -> GraphChain {
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g.clone(), -c.clone());
        }
        out
    }

    /// Edge-contraction differential. Loop-carrying contractions land in the
    /// zero class, and loop edges themselves never occur here because no
    /// nonzero class carries one.
    pub fn boundary(&self) -> GraphChain {
        let mut out = GraphChain::zero();
        for (cg, coeff) in self.terms() {
            for (signed, contracted) in signed_contractions(cg.graph()) {
                out.add_term(contracted, coeff * Rational::from_integer(signed.into()));
            }
        }
        out
    }
}

/// All nonzero canonicalized single-edge contractions of a graph, with the
/// product of contraction and canonicalization signs.
fn signed_contractions(g: &OrientedGraph) -> Vec<(i8, CanonicalGraph)> {
    let mut out = Vec::new();
    for e in 0..g.edge_count() {
        if g.is_loop(e) {
            continue;
        }
        let (contracted, s1) = g.contract_edge(e).expect("non-loop edge contracts");
        if let (CanonicalClass::Graph(cg), s2) = canonicalize(&contracted) {
            out.push((s1 * s2, cg));
        }
    }
    out
}

/// Matrix of the differential out of bidegree (i, j): columns indexed by
/// enumerate_graphs(i, j), rows by enumerate_graphs(i-1, j-1), both in class
/// key order.
pub fn boundary_matrix(vertices: usize, edges: usize) -> SparseMatrix {
    let source = enumerate_graphs(vertices, edges);
    let target = if vertices == 0 || edges == 0 {
        Vec::new()
    } else {
        enumerate_graphs(vertices - 1, edges - 1)
    };
    boundary_matrix_for(&source, &target)
}

/// Same matrix over explicitly given bases; used to check enumeration-order
/// independence.
pub fn boundary_matrix_for(source: &[CanonicalGraph], target: &[CanonicalGraph]) -> SparseMatrix {
    let row_of: BTreeMap<&ClassKey, usize> = target
        .iter()
        .enumerate()
        .map(|(r, cg)| (cg.key(), r))
        .collect();
    let columns: Vec<Vec<(usize, Rational)>> = source
        .par_iter()
        .map(|cg| {
            let mut col: BTreeMap<usize, Rational> = BTreeMap::new();
            for (sign, contracted) in signed_contractions(cg.graph()) {
                let r = *row_of
                    .get(contracted.key())
                    .expect("contraction stays inside the enumerated basis");
                let entry = col.entry(r).or_insert_with(Rational::zero);
                *entry += Rational::from_integer(sign.into());
            }
            col.retain(|_, v| !v.is_zero());
            col.into_iter().collect()
        })
        .collect();
    SparseMatrix::from_columns(target.len(), &columns)
}

/// Homology dimensions at one bidegree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub i: usize,
    pub j: usize,
    pub dim: usize,
    pub rank_d: usize,
    pub betti: usize,
}

/// dim ker of the outgoing differential minus rank of the incoming one.
pub fn graph_betti(vertices: usize, edges: usize) -> HomologyReport {
    let dim = enumerate_graphs(vertices, edges).len();
    let rank_out = boundary_matrix(vertices, edges).rank();
    let rank_in = boundary_matrix(vertices + 1, edges + 1).rank();
    HomologyReport {
        i: vertices,
        j: edges,
        dim,
        rank_d: rank_out,
        betti: dim - rank_out - rank_in,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational;

    fn basis(i: usize, j: usize) -> Vec<CanonicalGraph> {
        enumerate_graphs(i, j)
    }

    #[test]
    fn boundary_of_theta_vanishes() {
        let theta = basis(2, 3).remove(0);
        let mut chain = GraphChain::zero();
        chain.add_term(theta, rational(1, 1));
        assert!(chain.boundary().is_zero());
    }

    #[test]
    fn boundary_of_zero_is_zero() {
        assert!(GraphChain::zero().boundary().is_zero());
    }

    #[test]
    fn boundary_squares_to_zero_on_chains() {
        for (i, j) in [(3, 5), (4, 6), (3, 6)] {
            for cg in basis(i, j) {
                let mut chain = GraphChain::zero();
                chain.add_term(cg, rational(1, 1));
                assert!(chain.boundary().boundary().is_zero(), "({i}, {j})");
            }
        }
    }

    #[test]
    fn matrix_product_of_consecutive_boundaries_vanishes() {
        for (i, j) in [(2, 3), (3, 4), (3, 5), (4, 6), (4, 5)] {
            if i < 1 || j < 1 {
                continue;
            }
            let inner = boundary_matrix(i - 1, j - 1);
            let outer = boundary_matrix(i, j);
            let product = inner.matmul(&outer).unwrap();
            assert_eq!(product.entries().count(), 0, "({i}, {j})");
        }
    }

    #[test]
    fn matrix_columns_match_per_graph_boundaries() {
        let (i, j) = (4, 6);
        let source = basis(i, j);
        let target = basis(i - 1, j - 1);
        let matrix = boundary_matrix(i, j);
        for (c, cg) in source.iter().enumerate() {
            let mut chain = GraphChain::zero();
            chain.add_term(cg.clone(), rational(1, 1));
            let image = chain.boundary();
            for (r, tg) in target.iter().enumerate() {
                assert_eq!(matrix.get(r, c), image.coefficient(tg.key()), "({r}, {c})");
            }
        }
    }

    #[test]
    fn boundary_is_representative_independent() {
        // Re-represent a class with permuted labels and a double edge flip;
        // the signed boundary must be identical.
        let cg = basis(4, 6).remove(0);
        let g = cg.graph();
        let map: Vec<usize> = (0..g.half_edge_count()).rev().collect();
        let relabeled = g.relabeled(&map);
        let mut edges = relabeled.edges().to_vec();
        edges[0] = (edges[0].1, edges[0].0);
        edges[1] = (edges[1].1, edges[1].0);
        let rerep = OrientedGraph::new(
            relabeled.half_edge_count(),
            relabeled.vertices().to_vec(),
            edges,
        )
        .unwrap();
        let a = GraphChain::from_graph(g);
        let b = GraphChain::from_graph(&rerep);
        assert_eq!(a, b, "double flip preserves orientation");
        assert_eq!(a.boundary(), b.boundary());
    }

    #[test]
    fn betti_ignores_basis_order() {
        let (i, j) = (4, 6);
        let mut source = basis(i, j);
        let target = basis(i - 1, j - 1);
        let rank = boundary_matrix_for(&source, &target).rank();
        source.reverse();
        let mut shuffled_target = target.clone();
        shuffled_target.rotate_left(1);
        assert_eq!(
            boundary_matrix_for(&source, &shuffled_target).rank(),
            rank
        );
    }

    #[test]
    fn empty_bidegrees_report_zero() {
        let report = graph_betti(3, 4);
        assert_eq!(report.dim, 0);
        assert_eq!(report.rank_d, 0);
        assert_eq!(report.betti, 0);
    }

    #[test]
    fn theta_class_survives_to_homology() {
        // dim is 1, nothing maps out (target empty by loops), and the
        // incoming differential from (3, 4) is empty.
        let report = graph_betti(2, 3);
        assert_eq!(
            report,
            HomologyReport {
                i: 2,
                j: 3,
                dim: 1,
                rank_d: 0,
                betti: 1
            }
        );
    }
}
