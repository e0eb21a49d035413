//! Enumeration of the graph basis in a fixed bidegree: isomorphism classes
//! of loop-free graphs with all valencies at least 3 that survive the
//! orientation sign (no orientation-reversing automorphism).

use std::collections::BTreeMap;

use super::{canonicalize, CanonicalClass, CanonicalGraph, ClassKey, OrientedGraph};

/// All nonzero classes with the given numbers of vertices and edges, in
/// class key order. Disconnected graphs are included.
pub fn enumerate_graphs(vertices: usize, edges: usize) -> Vec<CanonicalGraph> {
    let mut classes: BTreeMap<ClassKey, CanonicalGraph> = BTreeMap::new();
    if vertices == 0 || 2 * edges < 3 * vertices {
        return Vec::new();
    }
    let half_edges = 2 * edges;
    let mut stack = Vec::new();
    let mut lambdas = Vec::new();
    partitions(half_edges, vertices, half_edges, &mut stack, &mut lambdas);
    for lambda in lambdas {
        // Vertex blocks are consecutive label ranges; every graph with this
        // valency multiset is isomorphic to one built on these blocks.
        let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(vertices);
        let mut block_of = vec![0usize; half_edges];
        let mut next = 0;
        for (b, &size) in lambda.iter().enumerate() {
            let block: Vec<usize> = (next..next + size).collect();
            for &h in &block {
                block_of[h] = b;
            }
            next += size;
            blocks.push(block);
        }
        let mut matched = vec![false; half_edges];
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges);
        matchings(&block_of, &mut matched, &mut pairs, &mut |pairs| {
            let g = OrientedGraph::new(half_edges, blocks.clone(), pairs.to_vec())
                .expect("matching yields a valid graph");
            if let (CanonicalClass::Graph(cg), _) = canonicalize(&g) {
                classes.entry(cg.key().clone()).or_insert(cg);
            }
        });
    }
    classes.into_values().collect()
}

/// Weakly decreasing partitions of `total` into `parts` parts, all >= 3.
fn partitions(
    total: usize,
    parts: usize,
    max: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if parts == 0 {
        if total == 0 {
            out.push(stack.clone());
        }
        return;
    }
    if total < 3 * parts {
        return;
    }
    let hi = max.min(total);
    for x in (3..=hi).rev() {
        if x * parts < total {
            break;
        }
        stack.push(x);
        partitions(total - x, parts - 1, x, stack, out);
        stack.pop();
    }
}

/// Loop-free perfect matchings of the half-edges, reported as sorted pair
/// lists. Pairing always extends the smallest unmatched half-edge, so each
/// matching is produced once.
fn matchings(
    block_of: &[usize],
    matched: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    sink: &mut impl FnMut(&[(usize, usize)]),
) {
    let a = match matched.iter().position(|&m| !m) {
        Some(a) => a,
        None => {
            sink(pairs);
            return;
        }
    };
    matched[a] = true;
    for b in (a + 1)..block_of.len() {
        if matched[b] || block_of[b] == block_of[a] {
            continue;
        }
        matched[b] = true;
        pairs.push((a, b));
        matchings(block_of, matched, pairs, sink);
        pairs.pop();
        matched[b] = false;
    }
    matched[a] = false;
}
