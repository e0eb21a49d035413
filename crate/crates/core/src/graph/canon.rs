//! Canonical labeling of half-edge graphs and isomorphism classes of
//! oriented graphs, including detection of classes killed by an
//! orientation-reversing automorphism.
//!
//! Labeling works on the vertex-level multigraph: iterative partition
//! refinement on (valency, adjacency-to-cell) invariants, with
//! individualization backtracking. The search enumerates every discrete
//! refinement-compatible labeling, so the minimal-key leaves give both the
//! canonical form and the full vertex automorphism group.

use super::{perm_sign, OrientedGraph};

/// Total encoding of a canonical class: valencies in canonical vertex order
/// plus the canonically labeled directed edge list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub valencies: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// Canonically labeled, canonically oriented representative of a nonzero
/// isomorphism class.
#[derive(Clone, Debug)]
pub struct CanonicalGraph {
    graph: OrientedGraph,
    key: ClassKey,
}

impl CanonicalGraph {
    pub fn graph(&self) -> &OrientedGraph {
        &self.graph
    }

    pub fn key(&self) -> &ClassKey {
        &self.key
    }
}

impl PartialEq for CanonicalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for CanonicalGraph {}
impl std::hash::Hash for CanonicalGraph {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}
impl PartialOrd for CanonicalGraph {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for CanonicalGraph {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

/// Isomorphism class of an oriented graph: either a canonical representative
/// or the zero class (graphs with an orientation-reversing automorphism,
/// in particular every graph with a loop).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CanonicalClass {
    Zero,
    Graph(CanonicalGraph),
}

impl CanonicalClass {
    pub fn is_zero(&self) -> bool {
        matches!(self, CanonicalClass::Zero)
    }

    pub fn graph(&self) -> Option<&CanonicalGraph> {
        match self {
            CanonicalClass::Zero => None,
            CanonicalClass::Graph(g) => Some(g),
        }
    }
}

/// Vertex-level multigraph: symmetric adjacency multiplicities.
struct MultiGraph {
    adj: Vec<Vec<u32>>,
    val: Vec<u32>,
}

impl MultiGraph {
    fn of(g: &OrientedGraph) -> Option<MultiGraph> {
        let v = g.vertex_count();
        let mut adj = vec![vec![0u32; v]; v];
        for &(a, b) in g.edges() {
            let (u, w) = (g.vertex_of(a), g.vertex_of(b));
            if u == w {
                return None; // loop
            }
            adj[u][w] += 1;
            adj[w][u] += 1;
        }
        let val = g.vertices().iter().map(|b| b.len() as u32).collect();
        Some(MultiGraph { adj, val })
    }

    fn refine(&self, mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        loop {
            let mut changed = false;
            let mut next: Vec<Vec<usize>> = Vec::new();
            for cell in &cells {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut sigs: Vec<(Vec<u32>, usize)> = cell
                    .iter()
                    .map(|&u| {
                        let sig = cells
                            .iter()
                            .map(|c| c.iter().map(|&w| self.adj[u][w]).sum::<u32>())
                            .collect();
                        (sig, u)
                    })
                    .collect();
                sigs.sort();
                let mut start = 0;
                for i in 1..=sigs.len() {
                    if i == sigs.len() || sigs[i].0 != sigs[start].0 {
                        next.push(sigs[start..i].iter().map(|(_, u)| *u).collect());
                        if i - start != cell.len() {
                            changed = true;
                        }
                        start = i;
                    }
                }
            }
            cells = next;
            if !changed {
                return cells;
            }
        }
    }

    /// Key of a discrete labeling: upper-triangular adjacency in the new
    /// order (valencies are constant across leaves by construction).
    fn key_of(&self, position: &[usize]) -> Vec<u32> {
        let v = position.len();
        let mut inv = vec![0usize; v];
        for (u, &p) in position.iter().enumerate() {
            inv[p] = u;
        }
        let mut key = Vec::with_capacity(v * (v - 1) / 2);
        for a in 0..v {
            for b in (a + 1)..v {
                key.push(self.adj[inv[a]][inv[b]]);
            }
        }
        key
    }

    fn search(&self, cells: Vec<Vec<usize>>, best: &mut Best) {
        let cells = self.refine(cells);
        if let Some(k) = cells.iter().position(|c| c.len() > 1) {
            for &u in &cells[k] {
                let mut next = Vec::with_capacity(cells.len() + 1);
                next.extend_from_slice(&cells[..k]);
                next.push(vec![u]);
                next.push(cells[k].iter().copied().filter(|&w| w != u).collect());
                next.extend_from_slice(&cells[k + 1..]);
                self.search(next, best);
            }
            return;
        }
        let mut position = vec![0usize; cells.len()];
        for (p, cell) in cells.iter().enumerate() {
            position[cell[0]] = p;
        }
        let key = self.key_of(&position);
        match &best.key {
            Some(cur) if *cur < key => {}
            Some(cur) if *cur == key => best.labelings.push(position),
            _ => {
                best.key = Some(key);
                best.labelings = vec![position];
            }
        }
    }

    /// All minimal-key labelings (vertex -> canonical position). The first
    /// is the canonical labeling; composing any with the inverse of the
    /// first gives the full vertex automorphism group.
    fn canonical_labelings(&self) -> Vec<Vec<usize>> {
        let v = self.val.len();
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by_key(|&u| self.val[u]);
        let mut cells: Vec<Vec<usize>> = Vec::new();
        for u in order {
            match cells.last_mut() {
                Some(c) if self.val[c[0]] == self.val[u] => c.push(u),
                _ => cells.push(vec![u]),
            }
        }
        let mut best = Best {
            key: None,
            labelings: Vec::new(),
        };
        if v == 0 {
            return vec![Vec::new()];
        }
        self.search(cells, &mut best);
        best.labelings
    }
}

struct Best {
    key: Option<Vec<u32>>,
    labelings: Vec<Vec<usize>>,
}

/// Computes the canonical class of an oriented graph and the sign relating
/// the given orientation to the canonical one. The sign is 0 exactly when
/// some automorphism reverses orientation (then the class is Zero); loops
/// always produce such an automorphism.
pub fn canonicalize(g: &OrientedGraph) -> (CanonicalClass, i8) {
    debug_assert!(g.validate().is_ok());
    let Some(mg) = MultiGraph::of(g) else {
        return (CanonicalClass::Zero, 0);
    };
    let labelings = mg.canonical_labelings();
    let l0 = &labelings[0];
    let v = l0.len();

    // Any automorphism with negative lift sign kills the class. The lift of
    // a vertex automorphism is unique in sign: inside a parallel bundle the
    // matching of edges is free but direction flips are forced by which
    // endpoint maps to which, so the flip count parity is fixed.
    let mut inv0 = vec![0usize; v];
    for (u, &p) in l0.iter().enumerate() {
        inv0[p] = u;
    }
    for l in &labelings[1..] {
        let b: Vec<usize> = inv0.iter().map(|&u| l[u]).collect();
        let mut sign = perm_sign(&b);
        for a in 0..v {
            for c in (a + 1)..v {
                if mg.adj[inv0[a]][inv0[c]] % 2 == 1 && b[a] > b[c] {
                    sign = -sign;
                }
            }
        }
        if sign < 0 {
            return (CanonicalClass::Zero, 0);
        }
    }

    // Canonical graph: vertex p occupies the half-edge range starting at
    // offsets[p]; bundles in ascending (u, v) order, directed low -> high.
    let valencies: Vec<usize> = (0..v).map(|p| mg.val[inv0[p]] as usize).collect();
    let mut offsets = vec![0usize; v + 1];
    for p in 0..v {
        offsets[p + 1] = offsets[p] + valencies[p];
    }
    let mut next_slot: Vec<usize> = offsets[..v].to_vec();
    let mut canon_edges: Vec<(usize, usize)> = Vec::with_capacity(g.edge_count());
    let mut bundle_start: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    for a in 0..v {
        for c in (a + 1)..v {
            let mult = mg.adj[inv0[a]][inv0[c]];
            if mult == 0 {
                continue;
            }
            bundle_start.insert((a, c), canon_edges.len());
            for _ in 0..mult {
                let head = next_slot[a];
                next_slot[a] += 1;
                let tail = next_slot[c];
                next_slot[c] += 1;
                canon_edges.push((head, tail));
            }
        }
    }
    let vertices: Vec<Vec<usize>> = (0..v)
        .map(|p| (offsets[p]..offsets[p + 1]).collect())
        .collect();
    let canonical = OrientedGraph::new(g.half_edge_count(), vertices, canon_edges.clone())
        .expect("canonical graph is valid");

    // Sign of the input orientation against the canonical one: vertex
    // reordering sign times a flip for every input edge whose head lands on
    // the high side of its canonical bundle.
    let mut sign = perm_sign(l0);
    let mut bundle_used: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    for &(h, t) in g.edges() {
        let pu = l0[g.vertex_of(h)];
        let pv = l0[g.vertex_of(t)];
        let bundle = (pu.min(pv), pu.max(pv));
        let slot = bundle_used.entry(bundle).or_insert(0);
        debug_assert!(canon_edges[bundle_start[&bundle] + *slot].0 >= offsets[bundle.0]);
        *slot += 1;
        if pu > pv {
            sign = -sign;
        }
    }

    let key = ClassKey {
        valencies,
        edges: canonical.edges().to_vec(),
    };
    (
        CanonicalClass::Graph(CanonicalGraph {
            graph: canonical,
            key,
        }),
        sign,
    )
}
