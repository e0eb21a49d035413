//! Chord diagrams on the ground set {1..2k}: enumeration, the pairing
//! functional and its dual coinvariant vectors, and the graph built from a
//! diagram by grouping consecutive chord endpoints into vertices.

use num_traits::Zero;
use thiserror::Error;

use crate::exact::Rational;
use crate::graph::{GraphError, OrientedGraph};
use crate::poisson::{permute_tensor, symplectic_form, BasisVector, SuperDim, TensorWord};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ChordError {
    #[error("pairs do not partition 1..=2k")]
    BadGroundSet,
    #[error("tensor length {got} does not match diagram size {want}")]
    LengthMismatch { want: usize, got: usize },
    #[error("diagram size {k} exceeds the stable bound n = {n}")]
    OutsideStableRange { k: usize, n: u16 },
    #[error("block sizes sum to {got}, expected the ground set size {want}")]
    BlockSizeMismatch { want: usize, got: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Perfect matching of {1..2k} into unordered pairs, stored with each pair
/// as (low, high) sorted by the low element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChordDiagram {
    pairs: Vec<(usize, usize)>,
}

impl ChordDiagram {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<ChordDiagram, ChordError> {
        let mut normalized: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        normalized.sort_unstable();
        let mut seen = vec![false; 2 * normalized.len()];
        for &(a, b) in &normalized {
            if a == b || a < 1 || b > seen.len() {
                return Err(ChordError::BadGroundSet);
            }
            for e in [a, b] {
                if seen[e - 1] {
                    return Err(ChordError::BadGroundSet);
                }
                seen[e - 1] = true;
            }
        }
        Ok(ChordDiagram { pairs: normalized })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The canonical orientation: every chord directed low to high, listed
    /// by lower endpoint.
    pub fn hat(&self) -> OrientedChordDiagram {
        OrientedChordDiagram {
            pairs: self.pairs.clone(),
        }
    }
}

/// Chord diagram with an order on each pair (a direction per chord).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedChordDiagram {
    pairs: Vec<(usize, usize)>,
}

impl OrientedChordDiagram {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<OrientedChordDiagram, ChordError> {
        ChordDiagram::new(pairs.clone())?;
        Ok(OrientedChordDiagram { pairs })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn underlying(&self) -> ChordDiagram {
        ChordDiagram::new(self.pairs.clone()).expect("already validated")
    }

    /// A permutation aligning each chord with a consecutive slot pair: the
    /// r-th stored chord (i_r, j_r) goes to slots (2r-1, 2r). Downstream
    /// quantities do not depend on the pair order chosen here.
    pub fn sigma(&self) -> Vec<usize> {
        let mut sigma = vec![0usize; 2 * self.pairs.len()];
        for (r, &(i, j)) in self.pairs.iter().enumerate() {
            sigma[i - 1] = 2 * r;
            sigma[j - 1] = 2 * r + 1;
        }
        sigma
    }

    /// Ground-set relabeling: element e becomes relabel[e-1].
    pub fn relabeled(&self, relabel: &[usize]) -> Result<OrientedChordDiagram, ChordError> {
        OrientedChordDiagram::new(
            self.pairs
                .iter()
                .map(|&(a, b)| (relabel[a - 1], relabel[b - 1]))
                .collect(),
        )
    }
}

/// All (2k-1)!! chord diagrams, ordered by always pairing the smallest
/// unused element first.
pub fn enumerate_chords(k: usize) -> Vec<ChordDiagram> {
    let mut out = Vec::new();
    let mut used = vec![false; 2 * k];
    let mut pairs = Vec::with_capacity(k);
    rec_chords(&mut used, &mut pairs, &mut out);
    out
}

fn rec_chords(
    used: &mut Vec<bool>,
    pairs: &mut Vec<(usize, usize)>,
    out: &mut Vec<ChordDiagram>,
) {
    let a = match used.iter().position(|&u| !u) {
        Some(a) => a,
        None => {
            out.push(ChordDiagram {
                pairs: pairs.clone(),
            });
            return;
        }
    };
    used[a] = true;
    for b in (a + 1)..used.len() {
        if used[b] {
            continue;
        }
        used[b] = true;
        pairs.push((a + 1, b + 1));
        rec_chords(used, pairs, out);
        pairs.pop();
        used[b] = false;
    }
    used[a] = false;
}

/// Full contraction of consecutive slot pairs with the symplectic form.
pub fn kappa(t: &TensorWord) -> Result<Rational, ChordError> {
    if t.len() % 2 != 0 {
        return Err(ChordError::LengthMismatch {
            want: t.len() + 1,
            got: t.len(),
        });
    }
    let mut value = t.coeff.clone();
    for r in 0..t.len() / 2 {
        if value.is_zero() {
            return Ok(value);
        }
        let pairing = symplectic_form(t.factors[2 * r], t.factors[2 * r + 1]);
        value *= Rational::from_integer(pairing.into());
    }
    Ok(value)
}

/// The invariant functional of a diagram: align chords with slot pairs,
/// then contract.
pub fn beta(c: &OrientedChordDiagram, t: &TensorWord) -> Result<Rational, ChordError> {
    if t.len() != 2 * c.k() {
        return Err(ChordError::LengthMismatch {
            want: 2 * c.k(),
            got: t.len(),
        });
    }
    kappa(&permute_tensor(&c.sigma(), t))
}

/// The coinvariant vector dual to beta in the stable range: the preimage of
/// p1 (x) q1 (x) ... (x) p_k (x) q_k under the chord-aligning permutation.
pub fn u_coinvariant(c: &OrientedChordDiagram, d: SuperDim) -> Result<TensorWord, ChordError> {
    let k = c.k();
    if k > d.n as usize {
        return Err(ChordError::OutsideStableRange { k, n: d.n });
    }
    let mut inverse = vec![0usize; 2 * k];
    for (slot, &dst) in c.sigma().iter().enumerate() {
        inverse[dst] = slot;
    }
    let mut template = Vec::with_capacity(2 * k);
    for i in 1..=k as u16 {
        template.push(BasisVector::p(i));
        template.push(BasisVector::q(i));
    }
    Ok(permute_tensor(&inverse, &TensorWord::new(template)))
}

/// Graph whose vertices are consecutive blocks of the ground set and whose
/// directed edges are the chords.
pub fn gamma_graph(
    block_sizes: &[usize],
    c: &OrientedChordDiagram,
) -> Result<OrientedGraph, ChordError> {
    gamma_graph_impl(block_sizes, c, false)
}

/// Variant with the direction of the first chord deliberately reversed; used
/// by the verification harness as a negative control.
pub fn gamma_graph_defective(
    block_sizes: &[usize],
    c: &OrientedChordDiagram,
) -> Result<OrientedGraph, ChordError> {
    gamma_graph_impl(block_sizes, c, true)
}

fn gamma_graph_impl(
    block_sizes: &[usize],
    c: &OrientedChordDiagram,
    flip_first: bool,
) -> Result<OrientedGraph, ChordError> {
    let total: usize = block_sizes.iter().sum();
    if total != 2 * c.k() {
        return Err(ChordError::BlockSizeMismatch {
            want: 2 * c.k(),
            got: total,
        });
    }
    let mut vertices = Vec::with_capacity(block_sizes.len());
    let mut next = 0usize;
    for &size in block_sizes {
        vertices.push((next..next + size).collect::<Vec<_>>());
        next += size;
    }
    let mut edges: Vec<(usize, usize)> = c.pairs().iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    if flip_first {
        edges[0] = (edges[0].1, edges[0].0);
    }
    Ok(OrientedGraph::new(total, vertices, edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational;
    use crate::graph::{canonicalize, enumerate_graphs};
    use crate::poisson::{act_tensor, osp_basis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(i: u16) -> BasisVector {
        BasisVector::p(i)
    }
    fn q(i: u16) -> BasisVector {
        BasisVector::q(i)
    }
    fn x(i: u16) -> BasisVector {
        BasisVector::x(i)
    }

    fn word(factors: &[BasisVector]) -> TensorWord {
        TensorWord::new(factors.to_vec())
    }

    #[test]
    fn enumeration_counts_are_double_factorials() {
        assert_eq!(enumerate_chords(1).len(), 1);
        assert_eq!(enumerate_chords(2).len(), 3);
        assert_eq!(enumerate_chords(3).len(), 15);
        assert_eq!(enumerate_chords(4).len(), 105);
        assert_eq!(enumerate_chords(1)[0].pairs(), &[(1, 2)]);
    }

    #[test]
    fn diagram_validation() {
        assert!(ChordDiagram::new(vec![(1, 2), (3, 4)]).is_ok());
        assert_eq!(
            ChordDiagram::new(vec![(1, 2), (2, 3)]),
            Err(ChordError::BadGroundSet)
        );
        assert_eq!(
            ChordDiagram::new(vec![(1, 1)]),
            Err(ChordError::BadGroundSet)
        );
        assert_eq!(
            ChordDiagram::new(vec![(1, 5), (2, 3)]),
            Err(ChordError::BadGroundSet)
        );
    }

    #[test]
    fn sigma_reads_off_pair_slots() {
        let c = OrientedChordDiagram::new(vec![(1, 3), (2, 4)]).unwrap();
        // 1 and 3 go to the first slot pair, 2 and 4 to the second.
        assert_eq!(c.sigma(), vec![0, 2, 1, 3]);
        let hat1 = ChordDiagram::new(vec![(1, 2)]).unwrap().hat();
        assert_eq!(hat1.sigma(), vec![0, 1]);
    }

    #[test]
    fn kappa_contracts_consecutive_pairs() {
        assert_eq!(
            kappa(&word(&[p(1), q(1), p(2), q(2)])).unwrap(),
            rational(1, 1)
        );
        assert_eq!(kappa(&word(&[p(1), q(2)])).unwrap(), rational(0, 1));
        assert_eq!(kappa(&word(&[x(1), x(1)])).unwrap(), rational(1, 1));
        assert_eq!(kappa(&word(&[q(1), p(1)])).unwrap(), rational(-1, 1));
        assert!(kappa(&word(&[p(1)])).is_err());
    }

    #[test]
    fn beta_examples() {
        let hat1 = ChordDiagram::new(vec![(1, 2)]).unwrap().hat();
        assert_eq!(beta(&hat1, &word(&[p(1), q(1)])).unwrap(), rational(1, 1));
        let crossing = OrientedChordDiagram::new(vec![(1, 3), (2, 4)]).unwrap();
        assert_eq!(
            beta(&crossing, &word(&[p(1), p(2), q(1), q(2)])).unwrap(),
            rational(1, 1)
        );
        // Reversing one chord negates the value on even words.
        let reversed = OrientedChordDiagram::new(vec![(3, 1), (2, 4)]).unwrap();
        assert_eq!(
            beta(&reversed, &word(&[p(1), p(2), q(1), q(2)])).unwrap(),
            rational(-1, 1)
        );
        assert!(beta(&hat1, &word(&[p(1), q(1), p(2), q(2)])).is_err());
    }

    #[test]
    fn beta_is_independent_of_pair_list_order() {
        let t = word(&[p(1), x(1), q(1), x(2), p(2), q(2)]);
        let a = OrientedChordDiagram::new(vec![(1, 3), (2, 4), (5, 6)]).unwrap();
        let b = OrientedChordDiagram::new(vec![(5, 6), (2, 4), (1, 3)]).unwrap();
        let c = OrientedChordDiagram::new(vec![(2, 4), (1, 3), (5, 6)]).unwrap();
        let va = beta(&a, &t).unwrap();
        assert_eq!(va, beta(&b, &t).unwrap());
        assert_eq!(va, beta(&c, &t).unwrap());
    }

    #[test]
    fn beta_vanishes_on_the_quadratic_action() {
        let d = SuperDim::new(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = d.basis();
        let quadratics = osp_basis(d);
        let diagrams = enumerate_chords(2);
        for _ in 0..200 {
            let t = word(&[
                basis[rng.gen_range(0..basis.len())],
                basis[rng.gen_range(0..basis.len())],
                basis[rng.gen_range(0..basis.len())],
                basis[rng.gen_range(0..basis.len())],
            ]);
            let xi = &quadratics[rng.gen_range(0..quadratics.len())];
            let c = diagrams[rng.gen_range(0..diagrams.len())].hat();
            let mut total = rational(0, 1);
            for image in act_tensor(xi, &t) {
                total += beta(&c, &image).unwrap();
            }
            assert_eq!(total, rational(0, 1), "xi {xi}");
        }
    }

    #[test]
    fn beta_is_equivariant_under_ground_set_relabeling() {
        // Check beta(sigma.c, sigma.t) = beta(c, t) over all of S4 for a
        // word with odd factors.
        let d4: Vec<Vec<usize>> = permutations(4);
        let t = word(&[p(1), x(1), x(2), q(1)]);
        for c in enumerate_chords(2) {
            let c = c.hat();
            let base = beta(&c, &t).unwrap();
            for sigma in &d4 {
                // sigma as ground-set map: element e -> sigma[e-1]+1.
                let relabel: Vec<usize> = sigma.iter().map(|&s| s + 1).collect();
                let moved_c = c.relabeled(&relabel).unwrap();
                let moved_t = permute_tensor(sigma, &t);
                assert_eq!(beta(&moved_c, &moved_t).unwrap(), base);
            }
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..n).collect();
        heap(&mut perm, n, &mut out);
        out
    }

    fn heap(perm: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(perm.clone());
            return;
        }
        for i in 0..k {
            heap(perm, k - 1, out);
            if k % 2 == 0 {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }

    #[test]
    fn u_is_dual_to_beta() {
        let d = SuperDim::new(3, 0);
        for k in 1..=3usize {
            let diagrams = enumerate_chords(k);
            for a in &diagrams {
                let u = u_coinvariant(&a.hat(), d).unwrap();
                for b in &diagrams {
                    let value = beta(&b.hat(), &u).unwrap();
                    let expect = rational((a == b) as i64, 1);
                    assert_eq!(value, expect, "k {k}");
                }
            }
        }
        assert_eq!(
            u_coinvariant(&enumerate_chords(1)[0].hat(), d)
                .unwrap()
                .factors,
            vec![p(1), q(1)]
        );
        assert!(matches!(
            u_coinvariant(&enumerate_chords(4)[0].hat(), d),
            Err(ChordError::OutsideStableRange { .. })
        ));
    }

    #[test]
    fn gamma_of_the_crossing_diagram_is_theta() {
        let c = OrientedChordDiagram::new(vec![(1, 4), (2, 5), (3, 6)]).unwrap();
        let g = gamma_graph(&[3, 3], &c).unwrap();
        assert!(!g.has_loop());
        let (class, sign) = canonicalize(&g);
        let theta = enumerate_graphs(2, 3).remove(0);
        assert_eq!(class.graph().unwrap(), &theta);
        assert_ne!(sign, 0);
    }

    #[test]
    fn gamma_with_intra_block_chords_has_loops() {
        let c = OrientedChordDiagram::new(vec![(1, 2), (3, 4), (5, 6)]).unwrap();
        let g = gamma_graph(&[3, 3], &c).unwrap();
        assert!(g.has_loop());
        let (class, sign) = canonicalize(&g);
        assert!(class.is_zero());
        assert_eq!(sign, 0);
    }

    #[test]
    fn gamma_rejects_size_mismatch() {
        let c = OrientedChordDiagram::new(vec![(1, 4), (2, 5), (3, 6)]).unwrap();
        assert!(matches!(
            gamma_graph(&[3, 4], &c),
            Err(ChordError::BlockSizeMismatch { .. })
        ));
    }

    #[test]
    fn gamma_identities_on_random_samples() {
        // Flipping a chord negates the class; relabeling inside blocks fixes
        // it; moving whole blocks multiplies by the sign of the block
        // permutation.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let shapes: Vec<Vec<usize>> = vec![vec![3, 3], vec![3, 3, 4], vec![4, 4], vec![3, 5]];
        for _ in 0..500 {
            let blocks = &shapes[rng.gen_range(0..shapes.len())];
            let k = blocks.iter().sum::<usize>() / 2;
            let diagrams = enumerate_chords(k);
            let c = diagrams[rng.gen_range(0..diagrams.len())].hat();
            let g = gamma_graph(blocks, &c).unwrap();
            let (class, sign) = canonicalize(&g);

            // Chord flip.
            let mut flipped_pairs = c.pairs().to_vec();
            let r = rng.gen_range(0..k);
            flipped_pairs[r] = (flipped_pairs[r].1, flipped_pairs[r].0);
            let flipped = OrientedChordDiagram::new(flipped_pairs).unwrap();
            let (fclass, fsign) = canonicalize(&gamma_graph(blocks, &flipped).unwrap());
            assert_eq!(fclass, class);
            assert_eq!(fsign, -sign);

            // Relabeling inside blocks.
            let mut relabel: Vec<usize> = (1..=2 * k).collect();
            let mut start = 0;
            for &size in blocks {
                let inside = &mut relabel[start..start + size];
                for i in (1..inside.len()).rev() {
                    inside.swap(i, rng.gen_range(0..=i));
                }
                start += size;
            }
            let shuffled = c.relabeled(&relabel).unwrap();
            let (sclass, ssign) = canonicalize(&gamma_graph(blocks, &shuffled).unwrap());
            assert_eq!(sclass, class);
            assert_eq!(ssign, sign);

            // Block permutation.
            let mut order: Vec<usize> = (0..blocks.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let permuted_blocks: Vec<usize> = order.iter().map(|&t| blocks[t]).collect();
            let mut offsets = vec![0usize; blocks.len()];
            let mut acc = 0;
            for (pos, &t) in order.iter().enumerate() {
                let _ = pos;
                offsets[t] = acc;
                acc += blocks[t];
            }
            let mut old_offsets = vec![0usize; blocks.len()];
            let mut acc = 0;
            for (t, &size) in blocks.iter().enumerate() {
                old_offsets[t] = acc;
                acc += size;
            }
            let mut relabel = vec![0usize; 2 * k];
            for (t, &size) in blocks.iter().enumerate() {
                for s in 0..size {
                    relabel[old_offsets[t] + s] = offsets[t] + s + 1;
                }
            }
            let moved = c.relabeled(&relabel).unwrap();
            let (mclass, msign) = canonicalize(&gamma_graph(&permuted_blocks, &moved).unwrap());
            assert_eq!(mclass, class);
            let parity = permutation_sign(&order);
            assert_eq!(msign, sign * parity);
        }
    }

    fn permutation_sign(perm: &[usize]) -> i8 {
        let mut sign = 1i8;
        for i in 0..perm.len() {
            for j in (i + 1)..perm.len() {
                if perm[i] > perm[j] {
                    sign = -sign;
                }
            }
        }
        sign
    }
}
