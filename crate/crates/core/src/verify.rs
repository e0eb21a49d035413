//! Batched consistency checks with timing and failure counts, shared by the
//! command line driver and the acceptance suite. Each check walks a full
//! basis and reports how many elements violated the identity under test.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ce::{
    ce_differential, ce_differential_defective, coinvariant_quotient,
    relative_differential_matrix, CEChain, RelativeBasis,
};
use crate::chords::{beta, enumerate_chords, u_coinvariant, ChordError};
use crate::exact::{rational, SparseMatrix};
use crate::graph::enumerate_graphs;
use crate::graph_complex::GraphChain;
use crate::maps::{phi, phi_defective, psi_chain};
use crate::poisson::SuperDim;

/// Deliberate sign corruptions for negative controls. `CeParity` perturbs
/// one pair term of the differential; `EdgeDirection` reverses one chord in
/// every graph built by `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignDefect {
    CeParity,
    EdgeDirection,
}

impl std::str::FromStr for SignDefect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ce-parity" => Ok(SignDefect::CeParity),
            "edge-direction" => Ok(SignDefect::EdgeDirection),
            other => Err(format!(
                "unknown sign defect {other:?}; expected ce-parity or edge-direction"
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VerificationReport {
    pub n: u16,
    pub m: u16,
    pub i: usize,
    pub j: usize,
    pub check: String,
    /// Number of basis elements the check walked.
    pub ambient_dim: usize,
    pub failures: usize,
    pub elapsed_ms: u128,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn single(word: &crate::ce::WedgeWord) -> CEChain {
    let mut chain = CEChain::zero();
    chain.add_term(word.clone(), rational(1, 1));
    chain
}

fn phi_with(defect: Option<SignDefect>, chain: &CEChain) -> GraphChain {
    match defect {
        Some(SignDefect::EdgeDirection) => phi_defective(chain),
        _ => phi(chain),
    }
}

fn differential_with(defect: Option<SignDefect>, chain: &CEChain) -> CEChain {
    match defect {
        Some(SignDefect::CeParity) => ce_differential_defective(chain),
        _ => ce_differential(chain),
    }
}

/// phi then the graph boundary equals the differential then phi, on every
/// ambient wedge word of length i and order 2j.
pub fn verify_chain_map(
    d: SuperDim,
    i: usize,
    j: usize,
    defect: Option<SignDefect>,
) -> VerificationReport {
    let start = Instant::now();
    let words = crate::ce::wedge_basis(d, i, 2 * j);
    let failures = words
        .par_iter()
        .filter(|word| {
            let chain = single(word);
            let lhs = phi_with(defect, &differential_with(defect, &chain));
            let rhs = phi_with(defect, &chain).boundary();
            !lhs.sub(&rhs).is_zero()
        })
        .count();
    VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "chain_map".into(),
        ambient_dim: words.len(),
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// psi(phi(w)) = w on a basis of the coinvariant space; requires j <= n.
pub fn verify_left_inverse(
    d: SuperDim,
    i: usize,
    j: usize,
    defect: Option<SignDefect>,
) -> Result<VerificationReport, ChordError> {
    if j > d.n as usize {
        return Err(ChordError::OutsideStableRange { k: j, n: d.n });
    }
    let start = Instant::now();
    let basis = coinvariant_quotient(d, i, 2 * j);
    let words = basis.selected_words();
    let failures = words
        .par_iter()
        .filter(|word| {
            let chain = single(word);
            let image = phi_with(defect, &chain);
            let back = psi_chain(&image, d).expect("classes stay inside the stable range");
            basis.project_chain(&back) != basis.project_chain(&chain)
        })
        .count();
    Ok(VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "left_inverse".into(),
        ambient_dim: words.len(),
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// phi(psi(class)) = class on every graph class; requires j <= n.
pub fn verify_right_inverse(
    d: SuperDim,
    i: usize,
    j: usize,
    defect: Option<SignDefect>,
) -> Result<VerificationReport, ChordError> {
    if j > d.n as usize {
        return Err(ChordError::OutsideStableRange { k: j, n: d.n });
    }
    let start = Instant::now();
    let classes = enumerate_graphs(i, j);
    let failures = classes
        .par_iter()
        .filter(|class| {
            let word = crate::maps::psi(class, d).expect("stable range checked above");
            let image = phi_with(defect, &word);
            let expected = GraphChain::from_graph(class.graph());
            !image.sub(&expected).is_zero()
        })
        .count();
    Ok(VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "right_inverse".into(),
        ambient_dim: classes.len(),
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// The pairing matrix beta_hat(c') applied to u(hat(c)) is the identity over
/// all diagrams of size j; requires j <= n.
pub fn verify_duality(d: SuperDim, j: usize) -> Result<VerificationReport, ChordError> {
    if j > d.n as usize {
        return Err(ChordError::OutsideStableRange { k: j, n: d.n });
    }
    let start = Instant::now();
    let diagrams = enumerate_chords(j);
    let failures: usize = diagrams
        .par_iter()
        .enumerate()
        .map(|(col, a)| {
            let u = u_coinvariant(&a.hat(), d).expect("stable range checked above");
            diagrams
                .iter()
                .enumerate()
                .filter(|(row, b)| {
                    let value = beta(&b.hat(), &u).expect("sizes agree");
                    value != rational((*row == col) as i64, 1)
                })
                .count()
        })
        .sum();
    Ok(VerificationReport {
        n: d.n,
        m: d.m,
        i: 0,
        j,
        check: "duality".into(),
        ambient_dim: diagrams.len(),
        failures,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Memoized coinvariant bases and differential matrices for one
/// superdimension; the expensive quotients are computed once per (length,
/// order) pair.
pub struct RelativeCache {
    d: SuperDim,
    bases: BTreeMap<(usize, usize), RelativeBasis>,
}

impl RelativeCache {
    pub fn new(d: SuperDim) -> RelativeCache {
        RelativeCache {
            d,
            bases: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> SuperDim {
        self.d
    }

    pub fn basis(&mut self, len: usize, order: usize) -> &RelativeBasis {
        self.bases
            .entry((len, order))
            .or_insert_with(|| coinvariant_quotient(self.d, len, order))
    }

    /// Matrix of the differential out of (len, order) into (len-1, order-2)
    /// in the selected coinvariant bases. A single factor has no pairs to
    /// bracket, so length one maps to the zero space.
    pub fn differential(&mut self, len: usize, order: usize) -> SparseMatrix {
        assert!(len >= 1, "no differential out of the empty word");
        if len == 1 || order < 2 {
            let cols = self.basis(len, order).dim();
            return SparseMatrix::new(0, cols);
        }
        self.basis(len, order);
        self.basis(len - 1, order - 2);
        let source = &self.bases[&(len, order)];
        let target = &self.bases[&(len - 1, order - 2)];
        relative_differential_matrix(source, target)
    }

    /// Coinvariant homology dimension at (len, order).
    pub fn betti(&mut self, len: usize, order: usize) -> usize {
        let dim = self.basis(len, order).dim();
        let rank_out = self.differential(len, order).rank();
        let rank_in = self.differential(len + 1, order + 2).rank();
        dim - rank_out - rank_in
    }
}

/// Compare the graph homology dimension at (i, j) with the coinvariant
/// homology dimension at (i, 2j).
pub fn betti_match(cache: &mut RelativeCache, i: usize, j: usize) -> (usize, usize, bool) {
    let graph = crate::graph_complex::graph_betti(i, j).betti;
    let ce = cache.betti(i, 2 * j);
    (graph, ce, graph == ce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_map_report_is_clean() {
        let d = SuperDim::new(2, 1);
        let report = verify_chain_map(d, 2, 3, None);
        assert_eq!(report.failures, 0);
        assert!(report.ambient_dim > 0);
        assert!(report.passed());
    }

    #[test]
    fn ce_parity_defect_trips_the_chain_map() {
        // Two vertices never survive a contraction and one vertex is all
        // loops, so the commuting square only has content once both sides
        // land on nonzero classes: source (3,6) over (2,5) is the smallest.
        let d = SuperDim::new(1, 0);
        let report = verify_chain_map(d, 3, 6, Some(SignDefect::CeParity));
        assert!(report.failures > 0);
    }

    #[test]
    fn edge_direction_defect_spares_the_chain_map_but_trips_inverses() {
        // Reversing one chord in every graph negates phi globally, which a
        // commuting square cannot see; the inverse identities can.
        let d = SuperDim::new(3, 0);
        let chain = verify_chain_map(d, 2, 3, Some(SignDefect::EdgeDirection));
        assert_eq!(chain.failures, 0);
        let left = verify_left_inverse(d, 2, 3, Some(SignDefect::EdgeDirection)).unwrap();
        assert!(left.failures > 0);
        let right = verify_right_inverse(d, 2, 3, Some(SignDefect::EdgeDirection)).unwrap();
        assert!(right.failures > 0);
    }

    #[test]
    fn inverse_reports_are_clean_in_the_stable_range() {
        let d = SuperDim::new(3, 0);
        let left = verify_left_inverse(d, 2, 3, None).unwrap();
        assert_eq!(left.failures, 0);
        assert!(left.ambient_dim > 0);
        let right = verify_right_inverse(d, 2, 3, None).unwrap();
        assert_eq!(right.failures, 0);
        assert_eq!(right.ambient_dim, 1);
    }

    #[test]
    fn stable_range_guard_rejects_large_j() {
        let d = SuperDim::new(2, 0);
        assert!(verify_left_inverse(d, 2, 3, None).is_err());
        assert!(verify_right_inverse(d, 2, 3, None).is_err());
        assert!(verify_duality(d, 3).is_err());
    }

    #[test]
    fn duality_report_is_clean() {
        let d = SuperDim::new(3, 1);
        let report = verify_duality(d, 3).unwrap();
        assert_eq!(report.failures, 0);
        assert_eq!(report.ambient_dim, 15);
    }

    #[test]
    fn cache_reuses_bases_and_computes_betti() {
        let d = SuperDim::new(3, 0);
        let mut cache = RelativeCache::new(d);
        let dim = cache.basis(2, 6).dim();
        assert_eq!(dim, cache.basis(2, 6).dim());
        let (graph, ce, ok) = betti_match(&mut cache, 2, 3);
        assert_eq!(graph, 1);
        assert_eq!(ce, 1);
        assert!(ok);
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = VerificationReport {
            n: 3,
            m: 1,
            i: 2,
            j: 3,
            check: "chain_map".into(),
            ambient_dim: 12,
            failures: 0,
            elapsed_ms: 7,
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
