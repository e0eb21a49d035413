//! The two mutually inverse translations between wedge words of symplectic
//! polynomials and oriented graph classes: `phi` expands a word into all
//! chord pairings, `psi` reads a word back off a canonical graph.

use num_traits::Zero;

use crate::ce::CEChain;
use crate::chords::{
    beta, enumerate_chords, gamma_graph, gamma_graph_defective, u_coinvariant, ChordError,
    OrientedChordDiagram,
};
use crate::exact::Rational;
use crate::graph::CanonicalGraph;
use crate::graph_complex::GraphChain;
use crate::poisson::{Monomial, SuperDim, TensorWord};

/// Sum over all chord diagrams of the pairing value times the class of the
/// diagram's graph. Factor orders become the vertex valencies.
pub fn phi(chain: &CEChain) -> GraphChain {
    phi_impl(chain, false)
}

/// Same sum built from graphs with the first chord reversed; a negative
/// control that changes every class sign.
pub fn phi_defective(chain: &CEChain) -> GraphChain {
    phi_impl(chain, true)
}

fn phi_impl(chain: &CEChain, flawed: bool) -> GraphChain {
    let mut out = GraphChain::zero();
    for (word, coeff) in chain.terms() {
        let order = word.order();
        if order % 2 != 0 {
            continue;
        }
        let block_sizes: Vec<usize> = word.factors().iter().map(|f| f.order()).collect();
        let mut lift_factors = Vec::with_capacity(order);
        for f in word.factors() {
            lift_factors.extend(f.expanded_factors());
        }
        let lift = TensorWord::new(lift_factors);
        for c in enumerate_chords(order / 2) {
            let hat = c.hat();
            let value = beta(&hat, &lift).expect("lift length is twice the diagram size");
            if value.is_zero() {
                continue;
            }
            let g = if flawed {
                gamma_graph_defective(&block_sizes, &hat)
            } else {
                gamma_graph(&block_sizes, &hat)
            }
            .expect("valencies sum to the ground set size");
            out = out.add(&GraphChain::from_graph(&g).scaled(&(value * coeff)));
        }
    }
    out
}

/// Read the dual wedge word off a canonical graph: half-edge blocks become
/// monomial factors of the coinvariant vector of the edge diagram. Only
/// defined when the edge count is at most n.
pub fn psi(class: &CanonicalGraph, d: SuperDim) -> Result<CEChain, ChordError> {
    let g = class.graph();
    let c = OrientedChordDiagram::new(
        g.edges().iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
    )?;
    let u = u_coinvariant(&c, d)?;
    let mut sign = 1i8;
    let mut factors = Vec::with_capacity(g.vertex_count());
    let mut start = 0usize;
    for block in g.vertices() {
        let (s, mono) = Monomial::from_factors(&u.factors[start..start + block.len()])
            .expect("the factors of a dual vector are pairwise distinct");
        sign *= s;
        factors.push(mono);
        start += block.len();
    }
    Ok(CEChain::from_factors(
        factors,
        u.coeff * Rational::from_integer(sign.into()),
    ))
}

/// `psi` extended linearly to a graph chain.
pub fn psi_chain(chain: &GraphChain, d: SuperDim) -> Result<CEChain, ChordError> {
    let mut out = CEChain::zero();
    for (class, coeff) in chain.terms() {
        out = out.add(&psi(class, d)?.scaled(coeff));
    }
    Ok(out)
}
