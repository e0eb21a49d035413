//! Exact computational kernel for commutative graph homology and the
//! Chevalley-Eilenberg homology of Hamiltonian superalgebras, together with
//! the chord diagram maps identifying the two in the stable range.
//!
//! Everything is computed over the rationals with exact arithmetic; no
//! floating point appears anywhere.

pub mod ce;
pub mod chords;
pub mod exact;
pub mod graph;
pub mod graph_complex;
pub mod maps;
pub mod poisson;
pub mod verify;
