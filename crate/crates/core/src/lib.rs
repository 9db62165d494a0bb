//! Residual finiteness and LERF decisions for multiple HNN extensions of free
//! groups with cyclic edge groups.
//!
//! The pipeline is: [`presentation::load`] a text presentation into a
//! [`presentation::StandardPresentation`], build and analyze the graph Γ
//! ([`gamma`]), then [`certify::decide`]. Certificates are checked with the
//! Britton word-problem solver in [`britton`]. The [`complexes`] module holds
//! combinatorial 2-complexes and the finite covers of `BS(1,q)` used as an
//! independent word-problem oracle.

pub mod britton;
pub mod certify;
pub mod complexes;
pub mod gamma;
pub mod presentation;
pub mod words;
