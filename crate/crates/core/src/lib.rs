//! Exact constructions and certified extraction algorithms for
//! monochromatic-or-rainbow colouring problems on cuboids.
//!
//! The crate builds tree-indexed simplices with exact radical coordinates,
//! takes products of them, decomposes a cuboid into one with short sides,
//! and runs the combinatorial extraction algorithms that turn an adversarial
//! colouring into an independently verifiable certificate: a monochromatic
//! distance pair, a monochromatic box, or a rainbow cuboid.
//!
//! Module layout:
//!
//! * [`exact`] — arithmetic over sums of rational multiples of square roots;
//! * [`trees`] — rooted trees, tree addresses, subtree embeddings, products;
//! * [`geometry`] — tree-simplex construction, products of configurations,
//!   cuboid decomposition, exact distance verification;
//! * [`colouring`] — colourings, monochromatic/rainbow predicates,
//!   certificates and their verifiers;
//! * [`extraction`] — threshold calculators and the selection algorithms
//!   that extract certificates from colourings;
//! * [`harness`] — seeded adversarial generators, brute-force oracles, and
//!   the mutation suite.

pub mod colouring;
pub mod exact;
pub mod extraction;
pub mod geometry;
pub mod harness;
pub mod trees;
