//! Multi-message ciphertext-policy attribute-based encryption for layered
//! media.
//!
//! A [`lattice::PolicyLattice`] assigns an attribute conjunction to every
//! layer of a multi-dimensional layer grid. [`tree::build_tree`] turns it
//! into one access tree with a key node per layer, [`abe`] encrypts one
//! group element per layer under that tree, and [`vault`] uses those
//! elements as content keys for the layer payloads.

pub mod abe;
pub mod bench;
pub mod envelope;
pub mod lattice;
pub mod pairing;
pub mod poly;
pub mod tree;
pub mod vault;
