//! Difference-vector fingerprints over local atomic environments.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`structures`]: parse extended-XYZ datasets and enumerate periodic neighbors.
//! 2. [`descriptors`]: evaluate atom-centered radial (G2) and angular (G4/G5)
//!    symmetry functions per atom.
//! 3. [`fingerprint`]: histogram every descriptor column into `k` bins, XOR the
//!    bin occupancy against a reference structure, and concatenate the rows into
//!    a fixed-length bit string that does not depend on atom count.
//! 4. [`screening`] and [`embedding`]: deduplicate, score novelty, and project
//!    fingerprints or descriptor vectors to 2-D for inspection.

pub mod bits;
pub mod descriptors;
pub mod embedding;
mod error;
pub mod fingerprint;
pub mod screening;
pub mod structures;
pub mod vectors;

pub use bits::BitString;
pub use error::{Error, Result};
