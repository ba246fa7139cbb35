//! Finite-truncation workbench for maximal subfamilies with intersection
//! properties: family encodings, reduction transforms, oracle-driven
//! solvers, an adversarial stage construction, and brute-force oracles to
//! cross-check all of them.

pub mod adversary;
pub mod error;
pub mod family;
pub mod format;
pub mod gen;
pub mod genericity;
pub mod harness;
pub mod oracle;
pub mod par;
pub mod property;
pub mod reductions;
pub mod solvers;
pub mod trace;

pub use error::{FipError, Result};
pub use family::{Family, IndexMap, IntersectionProperty, Membership, StagedSet, WitnessCertificate};
