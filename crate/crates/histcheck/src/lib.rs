//! Numerical checks for decoherence of quantum histories built from a fixed
//! projective partition of a small finite-dimensional Hilbert space.
//!
//! The library is organized around dense complex matrices ([`linalg`]),
//! validated projective partitions and density operators ([`partition`]),
//! history enumeration and the decoherence functional ([`histories`]),
//! the exact/approximate decoherence criteria and commutator bounds
//! ([`criteria`]), and ensemble experiments that exercise the implications
//! between those criteria ([`search`]). JSON input/output lives in [`io`].

pub mod criteria;
pub mod histories;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod search;

pub use criteria::{CheckReport, Epsilon, Verdict, Witness};
pub use histories::{DecoherenceGram, History};
pub use linalg::CMatrix;
pub use partition::{DensityOperator, ProjectivePartition};

/// Default absolute tolerance for validation predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Diagonal entries at or below this are treated as null histories.
pub const DEFAULT_P_NULL: f64 = 1e-12;

/// Default cap on the number of histories m^k handled per call.
pub const DEFAULT_BUDGET: usize = 1 << 20;
