//! Sparse recovery with Orthogonal Matching Pursuit under Gaussian noise.
//!
//! * [`dictionary`]: dictionaries, coherence, and the two-ortho, random,
//!   designed and adversarial constructions.
//! * [`signal`]: sparse vectors and noisy observations.
//! * [`solver`]: OMP and threshold-stopped OMP with per-iteration traces.
//! * [`guarantees`]: recovery thresholds, probabilities and the feasibility
//!   conditions of the adversarial construction.
//! * [`experiments`]: Monte Carlo recovery curves and bound validations.

pub mod dictionary;
pub mod error;
pub mod experiments;
pub mod guarantees;
pub mod linalg;
pub mod rng;
pub mod signal;
pub mod solver;

pub use dictionary::{coherence, Dictionary};
pub use error::{Condition, Error, Result};
pub use guarantees::{GuaranteeReport, ProblemParams};
pub use signal::{SignalInstance, SparseVector};
pub use solver::{omp, omp_star, support_recovered, SolveTrace, StopReason};
