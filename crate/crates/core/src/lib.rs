//! Construction, bounding and verification of information-theoretic privacy
//! mechanisms for finite (X, Y) pairs: X is private data, Y is useful data
//! correlated with it, and a mechanism releases U.
//!
//! - [`probcore`]: distributions, mechanisms, entropies and distances.
//! - [`frl`]: functional representations, U ⫫ X with Y = f(U, X).
//! - [`ext_lemmas`]: non-zero-leakage constructions built on top of them.
//! - [`bounds`]: closed-form bounds and tightness conditions.
//! - [`perfect_privacy`]: the exact zero-leakage optimum by linear programming.
//! - [`perletter`]: per-letter ℓ1 criteria and their properties.
//! - [`oracle`]: numerical reference solvers for small instances.
//! - [`privcomp`]: one-time pad plus prefix code for private compression.
//! - [`cli`]: the `privlens` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod ext_lemmas;
pub mod frl;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod perfect_privacy;
pub mod perletter;
pub mod privcomp;
pub mod probcore;
pub mod rng;
#[doc(hidden)]
pub mod testkit;

pub use error::{Error, Result};
pub use probcore::{induce, Alphabet, InducedJoint, JointDistribution, Mechanism, MechanismKind};
